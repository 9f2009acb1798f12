use super::{level, parse, require, DEFAULT_ALPHA};
use crate::config::{Format, Settings};
use crate::error::{CliError, CliResult};
use crate::open_output;
use crate::record::write_json_lines;
use clap::Args;
use mtp_core::procedures::cutoff;
use mtp_core::{Family, ProcedureSpec, Sided};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Default, Args)]
pub struct CutoffArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// bonferroni | sidak | lr | all
    #[arg(long)]
    pub procedure: Option<String>,
    /// one | two | both
    #[arg(long)]
    pub sided: Option<String>,
    /// Lehmann-Romano k
    #[arg(long)]
    pub k: Option<u32>,
    /// Known proportion of true nulls
    #[arg(long)]
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffRow {
    pub procedure: String,
    pub sided: String,
    pub k: u32,
    pub p0: Option<f64>,
    pub n: u64,
    pub alpha: f64,
    pub cutoff: f64,
}

pub fn compute(a: &CutoffArgs, s: &Settings) -> CliResult<Vec<CutoffRow>> {
    let f = &s.file;
    let n = require("n", a.n.or(f.n))?;
    let alpha = a.alpha.or(f.alpha).unwrap_or(DEFAULT_ALPHA);
    let lvl = level(alpha)?;
    let families: Vec<Family> = match a.procedure.as_deref().or(f.procedure.as_deref()).unwrap_or("all") {
        "all" => Family::ALL.to_vec(),
        one => vec![parse("procedure", one)?],
    };
    let sides: Vec<Sided> = match a.sided.as_deref().or(f.sided.as_deref()).unwrap_or("both") {
        "both" => vec![Sided::One, Sided::Two],
        one => vec![parse("sided", one)?],
    };
    let k = a.k.or(f.k).unwrap_or(1);
    let p0 = a.p0.or(f.p0);
    let mut rows = Vec::new();
    for &family in &families {
        for &sided in &sides {
            let spec_k = if family == Family::LehmannRomano { k } else { 1 };
            let spec_p0 = if family == Family::LehmannRomano { None } else { p0 };
            let spec = ProcedureSpec::new(family, sided, spec_k, spec_p0)
                .map_err(|e| CliError::validation(format!("procedure: {e}")))?;
            let c = cutoff(&spec, n, lvl)?;
            rows.push(CutoffRow {
                procedure: family.to_string(),
                sided: sided.to_string(),
                k: spec_k,
                p0: spec_p0,
                n,
                alpha,
                cutoff: c.value,
            });
        }
    }
    Ok(rows)
}

pub fn write<W: Write>(mut out: W, format: Format, rows: &[CutoffRow]) -> CliResult<()> {
    match format {
        Format::Json => write_json_lines(out, rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Md => {
            writeln!(out, "| procedure | sided | k | p0 | n | alpha | cutoff |")?;
            writeln!(out, "|---|---|---|---|---|---|---|")?;
            for r in rows {
                let p0 = r.p0.map(|p| p.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    r.procedure, r.sided, r.k, p0, r.n, r.alpha, r.cutoff
                )?;
            }
            Ok(())
        }
    }
}

pub fn run(a: &CutoffArgs, s: &Settings) -> CliResult<()> {
    let rows = compute(a, s)?;
    let mut out = open_output(s)?;
    write(&mut out, s.format, &rows)?;
    out.flush()?;
    Ok(())
}
