use super::model;
use crate::config::{Format, Settings};
use crate::error::CliResult;
use crate::{open_output, ModelArgs};
use clap::Args;
use mtp_core::depmodels::WeakDepDiagnostic;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Default, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Report every lag instead of a 1-2-5 grid
    #[arg(long)]
    pub all_lags: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagRow {
    pub lag: usize,
    pub rho: f64,
    pub gamma_tail: f64,
    pub rho_log: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub model: String,
    pub n: usize,
    pub gamma: f64,
    pub window_start: usize,
    pub window_max: f64,
    pub trend: f64,
    pub weakly_dependent: bool,
    pub clamped: Vec<usize>,
    pub lags: Vec<LagRow>,
}

/// Lags 1, 2, 5, 10, 20, 50, ... below `last`, then `last`.
fn grid(last: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for step in [1, 2, 5] {
            let m = decade.saturating_mul(step);
            if m >= last {
                break 'outer;
            }
            out.push(m);
        }
        decade = decade.saturating_mul(10);
    }
    if last >= 1 {
        out.push(last);
    }
    out
}

pub fn report(model_name: String, n: usize, d: &WeakDepDiagnostic, all_lags: bool) -> Report {
    let last = d.rho_m.len();
    let lags = if all_lags { (1..=last).collect() } else { grid(last) };
    Report {
        model: model_name,
        n,
        gamma: d.gamma,
        window_start: d.window_start,
        window_max: d.window_max,
        trend: d.trend,
        weakly_dependent: d.weakly_dependent,
        clamped: d.clamped.clone(),
        lags: lags
            .into_iter()
            .map(|m| LagRow { lag: m, rho: d.rho(m), gamma_tail: d.gamma_at(m), rho_log: d.rho_log(m) })
            .collect(),
    }
}

pub fn run(a: &DiagnoseArgs, s: &Settings) -> CliResult<()> {
    let m = model(&a.model, s)?;
    let r = report(m.to_string(), m.len(), &m.diagnose(), a.all_lags);
    let mut out = open_output(s)?;
    match s.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &r)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for row in &r.lags {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Md => {
            writeln!(out, "model: {}", r.model)?;
            writeln!(out, "gamma (sup rho_m): {}", r.gamma)?;
            writeln!(
                out,
                "max rho_m log m over lags >= {}: {}; trend {}; weakly dependent (finite-n proxy): {}",
                r.window_start, r.window_max, r.trend, r.weakly_dependent
            )?;
            if !r.clamped.is_empty() {
                writeln!(out, "clamped loadings at indices: {:?}", r.clamped)?;
            }
            writeln!(out, "\n| lag | rho_m | gamma_m | rho_m log m |\n|---|---|---|---|")?;
            for row in &r.lags {
                writeln!(out, "| {} | {} | {} | {} |", row.lag, row.rho, row.gamma_tail, row.rho_log)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::grid;

    #[test]
    fn lag_grid() {
        assert_eq!(grid(1), vec![1]);
        assert_eq!(grid(30), vec![1, 2, 5, 10, 20, 30]);
        assert_eq!(grid(100), vec![1, 2, 5, 10, 20, 50, 100]);
    }
}
