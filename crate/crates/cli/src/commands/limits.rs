use super::{level, parse, procedure, DEFAULT_ALPHA};
use crate::config::{Format, Settings};
use crate::error::{CliError, CliResult};
use crate::open_output;
use crate::record::write_json_lines;
use clap::Args;
use mtp_core::asym::{self, RateParams};
use mtp_core::{build_schedule, gauss, Family, ProcedureSpec, Sided};
use serde::Serialize;
use std::io::Write;

pub const DEFAULT_RATE_GRID: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_CRAMER_GRID: [u64; 4] = [1_000, 10_000, 1_000_000, 100_000_000];

#[derive(Debug, Clone, Default, Args)]
pub struct LimitsArgs {
    /// Limiting FWER of the selected procedure(s)
    #[arg(long)]
    pub fwer: bool,
    /// Limiting k-FWER of Lehmann-Romano
    #[arg(long)]
    pub kfwer: bool,
    /// Rate bound R_n over an n grid
    #[arg(long)]
    pub rate: bool,
    /// Two-term quantile expansion vs the exact quantile
    #[arg(long)]
    pub cramer: bool,
    /// Power-condition proxies
    #[arg(long)]
    pub power: bool,

    #[arg(long)]
    pub alpha: Option<f64>,
    /// bonferroni | sidak | lr (default: all)
    #[arg(long)]
    pub procedure: Option<String>,
    #[arg(long)]
    pub sided: Option<String>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// lambda1,delta of the product schedule used for gamma_m
    #[arg(long)]
    pub model_schedule: Option<String>,
    /// Fraction n0/n of true nulls for the rate bound
    #[arg(long)]
    pub n0_frac: Option<f64>,
    /// Comma-separated n values
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<u64>,
    /// Tail mass beta of the expansion (default -ln(1 - alpha))
    #[arg(long)]
    pub beta: Option<f64>,
    /// n for the power growth proxy
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub n1: Option<u64>,
    /// Alternative mean (default 1.2 sqrt(2 log n1))
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub section: String,
    pub quantity: String,
    pub n: Option<u64>,
    pub value: f64,
    pub detail: String,
}

fn row(section: &str, quantity: impl Into<String>, n: Option<u64>, value: f64, detail: impl Into<String>) -> LimitRow {
    LimitRow { section: section.into(), quantity: quantity.into(), n, value, detail: detail.into() }
}

fn schedule(raw: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [l, d] => Ok((parse("model-schedule", l)?, parse("model-schedule", d)?)),
        _ => Err(CliError::validation(format!("--model-schedule expects lambda1,delta; got '{raw}'"))),
    }
}

pub fn compute(a: &LimitsArgs, s: &Settings) -> CliResult<Vec<LimitRow>> {
    let f = &s.file;
    let all = !(a.fwer || a.kfwer || a.rate || a.cramer || a.power);
    let alpha = a.alpha.or(f.alpha).unwrap_or(DEFAULT_ALPHA);
    let lvl = level(alpha)?;
    let mut rows = Vec::new();

    if all || a.fwer {
        let specs: Vec<ProcedureSpec> = match a.procedure.as_deref().or(f.procedure.as_deref()) {
            Some(p) => vec![procedure(s, Some(p), a.sided.as_deref(), a.k, None)?],
            None => Family::ALL
                .iter()
                .map(|&fam| {
                    let k = if fam == Family::LehmannRomano { a.k.or(f.k).unwrap_or(1) } else { 1 };
                    ProcedureSpec::new(fam, Sided::One, k, None)
                })
                .collect::<Result<_, _>>()?,
        };
        for spec in specs {
            rows.push(row("fwer", "limiting_fwer", None, asym::limiting_fwer(&spec, lvl), format!("{spec}, alpha={alpha}")));
        }
    }

    if all || a.kfwer {
        let ks: Vec<u32> = match a.k.or(f.k) {
            Some(k) => vec![k],
            None => vec![1, 2, 3],
        };
        for k in ks {
            let spec = ProcedureSpec::lehmann_romano(k, Sided::One)
                .map_err(|e| CliError::validation(format!("--k: {e}")))?;
            rows.push(row(
                "kfwer",
                format!("limiting_kfwer_k{k}"),
                None,
                asym::limiting_fwer(&spec, lvl),
                format!("lr k={k}, alpha={alpha}"),
            ));
        }
    }

    let grid = |default: &[u64]| if a.n_grid.is_empty() { default.to_vec() } else { a.n_grid.clone() };

    if all || a.rate {
        let (lambda1, delta) = schedule(a.model_schedule.as_deref().or(f.model_schedule.as_deref()).unwrap_or("0.5,0.5"))?;
        let nu = a.nu.or(f.nu).unwrap_or(0.3);
        let n0_frac = a.n0_frac.unwrap_or(1.0);
        let ns = grid(&DEFAULT_RATE_GRID);
        let max_n = ns.iter().copied().max().unwrap_or(2) as f64;
        let lags = (max_n.powf(nu).floor() as usize + 2).max(1000);
        let diag = build_schedule(lambda1, delta, lags)?.diagnose();
        for n in ns {
            let p = RateParams::new(nu, diag.gamma, diag.gamma_tail.clone(), n0_frac, n)?;
            let t = asym::rate_terms(&p)?;
            rows.push(row(
                "rate",
                "R_n",
                Some(n),
                t.max(),
                format!(
                    "terms=[{:.6}, {:.6}, {:.6}, {:.3e}] gamma={:.6} nu_admissible={}",
                    t.power,
                    t.dependence,
                    t.alternatives,
                    t.inverse_n,
                    diag.gamma,
                    p.nu_admissible()
                ),
            ));
        }
    }

    if all || a.cramer {
        let beta = a.beta.or(f.beta).unwrap_or(-(-alpha).ln_1p());
        for n in grid(&DEFAULT_CRAMER_GRID) {
            let approx = asym::cramer_quantile(beta, n)?;
            let exact = gauss::upper_quantile(beta / n as f64)?;
            rows.push(row("cramer", "expansion", Some(n), approx, format!("beta={beta}")));
            rows.push(row("cramer", "exact", Some(n), exact, format!("beta={beta}")));
            rows.push(row("cramer", "gap", Some(n), approx - exact, format!("beta={beta}")));
        }
    }

    if all || a.power {
        let n1 = a.n1.or(f.n1).unwrap_or(2500);
        let n = a.n.or(f.n).unwrap_or(2 * n1);
        let mu = a.mu.or(f.mu).unwrap_or_else(|| 1.2 * (2.0 * (n1 as f64).ln()).sqrt());
        let t41 = asym::power_condition_t41(n1, mu)?;
        rows.push(row(
            "power",
            "sqrt(2 log n1)/mu_max",
            Some(n1),
            t41.value,
            format!("mu={mu}; finite-n proxy (ratio < 1) satisfied={}", t41.satisfied_proxy),
        ));
        let t42 = asym::power_condition_t42(n, n1, mu)?;
        rows.push(row(
            "power",
            "(n1/n) exp(mu sqrt(2 log n))",
            Some(n),
            t42.value,
            format!("n1={n1}, mu={mu}; finite-n proxy (grows from n/2 to n) satisfied={}", t42.satisfied_proxy),
        ));
    }
    Ok(rows)
}

pub fn write<W: Write>(mut out: W, format: Format, rows: &[LimitRow]) -> CliResult<()> {
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
            writeln!(out, "| section | quantity | n | value | detail |")?;
            writeln!(out, "|---|---|---|---|---|")?;
            for r in rows {
                let n = r.n.map(|n| n.to_string()).unwrap_or_default();
                writeln!(out, "| {} | {} | {} | {} | {} |", r.section, r.quantity, n, r.value, r.detail)?;
            }
            Ok(())
        }
    }
}

pub fn run(a: &LimitsArgs, s: &Settings) -> CliResult<()> {
    let rows = compute(a, s)?;
    let mut out = open_output(s)?;
    write(&mut out, s.format, &rows)?;
    out.flush()?;
    Ok(())
}
