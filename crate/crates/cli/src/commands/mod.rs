pub mod cutoff;
pub mod diagnose;
pub mod limits;
pub mod simulate;

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::ModelArgs;
use mtp_core::depmodels::ModelDescription;
use mtp_core::{build_schedule, DependenceModel, Family, Level, ProcedureSpec, Sided};
use std::str::FromStr;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_LAMBDA1: f64 = 0.5;
pub const DEFAULT_DELTA: f64 = 0.5;

pub(crate) fn parse<T>(name: &str, raw: &str) -> CliResult<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| CliError::validation(format!("--{name}: {e}")))
}

pub(crate) fn level(alpha: f64) -> CliResult<Level> {
    Level::new(alpha).map_err(|e| CliError::validation(format!("--alpha: {e}")))
}

pub(crate) fn require<T>(name: &str, v: Option<T>) -> CliResult<T> {
    v.ok_or_else(|| CliError::validation(format!("--{name} is required")))
}

pub(crate) fn to_usize(name: &str, v: u64) -> CliResult<usize> {
    usize::try_from(v).map_err(|_| CliError::validation(format!("--{name} is too large: {v}")))
}

/// Procedure from `--procedure/--sided/--k/--p0` with config fallbacks.
pub(crate) fn procedure(
    s: &Settings,
    procedure: Option<&str>,
    sided: Option<&str>,
    k: Option<u32>,
    p0: Option<f64>,
) -> CliResult<ProcedureSpec> {
    let family: Family = parse("procedure", procedure.or(s.file.procedure.as_deref()).unwrap_or("bonferroni"))?;
    let sided: Sided = parse("sided", sided.or(s.file.sided.as_deref()).unwrap_or("one"))?;
    let k = k.or(s.file.k).unwrap_or(1);
    let spec_k = if family == Family::LehmannRomano { k } else { 1 };
    let p0 = p0.or(s.file.p0);
    ProcedureSpec::new(family, sided, spec_k, p0).map_err(|e| CliError::validation(format!("procedure: {e}")))
}

pub(crate) fn model(a: &ModelArgs, s: &Settings) -> CliResult<DependenceModel> {
    let f = &s.file;
    if let Some(path) = a.model_file.as_ref().or(f.model_file.as_ref()) {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading model {}", path.display()), e))?;
        let desc: ModelDescription = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("--model-file {}: {e}", path.display())))?;
        return Ok(DependenceModel::try_from(desc)?);
    }
    let n = to_usize("n", require("n", a.n.or(f.n))?)?;
    let kind = a.model.as_deref().or(f.model.as_deref()).unwrap_or("product");
    let built = match kind.to_ascii_lowercase().as_str() {
        "product" | "schedule" => build_schedule(
            a.lambda1.or(f.lambda1).unwrap_or(DEFAULT_LAMBDA1),
            a.delta.or(f.delta).unwrap_or(DEFAULT_DELTA),
            n,
        ),
        "independent" => DependenceModel::independent(n),
        "equicorrelated" => DependenceModel::equicorrelated(require("rho", a.rho.or(f.rho))?, n),
        other => {
            return Err(CliError::validation(format!(
                "--model must be product, independent or equicorrelated (or use --model-file); got '{other}'"
            )))
        }
    };
    Ok(built?)
}
