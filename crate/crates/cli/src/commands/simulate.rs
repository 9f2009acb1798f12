use super::{level, model, parse, procedure, require, to_usize, DEFAULT_ALPHA};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::record::{write_records, Record};
use crate::{open_output, ModelArgs};
use clap::Args;
use mtp_core::mc::{self, Execution, McRun};
use mtp_core::rng::derive_seed;
use mtp_core::{DependenceModel, Estimate, Level, MeanConfig, Metric, ProcedureSpec};
use std::io::Write;

pub const DEFAULT_CROSS_REPS: u64 = 1_000_000;

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// bonferroni | sidak | lr
    #[arg(long)]
    pub procedure: Option<String>,
    /// one | two
    #[arg(long)]
    pub sided: Option<String>,
    /// Lehmann-Romano k and k-FWER threshold
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub p0: Option<f64>,
    /// fwer | kfwer | power
    #[arg(long)]
    pub metric: Option<String>,
    /// conditional | bruteforce
    #[arg(long)]
    pub estimator: Option<String>,
    /// Replicates (defaults to the profile's count)
    #[arg(long)]
    pub reps: Option<u64>,
    /// JSON array of means, one per hypothesis
    #[arg(long)]
    pub means_file: Option<std::path::PathBuf>,
    /// Number of alternatives, placed at the first n1 indices
    #[arg(long)]
    pub n1: Option<u64>,
    /// Common mean of the alternatives
    #[arg(long)]
    pub mu: Option<f64>,
    /// Also run the brute-force estimator and report agreement
    #[arg(long)]
    pub cross_check: bool,
    /// Replicates for the brute-force cross-check
    #[arg(long)]
    pub cross_reps: Option<u64>,
    /// Run replicates on a single thread
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Conditional,
    Bruteforce,
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "conditional" => Ok(EstimatorKind::Conditional),
            "bruteforce" | "brute-force" => Ok(EstimatorKind::Bruteforce),
            other => Err(format!("must be conditional or bruteforce; got '{other}'")),
        }
    }
}

/// Everything needed to produce one estimate.
#[derive(Debug, Clone)]
pub struct Job {
    pub model: DependenceModel,
    pub spec: ProcedureSpec,
    pub metric: Metric,
    pub k: u32,
    pub alpha: Level,
    pub means: MeanConfig,
}

impl Job {
    pub fn estimate(&self, estimator: EstimatorKind, run: &McRun) -> CliResult<Estimate> {
        let (m, spec, a, mu) = (&self.model, &self.spec, self.alpha, &self.means);
        let e = match (estimator, self.metric) {
            (EstimatorKind::Conditional, Metric::Fwer) => mc::fwer_conditional(m, spec, a, mu, run),
            (EstimatorKind::Conditional, Metric::Kfwer) => mc::kfwer_conditional(m, spec, self.k, a, mu, run),
            (EstimatorKind::Conditional, Metric::AnyPwr) => mc::power_conditional(m, spec, a, mu, run),
            (EstimatorKind::Bruteforce, metric) => mc::estimate_bruteforce(m, spec, metric, self.k, a, mu, run),
        };
        Ok(e?)
    }
}

fn means(a: &SimulateArgs, s: &Settings, n: usize) -> CliResult<MeanConfig> {
    let f = &s.file;
    if let Some(path) = a.means_file.as_ref().or(f.means_file.as_ref()) {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading means {}", path.display()), e))?;
        let m: MeanConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("--means-file {}: {e}", path.display())))?;
        return Ok(m);
    }
    match a.n1.or(f.n1) {
        None | Some(0) => Ok(MeanConfig::global_null(n)),
        Some(n1) => {
            let mu = require("mu", a.mu.or(f.mu))?;
            MeanConfig::leading_alternatives(n, to_usize("n1", n1)?, mu)
                .map_err(|e| CliError::validation(format!("--n1/--mu: {e}")))
        }
    }
}

pub fn job(a: &SimulateArgs, s: &Settings) -> CliResult<Job> {
    let f = &s.file;
    let model = model(&a.model, s)?;
    let spec = procedure(s, a.procedure.as_deref(), a.sided.as_deref(), a.k, a.p0)?;
    let metric: Metric = parse("metric", a.metric.as_deref().or(f.metric.as_deref()).unwrap_or("fwer"))?;
    let k = match metric {
        Metric::Kfwer => a.k.or(f.k).unwrap_or(1),
        _ => 1,
    };
    let alpha = level(a.alpha.or(f.alpha).unwrap_or(DEFAULT_ALPHA))?;
    let means = means(a, s, model.len())?;
    Ok(Job { model, spec, metric, k, alpha, means })
}

pub fn run(a: &SimulateArgs, s: &Settings) -> CliResult<()> {
    let f = &s.file;
    let job = job(a, s)?;
    let estimator: EstimatorKind =
        parse("estimator", a.estimator.as_deref().or(f.estimator.as_deref()).unwrap_or("conditional"))?;
    let mut mc_run = McRun::new(s.replicates(a.reps)?, s.seed)?;
    if a.serial {
        mc_run.execution = Execution::Serial;
    }
    let primary = job.estimate(estimator, &mc_run)?;
    let mut records = vec![Record::from_estimate(&primary, &job.model, job.alpha.value())];

    if a.cross_check {
        let other = match estimator {
            EstimatorKind::Conditional => EstimatorKind::Bruteforce,
            EstimatorKind::Bruteforce => EstimatorKind::Conditional,
        };
        let reps = match other {
            EstimatorKind::Bruteforce => a.cross_reps.or(f.cross_reps).unwrap_or(DEFAULT_CROSS_REPS),
            EstimatorKind::Conditional => mc_run.replicates,
        };
        let cross_run = McRun { replicates: reps, seed: derive_seed(s.seed, &[1]), ..mc_run };
        let check = job.estimate(other, &cross_run)?;
        let diff = (primary.value - check.value).abs();
        let bound = 3.0 * primary.std_error.hypot(check.std_error);
        eprintln!(
            "cross-check: {:?}={} {:?}={} |diff|={diff:.3e} bound={bound:.3e} {}",
            estimator,
            primary.value,
            other,
            check.value,
            if mc::agree_within_3se(&primary, &check) { "agree" } else { "DISAGREE" }
        );
        records.push(Record::from_estimate(&check, &job.model, job.alpha.value()));
    }

    let mut out = open_output(s)?;
    write_records(&mut out, s.format, &records)?;
    out.flush()?;
    Ok(())
}
