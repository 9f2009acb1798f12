//! Monte-Carlo estimation of FWER, k-FWER and AnyPwr.
//!
//! For single-factor models the conditional estimators draw only the common
//! factor `Z`; given `Z` the statistics are independent, so the probability
//! that no true null is rejected is a product of normal probabilities that
//! is evaluated in closed form (in log space). The brute-force estimators
//! simulate whole vectors and apply the decision rule; they are kept as an
//! independent check on the conditional ones.
//!
//! Replicate `r` reads its own random stream (see [`crate::rng`]) and
//! per-replicate values are reduced in replicate order, so serial and
//! parallel runs return bitwise identical estimates.

use crate::asym;
use crate::depmodels::{DependenceModel, Loadings, ProductFactor};
use crate::error::{Error, Result};
use crate::gauss::{self, raw};
use crate::procedures::{self, Cutoff, Level, ProcedureSpec, Sided};
use crate::rng::replicate_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Mean vector; true nulls are exactly the zero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MeanConfig {
    mu: Vec<f64>,
}

impl MeanConfig {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::domain("means must be non-empty"));
        }
        if let Some(i) = mu.iter().position(|m| !m.is_finite()) {
            return Err(Error::domain(format!("means must be finite; mu[{i}] = {}", mu[i])));
        }
        Ok(MeanConfig { mu })
    }

    pub fn global_null(n: usize) -> Self {
        MeanConfig { mu: vec![0.0; n] }
    }

    /// `n1` alternatives with mean `mu` in the leading positions, the rest null.
    pub fn leading_alternatives(n: usize, n1: usize, mu: f64) -> Result<Self> {
        if n1 > n {
            return Err(Error::domain(format!("n1 = {n1} exceeds n = {n}")));
        }
        if n1 > 0 && mu == 0.0 {
            return Err(Error::domain("alternative mean mu must be non-zero"));
        }
        let mut v = vec![0.0; n];
        v[..n1].fill(mu);
        MeanConfig::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn null_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mu.iter().enumerate().filter(|(_, &m)| m == 0.0).map(|(i, _)| i)
    }

    pub fn alternative_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mu.iter().enumerate().filter(|(_, &m)| m != 0.0).map(|(i, _)| i)
    }

    pub fn n0(&self) -> usize {
        self.null_indices().count()
    }

    pub fn n1(&self) -> usize {
        self.len() - self.n0()
    }
}

impl TryFrom<Vec<f64>> for MeanConfig {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MeanConfig::new(v)
    }
}

impl From<MeanConfig> for Vec<f64> {
    fn from(m: MeanConfig) -> Vec<f64> {
        m.mu
    }
}

impl fmt::Display for MeanConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n0={}, n1={}", self.n0(), self.n1())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Fwer,
    Kfwer,
    #[serde(rename = "power")]
    AnyPwr,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Fwer => "fwer",
            Metric::Kfwer => "kfwer",
            Metric::AnyPwr => "power",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fwer" => Ok(Metric::Fwer),
            "kfwer" | "k-fwer" => Ok(Metric::Kfwer),
            "power" | "anypwr" => Ok(Metric::AnyPwr),
            other => Err(Error::domain(format!("metric must be fwer, kfwer or power; got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Conditional,
    Bruteforce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Replicate count, seed and scheduling for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McRun {
    pub replicates: u64,
    pub seed: u64,
    pub execution: Execution,
}

impl McRun {
    pub fn new(replicates: u64, seed: u64) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        Ok(McRun { replicates, seed, execution: Execution::Parallel })
    }

    pub fn serial(self) -> Self {
        McRun { execution: Execution::Serial, ..self }
    }

    pub fn parallel(self) -> Self {
        McRun { execution: Execution::Parallel, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateMeta {
    pub procedure: ProcedureSpec,
    pub metric: Metric,
    /// Exceedance count threshold (1 for FWER and AnyPwr).
    pub k: u32,
    pub estimator: Estimator,
    pub cutoff: f64,
    pub model: String,
    pub means: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation of the per-replicate values over sqrt(replicates).
    pub std_error: f64,
    pub replicates: u64,
    pub seed: u64,
    pub meta: EstimateMeta,
}

/// Mean and standard error of the mean, accumulated in slice order.
fn summarize(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len() as f64;
    let se = if values.len() > 1 { (m2 / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 };
    (mean, se)
}

fn per_replicate<F>(run: &McRun, f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    match run.execution {
        Execution::Serial => (0..run.replicates).map(f).collect(),
        Execution::Parallel => (0..run.replicates).into_par_iter().map(f).collect(),
    }
}

fn factor_draw(seed: u64, replicate: u64) -> f64 {
    replicate_rng(seed, replicate).sample(StandardNormal)
}

#[derive(Debug, Clone, Copy)]
struct Term {
    mu: f64,
    lambda: f64,
    inv_scale: f64,
}

/// Coordinates entering a conditional product.
#[derive(Debug, Clone)]
enum Terms {
    Repeated { term: Term, count: usize },
    Each(Vec<Term>),
}

impl Terms {
    fn collect(loadings: &Loadings, means: &MeanConfig, indices: impl Iterator<Item = usize>) -> Self {
        let mu = means.values();
        let each: Vec<Term> = indices
            .map(|i| {
                let (lambda, scale) = loadings.get(i);
                Term { mu: mu[i], lambda, inv_scale: 1.0 / scale }
            })
            .collect();
        let uniform = matches!(loadings, Loadings::Uniform { .. });
        match each.first() {
            Some(&first) if uniform && each.iter().all(|t| t.mu == first.mu) => {
                Terms::Repeated { term: first, count: each.len() }
            }
            _ => Terms::Each(each),
        }
    }

    fn for_each(&self, mut f: impl FnMut(&Term)) {
        match self {
            Terms::Repeated { term, count } => (0..*count).for_each(|_| f(term)),
            Terms::Each(v) => v.iter().for_each(f),
        }
    }
}

/// `ln P(coordinate not rejected | Z = z)`.
#[inline]
fn log_accept(t: &Term, z: f64, tau: f64, sided: Sided) -> f64 {
    let centre = t.mu + t.lambda * z;
    match sided {
        Sided::One => raw::log_cdf((tau - centre) * t.inv_scale),
        Sided::Two => raw::log_interval((-tau - centre) * t.inv_scale, (tau - centre) * t.inv_scale),
    }
}

/// `ln P(coordinate rejected | Z = z)`.
#[inline]
fn log_reject(t: &Term, z: f64, tau: f64, sided: Sided) -> f64 {
    let centre = t.mu + t.lambda * z;
    let upper = raw::log_cdf(-(tau - centre) * t.inv_scale);
    match sided {
        Sided::One => upper,
        Sided::Two => log_add(upper, raw::log_cdf((-tau - centre) * t.inv_scale)),
    }
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln prod_i P(accept_i | z)`.
fn log_all_accept(terms: &Terms, z: f64, tau: f64, sided: Sided) -> f64 {
    match terms {
        Terms::Repeated { term, count } => *count as f64 * log_accept(term, z, tau, sided),
        Terms::Each(v) => v.iter().map(|t| log_accept(t, z, tau, sided)).sum(),
    }
}

/// `P(fewer than k rejections | z)` by the truncated Poisson-binomial
/// recursion, carried in log space.
fn prob_fewer_than(terms: &Terms, k: usize, z: f64, tau: f64, sided: Sided, ldp: &mut Vec<f64>) -> f64 {
    ldp.clear();
    ldp.resize(k, f64::NEG_INFINITY);
    ldp[0] = 0.0;
    terms.for_each(|t| {
        let l_acc = log_accept(t, z, tau, sided);
        let l_rej = log_reject(t, z, tau, sided);
        for j in (1..k).rev() {
            ldp[j] = log_add(ldp[j] + l_acc, ldp[j - 1] + l_rej);
        }
        ldp[0] += l_acc;
    });
    ldp.iter().map(|l| l.exp()).sum::<f64>().min(1.0)
}

struct Setup {
    cutoff: Cutoff,
    loadings: Loadings,
}

fn setup(model: &DependenceModel, spec: &ProcedureSpec, alpha: Level, means: &MeanConfig) -> Result<Setup> {
    if model.len() != means.len() {
        return Err(Error::domain(format!(
            "model size {} does not match means length {}",
            model.len(),
            means.len()
        )));
    }
    let loadings = model.loadings()?;
    let cutoff = procedures::cutoff(spec, model.len() as u64, alpha)?;
    Ok(Setup { cutoff, loadings })
}

fn meta(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    means: &MeanConfig,
    metric: Metric,
    k: u32,
    estimator: Estimator,
    cutoff: f64,
) -> EstimateMeta {
    EstimateMeta {
        procedure: *spec,
        metric,
        k,
        estimator,
        cutoff,
        model: model.to_string(),
        means: means.to_string(),
    }
}

/// Estimate from per-replicate "nothing happened" probabilities.
fn complement_estimate(values: &[f64], run: &McRun, meta: EstimateMeta) -> Estimate {
    let (mean, std_error) = summarize(values);
    Estimate {
        value: (1.0 - mean).clamp(0.0, 1.0),
        std_error,
        replicates: run.replicates,
        seed: run.seed,
        meta,
    }
}

/// Conditional FWER: `1 - E_Z[prod_{i in I0} P(accept_i | Z)]`.
pub fn fwer_conditional(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    alpha: Level,
    means: &MeanConfig,
    run: &McRun,
) -> Result<Estimate> {
    let s = setup(model, spec, alpha, means)?;
    let terms = Terms::collect(&s.loadings, means, means.null_indices());
    let (tau, sided) = (s.cutoff.value, spec.sided());
    let values = per_replicate(run, |r| {
        let z = factor_draw(run.seed, r);
        log_all_accept(&terms, z, tau, sided).exp()
    });
    let m = meta(model, spec, means, Metric::Fwer, 1, Estimator::Conditional, tau);
    Ok(complement_estimate(&values, run, m))
}

/// Conditional k-FWER: probability of at least `k` true-null rejections.
pub fn kfwer_conditional(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    k: u32,
    alpha: Level,
    means: &MeanConfig,
    run: &McRun,
) -> Result<Estimate> {
    let n0 = means.n0();
    if k == 0 || k as usize > n0 {
        return Err(Error::domain(format!("k must lie in [1, n0 = {n0}], got {k}")));
    }
    if k == 1 {
        let mut e = fwer_conditional(model, spec, alpha, means, run)?;
        e.meta.metric = Metric::Kfwer;
        return Ok(e);
    }
    let s = setup(model, spec, alpha, means)?;
    let terms = Terms::collect(&s.loadings, means, means.null_indices());
    let (tau, sided) = (s.cutoff.value, spec.sided());
    let run_one = |r: u64, ldp: &mut Vec<f64>| {
        let z = factor_draw(run.seed, r);
        prob_fewer_than(&terms, k as usize, z, tau, sided, ldp)
    };
    let values: Vec<f64> = match run.execution {
        Execution::Serial => {
            let mut ldp = Vec::new();
            (0..run.replicates).map(|r| run_one(r, &mut ldp)).collect()
        }
        Execution::Parallel => (0..run.replicates)
            .into_par_iter()
            .map_init(Vec::new, |ldp, r| run_one(r, ldp))
            .collect(),
    };
    let m = meta(model, spec, means, Metric::Kfwer, k, Estimator::Conditional, tau);
    Ok(complement_estimate(&values, run, m))
}

/// Conditional AnyPwr: `1 - E_Z[prod_{i in I1} P(accept_i | Z)]`.
pub fn power_conditional(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    alpha: Level,
    means: &MeanConfig,
    run: &McRun,
) -> Result<Estimate> {
    if means.n1() == 0 {
        return Err(Error::domain("power needs at least one alternative (n1 = 0)"));
    }
    let s = setup(model, spec, alpha, means)?;
    let terms = Terms::collect(&s.loadings, means, means.alternative_indices());
    let (tau, sided) = (s.cutoff.value, spec.sided());
    let values = per_replicate(run, |r| {
        let z = factor_draw(run.seed, r);
        log_all_accept(&terms, z, tau, sided).exp()
    });
    let m = meta(model, spec, means, Metric::AnyPwr, 1, Estimator::Conditional, tau);
    Ok(complement_estimate(&values, run, m))
}

/// Full-vector simulation of any metric for any model.
///
/// FWER and k-FWER count rejections among true nulls (`k = 1` for FWER),
/// AnyPwr among alternatives.
pub fn estimate_bruteforce(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    metric: Metric,
    k: u32,
    alpha: Level,
    means: &MeanConfig,
    run: &McRun,
) -> Result<Estimate> {
    if model.len() != means.len() {
        return Err(Error::domain(format!(
            "model size {} does not match means length {}",
            model.len(),
            means.len()
        )));
    }
    let k = match metric {
        Metric::Kfwer => k,
        _ => 1,
    };
    let counted: Vec<bool> = match metric {
        Metric::AnyPwr => means.values().iter().map(|&m| m != 0.0).collect(),
        _ => means.values().iter().map(|&m| m == 0.0).collect(),
    };
    let pool = counted.iter().filter(|&&c| c).count();
    if metric == Metric::AnyPwr && pool == 0 {
        return Err(Error::domain("power needs at least one alternative (n1 = 0)"));
    }
    if k == 0 || k as usize > pool.max(1) {
        return Err(Error::domain(format!("k must lie in [1, n0 = {pool}], got {k}")));
    }
    let cutoff = procedures::cutoff(spec, model.len() as u64, alpha)?;
    // Surface factorization/size errors before the replicate loop.
    model.sample(means, &mut replicate_rng(run.seed, 0))?;

    let indicator = |r: u64, buf: &mut Vec<f64>| {
        let mut rng = replicate_rng(run.seed, r);
        buf.resize(model.len(), 0.0);
        model.sample_into(means, &mut rng, buf).expect("validated above");
        let rejected = procedures::apply_cutoff(&cutoff, buf);
        let hits = rejected.indices.iter().filter(|&&i| counted[i]).count();
        f64::from(u8::from(hits >= k as usize))
    };
    let values: Vec<f64> = match run.execution {
        Execution::Serial => {
            let mut buf = Vec::new();
            (0..run.replicates).map(|r| indicator(r, &mut buf)).collect()
        }
        Execution::Parallel => (0..run.replicates)
            .into_par_iter()
            .map_init(Vec::new, |buf, r| indicator(r, buf))
            .collect(),
    };
    let (value, std_error) = summarize(&values);
    Ok(Estimate {
        value,
        std_error,
        replicates: run.replicates,
        seed: run.seed,
        meta: meta(model, spec, means, metric, k, Estimator::Bruteforce, cutoff.value),
    })
}

pub fn fwer_bruteforce(
    model: &DependenceModel,
    spec: &ProcedureSpec,
    alpha: Level,
    means: &MeanConfig,
    run: &McRun,
) -> Result<Estimate> {
    estimate_bruteforce(model, spec, Metric::Fwer, 1, alpha, means, run)
}

/// `|a - b| <= 3 sqrt(se_a^2 + se_b^2)`.
pub fn agree_within_3se(a: &Estimate, b: &Estimate) -> bool {
    (a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error)
}

/// Empirical vs limiting probability that the k-th largest statistic stays
/// at or below the level `u_n` solving `d_n (1 - Phi(u_n)) = tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KthMaxCheck {
    pub empirical: f64,
    pub std_error: f64,
    pub limit: f64,
    pub threshold: f64,
    pub k: u32,
    pub tau: f64,
    pub d_n: usize,
    pub absolute: bool,
}

/// Full-sampling check of the Poisson limit for the k-th largest of the
/// first `d_n` coordinates (or of their absolute values when `absolute`).
pub fn verify_kth_max_limit(
    model: &ProductFactor,
    d_n: usize,
    tau: f64,
    k: u32,
    absolute: bool,
    run: &McRun,
) -> Result<KthMaxCheck> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    if d_n == 0 || tau / d_n as f64 >= 1.0 {
        return Err(Error::domain(format!("tau / d_n must lie in (0, 1); tau = {tau}, d_n = {d_n}")));
    }
    if k == 0 || k as usize > d_n {
        return Err(Error::domain(format!("k must lie in [1, d_n = {d_n}], got {k}")));
    }
    let sub = DependenceModel::ProductFactor(model.truncated(d_n)?);
    let threshold = gauss::upper_quantile(tau / d_n as f64)?;
    let null = MeanConfig::global_null(d_n);
    let indicator = |r: u64, buf: &mut Vec<f64>| {
        let mut rng = replicate_rng(run.seed, r);
        buf.resize(d_n, 0.0);
        sub.sample_into(&null, &mut rng, buf).expect("sizes match");
        let above = if absolute {
            buf.iter().filter(|x| x.abs() > threshold).count()
        } else {
            buf.iter().filter(|&&x| x > threshold).count()
        };
        f64::from(u8::from(above < k as usize))
    };
    let values: Vec<f64> = match run.execution {
        Execution::Serial => {
            let mut buf = Vec::new();
            (0..run.replicates).map(|r| indicator(r, &mut buf)).collect()
        }
        Execution::Parallel => (0..run.replicates)
            .into_par_iter()
            .map_init(Vec::new, |buf, r| indicator(r, buf))
            .collect(),
    };
    let (empirical, std_error) = summarize(&values);
    Ok(KthMaxCheck {
        empirical,
        std_error,
        limit: asym::kth_max_limit(k, tau, absolute),
        threshold,
        k,
        tau,
        d_n,
        absolute,
    })
}
