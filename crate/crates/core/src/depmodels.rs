//! Correlation models for the test statistics.
//!
//! Every model except `Explicit` has a single-factor representation
//! `X_i = mu_i + lambda_i Z + s_i eps_i` with `s_i = sqrt(1 - lambda_i^2)`,
//! which is what the conditional estimators in [`crate::mc`] exploit.

use crate::error::{Error, Result};
use crate::mc::MeanConfig;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Scheduled loadings at or above this value are clamped to it.
pub const LAMBDA_CLAMP: f64 = 0.99;

/// Default cap on the size of an explicit correlation matrix.
pub const DEFAULT_EXPLICIT_LIMIT: usize = 2000;

/// First lag included in the finite-n weak-dependence summary.
pub const DIAGNOSTIC_FIRST_LAG: usize = 100;

/// `lambda_1 = lambda1`, `lambda_i = 1 / (ln i)^(1 + delta)` for `i >= 2`,
/// clamped to [`LAMBDA_CLAMP`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub lambda1: f64,
    pub delta: f64,
    pub n: usize,
}

impl LambdaSchedule {
    pub fn new(lambda1: f64, delta: f64, n: usize) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda1 < 1.0) {
            return Err(Error::domain(format!("lambda1 must lie in (0, 1), got {lambda1}")));
        }
        if !(delta > 0.0) {
            return Err(Error::domain(format!("delta must be positive, got {delta}")));
        }
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(LambdaSchedule { lambda1, delta, n })
    }

    /// Unclamped schedule value for 1-based index `i`.
    fn raw(&self, i: usize) -> f64 {
        if i == 1 {
            self.lambda1
        } else {
            (i as f64).ln().powf(-(1.0 + self.delta))
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.raw(i).min(LAMBDA_CLAMP)).collect()
    }

    /// 1-based indices whose schedule value was clamped.
    pub fn clamped_indices(&self) -> Vec<usize> {
        (2..=self.n).take_while(|&i| self.raw(i) >= LAMBDA_CLAMP).collect()
    }
}

/// Single-factor correlation `rho_ij = lambda_i lambda_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFactor {
    lambdas: Vec<f64>,
    schedule: Option<LambdaSchedule>,
}

impl ProductFactor {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::domain("lambdas must be non-empty"));
        }
        if let Some((i, l)) = lambdas.iter().enumerate().find(|(_, l)| !(l.abs() < 1.0)) {
            return Err(Error::domain(format!(
                "every lambda must lie in (-1, 1); lambda[{i}] = {l}"
            )));
        }
        Ok(ProductFactor { lambdas, schedule: None })
    }

    pub fn from_schedule(schedule: LambdaSchedule) -> Self {
        ProductFactor { lambdas: schedule.lambdas(), schedule: Some(schedule) }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn schedule(&self) -> Option<&LambdaSchedule> {
        self.schedule.as_ref()
    }

    /// Leading `len` coordinates as a model of their own.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.lambdas.len() {
            return Err(Error::domain(format!(
                "cannot take {len} coordinates of a model of size {}",
                self.lambdas.len()
            )));
        }
        let schedule = self.schedule.map(|s| LambdaSchedule { n: len, ..s });
        Ok(ProductFactor { lambdas: self.lambdas[..len].to_vec(), schedule })
    }
}

/// Explicit correlation matrix with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitCorrelation {
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ExplicitCorrelation {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_size_limit(rows, DEFAULT_EXPLICIT_LIMIT)
    }

    pub fn with_size_limit(rows: Vec<Vec<f64>>, limit: usize) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::domain("correlation matrix must be non-empty"));
        }
        if n > limit {
            return Err(Error::domain(format!(
                "explicit correlation matrix of size {n} exceeds the limit {limit}"
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::domain(format!("matrix row {i} has length {} != {n}", rows[i].len())));
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        for i in 0..n {
            if matrix[(i, i)] != 1.0 {
                return Err(Error::domain(format!(
                    "matrix diagonal must be 1; entry ({i}, {i}) is {}",
                    matrix[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "matrix must be symmetric and finite; ({i}, {j}) = {a}, ({j}, {i}) = {b}"
                    )));
                }
            }
        }
        let chol = matrix.clone().cholesky().ok_or_else(|| {
            Error::Factorization("correlation matrix is not positive definite".into())
        })?;
        Ok(ExplicitCorrelation { factor: chol.l(), matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDescription", into = "ModelDescription")]
pub enum DependenceModel {
    Independent { n: usize },
    Equicorrelated { rho: f64, n: usize },
    ProductFactor(ProductFactor),
    Explicit(ExplicitCorrelation),
}

/// Loadings `(lambda_i, s_i)` of the single-factor form.
#[derive(Debug, Clone, PartialEq)]
pub enum Loadings {
    /// Every coordinate shares the same loading.
    Uniform { lambda: f64, scale: f64, n: usize },
    PerIndex(Vec<(f64, f64)>),
}

impl Loadings {
    pub fn get(&self, i: usize) -> (f64, f64) {
        match self {
            Loadings::Uniform { lambda, scale, .. } => (*lambda, *scale),
            Loadings::PerIndex(v) => v[i],
        }
    }
}

impl DependenceModel {
    pub fn independent(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(DependenceModel::Independent { n })
    }

    pub fn equicorrelated(rho: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain(format!("rho must lie in [0, 1), got {rho}")));
        }
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(DependenceModel::Equicorrelated { rho, n })
    }

    pub fn product(lambdas: Vec<f64>) -> Result<Self> {
        Ok(DependenceModel::ProductFactor(ProductFactor::new(lambdas)?))
    }

    pub fn explicit(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(DependenceModel::Explicit(ExplicitCorrelation::new(rows)?))
    }

    pub fn len(&self) -> usize {
        match self {
            DependenceModel::Independent { n } | DependenceModel::Equicorrelated { n, .. } => *n,
            DependenceModel::ProductFactor(p) => p.lambdas.len(),
            DependenceModel::Explicit(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DependenceModel::Independent { .. } => "independent",
            DependenceModel::Equicorrelated { .. } => "equicorrelated",
            DependenceModel::ProductFactor(p) if p.schedule.is_some() => "product",
            DependenceModel::ProductFactor(_) => "factor",
            DependenceModel::Explicit(_) => "explicit",
        }
    }

    pub fn schedule(&self) -> Option<&LambdaSchedule> {
        match self {
            DependenceModel::ProductFactor(p) => p.schedule(),
            _ => None,
        }
    }

    /// Correlation between coordinates `i` and `j` (0-based).
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match self {
            DependenceModel::Independent { .. } => 0.0,
            DependenceModel::Equicorrelated { rho, .. } => *rho,
            DependenceModel::ProductFactor(p) => p.lambdas[i] * p.lambdas[j],
            DependenceModel::Explicit(e) => e.matrix[(i, j)],
        }
    }

    /// Materialized correlation matrix (small `n` only).
    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.correlation(i, j)).collect()).collect()
    }

    /// Single-factor loadings, if the model has that form.
    pub fn loadings(&self) -> Result<Loadings> {
        match self {
            DependenceModel::Independent { n } => {
                Ok(Loadings::Uniform { lambda: 0.0, scale: 1.0, n: *n })
            }
            DependenceModel::Equicorrelated { rho, n } => Ok(Loadings::Uniform {
                lambda: rho.sqrt(),
                scale: (1.0 - rho).sqrt(),
                n: *n,
            }),
            DependenceModel::ProductFactor(p) => {
                if let Some(i) = p.lambdas.iter().position(|l| l.abs() >= 1.0) {
                    return Err(Error::DegenerateModel(format!("lambda[{i}] = {}", p.lambdas[i])));
                }
                Ok(Loadings::PerIndex(
                    p.lambdas.iter().map(|&l| (l, (1.0 - l * l).sqrt())).collect(),
                ))
            }
            DependenceModel::Explicit(_) => Err(Error::UnsupportedModel(
                "explicit correlation matrices have no single-factor form".into(),
            )),
        }
    }

    /// One draw of `X ~ N(means, Sigma)` into `out`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        means: &MeanConfig,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.len();
        if means.len() != n || out.len() != n {
            return Err(Error::domain(format!(
                "model size {n} does not match means length {} / buffer {}",
                means.len(),
                out.len()
            )));
        }
        let mu = means.values();
        match self {
            DependenceModel::Explicit(e) => {
                for slot in out.iter_mut() {
                    *slot = rng.sample(StandardNormal);
                }
                let eps = nalgebra::DVector::from_column_slice(out);
                let x = &e.factor * eps;
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = mu[i] + x[i];
                }
            }
            _ => {
                let loadings = self.loadings()?;
                let z: f64 = rng.sample(StandardNormal);
                for (i, slot) in out.iter_mut().enumerate() {
                    let (lambda, scale) = loadings.get(i);
                    let eps: f64 = rng.sample(StandardNormal);
                    *slot = mu[i] + lambda * z + scale * eps;
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, means: &MeanConfig, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.sample_into(means, rng, &mut out)?;
        Ok(out)
    }

    pub fn diagnose(&self) -> WeakDepDiagnostic {
        let n = self.len();
        let lags = n.saturating_sub(1);
        let rho_m: Vec<f64> = match self {
            DependenceModel::Independent { .. } => vec![0.0; lags],
            DependenceModel::Equicorrelated { rho, .. } => vec![*rho; lags],
            DependenceModel::ProductFactor(p) => product_lag_sups(&p.lambdas),
            DependenceModel::Explicit(e) => (1..n)
                .map(|m| (0..n - m).map(|i| e.matrix[(i, i + m)].abs()).fold(0.0, f64::max))
                .collect(),
        };
        let clamped = self.schedule().map(|s| s.clamped_indices()).unwrap_or_default();
        WeakDepDiagnostic::from_lag_sups(rho_m, clamped)
    }
}

/// `rho_m = max_i |lambda_i lambda_{i+m}|` for all lags `m = 1..n-1`.
///
/// Once `|lambda|` is nonincreasing from some index `i0` on, every product
/// with `i >= i0` is dominated by the one at `i0`, so only `i <= i0` needs
/// scanning. Exact for any input; O(n * i0).
fn product_lag_sups(lambdas: &[f64]) -> Vec<f64> {
    let a: Vec<f64> = lambdas.iter().map(|l| l.abs()).collect();
    let n = a.len();
    let mut i0 = n.saturating_sub(1);
    while i0 > 0 && a[i0 - 1] >= a[i0] {
        i0 -= 1;
    }
    (1..n)
        .map(|m| {
            let last = i0.min(n - 1 - m);
            (0..=last).map(|i| a[i] * a[i + m]).fold(0.0, f64::max)
        })
        .collect()
}

/// Lag-correlation summary for the weak-dependence condition
/// `rho_m = o(1 / log m)`.
///
/// Vectors are indexed by lag: element `m - 1` belongs to lag `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakDepDiagnostic {
    pub rho_m: Vec<f64>,
    /// `sup_m rho_m`
    pub gamma: f64,
    /// Tail sups `gamma_m = sup_{j >= m} rho_j`.
    pub gamma_tail: Vec<f64>,
    pub rho_log_m: Vec<f64>,
    /// First lag of the finite-n summary window.
    pub window_start: usize,
    /// `max rho_m log m` over lags in `[window_start, n-1]`.
    pub window_max: f64,
    /// `rho_m log m` at the last lag minus its value at `window_start`.
    pub trend: f64,
    /// Finite-n proxy: `rho_m log m` does not grow across the window.
    pub weakly_dependent: bool,
    /// 1-based indices whose loading was clamped by the schedule.
    pub clamped: Vec<usize>,
}

impl WeakDepDiagnostic {
    fn from_lag_sups(rho_m: Vec<f64>, clamped: Vec<usize>) -> Self {
        let gamma = rho_m.iter().copied().fold(0.0, f64::max);
        let mut gamma_tail = rho_m.clone();
        for m in (0..gamma_tail.len().saturating_sub(1)).rev() {
            gamma_tail[m] = gamma_tail[m].max(gamma_tail[m + 1]);
        }
        let rho_log_m: Vec<f64> =
            rho_m.iter().enumerate().map(|(i, r)| r * ((i + 1) as f64).ln()).collect();
        let lags = rho_m.len();
        let window_start = DIAGNOSTIC_FIRST_LAG.min(lags.max(1));
        let (window_max, trend) = if lags == 0 {
            (0.0, 0.0)
        } else {
            let window = &rho_log_m[window_start - 1..];
            (
                window.iter().copied().fold(0.0, f64::max),
                window[window.len() - 1] - window[0],
            )
        };
        WeakDepDiagnostic {
            rho_m,
            gamma,
            gamma_tail,
            rho_log_m,
            window_start,
            window_max,
            trend,
            weakly_dependent: trend <= 0.0,
            clamped,
        }
    }

    /// `rho_m` at lag `m` (1-based).
    pub fn rho(&self, m: usize) -> f64 {
        self.rho_m[m - 1]
    }

    pub fn rho_log(&self, m: usize) -> f64 {
        self.rho_log_m[m - 1]
    }

    /// `gamma_m` at lag `m` (1-based).
    pub fn gamma_at(&self, m: usize) -> f64 {
        self.gamma_tail[m - 1]
    }
}

/// JSON shape of a model description. Converting it into a
/// [`DependenceModel`] runs the model's validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDescription {
    Independent { n: usize },
    Equicorrelated { rho: f64, n: usize },
    Product { lambda1: f64, delta: f64, n: usize },
    Factor { lambdas: Vec<f64> },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl TryFrom<ModelDescription> for DependenceModel {
    type Error = Error;
    fn try_from(d: ModelDescription) -> Result<Self> {
        match d {
            ModelDescription::Independent { n } => DependenceModel::independent(n),
            ModelDescription::Equicorrelated { rho, n } => DependenceModel::equicorrelated(rho, n),
            ModelDescription::Product { lambda1, delta, n } => Ok(DependenceModel::ProductFactor(
                ProductFactor::from_schedule(LambdaSchedule::new(lambda1, delta, n)?),
            )),
            ModelDescription::Factor { lambdas } => DependenceModel::product(lambdas),
            ModelDescription::Explicit { matrix } => DependenceModel::explicit(matrix),
        }
    }
}

impl From<DependenceModel> for ModelDescription {
    fn from(m: DependenceModel) -> Self {
        match m {
            DependenceModel::Independent { n } => ModelDescription::Independent { n },
            DependenceModel::Equicorrelated { rho, n } => ModelDescription::Equicorrelated { rho, n },
            DependenceModel::ProductFactor(p) => match p.schedule {
                Some(s) => ModelDescription::Product { lambda1: s.lambda1, delta: s.delta, n: s.n },
                None => ModelDescription::Factor { lambdas: p.lambdas },
            },
            DependenceModel::Explicit(e) => ModelDescription::Explicit { matrix: e.rows() },
        }
    }
}

impl fmt::Display for DependenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependenceModel::Independent { n } => write!(f, "independent(n={n})"),
            DependenceModel::Equicorrelated { rho, n } => write!(f, "equicorrelated(rho={rho}, n={n})"),
            DependenceModel::ProductFactor(p) => match &p.schedule {
                Some(s) => write!(f, "product(lambda1={}, delta={}, n={})", s.lambda1, s.delta, s.n),
                None => write!(f, "factor(n={})", p.lambdas.len()),
            },
            DependenceModel::Explicit(e) => write!(f, "explicit(n={})", e.len()),
        }
    }
}

/// Builds the scheduled product-factor model.
pub fn build_schedule(lambda1: f64, delta: f64, n: usize) -> Result<DependenceModel> {
    Ok(DependenceModel::ProductFactor(ProductFactor::from_schedule(LambdaSchedule::new(
        lambda1, delta, n,
    )?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn schedule_values() {
        let m = build_schedule(0.5, 1.0, 4).unwrap();
        let DependenceModel::ProductFactor(p) = &m else { panic!() };
        let l = p.lambdas();
        assert_eq!(l[0], 0.5);
        assert_eq!(l[1], LAMBDA_CLAMP);
        // 1/(ln 3)^2, 1/(ln 4)^2 at 40 digits
        assert!((l[2] - 0.828_535_449_690_223).abs() < 1e-14);
        assert!((l[3] - 0.520_342_245_251_401_9).abs() < 1e-14);
        assert_eq!(m.diagnose().clamped, vec![2]);

        let single = build_schedule(0.5, 0.3, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.correlation(0, 0), 1.0);

        let steep = LambdaSchedule::new(0.5, 200.0, 50).unwrap().lambdas();
        assert!(steep[3..].iter().all(|&l| l < 1e-10));

        assert!(build_schedule(0.0, 1.0, 4).is_err());
        assert!(build_schedule(1.0, 1.0, 4).is_err());
        assert!(build_schedule(0.5, 0.0, 4).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(DependenceModel::equicorrelated(1.0, 5).is_err());
        assert!(DependenceModel::equicorrelated(-0.1, 5).is_err());
        assert!(DependenceModel::product(vec![0.3, 1.0]).is_err());
        assert!(DependenceModel::product(vec![]).is_err());
        assert!(DependenceModel::explicit(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(DependenceModel::explicit(vec![vec![1.0, 0.5], vec![0.5, 2.0]]).is_err());
        let not_pd = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        assert!(matches!(DependenceModel::explicit(not_pd), Err(Error::Factorization(_))));
        let eye = |n: usize| (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        assert!(ExplicitCorrelation::with_size_limit(eye(5), 4).is_err());
        assert!(ExplicitCorrelation::with_size_limit(eye(4), 4).is_ok());
    }

    #[test]
    fn diagnose_simple_models() {
        let d = DependenceModel::independent(500).unwrap().diagnose();
        assert!(d.rho_m.iter().all(|&r| r == 0.0));
        assert!(d.weakly_dependent);
        assert_eq!(d.gamma, 0.0);

        let d = DependenceModel::equicorrelated(0.3, 1000).unwrap().diagnose();
        assert!(d.rho_m.iter().all(|&r| r == 0.3));
        assert!(!d.weakly_dependent);
        assert!(d.trend > 0.0);
        assert!((d.rho_log(999) - 0.3 * 999f64.ln()).abs() < 1e-12);

        let d = DependenceModel::independent(1).unwrap().diagnose();
        assert!(d.rho_m.is_empty());
        assert!(d.weakly_dependent);
    }

    fn brute_lag_sups(l: &[f64]) -> Vec<f64> {
        let n = l.len();
        (1..n)
            .map(|m| (0..n - m).map(|i| (l[i] * l[i + m]).abs()).fold(0.0, f64::max))
            .collect()
    }

    #[test]
    fn product_lag_sups_match_brute_force() {
        let sched = LambdaSchedule::new(0.5, 0.5, 300).unwrap().lambdas();
        assert_eq!(product_lag_sups(&sched), brute_lag_sups(&sched));
        let mixed: Vec<f64> = (0..120).map(|i| ((i * 37 % 17) as f64 / 20.0) - 0.4).collect();
        assert_eq!(product_lag_sups(&mixed), brute_lag_sups(&mixed));
    }

    #[test]
    fn product_diagnostic_matches_explicit() {
        for n in [2usize, 7, 30, 50] {
            let m = build_schedule(0.5, 0.75, n).unwrap();
            let e = DependenceModel::explicit(m.correlation_matrix()).unwrap();
            let (a, b) = (m.diagnose(), e.diagnose());
            assert_eq!(a.rho_m, b.rho_m);
            assert_eq!(a.gamma_tail, b.gamma_tail);
            assert_eq!(a.gamma, b.gamma);
        }
    }

    #[test]
    fn gamma_tail_nonincreasing() {
        let d = build_schedule(0.5, 0.25, 2000).unwrap().diagnose();
        assert!(d.gamma_tail.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(d.gamma, d.gamma_tail[0]);
        assert!(d.rho_m.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn schedule_decay_at_large_n() {
        let d = build_schedule(0.5, 0.5, 1_000_000).unwrap().diagnose();
        assert!(d.rho_log(100_000) < d.rho_log(100));
        assert!(d.weakly_dependent);
        // Decreasing along a coarse lag grid from m = 10
        let grid = [10, 100, 1000, 10_000, 100_000, 999_999];
        assert!(grid.windows(2).all(|w| d.rho_log(w[1]) < d.rho_log(w[0])));
        // Dominated by the clamped loading: 0.99 * lambda_{m+2} * ln m
        let expected = 0.99 * 10_002f64.ln().powf(-1.5) * 10_000f64.ln();
        assert!((d.rho_log(10_000) - expected).abs() < 1e-12);
        assert!((d.rho_log(10_000) - 0.326_199_439_354_670_7).abs() < 1e-9);
    }

    #[test]
    fn factor_model_is_positive_definite() {
        for n in [5, 20, 50] {
            let m = build_schedule(0.5, 0.1, n).unwrap();
            assert!(DependenceModel::explicit(m.correlation_matrix()).is_ok());
        }
    }

    #[test]
    fn json_round_trip() {
        let m: DependenceModel =
            serde_json::from_str(r#"{"kind": "product", "lambda1": 0.5, "delta": 0.5, "n": 2500}"#).unwrap();
        assert_eq!(m.len(), 2500);
        assert_eq!(m.schedule().unwrap().delta, 0.5);
        let back: DependenceModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);

        let e: DependenceModel =
            serde_json::from_str(r#"{"kind": "equicorrelated", "rho": 0.3, "n": 100}"#).unwrap();
        assert_eq!(e, DependenceModel::equicorrelated(0.3, 100).unwrap());

        let x: DependenceModel =
            serde_json::from_str(r#"{"kind": "explicit", "matrix": [[1, 0.2], [0.2, 1]]}"#).unwrap();
        assert_eq!(x.correlation(0, 1), 0.2);
        let back: DependenceModel = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        assert_eq!(back, x);

        assert!(serde_json::from_str::<DependenceModel>(r#"{"kind": "equicorrelated", "rho": 1.2, "n": 3}"#).is_err());
        assert!(serde_json::from_str::<DependenceModel>(r#"{"kind": "ar1", "phi": 0.2}"#).is_err());
    }

    fn empirical_correlation(model: &DependenceModel, means: &MeanConfig, reps: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = model.len();
        let mut sum = vec![0.0; n];
        let mut cross = vec![vec![0.0; n]; n];
        let mut x = vec![0.0; n];
        for r in 0..reps {
            let mut rng = replicate_rng(99, r);
            model.sample_into(means, &mut rng, &mut x).unwrap();
            for i in 0..n {
                sum[i] += x[i];
                for j in 0..n {
                    cross[i][j] += x[i] * x[j];
                }
            }
        }
        let r = reps as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / r).collect();
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| cross[i][j] / r - mean[i] * mean[j]).collect())
            .collect();
        let corr = (0..n)
            .map(|i| (0..n).map(|j| cov[i][j] / (cov[i][i] * cov[j][j]).sqrt()).collect())
            .collect();
        (mean, corr)
    }

    #[test]
    fn sampler_faithfulness() {
        let zero = MeanConfig::global_null(4);
        let models = [
            DependenceModel::independent(4).unwrap(),
            DependenceModel::equicorrelated(0.3, 4).unwrap(),
            DependenceModel::product(vec![0.6, 0.5, 0.4, 0.3]).unwrap(),
            DependenceModel::explicit(vec![
                vec![1.0, 0.5, 0.2, 0.0],
                vec![0.5, 1.0, 0.5, 0.2],
                vec![0.2, 0.5, 1.0, 0.5],
                vec![0.0, 0.2, 0.5, 1.0],
            ])
            .unwrap(),
        ];
        for (k, model) in models.iter().enumerate() {
            let (_, corr) = empirical_correlation(model, &zero, 100_000);
            for i in 0..4 {
                for j in 0..4 {
                    let tol = if k == 0 || k == 2 { 0.01 } else { 0.015 };
                    assert!(
                        (corr[i][j] - model.correlation(i, j)).abs() < tol,
                        "{model}: ({i},{j}) {} vs {}",
                        corr[i][j],
                        model.correlation(i, j)
                    );
                }
            }
        }
        let shifted = MeanConfig::new(vec![5.0, 0.0, 0.0, 0.0]).unwrap();
        let (mean, _) = empirical_correlation(&models[2], &shifted, 100_000);
        assert!((mean[0] - 5.0).abs() < 0.01);
    }

    #[test]
    fn sample_size_mismatch() {
        let m = DependenceModel::independent(3).unwrap();
        let mut rng = replicate_rng(1, 0);
        assert!(m.sample(&MeanConfig::global_null(4), &mut rng).is_err());
    }
}
