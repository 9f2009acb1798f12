//! Closed-form asymptotic quantities: limiting error rates, the rate bound
//! `R_n`, the Cramér quantile expansion and finite-n power-condition proxies.

use crate::error::{Error, Result};
use crate::procedures::{Family, Level, ProcedureSpec};
use serde::Serialize;
use std::f64::consts::PI;

/// `P(Poisson(mean) <= k - 1) = e^{-mean} sum_{s<k} mean^s / s!`.
pub fn poisson_cdf_below(k: u32, mean: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for s in 0..k {
        if s > 0 {
            term *= mean / f64::from(s);
        }
        sum += term;
    }
    (-mean).exp() * sum
}

/// Limit of `P(k-th largest <= u_n)` when `d_n (1 - Phi(u_n)) -> tau`; with
/// `absolute` the statistic is `|X_i|` and the Poisson mean doubles.
pub fn kth_max_limit(k: u32, tau: f64, absolute: bool) -> f64 {
    let mean = if absolute { 2.0 * tau } else { tau };
    poisson_cdf_below(k, mean)
}

/// Limiting FWER (or k-FWER for Lehmann-Romano) as `n -> infinity` with all
/// hypotheses null.
pub fn limiting_fwer(spec: &ProcedureSpec, alpha: Level) -> f64 {
    let a = alpha.value();
    match spec.family() {
        Family::AdjBonferroni | Family::Sidak => a,
        Family::LehmannRomano => {
            let k = spec.k();
            1.0 - poisson_cdf_below(k, f64::from(k) * a)
        }
    }
}

/// Inputs to the convergence-rate bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    pub nu: f64,
    pub gamma: f64,
    /// Tail sups `gamma_m`, element `m - 1` for lag `m`.
    pub gamma_seq: Vec<f64>,
    /// `n0 / n`.
    pub n0_frac: f64,
    pub n: u64,
}

impl RateParams {
    pub fn new(nu: f64, gamma: f64, gamma_seq: Vec<f64>, n0_frac: f64, n: u64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::domain(format!("nu must lie in (0, 1), got {nu}")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::domain(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if !(0.0..=1.0).contains(&n0_frac) {
            return Err(Error::domain(format!("n0_frac must lie in [0, 1], got {n0_frac}")));
        }
        if n < 2 {
            return Err(Error::domain(format!("n must be at least 2, got {n}")));
        }
        Ok(RateParams { nu, gamma, gamma_seq, n0_frac, n })
    }

    /// Whether `0 < nu < (1 - gamma) / (1 + gamma)`.
    pub fn nu_admissible(&self) -> bool {
        self.nu < (1.0 - self.gamma) / (1.0 + self.gamma)
    }

    pub fn with_n(&self, n: u64) -> Result<Self> {
        RateParams::new(self.nu, self.gamma, self.gamma_seq.clone(), self.n0_frac, n)
    }
}

/// The four terms whose maximum is `R_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub power: f64,
    pub dependence: f64,
    pub alternatives: f64,
    pub inverse_n: f64,
}

impl RateTerms {
    pub fn max(&self) -> f64 {
        self.power.max(self.dependence).max(self.alternatives).max(self.inverse_n)
    }
}

pub fn rate_terms(p: &RateParams) -> Result<RateTerms> {
    let n = p.n as f64;
    let ln_n = n.ln();
    let exponent = (1.0 + p.nu - 2.0) / (1.0 + p.gamma);
    let lag = n.powf(p.nu).floor() as usize;
    if lag == 0 || lag > p.gamma_seq.len() {
        return Err(Error::domain(format!(
            "gamma_seq has {} entries but lag floor(n^nu) = {lag} is required",
            p.gamma_seq.len()
        )));
    }
    Ok(RateTerms {
        power: n.powf(exponent) * ln_n.powf(1.0 / (1.0 + p.gamma)),
        dependence: p.gamma_seq[lag - 1] * (p.nu * ln_n),
        alternatives: 1.0 - p.n0_frac,
        inverse_n: 1.0 / n,
    })
}

/// `R_n = max{n^{(nu-1)/(1+gamma)} (log n)^{1/(1+gamma)}, gamma_{[n^nu]} log n^nu, 1 - n0/n, 1/n}`.
pub fn rate_bound(p: &RateParams) -> Result<f64> {
    rate_terms(p).map(|t| t.max())
}

/// Two-term expansion of `Phi^{-1}(1 - beta / n)`:
/// `b - (log log n + log 4pi + 2 log beta) / (2b)` with `b = sqrt(2 log n)`.
pub fn cramer_quantile(beta: f64, n: u64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    if n < 3 {
        return Err(Error::domain(format!("n must be at least 3, got {n}")));
    }
    let ln_n = (n as f64).ln();
    let b = (2.0 * ln_n).sqrt();
    Ok(b - (ln_n.ln() + (4.0 * PI).ln() + 2.0 * beta.ln()) / (2.0 * b))
}

/// A computable quantity paired with its finite-n proxy verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionProxy {
    pub value: f64,
    pub satisfied_proxy: bool,
}

/// `sqrt(2 log n1) / mu_max`, proxy `ratio < 1`.
pub fn power_condition_t41(n1: u64, mu_max: f64) -> Result<ConditionProxy> {
    if n1 < 2 {
        return Err(Error::domain(format!("n1 must be at least 2, got {n1}")));
    }
    if !(mu_max > 0.0) || !mu_max.is_finite() {
        return Err(Error::domain(format!("mu_max must be positive, got {mu_max}")));
    }
    let ratio = (2.0 * (n1 as f64).ln()).sqrt() / mu_max;
    Ok(ConditionProxy { value: ratio, satisfied_proxy: ratio < 1.0 })
}

fn growth(n: f64, frac: f64, mu: f64) -> f64 {
    frac * (mu * (2.0 * n.ln()).sqrt()).exp()
}

/// `(n1/n) exp(mu sqrt(2 log n))`; the proxy holds when this grows from
/// `n/2` to `n` with `n1/n` fixed.
pub fn power_condition_t42(n: u64, n1: u64, mu_min: f64) -> Result<ConditionProxy> {
    if n1 == 0 || n1 > n {
        return Err(Error::domain(format!("n1 must lie in [1, n = {n}], got {n1}")));
    }
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    if !mu_min.is_finite() {
        return Err(Error::domain(format!("mu_min must be finite, got {mu_min}")));
    }
    let frac = n1 as f64 / n as f64;
    let now = growth(n as f64, frac, mu_min);
    let half = growth(n as f64 / 2.0, frac, mu_min);
    Ok(ConditionProxy { value: now, satisfied_proxy: now > half })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depmodels::build_schedule;
    use crate::gauss;
    use crate::procedures::Sided;

    fn lvl(a: f64) -> Level {
        Level::new(a).unwrap()
    }

    #[test]
    fn limiting_values() {
        assert_eq!(limiting_fwer(&ProcedureSpec::sidak(Sided::One), lvl(0.05)), 0.05);
        assert_eq!(limiting_fwer(&ProcedureSpec::adj_bonferroni(Sided::Two), lvl(0.1)), 0.1);
        let cases = [
            (1, 0.05, 0.048_770_575_499_286),
            (1, 0.1, 0.095_162_581_964_040_4),
            (2, 0.05, 0.004_678_840_160_444_5),
            (2, 0.1, 0.017_523_096_306_421_8),
            (3, 0.05, 0.000_502_862_376_401_621),
            (3, 0.1, 0.003_599_493_183_089_47),
        ];
        for (k, a, want) in cases {
            let got = limiting_fwer(&ProcedureSpec::lehmann_romano(k, Sided::One).unwrap(), lvl(a));
            assert!((got - want).abs() < 1e-13, "k={k} a={a}: {got}");
        }
    }

    #[test]
    fn lr_limit_below_alpha_and_decreasing_in_k() {
        for i in 1..100 {
            let a = f64::from(i) / 100.0;
            let l = limiting_fwer(&ProcedureSpec::lehmann_romano(1, Sided::One).unwrap(), lvl(a));
            assert!(l < a);
        }
        for a in [0.05, 0.1] {
            let mut prev = 1.0;
            for k in 1..=10 {
                let l = limiting_fwer(&ProcedureSpec::lehmann_romano(k, Sided::Two).unwrap(), lvl(a));
                assert!(l < prev);
                prev = l;
            }
        }
    }

    #[test]
    fn kth_max_limits() {
        assert!((kth_max_limit(1, 1.0, false) - 0.367_879_441_171_442_33).abs() < 1e-15);
        assert!((kth_max_limit(2, 1.0, false) - 0.735_758_882_342_884_6).abs() < 1e-15);
        assert!((kth_max_limit(1, 0.5, true) - 0.367_879_441_171_442_33).abs() < 1e-15);
    }

    #[test]
    fn rate_bound_trivial_cases() {
        let zeros = vec![0.0; 1000];
        let small = rate_bound(&RateParams::new(0.3, 0.0, zeros.clone(), 1.0, 1000).unwrap()).unwrap();
        let large = rate_bound(&RateParams::new(0.3, 0.0, zeros.clone(), 1.0, 1_000_000).unwrap()).unwrap();
        assert!(large < small);
        for n in [1000u64, 100_000, 1_000_000] {
            let r = rate_bound(&RateParams::new(0.3, 0.0, zeros.clone(), 0.9, n).unwrap()).unwrap();
            assert!(r >= 0.1 - 1e-15);
        }
    }

    #[test]
    fn rate_bound_validation() {
        assert!(RateParams::new(0.0, 0.1, vec![], 1.0, 10).is_err());
        assert!(RateParams::new(0.3, 1.0, vec![], 1.0, 10).is_err());
        assert!(RateParams::new(0.3, 0.1, vec![], 1.5, 10).is_err());
        assert!(RateParams::new(0.3, 0.1, vec![], 1.0, 1).is_err());
        let short = RateParams::new(0.5, 0.1, vec![0.0; 3], 1.0, 100).unwrap();
        assert!(matches!(rate_bound(&short), Err(Error::Domain(_))));
        assert!(RateParams::new(0.05, 0.5, vec![], 1.0, 10).unwrap().nu_admissible());
        assert!(!RateParams::new(0.5, 0.5, vec![], 1.0, 10).unwrap().nu_admissible());
    }

    #[test]
    fn rate_bound_decreases_for_schedule() {
        let d = build_schedule(0.5, 0.5, 1000).unwrap().diagnose();
        let base = RateParams::new(0.3, d.gamma, d.gamma_tail.clone(), 1.0, 1000).unwrap();
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let p = base.with_n(n).unwrap();
            let r = rate_bound(&p).unwrap();
            assert!(r < prev, "n = {n}: {r}");
            assert!(r >= 1.0 - p.n0_frac);
            prev = r;
        }
    }

    #[test]
    fn cramer_expansion() {
        assert!(cramer_quantile(1.0, 2).is_err());
        assert!(cramer_quantile(0.0, 100).is_err());
        let gap = |n: u64| {
            (cramer_quantile(1.0, n).unwrap() - gauss::quantile(1.0 - 1.0 / n as f64).unwrap()).abs()
        };
        let gaps: Vec<f64> = [1_000u64, 10_000, 1_000_000, 100_000_000].iter().map(|&n| gap(n)).collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((gaps[0] - 0.026_237_6).abs() < 1e-6);
        assert!((gaps[3] - 0.009_209_8).abs() < 1e-6);

        let beta = -(0.95f64.ln());
        let n = 1_000_000u64;
        let exact = gauss::upper_quantile(beta / n as f64).unwrap();
        assert!((cramer_quantile(beta, n).unwrap() - exact).abs() < 0.02);

        let mut prev = f64::NEG_INFINITY;
        for e in 1..=12 {
            let v = cramer_quantile(1.0, 10u64.pow(e)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn t41_proxy() {
        let b = (2.0 * 1000f64.ln()).sqrt();
        let c = power_condition_t41(1000, 2.0 * b).unwrap();
        assert!((c.value - 0.5).abs() < 1e-15 && c.satisfied_proxy);
        let c = power_condition_t41(1000, b).unwrap();
        assert_eq!(c.value, 1.0);
        assert!(!c.satisfied_proxy);
        let c = power_condition_t41(10_000, 4.0).unwrap();
        assert!((c.value - 1.072_983_013_144_673_6).abs() < 1e-14);
        assert!(!c.satisfied_proxy);
        assert!(power_condition_t41(1, 4.0).is_err());
        assert!(power_condition_t41(100, 0.0).is_err());
    }

    #[test]
    fn t42_proxy() {
        let c = power_condition_t42(10_000, 100, 0.5).unwrap();
        assert!((c.value - 0.085_502_970_607_232_11).abs() < 1e-14);
        assert!(c.satisfied_proxy);
        let c = power_condition_t42(5000, 5000, 0.3).unwrap();
        assert!(c.satisfied_proxy);
        let c = power_condition_t42(10_000, 1, 1e-20).unwrap();
        assert!(!c.satisfied_proxy);
        assert!(power_condition_t42(10, 11, 1.0).is_err());
        assert!(power_condition_t42(10, 0, 1.0).is_err());
    }
}
