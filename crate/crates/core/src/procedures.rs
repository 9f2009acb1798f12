//! Single-step cutoffs and rejection decisions.
//!
//! Three cutoff families are supported, each one- or two-sided:
//!
//! | family          | one-sided tail probability  | two-sided            |
//! |-----------------|-----------------------------|----------------------|
//! | adj. Bonferroni | `-ln(1-alpha) / (n p0)`     | `n -> 2n`            |
//! | Sidak           | `1 - (1-alpha)^(1/(n p0))`  | `n -> 2n`            |
//! | Lehmann-Romano  | `k alpha / n`               | `k alpha / (2n)`     |
//!
//! The cutoff is the upper-tail quantile of that probability. Statistics are
//! taken as z-scores as given; a hypothesis is rejected when its statistic
//! (or its absolute value, two-sided) is strictly greater than the cutoff.

use crate::error::{Error, Result};
use crate::gauss;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Significance level, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Level(f64);

impl Level {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Level(alpha))
        } else {
            Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Level {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Level::new(v)
    }
}

impl From<Level> for f64 {
    fn from(l: Level) -> f64 {
        l.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "bonferroni")]
    AdjBonferroni,
    Sidak,
    #[serde(rename = "lr")]
    LehmannRomano,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::AdjBonferroni, Family::Sidak, Family::LehmannRomano];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::AdjBonferroni => "bonferroni",
            Family::Sidak => "sidak",
            Family::LehmannRomano => "lr",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bonferroni" | "adj-bonferroni" | "adjbonferroni" | "bon" => Ok(Family::AdjBonferroni),
            "sidak" | "sid" => Ok(Family::Sidak),
            "lr" | "lehmann-romano" | "lehmannromano" => Ok(Family::LehmannRomano),
            other => Err(Error::domain(format!(
                "procedure must be one of bonferroni, sidak, lr; got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    One,
    Two,
}

impl Sided {
    pub fn as_str(self) -> &'static str {
        match self {
            Sided::One => "one",
            Sided::Two => "two",
        }
    }

    fn multiplier(self) -> u64 {
        match self {
            Sided::One => 1,
            Sided::Two => 2,
        }
    }
}

impl fmt::Display for Sided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sided {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "one" | "1" | "one-sided" => Ok(Sided::One),
            "two" | "2" | "two-sided" | "both" => Ok(Sided::Two),
            other => Err(Error::domain(format!("sided must be one or two; got '{other}'"))),
        }
    }
}

/// Which cutoff rule to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcedureSpec {
    family: Family,
    sided: Sided,
    k: u32,
    p0: Option<f64>,
}

impl ProcedureSpec {
    /// `k` is only meaningful for Lehmann-Romano and must be 1 otherwise.
    /// `p0` (the known null proportion) applies to Bonferroni and Sidak only.
    pub fn new(family: Family, sided: Sided, k: u32, p0: Option<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        if k != 1 && family != Family::LehmannRomano {
            return Err(Error::domain(format!(
                "k = {k} is only meaningful for the lr procedure"
            )));
        }
        if let Some(p) = p0 {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::domain(format!("p0 must lie in (0, 1], got {p}")));
            }
            if family == Family::LehmannRomano {
                return Err(Error::domain("p0 adjustment applies to bonferroni and sidak only"));
            }
        }
        Ok(ProcedureSpec { family, sided, k, p0 })
    }

    pub fn adj_bonferroni(sided: Sided) -> Self {
        ProcedureSpec { family: Family::AdjBonferroni, sided, k: 1, p0: None }
    }

    pub fn sidak(sided: Sided) -> Self {
        ProcedureSpec { family: Family::Sidak, sided, k: 1, p0: None }
    }

    pub fn lehmann_romano(k: u32, sided: Sided) -> Result<Self> {
        Self::new(Family::LehmannRomano, sided, k, None)
    }

    pub fn with_p0(self, p0: f64) -> Result<Self> {
        Self::new(self.family, self.sided, self.k, Some(p0))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sided(&self) -> Sided {
        self.sided
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p0(&self) -> Option<f64> {
        self.p0
    }

    /// Upper-tail probability whose quantile is the cutoff for `n` tests.
    fn tail_probability(&self, n: u64, alpha: Level) -> Result<f64> {
        let alpha = alpha.value();
        let q = match self.family {
            Family::AdjBonferroni | Family::Sidak => {
                // p0 multiplies n; two-sided replaces n by 2n first so the
                // two-sided cutoff at n is bitwise the one-sided one at 2n.
                let m = (self.sided.multiplier() * n) as f64 * self.p0.unwrap_or(1.0);
                if m < 1.0 {
                    return Err(Error::domain(format!(
                        "n * p0 must be at least 1, got {m}"
                    )));
                }
                let log_keep = (-alpha).ln_1p();
                match self.family {
                    Family::AdjBonferroni => -log_keep / m,
                    _ => -(log_keep / m).exp_m1(),
                }
            }
            Family::LehmannRomano => {
                if u64::from(self.k) > n {
                    return Err(Error::InfeasibleCutoff(format!(
                        "k = {} exceeds the number of hypotheses n = {n}",
                        self.k
                    )));
                }
                let ratio = f64::from(self.k) * alpha / n as f64;
                if ratio >= 1.0 {
                    return Err(Error::InfeasibleCutoff(format!(
                        "k * alpha / n = {ratio} must be below 1"
                    )));
                }
                ratio / self.sided.multiplier() as f64
            }
        };
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InfeasibleCutoff(format!(
                "tail probability {q} outside (0, 1) for {} at n = {n}, alpha = {alpha}",
                self.family
            )));
        }
        Ok(q)
    }
}

impl fmt::Display for ProcedureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.family, self.sided)?;
        if self.family == Family::LehmannRomano {
            write!(f, "(k={})", self.k)?;
        }
        if let Some(p0) = self.p0 {
            write!(f, "[p0={p0}]")?;
        }
        Ok(())
    }
}

/// A computed cutoff together with the inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub value: f64,
    pub spec: ProcedureSpec,
    pub n: u64,
    pub alpha: Level,
}

impl Cutoff {
    /// Decision rule for one statistic (strict inequality; ties are kept).
    #[inline]
    pub fn rejects(&self, x: f64) -> bool {
        match self.spec.sided {
            Sided::One => x > self.value,
            Sided::Two => x.abs() > self.value,
        }
    }
}

pub fn cutoff(spec: &ProcedureSpec, n: u64, alpha: Level) -> Result<Cutoff> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let q = spec.tail_probability(n, alpha)?;
    Ok(Cutoff { value: gauss::raw::upper_quantile(q), spec: *spec, n, alpha })
}

/// Indices (0-based) of rejected hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSet {
    pub indices: Vec<usize>,
    pub cutoff: Cutoff,
}

impl RejectionSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

pub fn apply(spec: &ProcedureSpec, alpha: Level, statistics: &[f64]) -> Result<RejectionSet> {
    if statistics.is_empty() {
        return Err(Error::domain("statistics must be non-empty"));
    }
    if let Some(bad) = statistics.iter().position(|x| !x.is_finite()) {
        return Err(Error::domain(format!(
            "statistics must be finite; entry {bad} is {}",
            statistics[bad]
        )));
    }
    let cutoff = cutoff(spec, statistics.len() as u64, alpha)?;
    Ok(apply_cutoff(&cutoff, statistics))
}

/// Applies an already computed cutoff; skips validation.
pub fn apply_cutoff(cutoff: &Cutoff, statistics: &[f64]) -> RejectionSet {
    let indices = statistics
        .iter()
        .enumerate()
        .filter(|(_, &x)| cutoff.rejects(x))
        .map(|(i, _)| i)
        .collect();
    RejectionSet { indices, cutoff: *cutoff }
}

/// `c_Sid(n, alpha) - c_Bon(n, alpha)`, one-sided. Positive for every `n`.
pub fn cutoff_gap(n: u64, alpha: Level) -> Result<f64> {
    let sid = cutoff(&ProcedureSpec::sidak(Sided::One), n, alpha)?;
    let bon = cutoff(&ProcedureSpec::adj_bonferroni(Sided::One), n, alpha)?;
    Ok(sid.value - bon.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lvl(a: f64) -> Level {
        Level::new(a).unwrap()
    }

    #[test]
    fn sidak_single_test_is_normal_quantile() {
        let c = cutoff(&ProcedureSpec::sidak(Sided::One), 1, lvl(0.05)).unwrap();
        assert!((c.value - 1.644_853_626_951_472_7).abs() < 1e-9);
    }

    #[test]
    fn bonferroni_calibration_identity() {
        for n in [1u64, 7, 100, 2500, 10_000, 1_000_000] {
            for a in [0.01, 0.05, 0.1, 0.25] {
                let c = cutoff(&ProcedureSpec::adj_bonferroni(Sided::One), n, lvl(a)).unwrap();
                let lhs = n as f64 * gauss::raw::cdf_bar(c.value);
                let rhs = -(-a).ln_1p();
                assert!(((lhs - rhs) / rhs).abs() < 1e-9, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn two_sided_is_one_sided_at_twice_n() {
        for fam in [Family::AdjBonferroni, Family::Sidak] {
            for n in [1u64, 3, 2500, 5000, 123_457] {
                let two = ProcedureSpec::new(fam, Sided::Two, 1, None).unwrap();
                let one = ProcedureSpec::new(fam, Sided::One, 1, None).unwrap();
                let a = lvl(0.1);
                assert_eq!(
                    cutoff(&two, n, a).unwrap().value.to_bits(),
                    cutoff(&one, 2 * n, a).unwrap().value.to_bits()
                );
            }
        }
    }

    #[test]
    fn lehmann_romano_cutoffs() {
        let one = ProcedureSpec::lehmann_romano(2, Sided::One).unwrap();
        let c = cutoff(&one, 5000, lvl(0.05)).unwrap();
        assert!((gauss::raw::cdf_bar(c.value) - 2e-5).abs() < 1e-17);
        let two = ProcedureSpec::lehmann_romano(2, Sided::Two).unwrap();
        let c2 = cutoff(&two, 5000, lvl(0.05)).unwrap();
        assert!((gauss::raw::cdf_bar(c2.value) - 1e-5).abs() < 1e-17);
        // k larger than n
        let lr11 = ProcedureSpec::lehmann_romano(11, Sided::One).unwrap();
        assert!(matches!(cutoff(&lr11, 10, lvl(0.05)), Err(Error::InfeasibleCutoff(_))));
        // k = n is the largest feasible k
        let lr3 = ProcedureSpec::lehmann_romano(3, Sided::One).unwrap();
        let c = cutoff(&lr3, 3, lvl(0.99)).unwrap();
        assert!((gauss::raw::cdf_bar(c.value) - 0.99).abs() < 1e-15);
    }

    #[test]
    fn p0_adjustment() {
        let base = ProcedureSpec::adj_bonferroni(Sided::One);
        let adj = base.with_p0(0.5).unwrap();
        assert_eq!(
            cutoff(&adj, 1000, lvl(0.05)).unwrap().value.to_bits(),
            cutoff(&base, 500, lvl(0.05)).unwrap().value.to_bits()
        );
        let two = ProcedureSpec::sidak(Sided::Two).with_p0(0.5).unwrap();
        let one = ProcedureSpec::sidak(Sided::One);
        assert_eq!(
            cutoff(&two, 1000, lvl(0.05)).unwrap().value.to_bits(),
            cutoff(&one, 1000, lvl(0.05)).unwrap().value.to_bits()
        );
        // n * p0 < 1
        let tiny = base.with_p0(0.1).unwrap();
        assert!(matches!(cutoff(&tiny, 5, lvl(0.05)), Err(Error::Domain(_))));
        assert!(base.with_p0(0.0).is_err());
        assert!(base.with_p0(1.5).is_err());
        assert!(ProcedureSpec::lehmann_romano(1, Sided::One).unwrap().with_p0(0.5).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ProcedureSpec::new(Family::Sidak, Sided::One, 2, None).is_err());
        assert!(ProcedureSpec::new(Family::LehmannRomano, Sided::One, 0, None).is_err());
        assert!(Level::new(0.0).is_err());
        assert!(Level::new(1.0).is_err());
        assert!(Level::new(f64::NAN).is_err());
        // n = 1, alpha > 1 - 1/e: -ln(1-alpha) > 1 has no cutoff
        let bon = ProcedureSpec::adj_bonferroni(Sided::One);
        assert!(matches!(cutoff(&bon, 1, lvl(0.7)), Err(Error::InfeasibleCutoff(_))));
        assert!(cutoff(&bon, 0, lvl(0.05)).is_err());
    }

    #[test]
    fn apply_rules() {
        let spec = ProcedureSpec::adj_bonferroni(Sided::One);
        let zeros = vec![0.0; 100];
        assert!(apply(&spec, lvl(0.05), &zeros).unwrap().is_empty());
        let mut x = vec![0.0; 100];
        x[37] = 1e6;
        let r = apply(&spec, lvl(0.05), &x).unwrap();
        assert_eq!(r.indices, vec![37]);
        assert!(r.contains(37));
        assert!(apply(&spec, lvl(0.05), &[]).is_err());
        assert!(apply(&spec, lvl(0.05), &[0.0, f64::NAN]).is_err());

        // two-sided catches large negative values, one-sided does not
        let mut y = vec![0.0; 50];
        y[3] = -1e3;
        assert!(apply(&spec, lvl(0.05), &y).unwrap().is_empty());
        let two = ProcedureSpec::adj_bonferroni(Sided::Two);
        assert_eq!(apply(&two, lvl(0.05), &y).unwrap().indices, vec![3]);
    }

    #[test]
    fn ties_are_not_rejected() {
        let spec = ProcedureSpec::sidak(Sided::One);
        let c = cutoff(&spec, 4, lvl(0.05)).unwrap();
        let x = [c.value, 0.0, 0.0, 0.0];
        assert!(apply(&spec, lvl(0.05), &x).unwrap().is_empty());
        let two = ProcedureSpec::sidak(Sided::Two);
        let c2 = cutoff(&two, 4, lvl(0.05)).unwrap();
        assert!(!c2.rejects(-c2.value));
    }

    #[test]
    fn gap_values() {
        // Phi^{-1}(0.95) - Phi^{-1}(1 + ln 0.95), 40-digit mpmath
        let g1 = cutoff_gap(1, lvl(0.05)).unwrap();
        assert!((g1 - 0.012_412_488_335_513_345).abs() < 1e-10);
        for a in [0.01, 0.05, 0.1] {
            let mut prev = f64::INFINITY;
            for e in 0..=6 {
                let g = cutoff_gap(10u64.pow(e), lvl(a)).unwrap();
                assert!(g > 0.0, "n=1e{e} a={a}");
                assert!(g < prev);
                prev = g;
            }
        }
        assert!(cutoff_gap(1_000_000, lvl(0.05)).unwrap() < cutoff_gap(1000, lvl(0.05)).unwrap());
    }

    #[test]
    fn sidak_tail_rate() {
        // |n (1 - (1-a)^(1/n)) + ln(1-a)| <= C / n with C = ln(1-a)^2 / 2,
        // the leading term of the exponential series.
        for a in [0.01, 0.05, 0.1] {
            let x = -(-a as f64).ln_1p();
            let c = 0.5 * x * x;
            for n in [1u64, 10, 100, 1000, 10_000, 100_000] {
                let nf = n as f64;
                let sid = -(-x / nf).exp_m1() * nf;
                assert!((sid - x).abs() <= c / nf * (1.0 + 1e-6), "a={a} n={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn bonferroni_below_sidak(n in 1u64..2_000_000, a in 0.001f64..0.6) {
            let bon = cutoff(&ProcedureSpec::adj_bonferroni(Sided::One), n, lvl(a)).unwrap();
            let sid = cutoff(&ProcedureSpec::sidak(Sided::One), n, lvl(a)).unwrap();
            prop_assert!(bon.value < sid.value);
        }

        #[test]
        fn monotone_in_n_and_alpha(n in 1u64..1_000_000, a in 0.001f64..0.3, fam in 0usize..2) {
            let spec = [ProcedureSpec::adj_bonferroni(Sided::One), ProcedureSpec::sidak(Sided::Two)][fam];
            let c = cutoff(&spec, n, lvl(a)).unwrap().value;
            prop_assert!(c < cutoff(&spec, n + 1, lvl(a)).unwrap().value);
            prop_assert!(c > cutoff(&spec, n, lvl(a * 1.5)).unwrap().value);
        }

        #[test]
        fn rejection_sets_nest_in_alpha(
            xs in proptest::collection::vec(-6.0f64..6.0, 1..200),
            a1 in 0.001f64..0.3,
            bump in 0.0001f64..0.3,
        ) {
            let spec = ProcedureSpec::sidak(Sided::Two);
            let small = apply(&spec, lvl(a1), &xs).unwrap();
            let large = apply(&spec, lvl(a1 + bump), &xs).unwrap();
            for i in &small.indices {
                prop_assert!(large.contains(*i));
            }
        }
    }
}
