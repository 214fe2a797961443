//! Ground-truth competing-risks lifetime laws and the identities tying the
//! pmf, the all-cause hazard, the cause-specific hazards and the conditional
//! event probabilities together.
//!
//! Ages are integer months. A distribution lives on `[min_age, max_age]` and
//! every event at age `x` is attributed to cause 1 (default) with probability
//! `cause1_share[x]`, otherwise to cause 2 (prepayment).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Terminal state of a loan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CauseId {
    /// State 1.
    Default,
    /// State 2.
    Prepay,
}

impl CauseId {
    pub const ALL: [CauseId; 2] = [CauseId::Default, CauseId::Prepay];

    pub fn as_str(self) -> &'static str {
        match self {
            CauseId::Default => "default",
            CauseId::Prepay => "prepay",
        }
    }

    /// Numeric state label (1 or 2).
    pub fn state(self) -> u8 {
        match self {
            CauseId::Default => 1,
            CauseId::Prepay => 2,
        }
    }
}

impl fmt::Display for CauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CauseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "default" | "1" | "d" => Ok(CauseId::Default),
            "prepay" | "prepayment" | "repaid" | "2" | "p" => Ok(CauseId::Prepay),
            other => Err(Error::InvalidInput(format!("unknown cause '{other}'"))),
        }
    }
}

/// Discrete lifetime law with a per-age split between the two causes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution<T>", into = "RawDistribution<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CompetingRisksDistribution<T> {
    min_age: u32,
    max_age: u32,
    pmf: Vec<T>,
    cause1_share: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct RawDistribution<T> {
    min_age: u32,
    max_age: u32,
    pmf: Vec<T>,
    cause1_share: Vec<T>,
}

impl<T: Real> TryFrom<RawDistribution<T>> for CompetingRisksDistribution<T> {
    type Error = Error;

    fn try_from(raw: RawDistribution<T>) -> Result<Self> {
        Self::new(raw.min_age, raw.max_age, raw.pmf, raw.cause1_share)
    }
}

impl<T: Real> From<CompetingRisksDistribution<T>> for RawDistribution<T> {
    fn from(d: CompetingRisksDistribution<T>) -> Self {
        RawDistribution {
            min_age: d.min_age,
            max_age: d.max_age,
            pmf: d.pmf,
            cause1_share: d.cause1_share,
        }
    }
}

impl<T: Real> CompetingRisksDistribution<T> {
    pub fn new(min_age: u32, max_age: u32, pmf: Vec<T>, cause1_share: Vec<T>) -> Result<Self> {
        if max_age < min_age {
            return Err(Error::InvalidDistribution(format!(
                "max_age {max_age} < min_age {min_age}"
            )));
        }
        let len = (max_age - min_age + 1) as usize;
        if pmf.len() != len || cause1_share.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "expected {len} entries, got pmf={} cause1_share={}",
                pmf.len(),
                cause1_share.len()
            )));
        }
        if pmf.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite pmf entry".into(),
            ));
        }
        let total: T = pmf.iter().copied().sum();
        let tol = T::lit(1e-9).max(T::epsilon() * T::from_count(len * 4));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "pmf sums to {total}, not 1"
            )));
        }
        if cause1_share
            .iter()
            .any(|p| !(*p >= T::zero() && *p <= T::one()))
        {
            return Err(Error::InvalidDistribution(
                "cause1_share outside [0, 1]".into(),
            ));
        }
        Ok(Self {
            min_age,
            max_age,
            pmf,
            cause1_share,
        })
    }

    /// The ten-point law used in the reference simulation study.
    pub fn table_b1() -> Self {
        let pmf = [0.04, 0.06, 0.10, 0.14, 0.09, 0.06, 0.14, 0.18, 0.07, 0.12];
        let share = [0.66, 0.20, 0.45, 0.87, 0.20, 0.81, 0.05, 0.78, 0.25, 0.42];
        Self::new(
            1,
            10,
            pmf.iter().map(|&v| T::lit(v)).collect(),
            share.iter().map(|&v| T::lit(v)).collect(),
        )
        .expect("table B1 preset is valid")
    }

    pub fn min_age(&self) -> u32 {
        self.min_age
    }

    pub fn max_age(&self) -> u32 {
        self.max_age
    }

    pub fn ages(&self) -> std::ops::RangeInclusive<u32> {
        self.min_age..=self.max_age
    }

    fn index(&self, x: u32) -> Result<usize> {
        if x < self.min_age || x > self.max_age {
            return Err(Error::AgeOutOfRange {
                age: x,
                lo: self.min_age,
                hi: self.max_age,
            });
        }
        Ok((x - self.min_age) as usize)
    }

    /// `Pr(X = x)`.
    pub fn pmf(&self, x: u32) -> Result<T> {
        Ok(self.pmf[self.index(x)?])
    }

    /// `p(x)`, the probability of cause 1 given an event at `x`.
    pub fn cause1_share(&self, x: u32) -> Result<T> {
        Ok(self.cause1_share[self.index(x)?])
    }

    /// `Pr(X = x, Z_x = cause)`.
    pub fn joint(&self, x: u32, cause: CauseId) -> Result<T> {
        let i = self.index(x)?;
        let share = self.cause1_share[i];
        Ok(match cause {
            CauseId::Default => self.pmf[i] * share,
            CauseId::Prepay => self.pmf[i] * (T::one() - share),
        })
    }

    /// `Pr(X >= x)` from the pmf tail; defined on `[min_age, max_age + 1]`.
    pub fn survival(&self, x: u32) -> Result<T> {
        if x < self.min_age || x > self.max_age + 1 {
            return Err(Error::AgeOutOfRange {
                age: x,
                lo: self.min_age,
                hi: self.max_age + 1,
            });
        }
        if x == self.min_age {
            return Ok(T::one());
        }
        if x == self.max_age + 1 {
            return Ok(T::zero());
        }
        let start = (x - self.min_age) as usize;
        Ok(self.pmf[start..].iter().copied().sum())
    }

    /// `Pr(X >= x)` as the product of one minus the all-cause hazard over
    /// every age below `x`.
    pub fn survival_from_hazards(&self, x: u32) -> Result<T> {
        if x < self.min_age || x > self.max_age + 1 {
            return Err(Error::AgeOutOfRange {
                age: x,
                lo: self.min_age,
                hi: self.max_age + 1,
            });
        }
        let mut s = T::one();
        for k in self.min_age..x {
            if s == T::zero() {
                break;
            }
            s *= T::one() - self.all_cause_hazard(k)?;
        }
        Ok(s)
    }

    fn survival_positive(&self, x: u32) -> Result<T> {
        self.index(x)?;
        let s = self.survival(x)?;
        if s <= T::zero() {
            return Err(Error::ZeroSurvival(x));
        }
        Ok(s)
    }

    /// `lambda(x) = Pr(X = x) / Pr(X >= x)`.
    pub fn all_cause_hazard(&self, x: u32) -> Result<T> {
        let s = self.survival_positive(x)?;
        let p = self.pmf(x)?;
        if x == self.max_age {
            return Ok(if p > T::zero() { T::one() } else { T::zero() });
        }
        Ok(p / s)
    }

    /// `lambda^{0i}(x) = Pr(X = x, Z_x = i) / Pr(X >= x)`.
    pub fn cause_specific_hazard(&self, x: u32, cause: CauseId) -> Result<T> {
        let s = self.survival_positive(x)?;
        Ok(self.joint(x, cause)? / s)
    }

    /// Both cause-specific hazards over the whole support, ages with zero
    /// survival mass reported as zero.
    pub fn hazard_table(&self) -> (Vec<T>, Vec<T>) {
        self.ages()
            .map(|x| {
                (
                    self.cause_specific_hazard(x, CauseId::Default)
                        .unwrap_or(T::zero()),
                    self.cause_specific_hazard(x, CauseId::Prepay)
                        .unwrap_or(T::zero()),
                )
            })
            .unzip()
    }

    /// `Pr(X = j, Z_j = i | X >= x)` for every `j` in `[x, max_age]`.
    pub fn conditional_event_probs(&self, x: u32) -> Result<ConditionalEventTable<T>> {
        let s = self.survival_positive(x)?;
        let mut default = Vec::new();
        let mut prepay = Vec::new();
        for j in x..=self.max_age {
            default.push(self.joint(j, CauseId::Default)? / s);
            prepay.push(self.joint(j, CauseId::Prepay)? / s);
        }
        Ok(ConditionalEventTable {
            start_age: x,
            default,
            prepay,
            residual: T::zero(),
        })
    }
}

/// Per-(age, cause) event probabilities conditional on survival to
/// `start_age`. `residual` is the mass of surviving past the last row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ConditionalEventTable<T> {
    pub start_age: u32,
    pub default: Vec<T>,
    pub prepay: Vec<T>,
    pub residual: T,
}

impl<T: Real> ConditionalEventTable<T> {
    pub fn get(&self, age: u32, cause: CauseId) -> Option<T> {
        let i = age.checked_sub(self.start_age)? as usize;
        match cause {
            CauseId::Default => self.default.get(i).copied(),
            CauseId::Prepay => self.prepay.get(i).copied(),
        }
    }

    pub fn total(&self) -> T {
        self.default.iter().copied().sum::<T>()
            + self.prepay.iter().copied().sum::<T>()
            + self.residual
    }

    pub fn len(&self) -> usize {
        self.default.len()
    }

    pub fn is_empty(&self) -> bool {
        self.default.is_empty()
    }
}

/// Conditional event probabilities from cause-specific hazard sequences that
/// start at `start_age`: `p(j, i) = lambda^{0i}(j) * prod_{k<j} (1 - lambda(k))`.
///
/// Whatever mass survives every listed age is returned as `residual`.
pub fn conditional_probs_from_hazards<T: Real>(
    start_age: u32,
    default: &[T],
    prepay: &[T],
) -> Result<ConditionalEventTable<T>> {
    if default.len() != prepay.len() {
        return Err(Error::InvalidInput(
            "hazard sequences differ in length".into(),
        ));
    }
    let mut surv = T::one();
    let mut d = Vec::with_capacity(default.len());
    let mut p = Vec::with_capacity(default.len());
    for (k, (&h1, &h2)) in default.iter().zip(prepay).enumerate() {
        let all = h1 + h2;
        let out_of_range = |h: T| !(h >= T::zero() && h <= T::one());
        if out_of_range(h1) || out_of_range(h2) || all > T::one() + T::lit(1e-12) {
            return Err(Error::InvalidInput(format!(
                "hazards at age {} not a valid probability split ({h1}, {h2})",
                start_age + k as u32
            )));
        }
        d.push(h1 * surv);
        p.push(h2 * surv);
        surv *= (T::one() - all).max(T::zero());
    }
    Ok(ConditionalEventTable {
        start_age,
        default: d,
        prepay: p,
        residual: surv,
    })
}

/// Left-truncation law: `Y` discrete uniform on `[lo, hi]`, censoring at
/// `C = Y + censor_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationLaw {
    pub lo: u32,
    pub hi: u32,
    pub censor_offset: u32,
}

impl TruncationLaw {
    pub fn uniform(lo: u32, hi: u32, censor_offset: u32) -> Result<Self> {
        let law = Self {
            lo,
            hi,
            censor_offset,
        };
        law.validate()?;
        Ok(law)
    }

    /// `Y ~ U{1..5}`, `tau = 5`.
    pub fn table_b1() -> Self {
        Self {
            lo: 1,
            hi: 5,
            censor_offset: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo < 1 || self.hi < self.lo {
            return Err(Error::InvalidInput(format!(
                "truncation support [{}, {}] invalid",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn support_len(&self) -> u32 {
        self.hi - self.lo + 1
    }

    /// `Pr(Y = y)`.
    pub fn pmf<T: Real>(&self, y: u32) -> T {
        if y < self.lo || y > self.hi {
            T::zero()
        } else {
            T::one() / T::from_count(self.support_len() as usize)
        }
    }

    /// `Pr(Y <= x <= Y + tau)`.
    pub fn window_prob<T: Real>(&self, x: u32) -> T {
        let lo = x.saturating_sub(self.censor_offset).max(self.lo);
        let hi = x.min(self.hi);
        if hi < lo {
            return T::zero();
        }
        T::from_count((hi - lo + 1) as usize) / T::from_count(self.support_len() as usize)
    }

    /// `alpha = Pr(Y <= X)`.
    pub fn retention_prob<T: Real>(&self, dist: &CompetingRisksDistribution<T>) -> T {
        (self.lo..=self.hi)
            .map(|y| {
                let s = if y <= dist.min_age() {
                    T::one()
                } else if y > dist.max_age() + 1 {
                    T::zero()
                } else {
                    dist.survival(y).unwrap_or(T::zero())
                };
                self.pmf::<T>(y) * s
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn b1() -> CompetingRisksDistribution<f64> {
        CompetingRisksDistribution::table_b1()
    }

    #[test]
    fn all_cause_hazard_matches_table() {
        let d = b1();
        assert_abs_diff_eq!(d.all_cause_hazard(1).unwrap(), 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(d.all_cause_hazard(2).unwrap(), 0.0625, epsilon = 1e-12);
        assert_eq!(d.all_cause_hazard(10).unwrap(), 1.0);
    }

    #[test]
    fn all_cause_hazard_errors() {
        let d = b1();
        assert!(matches!(
            d.all_cause_hazard(0),
            Err(Error::AgeOutOfRange { .. })
        ));
        assert!(matches!(
            d.all_cause_hazard(11),
            Err(Error::AgeOutOfRange { .. })
        ));
        let z = CompetingRisksDistribution::new(1, 3, vec![0.5, 0.5, 0.0], vec![0.5; 3]).unwrap();
        assert!(matches!(z.all_cause_hazard(3), Err(Error::ZeroSurvival(3))));
    }

    #[test]
    fn survival_examples() {
        let d = b1();
        assert_eq!(d.survival(1).unwrap(), 1.0);
        assert_abs_diff_eq!(d.survival(4).unwrap(), 0.80, epsilon = 1e-12);
        assert_abs_diff_eq!(
            d.survival_from_hazards(4).unwrap(),
            0.96 * 0.9375 * (0.80 / 0.90),
            epsilon = 1e-12
        );
        assert_eq!(d.survival(11).unwrap(), 0.0);
        assert!(d.survival(12).is_err());
    }

    #[test]
    fn cause_specific_examples() {
        let d = b1();
        assert_abs_diff_eq!(
            d.cause_specific_hazard(4, CauseId::Default).unwrap(),
            0.87 * 0.14 / 0.80,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.cause_specific_hazard(4, CauseId::Default).unwrap(),
            0.152,
            epsilon = 5e-4
        );
        assert_abs_diff_eq!(
            d.cause_specific_hazard(8, CauseId::Default).unwrap(),
            0.379,
            epsilon = 5e-4
        );
        let z = CompetingRisksDistribution::new(1, 2, vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        assert_eq!(z.cause_specific_hazard(1, CauseId::Default).unwrap(), 0.0);
    }

    #[test]
    fn table_b1_rounded_columns() {
        // (lambda01, lambda02, lambda) as printed, 3/3/2 decimals.
        let printed = [
            (0.026, 0.014, 0.04),
            (0.013, 0.050, 0.06),
            (0.050, 0.061, 0.11),
            (0.152, 0.023, 0.18),
            (0.027, 0.109, 0.14),
            (0.085, 0.020, 0.11),
            (0.014, 0.261, 0.27),
            (0.379, 0.107, 0.49),
            (0.092, 0.276, 0.37),
            (0.420, 0.580, 1.00),
        ];
        let d = b1();
        for (x, (l1, l2, l)) in (1..=10).zip(printed) {
            assert_abs_diff_eq!(
                d.cause_specific_hazard(x, CauseId::Default).unwrap(),
                l1,
                epsilon = 6e-4
            );
            assert_abs_diff_eq!(
                d.cause_specific_hazard(x, CauseId::Prepay).unwrap(),
                l2,
                epsilon = 6e-4
            );
            assert_abs_diff_eq!(d.all_cause_hazard(x).unwrap(), l, epsilon = 6e-3);
        }
    }

    #[test]
    fn conditional_probs_at_min_age_reproduce_joint() {
        let d = b1();
        let t = d.conditional_event_probs(1).unwrap();
        assert_abs_diff_eq!(t.get(1, CauseId::Default).unwrap(), 0.0264, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(1, CauseId::Prepay).unwrap(), 0.0136, epsilon = 1e-12);
        assert_abs_diff_eq!(t.total(), 1.0, epsilon = 1e-12);
        let last = d.conditional_event_probs(10).unwrap();
        assert_eq!(last.len(), 1);
        assert_abs_diff_eq!(last.total(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            d.conditional_event_probs(5).unwrap().total(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hazard_route_matches_joint_route() {
        let d = b1();
        let (h1, h2) = d.hazard_table();
        for x in 1..=10u32 {
            let off = (x - 1) as usize;
            let a = d.conditional_event_probs(x).unwrap();
            let b = conditional_probs_from_hazards(x, &h1[off..], &h2[off..]).unwrap();
            for j in x..=10 {
                for c in CauseId::ALL {
                    assert_abs_diff_eq!(
                        a.get(j, c).unwrap(),
                        b.get(j, c).unwrap(),
                        epsilon = 1e-12
                    );
                }
            }
            assert_abs_diff_eq!(b.residual, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(CompetingRisksDistribution::new(3, 2, vec![], Vec::<f64>::new()).is_err());
        assert!(CompetingRisksDistribution::new(1, 2, vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
        assert!(CompetingRisksDistribution::new(1, 2, vec![-0.5, 1.5], vec![0.5, 0.5]).is_err());
        assert!(CompetingRisksDistribution::new(1, 2, vec![0.5, 0.5], vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let d = b1();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"min_age\":1"));
        let back: CompetingRisksDistribution<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"min_age":1,"max_age":2,"pmf":[0.2,0.2],"cause1_share":[0.5,0.5]}"#;
        assert!(serde_json::from_str::<CompetingRisksDistribution<f64>>(bad).is_err());
    }

    #[test]
    fn retention_probability_is_0864() {
        let a: f64 = TruncationLaw::table_b1().retention_prob(&b1());
        assert_abs_diff_eq!(a, 0.864, epsilon = 1e-12);
    }

    #[test]
    fn window_prob_counts_truncation_support() {
        let law = TruncationLaw::table_b1();
        assert_abs_diff_eq!(law.window_prob::<f64>(1), 0.2);
        assert_abs_diff_eq!(law.window_prob::<f64>(5), 1.0);
        assert_abs_diff_eq!(law.window_prob::<f64>(6), 1.0);
        assert_abs_diff_eq!(law.window_prob::<f64>(7), 0.8);
        assert_abs_diff_eq!(law.window_prob::<f64>(10), 0.2);
        assert_abs_diff_eq!(law.window_prob::<f64>(11), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let d = CompetingRisksDistribution::<f32>::table_b1();
        assert!((d.all_cause_hazard(2).unwrap() - 0.0625).abs() < 1e-6);
    }
}
