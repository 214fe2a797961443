//! Cause-specific hazard estimation for left-truncated, right-censored
//! discrete lifetimes, with asymptotic variances and log-scale confidence
//! intervals.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ObservedLoan;
use crate::risk_model::CauseId;
use crate::scalar::Real;

/// Inclusive age range for which estimates are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeWindow {
    pub lo: u32,
    pub hi: u32,
}

impl AgeWindow {
    /// Ages with reliable estimates in typical 72-month auto pools.
    pub const REPORTING: AgeWindow = AgeWindow { lo: 10, hi: 55 };

    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo < 1 || hi < lo {
            return Err(Error::InvalidInput(format!(
                "age window [{lo}, {hi}] invalid"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Smallest window covering every observation.
    pub fn covering(obs: &[ObservedLoan]) -> Result<Self> {
        let lo = obs
            .iter()
            .map(|o| o.entry_age)
            .min()
            .ok_or(Error::Empty("observations"))?;
        let hi = obs
            .iter()
            .map(|o| o.exit_age)
            .max()
            .ok_or(Error::Empty("observations"))?;
        Self::new(lo.max(1), hi.max(lo.max(1)))
    }

    pub fn contains(&self, age: u32) -> bool {
        self.lo <= age && age <= self.hi
    }

    pub fn ages(&self) -> std::ops::RangeInclusive<u32> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intersect(&self, other: &AgeWindow) -> Option<AgeWindow> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(AgeWindow { lo, hi })
    }
}

/// At-risk and event counts over a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskCounts {
    pub window: AgeWindow,
    pub n: usize,
    pub at_risk: Vec<u64>,
    pub default_events: Vec<u64>,
    pub prepay_events: Vec<u64>,
}

impl RiskCounts {
    /// Counts in one pass using a difference array for the risk sets.
    pub fn tally(obs: &[ObservedLoan], window: AgeWindow) -> Self {
        let len = window.len();
        let mut diff = vec![0i64; len + 1];
        let mut default_events = vec![0u64; len];
        let mut prepay_events = vec![0u64; len];
        for o in obs {
            let lo = o.entry_age.max(window.lo);
            let hi = o.exit_age.min(window.hi);
            if lo <= hi {
                diff[(lo - window.lo) as usize] += 1;
                diff[(hi - window.lo) as usize + 1] -= 1;
            }
            if let Some(c) = o.cause {
                if window.contains(o.exit_age) {
                    let i = (o.exit_age - window.lo) as usize;
                    match c {
                        CauseId::Default => default_events[i] += 1,
                        CauseId::Prepay => prepay_events[i] += 1,
                    }
                }
            }
        }
        let mut run = 0i64;
        let at_risk = diff[..len]
            .iter()
            .map(|d| {
                run += d;
                run as u64
            })
            .collect();
        Self {
            window,
            n: obs.len(),
            at_risk,
            default_events,
            prepay_events,
        }
    }

    pub fn events(&self, cause: CauseId) -> &[u64] {
        match cause {
            CauseId::Default => &self.default_events,
            CauseId::Prepay => &self.prepay_events,
        }
    }
}

/// Symmetric-on-the-log-scale interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct HazardRow<T> {
    pub age: u32,
    pub events: u64,
    pub at_risk: u64,
    pub hazard: T,
    /// Estimated variance of the hazard estimate.
    pub variance: T,
    /// Absent where the log-scale interval is undefined.
    pub ci: Option<Interval<T>>,
    pub interpolated: bool,
}

/// Per-age cause-specific hazard estimates for one band. Ages with an empty
/// risk set have no row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct HazardCurve<T> {
    pub band: String,
    pub cause: CauseId,
    pub n: usize,
    pub window: AgeWindow,
    pub theta: T,
    pub rows: Vec<HazardRow<T>>,
}

impl<T: Real> HazardCurve<T> {
    pub fn row(&self, age: u32) -> Option<&HazardRow<T>> {
        self.rows
            .binary_search_by_key(&age, |r| r.age)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn hazard(&self, age: u32) -> Option<T> {
        self.row(age).map(|r| r.hazard)
    }

    /// Recomputes every interval at significance level `theta`.
    pub fn with_theta(mut self, theta: T) -> Result<Self> {
        let z = z_two_sided(theta)?;
        for r in &mut self.rows {
            r.ci = if r.interpolated {
                None
            } else {
                log_ci_counts(r.events, r.at_risk, z)
            };
        }
        self.theta = theta;
        Ok(self)
    }

    /// Empirical fractions `(f, U)` at a row.
    pub fn fractions(&self, row: &HazardRow<T>) -> (T, T) {
        let n = T::from_count(self.n);
        (
            T::from_count(row.events as usize) / n,
            T::from_count(row.at_risk as usize) / n,
        )
    }
}

/// Default significance level (95% intervals).
pub const DEFAULT_THETA: f64 = 0.05;

/// Estimates the cause-specific hazard at every age of `window`:
/// events of `cause` exiting at `x` over loans with `entry <= x <= exit`.
pub fn estimate_csh<T: Real>(
    obs: &[ObservedLoan],
    cause: CauseId,
    window: AgeWindow,
    theta: T,
) -> Result<HazardCurve<T>> {
    if obs.is_empty() {
        return Err(Error::Empty("observations"));
    }
    let counts = RiskCounts::tally(obs, window);
    curve_from_counts(&counts, cause, "", theta)
}

pub fn curve_from_counts<T: Real>(
    counts: &RiskCounts,
    cause: CauseId,
    band: &str,
    theta: T,
) -> Result<HazardCurve<T>> {
    let z = z_two_sided(theta)?;
    let events = counts.events(cause);
    let rows = counts
        .window
        .ages()
        .zip(counts.at_risk.iter().zip(events))
        .filter(|(_, (&a, _))| a > 0)
        .map(|(age, (&at_risk, &events))| HazardRow {
            age,
            events,
            at_risk,
            hazard: T::from_count(events as usize) / T::from_count(at_risk as usize),
            variance: variance_from_counts(events, at_risk),
            ci: log_ci_counts(events, at_risk, z),
            interpolated: false,
        })
        .collect();
    Ok(HazardCurve {
        band: band.to_string(),
        cause,
        n: counts.n,
        window: counts.window,
        theta,
        rows,
    })
}

/// All-cause hazard estimate (events of either cause over the risk set).
pub fn estimate_all_cause<T: Real>(
    obs: &[ObservedLoan],
    window: AgeWindow,
) -> Result<Vec<(u32, T)>> {
    if obs.is_empty() {
        return Err(Error::Empty("observations"));
    }
    let c = RiskCounts::tally(obs, window);
    Ok(window
        .ages()
        .enumerate()
        .filter(|(i, _)| c.at_risk[*i] > 0)
        .map(|(i, age)| {
            let e = c.default_events[i] + c.prepay_events[i];
            (
                age,
                T::from_count(e as usize) / T::from_count(c.at_risk[i] as usize),
            )
        })
        .collect())
}

/// `f (U - f) / (n U^3)` from the empirical event and at-risk fractions.
pub fn asymptotic_variance_from_fractions<T: Real>(f: T, u: T, n: usize) -> Result<T> {
    if !(u > T::zero()) {
        return Err(Error::InvalidInput("zero at-risk fraction".into()));
    }
    Ok(f * (u - f) / (T::from_count(n) * u * u * u))
}

fn variance_from_counts<T: Real>(events: u64, at_risk: u64) -> T {
    // n cancels: f(U-f)/(nU^3) = e(a-e)/a^3
    let e = T::from_count(events as usize);
    let a = T::from_count(at_risk as usize);
    e * (a - e) / (a * a * a)
}

/// Per-age variances of a curve's hazard estimates.
pub fn asymptotic_variance<T: Real>(curve: &HazardCurve<T>) -> Result<Vec<(u32, T)>> {
    curve
        .rows
        .iter()
        .map(|r| {
            let (f, u) = curve.fractions(r);
            Ok((r.age, asymptotic_variance_from_fractions(f, u, curve.n)?))
        })
        .collect()
}

/// `exp(ln(f/U) +/- z sqrt((U - f) / (n U f)))`; `None` unless `0 < f < U`.
pub fn log_ci_from_fractions<T: Real>(
    f: T,
    u: T,
    n: usize,
    theta: T,
) -> Result<Option<Interval<T>>> {
    let z = z_two_sided(theta)?;
    if !(f > T::zero() && f < u) {
        return Ok(None);
    }
    let half = z * ((u - f) / (T::from_count(n) * u * f)).sqrt();
    let centre = (f / u).ln();
    Ok(Some(Interval {
        lo: (centre - half).exp(),
        hi: (centre + half).exp(),
    }))
}

fn log_ci_counts<T: Real>(events: u64, at_risk: u64, z: T) -> Option<Interval<T>> {
    if events == 0 || events >= at_risk {
        return None;
    }
    let e = T::from_count(events as usize);
    let a = T::from_count(at_risk as usize);
    let half = z * ((a - e) / (a * e)).sqrt();
    let centre = (e / a).ln();
    Some(Interval {
        lo: (centre - half).exp(),
        hi: (centre + half).exp(),
    })
}

/// Per-age intervals at level `theta`.
pub fn confidence_interval<T: Real>(
    curve: &HazardCurve<T>,
    theta: T,
) -> Result<Vec<(u32, Option<Interval<T>>)>> {
    let z = z_two_sided(theta)?;
    Ok(curve
        .rows
        .iter()
        .map(|r| (r.age, log_ci_counts(r.events, r.at_risk, z)))
        .collect())
}

/// `z_{1 - theta/2}`.
pub fn z_two_sided<T: Real>(theta: T) -> Result<T> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::InvalidInput(format!(
            "significance level {theta} not in (0, 1)"
        )));
    }
    Ok(T::lit(normal_quantile(1.0 - theta.as_f64() / 2.0)))
}

/// Inverse standard normal CDF by Acklam's rational approximation
/// (absolute error below 1.2e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Fills zero-event ages with a constant hazard: the latest preceding
/// non-zero value, or the first non-zero value for a leading gap.
/// Filled rows are flagged and lose their interval.
pub fn interpolate_zero_defaults<T: Real>(curve: &HazardCurve<T>) -> Result<HazardCurve<T>> {
    let first = curve
        .rows
        .iter()
        .find(|r| r.events > 0)
        .map(|r| r.hazard)
        .ok_or_else(|| Error::InvalidInput("curve has no events to interpolate from".into()))?;
    let mut out = curve.clone();
    let mut carry = first;
    for r in &mut out.rows {
        if r.events > 0 {
            carry = r.hazard;
        } else {
            r.hazard = carry;
            r.ci = None;
            r.interpolated = true;
        }
    }
    Ok(out)
}

pub const CURVE_COLUMNS: [&str; 10] = [
    "band",
    "cause",
    "age",
    "events",
    "at_risk",
    "hazard",
    "var",
    "ci_lo",
    "ci_hi",
    "interpolated",
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct CurveRecord<T> {
    band: String,
    cause: CauseId,
    age: u32,
    events: u64,
    at_risk: u64,
    hazard: T,
    var: T,
    ci_lo: Option<T>,
    ci_hi: Option<T>,
    interpolated: bool,
}

pub fn write_curves<T: Real, W: Write>(out: W, curves: &[&HazardCurve<T>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CURVE_COLUMNS)?;
    for c in curves {
        for r in &c.rows {
            w.serialize(CurveRecord {
                band: c.band.clone(),
                cause: c.cause,
                age: r.age,
                events: r.events,
                at_risk: r.at_risk,
                hazard: r.hazard,
                var: r.variance,
                ci_lo: r.ci.map(|i| i.lo),
                ci_hi: r.ci.map(|i| i.hi),
                interpolated: r.interpolated,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads curve CSV rows, one curve per `(band, cause)` in order of first
/// appearance. The window of each curve is its observed age span and `n`
/// is unknown (reported as the largest risk set).
pub fn read_curves<T: Real, R: Read>(input: R, theta: T) -> Result<Vec<HazardCurve<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut recs = rdr.records();
    let header = recs.next().ok_or(Error::Empty("curve file"))??;
    for name in CURVE_COLUMNS {
        if !header.iter().any(|h| h == name) {
            return Err(Error::Schema(format!("missing column '{name}'")));
        }
    }
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    let mut curves: Vec<HazardCurve<T>> = Vec::new();
    for rec in recs {
        let mut rec = rec?;
        rec.trim();
        let row: CurveRecord<T> = rec
            .deserialize(Some(&csv::StringRecord::from(header.clone())))
            .map_err(|e| Error::Schema(e.to_string()))?;
        let ci = match (row.ci_lo, row.ci_hi) {
            (Some(lo), Some(hi)) => Some(Interval { lo, hi }),
            (None, None) => None,
            _ => {
                return Err(Error::Schema(format!(
                    "age {}: half-specified interval",
                    row.age
                )))
            }
        };
        let pos = curves
            .iter()
            .position(|c| c.band == row.band && c.cause == row.cause);
        let curve = match pos {
            Some(i) => &mut curves[i],
            None => {
                curves.push(HazardCurve {
                    band: row.band.clone(),
                    cause: row.cause,
                    n: 0,
                    window: AgeWindow {
                        lo: row.age.max(1),
                        hi: row.age.max(1),
                    },
                    theta,
                    rows: Vec::new(),
                });
                curves.last_mut().expect("just pushed")
            }
        };
        if curve.rows.last().is_some_and(|r| r.age >= row.age) {
            return Err(Error::Schema(format!(
                "ages not increasing at age {}",
                row.age
            )));
        }
        curve.window.lo = curve.window.lo.min(row.age);
        curve.window.hi = curve.window.hi.max(row.age);
        curve.n = curve.n.max(row.at_risk as usize);
        curve.rows.push(HazardRow {
            age: row.age,
            events: row.events,
            at_risk: row.at_risk,
            hazard: row.hazard,
            variance: row.var,
            ci,
            interpolated: row.interpolated,
        });
    }
    if curves.is_empty() {
        return Err(Error::Empty("curve file"));
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn four() -> Vec<ObservedLoan> {
        vec![
            ObservedLoan::event(1, 2, CauseId::Default).unwrap(),
            ObservedLoan::event(1, 2, CauseId::Prepay).unwrap(),
            ObservedLoan::censored(1, 3).unwrap(),
            ObservedLoan::censored(1, 3).unwrap(),
        ]
    }

    fn w(lo: u32, hi: u32) -> AgeWindow {
        AgeWindow::new(lo, hi).unwrap()
    }

    #[test]
    fn hand_counted_example() {
        let c = estimate_csh::<f64>(&four(), CauseId::Default, w(1, 3), 0.05).unwrap();
        let r = c.row(2).unwrap();
        assert_eq!((r.at_risk, r.events), (4, 1));
        assert_eq!(r.hazard, 0.25);
        let p = estimate_csh::<f64>(&four(), CauseId::Prepay, w(1, 3), 0.05).unwrap();
        assert_eq!(p.hazard(2), Some(0.25));
        assert_eq!(c.row(3).unwrap().at_risk, 2);
        assert_eq!(c.hazard(3), Some(0.0));
    }

    #[test]
    fn no_cause_events_gives_zero_curve() {
        let obs = vec![
            ObservedLoan::event(1, 2, CauseId::Prepay).unwrap(),
            ObservedLoan::censored(1, 4).unwrap(),
        ];
        let c = estimate_csh::<f64>(&obs, CauseId::Default, w(1, 4), 0.05).unwrap();
        assert!(c.rows.iter().all(|r| r.hazard == 0.0 && r.ci.is_none()));
    }

    #[test]
    fn empty_risk_set_is_absent() {
        let obs = vec![ObservedLoan::censored(5, 6).unwrap()];
        let c = estimate_csh::<f64>(&obs, CauseId::Default, w(1, 8), 0.05).unwrap();
        let ages: Vec<u32> = c.rows.iter().map(|r| r.age).collect();
        assert_eq!(ages, vec![5, 6]);
        assert!(estimate_csh::<f64>(&[], CauseId::Default, w(1, 8), 0.05).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_abs_diff_eq!(
            asymptotic_variance_from_fractions(0.10, 0.50, 100).unwrap(),
            0.0032,
            epsilon = 1e-15
        );
        assert_eq!(
            asymptotic_variance_from_fractions(0.5, 0.5, 100).unwrap(),
            0.0
        );
        assert_eq!(
            asymptotic_variance_from_fractions(0.0, 0.5, 100).unwrap(),
            0.0
        );
        assert!(asymptotic_variance_from_fractions(0.0, 0.0, 100).is_err());
    }

    #[test]
    fn variance_of_curve_matches_fraction_form() {
        let mut obs = vec![ObservedLoan::censored(1, 1).unwrap(); 50];
        obs.extend(vec![
            ObservedLoan::event(2, 2, CauseId::Default).unwrap();
            10
        ]);
        obs.extend(vec![ObservedLoan::censored(2, 3).unwrap(); 40]);
        let c = estimate_csh::<f64>(&obs, CauseId::Default, w(2, 2), 0.05).unwrap();
        let v = asymptotic_variance(&c).unwrap();
        assert_abs_diff_eq!(v[0].1, 0.0032, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rows[0].variance, 0.0032, epsilon = 1e-15);
        // same data: n=100, f=0.1, U=0.5
        let ci = c.rows[0].ci.unwrap();
        assert_abs_diff_eq!(
            ci.lo,
            0.2 * (-1.959964 * 0.08f64.sqrt()).exp(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(ci.lo, 0.1149, epsilon = 5e-5);
        assert_abs_diff_eq!(ci.hi, 0.3482, epsilon = 5e-5);
    }

    #[test]
    fn ci_examples() {
        let ci = log_ci_from_fractions(0.10, 0.50, 100, 0.05)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(ci.lo, 0.1149, epsilon = 5e-5);
        assert_abs_diff_eq!(ci.hi, 0.3482, epsilon = 5e-5);
        assert!(ci.lo > 0.0 && ci.hi < 1.0 && ci.contains(0.2));
        let narrow = log_ci_from_fractions(0.10, 0.50, 100, 1.0 - 1e-12)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(narrow.lo, 0.2, epsilon = 1e-9);
        assert_abs_diff_eq!(narrow.hi, 0.2, epsilon = 1e-9);
        assert!(log_ci_from_fractions(0.5, 0.5, 100, 0.05)
            .unwrap()
            .is_none());
        assert!(log_ci_from_fractions(0.0, 0.5, 100, 0.05)
            .unwrap()
            .is_none());
        assert!(log_ci_from_fractions(0.1, 0.5, 100, 0.0).is_err());
    }

    #[test]
    fn quantile_known_values() {
        assert_abs_diff_eq!(
            normal_quantile(0.975),
            1.959_963_984_540_054,
            epsilon = 1.5e-7
        );
        assert_abs_diff_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            normal_quantile(0.95),
            1.644_853_626_951_472,
            epsilon = 1.5e-7
        );
        assert_abs_diff_eq!(
            normal_quantile(0.01),
            -2.326_347_874_040_841,
            epsilon = 1.5e-7
        );
    }

    #[test]
    fn quantile_against_statrs() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            assert!(
                (normal_quantile(p) - n.inverse_cdf(p)).abs() <= 1.5e-7,
                "p={p}"
            );
        }
        for p in [1e-6, 1e-4, 0.02, 0.0243, 0.9757, 0.999_99] {
            assert!(
                (normal_quantile(p) - n.inverse_cdf(p)).abs() <= 1.5e-7,
                "p={p}"
            );
        }
    }

    fn synthetic(hazards: &[(u64, u64)]) -> HazardCurve<f64> {
        HazardCurve {
            band: "x".into(),
            cause: CauseId::Default,
            n: 1000,
            window: w(1, hazards.len() as u32),
            theta: 0.05,
            rows: hazards
                .iter()
                .enumerate()
                .map(|(i, &(e, a))| HazardRow {
                    age: i as u32 + 1,
                    events: e,
                    at_risk: a,
                    hazard: e as f64 / a as f64,
                    variance: 0.0,
                    ci: None,
                    interpolated: false,
                })
                .collect(),
        }
    }

    #[test]
    fn interpolation_carries_forward() {
        let c = synthetic(&[(2, 100), (0, 100), (3, 100)]);
        let i = interpolate_zero_defaults(&c).unwrap();
        let h: Vec<f64> = i.rows.iter().map(|r| r.hazard).collect();
        assert_eq!(h, vec![0.02, 0.02, 0.03]);
        assert_eq!(
            i.rows.iter().map(|r| r.interpolated).collect::<Vec<_>>(),
            vec![false, true, false]
        );
    }

    #[test]
    fn interpolation_identity_and_leading_gap() {
        let c = synthetic(&[(2, 100), (3, 100)]);
        assert_eq!(interpolate_zero_defaults(&c).unwrap(), c);
        let c = synthetic(&[(0, 100), (5, 100)]);
        let i = interpolate_zero_defaults(&c).unwrap();
        assert_eq!(i.rows[0].hazard, 0.05);
        assert!(i.rows[0].interpolated && !i.rows[1].interpolated);
        assert!(interpolate_zero_defaults(&synthetic(&[(0, 100), (0, 50)])).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let c = estimate_csh::<f64>(&four(), CauseId::Default, w(1, 3), 0.05).unwrap();
        let mut buf = Vec::new();
        write_curves(&mut buf, &[&c]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("band,cause,age,events,at_risk,hazard,var,ci_lo,ci_hi,interpolated")
        );
        let back = read_curves::<f64, _>(buf.as_slice(), 0.05).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].rows, c.rows);
    }

    #[test]
    fn curve_csv_missing_column() {
        let bad = "band,cause,age,events\nx,default,1,0\n";
        assert!(matches!(
            read_curves::<f64, _>(bad.as_bytes(), 0.05),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn with_theta_narrows_monotonically() {
        let mut obs = vec![ObservedLoan::event(1, 1, CauseId::Default).unwrap(); 20];
        obs.extend(vec![ObservedLoan::censored(1, 2).unwrap(); 80]);
        let c = estimate_csh::<f64>(&obs, CauseId::Default, w(1, 1), 0.05).unwrap();
        let wide = c.rows[0].ci.unwrap();
        let narrow = c.clone().with_theta(0.10).unwrap().rows[0].ci.unwrap();
        assert!(narrow.lo > wide.lo && narrow.hi < wide.hi);
    }
}
