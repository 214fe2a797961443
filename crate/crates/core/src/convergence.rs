//! Interval-overlap test between two bands' hazard estimates and the
//! credit-risk convergence matrix built from it.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{AgeWindow, HazardCurve, HazardRow, Interval};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
    /// At least one interval is undefined at this age.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFired {
    OverlapRun,
    BothZero,
    None,
}

/// Fail to reject equal hazards iff the closed intervals intersect.
pub fn overlap_test<T: Real>(a: Interval<T>, b: Interval<T>) -> Decision {
    if a.lo <= b.hi && b.lo <= a.hi {
        Decision::FailToReject
    } else {
        Decision::Reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceRule {
    pub min_test_age: u32,
    pub run_length: u32,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self {
            min_test_age: 10,
            run_length: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AgeDecision<T> {
    pub age: u32,
    pub hazard_a: Option<T>,
    pub ci_a: Option<Interval<T>>,
    pub hazard_b: Option<T>,
    pub ci_b: Option<Interval<T>>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ConvergenceResult<T> {
    pub band_a: String,
    pub band_b: String,
    pub decisions: Vec<AgeDecision<T>>,
    pub convergence_month: Option<u32>,
    pub rule_fired: RuleFired,
}

fn no_events<T>(row: Option<&HazardRow<T>>) -> bool {
    row.is_none_or(|r| r.events == 0)
}

/// Earliest age at or after `rule.min_test_age` where either
/// `run_length` consecutive ages fail to reject, or from which both curves
/// record no events through the end of the shared window.
pub fn convergence_point<T: Real>(
    a: &HazardCurve<T>,
    b: &HazardCurve<T>,
    rule: ConvergenceRule,
) -> Result<ConvergenceResult<T>> {
    let grid: AgeWindow = a.window.intersect(&b.window).ok_or_else(|| {
        Error::IncompatibleGrids(format!(
            "{} [{}, {}] and {} [{}, {}] do not overlap",
            a.band, a.window.lo, a.window.hi, b.band, b.window.lo, b.window.hi
        ))
    })?;
    if rule.run_length == 0 {
        return Err(Error::InvalidInput("run length must be positive".into()));
    }

    let decisions: Vec<AgeDecision<T>> = grid
        .ages()
        .map(|age| {
            let (ra, rb) = (a.row(age), b.row(age));
            let ci_a = ra.and_then(|r| r.ci);
            let ci_b = rb.and_then(|r| r.ci);
            let decision = match (ci_a, ci_b) {
                (Some(x), Some(y)) => overlap_test(x, y),
                _ => Decision::Undefined,
            };
            AgeDecision {
                age,
                hazard_a: ra.map(|r| r.hazard),
                ci_a,
                hazard_b: rb.map(|r| r.hazard),
                ci_b,
                decision,
            }
        })
        .collect();

    let start = rule.min_test_age.max(grid.lo);
    let mut run_start = None;
    let mut run = 0;
    for d in decisions.iter().filter(|d| d.age >= start) {
        if d.decision == Decision::FailToReject {
            if run == 0 {
                run_start = Some(d.age);
            }
            run += 1;
            if run == rule.run_length {
                break;
            }
        } else {
            run = 0;
            run_start = None;
        }
    }
    let overlap = if run == rule.run_length {
        run_start
    } else {
        None
    };

    let mut zero_from = None;
    for age in grid.ages().rev() {
        if age < start || !(no_events(a.row(age)) && no_events(b.row(age))) {
            break;
        }
        zero_from = Some(age);
    }

    let (convergence_month, rule_fired) = match (overlap, zero_from) {
        (Some(o), Some(z)) if z < o => (Some(z), RuleFired::BothZero),
        (Some(o), _) => (Some(o), RuleFired::OverlapRun),
        (None, Some(z)) => (Some(z), RuleFired::BothZero),
        (None, None) => (None, RuleFired::None),
    };

    Ok(ConvergenceResult {
        band_a: a.band.clone(),
        band_b: b.band.clone(),
        decisions,
        convergence_month,
        rule_fired,
    })
}

/// Upper-triangular matrix of convergence months over an ordered band list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub bands: Vec<String>,
    pub rule: ConvergenceRule,
    /// Row-major; only `i <= j` entries are meaningful.
    entries: Vec<Vec<Option<u32>>>,
}

impl TransitionMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<u32> {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        self.entries[i][j]
    }

    pub fn index_of(&self, band: &str) -> Option<usize> {
        self.bands.iter().position(|b| b == band)
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// CSV with the band list as header; lower triangle blank and
    /// non-converging pairs written as `none`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["band".to_string()];
        header.extend(self.bands.iter().cloned());
        w.write_record(&header)?;
        for (i, band) in self.bands.iter().enumerate() {
            let mut rec = vec![band.clone()];
            for j in 0..self.bands.len() {
                rec.push(if j < i {
                    String::new()
                } else {
                    self.entries[i][j].map_or_else(|| "none".to_string(), |m| m.to_string())
                });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise convergence months between default-hazard curves, looked up by
/// band label in `bands` order. Also returns every off-diagonal pair result
/// for audit.
pub fn transition_matrix<T: Real>(
    bands: &[&str],
    curves: &[HazardCurve<T>],
    rule: ConvergenceRule,
) -> Result<(TransitionMatrix, Vec<ConvergenceResult<T>>)> {
    if bands.len() < 2 {
        return Err(Error::InvalidInput("need at least two bands".into()));
    }
    let lookup = bands
        .iter()
        .map(|b| {
            curves
                .iter()
                .find(|c| c.band == *b)
                .ok_or_else(|| Error::MissingBand(b.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = bands.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let results = pairs
        .par_iter()
        .map(|&(i, j)| convergence_point(lookup[i], lookup[j], rule))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = vec![vec![None; k]; k];
    for (i, row) in entries.iter_mut().enumerate() {
        row[i] = Some(rule.min_test_age);
    }
    for (&(i, j), r) in pairs.iter().zip(&results) {
        entries[i][j] = r.convergence_month;
    }
    Ok((
        TransitionMatrix {
            bands: bands.iter().map(|b| b.to_string()).collect(),
            rule,
            entries,
        },
        results,
    ))
}

/// Per-age decision trace for a set of pair results.
pub fn write_trace<T: Real, W: Write>(out: W, results: &[ConvergenceResult<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "band_a", "band_b", "age", "hazard_a", "ci_lo_a", "ci_hi_a", "hazard_b", "ci_lo_b",
        "ci_hi_b", "decision",
    ])?;
    let opt = |v: Option<T>| v.map_or_else(String::new, |v| v.to_string());
    for r in results {
        for d in &r.decisions {
            let decision = match d.decision {
                Decision::Reject => "reject",
                Decision::FailToReject => "fail_to_reject",
                Decision::Undefined => "undefined",
            };
            w.write_record([
                r.band_a.clone(),
                r.band_b.clone(),
                d.age.to_string(),
                opt(d.hazard_a),
                opt(d.ci_a.map(|c| c.lo)),
                opt(d.ci_a.map(|c| c.hi)),
                opt(d.hazard_b),
                opt(d.ci_b.map(|c| c.lo)),
                opt(d.ci_b.map(|c| c.hi)),
                decision.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
