//! Simulation study of the estimator under left truncation and right
//! censoring with a known competing-risks lifetime distribution.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{curve_from_counts, AgeWindow, RiskCounts};
use crate::ingest::ObservedLoan;
use crate::risk_model::{CauseId, CompetingRisksDistribution, TruncationLaw};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SimConfig<T> {
    pub dist: CompetingRisksDistribution<T>,
    pub trunc: TruncationLaw,
    /// Lifetimes drawn per replicate, before truncated draws are discarded.
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub theta: T,
}

impl<T: Real> SimConfig<T> {
    /// Table B1 lifetimes, `Y ~ U{1..5}`, `tau = 5`.
    pub fn table_b1(n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            dist: CompetingRisksDistribution::table_b1(),
            trunc: TruncationLaw::table_b1(),
            n,
            replicates,
            seed,
            theta: T::lit(crate::estimator::DEFAULT_THETA),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.replicates == 0 {
            return Err(Error::InvalidInput(
                "cohort size and replicate count must be at least 1".into(),
            ));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::InvalidInput(format!(
                "significance level {} not in (0, 1)",
                self.theta
            )));
        }
        self.trunc.validate()
    }

    fn window(&self) -> AgeWindow {
        AgeWindow {
            lo: self.dist.min_age(),
            hi: self.dist.max_age(),
        }
    }
}

/// Random stream for one replicate: the seeded generator on its own stream.
fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Smallest index `i` with `u < cdf[i]`.
fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

struct Sampler {
    min_age: u32,
    cdf: Vec<f64>,
    share: Vec<f64>,
    trunc: TruncationLaw,
}

impl Sampler {
    fn new<T: Real>(config: &SimConfig<T>) -> Self {
        let d = &config.dist;
        let mut acc = 0.0;
        let cdf = d
            .ages()
            .map(|x| {
                acc += d.pmf(x).map_or(0.0, |p| p.as_f64());
                acc
            })
            .collect();
        let share = d
            .ages()
            .map(|x| d.cause1_share(x).map_or(0.0, |p| p.as_f64()))
            .collect();
        Self {
            min_age: d.min_age(),
            cdf,
            share,
            trunc: config.trunc,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<ObservedLoan> {
        let y = rng.gen_range(self.trunc.lo..=self.trunc.hi);
        let i = inverse_cdf(&self.cdf, rng.gen::<f64>());
        let x = self.min_age + i as u32;
        let cause = if rng.gen::<f64>() < self.share[i] {
            CauseId::Default
        } else {
            CauseId::Prepay
        };
        if y > x {
            return None;
        }
        let c = y + self.trunc.censor_offset;
        Some(if x <= c {
            ObservedLoan {
                entry_age: y,
                exit_age: x,
                cause: Some(cause),
            }
        } else {
            ObservedLoan {
                entry_age: y,
                exit_age: c,
                cause: None,
            }
        })
    }
}

/// Retained observations of one replicate cohort.
pub fn simulate_cohort<T: Real>(config: &SimConfig<T>, replicate: usize) -> Vec<ObservedLoan> {
    let sampler = Sampler::new(config);
    let mut rng = replicate_rng(config.seed, replicate);
    (0..config.n)
        .filter_map(|_| sampler.draw(&mut rng))
        .collect()
}

/// `f_{*,tau}(x) = Pr(X = x, Z = i) Pr(Y <= x <= C) / alpha`.
pub fn truncated_event_density<T: Real>(
    dist: &CompetingRisksDistribution<T>,
    trunc: &TruncationLaw,
    x: u32,
    cause: CauseId,
) -> Result<T> {
    let alpha = retention(dist, trunc)?;
    Ok(dist.joint(x, cause)? * trunc.window_prob::<T>(x) / alpha)
}

/// `U_tau(x) = Pr(Y <= x <= C) Pr(X >= x) / alpha`.
pub fn truncated_at_risk<T: Real>(
    dist: &CompetingRisksDistribution<T>,
    trunc: &TruncationLaw,
    x: u32,
) -> Result<T> {
    let alpha = retention(dist, trunc)?;
    Ok(trunc.window_prob::<T>(x) * dist.survival(x)? / alpha)
}

/// `lambda^{0i}_tau(x) = f_{*,tau}(x) / U_tau(x)`; `None` where `U_tau(x) = 0`.
pub fn truncated_hazard<T: Real>(
    dist: &CompetingRisksDistribution<T>,
    trunc: &TruncationLaw,
    x: u32,
    cause: CauseId,
) -> Result<Option<T>> {
    let u = truncated_at_risk(dist, trunc, x)?;
    if u == T::zero() {
        return Ok(None);
    }
    Ok(Some(truncated_event_density(dist, trunc, x, cause)? / u))
}

fn retention<T: Real>(dist: &CompetingRisksDistribution<T>, trunc: &TruncationLaw) -> Result<T> {
    let alpha = trunc.retention_prob(dist);
    if alpha == T::zero() {
        return Err(Error::InvalidInput(
            "truncation law discards every lifetime".into(),
        ));
    }
    Ok(alpha)
}

/// Aggregate behaviour of the estimator at one age for one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AgeCauseStats<T> {
    pub age: u32,
    pub cause: CauseId,
    pub true_hazard: T,
    pub event_density: T,
    pub at_risk_density: T,
    pub mean_estimate: T,
    /// Sample variance across replicates; `None` with fewer than two.
    pub empirical_variance: Option<T>,
    /// `f (U - f) / (n U^3)` at the truth, with `n` the expected retained
    /// cohort size.
    pub asymptotic_variance: T,
    pub mc_standard_error: Option<T>,
    /// Share of replicates whose interval covers the truth; replicates with
    /// no interval count as misses.
    pub coverage: T,
    /// Replicates with at least one loan at risk.
    pub defined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct StudyReport<T> {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub theta: T,
    pub alpha: T,
    pub alpha_hat: T,
    pub truncation_fraction: T,
    pub variance_defined: bool,
    pub rows: Vec<AgeCauseStats<T>>,
}

impl<T: Real> StudyReport<T> {
    pub fn get(&self, age: u32, cause: CauseId) -> Option<&AgeCauseStats<T>> {
        self.rows.iter().find(|r| r.age == age && r.cause == cause)
    }
}

struct ReplicateSummary<T> {
    retained: usize,
    /// Per cause, per window age: estimate and interval coverage.
    cells: [Vec<Option<(T, bool)>>; 2],
}

fn summarize<T: Real>(
    config: &SimConfig<T>,
    truth: &[[Option<T>; 2]],
    replicate: usize,
) -> Result<ReplicateSummary<T>> {
    let obs = simulate_cohort(config, replicate);
    let window = config.window();
    let counts = RiskCounts::tally(&obs, window);
    let mut cells: [Vec<Option<(T, bool)>>; 2] =
        [vec![None; window.len()], vec![None; window.len()]];
    for (ci, cause) in CauseId::ALL.into_iter().enumerate() {
        let curve = curve_from_counts(&counts, cause, "", config.theta)?;
        for row in &curve.rows {
            let i = (row.age - window.lo) as usize;
            let covered = match (row.ci, truth[i][ci]) {
                (Some(ci), Some(t)) => ci.contains(t),
                _ => false,
            };
            cells[ci][i] = Some((row.hazard, covered));
        }
    }
    Ok(ReplicateSummary {
        retained: obs.len(),
        cells,
    })
}

/// Runs every replicate and compares the estimates to the analytic truth.
pub fn run_study<T: Real>(config: &SimConfig<T>) -> Result<StudyReport<T>> {
    config.validate()?;
    let window = config.window();
    let alpha = retention(&config.dist, &config.trunc)?;
    let truth: Vec<[Option<T>; 2]> = window
        .ages()
        .map(|x| {
            Ok([
                truncated_hazard(&config.dist, &config.trunc, x, CauseId::Default)?,
                truncated_hazard(&config.dist, &config.trunc, x, CauseId::Prepay)?,
            ])
        })
        .collect::<Result<_>>()?;

    // collected in replicate order so the reduction below is reproducible
    let runs: Vec<ReplicateSummary<T>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| summarize(config, &truth, r))
        .collect::<Result<_>>()?;

    let r = config.replicates;
    let retained: usize = runs.iter().map(|s| s.retained).sum();
    let alpha_hat = T::from_count(retained) / (T::from_count(config.n) * T::from_count(r));
    let expected_n = alpha * T::from_count(config.n);

    let mut rows = Vec::new();
    for (ci, cause) in CauseId::ALL.into_iter().enumerate() {
        for (i, age) in window.ages().enumerate() {
            let Some(true_hazard) = truth[i][ci] else {
                continue;
            };
            let vals: Vec<T> = runs
                .iter()
                .filter_map(|s| s.cells[ci][i].map(|c| c.0))
                .collect();
            let hits = runs
                .iter()
                .filter(|s| s.cells[ci][i].is_some_and(|c| c.1))
                .count();
            let defined = vals.len();
            let mean = if defined > 0 {
                vals.iter().copied().sum::<T>() / T::from_count(defined)
            } else {
                T::nan()
            };
            let empirical_variance = (defined > 1).then(|| {
                vals.iter().map(|&v| (v - mean).powi(2)).sum::<T>() / T::from_count(defined - 1)
            });
            let f = truncated_event_density(&config.dist, &config.trunc, age, cause)?;
            let u = truncated_at_risk(&config.dist, &config.trunc, age)?;
            rows.push(AgeCauseStats {
                age,
                cause,
                true_hazard,
                event_density: f,
                at_risk_density: u,
                mean_estimate: mean,
                empirical_variance,
                asymptotic_variance: f * (u - f) / (expected_n * u * u * u),
                mc_standard_error: empirical_variance.map(|v| (v / T::from_count(defined)).sqrt()),
                coverage: T::from_count(hits) / T::from_count(r),
                defined,
            });
        }
    }
    Ok(StudyReport {
        n: config.n,
        replicates: r,
        seed: config.seed,
        theta: config.theta,
        alpha,
        alpha_hat,
        truncation_fraction: T::one() - alpha_hat,
        variance_defined: r > 1,
        rows,
    })
}

pub fn write_report_csv<T: Real, W: Write>(out: W, report: &StudyReport<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "age",
        "cause",
        "true_hazard",
        "mean_estimate",
        "empirical_variance",
        "asymptotic_variance",
        "mc_standard_error",
        "coverage",
        "defined",
    ])?;
    let opt = |v: Option<T>| v.map_or_else(String::new, |v| v.to_string());
    for r in &report.rows {
        w.write_record([
            r.age.to_string(),
            r.cause.to_string(),
            r.true_hazard.to_string(),
            r.mean_estimate.to_string(),
            opt(r.empirical_variance),
            r.asymptotic_variance.to_string(),
            opt(r.mc_standard_error),
            r.coverage.to_string(),
            r.defined.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf_uses_strict_inequality() {
        let cdf = [0.25, 0.5, 1.0];
        assert_eq!(inverse_cdf(&cdf, 0.0), 0);
        assert_eq!(inverse_cdf(&cdf, 0.25), 1);
        assert_eq!(inverse_cdf(&cdf, 0.4999), 1);
        assert_eq!(inverse_cdf(&cdf, 0.5), 2);
        assert_eq!(inverse_cdf(&cdf, 0.9999), 2);
    }

    #[test]
    fn retained_fraction_near_alpha() {
        let cfg = SimConfig::<f64>::table_b1(10_000, 1, 7);
        let obs = simulate_cohort(&cfg, 0);
        let frac = obs.len() as f64 / 10_000.0;
        assert!((frac - 0.864).abs() < 0.01, "{frac}");
        assert!(obs
            .iter()
            .all(|o| o.entry_age <= o.exit_age && o.exit_age <= o.entry_age + 5));
    }

    #[test]
    fn degenerate_window_observes_everything() {
        let dist = CompetingRisksDistribution::new(1, 1, vec![1.0], vec![0.5]).unwrap();
        let cfg = SimConfig {
            dist,
            trunc: TruncationLaw::uniform(1, 1, 0).unwrap(),
            n: 100,
            replicates: 1,
            seed: 3,
            theta: 0.05,
        };
        let obs = simulate_cohort(&cfg, 0);
        assert_eq!(obs.len(), 100);
        assert!(obs.iter().all(|o| o.exit_age == 1 && o.cause.is_some()));
    }

    #[test]
    fn cohorts_are_reproducible() {
        let cfg = SimConfig::<f64>::table_b1(2_000, 3, 99);
        assert_eq!(simulate_cohort(&cfg, 2), simulate_cohort(&cfg, 2));
        assert_ne!(simulate_cohort(&cfg, 1), simulate_cohort(&cfg, 2));
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn single_replicate_flags_variance() {
        let cfg = SimConfig::<f64>::table_b1(1_000, 1, 5);
        let rep = run_study(&cfg).unwrap();
        assert!(!rep.variance_defined);
        assert!(rep
            .rows
            .iter()
            .all(|r| r.empirical_variance.is_none() && r.mc_standard_error.is_none()));
        assert!(rep
            .rows
            .iter()
            .all(|r| r.coverage == 0.0 || r.coverage == 1.0));
    }

    #[test]
    fn truth_matches_untruncated_hazard_inside_window() {
        let d = CompetingRisksDistribution::<f64>::table_b1();
        let t = TruncationLaw::table_b1();
        for x in 1..=10 {
            for c in CauseId::ALL {
                let a = truncated_hazard(&d, &t, x, c).unwrap().unwrap();
                let b = d.cause_specific_hazard(x, c).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_empty_config() {
        let cfg = SimConfig::<f64>::table_b1(0, 1, 1);
        assert!(run_study(&cfg).is_err());
    }
}
