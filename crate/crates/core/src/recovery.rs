//! Recovery on default by default age: raw means, local linear smoothing
//! and a gamma-kernel fit used for extrapolation.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuarial::RecoveryCurve;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest admissible single recovery fraction.
pub const MAX_RECOVERY: f64 = 1.5;
pub const DEFAULT_SPAN: f64 = 0.75;

/// Mean recovery fraction per default age. Ages without defaults are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RecoveryPoints<T> {
    pub ages: Vec<u32>,
    pub means: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T: Real> RecoveryPoints<T> {
    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }

    pub fn get(&self, age: u32) -> Option<T> {
        self.ages.binary_search(&age).ok().map(|i| self.means[i])
    }

    /// Ages whose mean recovery exceeds the original amount.
    pub fn flagged(&self) -> Vec<u32> {
        self.ages
            .iter()
            .zip(&self.means)
            .filter(|(_, &m)| m > T::one())
            .map(|(&a, _)| a)
            .collect()
    }
}

pub fn recovery_points<T: Real>(defaulted: &[(u32, T)]) -> Result<RecoveryPoints<T>> {
    if defaulted.is_empty() {
        return Err(Error::Empty("defaulted loans"));
    }
    let mut acc = std::collections::BTreeMap::<u32, (T, usize)>::new();
    for &(age, v) in defaulted {
        if !(v >= T::zero() && v <= T::lit(MAX_RECOVERY)) {
            return Err(Error::InvalidInput(format!(
                "recovery fraction {v} at age {age} outside [0, {MAX_RECOVERY}]"
            )));
        }
        let e = acc.entry(age).or_insert((T::zero(), 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut pts = RecoveryPoints {
        ages: vec![],
        means: vec![],
        counts: vec![],
    };
    for (age, (sum, n)) in acc {
        pts.ages.push(age);
        pts.means.push(sum / T::from_count(n));
        pts.counts.push(n);
    }
    Ok(pts)
}

/// Local linear regression with tricube weights over the nearest
/// `span`-fraction of points, evaluated at each observed age.
pub fn smooth<T: Real>(points: &RecoveryPoints<T>, span: T) -> Result<Vec<T>> {
    let n = points.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "smoothing needs at least 5 points, got {n}"
        )));
    }
    if !(span > T::zero() && span <= T::one()) {
        return Err(Error::InvalidInput(format!("span {span} outside (0, 1]")));
    }
    let q = ((span * T::from_count(n)).ceil().as_f64() as usize).clamp(3, n);
    let xs: Vec<T> = points
        .ages
        .iter()
        .map(|&a| T::from_count(a as usize))
        .collect();
    let ys = &points.means;
    Ok(xs.iter().map(|&x0| local_linear(&xs, ys, x0, q)).collect())
}

fn local_linear<T: Real>(xs: &[T], ys: &[T], x0: T, q: usize) -> T {
    let mut dist: Vec<T> = xs.iter().map(|&x| (x - x0).abs()).collect();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut h = dist[q - 1];
    if h == T::zero() {
        h = T::one();
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - x0).abs() / h;
        if u >= T::one() {
            continue;
        }
        let w = (T::one() - u.powi(3)).powi(3);
        let d = x - x0;
        sw += w;
        sx += w * d;
        sy += w * y;
        sxx += w * d * d;
        sxy += w * d * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= T::epsilon() * sw * sxx {
        return sy / sw;
    }
    // intercept of the weighted fit centred at x0
    (sxx * sy - sx * sxy) / det
}

/// `c * x^(k-1) * exp(-x / theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct GammaKernelFit<T> {
    pub c: T,
    pub k: T,
    pub theta: T,
    /// Sum of squared residuals at the reported parameters.
    pub residual: T,
}

impl<T: Real> GammaKernelFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.c * x.powf(self.k - T::one()) * (-x / self.theta).exp()
    }

    /// Interior maximum, if the shape admits one.
    pub fn peak_age(&self) -> Option<T> {
        (self.k > T::one()).then(|| (self.k - T::one()) * self.theta)
    }
}

impl<T: Real> RecoveryCurve<T> for GammaKernelFit<T> {
    fn fraction(&self, age: u32) -> T {
        recovery_at(self, age)
    }
}

/// Fitted recovery at age `x`, clamped to `[0, 1]`.
pub fn recovery_at<T: Real>(fit: &GammaKernelFit<T>, x: u32) -> T {
    let v = fit.eval(T::from_count(x.max(1) as usize));
    if v.is_nan() {
        return T::zero();
    }
    v.max(T::zero()).min(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_evals: 10_000,
            seed: 0x5eed,
        }
    }
}

/// Least-squares gamma-kernel fit to `values` observed at `ages`.
///
/// The scale `c` is profiled out in closed form; shape and rate are
/// searched in log space by Nelder-Mead from several deterministic starts.
pub fn fit_gamma_kernel<T: Real>(
    ages: &[u32],
    values: &[T],
    opts: FitOptions,
) -> Result<GammaKernelFit<T>> {
    if ages.len() != values.len() {
        return Err(Error::InvalidInput(
            "ages and values differ in length".into(),
        ));
    }
    if ages.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "gamma fit needs at least 5 points, got {}",
            ages.len()
        )));
    }
    if ages.contains(&0) {
        return Err(Error::InvalidInput("ages must be at least 1".into()));
    }
    if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "curve must be finite and nonnegative".into(),
        ));
    }
    if values.iter().all(|v| *v == T::zero()) {
        return Err(Error::InvalidInput(
            "degenerate all-zero recovery curve".into(),
        ));
    }
    let xs: Vec<T> = ages.iter().map(|&a| T::from_count(a as usize)).collect();
    let problem = Profiled {
        xs: &xs,
        ys: values,
    };

    let x_max = xs.iter().copied().fold(T::one(), T::max);
    let peak = xs[values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![[T::lit(3.0).ln(), (peak / T::lit(2.0)).max(T::lit(0.5)).ln()]];
    while starts.len() < opts.restarts.max(1) {
        let lk = rng.gen_range(1.05f64.ln()..10f64.ln());
        let lt = rng.gen_range(0.5f64.ln()..(2.0 * x_max.as_f64()).ln());
        starts.push([T::lit(lk), T::lit(lt)]);
    }

    let runs: Vec<NmResult<T>> = starts
        .par_iter()
        .map(|s| nelder_mead(|p| problem.objective(p), *s, opts.max_evals))
        .collect();
    // lowest residual wins, ties to the earliest restart
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.f.partial_cmp(&b.f).unwrap().then(i.cmp(j)))
        .map(|(_, r)| r)
        .unwrap();
    let fit = problem.fit_at(best.x);
    if !runs.iter().any(|r| r.converged) || !fit.residual.is_finite() {
        return Err(Error::FitNotConverged {
            c: fit.c.as_f64(),
            k: fit.k.as_f64(),
            theta: fit.theta.as_f64(),
            residual: fit.residual.as_f64(),
        });
    }
    Ok(fit)
}

struct Profiled<'a, T> {
    xs: &'a [T],
    ys: &'a [T],
}

impl<T: Real> Profiled<'_, T> {
    fn fit_at(&self, p: [T; 2]) -> GammaKernelFit<T> {
        let (k, theta) = (p[0].exp(), p[1].exp());
        let g: Vec<T> = self
            .xs
            .iter()
            .map(|&x| x.powf(k - T::one()) * (-x / theta).exp())
            .collect();
        let gg: T = g.iter().map(|&v| v * v).sum();
        let gy: T = g.iter().zip(self.ys).map(|(&a, &b)| a * b).sum();
        let c = if gg > T::zero() {
            (gy / gg).max(T::zero())
        } else {
            T::zero()
        };
        let residual = g
            .iter()
            .zip(self.ys)
            .map(|(&a, &b)| (b - c * a).powi(2))
            .sum();
        GammaKernelFit {
            c,
            k,
            theta,
            residual,
        }
    }

    fn objective(&self, p: [T; 2]) -> T {
        let r = self.fit_at(p).residual;
        if r.is_finite() {
            r
        } else {
            T::infinity()
        }
    }
}

struct NmResult<T> {
    x: [T; 2],
    f: T,
    converged: bool,
}

fn nelder_mead<T: Real>(f: impl Fn([T; 2]) -> T, start: [T; 2], max_evals: usize) -> NmResult<T> {
    let half = T::lit(0.5);
    let step = T::lit(0.3);
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut fv = simplex.map(&f);
    let mut evals = 3;
    let xtol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    let lerp = |a: [T; 2], b: [T; 2], t: T| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    loop {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| {
            fv[i]
                .partial_cmp(&fv[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        simplex = idx.map(|i| simplex[i]);
        fv = idx.map(|i| fv[i]);

        let diameter = simplex[1..]
            .iter()
            .map(|p| {
                (p[0] - simplex[0][0])
                    .abs()
                    .max((p[1] - simplex[0][1]).abs())
            })
            .fold(T::zero(), T::max);
        let spread = fv[2] - fv[0];
        if diameter <= xtol
            || spread <= T::lit(1e-28) * (T::one() + fv[0].abs()) && fv[0] < T::lit(1e-24)
        {
            return NmResult {
                x: simplex[0],
                f: fv[0],
                converged: true,
            };
        }
        if evals >= max_evals {
            return NmResult {
                x: simplex[0],
                f: fv[0],
                converged: false,
            };
        }

        let centroid = lerp(simplex[0], simplex[1], half);
        let reflected = lerp(centroid, simplex[2], -T::one());
        let fr = f(reflected);
        evals += 1;
        if fr < fv[0] {
            let expanded = lerp(centroid, simplex[2], -T::lit(2.0));
            let fe = f(expanded);
            evals += 1;
            (simplex[2], fv[2]) = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < fv[1] {
            (simplex[2], fv[2]) = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < fv[2] {
                let c = lerp(centroid, reflected, half);
                (c, f(c))
            } else {
                let c = lerp(centroid, simplex[2], half);
                (c, f(c))
            };
            evals += 1;
            if fc < fv[2].min(fr) {
                (simplex[2], fv[2]) = (contracted, fc);
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], half);
                    fv[i] = f(simplex[i]);
                }
                evals += 2;
            }
        }
    }
}

/// Raw means, smoothed curve and fitted kernel on the observed ages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RecoveryAnalysis<T> {
    pub points: RecoveryPoints<T>,
    pub smoothed: Vec<T>,
    pub fit: GammaKernelFit<T>,
}

/// Means, smoothing, then a kernel fit to the smoothed curve.
pub fn analyze<T: Real>(
    defaulted: &[(u32, T)],
    span: T,
    opts: FitOptions,
) -> Result<RecoveryAnalysis<T>> {
    let points = recovery_points(defaulted)?;
    let smoothed = smooth(&points, span)?;
    let clipped: Vec<T> = smoothed.iter().map(|v| v.max(T::zero())).collect();
    let fit = fit_gamma_kernel(&points.ages, &clipped, opts)?;
    Ok(RecoveryAnalysis {
        points,
        smoothed,
        fit,
    })
}

pub fn write_recovery_csv<T: Real, W: Write>(out: W, analysis: &RecoveryAnalysis<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["age", "raw_mean", "smoothed", "fitted"])?;
    let p = &analysis.points;
    for (i, &age) in p.ages.iter().enumerate() {
        w.write_record([
            age.to_string(),
            p.means[i].to_string(),
            analysis.smoothed[i].to_string(),
            recovery_at(&analysis.fit, age).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(ages: &[u32], means: &[f64]) -> RecoveryPoints<f64> {
        RecoveryPoints {
            ages: ages.to_vec(),
            means: means.to_vec(),
            counts: vec![1; ages.len()],
        }
    }

    #[test]
    fn means_by_age() {
        let p = recovery_points(&[(12, 0.40), (12, 0.44), (3, 0.2), (5, 0.1)]).unwrap();
        assert_abs_diff_eq!(p.get(12).unwrap(), 0.42, epsilon = 1e-15);
        assert_eq!(p.counts, vec![1, 1, 2]);
        assert_eq!(p.get(4), None);
        assert_eq!(recovery_points(&[(7, 0.3)]).unwrap().means, vec![0.3]);
        assert!(recovery_points::<f64>(&[]).is_err());
        assert!(recovery_points(&[(1, -0.1)]).is_err());
        assert_eq!(
            recovery_points(&[(1, 1.2), (2, 0.5)]).unwrap().flagged(),
            vec![1]
        );
    }

    #[test]
    fn smoother_reproduces_lines_and_constants() {
        let ages: Vec<u32> = (1..=20).collect();
        let line: Vec<f64> = ages.iter().map(|&a| 0.1 + 0.02 * a as f64).collect();
        let s = smooth(&pts(&ages, &line), 0.75).unwrap();
        for (a, b) in s.iter().zip(&line) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        let again = smooth(&pts(&ages, &s), 0.75).unwrap();
        for (a, b) in again.iter().zip(&s) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        let flat = smooth(&pts(&ages, &[0.3; 20]), 0.75).unwrap();
        assert!(flat.iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!(smooth(&pts(&[1, 2, 3, 4], &[0.1; 4]), 0.75).is_err());
    }

    #[test]
    fn exact_kernel_recovered() {
        let ages: Vec<u32> = (1..=48).collect();
        let truth = GammaKernelFit {
            c: 0.1,
            k: 3.0,
            theta: 6.0,
            residual: 0.0,
        };
        let ys: Vec<f64> = ages.iter().map(|&a| truth.eval(a as f64)).collect();
        let fit = fit_gamma_kernel(&ages, &ys, FitOptions::default()).unwrap();
        assert!((fit.c / 0.1 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.k / 3.0 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.theta / 6.0 - 1.0).abs() < 1e-3, "{fit:?}");
        assert_abs_diff_eq!(fit.eval(6.0), truth.eval(6.0), epsilon = 1e-3);
        assert_eq!(recovery_at(&fit, 6), truth.eval(6.0).min(1.0));
    }

    #[test]
    fn zero_curve_rejected() {
        let ages: Vec<u32> = (1..=10).collect();
        assert!(fit_gamma_kernel(&ages, &[0.0; 10], FitOptions::default()).is_err());
    }

    #[test]
    fn peak_value_and_decay() {
        let fit = GammaKernelFit {
            c: 0.1,
            k: 3.0,
            theta: 6.0,
            residual: 0.0,
        };
        let peak = fit.peak_age().unwrap();
        assert_eq!(peak, 12.0);
        let expected = (0.1 * 12f64.powi(2) * (-2f64).exp()).min(1.0);
        assert_abs_diff_eq!(recovery_at(&fit, 12), expected, epsilon = 1e-12);
        assert!(recovery_at(&fit, 1000) < 1e-12);
        let big = GammaKernelFit { c: 10.0, ..fit };
        assert_eq!(recovery_at(&big, 12), 1.0);
    }

    #[test]
    fn hump_fit_peaks_near_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ages: Vec<u32> = (1..=24).collect();
        // peak value 0.42 at age 12
        let c = 0.42 / (144.0 * (-2f64).exp());
        let obs: Vec<(u32, f64)> = ages
            .iter()
            .map(|&a| {
                let v = c * (a as f64).powi(2) * (-(a as f64) / 6.0).exp();
                (a, (v + rng.gen_range(-0.02..0.02)).max(0.0))
            })
            .collect();
        let analysis = analyze(&obs, 0.75, FitOptions::default()).unwrap();
        let (i, &top) = analysis
            .smoothed
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!(
            (analysis.points.ages[i] as i64 - 12).abs() <= 2,
            "smoothed peak at {}",
            analysis.points.ages[i]
        );
        assert!((top - 0.42).abs() <= 0.05, "smoothed peak {top}");
        let peak = analysis.fit.peak_age().unwrap();
        assert!((peak - 12.0).abs() <= 3.0, "fitted peak {peak}");
    }
}
