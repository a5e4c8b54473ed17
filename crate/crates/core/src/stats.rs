//! Per-sample statistics, batch summaries, log-log exponent fits and
//! time-constant estimates.

use serde::{Deserialize, Serialize};

use crate::env::{sample_environment, Environment, WindowSpec};
use crate::error::{invalid, Result};
use crate::geodesic::{geodesic_to_hyperplane, GeodesicResult, JumpConstraint, Outcome};
use crate::rng::derive_seed;

/// Default window is `DEFAULT_WINDOW_FACTOR * n^DEFAULT_WINDOW_EXPONENT`.
pub const DEFAULT_WINDOW_FACTOR: f64 = 4.0;
pub const DEFAULT_WINDOW_EXPONENT: f64 = 0.75;

/// One Monte Carlo sample. Column order is the CSV layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub passage_time: f64,
    pub max_jump: f64,
    pub max_displacement: f64,
    pub boundary_hit: bool,
}

impl SampleRecord {
    pub fn from_result(sample_id: u64, seed: u64, n: usize, alpha: f64, d: usize, result: &GeodesicResult) -> Self {
        SampleRecord {
            sample_id,
            seed,
            n,
            alpha,
            d,
            passage_time: result.passage_time(),
            max_jump: max_jump(result),
            max_displacement: max_displacement(result),
            boundary_hit: result.boundary_hit(),
        }
    }

    /// Row for a sample with no admissible path: infinite passage time,
    /// undefined path statistics.
    pub fn unreachable(sample_id: u64, seed: u64, n: usize, alpha: f64, d: usize) -> Self {
        SampleRecord {
            sample_id,
            seed,
            n,
            alpha,
            d,
            passage_time: f64::INFINITY,
            max_jump: f64::NAN,
            max_displacement: f64::NAN,
            boundary_hit: false,
        }
    }

    pub fn is_unreachable(&self) -> bool {
        self.passage_time == f64::INFINITY
    }
}

/// Largest single-step jump `max_k |gamma(k-1) - gamma(k)|`.
pub fn max_jump(result: &GeodesicResult) -> f64 {
    result.max_jump()
}

/// Largest distance `max_k |gamma(k)|` from the spatial origin.
pub fn max_displacement(result: &GeodesicResult) -> f64 {
    result.max_displacement()
}

/// Aggregate of one `(n, alpha, d)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub count: usize,
    pub mean_passage_time: f64,
    pub stderr_passage_time: f64,
    pub var_passage_time: f64,
    pub mean_max_jump: f64,
    pub stderr_max_jump: f64,
    pub mean_max_displacement: f64,
    pub stderr_max_displacement: f64,
    pub excluded_boundary_hits: usize,
    pub excluded_unreachable: usize,
}

/// Mean, unbiased variance and standard error of a sample. Values are sorted
/// before a compensated summation, so the result does not depend on input
/// order. With a single value the variance is reported as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

pub fn moments(values: &[f64]) -> Moments {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = neumaier_sum(v.iter().copied()) / n;
    let variance = if v.len() < 2 {
        0.0
    } else {
        neumaier_sum(v.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0)
    };
    Moments {
        mean,
        variance,
        stderr: (variance / n).sqrt(),
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Summarizes records of a single cell. Unreachable records are always
/// excluded; boundary-hit records are excluded when `exclude_boundary` is set.
pub fn summarize(records: &[SampleRecord], exclude_boundary: bool) -> Result<BatchSummary> {
    let Some(first) = records.first() else {
        return invalid("no records to summarize");
    };
    let (n, alpha, d) = (first.n, first.alpha, first.d);
    if let Some(r) = records.iter().find(|r| r.n != n || r.alpha != alpha || r.d != d) {
        return invalid(format!(
            "records mix cells: (n={n}, alpha={alpha}, d={d}) and (n={}, alpha={}, d={})",
            r.n, r.alpha, r.d
        ));
    }
    let excluded_unreachable = records.iter().filter(|r| r.is_unreachable()).count();
    let reachable = records.iter().filter(|r| !r.is_unreachable());
    let excluded_boundary_hits = if exclude_boundary {
        reachable.clone().filter(|r| r.boundary_hit).count()
    } else {
        0
    };
    let valid: Vec<&SampleRecord> = reachable.filter(|r| !(exclude_boundary && r.boundary_hit)).collect();
    if valid.is_empty() {
        return invalid(format!(
            "no valid samples left in cell n={n}, alpha={alpha} ({excluded_boundary_hits} boundary hits, {excluded_unreachable} unreachable)"
        ));
    }
    let col = |f: fn(&SampleRecord) -> f64| moments(&valid.iter().map(|r| f(r)).collect::<Vec<_>>());
    let t = col(|r| r.passage_time);
    let j = col(|r| r.max_jump);
    let x = col(|r| r.max_displacement);
    Ok(BatchSummary {
        n,
        alpha,
        d,
        count: valid.len(),
        mean_passage_time: t.mean,
        stderr_passage_time: t.stderr,
        var_passage_time: t.variance,
        mean_max_jump: j.mean,
        stderr_max_jump: j.stderr,
        mean_max_displacement: x.mean,
        stderr_max_displacement: x.stderr,
        excluded_boundary_hits,
        excluded_unreachable,
    })
}

/// Which line through the log-log points defines the reported slope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Chord through the first and last points.
    #[default]
    Endpoints,
    /// Ordinary least squares over all points, equally weighted.
    LeastSquares,
}

/// Log-log growth fit of `value ~ C n^slope`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the least-squares line.
    pub r_squared: f64,
    pub ols_slope: f64,
    pub ols_intercept: f64,
    pub method: FitMethod,
    pub points_used: Vec<(f64, f64)>,
}

/// Exponent read off the log-log plot as the chord between the smallest and
/// largest `n`. The least-squares line is computed alongside.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<ExponentFit> {
    fit_exponent_with(series, FitMethod::Endpoints)
}

pub fn fit_exponent_with(series: &[(f64, f64)], method: FitMethod) -> Result<ExponentFit> {
    if series.len() < 2 {
        return invalid(format!("an exponent fit needs at least 2 points, got {}", series.len()));
    }
    for w in series.windows(2) {
        if !(w[0].0 < w[1].0) {
            return invalid(format!("n must be strictly increasing ({} then {})", w[0].0, w[1].0));
        }
    }
    if let Some(&(n, v)) = series.iter().find(|&&(n, v)| !(n > 0.0 && v > 0.0 && v.is_finite() && n.is_finite())) {
        return invalid(format!("fit points must be positive and finite, got ({n}, {v})"));
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ols_slope = sxy / sxx;
    let ols_intercept = my - ols_slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };

    let (slope, intercept) = match method {
        FitMethod::LeastSquares => (ols_slope, ols_intercept),
        FitMethod::Endpoints => {
            let last = xs.len() - 1;
            let s = (ys[last] - ys[0]) / (xs[last] - xs[0]);
            (s, ys[0] - s * xs[0])
        }
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        ols_slope,
        ols_intercept,
        method,
        points_used: series.to_vec(),
    })
}

/// Empirical `T_n / n` over a range of `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConstantEstimate {
    pub alpha: f64,
    pub d: usize,
    /// `(n, mean T_n / n, standard error)`, ordered by `n`.
    pub estimates: Vec<(usize, f64, f64)>,
    /// Value at the largest `n`. Biased upward: `E[T_n] / n` decreases in `n`
    /// by subadditivity.
    pub extrapolated: f64,
}

/// Samples `samples_per_n` environments per `n` in the default window and
/// averages `T_n / n`.
pub fn estimate_time_constant(
    alpha: f64,
    d: usize,
    ns: &[usize],
    samples_per_n: usize,
    seed: u64,
) -> Result<TimeConstantEstimate> {
    estimate_time_constant_with(alpha, d, ns, samples_per_n, |n, i| {
        let window = WindowSpec::scaled(n, d, DEFAULT_WINDOW_FACTOR, DEFAULT_WINDOW_EXPONENT)?;
        sample_environment(n, d, window, derive_seed(&[seed, n as u64, i as u64]))
    })
}

/// As [`estimate_time_constant`] with a caller-supplied environment source;
/// `make(n, i)` returns the `i`-th environment of length `n`.
pub fn estimate_time_constant_with<F>(
    alpha: f64,
    d: usize,
    ns: &[usize],
    samples_per_n: usize,
    make: F,
) -> Result<TimeConstantEstimate>
where
    F: Fn(usize, usize) -> Result<Environment> + Sync,
{
    use rayon::prelude::*;

    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return invalid("ns must be nonempty, positive and strictly increasing");
    }
    if samples_per_n == 0 {
        return invalid("samples_per_n must be at least 1");
    }
    let mut estimates = Vec::with_capacity(ns.len());
    for &n in ns {
        let ratios: Vec<f64> = (0..samples_per_n)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let env = make(n, i)?;
                match geodesic_to_hyperplane(&env, alpha, JumpConstraint::Unbounded)? {
                    Outcome::Reached(r) => Ok(r.passage_time() / n as f64),
                    Outcome::Unreachable => Ok(f64::INFINITY),
                }
            })
            .collect::<Result<_>>()?;
        if ratios.iter().any(|r| r.is_infinite()) {
            return invalid(format!("some environment of length {n} admits no open path"));
        }
        let m = moments(&ratios);
        estimates.push((n, m.mean, m.stderr));
    }
    let extrapolated = estimates.last().expect("nonempty").1;
    Ok(TimeConstantEstimate {
        alpha,
        d,
        estimates,
        extrapolated,
    })
}
