//! Passage times and exact geodesics.
//!
//! The layered environment is a DAG, so the optimal path is found by a
//! forward relaxation over layers. A point's value is the minimal passage time
//! from the start, accumulated left to right along the path; ties are broken
//! towards the lexicographically smallest path, compared step by step from
//! the first layer. To that end every point also carries a rank: the position
//! of its chosen prefix in lexicographic order among the points of its layer.

mod dump;
mod kernel;
pub mod monge;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::env::{distance, Environment, Layer, SpacePoint};
use crate::error::{invalid, Error, Result};
use kernel::{Next, Prev, NO_PRED};

pub use dump::{read_path_dump, write_path_dump, PathDumpHeader, PathDumpStep};
pub use oracle::{brute_force_geodesic, brute_force_point_to_point, BRUTE_FORCE_LIMIT};

/// Margin used for [`GeodesicResult::boundary_hit`].
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;

/// Layer pairs smaller than this are relaxed by the quadratic kernel even when
/// the monotone kernel applies.
const MONOTONE_MIN_PAIRS: usize = 2048;

/// `t -> t^alpha`, with exact special cases for the common exponents. Every
/// code path evaluates jump costs through this type, so equal inputs always
/// produce bit-identical costs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpCost {
    alpha: f64,
    form: Form,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Form {
    Sqrt,
    Linear,
    Square,
    Pow,
}

impl JumpCost {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive and finite, got {alpha}"));
        }
        let form = if alpha == 0.5 {
            Form::Sqrt
        } else if alpha == 1.0 {
            Form::Linear
        } else if alpha == 2.0 {
            Form::Square
        } else {
            Form::Pow
        };
        Ok(JumpCost { alpha, form })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn of(&self, dist: f64) -> f64 {
        match self.form {
            Form::Sqrt => dist.sqrt(),
            Form::Linear => dist,
            Form::Square => dist * dist,
            Form::Pow => dist.powf(self.alpha),
        }
    }
}

/// A time-space point `(t, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSpacePoint {
    pub t: usize,
    pub x: SpacePoint,
}

impl TimeSpacePoint {
    pub fn new(t: usize, x: SpacePoint) -> Self {
        TimeSpacePoint { t, x }
    }
}

/// Upper bound on single-step jump length.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum JumpConstraint {
    #[default]
    Unbounded,
    Cap(f64),
}

impl JumpConstraint {
    pub fn cap(cap: f64) -> Result<Self> {
        if !(cap > 0.0) || cap.is_nan() {
            return invalid(format!("jump cap must be positive, got {cap}"));
        }
        Ok(if cap.is_infinite() {
            JumpConstraint::Unbounded
        } else {
            JumpConstraint::Cap(cap)
        })
    }

    pub fn from_option(cap: Option<f64>) -> Result<Self> {
        cap.map_or(Ok(JumpConstraint::Unbounded), Self::cap)
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            JumpConstraint::Unbounded => None,
            JumpConstraint::Cap(c) => Some(c),
        }
    }
}

/// Layer relaxation strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Kernel {
    /// Monotone minima for large uncapped one-dimensional layers, pruned
    /// quadratic scan otherwise.
    #[default]
    Auto,
    /// All pairs, no pruning.
    Naive,
    /// Quadratic scan in ascending predecessor value with early exit.
    Pruned,
    /// Monotone minima on every layer (one dimension, no cap). Falls back to
    /// the pruned scan if the structural probe fails.
    Monotone,
}

/// An open path: `steps[j]` is the point used at time `start.t + j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub start: TimeSpacePoint,
    pub steps: Vec<SpacePoint>,
    pub alpha: f64,
}

impl GeodesicPath {
    /// Consecutive points, starting with `start.x`.
    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> + '_ {
        std::iter::once(self.start.x.coords()).chain(self.steps.iter().map(SpacePoint::coords))
    }

    /// Per-step Euclidean jump lengths.
    pub fn jumps(&self) -> Vec<f64> {
        let v: Vec<&[f64]> = self.vertices().collect();
        v.windows(2).map(|w| distance(w[0], w[1])).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `T_gamma = sum_k |gamma(k-1) - gamma(k)|^alpha`, summed left to right.
pub fn passage_time(path: &GeodesicPath) -> Result<f64> {
    if path.steps.is_empty() {
        return invalid("a path needs at least one step");
    }
    let cost = JumpCost::new(path.alpha)?;
    Ok(sum_costs(&cost, path.vertices()))
}

fn sum_costs<'a>(cost: &JumpCost, mut vertices: impl Iterator<Item = &'a [f64]>) -> f64 {
    let mut prev = vertices.next().expect("nonempty");
    let mut acc = 0.0;
    for v in vertices {
        acc += cost.of(distance(prev, v));
        prev = v;
    }
    acc
}

/// An optimal path with its statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicResult {
    path: GeodesicPath,
    passage_time: f64,
    jumps: Vec<f64>,
    boundary_hit: bool,
    constrained: Option<f64>,
}

impl GeodesicResult {
    pub fn path(&self) -> &GeodesicPath {
        &self.path
    }

    pub fn passage_time(&self) -> f64 {
        self.passage_time
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// Whether the path comes within [`DEFAULT_MARGIN_FRACTION`] of the window
    /// boundary.
    pub fn boundary_hit(&self) -> bool {
        self.boundary_hit
    }

    pub fn constrained(&self) -> Option<f64> {
        self.constrained
    }

    pub fn max_jump(&self) -> f64 {
        self.jumps.iter().copied().fold(0.0, f64::max)
    }

    /// `max_k |gamma(k)|` over the steps (distance from the spatial origin).
    pub fn max_displacement(&self) -> f64 {
        self.path.steps.iter().map(SpacePoint::norm).fold(0.0, f64::max)
    }
}

/// Result of a geodesic search. `Unreachable` is the `inf of empty set` case:
/// no admissible path exists.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Reached(GeodesicResult),
    Unreachable,
}

impl Outcome {
    pub fn reached(self) -> Option<GeodesicResult> {
        match self {
            Outcome::Reached(r) => Some(r),
            Outcome::Unreachable => None,
        }
    }

    pub fn as_reached(&self) -> Option<&GeodesicResult> {
        match self {
            Outcome::Reached(r) => Some(r),
            Outcome::Unreachable => None,
        }
    }

    pub fn is_unreachable(&self) -> bool {
        matches!(self, Outcome::Unreachable)
    }

    /// Passage time, `+inf` when unreachable.
    pub fn passage_time(&self) -> f64 {
        self.as_reached().map_or(f64::INFINITY, GeodesicResult::passage_time)
    }
}

/// Forward values, predecessors and ranks for a run of consecutive layers.
#[derive(Clone, Debug)]
pub struct DpTable {
    first_time: usize,
    values: Vec<Vec<f64>>,
    preds: Vec<Vec<u32>>,
    ranks: Vec<Vec<u32>>,
}

impl DpTable {
    /// Time index of the first relaxed layer.
    pub fn first_time(&self) -> usize {
        self.first_time
    }

    pub fn layers(&self) -> usize {
        self.values.len()
    }

    /// Minimal passage time from the start to point `i` of layer time `t`
    /// (`+inf` if unreachable).
    pub fn value(&self, t: usize, i: usize) -> f64 {
        self.values[t - self.first_time][i]
    }

    pub fn values_at(&self, t: usize) -> &[f64] {
        &self.values[t - self.first_time]
    }

    /// Index path (one entry per layer) ending at point `i` of time `t`.
    pub fn trace(&self, t: usize, i: usize) -> Vec<usize> {
        let mut at = t - self.first_time;
        let mut idx = i;
        let mut out = vec![idx];
        while at > 0 {
            idx = self.preds[at][idx] as usize;
            out.push(idx);
            at -= 1;
        }
        out.reverse();
        out
    }

    /// Best `(value, rank, index)` in the last layer.
    fn best_last(&self) -> Option<(f64, usize)> {
        let vals = self.values.last()?;
        let ranks = self.ranks.last()?;
        let mut best: Option<(f64, u32, usize)> = None;
        for (i, (&v, &r)) in vals.iter().zip(ranks).enumerate() {
            if v == f64::INFINITY {
                continue;
            }
            if best.is_none_or(|(bv, br, _)| v < bv || (v == bv && r < br)) {
                best = Some((v, r, i));
            }
        }
        best.map(|(v, _, i)| (v, i))
    }
}

/// Runs the forward relaxation from `start` through `layers`.
pub(crate) fn forward(
    start: &[f64],
    layers: &[&Layer],
    cost: &JumpCost,
    cap: Option<f64>,
    kernel: Kernel,
    first_time: usize,
) -> Result<DpTable> {
    let dim = start.len();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    let mut preds: Vec<Vec<u32>> = Vec::with_capacity(layers.len());
    let mut ranks: Vec<Vec<u32>> = Vec::with_capacity(layers.len());
    if layers.is_empty() {
        return Ok(DpTable {
            first_time,
            values,
            preds,
            ranks,
        });
    }

    let one_d_uncapped = dim == 1 && cap.is_none();
    let monotone_ok = match kernel {
        Kernel::Monotone if !one_d_uncapped => {
            return invalid("the monotone kernel needs one dimension and no jump cap");
        }
        Kernel::Monotone | Kernel::Auto if one_d_uncapped => {
            let probe_layers: Vec<&&Layer> = layers.iter().filter(|l| !l.is_empty()).take(2).collect();
            match probe_layers.as_slice() {
                [a, b] => kernel::probe_monotone_precondition(a.flat(), b.flat(), cost),
                _ => true,
            }
        }
        _ => false,
    };

    // first step from the start point
    let first = layers[0];
    let v0: Vec<f64> = first
        .points()
        .map(|p| {
            let dist = distance(start, p);
            if cap.is_none_or(|c| dist <= c) {
                0.0 + cost.of(dist)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    values.push(v0);
    preds.push(vec![NO_PRED; first.len()]);
    ranks.push((0..first.len() as u32).collect());

    for layer in &layers[1..] {
        let m = layer.len();
        let mut next_values = vec![f64::INFINITY; m];
        let mut next_preds = vec![NO_PRED; m];
        let prev_values = values.last().expect("nonempty");
        let prev_ranks = ranks.last().expect("nonempty");
        let prev_layer_coords = layers[values.len() - 1].flat();
        if prev_values.iter().any(|v| v.is_finite()) && m > 0 {
            let prev = Prev {
                coords: prev_layer_coords,
                values: prev_values,
                ranks: prev_ranks,
            };
            let mut next = Next {
                coords: layer.flat(),
                values: &mut next_values,
                preds: &mut next_preds,
            };
            let use_monotone = monotone_ok
                && (kernel == Kernel::Monotone || prev_values.len() * m >= MONOTONE_MIN_PAIRS);
            match kernel {
                Kernel::Naive => kernel::relax_naive(&prev, &mut next, dim, cost, cap),
                _ if use_monotone => {
                    if cost.alpha() >= 1.0 {
                        kernel::relax_convex_1d(&prev, &mut next, cost)
                    } else {
                        kernel::relax_concave_1d(&prev, &mut next, cost)
                    }
                }
                _ => kernel::relax_pruned(&prev, &mut next, dim, cost, cap),
            }
        }
        let next_ranks = rank_layer(&next_values, &next_preds, prev_ranks);
        values.push(next_values);
        preds.push(next_preds);
        ranks.push(next_ranks);
    }
    Ok(DpTable {
        first_time,
        values,
        preds,
        ranks,
    })
}

/// Lexicographic order of the chosen prefixes: by the predecessor's rank, then
/// by the point's own position (layers are sorted). Unreachable points go last.
fn rank_layer(values: &[f64], preds: &[u32], prev_ranks: &[u32]) -> Vec<u32> {
    let m = values.len();
    let key = |j: usize| -> (bool, u32, usize) {
        if values[j] == f64::INFINITY {
            (true, u32::MAX, j)
        } else {
            (false, prev_ranks[preds[j] as usize], j)
        }
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by_key(|&j| key(j));
    let mut ranks = vec![0u32; m];
    for (pos, j) in order.into_iter().enumerate() {
        ranks[j] = pos as u32;
    }
    ranks
}

fn check_env_dim(env: &Environment, x: &SpacePoint) -> Result<()> {
    if x.dim() != env.dim() {
        return invalid(format!(
            "point of dimension {} in a {}-dimensional environment",
            x.dim(),
            env.dim()
        ));
    }
    Ok(())
}

fn build_result(
    env: &Environment,
    start: TimeSpacePoint,
    steps: Vec<SpacePoint>,
    alpha: f64,
    passage_time: f64,
    cap: Option<f64>,
) -> GeodesicResult {
    let path = GeodesicPath { start, steps, alpha };
    let jumps = path.jumps();
    let margin = DEFAULT_MARGIN_FRACTION * env.window().half_width();
    let boundary_hit = path
        .steps
        .iter()
        .any(|p| env.window().distance_to_boundary(p.coords()) < margin);
    GeodesicResult {
        path,
        passage_time,
        jumps,
        boundary_hit,
        constrained: cap,
    }
}

/// Point-to-hyperplane geodesic from the origin at time 0 to layer `n`.
pub fn geodesic_to_hyperplane(env: &Environment, alpha: f64, constraint: JumpConstraint) -> Result<Outcome> {
    geodesic_to_hyperplane_with(env, alpha, constraint, Kernel::Auto)
}

pub fn geodesic_to_hyperplane_with(
    env: &Environment,
    alpha: f64,
    constraint: JumpConstraint,
    kernel: Kernel,
) -> Result<Outcome> {
    let cost = JumpCost::new(alpha)?;
    let table = hyperplane_table(env, &cost, constraint, kernel)?;
    let Some((value, last)) = table.best_last() else {
        return Ok(Outcome::Unreachable);
    };
    let n = env.n();
    let steps = table
        .trace(n, last)
        .into_iter()
        .enumerate()
        .map(|(j, i)| SpacePoint::from_slice(env.layer(j + 1).point(i)))
        .collect();
    let start = TimeSpacePoint::new(0, env.origin());
    Ok(Outcome::Reached(build_result(env, start, steps, alpha, value, constraint.value())))
}

/// The forward table of the point-to-hyperplane problem (layers `1..=n`).
pub fn hyperplane_dp_table(env: &Environment, alpha: f64, constraint: JumpConstraint, kernel: Kernel) -> Result<DpTable> {
    hyperplane_table(env, &JumpCost::new(alpha)?, constraint, kernel)
}

fn hyperplane_table(env: &Environment, cost: &JumpCost, constraint: JumpConstraint, kernel: Kernel) -> Result<DpTable> {
    let layers: Vec<&Layer> = env.layers().iter().collect();
    let origin = env.origin();
    forward(origin.coords(), &layers, cost, constraint.value(), kernel, 1)
}

/// How the endpoint `w` of a point-to-point problem is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Terminal {
    /// `w` must be a point of the environment at time `w.t`.
    #[default]
    EnvPoint,
    /// `w` is an arbitrary point; the last hop pays `|gamma(w.t - 1) - w|^alpha`.
    Free,
}

/// Point-to-point geodesic from `v` to `w` (`v.t < w.t <= n`).
pub fn geodesic_point_to_point(
    env: &Environment,
    v: &TimeSpacePoint,
    w: &TimeSpacePoint,
    alpha: f64,
    terminal: Terminal,
    constraint: JumpConstraint,
) -> Result<Outcome> {
    check_env_dim(env, &v.x)?;
    check_env_dim(env, &w.x)?;
    if v.t >= w.t {
        return invalid(format!("start time {} must precede end time {}", v.t, w.t));
    }
    if w.t > env.n() {
        return Err(Error::NotCovered {
            first: v.t + 1,
            last: w.t,
            available: env.n(),
        });
    }
    if terminal == Terminal::EnvPoint && env.layer(w.t).find(w.x.coords()).is_none() {
        return invalid(format!("endpoint {:?} is not a point of layer {}", w.x.coords(), w.t));
    }
    let cost = JumpCost::new(alpha)?;
    let cap = constraint.value();
    let within = |d: f64| cap.is_none_or(|c| d <= c);

    let inner: Vec<&Layer> = (v.t + 1..w.t).map(|k| env.layer(k)).collect();
    let table = forward(v.x.coords(), &inner, &cost, cap, Kernel::Auto, v.t + 1)?;
    let target = w.x.coords();

    let (value, prefix) = if inner.is_empty() {
        let dist = distance(v.x.coords(), target);
        if !within(dist) {
            return Ok(Outcome::Unreachable);
        }
        (0.0 + cost.of(dist), Vec::new())
    } else {
        let last_t = w.t - 1;
        let layer = env.layer(last_t);
        let vals = table.values_at(last_t);
        let ranks = table.ranks.last().expect("nonempty");
        let mut best: Option<(f64, u32, usize)> = None;
        for (i, p) in layer.points().enumerate() {
            if vals[i] == f64::INFINITY {
                continue;
            }
            let dist = distance(p, target);
            if !within(dist) {
                continue;
            }
            let val = vals[i] + cost.of(dist);
            if best.is_none_or(|(bv, br, _)| val < bv || (val == bv && ranks[i] < br)) {
                best = Some((val, ranks[i], i));
            }
        }
        let Some((val, _, i)) = best else {
            return Ok(Outcome::Unreachable);
        };
        (val, table.trace(last_t, i))
    };
    let mut steps: Vec<SpacePoint> = prefix
        .into_iter()
        .enumerate()
        .map(|(j, i)| SpacePoint::from_slice(env.layer(v.t + 1 + j).point(i)))
        .collect();
    steps.push(w.x.clone());
    Ok(Outcome::Reached(build_result(env, v.clone(), steps, alpha, value, cap)))
}
