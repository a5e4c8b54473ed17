//! Black faces.
//!
//! A face `F(k, x) = {kL} x (x + [-2, 2)^d)` with `L = ceil((log n)^beta)` and
//! `x` in `4Z^d` is black when every start point `v` of the face is expensive
//! to connect to the lattice section at time `(k + 1)L`:
//!
//! * `alpha < 1`: `inf_{w in Z^d} T_{v,w} >= c1 L`;
//! * `alpha > 1`: `T_{v,w} >= ((|v - w| / L)^alpha + c1) L` for every lattice
//!   `w` with `|x - w| <= 2ML`.
//!
//! Paths from `v` to `w` use environment points at the interior times
//! `kL + 1 ..= (k + 1)L - 1`; `v` and `w` themselves are free.
//!
//! The continuum of start points is replaced by the vertices of an `h`-grid
//! over the closed face. Every `v` lies within `delta = h sqrt(d) / 2` of a
//! vertex `g`, and the inequality is checked at `g` with a margin that covers
//! the move from `g` to `v`:
//!
//! * `alpha < 1`: `delta^alpha`, by subadditivity of `t -> t^alpha` on the
//!   first hop.
//! * `alpha > 1`: `alpha (J + delta)^(alpha-1) delta` for the first hop plus
//!   `alpha (rho / L)^(alpha-1) delta` for the right-hand side, where
//!   `rho = 2ML + 2 sqrt(d)` bounds `|v - w|` and `J = R^(1/alpha)` bounds the
//!   first hop of any path cheaper than the largest threshold `R`.
//!
//! A `true` answer is therefore sound for the whole face.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{distance, sample_environment, Environment, Layer, WindowSpec};
use crate::error::{invalid, Error, Result};
use crate::geodesic::JumpCost;
use crate::rng::{derive_seed, stream};

/// Parameters of one face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceSpec {
    /// `log n`; `n` enters only through this scale.
    pub log_n: f64,
    /// Block index: the face sits at time `kL`.
    pub k: usize,
    /// Face center, a point of `4Z^d`.
    pub x: Vec<i64>,
    pub beta: f64,
    pub c1: f64,
    /// Range parameter of the `alpha > 1` condition.
    pub m: f64,
    pub alpha: f64,
    /// Grid resolution `h` for the start points.
    pub grid_step: f64,
}

impl FaceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.log_n > 0.0 && self.log_n.is_finite()) {
            return invalid(format!("log n must be positive, got {}", self.log_n));
        }
        for (name, v) in [("beta", self.beta), ("c1", self.c1), ("M", self.m)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return invalid(format!("grid step must lie in (0, 0.5], got {}", self.grid_step));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || self.alpha == 1.0 {
            return invalid(format!("faces are defined for alpha > 0, alpha != 1; got {}", self.alpha));
        }
        if self.x.is_empty() {
            return invalid("face center needs at least one coordinate");
        }
        if self.x.iter().any(|c| c % 4 != 0) {
            return invalid(format!("face center {:?} is not in 4Z^d", self.x));
        }
        if self.slab_length() > 1 << 20 {
            return invalid("slab length is unreasonably large");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `L = ceil((log n)^beta)`, at least 1.
    pub fn slab_length(&self) -> usize {
        (self.log_n.powf(self.beta).ceil() as usize).max(1)
    }

    /// Times `(kL, (k + 1)L)` of the face and the target section.
    pub fn times(&self) -> (usize, usize) {
        let l = self.slab_length();
        (self.k * l, (self.k + 1) * l)
    }

    /// `c1 L`, the `alpha < 1` threshold (also the additive part for `alpha > 1`).
    pub fn threshold(&self) -> f64 {
        self.c1 * self.slab_length() as f64
    }

    fn delta(&self) -> f64 {
        self.grid_step * (self.dim() as f64).sqrt() / 2.0
    }

    fn rho(&self) -> f64 {
        2.0 * self.m * self.slab_length() as f64 + 2.0 * (self.dim() as f64).sqrt()
    }

    /// Largest right-hand side of the `alpha > 1` inequality over the face.
    fn max_threshold(&self) -> f64 {
        let l = self.slab_length() as f64;
        if self.alpha < 1.0 {
            self.threshold()
        } else {
            ((self.rho() / l).powf(self.alpha) + self.c1) * l
        }
    }

    /// Amount added to the threshold at grid vertices.
    pub fn margin(&self) -> f64 {
        let (a, delta) = (self.alpha, self.delta());
        if a < 1.0 {
            delta.powf(a)
        } else {
            let l = self.slab_length() as f64;
            let jump = self.max_threshold().powf(1.0 / a);
            a * (jump + delta).powf(a - 1.0) * delta + a * ((self.rho() + delta) / l).powf(a - 1.0) * delta
        }
    }

    /// Radius around the face beyond which no environment point can take part
    /// in a path cheap enough to matter.
    pub fn truncation_radius(&self) -> f64 {
        let budget = self.max_threshold() + self.margin();
        if self.alpha < 1.0 {
            // sum a_i^alpha <= B forces sum a_i <= B^(1/alpha)
            budget.powf(1.0 / self.alpha)
        } else {
            // Hoelder: sum a_i <= L^(1 - 1/alpha) (sum a_i^alpha)^(1/alpha)
            let l = self.slab_length() as f64;
            (budget * l.powf(self.alpha - 1.0)).powf(1.0 / self.alpha)
        }
    }

    /// Grid vertices covering `x + [-2, 2]^d`.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let per_axis = (4.0 / self.grid_step).ceil() as usize + 1;
        let step = 4.0 / (per_axis - 1) as f64;
        let d = self.dim();
        let mut out = Vec::with_capacity(per_axis.pow(d as u32));
        let mut idx = vec![0usize; d];
        loop {
            out.push(
                idx.iter()
                    .zip(&self.x)
                    .map(|(&i, &c)| c as f64 - 2.0 + i as f64 * step)
                    .collect(),
            );
            let mut axis = 0;
            loop {
                if axis == d {
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    /// Lattice targets of the `alpha > 1` condition.
    pub fn lattice_targets(&self) -> Vec<Vec<f64>> {
        let r = 2.0 * self.m * self.slab_length() as f64;
        let span = r.floor() as i64;
        let d = self.dim();
        let mut out = Vec::new();
        let mut off = vec![-span; d];
        loop {
            let norm2: i64 = off.iter().map(|o| o * o).sum();
            if (norm2 as f64).sqrt() <= r {
                out.push(off.iter().zip(&self.x).map(|(&o, &c)| (c + o) as f64).collect());
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    return out;
                }
                off[axis] += 1;
                if off[axis] <= span {
                    break;
                }
                off[axis] = -span;
                axis += 1;
            }
        }
    }
}

/// Euclidean distance to the nearest point of `Z^d`.
pub fn lattice_distance(p: &[f64]) -> f64 {
    p.iter().map(|c| (c - c.round()) * (c - c.round())).sum::<f64>().sqrt()
}

/// Interior layers of the slab, checked against the environment range.
fn interior<'a>(env: &'a Environment, face: &FaceSpec) -> Result<Vec<&'a Layer>> {
    face.validate()?;
    if env.dim() != face.dim() {
        return invalid(format!("face of dimension {} in a {}-dimensional environment", face.dim(), env.dim()));
    }
    let (t0, t1) = face.times();
    if t1 > env.n() {
        return Err(Error::NotCovered {
            first: t0,
            last: t1,
            available: env.n(),
        });
    }
    Ok((t0 + 1..t1).map(|t| env.layer(t)).collect())
}

/// Cost-to-go from each point of the first interior layer, given the cost
/// of finishing from each point of the last one.
fn backward(layers: &[&Layer], cost: &JumpCost, finish: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let Some(last) = layers.last() else {
        return Vec::new();
    };
    let mut to_go: Vec<f64> = last.points().map(&finish).collect();
    for pair in layers.windows(2).rev() {
        let (here, next) = (pair[0], pair[1]);
        to_go = here.points().map(|p| best_hop(p, next, &to_go, cost)).collect();
    }
    to_go
}

/// `min_q |p - q|^alpha + to_go[q]`.
fn best_hop(p: &[f64], layer: &Layer, to_go: &[f64], cost: &JumpCost) -> f64 {
    let mut best = f64::INFINITY;
    for (q, &g) in layer.points().zip(to_go) {
        if g >= best {
            continue;
        }
        let v = g + cost.of(distance(p, q));
        if v < best {
            best = v;
        }
    }
    best
}

/// Cheapest passage from free start `v` to the lattice section, `alpha < 1`
/// form: the target may be any point of `Z^d`, so the last hop goes to the
/// nearest lattice point.
pub fn lattice_infimum(env: &Environment, face: &FaceSpec, v: &[f64]) -> Result<f64> {
    let layers = interior(env, face)?;
    let cost = JumpCost::new(face.alpha)?;
    let finish = |p: &[f64]| cost.of(lattice_distance(p));
    if layers.is_empty() {
        return Ok(finish(v));
    }
    let to_go = backward(&layers, &cost, finish);
    Ok(best_hop(v, layers[0], &to_go, &cost))
}

/// `T_{v,w}` from free `v` at time `kL` to free `w` at time `(k + 1)L`.
pub fn slab_passage_time(env: &Environment, face: &FaceSpec, v: &[f64], w: &[f64]) -> Result<f64> {
    let layers = interior(env, face)?;
    let cost = JumpCost::new(face.alpha)?;
    if layers.is_empty() {
        return Ok(cost.of(distance(v, w)));
    }
    let to_go = backward(&layers, &cost, |p| cost.of(distance(p, w)));
    Ok(best_hop(v, layers[0], &to_go, &cost))
}

/// Whether the face is black, by the grid check with rigor margin described
/// in the module documentation.
pub fn is_black(env: &Environment, face: &FaceSpec) -> Result<bool> {
    let layers = interior(env, face)?;
    // Dropping points can only raise passage times, so a failure on the
    // points near the face is final. This keeps large-threshold checks,
    // whose truncation radius is huge, from scanning the whole slab.
    let reach = 2.0 + NEAR_RADIUS;
    let near: Vec<Layer> = layers
        .iter()
        .map(|l| l.filtered(|p| p.iter().zip(&face.x).all(|(c, &x)| (c - x as f64).abs() <= reach)))
        .collect();
    if near.iter().zip(&layers).any(|(a, b)| a.len() < b.len()) {
        let near: Vec<&Layer> = near.iter().collect();
        if !grid_check(&near, face)? {
            return Ok(false);
        }
    }
    grid_check(&layers, face)
}

const NEAR_RADIUS: f64 = 4.0;

fn grid_check(layers: &[&Layer], face: &FaceSpec) -> Result<bool> {
    let cost = JumpCost::new(face.alpha)?;
    let margin = face.margin();
    let grid = face.grid();
    let reach = |to_go: &[f64], g: &[f64]| -> f64 {
        if layers.is_empty() {
            f64::NAN
        } else {
            best_hop(g, layers[0], to_go, &cost)
        }
    };

    if face.alpha < 1.0 {
        let finish = |p: &[f64]| cost.of(lattice_distance(p));
        let to_go = backward(layers, &cost, finish);
        let need = face.threshold() + margin;
        return Ok(grid.iter().all(|g| {
            let t = if layers.is_empty() { finish(g) } else { reach(&to_go, g) };
            t >= need
        }));
    }

    let l = face.slab_length() as f64;
    for w in face.lattice_targets() {
        let to_go = backward(layers, &cost, |p| cost.of(distance(p, &w)));
        for g in &grid {
            let t = if layers.is_empty() {
                cost.of(distance(g, &w))
            } else {
                reach(&to_go, g)
            };
            let need = ((distance(g, &w) / l).powf(face.alpha) + face.c1) * l + margin;
            if t < need {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The defining inequality at a single start point, with no margin.
pub fn black_at(env: &Environment, face: &FaceSpec, v: &[f64]) -> Result<bool> {
    if face.alpha < 1.0 {
        return Ok(lattice_infimum(env, face, v)? >= face.threshold());
    }
    let l = face.slab_length() as f64;
    for w in face.lattice_targets() {
        let t = slab_passage_time(env, face, v, &w)?;
        if t < ((distance(v, &w) / l).powf(face.alpha) + face.c1) * l {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest window that holds every environment point able to influence
/// [`is_black`] for the face at block 0, center 0.
pub fn slab_window(face: &FaceSpec) -> Result<WindowSpec> {
    WindowSpec::new(2.0 + face.truncation_radius() + 0.5, face.dim())
}

/// Black-probability estimate with its binomial standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackEstimate {
    pub c1: f64,
    pub beta: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub trials: usize,
    pub estimate: f64,
    pub stderr: f64,
}

/// Fraction of independent Poisson slabs on which the face is black. By
/// stationarity every trial uses the face at block 0 centred at the origin;
/// `face.k` and `face.x` are ignored.
pub fn estimate_black_probability(face: &FaceSpec, trials: usize, seed: u64) -> Result<BlackEstimate> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let face = FaceSpec {
        k: 0,
        x: vec![0; face.dim().max(1)],
        ..face.clone()
    };
    face.validate()?;
    let l = face.slab_length();
    let window = slab_window(&face)?;
    let black: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(l, face.dim(), window, derive_seed(&[seed, i as u64]))?;
            is_black(&env, &face)
        })
        .collect::<Result<_>>()?;
    let hits = black.iter().filter(|&&b| b).count();
    let p = hits as f64 / trials as f64;
    Ok(BlackEstimate {
        c1: face.c1,
        beta: face.beta,
        alpha: face.alpha,
        l,
        trials,
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// Random start point inside the face, for spot checks.
pub fn random_face_point(face: &FaceSpec, seed: u64) -> Vec<f64> {
    let mut rng = stream(&[seed, 0xFACE]);
    face.x
        .iter()
        .map(|&c| c as f64 - 2.0 + 4.0 * rng.random::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::deterministic_environment;

    fn face(alpha: f64, c1: f64) -> FaceSpec {
        FaceSpec {
            log_n: 16.0,
            k: 0,
            x: vec![0],
            beta: 0.5,
            c1,
            m: 1.0,
            alpha,
            grid_step: 0.05,
        }
    }

    #[test]
    fn slab_geometry() {
        let f = face(0.5, 0.1);
        assert_eq!(f.slab_length(), 4);
        assert_eq!(f.times(), (0, 4));
        assert_eq!(FaceSpec { beta: 0.25, ..f.clone() }.slab_length(), 2);
        let g = f.grid();
        assert_eq!(g.len(), 81);
        assert_eq!(g[0], vec![-2.0]);
        assert_eq!(g[80], vec![2.0]);
        assert_eq!(f.lattice_targets().len(), 17);
    }

    #[test]
    fn validation() {
        assert!(FaceSpec { x: vec![2], ..face(0.5, 0.1) }.validate().is_err());
        assert!(FaceSpec { grid_step: 0.6, ..face(0.5, 0.1) }.validate().is_err());
        assert!(face(1.0, 0.1).validate().is_err());
        assert!(face(0.5, 0.0).validate().is_err());
    }

    #[test]
    fn empty_interior_is_black() {
        let env = deterministic_environment(1, vec![vec![], vec![], vec![], vec![vec![0.3]]]).unwrap();
        assert!(is_black(&env, &face(0.5, 100.0)).unwrap());
        assert!(is_black(&env, &face(1.5, 100.0)).unwrap());
    }

    #[test]
    fn zero_cost_chain_is_not_black() {
        let env = deterministic_environment(1, vec![vec![vec![1.0]]; 4]).unwrap();
        assert!(!is_black(&env, &face(0.5, 0.01)).unwrap());
        assert_eq!(lattice_infimum(&env, &face(0.5, 0.01), &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn uncovered_slab_rejected() {
        let env = deterministic_environment(1, vec![vec![vec![1.0]]; 3]).unwrap();
        assert!(matches!(is_black(&env, &face(0.5, 0.01)), Err(Error::NotCovered { .. })));
    }

    #[test]
    fn lattice_distance_examples() {
        assert_eq!(lattice_distance(&[0.25]), 0.25);
        assert_eq!(lattice_distance(&[-1.75]), 0.25);
        assert!((lattice_distance(&[0.3, 2.6]) - 0.5).abs() < 1e-12);
    }
}
