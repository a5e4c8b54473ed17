//! Tunneling tubes.
//!
//! A tube of length `L` starts at the anchor `(t0, a)` and drifts by `D` per
//! step. At every interior time `t0 + l`, `1 <= l < L`, the narrow ball of
//! radius `r` around `a + l D` (shifted by `1.5 gap e1` at `l = floor(L/2)`)
//! must hold exactly one point, and the wide ball of radius `R` around
//! `a + l D` nothing else. The endpoint sections hold only the anchors
//! `a` and `a + L D`.
//!
//! Any path that enters at the anchor and leaves at the far anchor with jumps
//! bounded well below `R` is forced through the single points, and so makes
//! two jumps of length about `1.5 gap` around the middle.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{distance, Environment, SpacePoint, WindowSpec};
use crate::error::{invalid, Result};
use crate::geodesic::TimeSpacePoint;
use crate::rng::stream;

/// Geometry of one tube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub anchor: TimeSpacePoint,
    /// Per-step drift `D`; zero when `alpha < 1`.
    pub direction: SpacePoint,
    /// Number of steps `L`.
    pub length: usize,
    /// Gap scale `(log n)^epsilon`; the middle ball is offset by `1.5 gap`.
    pub gap: f64,
    pub narrow_radius: f64,
    pub wide_radius: f64,
    pub alpha: f64,
    /// Bound on `|D|` when `alpha > 1`.
    pub max_drift: f64,
}

impl TubeSpec {
    /// Tube with the scales `L = ceil((log n)^beta)`, `gap = (log n)^epsilon`,
    /// `r = c1^(2 / min(alpha, 1))` and `R = (log n)^(2 beta)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_scales(
        anchor: TimeSpacePoint,
        direction: SpacePoint,
        log_n: f64,
        beta: f64,
        epsilon: f64,
        c1: f64,
        max_drift: f64,
        alpha: f64,
    ) -> Result<Self> {
        if !(log_n > 0.0 && beta > 0.0 && epsilon > 0.0 && c1 > 0.0) {
            return invalid("log n, beta, epsilon and c1 must be positive");
        }
        let spec = TubeSpec {
            anchor,
            direction,
            length: log_n.powf(beta).ceil() as usize,
            gap: log_n.powf(epsilon),
            narrow_radius: c1.powf(2.0 / alpha.min(1.0)),
            wide_radius: log_n.powf(2.0 * beta),
            alpha,
            max_drift,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.anchor.x.dim();
        if self.direction.dim() != d {
            return invalid("direction and anchor dimensions differ");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return invalid(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.length < 2 {
            return invalid(format!("a tube needs at least 2 steps, got {}", self.length));
        }
        if !(self.narrow_radius > 0.0 && self.narrow_radius < self.wide_radius) {
            return invalid(format!(
                "need 0 < narrow radius < wide radius, got {} and {}",
                self.narrow_radius, self.wide_radius
            ));
        }
        if !(self.gap >= 2.0 * self.narrow_radius) {
            return invalid(format!(
                "gap {} is smaller than twice the narrow radius {}; the middle offset would not force a jump",
                self.gap, self.narrow_radius
            ));
        }
        if 1.5 * self.gap + self.narrow_radius >= self.wide_radius {
            return invalid("the offset middle ball does not fit inside the wide tube");
        }
        let drift = self.direction.norm();
        if self.alpha < 1.0 && drift != 0.0 {
            return invalid("the drift must vanish when alpha < 1");
        }
        if self.alpha > 1.0 && !(drift <= self.max_drift) {
            return invalid(format!("drift {drift} exceeds the bound {}", self.max_drift));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.anchor.x.dim()
    }

    /// Offset step `floor(L / 2)`.
    pub fn middle(&self) -> usize {
        self.length / 2
    }

    /// Axis of the tube at step `l`: `a + l D`.
    pub fn axis(&self, l: usize) -> Vec<f64> {
        self.anchor
            .x
            .coords()
            .iter()
            .zip(self.direction.coords())
            .map(|(a, dd)| a + l as f64 * dd)
            .collect()
    }

    /// Center of the narrow ball at step `l`.
    pub fn center(&self, l: usize) -> Vec<f64> {
        let mut c = self.axis(l);
        if l == self.middle() {
            c[0] += 1.5 * self.gap;
        }
        c
    }

    /// `(t0 + L, a + L D)`.
    pub fn end(&self) -> TimeSpacePoint {
        TimeSpacePoint::new(self.anchor.t + self.length, SpacePoint::from_slice(&self.axis(self.length)))
    }

    /// Bounds on the largest jump of any path through the tube:
    /// `1.5 gap -/+ (2r + |D|)`.
    pub fn forced_jump_bounds(&self) -> (f64, f64) {
        let slack = 2.0 * self.narrow_radius + self.direction.norm();
        (1.5 * self.gap - slack, 1.5 * self.gap + slack)
    }

    /// Jump cap that admits the path through the tube.
    pub fn traversal_cap(&self) -> f64 {
        1.5 * self.gap + self.direction.norm() + 2.0 * self.narrow_radius
    }

    /// Whether `p` lies in the wide ball at step `l`.
    pub fn in_wide(&self, l: usize, p: &[f64]) -> bool {
        distance(p, &self.axis(l)) <= self.wide_radius
    }
}

/// Points of a tube by step: entry `l` holds the points at time `t0 + l`.
pub type TubePoints = Vec<Vec<SpacePoint>>;

/// The canonical tunneling configuration: the two anchors plus one uniform
/// point in each interior narrow ball.
pub fn build_tunneling_tube(spec: &TubeSpec, seed: u64) -> Result<TubePoints> {
    spec.validate()?;
    let d = spec.dim();
    let mut rng = stream(&[seed, 0x7B3E]);
    let mut out = Vec::with_capacity(spec.length + 1);
    out.push(vec![spec.anchor.x.clone()]);
    for l in 1..spec.length {
        let center = spec.center(l);
        // uniform in the ball: Gaussian direction, radius r U^(1/d)
        let dir: Vec<f64> = loop {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break g.into_iter().map(|x| x / norm).collect();
            }
        };
        let radius = spec.narrow_radius * rng.random::<f64>().powf(1.0 / d as f64);
        let p: Vec<f64> = center.iter().zip(&dir).map(|(c, u)| c + radius * u).collect();
        out.push(vec![SpacePoint::new(p)?]);
    }
    out.push(vec![spec.end().x]);
    Ok(out)
}

/// Checks the tunneling conditions on the points at times `t0 ..= t0 + L`.
/// Balls are closed.
pub fn is_tunneling(points: &[Vec<SpacePoint>], spec: &TubeSpec) -> bool {
    if spec.validate().is_err() || points.len() != spec.length + 1 {
        return false;
    }
    let end = spec.end().x;
    for (l, layer) in points.iter().enumerate() {
        let inside: Vec<&SpacePoint> = layer.iter().filter(|p| spec.in_wide(l, p.coords())).collect();
        let ok = if l == 0 {
            inside.len() == 1 && inside[0] == &spec.anchor.x
        } else if l == spec.length {
            inside.len() == 1 && inside[0] == &end
        } else {
            let center = spec.center(l);
            inside.len() == 1 && distance(inside[0].coords(), &center) <= spec.narrow_radius
        };
        if !ok {
            return false;
        }
    }
    true
}

/// The tube section of an environment. Time 0 is the origin.
pub fn tube_section(env: &Environment, spec: &TubeSpec) -> Result<TubePoints> {
    let last = spec.anchor.t + spec.length;
    if last > env.n() {
        return invalid(format!("environment has {} layers, the tube needs {last}", env.n()));
    }
    Ok((spec.anchor.t..=last)
        .map(|t| if t == 0 { vec![env.origin()] } else { env.layer(t).to_points() })
        .collect())
}

/// Replaces the contents of the wide tube in `background` by `tube`. Layers
/// past the background are created empty first; the window grows to fit.
pub fn embed_tube(background: &Environment, spec: &TubeSpec, tube: &TubePoints) -> Result<Environment> {
    if spec.anchor.t == 0 {
        return invalid("a tube embedded in an environment must start after time 0");
    }
    let n = background.n().max(spec.anchor.t + spec.length);
    let mut layers: Vec<Vec<SpacePoint>> = (1..=n)
        .map(|t| if t <= background.n() { background.layer(t).to_points() } else { Vec::new() })
        .collect();
    for (l, pts) in tube.iter().enumerate() {
        let layer = &mut layers[spec.anchor.t + l - 1];
        layer.retain(|p| !spec.in_wide(l, p.coords()));
        layer.extend(pts.iter().cloned());
    }
    let reach = layers
        .iter()
        .flatten()
        .flat_map(|p| p.coords().iter().map(|c| c.abs()))
        .fold(background.window().half_width(), f64::max);
    let window = WindowSpec::new(reach, background.dim())?;
    Environment::from_layers(window, background.master_seed(), layers)
}
