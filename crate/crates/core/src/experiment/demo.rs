use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::write_json;
use crate::env::{sample_environment, Environment, SpacePoint, WindowSpec};
use crate::error::{invalid, Result};
use crate::geodesic::{
    geodesic_point_to_point, geodesic_to_hyperplane, write_path_dump, JumpConstraint, Outcome, Terminal,
    TimeSpacePoint,
};
use crate::proofcheck::{
    build_tunneling_tube, embed_tube, estimate_black_probability, is_tunneling, tube_section, BlackEstimate,
    FaceSpec, TubeSpec,
};
use crate::rng::derive_seed;
use crate::stats::{DEFAULT_WINDOW_EXPONENT, DEFAULT_WINDOW_FACTOR};

/// Settings of a single geodesic dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpParams {
    pub alpha: f64,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub jump_cap: Option<f64>,
    pub window_factor: f64,
    pub window_exponent: f64,
    /// Read the environment from this JSON-lines file instead of sampling.
    pub env: Option<PathBuf>,
}

impl Default for DumpParams {
    fn default() -> Self {
        DumpParams {
            alpha: 0.6,
            n: 1024,
            d: 1,
            seed: 1,
            jump_cap: None,
            window_factor: DEFAULT_WINDOW_FACTOR,
            window_exponent: DEFAULT_WINDOW_EXPONENT,
            env: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DumpOutcome {
    Written { steps: usize, passage_time: f64, max_jump: f64 },
    Unreachable,
}

/// Samples (or loads) one environment, solves it and writes the path dump.
/// Nothing is written when no admissible path exists.
pub fn run_geodesic_dump<W: Write>(params: &DumpParams, out: W) -> Result<DumpOutcome> {
    let env = match &params.env {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            Environment::read_jsonl(std::io::BufReader::new(file))?
        }
        None => {
            let window = WindowSpec::scaled(params.n, params.d, params.window_factor, params.window_exponent)?;
            sample_environment(params.n, params.d, window, params.seed)?
        }
    };
    let constraint = JumpConstraint::from_option(params.jump_cap)?;
    match geodesic_to_hyperplane(&env, params.alpha, constraint)? {
        Outcome::Reached(r) => {
            write_path_dump(&r, env.master_seed(), out)?;
            Ok(DumpOutcome::Written {
                steps: r.path().len(),
                passage_time: r.passage_time(),
                max_jump: r.max_jump(),
            })
        }
        Outcome::Unreachable => Ok(DumpOutcome::Unreachable),
    }
}

/// A sweep of black-probability estimates over `c1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackfaceParams {
    /// Face parameters; `c1` is overridden by each entry of `c1s`.
    pub face: FaceSpec,
    pub c1s: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackfaceReport {
    /// One estimate per `c1`, in increasing `c1`.
    pub estimates: Vec<BlackEstimate>,
    /// Whether the estimates are nonincreasing in `c1`.
    pub monotone: bool,
}

/// All `c1` values share the trial seeds, so the sweep runs on common slabs.
pub fn run_blackface(params: &BlackfaceParams) -> Result<BlackfaceReport> {
    if params.trials == 0 {
        return invalid("trials must be at least 1");
    }
    if params.c1s.is_empty() {
        return invalid("at least one c1 value is needed");
    }
    let mut c1s = params.c1s.clone();
    c1s.sort_by(f64::total_cmp);
    let estimates = c1s
        .iter()
        .map(|&c1| {
            let face = FaceSpec {
                c1,
                ..params.face.clone()
            };
            estimate_black_probability(&face, params.trials, params.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = estimates.windows(2).all(|w| w[1].estimate <= w[0].estimate);
    Ok(BlackfaceReport { estimates, monotone })
}

/// Tube scales and embedding for the tunnel demonstration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TunnelParams {
    pub log_n: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub alpha: f64,
    /// Per-step drift; its length sets the dimension.
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub anchor_time: usize,
    /// Fill the rest of the window with Poisson points.
    pub background: bool,
    /// Inject one extra point into the wide tube.
    pub contaminate: bool,
    pub seed: u64,
    /// Where to write `tube.jsonl` and `tunnel_report.json`.
    pub out_dir: Option<PathBuf>,
}

impl Default for TunnelParams {
    fn default() -> Self {
        TunnelParams {
            log_n: 40.0,
            beta: 0.5,
            epsilon: 0.3,
            c1: 0.5,
            alpha: 0.5,
            drift: vec![0.0],
            max_drift: 1.0,
            anchor_time: 1,
            background: true,
            contaminate: false,
            seed: 1,
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelReport {
    pub spec: TubeSpec,
    pub is_tunneling: bool,
    pub jump_cap: f64,
    pub reached: bool,
    pub passage_time: Option<f64>,
    pub measured_jump: Option<f64>,
    pub predicted_jump: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Builds a tunneling tube, embeds it, runs the capped point-to-point
/// geodesic from anchor to anchor and compares its largest jump with
/// `1.5 gap`.
pub fn run_tunnel_demo(params: &TunnelParams) -> Result<TunnelReport> {
    let d = params.drift.len();
    if d == 0 {
        return invalid("drift needs at least one coordinate");
    }
    if params.anchor_time == 0 {
        return invalid("anchor_time must be at least 1");
    }
    let anchor = TimeSpacePoint::new(params.anchor_time, SpacePoint::origin(d));
    let spec = TubeSpec::from_scales(
        anchor,
        SpacePoint::new(params.drift.clone())?,
        params.log_n,
        params.beta,
        params.epsilon,
        params.c1,
        params.max_drift,
        params.alpha,
    )?;
    let drift = spec.direction.norm();
    if spec.wide_radius <= 3.0 * spec.gap + 2.0 * drift + 3.0 * spec.narrow_radius {
        return invalid("wide radius too small to isolate the tube from outside points");
    }
    let tube = build_tunneling_tube(&spec, params.seed)?;
    let n = spec.anchor.t + spec.length;
    let reach = (0..=spec.length)
        .map(|l| spec.axis(l).iter().fold(0.0f64, |m, c| m.max(c.abs())))
        .fold(0.0, f64::max);
    let window = WindowSpec::new(reach + spec.wide_radius + 2.0, d)?;
    let background = if params.background {
        sample_environment(n, d, window, derive_seed(&[params.seed, 0xB6]))?
    } else {
        Environment::from_layers(window, params.seed, vec![Vec::new(); n])?
    };
    let mut env = embed_tube(&background, &spec, &tube)?;
    if params.contaminate {
        let l = spec.middle() - 1;
        let mut layers: Vec<Vec<SpacePoint>> = env.layers().iter().map(|layer| layer.to_points()).collect();
        let mut p = spec.axis(l);
        p[0] -= 0.5 * spec.wide_radius;
        layers[spec.anchor.t + l - 1].push(SpacePoint::new(p)?);
        env = Environment::from_layers(*env.window(), env.master_seed(), layers)?;
    }
    let tunneling = is_tunneling(&tube_section(&env, &spec)?, &spec);

    let cap = spec.traversal_cap() * (1.0 + 1e-12);
    let outcome = geodesic_point_to_point(
        &env,
        &spec.anchor,
        &spec.end(),
        spec.alpha,
        Terminal::EnvPoint,
        JumpConstraint::cap(cap)?,
    )?;
    let (lo, hi) = spec.forced_jump_bounds();
    let measured = outcome.as_reached().map(|r| r.max_jump());
    let report = TunnelReport {
        is_tunneling: tunneling,
        jump_cap: cap,
        reached: measured.is_some(),
        passage_time: outcome.as_reached().map(|r| r.passage_time()),
        measured_jump: measured,
        predicted_jump: 1.5 * spec.gap,
        tolerance: hi - 1.5 * spec.gap,
        within_tolerance: measured.is_some_and(|m| lo <= m && m <= hi),
        spec,
    };
    if let Some(dir) = &params.out_dir {
        std::fs::create_dir_all(dir)?;
        let file = std::fs::File::create(dir.join("tube.jsonl"))?;
        env.write_jsonl(std::io::BufWriter::new(file))?;
        write_json(&dir.join("tunnel_report.json"), &report)?;
    }
    Ok(report)
}
