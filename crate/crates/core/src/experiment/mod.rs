//! Batch experiment driver: configuration, the simulate grid, single geodesic
//! dumps, black-face sweeps and the tunnel demonstration.

mod demo;
mod simulate;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{DEFAULT_WINDOW_EXPONENT, DEFAULT_WINDOW_FACTOR};

pub use demo::{
    run_blackface, run_geodesic_dump, run_tunnel_demo, BlackfaceParams, BlackfaceReport, DumpOutcome, DumpParams,
    TunnelParams, TunnelReport,
};
pub use simulate::{
    cell_stem, run_simulate, run_simulate_in, sample_seed, simulate_cell, CellStatus, GridSettings, Manifest,
    ManifestCell,
};

pub const ENV_OUT: &str = "DFPP_OUT";
pub const ENV_THREADS: &str = "DFPP_THREADS";

/// Worker-thread count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Threads {
    /// Rayon convention: 0 means one thread per core.
    pub fn get(self) -> usize {
        match self {
            Threads::Auto => 0,
            Threads::Count(n) => n,
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => invalid(format!("threads must be a positive integer or \"auto\", got {s:?}")),
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Count(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) if n > 0 => Ok(Threads::Count(n as usize)),
            Repr::Count(_) => Err(serde::de::Error::custom("threads must be positive")),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Experiment grid and run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub d: usize,
    pub samples_per_cell: usize,
    pub master_seed: u64,
    pub window_factor: f64,
    pub window_exponent: f64,
    pub jump_cap: Option<f64>,
    pub margin_fraction: f64,
    pub output_dir: PathBuf,
    pub threads: Threads,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alphas: vec![0.5, 0.8, 1.2],
            ns: vec![256, 512, 1024],
            d: 1,
            samples_per_cell: 200,
            master_seed: 1,
            window_factor: DEFAULT_WINDOW_FACTOR,
            window_exponent: DEFAULT_WINDOW_EXPONENT,
            jump_cap: None,
            margin_fraction: crate::geodesic::DEFAULT_MARGIN_FRACTION,
            output_dir: PathBuf::from("dfpp-out"),
            threads: Threads::Auto,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `DFPP_OUT` and `DFPP_THREADS` from the given lookup.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(out) = lookup(ENV_OUT) {
            self.output_dir = PathBuf::from(out);
        }
        if let Some(t) = lookup(ENV_THREADS) {
            self.threads = t.parse()?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return invalid(format!("alphas must be a nonempty list of positive reals, got {:?}", self.alphas));
        }
        let mut sorted = self.alphas.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("alphas must be distinct");
        }
        if self.ns.is_empty() || self.ns[0] == 0 || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("ns must be positive and strictly increasing, got {:?}", self.ns));
        }
        if self.d == 0 {
            return invalid("d must be at least 1");
        }
        if self.samples_per_cell == 0 {
            return invalid("samples_per_cell must be at least 1");
        }
        if !(self.window_factor > 0.0 && self.window_factor.is_finite()) {
            return invalid(format!("window_factor must be positive, got {}", self.window_factor));
        }
        if !self.window_exponent.is_finite() {
            return invalid("window_exponent must be finite");
        }
        if let Some(c) = self.jump_cap {
            if !(c > 0.0) {
                return invalid(format!("jump_cap must be positive, got {c}"));
            }
        }
        if !(self.margin_fraction > 0.0 && self.margin_fraction < 0.5) {
            return invalid(format!("margin_fraction must lie in (0, 0.5), got {}", self.margin_fraction));
        }
        Ok(())
    }
}

/// CLI exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Format(_) | Error::WindowTooLarge { .. } | Error::NotCovered { .. } => 2,
        _ => 1,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn thread_pool(threads: Threads) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.get())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}
