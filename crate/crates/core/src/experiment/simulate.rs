use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, write_json, ExperimentConfig};
use crate::env::{sample_environment, window_adequate, WindowSpec};
use crate::error::{Error, Result};
use crate::geodesic::{geodesic_to_hyperplane, JumpConstraint, Outcome};
use crate::rng::derive_seed;
use crate::stats::{fit_exponent, summarize, BatchSummary, ExponentFit, SampleRecord};

/// Seed of one sample: a hash of the master seed, the cell coordinates and
/// the sample id.
pub fn sample_seed(master: u64, alpha_index: usize, n_index: usize, sample_id: u64) -> u64 {
    derive_seed(&[master, alpha_index as u64, n_index as u64, sample_id])
}

/// File stem of a cell, e.g. `alpha0.5_n1024`.
pub fn cell_stem(alpha: f64, n: usize) -> String {
    format!("alpha{alpha}_n{n}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub alpha: f64,
    pub n: usize,
    pub status: CellStatus,
    pub records: String,
    pub summary: Option<String>,
    pub boundary_retries: usize,
    pub reason: Option<String>,
}

/// The part of the configuration that determines output bytes. Thread count
/// and output directory are left out, so manifests of equivalent runs match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub d: usize,
    pub samples_per_cell: usize,
    pub master_seed: u64,
    pub window_factor: f64,
    pub window_exponent: f64,
    pub jump_cap: Option<f64>,
    pub margin_fraction: f64,
}

impl From<&ExperimentConfig> for GridSettings {
    fn from(c: &ExperimentConfig) -> Self {
        GridSettings {
            alphas: c.alphas.clone(),
            ns: c.ns.clone(),
            d: c.d,
            samples_per_cell: c.samples_per_cell,
            master_seed: c.master_seed,
            window_factor: c.window_factor,
            window_exponent: c.window_exponent,
            jump_cap: c.jump_cap,
            margin_fraction: c.margin_fraction,
        }
    }
}

/// Every artifact of a simulate run, paths relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub grid: GridSettings,
    pub cells: Vec<ManifestCell>,
    pub exponents: Vec<String>,
    pub failed_cells: Vec<String>,
}

impl Manifest {
    pub fn is_complete(&self) -> bool {
        self.failed_cells.is_empty()
    }
}

#[derive(Serialize)]
struct ExponentReport {
    alpha: f64,
    d: usize,
    max_jump: Option<ExponentFit>,
    max_displacement: Option<ExponentFit>,
    var_passage_time: Option<ExponentFit>,
}

struct SampleRun {
    record: SampleRecord,
    retried: bool,
    points: usize,
}

/// One sample: sample, solve, and on boundary contact retry once in the
/// doubled window. The doubled window only adds points, so the retry sees
/// the same environment near the origin.
fn run_sample(config: &ExperimentConfig, ai: usize, ni: usize, sample_id: u64) -> Result<SampleRun> {
    let alpha = config.alphas[ai];
    let n = config.ns[ni];
    let d = config.d;
    let seed = sample_seed(config.master_seed, ai, ni, sample_id);
    let constraint = JumpConstraint::from_option(config.jump_cap)?;
    let mut window = WindowSpec::scaled(n, d, config.window_factor, config.window_exponent)?;
    let mut points = 0;
    for attempt in 0..2 {
        let env = sample_environment(n, d, window, seed)?;
        points += env.total_points();
        let result = match geodesic_to_hyperplane(&env, alpha, constraint)? {
            Outcome::Reached(r) => r,
            Outcome::Unreachable => {
                eprintln!("alpha={alpha} n={n} sample {sample_id}: no admissible path");
                return Ok(SampleRun {
                    record: SampleRecord::unreachable(sample_id, seed, n, alpha, d),
                    retried: attempt > 0,
                    points,
                });
            }
        };
        let adequate = window_adequate(&result, &window, config.margin_fraction);
        if adequate || attempt == 1 {
            if !adequate {
                eprintln!(
                    "alpha={alpha} n={n} sample {sample_id}: boundary contact persists at W={}, flagged",
                    window.half_width()
                );
            }
            let mut record = SampleRecord::from_result(sample_id, seed, n, alpha, d, &result);
            record.boundary_hit = !adequate;
            return Ok(SampleRun {
                record,
                retried: attempt > 0,
                points,
            });
        }
        eprintln!(
            "alpha={alpha} n={n} sample {sample_id}: boundary contact at W={}, retrying with doubled window",
            window.half_width()
        );
        window = window.doubled();
    }
    unreachable!("the loop returns on its second attempt")
}

/// Records of one `(alpha, n)` cell, sorted by sample id, computed on the
/// current rayon pool.
pub fn simulate_cell(config: &ExperimentConfig, alpha_index: usize, n_index: usize) -> Result<Vec<SampleRecord>> {
    Ok(cell_runs(config, alpha_index, n_index)?
        .into_iter()
        .map(|r| r.record)
        .collect())
}

fn cell_runs(config: &ExperimentConfig, ai: usize, ni: usize) -> Result<Vec<SampleRun>> {
    let mut runs: Vec<SampleRun> = (0..config.samples_per_cell as u64)
        .into_par_iter()
        .map(|id| run_sample(config, ai, ni, id))
        .collect::<Result<_>>()?;
    runs.sort_by_key(|r| r.record.sample_id);
    Ok(runs)
}

/// Runs the full grid under `config.output_dir`, skipping cells whose
/// completion marker exists.
pub fn run_simulate(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let pool = thread_pool(config.threads)?;
    pool.install(|| run_simulate_in(config))
}

/// As [`run_simulate`], on the caller's rayon pool.
pub fn run_simulate_in(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    let mut cells = Vec::new();
    let mut exponents = Vec::new();
    for (ai, &alpha) in config.alphas.iter().enumerate() {
        let mut summaries: Vec<BatchSummary> = Vec::new();
        for (ni, &n) in config.ns.iter().enumerate() {
            let cell = match load_done_cell(out, alpha, n)? {
                Some(cell) => {
                    eprintln!("alpha={alpha} n={n}: complete, skipped");
                    cell
                }
                None => compute_cell(config, ai, ni)?,
            };
            if let Some(s) = &cell.summary {
                let text = std::fs::read_to_string(out.join(s))?;
                summaries.push(serde_json::from_str(&text)?);
            }
            cells.push(cell);
        }
        let series = |f: fn(&BatchSummary) -> f64| -> Option<ExponentFit> {
            let pts: Vec<(f64, f64)> = summaries.iter().map(|s| (s.n as f64, f(s))).collect();
            fit_exponent(&pts).ok()
        };
        let report = ExponentReport {
            alpha,
            d: config.d,
            max_jump: series(|s| s.mean_max_jump),
            max_displacement: series(|s| s.mean_max_displacement),
            var_passage_time: series(|s| s.var_passage_time),
        };
        let name = format!("alpha{alpha}.exponents.json");
        write_json(&out.join(&name), &report)?;
        exponents.push(name);
    }
    let failed_cells = cells
        .iter()
        .filter(|c| c.status == CellStatus::Failed)
        .map(|c| cell_stem(c.alpha, c.n))
        .collect();
    let manifest = Manifest {
        grid: GridSettings::from(config),
        cells,
        exponents,
        failed_cells,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn load_done_cell(out: &Path, alpha: f64, n: usize) -> Result<Option<ManifestCell>> {
    let stem = cell_stem(alpha, n);
    let marker = out.join(format!("{stem}.done"));
    if !marker.exists() {
        return Ok(None);
    }
    let cell: ManifestCell = match serde_json::from_str(&std::fs::read_to_string(&marker)?) {
        Ok(c) => c,
        Err(_) => return Ok(None),
    };
    let files_present =
        out.join(&cell.records).exists() && cell.summary.as_ref().is_none_or(|s| out.join(s).exists());
    Ok(files_present.then_some(cell))
}

fn compute_cell(config: &ExperimentConfig, ai: usize, ni: usize) -> Result<ManifestCell> {
    let (alpha, n) = (config.alphas[ai], config.ns[ni]);
    let out = &config.output_dir;
    let stem = cell_stem(alpha, n);
    let started = Instant::now();
    let runs = cell_runs(config, ai, ni)?;
    let records: Vec<SampleRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let boundary_retries = runs.iter().filter(|r| r.retried).count();
    let points: usize = runs.iter().map(|r| r.points).sum();

    let records_name = format!("{stem}.csv");
    let mut writer = csv::Writer::from_path(out.join(&records_name))?;
    for r in &records {
        writer.serialize(r)?;
    }
    writer.flush()?;

    let unreachable = records.iter().filter(|r| r.is_unreachable()).count();
    let (summary, mut reason) = match summarize(&records, true) {
        Ok(s) => {
            let name = format!("{stem}.summary.json");
            write_json(&out.join(&name), &s)?;
            (Some(name), None)
        }
        Err(Error::InvalidParameter(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    if unreachable > 0 && reason.is_none() {
        reason = Some(format!("{unreachable} of {} samples admit no open path", records.len()));
    }
    let status = if reason.is_some() { CellStatus::Failed } else { CellStatus::Ok };
    eprintln!(
        "alpha={alpha} n={n}: {} samples in {:.2?}, {:.0} points per sample, {boundary_retries} boundary retries{}",
        records.len(),
        started.elapsed(),
        points as f64 / records.len() as f64,
        reason.as_ref().map_or(String::new(), |r| format!(", FAILED: {r}"))
    );
    let cell = ManifestCell {
        alpha,
        n,
        status,
        records: records_name,
        summary,
        boundary_retries,
        reason,
    };
    write_json(&out.join(format!("{stem}.done")), &cell)?;
    Ok(cell)
}
