use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::format::fmt_float;
use super::spec::ExperimentSpec;
use crate::channel::Geometry;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::pipeline::{run_seed, SchemeSpec};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the spec's `output_dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Replaces the spec's `master_seed`.
    pub master_seed: Option<u64>,
    /// Record wall-clock times in `results.csv` (breaks byte-identical reruns).
    pub wall_time: bool,
}

/// One sweep point, ready to run.
#[derive(Debug, Clone)]
struct Point {
    value: f64,
    cfg: SystemConfig,
    geometry: Geometry,
    schemes: Vec<SchemeSpec>,
}

/// A validated experiment with every sweep point instantiated.
#[derive(Debug, Clone)]
pub struct Plan {
    pub spec: ExperimentSpec,
    pub options: RunOptions,
    points: Vec<Point>,
}

impl Plan {
    pub fn out_dir(&self) -> &Path {
        self.options.out_dir.as_deref().unwrap_or(&self.spec.output_dir)
    }

    pub fn n_rows(&self) -> usize {
        self.points.iter().map(|p| p.schemes.len()).sum::<usize>() * self.spec.n_seeds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub value: f64,
    pub scheme: String,
    pub seed: u64,
    pub sum_rate_bits: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub results_csv: PathBuf,
    pub manifest: PathBuf,
    pub wall_secs: f64,
}

/// Parses and validates a spec file. Every error here is a configuration error.
pub fn prepare(spec_path: &Path, options: RunOptions) -> Result<Plan> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = ExperimentSpec::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {}", spec_path.display(), e.to_string().trim_start_matches("config error: "))))?;
    if let Some(seed) = options.master_seed {
        spec.master_seed = seed;
    }
    if options.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    spec.validate()?;
    let points = spec
        .sweep_values
        .iter()
        .map(|&value| {
            let (cfg, geometry, schemes) = spec.instantiate(value)?;
            Ok(Point { value, cfg, geometry, schemes })
        })
        .collect::<Result<_>>()?;
    Ok(Plan { spec, options, points })
}

/// Runs the plan and writes `results.csv`, `timings.csv` and `manifest.json`.
///
/// Each seed's realization is shared by all sweep values, so the sweep is
/// paired across values as well as across schemes.
pub fn execute(plan: &Plan) -> Result<RunReport> {
    let start = Instant::now();
    let out = plan.out_dir();
    fs::create_dir_all(out)?;

    let items: Vec<(usize, u64)> =
        (0..plan.points.len()).flat_map(|p| (0..plan.spec.n_seeds as u64).map(move |s| (p, s))).collect();
    let work = || -> Result<Vec<Vec<(usize, usize, ResultRow)>>> {
        items
            .par_iter()
            .map(|&(p, seed)| {
                let point = &plan.points[p];
                let results = run_seed(&point.cfg, &point.geometry, &point.schemes, plan.spec.master_seed, seed)?;
                Ok(results
                    .into_iter()
                    .enumerate()
                    .map(|(s, r)| {
                        let row = ResultRow {
                            value: point.value,
                            scheme: r.scheme,
                            seed,
                            sum_rate_bits: r.sum_rate / std::f64::consts::LN_2,
                            iterations: r.iterations,
                            wall_ms: r.wall_secs * 1e3,
                            converged: r.converged,
                        };
                        (p, s, row)
                    })
                    .collect())
            })
            .collect()
    };
    let collected = match plan.options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut keyed: Vec<(usize, usize, ResultRow)> = collected.into_iter().flatten().collect();
    keyed.sort_by_key(|(p, s, r)| (*p, *s, r.seed));
    let rows: Vec<ResultRow> = keyed.into_iter().map(|(_, _, r)| r).collect();

    let results_csv = out.join("results.csv");
    write_results(&results_csv, &plan.spec.sweep.to_string(), &rows, plan.options.wall_time)?;
    write_timings(&out.join("timings.csv"), &rows)?;
    let wall_secs = start.elapsed().as_secs_f64();
    let manifest = out.join("manifest.json");
    write_manifest(&manifest, plan, rows.len(), wall_secs)?;
    Ok(RunReport { rows, results_csv, manifest, wall_secs })
}

/// [`prepare`] followed by [`execute`].
pub fn run(spec_path: &Path, options: RunOptions) -> Result<RunReport> {
    execute(&prepare(spec_path, options)?)
}

fn write_results(path: &Path, sweep: &str, rows: &[ResultRow], wall_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep_param", "value", "scheme", "seed", "sum_rate_bits", "iterations", "wall_ms", "converged"])?;
    for r in rows {
        let wall = if wall_time { fmt_float(r.wall_ms) } else { "0".into() };
        w.write_record([
            sweep.to_string(),
            fmt_float(r.value),
            r.scheme.clone(),
            r.seed.to_string(),
            fmt_float(r.sum_rate_bits),
            r.iterations.to_string(),
            wall,
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_timings(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value", "scheme", "seed", "wall_ms"])?;
    for r in rows {
        w.write_record([fmt_float(r.value), r.scheme.clone(), r.seed.to_string(), fmt_float(r.wall_ms)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    threads: Option<usize>,
    wall_time_recorded: bool,
    rows: usize,
    wall_secs: f64,
    seed_rule: &'static str,
    spec: &'a ExperimentSpec,
}

fn write_manifest(path: &Path, plan: &Plan, rows: usize, wall_secs: f64) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: plan.spec.master_seed,
        threads: plan.options.threads,
        wall_time_recorded: plan.options.wall_time,
        rows,
        wall_secs,
        seed_rule: "child = splitmix64(master ^ splitmix64(seed) ^ fnv1a(tag)); tags: ues, angles, channels, scheme:<init class>",
        spec: &plan.spec,
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
