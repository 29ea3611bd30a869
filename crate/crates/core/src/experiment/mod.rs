//! Experiment runner: configs in, canonical CSV records out.
//!
//! The CSV holds only values that are a function of the config and the
//! master seed, so reruns are byte-identical. Wall-clock times go to a
//! JSON sidecar next to it.

mod config;
mod record;
mod runners;
mod verify;

pub use config::{ExperimentConfig, EXPERIMENTS};
pub use record::{canonical_cmp, fmt_f64, read_records, write_records, Method, ResultRecord, CSV_HEADER};
pub use verify::{verify, verify_file, CriterionReport, Verdict, VerifyReport};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;

/// Named experiment bundles.
pub const RECIPES: &[(&str, &str, &[&str])] = &[
    (
        "paper-suite",
        "every acceptance experiment at its default parameters",
        &[
            "oracle",
            "annealed-identity",
            "critical-point",
            "doney",
            "a-of-r",
            "tilt-moments",
            "borne-m",
            "coarse",
            "halfnormal",
            "jensen",
            "chernoff",
        ],
    ),
    ("exact-suite", "the deterministic experiments only", &["critical-point", "doney", "a-of-r", "tilt-moments", "halfnormal", "chernoff"]),
    ("tilt-suite", "tilted correlations and the change-of-measure bound", &["a-of-r", "tilt-moments", "borne-m"]),
];

pub fn recipe(name: &str) -> Option<&'static [&'static str]> {
    RECIPES.iter().find(|(n, _, _)| *n == name).map(|(_, _, e)| *e)
}

/// Experiment ids of the config with recipes expanded, duplicates dropped.
pub fn expand(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in &cfg.experiments {
        let ids: Vec<String> = match recipe(e) {
            Some(list) => list.iter().map(|s| s.to_string()).collect(),
            None => vec![e.clone()],
        };
        for id in ids {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub experiment: String,
    pub wall_seconds: f64,
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Records in canonical order.
    pub records: Vec<ResultRecord>,
    pub timings: Vec<Timing>,
}

/// Runs every experiment of the config. With `workers` set the work runs
/// on a dedicated pool of that size; the records do not depend on it.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
            pool.install(|| run_inner(cfg))
        }
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut ctx = runners::Ctx::new(cfg)?;
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for id in expand(cfg) {
        log::info!("running {id}");
        let t0 = Instant::now();
        let recs = ctx.run(&id)?;
        let wall_seconds = t0.elapsed().as_secs_f64();
        log::info!("{id}: {} records in {wall_seconds:.2} s", recs.len());
        timings.push(Timing { experiment: id, wall_seconds, records: recs.len() });
        records.extend(recs);
    }
    records.sort_by(canonical_cmp);
    Ok(RunOutput { records, timings })
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema: &'static str,
    config: String,
    seed: u64,
    workers: usize,
    timings: &'a [Timing],
}

/// Writes the CSV (atomically) and its JSON sidecar.
pub fn write_outputs(cfg: &ExperimentConfig, output: &RunOutput) -> Result<()> {
    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = cfg.out.with_extension("csv.tmp");
    write_records(fs::File::create(&tmp)?, &output.records)?;
    fs::rename(&tmp, &cfg.out)?;
    let side = Sidecar {
        schema: "v1",
        config: cfg.to_text(),
        seed: cfg.seed,
        workers: cfg.workers.unwrap_or_else(rayon::current_num_threads),
        timings: &output.timings,
    };
    fs::write(sidecar_path(&cfg.out), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}
