//! Experiment driver: parallel execution, persistence, analysis and search.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod records;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zne::{bootstrap_sigma, cumulative_series, evaluate_pass, mean, CumulativePoint, PassDecision, QvRecord};

pub use config::{ExperimentConfig, FoldingMode, LayoutSelection, ShotBudget};
pub use ingest::{ingest_counts, ingest_counts_file};
pub use pipeline::{prepare_circuit, run_circuit, schedule_for_run, PreparedCircuit};
pub use records::{CircuitOutput, CountsEntry, RunPaths};
pub use report::emit_report;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "QVZNE_WORKERS";

/// XORed into the base seed for the ensemble bootstrap.
const BOOTSTRAP_SALT: u64 = 0x626f_6f74;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub mean_hop: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_exact_hop: Option<f64>,
}

/// Mean, bootstrap σ and pass decision of one per-circuit HOP vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean: f64,
    pub sigma: f64,
    pub lower_2sigma: f64,
    pub decision: PassDecision,
}

impl EnsembleSummary {
    fn of(values: &[f64], resamples: usize, seed: u64) -> Result<Self> {
        let m = mean(values);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = bootstrap_sigma(values, resamples, &mut rng)?;
        Ok(EnsembleSummary {
            mean: m,
            sigma,
            lower_2sigma: m - 2.0 * sigma,
            decision: evaluate_pass(m, sigma),
        })
    }
}

/// Deterministic result of a run; contains no timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub config_hash: String,
    pub n: usize,
    pub num_circuits: usize,
    pub per_lambda: Vec<LambdaSummary>,
    /// Unmitigated (`λ = 1`) HOPs.
    pub raw: EnsembleSummary,
    /// Zero-noise intercepts.
    pub zne: EnsembleSummary,
    /// Intercepts above 1 are kept, not clipped; this counts them.
    pub zne_above_one: usize,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.zne.decision.passed()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub config: ExperimentConfig,
    pub records: Vec<QvRecord>,
    pub summary: Summary,
    pub cumulative: Vec<CumulativePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub circuits_run: usize,
    pub circuits_resumed: usize,
    pub workers: usize,
}

/// Thread count from `QVZNE_WORKERS`, else all cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Per-`λ` vector of per-circuit HOPs, in record order.
pub fn hops_at(records: &[QvRecord], lambda: f64) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.point(lambda)
                .map(|p| p.hop)
                .ok_or_else(|| Error::InsufficientData(format!("circuit {} has no λ = {lambda} point", r.circuit_id)))
        })
        .collect()
}

/// Ensemble statistics of a set of records (sorted by circuit id here).
pub fn analyze(config: &ExperimentConfig, mut records: Vec<QvRecord>) -> Result<BenchmarkReport> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records to analyze".into()));
    }
    records.sort_by_key(|r| r.circuit_id);
    if records.windows(2).any(|w| w[0].circuit_id == w[1].circuit_id) {
        return Err(Error::InvalidArgument("duplicate circuit ids in records".into()));
    }
    let seed = config.base_seed ^ BOOTSTRAP_SALT;
    let resamples = config.bootstrap_resamples;
    let lambdas: BTreeSet<u64> = records
        .iter()
        .flat_map(|r| r.per_lambda.iter().map(|p| p.lambda.to_bits()))
        .collect();
    let mut lambdas: Vec<f64> = lambdas.into_iter().map(f64::from_bits).collect();
    lambdas.sort_by(f64::total_cmp);

    let mut per_lambda = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        let hops = hops_at(&records, lambda)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 + i as u64));
        let exact: Option<Vec<f64>> = records
            .iter()
            .map(|r| r.point(lambda).and_then(|p| p.exact_hop))
            .collect();
        per_lambda.push(LambdaSummary {
            lambda,
            mean_hop: mean(&hops),
            sigma: bootstrap_sigma(&hops, resamples, &mut rng)?,
            mean_exact_hop: exact.map(|e| mean(&e)),
        });
    }
    let raw = EnsembleSummary::of(&hops_at(&records, 1.0)?, resamples, seed)?;
    let intercepts: Vec<f64> = records.iter().map(|r| r.zne.intercept).collect();
    let zne = EnsembleSummary::of(&intercepts, resamples, seed)?;
    let cumulative = cumulative_series(&intercepts, resamples, seed)?;
    let summary = Summary {
        run_id: config.run_id(),
        config_hash: config.hash(),
        n: config.n,
        num_circuits: records.len(),
        per_lambda,
        raw,
        zne,
        zne_above_one: intercepts.iter().filter(|&&v| v > 1.0).count(),
    };
    Ok(BenchmarkReport {
        config: config.clone(),
        records,
        summary,
        cumulative,
    })
}

/// Runs every circuit in memory, without persistence.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let layout = config.layout.resolve(config.n)?;
    let records = pool()?.install(|| {
        (0..config.num_circuits)
            .into_par_iter()
            .map(|id| run_circuit(config, &layout, id).map(|o| o.record))
            .collect::<Result<Vec<_>>>()
    })?;
    analyze(config, records)
}

/// Runs (or resumes) an experiment under `out_root/<run_id>`, writing the
/// record and counts logs, `config.json`, `summary.json`, `timing.json` and the
/// report files.
pub fn run_experiment(config: &ExperimentConfig, out_root: &Path) -> Result<BenchmarkReport> {
    config.validate()?;
    let started = Instant::now();
    let layout = config.layout.resolve(config.n)?;
    let paths = RunPaths::new(out_root.join(config.run_id()));
    std::fs::create_dir_all(&paths.dir).map_err(|e| Error::io(&paths.dir, e))?;
    let config_path = paths.config();
    if config_path.exists() {
        let previous = ExperimentConfig::load(&config_path)?;
        if previous.hash() != config.hash() {
            return Err(Error::Config(format!(
                "{} belongs to a different configuration",
                paths.dir.display()
            )));
        }
    } else {
        std::fs::write(&config_path, config.to_json()).map_err(|e| Error::io(&config_path, e))?;
    }

    let (mut done, counts) = load_complete(config, &paths)?;
    let resumed = done.len();
    records::write_jsonl(&paths.records(), &done)?;
    records::write_jsonl(&paths.counts(), &counts)?;

    let finished: BTreeSet<usize> = done.iter().map(|r| r.circuit_id).collect();
    let pending: Vec<usize> = (0..config.num_circuits).filter(|id| !finished.contains(id)).collect();
    let workers = worker_count()?;
    let writer = records::LogWriter::open(&paths)?;
    let sender = writer.sender();
    let fresh = pool()?.install(|| {
        pending
            .par_iter()
            .map(|&id| {
                let out = run_circuit(config, &layout, id)?;
                let record = out.record.clone();
                // A closed channel means the writer failed; finish() reports it.
                let _ = sender.send(out);
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()
    });
    drop(sender);
    writer.finish()?;
    done.extend(fresh?);

    let report = analyze(config, done)?;
    let summary_path = paths.summary();
    std::fs::write(&summary_path, report.summary.to_json()).map_err(|e| Error::io(&summary_path, e))?;
    let timing = Timing {
        wall_seconds: started.elapsed().as_secs_f64(),
        circuits_run: pending.len(),
        circuits_resumed: resumed,
        workers,
    };
    let timing_path = paths.timing();
    std::fs::write(&timing_path, serde_json::to_string_pretty(&timing).expect("timing serializes"))
        .map_err(|e| Error::io(&timing_path, e))?;
    emit_report(&report, &paths.dir)?;
    Ok(report)
}

/// Records (and their counts) of circuits whose log entries are all present.
fn load_complete(config: &ExperimentConfig, paths: &RunPaths) -> Result<(Vec<QvRecord>, Vec<CountsEntry>)> {
    let records: Vec<QvRecord> = records::read_jsonl_lenient(&paths.records())?;
    let counts: Vec<CountsEntry> = records::read_jsonl_lenient(&paths.counts())?;
    let mut per_id: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &counts {
        *per_id.entry(c.circuit_id).or_default() += 1;
    }
    let want = pipeline::expected_counts_entries(config);
    let mut seen = BTreeSet::new();
    let mut keep: Vec<QvRecord> = records
        .into_iter()
        .filter(|r| r.circuit_id < config.num_circuits && per_id.get(&r.circuit_id) == Some(&want))
        .filter(|r| seen.insert(r.circuit_id))
        .collect();
    keep.sort_by_key(|r| r.circuit_id);
    let mut kept_counts: Vec<CountsEntry> = counts.into_iter().filter(|c| seen.contains(&c.circuit_id)).collect();
    kept_counts.sort_by(|a, b| {
        (a.circuit_id, a.lambda, a.instance)
            .partial_cmp(&(b.circuit_id, b.lambda, b.instance))
            .expect("finite lambdas")
    });
    Ok((keep, kept_counts))
}

/// Result of scanning widths for the largest passing one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvSearch {
    pub summaries: Vec<Summary>,
    /// Largest `n` that passed, if any.
    pub largest_passing: Option<usize>,
    /// `2^largest_passing`, or 1 when nothing passed.
    pub effective_qv: u64,
}

/// Runs widths in ascending order and stops at the first failure.
pub fn effective_qv_search(
    template: &ExperimentConfig,
    widths: std::ops::RangeInclusive<usize>,
    out_root: Option<&Path>,
) -> Result<QvSearch> {
    let mut summaries = Vec::new();
    let mut largest = None;
    for n in widths {
        let config = template.with_width(n);
        let report = match out_root {
            Some(root) => run_experiment(&config, root)?,
            None => run_in_memory(&config)?,
        };
        let passed = report.summary.passed();
        summaries.push(report.summary);
        if !passed {
            break;
        }
        largest = Some(n);
    }
    Ok(QvSearch {
        summaries,
        largest_passing: largest,
        effective_qv: largest.map_or(1, |n| 1u64 << n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub p2: f64,
    /// Mean exact `λ = 1` HOP over the calibration circuits at `p2`.
    pub mean_raw_hop: f64,
    pub iterations: usize,
}

/// Bisects `p2` in `[0, p2_max]` until the mean exact raw HOP of the first
/// `circuits` circuits is within `tol` of `target`. Other noise parameters are
/// kept; `p1` follows `p2` unless set explicitly.
pub fn calibrate(template: &ExperimentConfig, target: f64, circuits: usize, tol: f64) -> Result<Calibration> {
    const P2_MAX: f64 = 0.5;
    const MAX_ITERATIONS: usize = 60;
    template.validate()?;
    if circuits == 0 {
        return Err(Error::InvalidArgument("calibration needs at least one circuit".into()));
    }
    let layout = template.layout.resolve(template.n)?;
    let prepared: Vec<(PreparedCircuit, crate::schedule::ScheduledCircuit)> = pool()?.install(|| {
        (0..circuits)
            .into_par_iter()
            .map(|id| {
                let p = prepare_circuit(template, &layout, id)?;
                let s = schedule_for_run(template, &p.routed.circuit)?;
                Ok((p, s))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let eval = |p2: f64| -> Result<f64> {
        let mut noise = template.noise;
        noise.p2 = p2;
        let hops = pool()?.install(|| {
            prepared
                .par_iter()
                .map(|(p, s)| pipeline::exact_raw_hop(p, s, &noise))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(mean(&hops))
    };
    let (mut lo, mut hi) = (0.0, P2_MAX);
    let (f_lo, f_hi) = (eval(lo)?, eval(hi)?);
    if !(f_hi..=f_lo).contains(&target) {
        return Err(Error::InvalidArgument(format!(
            "target HOP {target} outside the reachable range [{f_hi}, {f_lo}]"
        )));
    }
    let mut best = (lo, f_lo);
    for it in 1..=MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid)?;
        best = (mid, f);
        if (f - target).abs() <= tol {
            return Ok(Calibration {
                p2: mid,
                mean_raw_hop: f,
                iterations: it,
            });
        }
        // HOP decreases with p2.
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        p2: best.0,
        mean_raw_hop: best.1,
        iterations: MAX_ITERATIONS,
    })
}

/// Directory that `run_experiment` uses for `config` under `out_root`.
pub fn run_dir(config: &ExperimentConfig, out_root: &Path) -> PathBuf {
    out_root.join(config.run_id())
}
