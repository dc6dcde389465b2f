//! Rebuilding records from externally produced shot counts.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::zne::{hop_from_counts, QvRecord};

use super::config::ExperimentConfig;
use super::pipeline::{assemble_record, prepare_circuit};
use super::records::{read_jsonl, CountsEntry};

/// Recomputes HOPs and fits from counts. A circuit's heavy set and exact HOPs
/// come from its entry in `records` when present; otherwise the heavy set is
/// regenerated from the config, so the counts must come from the circuits this
/// config produces. Every circuit needs a `λ = 1` entry, and other scale
/// factors must be listed in the config. Records without counts are kept as is.
pub fn ingest_counts(
    config: &ExperimentConfig,
    records: Option<&[QvRecord]>,
    entries: &[CountsEntry],
) -> Result<Vec<QvRecord>> {
    config.validate()?;
    let layout = config.layout.resolve(config.n)?;
    let mut grouped: BTreeMap<usize, Vec<&CountsEntry>> = BTreeMap::new();
    for e in entries {
        grouped.entry(e.circuit_id).or_default().push(e);
    }
    let base: BTreeMap<usize, &QvRecord> = records
        .unwrap_or_default()
        .iter()
        .map(|r| (r.circuit_id, r))
        .collect();
    let groups: Vec<(usize, Vec<&CountsEntry>)> = grouped.into_iter().collect();
    let mut out = groups
        .par_iter()
        .map(|(id, group)| {
            ingest_one(config, &layout, base.get(id).copied(), *id, group).map_err(|e| e.in_circuit(*id))
        })
        .collect::<Result<Vec<_>>>()?;
    let fresh: std::collections::BTreeSet<usize> = out.iter().map(|r| r.circuit_id).collect();
    out.extend(base.values().filter(|r| !fresh.contains(&r.circuit_id)).map(|r| (*r).clone()));
    out.sort_by_key(|r| r.circuit_id);
    Ok(out)
}

fn ingest_one(
    config: &ExperimentConfig,
    layout: &crate::transpile::Layout,
    base: Option<&QvRecord>,
    id: usize,
    group: &[&CountsEntry],
) -> Result<QvRecord> {
    if !group.iter().any(|e| e.lambda == 1.0) {
        return Err(Error::InsufficientData(format!("circuit {id} has no λ = 1 counts")));
    }
    if let Some(e) = group.iter().find(|e| !config.lambdas.contains(&e.lambda)) {
        return Err(Error::Counts(format!("λ = {} is not in the configuration", e.lambda)));
    }
    let heavy = match base {
        Some(r) if r.heavy_set.n == config.n => r.heavy_set.clone(),
        Some(r) => {
            return Err(Error::Counts(format!("record width {} does not match n = {}", r.heavy_set.n, config.n)));
        }
        None => prepare_circuit(config, layout, id)?.heavy,
    };
    let mut by_lambda: BTreeMap<u64, Vec<&CountsEntry>> = BTreeMap::new();
    for e in group {
        by_lambda.entry(e.lambda.to_bits()).or_default().push(e);
    }
    let mut per_lambda = Vec::with_capacity(by_lambda.len());
    for (bits, mut items) in by_lambda {
        items.sort_by_key(|e| e.instance);
        if items.windows(2).any(|w| w[0].instance == w[1].instance) {
            return Err(Error::Counts(format!("duplicate instance at λ = {}", f64::from_bits(bits))));
        }
        let mut hops = Vec::with_capacity(items.len());
        let mut shots = Vec::with_capacity(items.len());
        for e in &items {
            hops.push(hop_from_counts(&e.counts, &heavy)?);
            shots.push(e.counts.values().sum());
        }
        let lambda = f64::from_bits(bits);
        let exact = base.and_then(|r| r.point(lambda)).and_then(|p| p.exact_hop);
        per_lambda.push((lambda, shots, hops, exact));
    }
    per_lambda.sort_by(|a, b| a.0.total_cmp(&b.0));
    assemble_record(config, id, heavy, per_lambda)
}

/// File form of [`ingest_counts`]: JSONL counts, optional JSONL records.
pub fn ingest_counts_file(config: &ExperimentConfig, records: Option<&Path>, counts: &Path) -> Result<Vec<QvRecord>> {
    let base: Option<Vec<QvRecord>> = records.map(read_jsonl).transpose()?;
    let entries: Vec<CountsEntry> = read_jsonl(counts)?;
    ingest_counts(config, base.as_deref(), &entries)
}
