//! Per-circuit pipeline: generate, route, fold, schedule, simulate, sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::Result;
use crate::folding::{fold_global, fold_local_ensemble};
use crate::qv::{generate_qv_circuit, heavy_set, ideal_distribution, HeavySet};
use crate::schedule::{insert_dd, schedule_alap, ScheduledCircuit};
use crate::sim::{exact_heavy_prob, sample_counts, simulate_scheduled, NoiseModel};
use crate::transpile::{rebase_only, route, Layout, RoutedCircuit};
use crate::zne::{combine_local_ensemble, extrapolate, hop_from_counts, mean, LambdaPoint, QvRecord};

use super::config::{ExperimentConfig, FoldingMode};
use super::records::{CircuitOutput, CountsEntry};

const FOLD_STREAM: u64 = 1;
const SHOT_STREAM: u64 = 2;

/// A generated and routed circuit with its heavy set in routed bit order.
#[derive(Debug, Clone)]
pub struct PreparedCircuit {
    pub circuit_id: usize,
    pub seed: u64,
    pub routed: RoutedCircuit,
    pub heavy: HeavySet,
}

pub fn prepare_circuit(config: &ExperimentConfig, layout: &Layout, circuit_id: usize) -> Result<PreparedCircuit> {
    let seed = config.circuit_seed(circuit_id);
    let qv = generate_qv_circuit(config.n, seed)?;
    let heavy = heavy_set(&ideal_distribution(&qv.circuit)?)?;
    let routed = route(&qv.circuit, layout)?;
    let heavy = heavy.permuted(&routed.final_positions);
    Ok(PreparedCircuit {
        circuit_id,
        seed,
        routed,
        heavy,
    })
}

/// Native ALAP schedule, with DD pulses when enabled.
pub fn schedule_for_run(config: &ExperimentConfig, circuit: &Circuit) -> Result<ScheduledCircuit> {
    let native = rebase_only(circuit)?;
    let scheduled = schedule_alap(&native, &config.durations)?;
    if config.dd_enabled {
        insert_dd(&scheduled, &config.durations)
    } else {
        Ok(scheduled)
    }
}

/// The circuits executed at scale factor `lambda`, with their shot counts.
pub fn scaled_variants(
    config: &ExperimentConfig,
    routed: &Circuit,
    lambda: f64,
    fold_rng: &mut ChaCha8Rng,
) -> Result<Vec<(Circuit, u64)>> {
    if lambda == 1.0 {
        return Ok(vec![(routed.clone(), config.shots.base)]);
    }
    Ok(match config.folding {
        FoldingMode::Global => vec![(fold_global(routed, lambda)?.circuit, config.shots.global_folded)],
        FoldingMode::Local => fold_local_ensemble(routed, lambda, config.local_instances, fold_rng)?
            .into_iter()
            .map(|f| (f.circuit, config.shots.local_folded))
            .collect(),
    })
}

/// Ideal heavy-output probability of the noisy `λ = 1` state.
pub fn exact_raw_hop(prepared: &PreparedCircuit, scheduled: &ScheduledCircuit, noise: &NoiseModel) -> Result<f64> {
    let state = simulate_scheduled(scheduled, noise)?;
    exact_heavy_prob(&state, &prepared.heavy, noise.readout_flip)
}

/// Builds the record for one circuit from its per-`λ` instance HOPs.
pub(crate) fn assemble_record(
    config: &ExperimentConfig,
    circuit_id: usize,
    heavy: HeavySet,
    per_lambda: Vec<(f64, Vec<u64>, Vec<f64>, Option<f64>)>,
) -> Result<QvRecord> {
    let mut points = Vec::with_capacity(per_lambda.len());
    for (lambda, shots, hops, exact) in per_lambda {
        let local = config.folding == FoldingMode::Local && lambda != 1.0;
        points.push(LambdaPoint {
            lambda,
            hop: combine_local_ensemble(&hops)?,
            shots: shots.iter().sum(),
            instances: hops.len(),
            instance_hops: if local { hops } else { Vec::new() },
            exact_hop: exact,
        });
    }
    let fit: Vec<(f64, f64)> = points.iter().map(|p| (p.lambda, p.hop)).collect();
    let zne = extrapolate(&fit, config.fit_order)?;
    Ok(QvRecord {
        circuit_id,
        n: config.n,
        seed: config.circuit_seed(circuit_id),
        heavy_set: heavy,
        per_lambda: points,
        zne,
    })
}

/// Runs every scale factor of one circuit. Deterministic in the config and id.
pub fn run_circuit(config: &ExperimentConfig, layout: &Layout, circuit_id: usize) -> Result<CircuitOutput> {
    run_circuit_inner(config, layout, circuit_id).map_err(|e| e.in_circuit(circuit_id))
}

fn run_circuit_inner(config: &ExperimentConfig, layout: &Layout, circuit_id: usize) -> Result<CircuitOutput> {
    let prepared = prepare_circuit(config, layout, circuit_id)?;
    let mut fold_rng = ChaCha8Rng::seed_from_u64(prepared.seed);
    fold_rng.set_stream(FOLD_STREAM);
    let mut shot_rng = ChaCha8Rng::seed_from_u64(prepared.seed);
    shot_rng.set_stream(SHOT_STREAM);

    let mut counts_out = Vec::new();
    let mut per_lambda = Vec::new();
    for lambda in config.sorted_lambdas() {
        let variants = scaled_variants(config, &prepared.routed.circuit, lambda, &mut fold_rng)?;
        let mut hops = Vec::with_capacity(variants.len());
        let mut exacts = Vec::with_capacity(variants.len());
        let mut shots = Vec::with_capacity(variants.len());
        for (instance, (circuit, n_shots)) in variants.into_iter().enumerate() {
            let scheduled = schedule_for_run(config, &circuit)?;
            let state = simulate_scheduled(&scheduled, &config.noise)?;
            exacts.push(exact_heavy_prob(&state, &prepared.heavy, config.noise.readout_flip)?);
            let counts = sample_counts(&state, n_shots, config.noise.readout_flip, &mut shot_rng)?;
            hops.push(hop_from_counts(&counts, &prepared.heavy)?);
            shots.push(n_shots);
            counts_out.push(CountsEntry {
                circuit_id,
                lambda,
                instance,
                counts,
            });
        }
        per_lambda.push((lambda, shots, hops, Some(mean(&exacts))));
    }
    let record = assemble_record(config, circuit_id, prepared.heavy, per_lambda)?;
    Ok(CircuitOutput {
        record,
        counts: counts_out,
    })
}

/// Number of counts entries a complete circuit produces.
pub fn expected_counts_entries(config: &ExperimentConfig) -> usize {
    config
        .lambdas
        .iter()
        .map(|&l| {
            if l == 1.0 || config.folding == FoldingMode::Global {
                1
            } else {
                config.local_instances
            }
        })
        .sum()
}
