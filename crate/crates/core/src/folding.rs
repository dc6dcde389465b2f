//! Digital noise scaling by unitary folding.
//!
//! Global folding appends `W†W` for the last `k` layers `W`; local folding
//! replaces `k` randomly chosen CX gates by `CX·CX·CX`. In both cases
//! `k = ⌊t_or_d · (λ − 1) / 2⌋`, where `t_or_d` is the number of layers or CX gates.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

pub const MAX_SCALE_FACTOR: f64 = 3.0;
/// Added before flooring so that e.g. `10 · (1.2 − 1) / 2` counts as 1.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldBasis {
    Layers,
    CxGates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub lambda: f64,
    pub k: usize,
    pub basis: FoldBasis,
    pub t_or_d: usize,
}

impl FoldPlan {
    pub fn new(basis: FoldBasis, t_or_d: usize, lambda: f64) -> Result<Self> {
        Ok(FoldPlan {
            lambda,
            k: fold_count(t_or_d, lambda)?,
            basis,
            t_or_d,
        })
    }

    /// Scale actually realized by the integer fold count.
    pub fn realized_scale(&self) -> f64 {
        if self.t_or_d == 0 {
            1.0
        } else {
            (self.t_or_d + 2 * self.k) as f64 / self.t_or_d as f64
        }
    }
}

pub fn check_scale_factor(lambda: f64) -> Result<()> {
    if lambda.is_finite() && (1.0..=MAX_SCALE_FACTOR).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::ScaleFactor(lambda))
    }
}

/// `⌊t_or_d · (λ − 1) / 2⌋`.
pub fn fold_count(t_or_d: usize, lambda: f64) -> Result<usize> {
    check_scale_factor(lambda)?;
    Ok((t_or_d as f64 * (lambda - 1.0) / 2.0 + FLOOR_SLACK).floor() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldedCircuit {
    pub circuit: Circuit,
    pub plan: FoldPlan,
    pub local_instance_seed: Option<u64>,
}

#[derive(Serialize)]
struct Sidecar {
    lambda: f64,
    k: usize,
    basis: FoldBasis,
    instance_seed: Option<u64>,
}

impl FoldedCircuit {
    /// `{lambda, k, basis, instance_seed}` stored next to the QASM file.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar {
            lambda: self.plan.lambda,
            k: self.plan.k,
            basis: self.plan.basis,
            instance_seed: self.local_instance_seed,
        })
        .expect("sidecar serializes")
    }
}

fn reject_measurements(circuit: &Circuit) -> Result<()> {
    if circuit.has_measurements() {
        return Err(Error::Unsupported("folding a circuit that contains measurements".into()));
    }
    Ok(())
}

/// `U → U · W† · W` with `W` the last `k` layers of the circuit's layer marks
/// (each gate is a layer when unmarked). Full-width barriers separate the parts.
pub fn fold_global(circuit: &Circuit, lambda: f64) -> Result<FoldedCircuit> {
    reject_measurements(circuit)?;
    let layers = circuit.layers();
    let d = layers.len();
    let plan = FoldPlan::new(FoldBasis::Layers, d, lambda)?;
    if plan.k == 0 {
        return Ok(FoldedCircuit {
            circuit: circuit.clone(),
            plan,
            local_instance_seed: None,
        });
    }
    let tail = &layers[d - plan.k..];
    let all: Vec<usize> = (0..circuit.n_qubits()).collect();

    let mut gates = circuit.gates().to_vec();
    let mut marks: Vec<usize> = match circuit.layer_marks() {
        Some(m) => m.to_vec(),
        None => (1..=gates.len()).collect(),
    };
    gates.push(Gate::Barrier(all.clone()));
    for layer in tail.iter().rev() {
        for g in layer.iter().rev() {
            gates.extend(g.inverse()?);
        }
        marks.push(gates.len());
    }
    gates.push(Gate::Barrier(all));
    for layer in tail {
        gates.extend(layer.iter().cloned());
        marks.push(gates.len());
    }
    Ok(FoldedCircuit {
        circuit: Circuit::from_gates(circuit.n_qubits(), gates, Some(marks))?,
        plan,
        local_instance_seed: None,
    })
}

/// Replaces `k` CX gates, drawn without replacement, by `CX·CX·CX` with
/// two-qubit barriers between the copies.
pub fn fold_local_random<R: Rng + ?Sized>(circuit: &Circuit, lambda: f64, rng: &mut R) -> Result<FoldedCircuit> {
    reject_measurements(circuit)?;
    if !circuit.is_native() {
        return Err(Error::Unsupported("local folding needs a native circuit".into()));
    }
    let cx_positions: Vec<usize> = circuit
        .gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| matches!(g, Gate::Cx { .. }))
        .map(|(i, _)| i)
        .collect();
    let t = cx_positions.len();
    if t == 0 {
        return Err(Error::InvalidCircuit("local folding needs at least one CX".into()));
    }
    let plan = FoldPlan::new(FoldBasis::CxGates, t, lambda)?;
    let mut chosen = vec![false; circuit.len()];
    for i in sample(rng, t, plan.k).into_iter() {
        chosen[cx_positions[i]] = true;
    }

    let mut gates = Vec::with_capacity(circuit.len() + 4 * plan.k);
    let mut index_map = Vec::with_capacity(circuit.len() + 1);
    for (i, g) in circuit.gates().iter().enumerate() {
        index_map.push(gates.len());
        if chosen[i] {
            let pair = g.qubits();
            gates.extend([
                g.clone(),
                Gate::Barrier(pair.clone()),
                g.clone(),
                Gate::Barrier(pair),
                g.clone(),
            ]);
        } else {
            gates.push(g.clone());
        }
    }
    index_map.push(gates.len());
    let marks = circuit
        .layer_marks()
        .map(|m| m.iter().map(|&end| index_map[end]).collect());
    Ok(FoldedCircuit {
        circuit: Circuit::from_gates(circuit.n_qubits(), gates, marks)?,
        plan,
        local_instance_seed: None,
    })
}

/// `m` independent local folds. Instance `i` uses its own generator seeded
/// from `rng`, and records that seed.
pub fn fold_local_ensemble<R: Rng + ?Sized>(
    circuit: &Circuit,
    lambda: f64,
    m: usize,
    rng: &mut R,
) -> Result<Vec<FoldedCircuit>> {
    if m == 0 {
        return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
    }
    (0..m)
        .map(|_| {
            let seed = rng.next_u64();
            let mut inst = ChaCha8Rng::seed_from_u64(seed);
            let mut folded = fold_local_random(circuit, lambda, &mut inst)?;
            folded.local_instance_seed = Some(seed);
            Ok(folded)
        })
        .collect()
}
