//! Gate and circuit data model, unitary composition and gate accounting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4, C64, ONE, ZERO};

/// Largest register `compose_unitary` and the state-vector routines accept.
pub const MAX_UNITARY_QUBITS: usize = 12;

/// Tolerance on `M†M − I` for two-qubit blocks.
pub const SU4_UNITARITY_TOL: f64 = 1e-10;

/// A single instruction. Native kinds are `X`, `SX`, `RZ` and `CX`; `SU4` and
/// `SWAP` only occur in logical circuits and must be lowered before export.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(usize),
    Sx(usize),
    Rz(usize, f64),
    Cx { control: usize, target: usize },
    /// Arbitrary two-qubit unitary on `[a, b]`, written in the basis `bit(a) + 2·bit(b)`.
    Su4 { qubits: [usize; 2], matrix: Box<Mat4> },
    Swap(usize, usize),
    Barrier(Vec<usize>),
    Measure { qubit: usize, clbit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Sx,
    Rz,
    Cx,
    Su4,
    Swap,
    Barrier,
    Measure,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::X,
        GateKind::Sx,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Su4,
        GateKind::Swap,
        GateKind::Barrier,
        GateKind::Measure,
    ];
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GateKind::X => "x",
            GateKind::Sx => "sx",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Su4 => "su4",
            GateKind::Swap => "swap",
            GateKind::Barrier => "barrier",
            GateKind::Measure => "measure",
        };
        f.write_str(name)
    }
}

impl Gate {
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::Cx { control, target }
    }

    pub fn rz(qubit: usize, theta: f64) -> Result<Gate> {
        if !theta.is_finite() {
            return Err(Error::InvalidGate(format!("rz angle {theta} is not finite")));
        }
        Ok(Gate::Rz(qubit, theta))
    }

    /// Builds a two-qubit block, rejecting non-unitary matrices.
    pub fn su4(qubits: [usize; 2], matrix: Mat4) -> Result<Gate> {
        let defect = linalg::unitarity_defect4(&matrix);
        if defect >= SU4_UNITARITY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        if qubits[0] == qubits[1] {
            return Err(Error::InvalidGate(format!("su4 on repeated qubit {}", qubits[0])));
        }
        Ok(Gate::Su4 {
            qubits,
            matrix: Box::new(matrix),
        })
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::X(_) => GateKind::X,
            Gate::Sx(_) => GateKind::Sx,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Cx { .. } => GateKind::Cx,
            Gate::Su4 { .. } => GateKind::Su4,
            Gate::Swap(..) => GateKind::Swap,
            Gate::Barrier(_) => GateKind::Barrier,
            Gate::Measure { .. } => GateKind::Measure,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::Sx(q) | Gate::Rz(q, _) => vec![*q],
            Gate::Cx { control, target } => vec![*control, *target],
            Gate::Su4 { qubits, .. } => qubits.to_vec(),
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Barrier(qs) => qs.clone(),
            Gate::Measure { qubit, .. } => vec![*qubit],
        }
    }

    pub fn is_native(&self) -> bool {
        !matches!(self, Gate::Su4 { .. } | Gate::Swap(..))
    }

    /// Whether the instruction changes the quantum state.
    pub fn is_unitary_op(&self) -> bool {
        !matches!(self, Gate::Barrier(_) | Gate::Measure { .. })
    }

    pub fn is_single_qubit_unitary(&self) -> bool {
        matches!(self, Gate::X(_) | Gate::Sx(_) | Gate::Rz(..))
    }

    /// Matrix of a one-qubit native gate.
    pub fn matrix_1q(&self) -> Option<Mat2> {
        match self {
            Gate::X(_) => Some(linalg::pauli_x()),
            Gate::Sx(_) => Some(linalg::sx()),
            Gate::Rz(_, t) => Some(linalg::rz(*t)),
            _ => None,
        }
    }

    /// Applies a qubit relabeling.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::X(q) => Gate::X(map(*q)),
            Gate::Sx(q) => Gate::Sx(map(*q)),
            Gate::Rz(q, t) => Gate::Rz(map(*q), *t),
            Gate::Cx { control, target } => Gate::cx(map(*control), map(*target)),
            Gate::Su4 { qubits, matrix } => Gate::Su4 {
                qubits: [map(qubits[0]), map(qubits[1])],
                matrix: matrix.clone(),
            },
            Gate::Swap(a, b) => Gate::Swap(map(*a), map(*b)),
            Gate::Barrier(qs) => Gate::Barrier(qs.iter().map(|q| map(*q)).collect()),
            Gate::Measure { qubit, clbit } => Gate::Measure {
                qubit: map(*qubit),
                clbit: *clbit,
            },
        }
    }

    /// Gates implementing the inverse, up to global phase. `SX†` has no native
    /// form and is written as `RZ(π)·SX·RZ(π)`.
    pub fn inverse(&self) -> Result<Vec<Gate>> {
        Ok(match self {
            Gate::X(q) => vec![Gate::X(*q)],
            Gate::Sx(q) => vec![Gate::Rz(*q, PI), Gate::Sx(*q), Gate::Rz(*q, PI)],
            Gate::Rz(q, t) => vec![Gate::Rz(*q, -t)],
            Gate::Cx { .. } | Gate::Swap(..) | Gate::Barrier(_) => vec![self.clone()],
            Gate::Su4 { qubits, matrix } => vec![Gate::Su4 {
                qubits: *qubits,
                matrix: Box::new(matrix.adjoint()),
            }],
            Gate::Measure { .. } => {
                return Err(Error::Unsupported("measure has no inverse".into()));
            }
        })
    }
}

/// Applies the unitary action of `gate` to a state vector. Barriers and
/// measurements are no-ops here.
pub fn apply_gate(state: &mut [C64], gate: &Gate) {
    match gate {
        Gate::X(q) => linalg::apply_1q(state, *q, &linalg::pauli_x()),
        Gate::Sx(q) => linalg::apply_1q(state, *q, &linalg::sx()),
        Gate::Rz(q, t) => {
            let h = t / 2.0;
            linalg::apply_diag_1q(state, *q, C64::from_polar(1.0, -h), C64::from_polar(1.0, h))
        }
        Gate::Cx { control, target } => linalg::apply_cx(state, *control, *target),
        Gate::Su4 { qubits, matrix } => linalg::apply_2q(state, qubits[0], qubits[1], matrix),
        Gate::Swap(a, b) => linalg::apply_2q(state, *a, *b, &linalg::swap_matrix()),
        Gate::Barrier(_) | Gate::Measure { .. } => {}
    }
}

/// Ordered gate list over `n_qubits`, optionally partitioned into layers.
///
/// `layer_marks` holds the exclusive end index of each layer; the last mark
/// equals the gate count.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    layer_marks: Option<Vec<usize>>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            layer_marks: None,
        }
    }

    /// Validates and assembles a circuit.
    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>, layer_marks: Option<Vec<usize>>) -> Result<Self> {
        let mut circuit = Circuit::new(n_qubits);
        for gate in gates {
            circuit.push(gate)?;
        }
        match layer_marks {
            Some(marks) => circuit.with_layer_marks(marks),
            None => Ok(circuit),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qubits = gate.qubits();
        for (i, q) in qubits.iter().enumerate() {
            if *q >= self.n_qubits {
                return Err(Error::InvalidCircuit(format!(
                    "{} acts on qubit {q} but the circuit has {} qubits",
                    gate.kind(),
                    self.n_qubits
                )));
            }
            if qubits[..i].contains(q) {
                return Err(Error::InvalidCircuit(format!("{} repeats qubit {q}", gate.kind())));
            }
        }
        if let Gate::Rz(_, t) = gate {
            if !t.is_finite() {
                return Err(Error::InvalidGate(format!("rz angle {t} is not finite")));
            }
        }
        if gate.is_unitary_op() && self.gates.iter().any(|g| matches!(g, Gate::Measure { .. })) {
            return Err(Error::InvalidCircuit(format!(
                "{} after a measurement; measurements must come last",
                gate.kind()
            )));
        }
        self.gates.push(gate);
        self.layer_marks = None;
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn with_layer_marks(mut self, marks: Vec<usize>) -> Result<Self> {
        let strictly_increasing = marks.windows(2).all(|w| w[0] < w[1]);
        let covers = match marks.last() {
            Some(&last) => last == self.gates.len() && marks[0] > 0,
            None => self.gates.is_empty(),
        };
        if !strictly_increasing || !covers {
            return Err(Error::InvalidCircuit(format!(
                "layer marks {marks:?} do not partition {} gates",
                self.gates.len()
            )));
        }
        self.layer_marks = Some(marks);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn layer_marks(&self) -> Option<&[usize]> {
        self.layer_marks.as_deref()
    }

    /// Gate slices per layer; without marks every gate is its own layer.
    pub fn layers(&self) -> Vec<&[Gate]> {
        match &self.layer_marks {
            Some(marks) => {
                let mut start = 0;
                marks
                    .iter()
                    .map(|&end| {
                        let layer = &self.gates[start..end];
                        start = end;
                        layer
                    })
                    .collect()
            }
            None => self.gates.chunks(1).collect(),
        }
    }

    pub fn into_gates(self) -> Vec<Gate> {
        self.gates
    }

    pub fn is_native(&self) -> bool {
        self.gates.iter().all(Gate::is_native)
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(|g| matches!(g, Gate::Measure { .. }))
    }

    pub fn cx_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cx { .. })).count()
    }

    /// Returns the circuit reordered into two-qubit-depth layers, with marks.
    ///
    /// Each CX opens a new layer on its qubits; every other gate joins the
    /// layer of the next CX on its qubits, and trailing gates join the last
    /// layer. The reordering is a stable sort by layer, so per-qubit order is
    /// preserved.
    pub fn with_two_qubit_layers(&self) -> Circuit {
        let mut level = vec![0usize; self.n_qubits];
        let mut assigned = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let qs = gate.qubits();
            let layer = qs.iter().map(|&q| level[q]).max().unwrap_or(0);
            let next = if matches!(gate, Gate::Cx { .. } | Gate::Su4 { .. } | Gate::Swap(..)) {
                layer + 1
            } else {
                layer
            };
            for &q in &qs {
                level[q] = next;
            }
            assigned.push(layer);
        }
        let depth = level.iter().copied().max().unwrap_or(0);
        if depth > 0 {
            for l in assigned.iter_mut() {
                *l = (*l).min(depth - 1);
            }
        }
        self.regroup(&assigned)
    }

    /// ASAP moments over all gates (one gate per qubit per moment).
    pub fn with_moment_layers(&self) -> Circuit {
        let mut level = vec![0usize; self.n_qubits];
        let mut assigned = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let qs = gate.qubits();
            let layer = qs.iter().map(|&q| level[q]).max().unwrap_or(0);
            for &q in &qs {
                level[q] = layer + 1;
            }
            assigned.push(layer);
        }
        self.regroup(&assigned)
    }

    fn regroup(&self, assigned: &[usize]) -> Circuit {
        let mut order: Vec<usize> = (0..self.gates.len()).collect();
        order.sort_by_key(|&i| assigned[i]);
        let gates: Vec<Gate> = order.iter().map(|&i| self.gates[i].clone()).collect();
        let mut marks = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let is_last = pos + 1 == order.len() || assigned[order[pos + 1]] != assigned[i];
            if is_last {
                marks.push(pos + 1);
            }
        }
        Circuit {
            n_qubits: self.n_qubits,
            gates,
            layer_marks: Some(marks),
        }
    }

    /// Concatenation without layer marks.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::InvalidCircuit("qubit count mismatch in concat".into()));
        }
        let mut out = self.clone();
        out.extend(other.gates.iter().cloned())?;
        Ok(out)
    }
}

/// Full unitary of a measurement-free circuit in the little-endian basis.
pub fn compose_unitary(circuit: &Circuit) -> Result<DMatrix<C64>> {
    let n = circuit.n_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_UNITARY_QUBITS));
    }
    if circuit.has_measurements() {
        return Err(Error::Unsupported("compose_unitary on a circuit with measurements".into()));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    // Column-major storage: each column is a contiguous state vector.
    for col in u.as_mut_slice().chunks_mut(dim) {
        for gate in circuit.gates() {
            apply_gate(col, gate);
        }
    }
    Ok(u)
}

/// State vector `U|0…0⟩` of a measurement-free circuit.
pub fn statevector(circuit: &Circuit) -> Result<Vec<C64>> {
    let n = circuit.n_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_UNITARY_QUBITS));
    }
    let mut state = vec![ZERO; 1 << n];
    state[0] = ONE;
    for gate in circuit.gates() {
        apply_gate(&mut state, gate);
    }
    Ok(state)
}

/// Exact multiset of gate kinds; every kind is present, possibly with zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts(pub BTreeMap<GateKind, usize>);

impl GateCounts {
    pub fn get(&self, kind: GateKind) -> usize {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

pub fn gate_counts(circuit: &Circuit) -> GateCounts {
    let mut counts: BTreeMap<GateKind, usize> = GateKind::ALL.iter().map(|k| (*k, 0)).collect();
    for gate in circuit.gates() {
        *counts.entry(gate.kind()).or_default() += 1;
    }
    GateCounts(counts)
}
