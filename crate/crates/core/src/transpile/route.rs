//! Greedy SWAP routing onto a connected coupling subgraph.

use serde::{Deserialize, Serialize};

use super::graph::CouplingGraph;
use super::kak::{decompose_su4, synthesize_ops};
use super::{lower_ops, Op};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Initial placement of logical qubits on the vertices of a subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// `mapping[l]` is the physical vertex holding logical qubit `l`.
    pub mapping: Vec<usize>,
    pub subgraph: CouplingGraph,
}

impl Layout {
    pub fn new(mapping: Vec<usize>, subgraph: CouplingGraph) -> Result<Self> {
        let layout = Layout { mapping, subgraph };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for &v in &self.mapping {
            if !self.subgraph.contains(v) {
                return Err(Error::InvalidLayout(format!("vertex {v} is not in the subgraph")));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidLayout(format!("vertex {v} is mapped twice")));
            }
        }
        Ok(())
    }

    /// Identity placement on the complete graph.
    pub fn all_to_all(n: usize) -> Self {
        Layout {
            mapping: (0..n).collect(),
            subgraph: CouplingGraph::complete(n),
        }
    }

    /// Identity placement on a path `0 - 1 - … - (n-1)`.
    pub fn line(n: usize) -> Self {
        Layout {
            mapping: (0..n).collect(),
            subgraph: CouplingGraph::line(n),
        }
    }

    /// Logical qubit `i` on `embedding[i]`, restricted to the induced subgraph.
    pub fn from_embedding(host: &CouplingGraph, embedding: &[usize]) -> Result<Self> {
        Layout::new(embedding.to_vec(), host.induced(embedding)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let layout: Layout = serde_json::from_str(text).map_err(|e| Error::json("layout", e))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    /// Native circuit over positions `0..n`; position `j` is `physical_qubits[j]`.
    pub circuit: Circuit,
    pub physical_qubits: Vec<usize>,
    /// Position of logical qubit `l` at the end of the circuit.
    pub final_positions: Vec<usize>,
    pub swap_count: usize,
}

impl RoutedCircuit {
    /// The routed circuit relabeled onto physical vertex ids.
    pub fn physical_circuit(&self) -> Result<Circuit> {
        let width = self.physical_qubits.iter().max().map_or(0, |m| m + 1);
        let gates = self
            .circuit
            .gates()
            .iter()
            .map(|g| g.remap(|q| self.physical_qubits[q]))
            .collect();
        Circuit::from_gates(width, gates, self.circuit.layer_marks().map(<[usize]>::to_vec))
    }
}

fn swap_ops(a: usize, b: usize) -> [Op; 3] {
    [Op::Cx(a, b), Op::Cx(b, a), Op::Cx(a, b)]
}

/// Maps a logical circuit onto `layout`, inserting SWAPs along lowest-index
/// shortest paths, synthesizing two-qubit blocks and merging one-qubit runs.
pub fn route(logical: &Circuit, layout: &Layout) -> Result<RoutedCircuit> {
    let n = logical.n_qubits();
    layout.validate()?;
    if layout.mapping.len() != n || layout.subgraph.len() != n {
        return Err(Error::InvalidLayout(format!(
            "layout has {} mapped qubits on {} vertices, circuit has {n}",
            layout.mapping.len(),
            layout.subgraph.len()
        )));
    }
    if !layout.subgraph.is_connected() {
        return Err(Error::InvalidLayout("subgraph is disconnected".into()));
    }
    let physical = layout.subgraph.vertices().to_vec();
    let local_edges = layout
        .subgraph
        .edges()
        .iter()
        .map(|[a, b]| [layout.subgraph.index_of(*a).unwrap(), layout.subgraph.index_of(*b).unwrap()])
        .collect();
    let positions_graph = CouplingGraph::new((0..n).collect(), local_edges)?;

    let mut pos: Vec<usize> = layout
        .mapping
        .iter()
        .map(|v| layout.subgraph.index_of(*v).unwrap())
        .collect();
    let mut occupant = vec![0usize; n];
    for (l, &p) in pos.iter().enumerate() {
        occupant[p] = l;
    }

    let mut ops: Vec<Op> = Vec::new();
    let mut swap_count = 0;
    let mut bring_adjacent = |a: usize, b: usize, pos: &mut Vec<usize>, occupant: &mut Vec<usize>, ops: &mut Vec<Op>| {
        let path = positions_graph
            .shortest_path(pos[a], pos[b])
            .expect("connected subgraph");
        for w in path.windows(2).take(path.len().saturating_sub(2)) {
            let (p, q) = (w[0], w[1]);
            ops.extend(swap_ops(p, q));
            swap_count += 1;
            let (lp, lq) = (occupant[p], occupant[q]);
            occupant.swap(p, q);
            pos[lp] = q;
            pos[lq] = p;
        }
    };

    for gate in logical.gates() {
        match gate {
            Gate::X(_) | Gate::Sx(_) | Gate::Rz(..) => {
                let q = gate.qubits()[0];
                ops.push(Op::One(pos[q], gate.matrix_1q().unwrap()));
            }
            Gate::Cx { control, target } => {
                bring_adjacent(*control, *target, &mut pos, &mut occupant, &mut ops);
                ops.push(Op::Cx(pos[*control], pos[*target]));
            }
            Gate::Su4 { qubits, matrix } => {
                let [a, b] = *qubits;
                bring_adjacent(a, b, &mut pos, &mut occupant, &mut ops);
                let (pa, pb) = (pos[a], pos[b]);
                ops.extend(
                    synthesize_ops(matrix)?
                        .into_iter()
                        .map(|op| op.remap(|q| if q == 0 { pa } else { pb })),
                );
            }
            Gate::Swap(a, b) => {
                // Logical swaps are absorbed into the relabeling.
                let (pa, pb) = (pos[*a], pos[*b]);
                pos.swap(*a, *b);
                occupant.swap(pa, pb);
            }
            Gate::Barrier(qs) => ops.push(Op::Keep(Gate::Barrier(qs.iter().map(|q| pos[*q]).collect()))),
            Gate::Measure { qubit, clbit } => ops.push(Op::Keep(Gate::Measure {
                qubit: pos[*qubit],
                clbit: *clbit,
            })),
        }
    }

    let gates = lower_ops(ops);
    debug_assert!(gates.iter().all(|g| match g {
        Gate::Cx { control, target } => positions_graph.has_edge(*control, *target),
        _ => true,
    }));
    let circuit = Circuit::from_gates(n, gates, None)?.with_two_qubit_layers();
    Ok(RoutedCircuit {
        circuit,
        physical_qubits: physical,
        final_positions: pos,
        swap_count,
    })
}

/// Replaces `SU4` blocks and `SWAP`s with natives gate by gate, with no
/// merging or cancellation. Native input is returned unchanged.
pub fn rebase_only(circuit: &Circuit) -> Result<Circuit> {
    if circuit.is_native() {
        return Ok(circuit.clone());
    }
    let mut gates = Vec::with_capacity(circuit.len() * 4);
    let mut index_map = Vec::with_capacity(circuit.len() + 1);
    for gate in circuit.gates() {
        index_map.push(gates.len());
        match gate {
            Gate::Su4 { qubits, matrix } => {
                let [a, b] = *qubits;
                gates.extend(
                    decompose_su4(matrix)?
                        .into_iter()
                        .map(|g| g.remap(|q| if q == 0 { a } else { b })),
                );
            }
            Gate::Swap(a, b) => {
                gates.extend([Gate::cx(*a, *b), Gate::cx(*b, *a), Gate::cx(*a, *b)]);
            }
            other => gates.push(other.clone()),
        }
    }
    index_map.push(gates.len());
    let marks = circuit
        .layer_marks()
        .map(|m| m.iter().map(|&end| index_map[end]).collect());
    Circuit::from_gates(circuit.n_qubits(), gates, marks)
}
