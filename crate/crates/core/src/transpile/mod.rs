//! Lowering to the native `{RZ, SX, X, CX}` set and routing onto coupling graphs.

pub mod euler;
pub mod graph;
pub mod kak;
pub mod route;
pub mod subgraph;

use std::collections::BTreeMap;

use crate::circuit::Gate;
use crate::linalg::Mat2;

pub use euler::rebase_1q;
pub use graph::CouplingGraph;
pub use kak::{decompose_su4, kak_decompose, min_cx_count, KakDecomposition};
pub use route::{rebase_only, route, Layout, RoutedCircuit};
pub use subgraph::{enumerate_subgraph_classes, SubgraphClass};

/// Intermediate instruction stream: arbitrary one-qubit matrices are merged
/// per qubit and only rebased when a CX or another gate touches that qubit.
#[derive(Debug, Clone)]
pub(crate) enum Op {
    One(usize, Mat2),
    Cx(usize, usize),
    Keep(Gate),
}

impl Op {
    pub(crate) fn remap(self, map: impl Fn(usize) -> usize) -> Op {
        match self {
            Op::One(q, m) => Op::One(map(q), m),
            Op::Cx(c, t) => Op::Cx(map(c), map(t)),
            Op::Keep(g) => Op::Keep(g.remap(map)),
        }
    }
}

pub(crate) fn lower_ops(ops: impl IntoIterator<Item = Op>) -> Vec<Gate> {
    let mut pending: BTreeMap<usize, Mat2> = BTreeMap::new();
    let mut out = Vec::new();
    let flush = |q: usize, pending: &mut BTreeMap<usize, Mat2>, out: &mut Vec<Gate>| {
        if let Some(m) = pending.remove(&q) {
            out.extend(rebase_1q(&m, q));
        }
    };
    for op in ops {
        match op {
            Op::One(q, m) => {
                let merged = match pending.get(&q) {
                    Some(prev) => m * prev,
                    None => m,
                };
                pending.insert(q, merged);
            }
            Op::Cx(c, t) => {
                flush(c, &mut pending, &mut out);
                flush(t, &mut pending, &mut out);
                out.push(Gate::cx(c, t));
            }
            Op::Keep(g) => {
                for q in g.qubits() {
                    flush(q, &mut pending, &mut out);
                }
                out.push(g);
            }
        }
    }
    let rest: Vec<usize> = pending.keys().copied().collect();
    for q in rest {
        flush(q, &mut pending, &mut out);
    }
    out
}
