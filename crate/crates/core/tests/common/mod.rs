#![allow(dead_code)]

use proptest::prelude::*;
use qvzne::linalg::{phase_distance, C64};
use qvzne::{compose_unitary, Circuit, Gate};

/// Random native circuits (X, SX, RZ, CX) on `2..=max_n` qubits.
pub fn native_circuit(max_n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    (2..=max_n).prop_flat_map(move |n| {
        let gate = (0..4u8, 0..n, 1..n, -6.3f64..6.3).prop_map(move |(kind, a, off, theta)| match kind {
            0 => Gate::X(a),
            1 => Gate::Sx(a),
            2 => Gate::Rz(a, theta),
            _ => Gate::cx(a, (a + off) % n),
        });
        prop::collection::vec(gate, 1..max_len)
            .prop_map(move |gates| Circuit::from_gates(n, gates, None).unwrap())
    })
}

/// Native circuits that contain at least one CX.
pub fn native_circuit_with_cx(max_n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    native_circuit(max_n, max_len).prop_map(|c| {
        let mut gates = c.gates().to_vec();
        gates.push(Gate::cx(0, 1));
        Circuit::from_gates(c.n_qubits(), gates, None).unwrap()
    })
}

/// Distance between the unitaries of two circuits, up to global phase.
pub fn unitary_distance(a: &Circuit, b: &Circuit) -> f64 {
    let ua = compose_unitary(a).unwrap();
    let ub = compose_unitary(b).unwrap();
    phase_distance(&ua, &ub)
}

pub fn state_overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}
