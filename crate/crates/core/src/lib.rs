//! Quantum volume benchmarking with zero-noise extrapolation on a simulated
//! noisy superconducting device.

pub mod circuit;
pub mod error;
pub mod folding;
pub mod harness;
pub mod linalg;
pub mod qasm;
pub mod qv;
pub mod schedule;
pub mod sim;
pub mod transpile;
pub mod zne;

pub use circuit::{compose_unitary, gate_counts, Circuit, Gate, GateCounts, GateKind};
pub use error::{Error, Result};
pub use qasm::{qasm_export, qasm_import};
pub use qv::{generate_qv_circuit, heavy_set, ideal_distribution, HeavySet, QvCircuit};
