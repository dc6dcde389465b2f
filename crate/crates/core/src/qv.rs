//! Random square QV circuits, their ideal output distribution and heavy sets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{statevector, Circuit, Gate, MAX_UNITARY_QUBITS};
use crate::error::{Error, Result};
use crate::linalg::{c, Mat4, C64};

pub const MIN_QV_QUBITS: usize = 2;
pub const MAX_QV_QUBITS: usize = MAX_UNITARY_QUBITS;

/// Haar-random two-qubit unitary with determinant rephased to 1.
///
/// QR of a complex Ginibre matrix, with the phases of `R`'s diagonal pushed
/// back into `Q` so the distribution is exactly Haar.
pub fn haar_random_su4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let ginibre = Mat4::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..4 {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..4 {
            q[(i, j)] *= phase;
        }
    }
    let det = q.determinant();
    let root = C64::from_polar(1.0, -det.arg() / 4.0);
    q * root
}

/// A logical QV circuit: `n` layers, each a permutation followed by `⌊n/2⌋`
/// SU(4) blocks on consecutive pairs of permuted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QvCircuit {
    pub n: usize,
    pub circuit: Circuit,
    pub seed: u64,
    pub layer_permutations: Vec<Vec<usize>>,
}

impl QvCircuit {
    pub fn depth(&self) -> usize {
        self.layer_permutations.len()
    }
}

/// Generates the QV circuit for `n` qubits, fully determined by `seed`.
pub fn generate_qv_circuit(n: usize, seed: u64) -> Result<QvCircuit> {
    if !(MIN_QV_QUBITS..=MAX_QV_QUBITS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "QV width {n} outside [{MIN_QV_QUBITS}, {MAX_QV_QUBITS}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(n * (n / 2));
    let mut marks = Vec::with_capacity(n);
    let mut perms = Vec::with_capacity(n);
    for _ in 0..n {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for pair in perm.chunks_exact(2) {
            let m = haar_random_su4(&mut rng);
            gates.push(Gate::Su4 {
                qubits: [pair[0], pair[1]],
                matrix: Box::new(m),
            });
        }
        marks.push(gates.len());
        perms.push(perm);
    }
    let circuit = Circuit::from_gates(n, gates, Some(marks))?;
    Ok(QvCircuit {
        n,
        circuit,
        seed,
        layer_permutations: perms,
    })
}

/// `p_U(x) = |⟨x|U|0⟩|²` by state-vector simulation.
pub fn ideal_distribution(circuit: &Circuit) -> Result<Vec<f64>> {
    Ok(statevector(circuit)?.iter().map(|a| a.norm_sqr()).collect())
}

/// Basis states whose ideal probability strictly exceeds the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavySet {
    pub n: usize,
    /// Sorted basis-state indices.
    pub members: Vec<usize>,
    pub median: f64,
}

impl HeavySet {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    /// Total probability of the members under `p`.
    pub fn mass(&self, p: &[f64]) -> f64 {
        self.members.iter().map(|&x| p[x]).sum()
    }

    /// Moves logical bit `l` to position `positions[l]` in every member.
    pub fn permuted(&self, positions: &[usize]) -> HeavySet {
        let mut members: Vec<usize> = self
            .members
            .iter()
            .map(|&x| permute_bits(x, positions))
            .collect();
        members.sort_unstable();
        HeavySet {
            n: self.n,
            members,
            median: self.median,
        }
    }
}

pub fn permute_bits(x: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (l, &p)| acc | (((x >> l) & 1) << p))
}

/// Median of all `2^n` values (mean of the central pair), members by strict `>`.
pub fn heavy_set(p: &[f64]) -> Result<HeavySet> {
    if p.is_empty() || !p.len().is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "distribution length {} is not a power of two",
            p.len()
        )));
    }
    let n = p.len().trailing_zeros() as usize;
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    let median = if len % 2 == 0 {
        (sorted[len / 2 - 1] + sorted[len / 2]) / 2.0
    } else {
        sorted[len / 2]
    };
    let members = (0..len).filter(|&x| p[x] > median).collect();
    Ok(HeavySet { n, members, median })
}

/// Bitstring with qubit 0 rightmost.
pub fn format_bitstring(x: usize, n: usize) -> String {
    (0..n).rev().map(|q| if (x >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str, n: usize) -> Result<usize> {
    if s.len() != n {
        return Err(Error::Counts(format!("bitstring `{s}` has width {} but expected {n}", s.len())));
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::Counts(format!("bitstring `{s}` contains `{ch}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::compose_unitary;
    use crate::linalg::unitarity_defect4;

    #[test]
    fn haar_samples_are_special_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = haar_random_su4(&mut rng);
            assert!(unitarity_defect4(&m) < 1e-10);
            assert!((m.determinant() - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn haar_first_entry_has_quarter_mean_weight() {
        // For Haar U(4), |M_00|^2 ~ Beta(1, 3) with mean 1/4 and sd ~0.19.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 10_000;
        let mean: f64 = (0..samples)
            .map(|_| haar_random_su4(&mut rng)[(0, 0)].norm_sqr())
            .sum::<f64>()
            / samples as f64;
        assert!((mean - 0.25).abs() < 0.01, "{mean}");
    }

    #[test]
    fn qv_structure_matches_width() {
        let qv = generate_qv_circuit(4, 1).unwrap();
        assert_eq!(qv.depth(), 4);
        assert_eq!(qv.circuit.len(), 8);
        assert_eq!(qv.circuit.layer_marks().unwrap(), &[2, 4, 6, 8]);

        let qv = generate_qv_circuit(7, 1).unwrap();
        assert_eq!(qv.depth(), 7);
        assert_eq!(qv.circuit.len(), 21);
        for layer in qv.circuit.layers() {
            assert_eq!(layer.len(), 3);
            let mut touched: Vec<usize> = layer.iter().flat_map(|g| g.qubits()).collect();
            touched.sort_unstable();
            touched.dedup();
            assert_eq!(touched.len(), 6, "exactly one idle qubit per layer");
        }
    }

    #[test]
    fn generation_rejects_bad_widths() {
        assert!(generate_qv_circuit(1, 0).is_err());
        assert!(generate_qv_circuit(13, 0).is_err());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_qv_circuit(5, 42).unwrap();
        let b = generate_qv_circuit(5, 42).unwrap();
        let c = generate_qv_circuit(5, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.circuit.gates()[0], c.circuit.gates()[0]);
    }

    #[test]
    fn ideal_distribution_trivial_cases() {
        let p = ideal_distribution(&Circuit::new(3)).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&v| v == 0.0));

        let c = Circuit::from_gates(1, vec![Gate::X(0)], None).unwrap();
        assert_eq!(ideal_distribution(&c).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn ideal_distribution_matches_unitary_first_column() {
        for n in 2..=6 {
            let qv = generate_qv_circuit(n, 100 + n as u64).unwrap();
            let p = ideal_distribution(&qv.circuit).unwrap();
            let u = compose_unitary(&qv.circuit).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (x, px) in p.iter().enumerate() {
                assert!((px - u[(x, 0)].norm_sqr()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn heavy_set_examples() {
        let h = heavy_set(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(h.median, 0.0);
        assert_eq!(h.members, vec![3]);

        let h = heavy_set(&[0.25; 4]).unwrap();
        assert!(h.members.is_empty());
    }

    #[test]
    fn generic_heavy_set_is_half_the_space() {
        for n in 2..=7 {
            let qv = generate_qv_circuit(n, 7 * n as u64).unwrap();
            let p = ideal_distribution(&qv.circuit).unwrap();
            let h = heavy_set(&p).unwrap();
            // order-statistics oracle: all values distinct => exactly half lie above the median
            let mut sorted = p.clone();
            sorted.sort_by(f64::total_cmp);
            assert!(sorted.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(h.members.len(), 1 << (n - 1));
            assert!(h.mass(&p) >= 0.5);
        }
    }

    #[test]
    fn bitstrings_put_qubit_zero_rightmost() {
        assert_eq!(format_bitstring(1, 3), "001");
        assert_eq!(parse_bitstring("100", 3).unwrap(), 4);
        assert!(parse_bitstring("10", 3).is_err());
        assert!(parse_bitstring("1a0", 3).is_err());
    }

    #[test]
    fn permute_bits_relabels() {
        // logical bit 0 -> position 2, bit 1 -> 0, bit 2 -> 1
        assert_eq!(permute_bits(0b001, &[2, 0, 1]), 0b100);
        assert_eq!(permute_bits(0b010, &[2, 0, 1]), 0b001);
    }
}
