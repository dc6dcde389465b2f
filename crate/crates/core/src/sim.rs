//! Exact density-matrix simulation with depolarizing gate noise, coherent
//! idle-Z drift and symmetric readout flips.
//!
//! `ρ` is stored as a `4^n` vector with entry `(r, c)` at `r | (c << n)`, so a
//! gate `U` on qubit `q` acts as `U` on bit `q` and `conj(U)` on bit `q + n`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::qv::{format_bitstring, HeavySet};
use crate::schedule::ScheduledCircuit;

pub const MAX_DENSITY_QUBITS: usize = 10;

/// Depolarizing probability per CX (`p2`) and per X/SX (`p1`, default
/// `p2 / 10`), readout flip probability, and idle Z drift in radians per time
/// unit. Depolarizing with probability `p` replaces the affected qubits by the
/// maximally mixed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub p2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default)]
    pub readout_flip: f64,
    #[serde(default)]
    pub idle_z_rate: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            p2: 0.0,
            p1: None,
            readout_flip: 0.0,
            idle_z_rate: 0.0,
        }
    }

    pub fn depolarizing(p2: f64) -> Self {
        NoiseModel {
            p2,
            ..NoiseModel::noiseless()
        }
    }

    pub fn p1(&self) -> f64 {
        self.p1.unwrap_or(self.p2 / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64, hi: f64| {
            if v.is_finite() && (0.0..=hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [0, {hi}]")))
            }
        };
        prob("p2", self.p2, 1.0)?;
        prob("p1", self.p1(), 1.0)?;
        prob("readout_flip", self.readout_flip, 0.5)?;
        if !self.idle_z_rate.is_finite() {
            return Err(Error::Config("idle_z_rate must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n: usize,
    rho: Vec<C64>,
}

impl DensityState {
    /// `|0…0⟩⟨0…0|`.
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_DENSITY_QUBITS));
        }
        let mut rho = vec![ZERO; 1 << (2 * n)];
        rho[0] = ONE;
        Ok(DensityState { n, rho })
    }

    pub fn from_statevector(psi: &[C64]) -> Result<Self> {
        let n = psi.len().trailing_zeros() as usize;
        if !psi.len().is_power_of_two() {
            return Err(Error::InvalidArgument("state length is not a power of two".into()));
        }
        let mut s = DensityState::new(n)?;
        let dim = 1 << n;
        for c in 0..dim {
            for r in 0..dim {
                s.rho[r | (c << n)] = psi[r] * psi[c].conj();
            }
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.rho[r | (c << self.n)]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.get(r, c))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &[C64]) -> f64 {
        let d = self.dim();
        let mut acc = ZERO;
        for c in 0..d {
            let mut row = ZERO;
            for r in 0..d {
                row += psi[r].conj() * self.get(r, c);
            }
            acc += row * psi[c];
        }
        acc.re
    }

    fn apply_1q(&mut self, q: usize, m: &linalg::Mat2) {
        linalg::apply_1q(&mut self.rho, q, m);
        linalg::apply_1q(&mut self.rho, q + self.n, &m.map(|z| z.conj()));
    }

    fn apply_rz(&mut self, q: usize, theta: f64) {
        let h = theta / 2.0;
        let (d0, d1) = (C64::from_polar(1.0, -h), C64::from_polar(1.0, h));
        linalg::apply_diag_1q(&mut self.rho, q, d0, d1);
        linalg::apply_diag_1q(&mut self.rho, q + self.n, d0.conj(), d1.conj());
    }

    fn apply_cx(&mut self, c: usize, t: usize) {
        linalg::apply_cx(&mut self.rho, c, t);
        linalg::apply_cx(&mut self.rho, c + self.n, t + self.n);
    }

    fn apply_2q(&mut self, a: usize, b: usize, m: &linalg::Mat4) {
        linalg::apply_2q(&mut self.rho, a, b, m);
        linalg::apply_2q(&mut self.rho, a + self.n, b + self.n, &m.map(|z| z.conj()));
    }

    /// Applies the unitary action of a gate; barriers and measurements are skipped.
    pub fn apply_gate(&mut self, gate: &Gate) {
        match gate {
            Gate::X(q) => self.apply_1q(*q, &linalg::pauli_x()),
            Gate::Sx(q) => self.apply_1q(*q, &linalg::sx()),
            Gate::Rz(q, t) => self.apply_rz(*q, *t),
            Gate::Cx { control, target } => self.apply_cx(*control, *target),
            Gate::Su4 { qubits, matrix } => self.apply_2q(qubits[0], qubits[1], matrix),
            Gate::Swap(a, b) => self.apply_2q(*a, *b, &linalg::swap_matrix()),
            Gate::Barrier(_) | Gate::Measure { .. } => {}
        }
    }

    /// With probability `p`, replaces qubit `q` by `I/2`.
    pub fn depolarize_1q(&mut self, q: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let rq = 1usize << q;
        let cq = 1usize << (q + self.n);
        let keep = 1.0 - p;
        for i in 0..self.rho.len() {
            if i & rq != 0 || i & cq != 0 {
                continue;
            }
            let a = self.rho[i];
            let b = self.rho[i | rq | cq];
            let avg = (a + b) * 0.5;
            self.rho[i] = a * keep + avg * p;
            self.rho[i | rq | cq] = b * keep + avg * p;
            self.rho[i | rq] *= keep;
            self.rho[i | cq] *= keep;
        }
    }

    /// With probability `p`, replaces the pair `(a, b)` by `I/4`.
    pub fn depolarize_2q(&mut self, a: usize, b: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n;
        let row = [0, 1usize << a, 1usize << b, (1usize << a) | (1usize << b)];
        let col = [0, 1usize << (a + n), 1usize << (b + n), (1usize << (a + n)) | (1usize << (b + n))];
        let mask = row[3] | col[3];
        let keep = 1.0 - p;
        for i in 0..self.rho.len() {
            if i & mask != 0 {
                continue;
            }
            let tr: C64 = (0..4).map(|s| self.rho[i | row[s] | col[s]]).sum();
            for sr in 0..4 {
                for sc in 0..4 {
                    let idx = i | row[sr] | col[sc];
                    self.rho[idx] *= keep;
                    if sr == sc {
                        self.rho[idx] += tr * (p / 4.0);
                    }
                }
            }
        }
    }
}

fn apply_gate_noise(state: &mut DensityState, gate: &Gate, noise: &NoiseModel) {
    match gate {
        Gate::X(q) | Gate::Sx(q) => state.depolarize_1q(*q, noise.p1()),
        Gate::Cx { control, target } => state.depolarize_2q(*control, *target, noise.p2),
        _ => {}
    }
}

fn check_native(circuit: &Circuit) -> Result<()> {
    if !circuit.is_native() {
        return Err(Error::Unsupported("noisy simulation needs a native circuit".into()));
    }
    Ok(())
}

/// Simulates an unscheduled native circuit (no idle drift).
pub fn simulate(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityState> {
    noise.validate()?;
    check_native(circuit)?;
    if noise.idle_z_rate != 0.0 {
        return Err(Error::InvalidArgument("idle drift needs a scheduled circuit".into()));
    }
    let mut state = DensityState::new(circuit.n_qubits())?;
    for g in circuit.gates() {
        state.apply_gate(g);
        apply_gate_noise(&mut state, g, noise);
    }
    Ok(state)
}

/// Simulates a scheduled native circuit; each idle window accrues
/// `RZ(ω · duration)` on its qubit.
pub fn simulate_scheduled(scheduled: &ScheduledCircuit, noise: &NoiseModel) -> Result<DensityState> {
    noise.validate()?;
    let circuit = &scheduled.circuit;
    check_native(circuit)?;
    let mut drift: Vec<Vec<(usize, f64)>> = vec![Vec::new(); circuit.len()];
    if noise.idle_z_rate != 0.0 {
        for (q, windows) in scheduled.idle_windows.iter().enumerate() {
            for w in windows {
                drift[w.after].push((q, noise.idle_z_rate * w.duration));
            }
        }
    }
    let mut state = DensityState::new(circuit.n_qubits())?;
    for (g, idle) in circuit.gates().iter().zip(&drift) {
        state.apply_gate(g);
        apply_gate_noise(&mut state, g, noise);
        for &(q, angle) in idle {
            state.apply_rz(q, angle);
        }
    }
    Ok(state)
}

/// Measurement distribution after independent symmetric bit flips.
pub fn readout_distribution(state: &DensityState, readout_flip: f64) -> Vec<f64> {
    let mut p = state.diagonal();
    if readout_flip > 0.0 {
        for q in 0..state.n() {
            let mask = 1usize << q;
            for x in 0..p.len() {
                if x & mask == 0 {
                    let (a, b) = (p[x], p[x | mask]);
                    p[x] = (1.0 - readout_flip) * a + readout_flip * b;
                    p[x | mask] = readout_flip * a + (1.0 - readout_flip) * b;
                }
            }
        }
    }
    p
}

/// Probability that a (noisy) measurement lands in the heavy set.
pub fn exact_heavy_prob(state: &DensityState, heavy: &HeavySet, readout_flip: f64) -> Result<f64> {
    if heavy.n != state.n() {
        return Err(Error::InvalidArgument(format!(
            "heavy set width {} does not match state width {}",
            heavy.n,
            state.n()
        )));
    }
    Ok(heavy.mass(&readout_distribution(state, readout_flip)))
}

/// Shot counts keyed by bitstring (qubit 0 rightmost); zero counts omitted.
pub type Counts = BTreeMap<String, u64>;

/// Multinomial histogram over basis states, via sequential binomial draws.
pub fn sample_histogram<R: Rng + ?Sized>(p: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; p.len()];
    let mut remaining = shots;
    let mut mass: f64 = p.iter().map(|v| v.max(0.0)).sum();
    for (x, &px) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let px = px.max(0.0);
        if x + 1 == p.len() {
            out[x] = remaining;
            break;
        }
        let frac = if mass > 0.0 { (px / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if frac >= 1.0 {
            remaining
        } else if frac <= 0.0 {
            0
        } else {
            Binomial::new(remaining, frac).expect("valid binomial").sample(rng)
        };
        out[x] = k;
        remaining -= k;
        mass -= px;
    }
    out
}

pub fn sample_counts<R: Rng + ?Sized>(
    state: &DensityState,
    shots: u64,
    readout_flip: f64,
    rng: &mut R,
) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let p = readout_distribution(state, readout_flip);
    let hist = sample_histogram(&p, shots, rng);
    Ok(hist
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(x, &k)| (format_bitstring(x, state.n()), k))
        .collect())
}
