//! Two-qubit synthesis with the minimal number of CX gates.
//!
//! A unitary is split as `(A0 ⊗ A1) · N(a, b, c) · (B0 ⊗ B1)` with
//! `N = exp(i(a·XX + b·YY + c·ZZ))`, found by diagonalising `UᵀU` in the magic
//! basis. The count of nonzero canonical coordinates picks the CX template.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lower_ops, Op};
use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, det2, kron, phase_distance4, unitarity_defect4, Mat2, Mat4, C64, ZERO,
};

/// Canonical coordinates with magnitude below this count as zero.
const COORD_EPS: f64 = 1e-9;
/// Maximum reconstruction error accepted before falling back to three CX.
const SYNTH_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct KakDecomposition {
    /// `(a, b, c)`, each reduced into `[-π/4, π/4]`.
    pub coefficients: [f64; 3],
    /// One-qubit factors applied first, on local qubits 0 and 1.
    pub before: [Mat2; 2],
    /// One-qubit factors applied last.
    pub after: [Mat2; 2],
}

impl KakDecomposition {
    /// Product of the factors; equals the input up to global phase.
    pub fn unitary(&self) -> Mat4 {
        let [a, b, cc] = self.coefficients;
        kron(&self.after[0], &self.after[1])
            * canonical_gate(a, b, cc)
            * kron(&self.before[0], &self.before[1])
    }

    /// CX gates needed for this equivalence class.
    pub fn cx_count(&self) -> usize {
        let nonzero: Vec<f64> = self
            .coefficients
            .iter()
            .copied()
            .filter(|v| v.abs() > COORD_EPS)
            .collect();
        match nonzero.len() {
            0 => 0,
            1 if (nonzero[0].abs() - FRAC_PI_4).abs() < COORD_EPS => 1,
            1 | 2 => 2,
            _ => 3,
        }
    }
}

/// `exp(i(a·XX + b·YY + c·ZZ))`.
pub fn canonical_gate(a: f64, b: f64, cc: f64) -> Mat4 {
    let term = |theta: f64, p: Mat2| {
        let pp = kron(&p, &p);
        Mat4::identity() * c(theta.cos(), 0.0) + pp * c(0.0, theta.sin())
    };
    term(a, linalg::pauli_x()) * term(b, linalg::pauli_y()) * term(cc, linalg::pauli_z())
}

fn magic_basis() -> Mat4 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let hi = c(0.0, FRAC_1_SQRT_2);
    #[rustfmt::skip]
    let m = Mat4::new(
        h,    ZERO, ZERO, hi,
        ZERO, hi,   h,    ZERO,
        ZERO, hi,   -h,   ZERO,
        h,    ZERO, ZERO, -hi,
    );
    m
}

/// Splits `K ≈ kron(low, high)`.
fn tensor_factor(k: &Mat4) -> (Mat2, Mat2) {
    let block = |hr: usize, hc: usize| {
        Mat2::new(
            k[(2 * hr, 2 * hc)],
            k[(2 * hr, 2 * hc + 1)],
            k[(2 * hr + 1, 2 * hc)],
            k[(2 * hr + 1, 2 * hc + 1)],
        )
    };
    let mut best = (0, 0);
    let mut best_norm = -1.0;
    for hr in 0..2 {
        for hc in 0..2 {
            let n = block(hr, hc).norm();
            if n > best_norm {
                best_norm = n;
                best = (hr, hc);
            }
        }
    }
    let b = block(best.0, best.1);
    let low = b / det2(&b).sqrt();
    let mut high = Mat2::zeros();
    for hr in 0..2 {
        for hc in 0..2 {
            high[(hr, hc)] = (low.adjoint() * block(hr, hc)).trace() / 2.0;
        }
    }
    (low, high)
}

/// Cartan decomposition of a two-qubit unitary.
pub fn kak_decompose(u: &Mat4) -> Result<KakDecomposition> {
    let defect = unitarity_defect4(u);
    if defect > 1e-8 {
        return Err(Error::NotUnitary(defect));
    }
    let det = u.determinant();
    let us = u * C64::from_polar(1.0, -det.arg() / 4.0);
    let b = magic_basis();
    let up = b.adjoint() * us * b;
    let m2 = up.transpose() * up;
    let re: Matrix4<f64> = m2.map(|z| z.re);
    let im: Matrix4<f64> = m2.map(|z| z.im);

    // Re(M2) and Im(M2) commute; a generic real combination shares their eigenvectors.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b616b);
    let mut found = None;
    for _ in 0..64 {
        let wa: f64 = rng.random_range(0.5..1.5);
        let wb: f64 = rng.random_range(0.5..1.5);
        let eig = SymmetricEigen::new(re * wa + im * wb);
        let p: Mat4 = eig.eigenvectors.map(|x| c(x, 0.0));
        let d = p.transpose() * m2 * p;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |col| (r, col)))
            .filter(|(r, col)| r != col)
            .map(|rc| d[rc].norm())
            .fold(0.0, f64::max);
        if off < 1e-10 {
            found = Some((p, d));
            break;
        }
    }
    let (mut p, d) = found.ok_or_else(|| Error::InvalidGate("two-qubit decomposition did not converge".into()))?;
    if p.determinant().re < 0.0 {
        for r in 0..4 {
            p[(r, 0)] = -p[(r, 0)];
        }
    }
    let mut theta: [f64; 4] = std::array::from_fn(|j| d[(j, j)].arg() / 2.0);
    let k1_for = |theta: &[f64; 4]| up * p * Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|j, _| C64::from_polar(1.0, -theta[j])));
    let mut k1 = k1_for(&theta);
    if k1.determinant().re < 0.0 {
        theta[0] += std::f64::consts::PI;
        k1 = k1_for(&theta);
    }

    let left = b * k1 * b.adjoint();
    let right = b * p.transpose() * b.adjoint();
    let (a0, a1) = tensor_factor(&left);
    let (mut b0, mut b1) = tensor_factor(&right);

    const XS: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
    const YS: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
    const ZS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
    let dot = |s: &[f64; 4]| theta.iter().zip(s).map(|(t, x)| t * x).sum::<f64>() / 4.0;
    let mut coeffs = [dot(&XS), dot(&YS), dot(&ZS)];

    // exp(i·v·PP) = exp(i·(v − kπ/2)·PP) · (i·PP)^k; the Pauli powers join the earlier factors.
    let paulis = [linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()];
    for (v, pauli) in coeffs.iter_mut().zip(paulis.iter()) {
        let k = (*v / FRAC_PI_2).round();
        *v -= k * FRAC_PI_2;
        if (k as i64).rem_euclid(2) == 1 {
            b0 = pauli * b0;
            b1 = pauli * b1;
        }
    }

    let out = KakDecomposition {
        coefficients: coeffs,
        before: [b0, b1],
        after: [a0, a1],
    };
    let err = phase_distance4(&out.unitary(), u);
    if err > SYNTH_TOL {
        return Err(Error::InvalidGate(format!(
            "two-qubit decomposition reconstruction error {err:.3e}"
        )));
    }
    Ok(out)
}

fn ry_op(q: usize, t: f64) -> Op {
    Op::One(q, linalg::ry(t))
}

fn rz_op(q: usize, t: f64) -> Op {
    Op::One(q, linalg::rz(t))
}

fn on_both(m: Mat2) -> [Op; 2] {
    [Op::One(0, m), Op::One(1, m)]
}

fn conjugated(c_mat: Mat2, inner: Vec<Op>) -> Vec<Op> {
    let mut ops = Vec::with_capacity(inner.len() + 4);
    ops.extend(on_both(c_mat.adjoint()));
    ops.extend(inner);
    ops.extend(on_both(c_mat));
    ops
}

fn three_cx(a: f64, b: f64, cc: f64) -> Vec<Op> {
    vec![
        rz_op(1, -FRAC_PI_2),
        Op::Cx(1, 0),
        rz_op(0, -2.0 * cc - FRAC_PI_2),
        ry_op(1, 2.0 * a + FRAC_PI_2),
        Op::Cx(0, 1),
        ry_op(1, -2.0 * b - FRAC_PI_2),
        Op::Cx(1, 0),
        rz_op(0, FRAC_PI_2),
    ]
}

/// `exp(i(α·XX + γ·ZZ))`.
fn two_cx_xz(alpha: f64, gamma: f64) -> Vec<Op> {
    vec![
        Op::Cx(0, 1),
        Op::One(0, linalg::rx(-2.0 * alpha)),
        rz_op(1, -2.0 * gamma),
        Op::Cx(0, 1),
    ]
}

/// `exp(±i·π/4·XX)`.
fn one_cx_xx(positive: bool) -> Vec<Op> {
    let h = linalg::hadamard();
    let inner = if positive {
        vec![Op::Cx(0, 1), rz_op(0, -FRAC_PI_2), Op::One(1, linalg::rx(-FRAC_PI_2))]
    } else {
        vec![rz_op(0, FRAC_PI_2), Op::One(1, linalg::rx(FRAC_PI_2)), Op::Cx(0, 1)]
    };
    let mut ops = vec![Op::One(0, h)];
    ops.extend(inner);
    ops.push(Op::One(0, h));
    ops
}

fn template(coeffs: [f64; 3], cx: usize) -> Vec<Op> {
    let [a, b, cc] = coeffs;
    let zero = |v: f64| v.abs() <= COORD_EPS;
    // C·Z·C† = Y for C = RX(−π/2); S·X·S† = Y; H swaps X and Z.
    match cx {
        0 => Vec::new(),
        1 => {
            let (slot, v) = coeffs
                .iter()
                .copied()
                .enumerate()
                .find(|(_, v)| !zero(*v))
                .expect("one nonzero coordinate");
            let base = one_cx_xx(v > 0.0);
            match slot {
                0 => base,
                1 => conjugated(linalg::s_gate(), base),
                _ => conjugated(linalg::hadamard(), base),
            }
        }
        2 => {
            if zero(cc) {
                conjugated(linalg::rx(-FRAC_PI_2), two_cx_xz(a, b))
            } else if zero(a) {
                conjugated(linalg::s_gate(), two_cx_xz(b, cc))
            } else {
                two_cx_xz(a, cc)
            }
        }
        _ => three_cx(a, b, cc),
    }
}

fn ops_unitary(ops: &[Op]) -> Mat4 {
    let id = Mat2::identity();
    ops.iter().fold(Mat4::identity(), |acc, op| {
        let m = match op {
            Op::One(0, m) => kron(m, &id),
            Op::One(_, m) => kron(&id, m),
            Op::Cx(ctrl, _) => linalg::cx_local(*ctrl),
            Op::Keep(_) => Mat4::identity(),
        };
        m * acc
    })
}

/// Op stream on local qubits 0 and 1 implementing `u` with the fewest CX.
pub(crate) fn synthesize_ops(u: &Mat4) -> Result<Vec<Op>> {
    let kak = kak_decompose(u)?;
    let assemble = |cx: usize| {
        let mut ops = vec![Op::One(0, kak.before[0]), Op::One(1, kak.before[1])];
        ops.extend(template(kak.coefficients, cx));
        ops.push(Op::One(0, kak.after[0]));
        ops.push(Op::One(1, kak.after[1]));
        ops
    };
    let ops = assemble(kak.cx_count());
    if phase_distance4(&ops_unitary(&ops), u) <= SYNTH_TOL {
        return Ok(ops);
    }
    let ops = assemble(3);
    let err = phase_distance4(&ops_unitary(&ops), u);
    if err <= SYNTH_TOL {
        Ok(ops)
    } else {
        Err(Error::InvalidGate(format!("two-qubit synthesis error {err:.3e}")))
    }
}

/// Native gates on qubits 0 and 1 implementing `u` up to global phase.
pub fn decompose_su4(u: &Mat4) -> Result<Vec<Gate>> {
    Ok(lower_ops(synthesize_ops(u)?))
}

/// Minimal CX count (0 to 3) of the local equivalence class of `u`.
pub fn min_cx_count(u: &Mat4) -> Result<usize> {
    Ok(kak_decompose(u)?.cx_count())
}
