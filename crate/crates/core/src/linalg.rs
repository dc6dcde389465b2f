//! Small dense complex linear algebra used across the crate.
//!
//! Conventions: qubit 0 is the least significant bit of a basis index. A
//! two-qubit matrix acting on the ordered pair `[a, b]` is written in the basis
//! `bit(a) + 2 * bit(b)`, so `kron(m_a, m_b)` places `m_a` on the low bit.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

pub fn hadamard() -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0))
}

/// Phase gate `diag(1, i)`.
pub fn s_gate() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, I)
}

pub fn sx() -> Mat2 {
    Mat2::new(c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5))
}

/// `RZ(θ) = diag(e^{-iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> Mat2 {
    let h = theta / 2.0;
    Mat2::new(C64::from_polar(1.0, -h), ZERO, ZERO, C64::from_polar(1.0, h))
}

/// `RY(θ) = exp(-iθY/2)`.
pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `RX(θ) = exp(-iθX/2)`.
pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
}

/// Kronecker product with `low` acting on the least significant bit.
pub fn kron(low: &Mat2, high: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for hi_r in 0..2 {
        for hi_c in 0..2 {
            for lo_r in 0..2 {
                for lo_c in 0..2 {
                    out[(2 * hi_r + lo_r, 2 * hi_c + lo_c)] = high[(hi_r, hi_c)] * low[(lo_r, lo_c)];
                }
            }
        }
    }
    out
}

/// CNOT on an ordered pair `[q0, q1]` with the given local control (0 or 1).
pub fn cx_local(control: usize) -> Mat4 {
    let target = 1 - control;
    let mut out = Mat4::zeros();
    for col in 0..4usize {
        let mut row = col;
        if (col >> control) & 1 == 1 {
            row ^= 1 << target;
        }
        out[(row, col)] = ONE;
    }
    out
}

pub fn swap_matrix() -> Mat4 {
    let mut out = Mat4::zeros();
    out[(0, 0)] = ONE;
    out[(1, 2)] = ONE;
    out[(2, 1)] = ONE;
    out[(3, 3)] = ONE;
    out
}

/// Re-expresses a two-qubit matrix written for `[a, b]` in the `[b, a]` basis.
pub fn swap_qubit_order(m: &Mat4) -> Mat4 {
    let s = swap_matrix();
    s * m * s
}

/// Largest absolute entry of `M†M − I` for a square matrix.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let p = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for r in 0..p.nrows() {
        for col in 0..p.ncols() {
            let want = if r == col { ONE } else { ZERO };
            worst = worst.max((p[(r, col)] - want).norm());
        }
    }
    worst
}

pub fn unitarity_defect4(m: &Mat4) -> f64 {
    unitarity_defect(&DMatrix::from_column_slice(4, 4, m.as_slice()))
}

pub fn unitarity_defect2(m: &Mat2) -> f64 {
    unitarity_defect(&DMatrix::from_column_slice(2, 2, m.as_slice()))
}

/// Max-norm distance between `a` and `b` after removing the best global phase.
pub fn phase_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

pub fn phase_distance4(a: &Mat4, b: &Mat4) -> f64 {
    phase_distance(
        &DMatrix::from_column_slice(4, 4, a.as_slice()),
        &DMatrix::from_column_slice(4, 4, b.as_slice()),
    )
}

pub fn phase_distance2(a: &Mat2, b: &Mat2) -> f64 {
    phase_distance(
        &DMatrix::from_column_slice(2, 2, a.as_slice()),
        &DMatrix::from_column_slice(2, 2, b.as_slice()),
    )
}

/// Applies a one-qubit matrix to bit `q` of a state vector (or to every
/// column stored contiguously, when called per column).
pub fn apply_1q(state: &mut [C64], q: usize, m: &Mat2) {
    let mask = 1usize << q;
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let len = state.len();
    let mut base = 0;
    while base < len {
        for i in base..base + mask {
            let a0 = state[i];
            let a1 = state[i | mask];
            state[i] = m00 * a0 + m01 * a1;
            state[i | mask] = m10 * a0 + m11 * a1;
        }
        base += mask << 1;
    }
}

/// Applies a diagonal one-qubit operator `diag(d0, d1)` to bit `q`.
pub fn apply_diag_1q(state: &mut [C64], q: usize, d0: C64, d1: C64) {
    let mask = 1usize << q;
    for (i, amp) in state.iter_mut().enumerate() {
        *amp *= if i & mask == 0 { d0 } else { d1 };
    }
}

/// Applies a two-qubit matrix to bits `[a, b]` (see module conventions).
pub fn apply_2q(state: &mut [C64], a: usize, b: usize, m: &Mat4) {
    debug_assert_ne!(a, b);
    let ma = 1usize << a;
    let mb = 1usize << b;
    for i in 0..state.len() {
        if i & ma != 0 || i & mb != 0 {
            continue;
        }
        let idx = [i, i | ma, i | mb, i | ma | mb];
        let v = [state[idx[0]], state[idx[1]], state[idx[2]], state[idx[3]]];
        for (r, &slot) in idx.iter().enumerate() {
            state[slot] = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
        }
    }
}

/// CNOT as a permutation of amplitudes.
pub fn apply_cx(state: &mut [C64], control: usize, target: usize) {
    let mc = 1usize << control;
    let mt = 1usize << target;
    for i in 0..state.len() {
        if i & mc != 0 && i & mt == 0 {
            state.swap(i, i | mt);
        }
    }
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_puts_first_factor_on_low_bit() {
        // X on qubit 0 maps |00> (index 0) to |01> (index 1).
        let m = kron(&pauli_x(), &Mat2::identity());
        assert_eq!(m[(1, 0)], ONE);
        let m = kron(&Mat2::identity(), &pauli_x());
        assert_eq!(m[(2, 0)], ONE);
    }

    #[test]
    fn cx_local_matches_state_permutation() {
        for control in 0..2 {
            let m = cx_local(control);
            for col in 0..4usize {
                let mut state = vec![ZERO; 4];
                state[col] = ONE;
                apply_cx(&mut state, control, 1 - control);
                for row in 0..4 {
                    assert_eq!(state[row], m[(row, col)]);
                }
            }
        }
    }

    #[test]
    fn apply_2q_agrees_with_kron() {
        let m = kron(&rz(0.3), &ry(1.1));
        let mut s1: Vec<C64> = (0..8).map(|i| c(i as f64, 0.5 * i as f64)).collect();
        let mut s2 = s1.clone();
        apply_2q(&mut s1, 0, 2, &m);
        apply_1q(&mut s2, 0, &rz(0.3));
        apply_1q(&mut s2, 2, &ry(1.1));
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn sx_squares_to_x() {
        assert!(phase_distance2(&(sx() * sx()), &pauli_x()) < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
