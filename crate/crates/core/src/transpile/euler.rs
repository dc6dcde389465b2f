//! One-qubit rebase onto `RZ`/`SX`/`X`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::circuit::Gate;
use crate::linalg::{det2, wrap_angle, Mat2};

/// Angles below this are treated as zero when simplifying.
const ANGLE_EPS: f64 = 1e-10;

/// ZYZ Euler angles `(θ, φ, λ)` with `U ∝ RZ(φ)·RY(θ)·RZ(λ)`.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64) {
    let v = u / det2(u).sqrt();
    let theta = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let sum = if v[(1, 1)].norm() > 1e-14 { 2.0 * v[(1, 1)].arg() } else { 0.0 };
    let diff = if v[(1, 0)].norm() > 1e-14 { 2.0 * v[(1, 0)].arg() } else { 0.0 };
    let phi = (sum + diff) / 2.0;
    let lam = (sum - diff) / 2.0;
    (theta, phi, lam)
}

fn push_rz(out: &mut Vec<Gate>, q: usize, angle: f64) {
    let a = wrap_angle(angle);
    if a.abs() > ANGLE_EPS {
        out.push(Gate::Rz(q, a));
    }
}

/// Native sequence (time order) equal to `u` up to global phase: the general
/// form is `RZ·SX·RZ·SX·RZ`, shortened when `θ` is 0, π/2 or π.
pub fn rebase_1q(u: &Mat2, q: usize) -> Vec<Gate> {
    let (theta, phi, lam) = zyz_angles(u);
    let mut out = Vec::with_capacity(5);
    if theta.abs() < ANGLE_EPS {
        push_rz(&mut out, q, phi + lam);
    } else if (theta - PI).abs() < ANGLE_EPS {
        push_rz(&mut out, q, lam - phi + PI);
        out.push(Gate::X(q));
    } else if (theta - FRAC_PI_2).abs() < ANGLE_EPS {
        push_rz(&mut out, q, lam - FRAC_PI_2);
        out.push(Gate::Sx(q));
        push_rz(&mut out, q, phi + FRAC_PI_2);
    } else {
        push_rz(&mut out, q, lam);
        out.push(Gate::Sx(q));
        push_rz(&mut out, q, theta + PI);
        out.push(Gate::Sx(q));
        push_rz(&mut out, q, phi + PI);
    }
    out
}
