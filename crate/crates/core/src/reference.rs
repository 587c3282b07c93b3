//! Closed-form references used as oracles.
//!
//! All formulas assume the quadratic Lagrangian with an inactive control
//! bound. `future` always denotes `sqrt(nu) * (W_T - W_t)`, the scaled
//! remaining Brownian displacement.

use crate::vect::{self, Vect};
use crate::flt;

/// Pathwise value for terminal cost `<a, x>` and zero potential:
/// `<a, x + future> - |a|^2 (T - t) / 2`.
pub fn linear_value(a: Vect, dim: usize, x: Vect, t: f64, t_end: f64, future: Vect) -> f64 {
    vect::dot(a, vect::add(x, future), dim) - 0.5 * vect::dot(a, a, dim) * (t_end - t)
}

/// Optimal drift for the linear terminal cost: constant `-a`.
pub fn linear_drift(a: Vect) -> Vect {
    vect::scale(a, -1.0)
}

/// Pathwise value for terminal cost `kappa |x|^2 / 2` and zero potential:
/// `kappa |x + future|^2 / (2 (1 + kappa (T - t)))`.
pub fn quadratic_value(
    kappa: f64,
    dim: usize,
    x: Vect,
    t: f64,
    t_end: f64,
    future: Vect,
) -> f64 {
    let z = vect::add(x, future);
    kappa * vect::dot(z, z, dim) / (2.0 * (1.0 + kappa * (t_end - t)))
}

/// Optimal drift for the quadratic terminal cost:
/// `-kappa (x + future) / (1 + kappa (T - t))`.
pub fn quadratic_drift(kappa: f64, x: Vect, t: f64, t_end: f64, future: Vect) -> Vect {
    vect::scale(vect::add(x, future), -kappa / (1.0 + kappa * (t_end - t)))
}

/// Averaged (expected) value for the 1-D quadratic terminal cost and zero
/// potential: `x^2 / (2 (1 + T - t)) + (nu / 2) ln(1 + T - t)`.
pub fn viscous_riccati(nu: f64, x: f64, t: f64, t_end: f64) -> f64 {
    let s = 1.0 + t_end - t;
    x * x / (2.0 * s) + 0.5 * nu * flt::ln(s)
}
