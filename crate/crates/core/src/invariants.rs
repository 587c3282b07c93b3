//! Symmetries of the action and their conserved quantities along one path:
//! midpoint (Stratonovich) quadrature, the compensated residual of
//! `Q = <X, u*> - T (|u*|^2/2 - V)`, and the pointwise symmetry equation.

use crate::drift::DriftProcess;
use crate::problem::ProblemSpec;
use crate::randomness::BrownianPath;
use crate::vect::{self, Mat, Vect, ZERO};
use crate::{flt, Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Infinitesimal symmetry generator: a time component `T(s)` and a space
/// component `X(s, x)`, both with closed-form derivatives.
#[derive(Clone, Copy)]
pub struct SymmetryField {
    pub x_fn: fn(f64, Vect) -> Vect,
    /// Jacobian `M[i][j] = d X_i / d x_j`.
    pub x_jacobian: fn(f64, Vect) -> Mat,
    pub x_time_deriv: fn(f64, Vect) -> Vect,
    pub x_laplacian: fn(f64, Vect) -> Vect,
    pub t_fn: fn(f64) -> f64,
    pub t_deriv: fn(f64) -> f64,
}

const ZERO_MAT: Mat = [[0.0; 2]; 2];

fn zero_vect(_: f64, _: Vect) -> Vect {
    ZERO
}
fn zero_mat(_: f64, _: Vect) -> Mat {
    ZERO_MAT
}
fn one_scalar(_: f64) -> f64 {
    1.0
}
fn zero_scalar(_: f64) -> f64 {
    0.0
}
fn rotation_x(_: f64, x: Vect) -> Vect {
    [-x[1], x[0]]
}
fn rotation_jac(_: f64, _: Vect) -> Mat {
    [[0.0, -1.0], [1.0, 0.0]]
}

impl SymmetryField {
    /// `T = 1`, `X = 0`: invariance under shifting the time origin.
    pub fn time_translation() -> Self {
        SymmetryField {
            x_fn: zero_vect,
            x_jacobian: zero_mat,
            x_time_deriv: zero_vect,
            x_laplacian: zero_vect,
            t_fn: one_scalar,
            t_deriv: zero_scalar,
        }
    }

    /// `T = 0`, `X = A x` with the antisymmetric generator
    /// `A = [[0, -1], [1, 0]]` (2-D).
    pub fn rotation() -> Self {
        SymmetryField {
            x_fn: rotation_x,
            x_jacobian: rotation_jac,
            x_time_deriv: zero_vect,
            x_laplacian: zero_vect,
            t_fn: zero_scalar,
            t_deriv: zero_scalar,
        }
    }
}

/// Midpoint-quadrature Stratonovich integral of node samples `a_k` over the
/// node range `[start, end]`:
/// `sum_{k=start}^{end-1} <(a_k + a_{k+1})/2, W_{k+1} - W_k>`.
///
/// `samples` is indexed by absolute node, so it must cover `[start, end]`.
pub fn strat_integral(
    samples: &[Vect],
    path: &BrownianPath,
    start: usize,
    end: usize,
) -> Result<f64> {
    if end < start || end >= path.grid().nodes() || end >= samples.len() {
        return Err(Error::Precondition(alloc::format!(
            "integration range [{start}, {end}] outside sampled grid"
        )));
    }
    let dim = path.dim();
    let mut sum = 0.0;
    for k in start..end {
        let mid = vect::scale(vect::add(samples[k], samples[k + 1]), 0.5);
        sum += vect::dot(mid, path.increment(k), dim);
    }
    Ok(sum)
}

/// Conserved-quantity trace along one trajectory.
#[derive(Debug, Clone)]
pub struct QuantityTrace {
    /// `Q_k = <X, u*> - T (|u*|^2/2 - V)` at `(s_k, Z_k)`.
    pub q: Vec<f64>,
    /// Midpoint partial sums of the chain-rule noise coefficient.
    pub noise: Vec<f64>,
    /// `R_k = Q_k - Q_0 - N_k - sum_{j<k} delta (nu/2) T(s_j) lap V(Z_j)`.
    pub residual: Vec<f64>,
}

impl QuantityTrace {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| flt::max(m, flt::abs(*r)))
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q.iter().fold(0.0, |m, q| flt::max(m, flt::abs(*q)))
    }
}

/// Evaluate the conserved quantity and its compensated residual along a
/// trajectory that was simulated under `drift` on the same path.
///
/// The noise compensation is the midpoint Stratonovich integral of
/// `sqrt(nu) grad_z Q`, assembled from the closed-form derivatives of `X`,
/// `T`, `V` and the grid Jacobian `G` of the drift field:
///
/// `a_k = sqrt(nu) (M^T u + G^T X - T (G^T u - grad V))`.
///
/// The bookkeeping is exact when the drift field's time dependence carries
/// no noise of its own, which is the case for fields produced in the
/// frozen-path (shifted) frame.
pub fn conserved_quantity(
    sym: &SymmetryField,
    drift: &DriftProcess,
    trajectory: &[Vect],
    path: &BrownianPath,
    spec: &ProblemSpec,
) -> Result<QuantityTrace> {
    let n = trajectory.len() - 1;
    if drift.fields.len() != n + 1 || path.grid().nodes() != n + 1 {
        return Err(Error::GridMismatch(
            "drift, trajectory and path must share one time grid".into(),
        ));
    }
    let dim = spec.dim;
    let sn = spec.sqrt_nu();
    let delta = spec.horizon.delta();
    let mut q = Vec::with_capacity(n + 1);
    let mut coeff = Vec::with_capacity(n + 1);
    let mut bv = vec![0.0; n + 1];
    for (k, &z) in trajectory.iter().enumerate() {
        let s = spec.horizon.node(k);
        let u = drift.fields[k].interpolate(z);
        let jac = drift.fields[k].jacobian();
        let mut g: Mat = ZERO_MAT;
        for (i, row) in jac.iter().enumerate() {
            g[i] = row.interpolate(z);
        }
        let x = (sym.x_fn)(s, z);
        let m = (sym.x_jacobian)(s, z);
        let t = (sym.t_fn)(s);
        let pot = spec.potential.eval(z, dim);
        q.push(
            vect::dot(x, u, dim) - t * (0.5 * vect::dot(u, u, dim) - pot.value),
        );
        let mut a = vect::add(vect::mat_t_vec(m, u, dim), vect::mat_t_vec(g, x, dim));
        a = vect::sub(
            a,
            vect::scale(
                vect::sub(vect::mat_t_vec(g, u, dim), pot.gradient),
                t,
            ),
        );
        coeff.push(vect::scale(a, sn));
        if k < n {
            bv[k + 1] = bv[k] + delta * 0.5 * spec.nu * t * pot.laplacian;
        }
    }
    let mut noise = vec![0.0; n + 1];
    for k in 0..n {
        let mid = vect::scale(vect::add(coeff[k], coeff[k + 1]), 0.5);
        noise[k + 1] = noise[k] + vect::dot(mid, path.increment(k), dim);
    }
    let residual = (0..=n).map(|k| q[k] - q[0] - noise[k] - bv[k]).collect();
    Ok(QuantityTrace { q, noise, residual })
}

/// Pointwise symmetry equation along the trajectory:
///
/// `<u*, DX> - (|u*|^2/2 - V) Tdot + <grad V, X>` with
/// `DX = d_s X + (u* . grad) X + (nu/2) lap X`,
///
/// maximized over nodes with `|Z_k| > guard` (the guard excludes gradient
/// singularities of radial potentials at the origin).
pub fn symmetry_residual(
    sym: &SymmetryField,
    drift: &DriftProcess,
    trajectory: &[Vect],
    spec: &ProblemSpec,
    guard: f64,
) -> f64 {
    let dim = spec.dim;
    let mut worst = 0.0f64;
    for (k, &z) in trajectory.iter().enumerate() {
        if vect::norm(z, dim) <= guard {
            continue;
        }
        let s = spec.horizon.node(k);
        let u = drift.fields[k].interpolate(z);
        let m = (sym.x_jacobian)(s, z);
        let dx = vect::add(
            vect::add((sym.x_time_deriv)(s, z), vect::mat_vec(m, u, dim)),
            vect::scale((sym.x_laplacian)(s, z), 0.5 * spec.nu),
        );
        let pot = spec.potential.eval(z, dim);
        let r = vect::dot(u, dx, dim)
            - (0.5 * vect::dot(u, u, dim) - pot.value) * (sym.t_deriv)(s)
            + vect::dot(pot.gradient, (sym.x_fn)(s, z), dim);
        worst = flt::max(worst, flt::abs(r));
    }
    worst
}
