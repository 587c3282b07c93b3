//! Optimal drift extraction and the identities it satisfies along one path:
//! trajectory simulation, the momentum balance, and the transport equation
//! for the drift field in the frozen-path frame.

use crate::fields::{ScalarField, VectorField};
use crate::pathwise::ValueProcess;
use crate::problem::{hamiltonian_min, ProblemSpec};
use crate::randomness::BrownianPath;
use crate::vect::{self, Vect, ZERO};
use crate::{flt, Error, Result};
use alloc::vec::Vec;

/// Time-indexed optimal drift fields plus a clamp diagnostic.
#[derive(Debug, Clone)]
pub struct DriftProcess {
    /// One vector field per time node, index 0 first.
    pub fields: Vec<VectorField>,
    /// Nodes at which the Hamiltonian minimizer sat on the control ball
    /// boundary; nonzero counts mean the control bound is active.
    pub clamped_nodes: usize,
}

/// Optimal feedback drift from value fields: at each node the Hamiltonian
/// minimizer for the local value gradient.
pub fn extract_drift(values: &[ScalarField], spec: &ProblemSpec) -> DriftProcess {
    let mut clamped = 0usize;
    let fields = values
        .iter()
        .map(|v| {
            let grad = v.gradient();
            let mut out = grad.clone();
            for i in 0..v.grid().len() {
                let u = hamiltonian_min(grad.value(i), spec).u_star;
                if vect::norm(u, spec.dim) >= spec.control_bound * (1.0 - 1e-12) {
                    clamped += 1;
                }
                out.set_value(i, u);
            }
            out
        })
        .collect();
    DriftProcess {
        fields,
        clamped_nodes: clamped,
    }
}

/// Time stepping rule for the controlled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    /// Predictor with the current field, corrector averaging current and
    /// next fields.
    Heun,
}

/// Integrate the controlled state under the extracted drift:
/// `Z_{k+1} = Z_k + delta u*(s_k, Z_k) + sqrt(nu) dW_k`.
pub fn simulate_optimal(
    spec: &ProblemSpec,
    drift: &DriftProcess,
    path: &BrownianPath,
    x0: Vect,
    integrator: Integrator,
) -> Result<Vec<Vect>> {
    let n = spec.horizon.steps();
    if drift.fields.len() != n + 1 {
        return Err(Error::GridMismatch(alloc::format!(
            "drift process has {} fields for {} time nodes",
            drift.fields.len(),
            n + 1
        )));
    }
    let delta = spec.horizon.delta();
    let sn = spec.sqrt_nu();
    let mut traj = Vec::with_capacity(n + 1);
    traj.push(x0);
    let mut z = x0;
    for k in 0..n {
        let u0 = drift.fields[k].interpolate(z);
        let noise = vect::scale(path.increment(k), sn);
        let next = match integrator {
            Integrator::Euler => vect::add(vect::axpy(z, delta, u0), noise),
            Integrator::Heun => {
                let pred = vect::add(vect::axpy(z, delta, u0), noise);
                let u1 = drift.fields[k + 1].interpolate(pred);
                vect::add(
                    vect::axpy(z, 0.5 * delta, vect::add(u0, u1)),
                    noise,
                )
            }
        };
        z = next;
        traj.push(z);
    }
    Ok(traj)
}

/// Momentum balance along one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct MomentumReport {
    /// `max_k | u*(s_k, Z_k) - u*(s_0, Z_0) - sum_{j<k} delta grad V(Z_j) |`.
    pub max_residual: f64,
    /// `| u*(T, Z_N) + grad S(Z_N) |`.
    pub terminal_gap: f64,
}

/// Check that the drift along the trajectory gains exactly the accumulated
/// potential gradient, and ends at minus the terminal cost gradient.
pub fn momentum_residual(
    spec: &ProblemSpec,
    drift: &DriftProcess,
    trajectory: &[Vect],
) -> MomentumReport {
    let delta = spec.horizon.delta();
    let n = trajectory.len() - 1;
    let u0 = drift.fields[0].interpolate(trajectory[0]);
    let mut accumulated = ZERO;
    let mut max_residual = 0.0f64;
    for (k, &z) in trajectory.iter().enumerate() {
        let u = drift.fields[k].interpolate(z);
        let predicted = vect::add(u0, accumulated);
        max_residual = flt::max(
            max_residual,
            vect::norm(vect::sub(u, predicted), spec.dim),
        );
        if k < n {
            accumulated = vect::axpy(accumulated, delta, spec.potential.gradient(z, spec.dim));
        }
    }
    let u_end = drift.fields[n].interpolate(trajectory[n]);
    let terminal_gap = vect::norm(
        vect::add(u_end, spec.terminal.gradient(trajectory[n], spec.dim)),
        spec.dim,
    );
    MomentumReport {
        max_residual,
        terminal_gap,
    }
}

/// Transport residual of the drift in the frozen-path frame.
///
/// With `v(s, y) = u*(s, y + sqrt(nu) W_s)` the drift satisfies
/// `d v / d s + (v . grad) v = grad V(y + sqrt(nu) W_s)`; this returns the
/// largest norm of the discrete residual (forward time difference, central
/// space differences) over core nodes and steps.
pub fn drift_spde_residual(spec: &ProblemSpec, process: &ValueProcess) -> f64 {
    let n = process.shifted.len() - 1;
    let delta = spec.horizon.delta();
    let grid = *process.shifted[0].grid();
    let core = grid.core_indices(0.5);
    let drift_at = |k: usize| -> VectorField {
        let grad = process.shifted[k].gradient();
        let mut out = grad.clone();
        for i in 0..grid.len() {
            out.set_value(i, hamiltonian_min(grad.value(i), spec).u_star);
        }
        out
    };
    let mut prev = drift_at(0);
    let mut worst = 0.0f64;
    for k in 1..=n {
        let cur = drift_at(k);
        let jac = prev.jacobian();
        let shift = process.shifts[k - 1];
        for &i in &core {
            let u = prev.value(i);
            let du = vect::scale(vect::sub(cur.value(i), u), 1.0 / delta);
            let mut advect = ZERO;
            for (d, row) in jac.iter().enumerate().take(spec.dim) {
                advect[d] = vect::dot(row.value(i), u, spec.dim);
            }
            let force = spec
                .potential
                .gradient(vect::add(grid.point(i), shift), spec.dim);
            let r = vect::norm(
                vect::sub(vect::add(du, advect), force),
                spec.dim,
            );
            worst = flt::max(worst, r);
        }
        prev = cur;
    }
    worst
}
