//! Per-path value solvers.
//!
//! Freezing one Brownian trajectory turns the random control problem into a
//! deterministic one in shifted coordinates: with `y = x - sqrt(nu) W_s` the
//! state moves by the control alone, the potential becomes time dependent,
//! and the terminal cost is evaluated at `y + sqrt(nu) W_T`. The shift
//! solver works entirely in those coordinates and maps back at the end; the
//! splitting solver alternates a Hamiltonian sub-step in the original
//! coordinates with an exact resampling by the Brownian increment. Both
//! target the same value process and are compared against each other and
//! against closed forms.

use crate::fields::{BoundaryMode, ScalarField, SpaceGrid};
use crate::hj::{semi_lagrangian_step, solve_hj_backward};
use crate::problem::{CatalogEntry, ProblemSpec};
use crate::randomness::BrownianPath;
use crate::vect::{self, Vect};
use crate::{flt, Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Value process of one path on one spatial grid.
#[derive(Debug, Clone)]
pub struct ValueProcess {
    /// Value fields in shifted coordinates, one per time node (index 0
    /// first): `shifted[k]` at node `y` approximates the value at
    /// `x = y + sqrt(nu) W_k`.
    pub shifted: Vec<ScalarField>,
    /// Value fields in original coordinates, one per time node.
    pub values: Vec<ScalarField>,
    /// `sqrt(nu) * W_k` per time node.
    pub shifts: Vec<Vect>,
}

fn check_path(spec: &ProblemSpec, path: &BrownianPath) -> Result<()> {
    if path.dim() != spec.dim {
        return Err(Error::GridMismatch(alloc::format!(
            "path dimension {} does not match problem dimension {}",
            path.dim(),
            spec.dim
        )));
    }
    if *path.grid() != spec.horizon {
        return Err(Error::GridMismatch(
            "path time grid does not match problem horizon".into(),
        ));
    }
    Ok(())
}

/// Shift-method solve: deterministic backward HJ in shifted coordinates with
/// an exactly evaluated moving potential and terminal cost, then a map back
/// to original coordinates by field shifting.
pub fn solve_by_shift(
    spec: &ProblemSpec,
    path: &BrownianPath,
    grid: SpaceGrid,
) -> Result<ValueProcess> {
    check_path(spec, path)?;
    let sn = spec.sqrt_nu();
    let n = spec.horizon.steps();
    let shifts: Vec<Vect> = (0..=n).map(|k| vect::scale(path.value(k), sn)).collect();
    let w_end = shifts[n];
    let terminal = ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |y| {
        spec.terminal.value(vect::add(y, w_end), spec.dim)
    });
    let shifted = solve_hj_backward(&spec.clone(), &terminal, |k, y| {
        spec.potential.value(vect::add(y, shifts[k]), spec.dim)
    })?;
    let values = shifted
        .iter()
        .zip(&shifts)
        .map(|(w, s)| w.shift_sample(vect::scale(*s, -1.0)))
        .collect();
    Ok(ValueProcess {
        shifted,
        values,
        shifts,
    })
}

/// Splitting solve in original coordinates: per backward step, resample the
/// next field by the Brownian increment, then apply the Hamiltonian
/// sub-step with the static potential.
pub fn solve_by_splitting(
    spec: &ProblemSpec,
    path: &BrownianPath,
    grid: SpaceGrid,
) -> Result<Vec<ScalarField>> {
    check_path(spec, path)?;
    let sn = spec.sqrt_nu();
    let n = spec.horizon.steps();
    let delta = spec.horizon.delta();
    let pot: Vec<f64> = (0..grid.len())
        .map(|i| spec.potential.value(grid.point(i), spec.dim))
        .collect();
    let terminal = ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |x| {
        spec.terminal.value(x, spec.dim)
    });
    let mut fields = vec![terminal];
    for back in 0..n {
        let k = n - 1 - back;
        let moved = fields
            .last()
            .unwrap()
            .shift_sample(vect::scale(path.increment(k), sn));
        fields.push(semi_lagrangian_step(spec, &moved, &pot, delta)?);
    }
    fields.reverse();
    Ok(fields)
}

/// Logarithm of the stochastic heat kernel smoothing of `exp(f)` along one
/// path, with the per-step Ito residual of its exponent.
#[derive(Debug, Clone)]
pub struct HopfColeField {
    /// `log eta(t_k, .)` per time node, index 0 first.
    pub log_fields: Vec<ScalarField>,
    /// Largest per-step Ito residual over core nodes and steps.
    pub max_ito_residual: f64,
}

/// Evaluate `log eta(t, x)` with
/// `eta(t,x) = (2 pi nu t)^{-1/2} int exp(-(x - y - sqrt(nu) W_t)^2 / (2 nu t) + f(y)) dy`
/// on the grid at every path node (1-D only), and check the exponent
/// `u = log eta` against its stochastic evolution
/// `du = nu (u_xx + u_x^2 / 2) dt - sqrt(nu) u_x dW`
/// step by step: forward difference in time, central differences in space,
/// measured on the core region.
///
/// The quadrature runs over an extended domain so no kernel mass is lost at
/// the grid edges; `f` is a catalog entry and therefore evaluable anywhere.
pub fn hopf_cole_reference(
    nu: f64,
    path: &BrownianPath,
    grid: SpaceGrid,
    f: CatalogEntry,
) -> Result<HopfColeField> {
    if grid.dim() != 1 || path.dim() != 1 {
        return Err(Error::Precondition(
            "heat kernel reference is one-dimensional".into(),
        ));
    }
    if !(nu > 0.0) {
        return Err(Error::Config(alloc::format!("nu must be positive, got {nu}")));
    }
    let n = path.grid().steps();
    let horizon = path.grid().t_end() - path.grid().t0();
    let sn = flt::sqrt(nu);
    let mut max_shift = 0.0f64;
    for k in 0..=n {
        max_shift = flt::max(max_shift, flt::abs(sn * path.value(k)[0]));
    }
    // Quadrature box: evaluation box plus enough room for the kernel tails
    // and the path excursion.
    let pad = 10.0 * flt::sqrt(nu * horizon) + max_shift + 1.0;
    let hq = grid.h();
    let extra = libm::ceil(pad / hq) as usize;
    let nq = grid.m() + 2 * extra;
    let y0 = grid.lower()[0] - extra as f64 * hq;
    let fy: Vec<f64> = (0..nq)
        .map(|j| f.value([y0 + j as f64 * hq, 0.0], 1))
        .collect();

    let mut log_fields = Vec::with_capacity(n + 1);
    log_fields.push(ScalarField::from_fn(grid, BoundaryMode::Clamp, |x| {
        f.value(x, 1)
    }));
    for k in 1..=n {
        let t = path.grid().node(k) - path.grid().t0();
        let two_nu_t = 2.0 * nu * t;
        let shift = sn * path.value(k)[0];
        let log_norm = -0.5 * flt::ln(core::f64::consts::PI * two_nu_t);
        let mut values = vec![0.0; grid.m()];
        for (i, v) in values.iter_mut().enumerate() {
            let c = grid.point(i)[0] - shift;
            // Log-sum-exp over the quadrature nodes; terms more than 40
            // below the running max are dropped (relative weight < 1e-17).
            let mut gmax = f64::NEG_INFINITY;
            for (j, fj) in fy.iter().enumerate() {
                let d = c - (y0 + j as f64 * hq);
                let g = -d * d / two_nu_t + fj;
                if g > gmax {
                    gmax = g;
                }
            }
            let mut sum = 0.0;
            for (j, fj) in fy.iter().enumerate() {
                let d = c - (y0 + j as f64 * hq);
                let g = -d * d / two_nu_t + fj - gmax;
                if g > -40.0 {
                    let w = if j == 0 || j == nq - 1 { 0.5 } else { 1.0 };
                    sum += w * flt::exp(g);
                }
            }
            *v = log_norm + gmax + flt::ln(sum * hq);
        }
        log_fields.push(ScalarField::new(grid, values, BoundaryMode::Clamp)?);
    }

    // Ito residual of the exponent, per step, on the core region.
    let delta = path.grid().delta();
    let core = grid.core_indices(0.5);
    let mut max_res = 0.0f64;
    for k in 0..n {
        let u = &log_fields[k];
        let grad = u.gradient();
        let lap = u.laplacian();
        let dw = path.increment(k)[0];
        for &i in &core {
            let ux = grad.value(i)[0];
            let uxx = lap.values()[i];
            let du = log_fields[k + 1].values()[i] - u.values()[i];
            let r = du + sn * ux * dw - nu * (uxx + 0.5 * ux * ux) * delta;
            max_res = flt::max(max_res, flt::abs(r));
        }
    }
    Ok(HopfColeField {
        log_fields,
        max_ito_residual: max_res,
    })
}
