//! Deterministic backward Hamilton-Jacobi solvers: the semi-Lagrangian
//! update used per path step, and the viscous baseline with an explicit
//! diffusion stage.

use crate::fields::{BoundaryMode, ScalarField, SpaceGrid};
use crate::problem::{control_lattice, ProblemSpec};
use crate::vect::{self, Vect};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// One backward semi-Lagrangian step of size `delta`:
///
/// `out(y) = min_u { delta * (L(u) + pot(y)) + next(y + delta * u) }`
///
/// minimized over the control lattice plus, for the quadratic Lagrangian, a
/// closed-form candidate `u = -p * min(1, C/|p|)` built from the node
/// gradient of `next`. The lattice is sorted by norm, so ties resolve toward
/// the smaller control.
pub fn semi_lagrangian_step(
    spec: &ProblemSpec,
    next: &ScalarField,
    pot: &[f64],
    delta: f64,
) -> Result<ScalarField> {
    let grid = *next.grid();
    if pot.len() != grid.len() {
        return Err(Error::GridMismatch(alloc::format!(
            "potential table has {} entries for a {}-node grid",
            pot.len(),
            grid.len()
        )));
    }
    let lattice = control_lattice(spec.dim, spec.control_bound, spec.lattice_k);
    let grad = if spec.lagrangian.is_quadratic() {
        Some(next.gradient())
    } else {
        None
    };
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let y = grid.point(i);
        let mut best = f64::INFINITY;
        for &u in &lattice {
            let cand = delta * spec.lagrangian.eval(u, spec.dim)
                + next.interpolate(vect::axpy(y, delta, u));
            if cand < best {
                best = cand;
            }
        }
        if let Some(g) = &grad {
            let p = g.value(i);
            let np = vect::norm(p, spec.dim);
            let scale = if np > spec.control_bound {
                spec.control_bound / np
            } else {
                1.0
            };
            let u = vect::scale(p, -scale);
            let cand = delta * spec.lagrangian.eval(u, spec.dim)
                + next.interpolate(vect::axpy(y, delta, u));
            if cand < best {
                best = cand;
            }
        }
        values[i] = best + delta * pot[i];
    }
    ScalarField::new(grid, values, next.boundary())
}

/// Solve the deterministic backward HJ problem on `grid` with a per-step
/// potential table. `potential(k, y)` is the running potential applied on
/// the step from node `k` to `k + 1`. Returns value fields at every time
/// node, index 0 first.
pub fn solve_hj_backward(
    spec: &ProblemSpec,
    terminal: &ScalarField,
    potential: impl Fn(usize, Vect) -> f64,
) -> Result<Vec<ScalarField>> {
    let grid = *terminal.grid();
    let n = spec.horizon.steps();
    let delta = spec.horizon.delta();
    let mut fields = vec![terminal.clone()];
    for back in 0..n {
        let k = n - 1 - back;
        let pot: Vec<f64> = (0..grid.len()).map(|i| potential(k, grid.point(i))).collect();
        let next = fields.last().unwrap();
        let stepped = semi_lagrangian_step(spec, next, &pot, delta)?;
        fields.push(stepped);
    }
    fields.reverse();
    Ok(fields)
}

/// Explicit-diffusion stability ratio; must stay at or below 1.
#[inline]
pub fn viscous_stability_ratio(spec: &ProblemSpec, grid: &SpaceGrid) -> f64 {
    spec.dim as f64 * spec.nu * spec.horizon.delta() / (grid.h() * grid.h())
}

/// Viscous baseline: backward semi-Lagrangian transport stage followed by an
/// explicit diffusion stage `w + (nu/2) * delta * laplacian(w)` per step.
/// This is the averaged (expected-value) problem, with no path input; it
/// rejects grids that violate the explicit stability bound.
pub fn solve_viscous_hjb(spec: &ProblemSpec, grid: SpaceGrid) -> Result<Vec<ScalarField>> {
    let ratio = viscous_stability_ratio(spec, &grid);
    if ratio > 1.0 {
        return Err(Error::Stability { ratio });
    }
    let n = spec.horizon.steps();
    let delta = spec.horizon.delta();
    let terminal = ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |x| {
        spec.terminal.value(x, spec.dim)
    });
    let pot: Vec<f64> = (0..grid.len())
        .map(|i| spec.potential.value(grid.point(i), spec.dim))
        .collect();
    let mut fields = vec![terminal];
    let half_nu_delta = 0.5 * spec.nu * delta;
    for _ in 0..n {
        let stepped = semi_lagrangian_step(spec, fields.last().unwrap(), &pot, delta)?;
        let lap = stepped.laplacian();
        let mut diffused = stepped;
        for (v, l) in diffused.values_mut().iter_mut().zip(lap.values()) {
            *v += half_nu_delta * l;
        }
        fields.push(diffused);
    }
    fields.reverse();
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CatalogEntry, Lagrangian};
    use crate::time::TimeGrid;

    fn spec(n: usize, potential: CatalogEntry, terminal: CatalogEntry) -> ProblemSpec {
        ProblemSpec::new(
            1,
            0.25,
            TimeGrid::new(0.0, 1.0, n).unwrap(),
            potential,
            terminal,
            8.0,
            Lagrangian::Quadratic,
        )
        .unwrap()
    }

    #[test]
    fn linear_terminal_is_exact() {
        // With S = <p, x> and V = 0 the update has the closed form
        // w_k(x) = p x - (N - k) * delta * p^2 / 2, exact for the prox
        // candidate and preserved by interpolation (affine fields).
        let p = 0.8;
        let spec = spec(16, CatalogEntry::Zero, CatalogEntry::Zero);
        let grid = SpaceGrid::new_1d(-2.0, 2.0, 41).unwrap();
        let term =
            ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |x| p * x[0]);
        let fields = solve_hj_backward(&spec, &term, |_, _| 0.0).unwrap();
        let n = 16;
        let delta = spec.horizon.delta();
        for (k, f) in fields.iter().enumerate() {
            for i in 0..grid.len() {
                let x = grid.point(i)[0];
                let want = p * x - (n - k) as f64 * delta * p * p / 2.0;
                assert!(
                    (f.values()[i] - want).abs() < 1e-12,
                    "k={k} i={i}: {} vs {want}",
                    f.values()[i]
                );
            }
        }
    }

    #[test]
    fn constant_potential_accumulates() {
        let spec = spec(10, CatalogEntry::Constant { c: 3.0 }, CatalogEntry::Zero);
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 21).unwrap();
        let term = ScalarField::constant(grid, 0.0, BoundaryMode::LinearExtrapolate);
        let fields =
            solve_hj_backward(&spec, &term, |_, y| spec.potential.value(y, 1)).unwrap();
        // Zero control is optimal; value at node k is 3 * (1 - t_k).
        for (k, f) in fields.iter().enumerate() {
            let want = 3.0 * (1.0 - spec.horizon.node(k));
            for v in f.values() {
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_is_monotone_in_terminal_data() {
        let spec = spec(1, CatalogEntry::Zero, CatalogEntry::Zero);
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 31).unwrap();
        let lo = ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |x| {
            libm::cos(3.0 * x[0])
        });
        let hi = ScalarField::from_fn(grid, BoundaryMode::LinearExtrapolate, |x| {
            libm::cos(3.0 * x[0]) + 0.4
        });
        let pot = vec![0.0; grid.len()];
        let a = semi_lagrangian_step(&spec, &lo, &pot, 0.1).unwrap();
        let b = semi_lagrangian_step(&spec, &hi, &pot, 0.1).unwrap();
        for i in 0..grid.len() {
            assert!(a.values()[i] <= b.values()[i] + 1e-14);
        }
        // Constant shifts pass through exactly.
        for i in 0..grid.len() {
            assert!((b.values()[i] - a.values()[i] - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn viscous_matches_riccati_oracle() {
        // V = 0, S = x^2 / 2: the averaged value function is
        // v(t, x) = x^2 / (2 (1 + T - t)) + (nu / 2) ln(1 + T - t).
        let nu = 0.25;
        let n = 400;
        let spec = ProblemSpec::new(
            1,
            nu,
            TimeGrid::new(0.0, 1.0, n).unwrap(),
            CatalogEntry::Zero,
            CatalogEntry::Quadratic { kappa: 1.0, offset: 0.0 },
            8.0,
            Lagrangian::Quadratic,
        )
        .unwrap();
        let grid = SpaceGrid::new_1d(-3.0, 3.0, 121).unwrap(); // h = 0.05
        assert!(viscous_stability_ratio(&spec, &grid) <= 1.0);
        let fields = solve_viscous_hjb(&spec, grid).unwrap();
        let core = grid.core_indices(0.5);
        let mut worst = 0.0f64;
        for &i in &core {
            let x = grid.point(i)[0];
            let want = x * x / 4.0 + nu / 2.0 * libm::log(2.0);
            worst = worst.max((fields[0].values()[i] - want).abs());
        }
        assert!(worst < 0.02, "worst error {worst}");
    }

    #[test]
    fn viscous_rejects_unstable_grids() {
        let spec = ProblemSpec::new(
            1,
            4.0,
            TimeGrid::new(0.0, 1.0, 10).unwrap(),
            CatalogEntry::Zero,
            CatalogEntry::Zero,
            1.0,
            Lagrangian::Quadratic,
        )
        .unwrap();
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 101).unwrap();
        assert!(matches!(
            solve_viscous_hjb(&spec, grid),
            Err(Error::Stability { .. })
        ));
    }
}
