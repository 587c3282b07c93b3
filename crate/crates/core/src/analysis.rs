//! Cross-cutting verification harnesses: terminal-data monotonicity of the
//! value process, continuity-modulus estimation, and refinement studies in
//! which every level shares one underlying Brownian path.

use crate::fields::{ScalarField, SpaceGrid};
use crate::pathwise::{solve_by_shift, solve_by_splitting};
use crate::problem::{CatalogEntry, ProblemSpec};
use crate::randomness::BrownianPath;
use crate::time::TimeGrid;
use crate::vect::Vect;
use crate::{flt, Error, Result};
use alloc::vec::Vec;

/// Which value solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Shift,
    Splitting,
}

/// Value fields at every time node for the chosen method.
pub fn solve_value_fields(
    spec: &ProblemSpec,
    path: &BrownianPath,
    grid: SpaceGrid,
    method: SolveMethod,
) -> Result<Vec<ScalarField>> {
    match method {
        SolveMethod::Shift => Ok(solve_by_shift(spec, path, grid)?.values),
        SolveMethod::Splitting => solve_by_splitting(spec, path, grid),
    }
}

/// Outcome of a terminal-data monotonicity check.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    /// `sup (U1 - U2)+` over core nodes and all times.
    pub sup_positive_part: f64,
    /// Extremes of `U2 - U1` over the same set, for constant-shift checks.
    pub min_diff: f64,
    pub max_diff: f64,
}

/// Solve the same problem on the same path under two terminal costs with
/// `S1 <= S2` and measure how far the value ordering is violated.
///
/// The ordering precondition is checked node-wise on the grid; a violation
/// reports the worst node.
pub fn comparison_check(
    spec: &ProblemSpec,
    path: &BrownianPath,
    grid: SpaceGrid,
    s1: CatalogEntry,
    s2: CatalogEntry,
    method: SolveMethod,
) -> Result<ComparisonReport> {
    let mut worst_gap = 0.0f64;
    let mut worst_node = 0usize;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let gap = s1.value(x, spec.dim) - s2.value(x, spec.dim);
        if gap > worst_gap {
            worst_gap = gap;
            worst_node = i;
        }
    }
    if worst_gap > 0.0 {
        let p = grid.point(worst_node);
        return Err(Error::Precondition(alloc::format!(
            "terminal ordering violated: S1 - S2 = {worst_gap:.3e} at node {worst_node} ({}, {})",
            p[0],
            p[1]
        )));
    }
    let mut spec1 = spec.clone();
    spec1.terminal = s1;
    let mut spec2 = spec.clone();
    spec2.terminal = s2;
    let u1 = solve_value_fields(&spec1, path, grid, method)?;
    let u2 = solve_value_fields(&spec2, path, grid, method)?;
    let core = grid.core_indices(0.5);
    let mut sup_pos = 0.0f64;
    let mut min_diff = f64::INFINITY;
    let mut max_diff = f64::NEG_INFINITY;
    for (a, b) in u1.iter().zip(&u2) {
        for &i in &core {
            let d = b.values()[i] - a.values()[i];
            sup_pos = flt::max(sup_pos, -d);
            min_diff = flt::min(min_diff, d);
            max_diff = flt::max(max_diff, d);
        }
    }
    Ok(ComparisonReport {
        sup_positive_part: sup_pos,
        min_diff,
        max_diff,
    })
}

/// Measured continuity moduli of a value process.
#[derive(Debug, Clone, Copy)]
pub struct Moduli {
    /// Largest `|dU| / h` over adjacent core nodes and all times.
    pub lip_x: f64,
    /// Fitted time-increment exponent, averaged over core sample points.
    pub holder_t: f64,
    /// Set when the field is constant to working precision; both moduli
    /// are then reported as zero.
    pub degenerate: bool,
}

fn fit_slope(samples: &[(f64, f64)]) -> Option<f64> {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in samples {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if flt::abs(denom) < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Estimate the spatial Lipschitz constant and the time-Hoelder exponent of
/// a value process on the core region.
///
/// The exponent is a log-log least-squares fit of `|U_t(x) - U_t'(x)|`
/// against `|t - t'|` over dyadic lags restricted to
/// `[delta, horizon / 4]`, averaged over up to 20 core points; shorter lags
/// carry no sub-step information and longer ones mix in the drift.
pub fn continuity_moduli(values: &[ScalarField], horizon: &TimeGrid) -> Moduli {
    let grid = *values[0].grid();
    let core = grid.core_indices(0.5);
    let m = grid.m();
    let mut lip = 0.0f64;
    for f in values {
        for &i in &core {
            let x = f.values()[i];
            if grid.dim() == 1 {
                if core.contains(&(i + 1)) {
                    lip = flt::max(lip, flt::abs(f.values()[i + 1] - x) / grid.h());
                }
            } else {
                for j in [i + 1, i + m] {
                    if core.contains(&j) {
                        lip = flt::max(lip, flt::abs(f.values()[j] - x) / grid.h());
                    }
                }
            }
        }
    }
    if lip < 1e-12 {
        return Moduli {
            lip_x: 0.0,
            holder_t: 0.0,
            degenerate: true,
        };
    }

    let n = values.len() - 1;
    let delta = horizon.delta();
    let stride = core.len().div_ceil(20);
    let points: Vec<usize> = core.iter().copied().step_by(stride).collect();
    let base_stride = (n / 16).max(1);
    let mut slopes = Vec::new();
    for &i in &points {
        let mut samples = Vec::new();
        let mut lag = 1usize;
        while lag * 4 <= n {
            let mut sumsq = 0.0;
            let mut count = 0usize;
            let mut k = 0;
            while k + lag <= n {
                let d = values[k + lag].values()[i] - values[k].values()[i];
                sumsq += d * d;
                count += 1;
                k += base_stride;
            }
            if count > 0 {
                let rms = flt::sqrt(sumsq / count as f64);
                if rms > 1e-14 {
                    samples.push((flt::ln(lag as f64 * delta), flt::ln(rms)));
                }
            }
            lag *= 2;
        }
        if let Some(s) = fit_slope(&samples) {
            slopes.push(s);
        }
    }
    let holder = if slopes.is_empty() {
        0.0
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    };
    Moduli {
        lip_x: lip,
        holder_t: holder,
        degenerate: false,
    }
}

/// Error per refinement level plus a fitted order.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub deltas: Vec<f64>,
    pub hs: Vec<f64>,
    /// Core max-norm error of the initial-time field per level.
    pub errors: Vec<f64>,
    /// Log-log slope of error against delta; absent when some error is
    /// exactly zero (nothing to fit).
    pub slope: Option<f64>,
}

/// Solve the problem across `levels` simultaneous refinements of the time
/// step, the spatial grid and the Brownian path (bridge refinement keeps
/// one underlying path), measuring the initial-time field against either a
/// closed-form reference or the finest level.
pub fn convergence_study(
    spec: &ProblemSpec,
    base_path: &BrownianPath,
    base_grid: SpaceGrid,
    levels: usize,
    method: SolveMethod,
    reference: Option<&dyn Fn(Vect) -> f64>,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::Precondition(alloc::format!(
            "slope fit needs at least 3 levels, got {levels}"
        )));
    }
    let mut deltas = Vec::new();
    let mut hs = Vec::new();
    let mut fields = Vec::new();
    let mut path = base_path.clone();
    let mut grid = base_grid;
    let mut horizon = spec.horizon;
    for level in 0..levels {
        let mut level_spec = spec.clone();
        level_spec.horizon = horizon;
        let u0 = solve_value_fields(&level_spec, &path, grid, method)?
            .into_iter()
            .next()
            .unwrap();
        deltas.push(horizon.delta());
        hs.push(grid.h());
        fields.push(u0);
        if level + 1 < levels {
            path = path.refine();
            grid = grid.refined();
            horizon = horizon.refined();
        }
    }
    let mut errors = Vec::new();
    match reference {
        Some(f) => {
            for u0 in &fields {
                let g = u0.grid();
                let mut e = 0.0f64;
                for &i in &g.core_indices(0.5) {
                    e = flt::max(e, flt::abs(u0.values()[i] - f(g.point(i))));
                }
                errors.push(e);
            }
        }
        None => {
            // Nested grids: coarse node i sits at fine node 2^gap * i along
            // each axis.
            let finest = fields.last().unwrap().clone();
            for (level, u0) in fields.iter().enumerate().take(levels - 1) {
                let g = u0.grid();
                let factor = 1usize << (levels - 1 - level);
                let mut e = 0.0f64;
                for &i in &g.core_indices(0.5) {
                    let fine_i = if g.dim() == 1 {
                        i * factor
                    } else {
                        let ix = i % g.m();
                        let iy = i / g.m();
                        finest.grid().index(ix * factor, iy * factor)
                    };
                    e = flt::max(
                        e,
                        flt::abs(u0.values()[i] - finest.values()[fine_i]),
                    );
                }
                errors.push(e);
            }
        }
    }
    let slope = if errors.iter().any(|e| *e == 0.0) {
        None
    } else {
        let samples: Vec<(f64, f64)> = errors
            .iter()
            .enumerate()
            .map(|(l, e)| (flt::ln(deltas[l]), flt::ln(*e)))
            .collect();
        fit_slope(&samples)
    };
    Ok(ConvergenceReport {
        deltas,
        hs,
        errors,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Lagrangian;
    use crate::reference;
    use crate::vect;

    fn spec(n: usize, potential: CatalogEntry, terminal: CatalogEntry) -> ProblemSpec {
        ProblemSpec::new(
            1,
            0.25,
            TimeGrid::new(0.0, 1.0, n).unwrap(),
            potential,
            terminal,
            6.0,
            Lagrangian::Quadratic,
        )
        .unwrap()
    }

    #[test]
    fn constant_shift_passes_through() {
        let s1 = CatalogEntry::Cosine { kappa: 1.0, k: [1.0, 0.0], phase: 0.0, offset: 0.0 };
        let s2 = CatalogEntry::Cosine { kappa: 1.0, k: [1.0, 0.0], phase: 0.0, offset: 1.0 };
        let spec = spec(50, CatalogEntry::Zero, s1);
        let path = BrownianPath::generate(3, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-3.0, 3.0, 101).unwrap();
        let r = comparison_check(&spec, &path, grid, s1, s2, SolveMethod::Shift).unwrap();
        assert!(r.sup_positive_part <= 1e-12);
        assert!((r.min_diff - 1.0).abs() < 1e-12 && (r.max_diff - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordered_terminals_keep_ordered_values() {
        let s1 = CatalogEntry::Cosine {
            kappa: -1.0,
            k: [1.0, 0.0],
            phase: 0.0,
            offset: -1.0,
        };
        // sin(x) + 1 written as a phase-shifted cosine.
        let s2 = CatalogEntry::Cosine {
            kappa: 1.0,
            k: [1.0, 0.0],
            phase: -core::f64::consts::FRAC_PI_2,
            offset: 1.0,
        };
        let spec = spec(
            50,
            CatalogEntry::Cosine { kappa: 1.0, k: [1.0, 0.0], phase: 0.0, offset: 0.0 },
            s1,
        );
        let path = BrownianPath::generate(7, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-3.0, 3.0, 101).unwrap();
        let r = comparison_check(&spec, &path, grid, s1, s2, SolveMethod::Shift).unwrap();
        assert!(r.sup_positive_part <= 1e-10, "{}", r.sup_positive_part);
    }

    #[test]
    fn ordering_precondition_is_enforced() {
        let s1 = CatalogEntry::Constant { c: 1.0 };
        let s2 = CatalogEntry::Zero;
        let spec = spec(10, CatalogEntry::Zero, s1);
        let path = BrownianPath::generate(1, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 11).unwrap();
        let err = comparison_check(&spec, &path, grid, s1, s2, SolveMethod::Shift)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn zero_field_is_degenerate() {
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 21).unwrap();
        let fields: Vec<ScalarField> = (0..11)
            .map(|_| ScalarField::constant(grid, 0.0, crate::fields::BoundaryMode::Clamp))
            .collect();
        let m = continuity_moduli(&fields, &TimeGrid::new(0.0, 1.0, 10).unwrap());
        assert!(m.degenerate);
        assert_eq!((m.lip_x, m.holder_t), (0.0, 0.0));
    }

    #[test]
    fn linear_case_recovers_slope() {
        let p = 0.8;
        let spec = spec(
            100,
            CatalogEntry::Zero,
            CatalogEntry::Linear { a: [p, 0.0], offset: 0.0 },
        );
        let path = BrownianPath::generate(5, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-3.0, 3.0, 201).unwrap();
        let fields = solve_value_fields(&spec, &path, grid, SolveMethod::Shift).unwrap();
        let m = continuity_moduli(&fields, &spec.horizon);
        assert!((m.lip_x - p).abs() < 1e-6, "lip {}", m.lip_x);
    }

    #[test]
    fn quadratic_case_has_square_root_time_exponent() {
        let spec = spec(
            400,
            CatalogEntry::Zero,
            CatalogEntry::Quadratic { kappa: 1.0, offset: 0.0 },
        );
        let grid = SpaceGrid::new_1d(-4.0, 4.0, 201).unwrap();
        let mut sum = 0.0;
        let seeds = [11u64, 29, 47];
        for &seed in &seeds {
            let path = BrownianPath::generate(seed, spec.horizon, 1).unwrap();
            let sn = spec.sqrt_nu();
            let end = vect::scale(path.value(400), sn);
            // Closed-form fields keep this test independent of solver cost.
            let fields: Vec<ScalarField> = (0..=400)
                .map(|k| {
                    let t = spec.horizon.node(k);
                    let future = vect::sub(end, vect::scale(path.value(k), sn));
                    ScalarField::from_fn(
                        grid,
                        crate::fields::BoundaryMode::LinearExtrapolate,
                        |x| reference::quadratic_value(1.0, 1, x, t, 1.0, future),
                    )
                })
                .collect();
            let m = continuity_moduli(&fields, &spec.horizon);
            sum += m.holder_t;
        }
        let avg = sum / seeds.len() as f64;
        assert!((0.35..=0.65).contains(&avg), "exponent {avg}");
    }

    #[test]
    fn quadratic_convergence_to_closed_form() {
        let spec = spec(
            100,
            CatalogEntry::Zero,
            CatalogEntry::Quadratic { kappa: 1.0, offset: 0.0 },
        );
        let path = BrownianPath::generate(17, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-4.0, 4.0, 101).unwrap();
        // All refinement levels preserve the path endpoint, so one closure
        // serves every level.
        let end = vect::scale(path.value(100), spec.sqrt_nu());
        let closed = move |x: Vect| reference::quadratic_value(1.0, 1, x, 0.0, 1.0, end);
        let report =
            convergence_study(&spec, &path, grid, 3, SolveMethod::Shift, Some(&closed))
                .unwrap();
        assert!(report.errors[1] <= report.errors[0]);
        assert!(report.errors[2] <= report.errors[1]);
        let slope = report.slope.unwrap();
        assert!(slope >= 0.8, "slope {slope}, errors {:?}", report.errors);
    }

    #[test]
    fn zero_problem_reports_no_slope() {
        let spec = spec(20, CatalogEntry::Zero, CatalogEntry::Zero);
        let path = BrownianPath::generate(2, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-2.0, 2.0, 41).unwrap();
        let report =
            convergence_study(&spec, &path, grid, 3, SolveMethod::Shift, None).unwrap();
        assert!(report.errors.iter().all(|e| *e == 0.0));
        assert!(report.slope.is_none());
    }

    #[test]
    fn self_convergence_decreases() {
        let spec = spec(
            50,
            CatalogEntry::Cosine { kappa: 0.8, k: [2.0, 0.0], phase: 0.2, offset: 0.0 },
            CatalogEntry::Cosine { kappa: 1.0, k: [1.0, 0.0], phase: 0.0, offset: 0.0 },
        );
        let path = BrownianPath::generate(9, spec.horizon, 1).unwrap();
        let grid = SpaceGrid::new_1d(-3.0, 3.0, 76).unwrap();
        let report =
            convergence_study(&spec, &path, grid, 3, SolveMethod::Shift, None).unwrap();
        assert_eq!(report.errors.len(), 2);
        assert!(report.errors[1] < report.errors[0], "{:?}", report.errors);
    }
}
