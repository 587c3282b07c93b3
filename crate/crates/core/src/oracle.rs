//! Independent oracles for the value process: direct cost evaluation,
//! exhaustive enumeration over control lattices, exact dynamic programming
//! on the aligned reachable lattice, adjoint gradient descent, and the
//! dynamic-programming residual built from them.
//!
//! None of these share code with the grid solvers beyond the problem
//! definition, so agreement between the two sides is meaningful.

use crate::fields::ScalarField;
use crate::pathwise::ValueProcess;
use crate::problem::{control_lattice, ProblemSpec};
use crate::randomness::BrownianPath;
use crate::vect::{self, Vect, ZERO};
use crate::{flt, Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// States visited from `x` at time node `start` under the given piecewise
/// constant controls: `Z_{j+1} = Z_j + delta u_j + sqrt(nu) dW_{start+j}`.
pub fn state_trajectory(
    spec: &ProblemSpec,
    path: &BrownianPath,
    start: usize,
    x: Vect,
    controls: &[Vect],
) -> Vec<Vect> {
    let delta = spec.horizon.delta();
    let sn = spec.sqrt_nu();
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x);
    let mut z = x;
    for (j, &u) in controls.iter().enumerate() {
        z = vect::axpy(z, delta, u);
        z = vect::axpy(z, sn, path.increment(start + j));
        states.push(z);
    }
    states
}

/// Left-endpoint Riemann cost of one control sequence:
/// `sum_j delta (L(u_j) + V(Z_j)) + terminal(Z_m)`.
pub fn run_cost(
    spec: &ProblemSpec,
    path: &BrownianPath,
    start: usize,
    x: Vect,
    controls: &[Vect],
    terminal: &dyn Fn(Vect) -> f64,
) -> f64 {
    let delta = spec.horizon.delta();
    let states = state_trajectory(spec, path, start, x, controls);
    let mut cost = 0.0;
    for (j, &u) in controls.iter().enumerate() {
        cost += delta
            * (spec.lagrangian.eval(u, spec.dim) + spec.potential.value(states[j], spec.dim));
    }
    cost + terminal(states[controls.len()])
}

/// A minimizing control sequence and its cost.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub value: f64,
    pub controls: Vec<Vect>,
}

fn sequence_count(lattice_len: usize, steps: usize) -> u128 {
    let mut n: u128 = 1;
    for _ in 0..steps {
        n = n.saturating_mul(lattice_len as u128);
    }
    n
}

/// Exhaustive minimum of [`run_cost`] over all lattice control sequences of
/// length `steps`, by depth-first search with incrementally maintained state
/// and cost. Fails if the sequence count exceeds `budget`.
pub fn brute_force_value(
    spec: &ProblemSpec,
    path: &BrownianPath,
    start: usize,
    steps: usize,
    x: Vect,
    terminal: &dyn Fn(Vect) -> f64,
    budget: u128,
) -> Result<OracleOutcome> {
    let lattice = control_lattice(spec.dim, spec.control_bound, spec.lattice_k);
    let required = sequence_count(lattice.len(), steps);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let delta = spec.horizon.delta();
    let sn = spec.sqrt_nu();
    let mut best = f64::INFINITY;
    let mut best_controls = vec![ZERO; steps];
    let mut current = vec![ZERO; steps];

    // Recursion over the remaining steps; `partial` accumulates the running
    // cost up to node `start + depth`.
    fn dfs(
        spec: &ProblemSpec,
        path: &BrownianPath,
        lattice: &[Vect],
        start: usize,
        steps: usize,
        depth: usize,
        z: Vect,
        partial: f64,
        delta: f64,
        sn: f64,
        terminal: &dyn Fn(Vect) -> f64,
        current: &mut [Vect],
        best: &mut f64,
        best_controls: &mut [Vect],
    ) {
        if depth == steps {
            let total = partial + terminal(z);
            if total < *best {
                *best = total;
                best_controls.copy_from_slice(current);
            }
            return;
        }
        let stage_pot = delta * spec.potential.value(z, spec.dim);
        for &u in lattice {
            let cost = partial + stage_pot + delta * spec.lagrangian.eval(u, spec.dim);
            let mut next = vect::axpy(z, delta, u);
            next = vect::axpy(next, sn, path.increment(start + depth));
            current[depth] = u;
            dfs(
                spec,
                path,
                lattice,
                start,
                steps,
                depth + 1,
                next,
                cost,
                delta,
                sn,
                terminal,
                current,
                best,
                best_controls,
            );
        }
    }

    dfs(
        spec,
        path,
        &lattice,
        start,
        steps,
        0,
        x,
        0.0,
        delta,
        sn,
        terminal,
        &mut current,
        &mut best,
        &mut best_controls,
    );
    Ok(OracleOutcome {
        value: best,
        controls: best_controls,
    })
}

/// Dynamic programming over the exact reachable lattice.
///
/// In the frozen-path frame the deterministic part of the state moves on the
/// lattice `x + (delta C / K) Z^dim`, so backward induction over that
/// lattice reproduces the enumeration minimum without any interpolation.
pub fn lattice_dp_value(
    spec: &ProblemSpec,
    path: &BrownianPath,
    start: usize,
    steps: usize,
    x: Vect,
    terminal: &dyn Fn(Vect) -> f64,
) -> Result<f64> {
    let k = spec.lattice_k as isize;
    let delta = spec.horizon.delta();
    let sn = spec.sqrt_nu();
    let step = delta * spec.control_bound / spec.lattice_k as f64;
    let reach = steps as isize * k;
    let side = (2 * reach + 1) as usize;
    let states = if spec.dim == 1 { side } else { side * side };
    // Scaled Brownian displacement since `start`, added back when the frame
    // state is mapped to an actual state.
    let mut noise = vec![ZERO; steps + 1];
    for j in 0..steps {
        noise[j + 1] = vect::axpy(noise[j], sn, path.increment(start + j));
    }
    let point = |o: usize, j: usize| -> Vect {
        let (ox, oy) = if spec.dim == 1 {
            (o as isize - reach, 0)
        } else {
            ((o % side) as isize - reach, (o / side) as isize - reach)
        };
        vect::add(
            vect::axpy(x, step, [ox as f64, oy as f64]),
            noise[j],
        )
    };
    let offset_of = |ox: isize, oy: isize| -> usize {
        if spec.dim == 1 {
            (ox + reach) as usize
        } else {
            (ox + reach) as usize + (oy + reach) as usize * side
        }
    };

    let mut value: Vec<f64> = (0..states).map(|o| terminal(point(o, steps))).collect();
    let lattice = control_lattice(spec.dim, spec.control_bound, spec.lattice_k);
    // Control offsets in lattice units, matching the sorted control order.
    let ctrl: Vec<(isize, isize, f64)> = lattice
        .iter()
        .map(|u| {
            let ox = libm::round(u[0] / (spec.control_bound / spec.lattice_k as f64)) as isize;
            let oy = libm::round(u[1] / (spec.control_bound / spec.lattice_k as f64)) as isize;
            (ox, oy, spec.lagrangian.eval(*u, spec.dim))
        })
        .collect();

    for back in 0..steps {
        let j = steps - 1 - back;
        let mut next = vec![f64::INFINITY; states];
        for (o, slot) in next.iter_mut().enumerate() {
            let (ox, oy) = if spec.dim == 1 {
                (o as isize - reach, 0)
            } else {
                ((o % side) as isize - reach, (o / side) as isize - reach)
            };
            // States farther than j lattice-steps from the center are not
            // reachable at step j; skip them.
            if ox.abs() > j as isize * k || oy.abs() > j as isize * k {
                continue;
            }
            let pot = spec.potential.value(point(o, j), spec.dim);
            let mut best = f64::INFINITY;
            for &(cx, cy, run) in &ctrl {
                let cand = delta * (run + pot) + value[offset_of(ox + cx, oy + cy)];
                if cand < best {
                    best = cand;
                }
            }
            *slot = best;
        }
        value = next;
    }
    Ok(value[offset_of(0, 0)])
}

/// Projected gradient descent on the control sequence, starting from
/// `init`. The cost gradient comes from the exact adjoint of the discrete
/// dynamics:
///
/// `dJ/du_j = delta (grad L(u_j) + delta sum_{l > j} grad V(Z_l) + terminal_grad(Z_m))`
///
/// with radial projection onto the control ball after each step and a
/// halving line search. Stops when the cost improves by less than `1e-8`
/// or after 500 iterations.
pub fn descent_refine(
    spec: &ProblemSpec,
    path: &BrownianPath,
    start: usize,
    x: Vect,
    init: &[Vect],
    terminal: &dyn Fn(Vect) -> f64,
    terminal_grad: &dyn Fn(Vect) -> Vect,
) -> OracleOutcome {
    let m = init.len();
    let delta = spec.horizon.delta();
    let mut controls = init.to_vec();
    let mut cost = run_cost(spec, path, start, x, &controls, terminal);
    for _ in 0..500 {
        let states = state_trajectory(spec, path, start, x, &controls);
        // Backward accumulation of delta * sum_{l > j} grad V(Z_l).
        let mut grad = vec![ZERO; m];
        let mut tail = terminal_grad(states[m]);
        for j in (0..m).rev() {
            grad[j] = vect::scale(
                vect::add(spec.lagrangian.grad(controls[j], spec.dim), tail),
                delta,
            );
            tail = vect::axpy(tail, delta, spec.potential.gradient(states[j], spec.dim));
        }
        let mut improved = false;
        // The cost Hessian scales like delta, so useful steps are O(1/delta).
        let mut step = 2.0 / delta;
        for _ in 0..60 {
            let trial: Vec<Vect> = controls
                .iter()
                .zip(&grad)
                .map(|(&u, &g)| {
                    vect::clamp_ball(vect::axpy(u, -step, g), spec.control_bound, spec.dim).0
                })
                .collect();
            let trial_cost = run_cost(spec, path, start, x, &trial, terminal);
            if trial_cost < cost {
                let moved = trial
                    .iter()
                    .zip(&controls)
                    .map(|(&a, &b)| vect::norm(vect::sub(a, b), spec.dim))
                    .fold(0.0f64, flt::max);
                controls = trial;
                cost = trial_cost;
                improved = moved > 1e-8;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    OracleOutcome {
        value: cost,
        controls,
    }
}

/// Interpolating terminal closure over a value field, with its gradient.
fn field_terminal(field: &ScalarField) -> (impl Fn(Vect) -> f64 + '_, impl Fn(Vect) -> Vect + '_) {
    let h = field.grid().h();
    let value = move |z: Vect| field.interpolate(z);
    let grad = move |z: Vect| {
        let dim = field.grid().dim();
        let mut g = ZERO;
        for d in 0..dim {
            let mut zp = z;
            let mut zm = z;
            zp[d] += h;
            zm[d] -= h;
            g[d] = (field.interpolate(zp) - field.interpolate(zm)) / (2.0 * h);
        }
        g
    };
    (value, grad)
}

/// Dynamic-programming residual at `(node k, point x)` over `m` steps:
///
/// `| min_u { sum delta (L + V) + U_{k+m}(Z_m) } - U_k(x) |`
///
/// where the inner minimum is certified independently: lattice enumeration
/// (with the lattice coarsened until the sequence count fits `budget`)
/// followed by descent refinement against the interpolated value field.
pub fn dpp_residual(
    spec: &ProblemSpec,
    path: &BrownianPath,
    process: &ValueProcess,
    k: usize,
    m: usize,
    x: Vect,
    budget: u128,
) -> Result<f64> {
    if k + m >= process.values.len() {
        return Err(Error::Precondition(alloc::format!(
            "window [{k}, {}] leaves the horizon of {} nodes",
            k + m,
            process.values.len()
        )));
    }
    let (term, term_grad) = field_terminal(&process.values[k + m]);
    let mut coarse = spec.clone();
    while coarse.lattice_k > 1 {
        let len = control_lattice(coarse.dim, coarse.control_bound, coarse.lattice_k).len();
        if sequence_count(len, m) <= budget {
            break;
        }
        coarse.lattice_k -= 1;
    }
    let seed = brute_force_value(&coarse, path, k, m, x, &term, budget)?;
    let refined = descent_refine(spec, path, k, x, &seed.controls, &term, &term_grad);
    let here = process.values[k].interpolate(x);
    Ok(libm::fabs(refined.value - here))
}
