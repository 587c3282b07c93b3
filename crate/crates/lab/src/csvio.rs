//! CSV artifact writers. All floats use the shortest round-trip decimal
//! form, so re-runs from the same config are byte-identical.

use crate::{Failure, Result};
use pathlab_core::analysis::ConvergenceReport;
use pathlab_core::fields::ScalarField;
use pathlab_core::invariants::QuantityTrace;
use pathlab_core::randomness::BrownianPath;
use pathlab_core::time::TimeGrid;
use pathlab_core::vect::Vect;
use std::fmt::Write as _;
use std::path::Path;

/// Brownian path dump: `k,t,w_1[,w_2]`, one row per node.
pub fn path_csv(path: &BrownianPath) -> String {
    let mut out = String::new();
    if path.dim() == 1 {
        out.push_str("k,t,w_1\n");
    } else {
        out.push_str("k,t,w_1,w_2\n");
    }
    for k in 0..path.grid().nodes() {
        let t = path.grid().node(k);
        let w = path.value(k);
        if path.dim() == 1 {
            let _ = writeln!(out, "{k},{t},{}", w[0]);
        } else {
            let _ = writeln!(out, "{k},{t},{},{}", w[0], w[1]);
        }
    }
    out
}

/// Field dump: one metadata comment line with the grid, then
/// `x[,y],value` rows in node order.
pub fn field_csv(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = format!(
        "# dim={} m={} lower={} upper={} h={}\n",
        g.dim(),
        g.m(),
        g.lower()[0],
        g.upper()[0],
        g.h()
    );
    if g.dim() == 1 {
        out.push_str("x,value\n");
    } else {
        out.push_str("x,y,value\n");
    }
    for i in 0..g.len() {
        let p = g.point(i);
        let v = field.values()[i];
        if g.dim() == 1 {
            let _ = writeln!(out, "{},{v}", p[0]);
        } else {
            let _ = writeln!(out, "{},{},{v}", p[0], p[1]);
        }
    }
    out
}

/// Controlled trajectory dump: `k,t,z_1[,z_2],ustar_1[,ustar_2]`.
pub fn trajectory_csv(
    horizon: &TimeGrid,
    trajectory: &[Vect],
    drift: &[Vect],
    dim: usize,
) -> String {
    let mut out = String::new();
    if dim == 1 {
        out.push_str("k,t,z_1,ustar_1\n");
    } else {
        out.push_str("k,t,z_1,z_2,ustar_1,ustar_2\n");
    }
    for (k, (z, u)) in trajectory.iter().zip(drift).enumerate() {
        let t = horizon.node(k);
        if dim == 1 {
            let _ = writeln!(out, "{k},{t},{},{}", z[0], u[0]);
        } else {
            let _ = writeln!(out, "{k},{t},{},{},{},{}", z[0], z[1], u[0], u[1]);
        }
    }
    out
}

/// Conserved-quantity trace dump: `k,t,Q,noise_integral,residual`.
pub fn quantity_csv(horizon: &TimeGrid, trace: &QuantityTrace) -> String {
    let mut out = String::from("k,t,Q,noise_integral,residual\n");
    for k in 0..trace.q.len() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{}",
            horizon.node(k),
            trace.q[k],
            trace.noise[k],
            trace.residual[k]
        );
    }
    out
}

/// Convergence table dump: `level,delta,h,error`.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("level,delta,h,error\n");
    for (level, e) in report.errors.iter().enumerate() {
        let _ = writeln!(out, "{level},{},{},{e}", report.deltas[level], report.hs[level]);
    }
    out
}

/// Write one artifact into the output directory.
pub fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let target = dir.join(name);
    std::fs::write(&target, content)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", target.display())))
}
