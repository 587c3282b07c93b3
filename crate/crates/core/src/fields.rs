//! Spatial grids, scalar/vector fields, finite differences, multilinear
//! interpolation and exact field shifting.

use crate::vect::{Vect, ZERO};
use crate::{flt, Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// How samples outside the grid bounds are produced.
///
/// `Clamp` snaps the query point to the boundary; `LinearExtrapolate`
/// extends the boundary cell's multilinear interpolant. Value fields default
/// to extrapolation (they grow like the terminal cost at infinity),
/// diagnostics default to clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Clamp,
    LinearExtrapolate,
}

/// Uniform grid over a box in 1 or 2 dimensions. Two-dimensional grids are
/// square: same node count and spacing per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    dim: usize,
    lower: Vect,
    m: usize,
    h: f64,
}

impl SpaceGrid {
    pub fn new_1d(lower: f64, upper: f64, m: usize) -> Result<Self> {
        Self::build(1, [lower, 0.0], [upper, 0.0], m)
    }

    pub fn new_2d(lower: Vect, upper: Vect, m: usize) -> Result<Self> {
        Self::build(2, lower, upper, m)
    }

    fn build(dim: usize, lower: Vect, upper: Vect, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Config(format!("grid needs at least 3 nodes, got {m}")));
        }
        for d in 0..dim {
            if !(lower[d] < upper[d]) {
                return Err(Error::Config(format!(
                    "grid axis {d} requires lower < upper, got [{}, {}]",
                    lower[d], upper[d]
                )));
            }
        }
        let extent = upper[0] - lower[0];
        if dim == 2 && flt::abs((upper[1] - lower[1]) - extent) > 1e-12 * extent {
            return Err(Error::Config(
                "2-D grids are square: both axes must have the same extent".into(),
            ));
        }
        Ok(SpaceGrid {
            dim,
            lower,
            m,
            h: extent / (m - 1) as f64,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn lower(&self) -> Vect {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> Vect {
        let e = self.h * (self.m - 1) as f64;
        let mut u = self.lower;
        for d in 0..self.dim {
            u[d] += e;
        }
        u
    }

    /// Total node count (`m^dim`).
    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.m
        } else {
            self.m * self.m
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of flat node index `i` (x fastest in 2-D).
    #[inline]
    pub fn point(&self, i: usize) -> Vect {
        if self.dim == 1 {
            [self.lower[0] + i as f64 * self.h, 0.0]
        } else {
            let ix = i % self.m;
            let iy = i / self.m;
            [
                self.lower[0] + ix as f64 * self.h,
                self.lower[1] + iy as f64 * self.h,
            ]
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + iy * self.m
    }

    /// Halve the spacing, keeping the same box: `2(m-1)+1` nodes per axis.
    pub fn refined(&self) -> SpaceGrid {
        SpaceGrid {
            dim: self.dim,
            lower: self.lower,
            m: 2 * (self.m - 1) + 1,
            h: self.h / 2.0,
        }
    }

    /// Flat indices of the core region: the central `fraction` of the domain
    /// per axis, on which all solver acceptance checks are evaluated.
    pub fn core_indices(&self, fraction: f64) -> Vec<usize> {
        let margin = (1.0 - fraction) / 2.0 * (self.m - 1) as f64;
        let lo = libm::ceil(margin) as usize;
        let hi = self.m - 1 - lo;
        let mut out = Vec::new();
        if self.dim == 1 {
            for i in lo..=hi {
                out.push(i);
            }
        } else {
            for iy in lo..=hi {
                for ix in lo..=hi {
                    out.push(self.index(ix, iy));
                }
            }
        }
        out
    }

    /// Whether node `i` is interior (not on any face).
    #[inline]
    pub fn is_interior(&self, i: usize) -> bool {
        if self.dim == 1 {
            i > 0 && i < self.m - 1
        } else {
            let ix = i % self.m;
            let iy = i / self.m;
            ix > 0 && ix < self.m - 1 && iy > 0 && iy < self.m - 1
        }
    }
}

/// Scalar values on a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: SpaceGrid,
    values: Vec<f64>,
    boundary: BoundaryMode,
}

impl ScalarField {
    pub fn new(grid: SpaceGrid, values: Vec<f64>, boundary: BoundaryMode) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            boundary,
        })
    }

    pub fn from_fn(grid: SpaceGrid, boundary: BoundaryMode, f: impl Fn(Vect) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ScalarField {
            grid,
            values,
            boundary,
        }
    }

    pub fn constant(grid: SpaceGrid, c: f64, boundary: BoundaryMode) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
            boundary,
        }
    }

    #[inline]
    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.boundary = boundary;
        self
    }

    /// Multilinear interpolation at `x`; exact at nodes and on affine fields.
    #[inline]
    pub fn interpolate(&self, x: Vect) -> f64 {
        let (c0, w0) = axis_locate(&self.grid, x[0], 0, self.boundary);
        if self.grid.dim == 1 {
            (1.0 - w0) * self.values[c0] + w0 * self.values[c0 + 1]
        } else {
            let (c1, w1) = axis_locate(&self.grid, x[1], 1, self.boundary);
            let m = self.grid.m;
            let v00 = self.values[c0 + c1 * m];
            let v10 = self.values[c0 + 1 + c1 * m];
            let v01 = self.values[c0 + (c1 + 1) * m];
            let v11 = self.values[c0 + 1 + (c1 + 1) * m];
            let a = (1.0 - w0) * v00 + w0 * v10;
            let b = (1.0 - w0) * v01 + w0 * v11;
            (1.0 - w1) * a + w1 * b
        }
    }

    /// Whether `x` lies inside the grid box (used for clamp diagnostics).
    pub fn contains(&self, x: Vect) -> bool {
        let up = self.grid.upper();
        for d in 0..self.grid.dim {
            if x[d] < self.grid.lower[d] || x[d] > up[d] {
                return false;
            }
        }
        true
    }

    /// Central second-order differences at interior nodes, one-sided
    /// first-order at boundary nodes.
    pub fn gradient(&self) -> VectorField {
        let g = self.grid;
        let m = g.m;
        let h = g.h;
        let mut out = vec![0.0; g.len() * g.dim];
        if g.dim == 1 {
            for i in 0..m {
                out[i] = if i == 0 {
                    (self.values[1] - self.values[0]) / h
                } else if i == m - 1 {
                    (self.values[m - 1] - self.values[m - 2]) / h
                } else {
                    (self.values[i + 1] - self.values[i - 1]) / (2.0 * h)
                };
            }
        } else {
            for iy in 0..m {
                for ix in 0..m {
                    let i = g.index(ix, iy);
                    let dx = if ix == 0 {
                        (self.values[g.index(1, iy)] - self.values[g.index(0, iy)]) / h
                    } else if ix == m - 1 {
                        (self.values[g.index(m - 1, iy)] - self.values[g.index(m - 2, iy)]) / h
                    } else {
                        (self.values[g.index(ix + 1, iy)] - self.values[g.index(ix - 1, iy)])
                            / (2.0 * h)
                    };
                    let dy = if iy == 0 {
                        (self.values[g.index(ix, 1)] - self.values[g.index(ix, 0)]) / h
                    } else if iy == m - 1 {
                        (self.values[g.index(ix, m - 1)] - self.values[g.index(ix, m - 2)]) / h
                    } else {
                        (self.values[g.index(ix, iy + 1)] - self.values[g.index(ix, iy - 1)])
                            / (2.0 * h)
                    };
                    out[i * 2] = dx;
                    out[i * 2 + 1] = dy;
                }
            }
        }
        VectorField {
            grid: g,
            values: out,
            boundary: self.boundary,
        }
    }

    /// 3-point (1-D) / 5-point (2-D) Laplacian at interior nodes, copied
    /// from the nearest interior node on the boundary.
    pub fn laplacian(&self) -> ScalarField {
        let g = self.grid;
        let m = g.m;
        let h2 = g.h * g.h;
        let mut out = vec![0.0; g.len()];
        if g.dim == 1 {
            for i in 1..m - 1 {
                out[i] = (self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]) / h2;
            }
            out[0] = out[1];
            out[m - 1] = out[m - 2];
        } else {
            for iy in 1..m - 1 {
                for ix in 1..m - 1 {
                    let c = self.values[g.index(ix, iy)];
                    out[g.index(ix, iy)] = (self.values[g.index(ix + 1, iy)]
                        + self.values[g.index(ix - 1, iy)]
                        + self.values[g.index(ix, iy + 1)]
                        + self.values[g.index(ix, iy - 1)]
                        - 4.0 * c)
                        / h2;
                }
            }
            for iy in 0..m {
                for ix in 0..m {
                    if ix == 0 || ix == m - 1 || iy == 0 || iy == m - 1 {
                        let jx = ix.clamp(1, m - 2);
                        let jy = iy.clamp(1, m - 2);
                        out[g.index(ix, iy)] = out[g.index(jx, jy)];
                    }
                }
            }
        }
        ScalarField {
            grid: g,
            values: out,
            boundary: self.boundary,
        }
    }

    /// Output node `x` holds `interpolate(self, x + d)`.
    pub fn shift_sample(&self, d: Vect) -> ScalarField {
        let g = self.grid;
        let values = (0..g.len())
            .map(|i| self.interpolate(crate::vect::add(g.point(i), d)))
            .collect();
        ScalarField {
            grid: g,
            values,
            boundary: self.boundary,
        }
    }
}

/// Locate `x` along `axis`: cell index (clamped to `[0, m-2]`) and the
/// fractional weight. Under `Clamp` the weight is confined to `[0, 1]`;
/// under `LinearExtrapolate` it is left unclamped, which extends the
/// boundary cell's interpolant linearly.
#[inline]
fn axis_locate(grid: &SpaceGrid, x: f64, axis: usize, mode: BoundaryMode) -> (usize, f64) {
    let s = (x - grid.lower[axis]) / grid.h;
    let s = match mode {
        BoundaryMode::Clamp => s.clamp(0.0, (grid.m - 1) as f64),
        BoundaryMode::LinearExtrapolate => s,
    };
    let c = (flt::floor(s) as isize).clamp(0, grid.m as isize - 2) as usize;
    (c, s - c as f64)
}

/// Per-node `dim`-vectors on a [`SpaceGrid`]; components stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: SpaceGrid,
    values: Vec<f64>,
    boundary: BoundaryMode,
}

impl VectorField {
    pub fn from_fn(grid: SpaceGrid, boundary: BoundaryMode, f: impl Fn(Vect) -> Vect) -> Self {
        let dim = grid.dim();
        let mut values = vec![0.0; grid.len() * dim];
        for i in 0..grid.len() {
            let v = f(grid.point(i));
            for d in 0..dim {
                values[i * dim + d] = v[d];
            }
        }
        VectorField {
            grid,
            values,
            boundary,
        }
    }

    #[inline]
    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    #[inline]
    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    #[inline]
    pub fn value(&self, i: usize) -> Vect {
        let dim = self.grid.dim;
        let mut v = ZERO;
        for d in 0..dim {
            v[d] = self.values[i * dim + d];
        }
        v
    }

    #[inline]
    pub fn set_value(&mut self, i: usize, v: Vect) {
        let dim = self.grid.dim;
        for d in 0..dim {
            self.values[i * dim + d] = v[d];
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One scalar component as its own field.
    pub fn component(&self, d: usize) -> ScalarField {
        let dim = self.grid.dim;
        let values = (0..self.grid.len())
            .map(|i| self.values[i * dim + d])
            .collect();
        ScalarField {
            grid: self.grid,
            values,
            boundary: self.boundary,
        }
    }

    pub fn from_components(fields: &[ScalarField]) -> Result<Self> {
        let grid = fields[0].grid;
        if fields.len() != grid.dim() {
            return Err(Error::Config("component count must match dimension".into()));
        }
        let dim = grid.dim();
        let mut values = vec![0.0; grid.len() * dim];
        for (d, f) in fields.iter().enumerate() {
            if f.grid != grid {
                return Err(Error::GridMismatch(
                    "vector field components on different grids".into(),
                ));
            }
            for i in 0..grid.len() {
                values[i * dim + d] = f.values[i];
            }
        }
        Ok(VectorField {
            grid,
            values,
            boundary: fields[0].boundary,
        })
    }

    /// Component-wise multilinear interpolation.
    #[inline]
    pub fn interpolate(&self, x: Vect) -> Vect {
        let g = &self.grid;
        let dim = g.dim;
        let (c0, w0) = axis_locate(g, x[0], 0, self.boundary);
        let mut out = ZERO;
        if dim == 1 {
            out[0] = (1.0 - w0) * self.values[c0] + w0 * self.values[c0 + 1];
        } else {
            let (c1, w1) = axis_locate(g, x[1], 1, self.boundary);
            let m = g.m;
            for d in 0..2 {
                let v00 = self.values[(c0 + c1 * m) * 2 + d];
                let v10 = self.values[(c0 + 1 + c1 * m) * 2 + d];
                let v01 = self.values[(c0 + (c1 + 1) * m) * 2 + d];
                let v11 = self.values[(c0 + 1 + (c1 + 1) * m) * 2 + d];
                let a = (1.0 - w0) * v00 + w0 * v10;
                let b = (1.0 - w0) * v01 + w0 * v11;
                out[d] = (1.0 - w1) * a + w1 * b;
            }
        }
        out
    }

    /// Shift every component: output node `x` holds `self(x + d)`.
    pub fn shift_sample(&self, d: Vect) -> VectorField {
        let g = self.grid;
        let dim = g.dim;
        let mut values = vec![0.0; g.len() * dim];
        for i in 0..g.len() {
            let v = self.interpolate(crate::vect::add(g.point(i), d));
            for c in 0..dim {
                values[i * dim + c] = v[c];
            }
        }
        VectorField {
            grid: g,
            values,
            boundary: self.boundary,
        }
    }

    /// Jacobian by finite differences: `out[i]` is the gradient field of
    /// component `i`, so `jacobian()[i].value(n)[j]` is `d u_i / d x_j`.
    pub fn jacobian(&self) -> Vec<VectorField> {
        (0..self.grid.dim)
            .map(|d| self.component(d).gradient())
            .collect()
    }
}
