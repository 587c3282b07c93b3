//! Fixed-size point/vector helpers for 1- and 2-dimensional state space.
//!
//! All spatial quantities are stored as `[f64; 2]` with the active dimension
//! carried separately; in one dimension the second component stays zero.

use crate::flt;

pub type Vect = [f64; 2];

pub const ZERO: Vect = [0.0, 0.0];

#[inline]
pub fn dot(a: Vect, b: Vect, dim: usize) -> f64 {
    let mut s = a[0] * b[0];
    if dim > 1 {
        s += a[1] * b[1];
    }
    s
}

#[inline]
pub fn norm(a: Vect, dim: usize) -> f64 {
    flt::sqrt(dot(a, a, dim))
}

#[inline]
pub fn add(a: Vect, b: Vect) -> Vect {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vect, b: Vect) -> Vect {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Vect, c: f64) -> Vect {
    [a[0] * c, a[1] * c]
}

/// `a + c*b`.
#[inline]
pub fn axpy(a: Vect, c: f64, b: Vect) -> Vect {
    [a[0] + c * b[0], a[1] + c * b[1]]
}

/// Radial clamp onto the closed ball of radius `r`. Returns the clamped
/// vector and whether clamping occurred.
#[inline]
pub fn clamp_ball(a: Vect, r: f64, dim: usize) -> (Vect, bool) {
    let n = norm(a, dim);
    if n > r {
        (scale(a, r / n), true)
    } else {
        (a, false)
    }
}

/// 2x2 matrix as rows; `mat[i][j]` multiplies component `j` of a vector.
pub type Mat = [[f64; 2]; 2];

#[inline]
pub fn mat_vec(m: Mat, v: Vect, dim: usize) -> Vect {
    let mut out = ZERO;
    for (i, item) in out.iter_mut().enumerate().take(dim) {
        *item = dot(m[i], v, dim);
    }
    out
}

/// Multiply by the transpose: `out_j = sum_i m[i][j] v_i`.
#[inline]
pub fn mat_t_vec(m: Mat, v: Vect, dim: usize) -> Vect {
    let mut out = ZERO;
    for j in 0..dim {
        for (i, item) in v.iter().enumerate().take(dim) {
            out[j] += m[i][j] * item;
        }
    }
    out
}
