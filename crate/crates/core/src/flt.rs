//! Thin wrappers over `libm` so float math is available under `no_std` and
//! bit-identical across platforms.

#![allow(dead_code)]

pub use libm::{cos, exp, fabs as abs, floor, log as ln, pow, sin, sqrt};

#[inline]
pub fn max(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
pub fn min(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}
