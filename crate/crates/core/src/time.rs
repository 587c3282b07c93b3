use crate::{Error, Result};
use alloc::format;

/// Uniform grid on `[t0, t_end]` with `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    steps: usize,
    delta: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t0 < t_end) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::Config(format!(
                "time grid requires t0 < T, got [{t0}, {t_end}]"
            )));
        }
        if steps == 0 {
            return Err(Error::Config("time grid requires at least one step".into()));
        }
        Ok(TimeGrid {
            t0,
            t_end,
            steps,
            delta: (t_end - t0) / steps as f64,
        })
    }

    #[inline]
    pub fn t0(&self) -> f64 {
        self.t0
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of intervals; there are `steps() + 1` nodes.
    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.delta
    }

    /// Grid with the same span and doubled step count.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            t_end: self.t_end,
            steps: self.steps * 2,
            delta: self.delta / 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.delta(), 0.25);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(4), 1.0);
        assert!((g.node(3) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn refinement_halves_delta() {
        let g = TimeGrid::new(0.0, 2.0, 10).unwrap();
        let r = g.refined();
        assert_eq!(r.steps(), 20);
        assert_eq!(r.delta(), g.delta() / 2.0);
        assert_eq!(r.node(20), 2.0);
    }
}
