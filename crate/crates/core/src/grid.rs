//! Uniform, symmetric grids for the natural frequency and its dual variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[-half_width, half_width]` for the natural frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub half_width: f64,
    pub n_points: usize,
}

/// Uniform grid on `[-half_width, half_width]` for the dual variable of the frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub half_width: f64,
    pub n_points: usize,
}

const MIN_OMEGA_POINTS: usize = 16;

fn uniform_point(half_width: f64, n_points: usize, j: usize) -> f64 {
    // Symmetric by construction: point(j) == -point(n - 1 - j).
    let h = 2.0 * half_width / (n_points - 1) as f64;
    let c = (n_points - 1) as f64 / 2.0;
    (j as f64 - c) * h
}

impl OmegaGrid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        let grid = Self { half_width, n_points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::Config(format!(
                "omega grid half_width must be positive, got {}",
                self.half_width
            )));
        }
        if self.n_points < MIN_OMEGA_POINTS {
            return Err(Error::Config(format!(
                "omega grid needs at least {MIN_OMEGA_POINTS} points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        uniform_point(self.half_width, self.n_points, j)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Trapezoidal weights: `dω` in the interior, `dω/2` at both ends.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }

    /// Same width, twice the resolution (every old point is kept).
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            n_points: 2 * self.n_points - 1,
        }
    }
}

impl EtaGrid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        let grid = Self { half_width, n_points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::Config(format!(
                "eta grid half_width must be positive, got {}",
                self.half_width
            )));
        }
        if self.n_points < 3 {
            return Err(Error::Config(format!(
                "eta grid needs at least 3 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        uniform_point(self.half_width, self.n_points, j)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Aliasing guard: a field supported in `[-W, W]` is resolved in the
    /// dual variable only when `dη·W ≤ π`.
    pub fn check_resolves(&self, omega: &OmegaGrid) -> Result<()> {
        let product = self.spacing() * omega.half_width;
        if product > std::f64::consts::PI * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "eta grid too coarse: dη·W = {product:.6} exceeds π"
            )));
        }
        Ok(())
    }

    /// Shifted evaluations `η ± t` must stay on the grid up to `t_max`.
    pub fn check_covers(&self, t_max: f64) -> Result<()> {
        if self.half_width < t_max {
            return Err(Error::Config(format!(
                "eta grid half_width {} must be at least t_max = {t_max}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Twice the resolution at the same width.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            n_points: 2 * self.n_points - 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_grid_is_symmetric() {
        let g = OmegaGrid::new(8.0, 257).unwrap();
        assert_eq!(g.spacing(), 1.0 / 16.0);
        for j in 0..g.n_points {
            assert_eq!(g.point(j), -g.point(g.n_points - 1 - j));
        }
        assert_eq!(g.point(128), 0.0);
        assert_eq!(g.point(0), -8.0);
    }

    #[test]
    fn omega_grid_rejects_bad_sizes() {
        assert!(OmegaGrid::new(8.0, 15).is_err());
        assert!(OmegaGrid::new(0.0, 64).is_err());
        assert!(OmegaGrid::new(-1.0, 64).is_err());
    }

    #[test]
    fn weights_integrate_constants() {
        let g = OmegaGrid::new(3.0, 31).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 6.0).abs() < 1e-14);
    }

    #[test]
    fn aliasing_guard() {
        let omega = OmegaGrid::new(8.0, 257).unwrap();
        let fine = EtaGrid::new(30.0, 241).unwrap();
        assert!(fine.check_resolves(&omega).is_ok());
        let coarse = EtaGrid::new(30.0, 61).unwrap();
        assert!(coarse.check_resolves(&omega).is_err());
        assert!(fine.check_covers(20.0).is_ok());
        assert!(fine.check_covers(40.0).is_err());
    }
}
