//! Uniform radial meshes and sampled radial functions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform mesh `r_i = i * dr`, `i = 0..=cells`, on `[0, radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "grid radius must be positive, got {radius}"
            )));
        }
        if cells == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        Ok(Self { radius, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        self.radius / self.cells as f64
    }

    /// Node coordinate; the last node is pinned to `radius` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.radius
        } else {
            i as f64 * self.dr()
        }
    }

    /// Cell-face coordinate `r_{i+1/2}`.
    pub fn face(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(move |i| self.node(i))
    }

    /// Dual-cell measure `int r^{n-1} dr` over `[r_{i-1/2}, r_{i+1/2}]`,
    /// clipped to `[0, radius]` at both ends.
    pub fn dual_volume(&self, i: usize, n: usize) -> f64 {
        let lo = if i == 0 { 0.0 } else { self.face(i - 1) };
        let hi = if i == self.cells {
            self.radius
        } else {
            self.face(i)
        };
        (hi.powi(n as i32) - lo.powi(n as i32)) / n as f64
    }

    /// Same radius with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.radius, self.cells * factor)
    }
}

/// Sampled values `u(r_i)` on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "profile has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("profile value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mutable access for in-crate time stepping; callers keep values finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `max_i |self_i - other_i|`; both profiles must share a grid.
    pub fn max_abs_diff(&self, other: &RadialProfile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("profiles live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Piecewise-linear interpolation; `r` is clamped to `[0, radius]`.
    pub fn interpolate(&self, r: f64) -> f64 {
        let h = self.grid.dr();
        let x = (r / h).clamp(0.0, self.grid.cells() as f64);
        let i = (x.floor() as usize).min(self.grid.cells() - 1);
        let w = x - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }
}
