//! Uniform 1-D grids and node-valued fields.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid endpoints must satisfy x_lo < x_hi, got [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("field carries {values} values for a grid of {nodes} nodes")]
    LengthMismatch { values: usize, nodes: usize },
    #[error("field value at node {0} is not finite")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Uniform grid of `n` nodes on [x_lo, x_hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self, GridError> {
        if !x_lo.is_finite() || !x_hi.is_finite() || x_lo >= x_hi {
            return Err(GridError::EmptyInterval(x_lo, x_hi));
        }
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

/// One real value per grid node; values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n {
            return Err(GridError::LengthMismatch {
                values: values.len(),
                nodes: grid.n,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: Grid1D, v: f64) -> Result<Self, GridError> {
        Self::new(grid, vec![v; grid.n])
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Largest absolute nodewise gap to `other`.
    pub fn sup_distance(&self, other: &Field) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Linear interpolation inside the grid; clamped to end values outside.
    pub fn interp(&self, x: f64) -> f64 {
        if x <= self.grid.x_lo {
            return self.values[0];
        }
        if x >= self.grid.x_hi {
            return self.values[self.grid.n - 1];
        }
        let t = (x - self.grid.x_lo) / self.grid.h();
        let i = (t.floor() as usize).min(self.grid.n - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoidal integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        let h = self.grid.h();
        let inner: f64 = self.values[1..self.values.len() - 1].iter().sum();
        h * (0.5 * self.values[0] + inner + 0.5 * self.values[self.values.len() - 1])
    }

    /// Writes the `x,value` table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(
                w,
                "{},{}",
                crate::report::fmt_float(x),
                crate::report::fmt_float(*v)
            )?;
        }
        Ok(())
    }
}
