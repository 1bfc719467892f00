//! Uniform grids over configuration space (1D or 2D).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// One axis of a uniform grid: `points` nodes at `min + i·h`, inclusive of
/// both ends, with `h = (max − min)/(points − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(SimError::Config("axis extent must be finite".into()));
        }
        if max <= min {
            return Err(SimError::Config(format!(
                "axis extent [{min}, {max}] must have max > min"
            )));
        }
        if points < 8 {
            return Err(SimError::Config(format!(
                "axis needs at least 8 points, got {points}"
            )));
        }
        Ok(Axis { min, max, points })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    #[inline]
    pub fn contains(&self, q: f64) -> bool {
        q >= self.min && q <= self.max
    }

    /// Period seen by periodic boundary conditions: node `points` aliases
    /// node 0, so the period is `points · h`, one spacing beyond `max`.
    #[inline]
    pub fn period(&self) -> f64 {
        self.points as f64 * self.spacing()
    }
}

/// How differential operators treat the grid edges.
///
/// `DirichletZero` reads the field as zero beyond both ends (states are
/// assumed to decay inside the box). `Periodic` wraps: the neighbor of the
/// last node is the first, with period `points · h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    DirichletZero,
    Periodic,
}

/// Uniform tensor-product grid in 1 or 2 dimensions.
///
/// Flat storage is row-major with axis 0 fastest: `flat = i1·n0 + i0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(SimError::Config(format!(
                "grid must be 1D or 2D, got {} axes",
                axes.len()
            )));
        }
        Ok(SpatialGrid { axes })
    }

    pub fn new_1d(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(min, max, points)?])
    }

    pub fn new_2d(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        Self::new(vec![Axis::new(x.0, x.1, x.2)?, Axis::new(y.0, y.1, y.2)?])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element h0·h1·…
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    /// Decompose a flat index into per-axis indices (axis 0 fastest).
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        let n0 = self.axes[0].points;
        [flat % n0, flat / n0]
    }

    #[inline]
    pub fn flatten(&self, idx: &[usize]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[1] * self.axes[0].points + idx[0],
        }
    }

    /// Coordinates of a node given its flat index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let ij = self.unravel(flat);
        (0..self.dim()).map(|k| self.axes[k].coord(ij[k])).collect()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim() && q.iter().zip(&self.axes).all(|(&qi, a)| a.contains(qi))
    }

    /// Iterate node positions in flat order.
    pub fn positions(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.position(i))
    }
}
