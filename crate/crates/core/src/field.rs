//! Scalar fields sampled on a grid.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::grid::SpatialGrid;

macro_rules! impl_field {
    ($name:ident, $scalar:ty, $is_finite:expr) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: SpatialGrid,
            data: Vec<$scalar>,
        }

        impl $name {
            pub fn zeros(grid: &SpatialGrid) -> Self {
                Self {
                    grid: grid.clone(),
                    data: vec![<$scalar>::default(); grid.len()],
                }
            }

            /// Build from raw values; checks length and finiteness.
            pub fn from_values(grid: &SpatialGrid, data: Vec<$scalar>) -> Result<Self> {
                if data.len() != grid.len() {
                    return Err(SimError::Config(format!(
                        "field has {} values for a {}-node grid",
                        data.len(),
                        grid.len()
                    )));
                }
                let finite: fn(&$scalar) -> bool = $is_finite;
                if !data.iter().all(finite) {
                    return Err(SimError::Domain("field contains non-finite values".into()));
                }
                Ok(Self {
                    grid: grid.clone(),
                    data,
                })
            }

            /// Sample a function of position at every node.
            pub fn from_fn(grid: &SpatialGrid, f: impl Fn(&[f64]) -> $scalar) -> Self {
                let data = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
                Self {
                    grid: grid.clone(),
                    data,
                }
            }

            #[inline]
            pub fn grid(&self) -> &SpatialGrid {
                &self.grid
            }

            #[inline]
            pub fn values(&self) -> &[$scalar] {
                &self.data
            }

            #[inline]
            pub fn values_mut(&mut self) -> &mut [$scalar] {
                &mut self.data
            }

            #[inline]
            pub fn len(&self) -> usize {
                self.data.len()
            }

            #[inline]
            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn same_grid(&self, other: &$name) -> Result<()> {
                if self.grid != other.grid {
                    return Err(SimError::GridMismatch(
                        "fields live on different grids".into(),
                    ));
                }
                Ok(())
            }

            pub fn map(&self, f: impl Fn($scalar) -> $scalar) -> Self {
                Self {
                    grid: self.grid.clone(),
                    data: self.data.iter().map(|&v| f(v)).collect(),
                }
            }
        }
    };
}

impl_field!(RealField, f64, |v: &f64| v.is_finite());
impl_field!(ComplexField, Complex64, |v: &Complex64| v.re.is_finite()
    && v.im.is_finite());

impl RealField {
    pub fn constant(grid: &SpatialGrid, value: f64) -> Self {
        RealField {
            grid: grid.clone(),
            data: vec![value; grid.len()],
        }
    }

    /// Pointwise product; both fields must share a grid.
    pub fn mul_pointwise(&self, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "pointwise product needs one grid");
        RealField {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

impl ComplexField {
    /// |field|² as a real field.
    pub fn norm_squared(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}
