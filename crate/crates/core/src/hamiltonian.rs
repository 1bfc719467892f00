//! Classical Hamiltonian specification: H = ½ g(q)·(p−a)² + V(q).
//!
//! The metric g is either a constant inverse mass per axis or, in 1D, a
//! position-dependent factor g(q) = 2B(q) so that H = B(q)p² is expressible.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::grid::SpatialGrid;

/// Mass metric g(q) of the kinetic term ½ g (p−a)².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// g_k = 1/mass_k, constant along each axis.
    ConstInverseMass { mass: Vec<f64> },
    /// 1D only: H = B(q)p² with B(q) = b0 + b2·q², i.e. g(q) = 2B(q).
    QuadraticMassTerm { b0: f64, b2: f64 },
}

/// Scalar potential contribution along one axis; the total V(q) is the sum
/// over axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential1d {
    Zero,
    /// V = ½ k (q − center)².
    Harmonic { k: f64, center: f64 },
}

impl Potential1d {
    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Potential1d::Zero => 0.0,
            Potential1d::Harmonic { k, center } => 0.5 * k * (q - center) * (q - center),
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match self {
            Potential1d::Zero => 0.0,
            Potential1d::Harmonic { k, center } => k * (q - center),
        }
    }
}

/// Vector potential component along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorPotential1d {
    Zero,
    Constant { a: f64 },
}

impl VectorPotential1d {
    pub fn eval(&self) -> f64 {
        match self {
            VectorPotential1d::Zero => 0.0,
            VectorPotential1d::Constant { a } => *a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub metric: MetricSpec,
    /// One entry per axis; total potential is the sum.
    pub potential: Vec<Potential1d>,
    /// One entry per axis.
    pub vector_potential: Vec<VectorPotential1d>,
}

impl HamiltonianSpec {
    /// Free particle with unit mass per axis.
    pub fn free(dim: usize) -> Self {
        HamiltonianSpec {
            metric: MetricSpec::ConstInverseMass {
                mass: vec![1.0; dim],
            },
            potential: vec![Potential1d::Zero; dim],
            vector_potential: vec![VectorPotential1d::Zero; dim],
        }
    }

    pub fn free_with_mass(masses: &[f64]) -> Self {
        HamiltonianSpec {
            metric: MetricSpec::ConstInverseMass {
                mass: masses.to_vec(),
            },
            potential: vec![Potential1d::Zero; masses.len()],
            vector_potential: vec![VectorPotential1d::Zero; masses.len()],
        }
    }

    /// 1D particle of mass m in V = ½ k q².
    pub fn harmonic_1d(mass: f64, k: f64) -> Self {
        HamiltonianSpec {
            metric: MetricSpec::ConstInverseMass { mass: vec![mass] },
            potential: vec![Potential1d::Harmonic { k, center: 0.0 }],
            vector_potential: vec![VectorPotential1d::Zero],
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        let dim = grid.dim();
        if self.potential.len() != dim || self.vector_potential.len() != dim {
            return Err(SimError::Config(format!(
                "hamiltonian has {} potential axes for a {}D grid",
                self.potential.len(),
                dim
            )));
        }
        match &self.metric {
            MetricSpec::ConstInverseMass { mass } => {
                if mass.len() != dim {
                    return Err(SimError::Config(format!(
                        "mass: expected {} entries, got {}",
                        dim,
                        mass.len()
                    )));
                }
                if mass.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
                    return Err(SimError::Config("mass: must be positive and finite".into()));
                }
            }
            MetricSpec::QuadraticMassTerm { b0, b2 } => {
                if dim != 1 {
                    return Err(SimError::Config(
                        "metric: position-dependent mass term is 1D only".into(),
                    ));
                }
                // g must stay positive on the grid, including edge midpoints
                // half a spacing beyond the extent (Dirichlet ghost edges).
                let ax = grid.axis(0);
                let margin = 0.5 * ax.spacing();
                for q in [ax.min - margin, ax.min, ax.max, ax.max + margin] {
                    if !(b0 + b2 * q * q > 0.0) {
                        return Err(SimError::Domain(format!(
                            "metric: B(q) = {b0} + {b2}·q² not positive at q = {q}"
                        )));
                    }
                }
                // Interior minimum of a quadratic is at q = 0 when b2 > 0.
                if grid.axis(0).contains(0.0) && !(b0 > 0.0) {
                    return Err(SimError::Domain(
                        "metric: B(0) must be positive on a grid containing q = 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Metric g along `axis` at position `q` (1D position-dependent metrics
    /// use the coordinate along their single axis).
    #[inline]
    pub fn metric_at(&self, axis: usize, q: f64) -> f64 {
        match &self.metric {
            MetricSpec::ConstInverseMass { mass } => 1.0 / mass[axis],
            MetricSpec::QuadraticMassTerm { b0, b2 } => 2.0 * (b0 + b2 * q * q),
        }
    }

    /// dg/dq along `axis`.
    #[inline]
    pub fn metric_derivative_at(&self, _axis: usize, q: f64) -> f64 {
        match &self.metric {
            MetricSpec::ConstInverseMass { .. } => 0.0,
            MetricSpec::QuadraticMassTerm { b2, .. } => 4.0 * b2 * q,
        }
    }

    #[inline]
    pub fn potential_at(&self, q: &[f64]) -> f64 {
        self.potential
            .iter()
            .zip(q)
            .map(|(p, &qk)| p.eval(qk))
            .sum()
    }

    #[inline]
    pub fn vector_potential_at(&self, axis: usize) -> f64 {
        self.vector_potential[axis].eval()
    }

    /// H(q, p) = Σ_k ½ g_k (p_k − a_k)² + V(q).
    pub fn classical_hamiltonian(&self, q: &[f64], p: &[f64]) -> f64 {
        let kinetic: f64 = (0..q.len())
            .map(|k| {
                let dp = p[k] - self.vector_potential_at(k);
                0.5 * self.metric_at(k, q[k]) * dp * dp
            })
            .sum();
        kinetic + self.potential_at(q)
    }

    /// L(q, q̇) = Σ_k q̇_k²/(2 g_k) + a_k q̇_k − V(q).
    pub fn lagrangian(&self, q: &[f64], qdot: &[f64]) -> f64 {
        let kinetic: f64 = (0..q.len())
            .map(|k| {
                let g = self.metric_at(k, q[k]);
                qdot[k] * qdot[k] / (2.0 * g) + self.vector_potential_at(k) * qdot[k]
            })
            .sum();
        kinetic - self.potential_at(q)
    }

    /// Velocity ∂H/∂p = g·(p − a).
    pub fn velocity(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        (0..q.len())
            .map(|k| self.metric_at(k, q[k]) * (p[k] - self.vector_potential_at(k)))
            .collect()
    }

    /// Momentum p = q̇/g + a conjugate to the velocity.
    pub fn momentum(&self, q: &[f64], qdot: &[f64]) -> Vec<f64> {
        (0..q.len())
            .map(|k| qdot[k] / self.metric_at(k, q[k]) + self.vector_potential_at(k))
            .collect()
    }

    /// −∂H/∂q for the classical characteristics.
    pub fn force(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        (0..q.len())
            .map(|k| {
                let dp = p[k] - self.vector_potential_at(k);
                -0.5 * self.metric_derivative_at(k, q[k]) * dp * dp
                    - self.potential[k].derivative(q[k])
            })
            .collect()
    }

    /// True when the spec splits into independent per-axis subsystems (it
    /// always does for this parameterization in 2D: diagonal constant metric,
    /// per-axis potentials).
    pub fn is_separable(&self) -> bool {
        self.dim() == 2 && matches!(self.metric, MetricSpec::ConstInverseMass { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_lagrangian() {
        let spec = HamiltonianSpec::free(1);
        // m = 1, qdot = 1: L = 1/2.
        assert!((spec.lagrangian(&[0.0], &[1.0]) - 0.5).abs() < 1e-15);
        assert!((spec.lagrangian(&[0.3], &[0.0])).abs() < 1e-15);
    }

    #[test]
    fn harmonic_lagrangian_is_minus_v_at_rest() {
        let spec = HamiltonianSpec::harmonic_1d(1.0, 1.0);
        assert!((spec.lagrangian(&[1.0], &[0.0]) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn momentum_velocity_round_trip() {
        let spec = HamiltonianSpec {
            metric: MetricSpec::QuadraticMassTerm { b0: 0.5, b2: 0.1 },
            potential: vec![Potential1d::Zero],
            vector_potential: vec![VectorPotential1d::Constant { a: 0.3 }],
        };
        let q = [1.2];
        let qdot = [0.7];
        let p = spec.momentum(&q, &qdot);
        let v = spec.velocity(&q, &p);
        assert!((v[0] - qdot[0]).abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_legendre_consistency() {
        // H(q, p(q̇)) + L(q, q̇) = p·q̇.
        let spec = HamiltonianSpec::harmonic_1d(2.0, 3.0);
        let q = [0.4];
        let qdot = [1.1];
        let p = spec.momentum(&q, &qdot);
        let lhs = spec.classical_hamiltonian(&q, &p) + spec.lagrangian(&q, &qdot);
        assert!((lhs - p[0] * qdot[0]).abs() < 1e-14);
    }

    #[test]
    fn validate_rejects_bad_mass_and_dim() {
        let grid = SpatialGrid::new_1d(-1.0, 1.0, 16).unwrap();
        let mut spec = HamiltonianSpec::free(1);
        spec.metric = MetricSpec::ConstInverseMass { mass: vec![-1.0] };
        let err = spec.validate(&grid).unwrap_err();
        assert!(err.to_string().contains("mass"));

        let spec2 = HamiltonianSpec::free(2);
        assert!(spec2.validate(&grid).is_err());
    }

    #[test]
    fn validate_rejects_vanishing_metric() {
        let grid = SpatialGrid::new_1d(-1.0, 1.0, 16).unwrap();
        let spec = HamiltonianSpec {
            metric: MetricSpec::QuadraticMassTerm { b0: 0.0, b2: 1.0 },
            potential: vec![Potential1d::Zero],
            vector_potential: vec![VectorPotential1d::Zero],
        };
        assert!(spec.validate(&grid).is_err());

        // Positive away from zero is fine on a grid excluding q = 0.
        let grid_pos = SpatialGrid::new_1d(1.0, 3.0, 16).unwrap();
        assert!(spec.validate(&grid_pos).is_ok());
    }
}
