//! Finite-difference operators and quadrature on grid fields.
//!
//! Second-order central stencils throughout; the weighted Laplacian is in
//! flux form so that discrete integration by parts (and with it hermiticity
//! of operators assembled from it) holds structurally.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::field::{ComplexField, RealField};
use crate::grid::{BoundarySpec, SpatialGrid};

/// Scalar kinds the stencils operate on.
pub trait FieldScalar:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
    fn conj_mul(self, other: Self) -> Complex64;
}

impl FieldScalar for f64 {
    #[inline]
    fn conj_mul(self, other: Self) -> Complex64 {
        Complex64::new(self * other, 0.0)
    }
}

impl FieldScalar for Complex64 {
    #[inline]
    fn conj_mul(self, other: Self) -> Complex64 {
        self.conj() * other
    }
}

/// Index of the neighbor of node `ij` displaced by `step` (±1) along `axis`,
/// or `None` for a Dirichlet ghost (field value zero there).
#[inline]
fn neighbor(
    grid: &SpatialGrid,
    ij: [usize; 2],
    axis: usize,
    step: isize,
    boundary: BoundarySpec,
) -> Option<usize> {
    let n = grid.axis(axis).points;
    let i = ij[axis] as isize + step;
    let wrapped = if i < 0 || i as usize >= n {
        match boundary {
            BoundarySpec::DirichletZero => return None,
            BoundarySpec::Periodic => (i.rem_euclid(n as isize)) as usize,
        }
    } else {
        i as usize
    };
    let mut idx = ij;
    idx[axis] = wrapped;
    Some(grid.flatten(&idx[..grid.dim()]))
}

fn gradient_axis_generic<T: FieldScalar>(
    grid: &SpatialGrid,
    data: &[T],
    axis: usize,
    boundary: BoundarySpec,
) -> Vec<T> {
    let h = grid.axis(axis).spacing();
    let inv2h = 0.5 / h;
    (0..grid.len())
        .map(|flat| {
            let ij = grid.unravel(flat);
            let plus = neighbor(grid, ij, axis, 1, boundary)
                .map(|j| data[j])
                .unwrap_or_default();
            let minus = neighbor(grid, ij, axis, -1, boundary)
                .map(|j| data[j])
                .unwrap_or_default();
            (plus - minus) * inv2h
        })
        .collect()
}

/// Central-difference gradient along `axis`.
pub fn gradient(f: &RealField, axis: usize, boundary: BoundarySpec) -> RealField {
    let data = gradient_axis_generic(f.grid(), f.values(), axis, boundary);
    RealField::from_values(f.grid(), data).expect("gradient of finite field is finite")
}

/// Central-difference gradient of a complex field along `axis`.
pub fn gradient_complex(f: &ComplexField, axis: usize, boundary: BoundarySpec) -> ComplexField {
    let data = gradient_axis_generic(f.grid(), f.values(), axis, boundary);
    ComplexField::from_values(f.grid(), data).expect("gradient of finite field is finite")
}

fn laplacian_weighted_generic<T: FieldScalar>(
    grid: &SpatialGrid,
    data: &[T],
    w: &[f64],
    boundary: BoundarySpec,
) -> Vec<T> {
    let mut out = vec![T::default(); grid.len()];
    for axis in 0..grid.dim() {
        let h = grid.axis(axis).spacing();
        let inv_h2 = 1.0 / (h * h);
        for flat in 0..grid.len() {
            let ij = grid.unravel(flat);
            let f0 = data[flat];
            let w0 = w[flat];
            // Flux through each face; ghost nodes carry f = 0, w mirrored.
            let (f_plus, w_plus) = match neighbor(grid, ij, axis, 1, boundary) {
                Some(j) => (data[j], w[j]),
                None => (T::default(), w0),
            };
            let (f_minus, w_minus) = match neighbor(grid, ij, axis, -1, boundary) {
                Some(j) => (data[j], w[j]),
                None => (T::default(), w0),
            };
            let flux_plus = (f_plus - f0) * (0.5 * (w_plus + w0));
            let flux_minus = (f0 - f_minus) * (0.5 * (w_minus + w0));
            out[flat] = out[flat] + (flux_plus - flux_minus) * inv_h2;
        }
    }
    out
}

/// Flux-form weighted Laplacian Σ_k ∂_k(w ∂_k f), summed over axes.
///
/// Requires w > 0 everywhere.
pub fn laplacian_weighted(
    f: &RealField,
    w: &RealField,
    boundary: BoundarySpec,
) -> Result<RealField> {
    f.same_grid(w)?;
    check_positive_weight(w.values())?;
    let data = laplacian_weighted_generic(f.grid(), f.values(), w.values(), boundary);
    RealField::from_values(f.grid(), data)
}

/// Complex-field version of [`laplacian_weighted`].
pub fn laplacian_weighted_complex(
    f: &ComplexField,
    w: &RealField,
    boundary: BoundarySpec,
) -> Result<ComplexField> {
    if f.grid() != w.grid() {
        return Err(SimError::GridMismatch(
            "field and weight live on different grids".into(),
        ));
    }
    check_positive_weight(w.values())?;
    let data = laplacian_weighted_generic(f.grid(), f.values(), w.values(), boundary);
    ComplexField::from_values(f.grid(), data)
}

fn check_positive_weight(w: &[f64]) -> Result<()> {
    if w.iter().any(|&v| v <= 0.0) {
        return Err(SimError::Domain(
            "weight field must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// Riemann quadrature ∫ f dq ≈ Σ f_i · h^dim.
///
/// Exact for periodic fields; for Dirichlet runs the integrand is assumed to
/// decay inside the box, where this coincides with the trapezoid rule.
pub fn quadrature(f: &RealField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// ⟨φ|ψ⟩ = ∫ conj(φ)·ψ dq by the same quadrature.
pub fn inner_product(phi: &ComplexField, psi: &ComplexField) -> Result<Complex64> {
    if phi.grid() != psi.grid() {
        return Err(SimError::GridMismatch(
            "inner product of fields on different grids".into(),
        ));
    }
    let sum: Complex64 = phi
        .values()
        .iter()
        .zip(psi.values())
        .map(|(a, b)| a.conj_mul(*b))
        .sum();
    Ok(sum * phi.grid().cell_volume())
}

/// ‖ψ‖ = √⟨ψ|ψ⟩.
pub fn norm(psi: &ComplexField) -> f64 {
    inner_product(psi, psi)
        .expect("same field")
        .re
        .max(0.0)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    fn grid_1d(n: usize) -> SpatialGrid {
        SpatialGrid::new_1d(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = grid_1d(64);
        let f = RealField::constant(&g, 3.5);
        // Periodic so even the boundary sees the constant.
        let df = gradient(&f, 0, BoundarySpec::Periodic);
        assert!(df.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn gradient_exact_on_linear_interior() {
        let g = grid_1d(64);
        let f = RealField::from_fn(&g, |q| q[0]);
        let df = gradient(&f, 0, BoundarySpec::DirichletZero);
        for i in 1..g.len() - 1 {
            assert!(
                (df.values()[i] - 1.0).abs() < 1e-12,
                "interior node {i}: {}",
                df.values()[i]
            );
        }
    }

    #[test]
    fn gradient_second_order_on_sine() {
        // Max interior error against cos(q) should drop ~4x per halving.
        let mut errs = Vec::new();
        for &n in &[201usize, 401, 801] {
            let g = SpatialGrid::new_1d(-1.0, 1.0, n).unwrap();
            let f = RealField::from_fn(&g, |q| q[0].sin());
            let df = gradient(&f, 0, BoundarySpec::DirichletZero);
            let err = (1..n - 1)
                .map(|i| (df.values()[i] - g.axis(0).coord(i).cos()).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        // h = 1e-2 case: second order with a modest constant.
        assert!(errs[1] < 1e-4);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..5.0).contains(&ratio), "convergence ratio {ratio}");
        }
    }

    #[test]
    fn weighted_laplacian_exact_on_quadratic() {
        let g = grid_1d(32);
        let w = RealField::constant(&g, 1.0);
        let f = RealField::from_fn(&g, |q| q[0] * q[0]);
        let lap = laplacian_weighted(&f, &w, BoundarySpec::DirichletZero).unwrap();
        for i in 1..g.len() - 1 {
            assert!((lap.values()[i] - 2.0).abs() < 1e-11);
        }
        let c = RealField::constant(&g, 4.0);
        let lap_c = laplacian_weighted(&c, &w, BoundarySpec::DirichletZero).unwrap();
        for i in 1..g.len() - 1 {
            assert!(lap_c.values()[i].abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_laplacian_converges_to_symbolic_oracle() {
        // w = 1 + q², f = sin q: ∂(w ∂f) = 2q·cos q − (1+q²)·sin q.
        let oracle = |q: f64| 2.0 * q * q.cos() - (1.0 + q * q) * q.sin();
        let mut errs = Vec::new();
        for &n in &[101usize, 201, 401] {
            let g = SpatialGrid::new_1d(-1.0, 1.0, n).unwrap();
            let w = RealField::from_fn(&g, |q| 1.0 + q[0] * q[0]);
            let f = RealField::from_fn(&g, |q| q[0].sin());
            let lap = laplacian_weighted(&f, &w, BoundarySpec::DirichletZero).unwrap();
            let err = (1..n - 1)
                .map(|i| (lap.values()[i] - oracle(g.axis(0).coord(i))).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..5.0).contains(&ratio), "convergence ratio {ratio}");
        }
    }

    #[test]
    fn weighted_laplacian_rejects_nonpositive_weight() {
        let g = grid_1d(16);
        let w = RealField::from_fn(&g, |q| q[0]); // crosses zero
        let f = RealField::constant(&g, 1.0);
        assert!(matches!(
            laplacian_weighted(&f, &w, BoundarySpec::DirichletZero),
            Err(SimError::Domain(_))
        ));
    }

    #[test]
    fn inner_product_positive_and_conjugate_symmetric() {
        let g = grid_1d(32);
        let phi = ComplexField::from_fn(&g, |q| C64::new(q[0], q[0] * q[0]));
        let psi = ComplexField::from_fn(&g, |q| C64::new(q[0].cos(), -q[0]));
        let pp = inner_product(&phi, &phi).unwrap();
        assert!(pp.im.abs() < 1e-14);
        assert!(pp.re >= 0.0);
        let ab = inner_product(&phi, &psi).unwrap();
        let ba = inner_product(&psi, &phi).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-13);
    }

    #[test]
    fn sine_modes_orthogonal_on_dirichlet_grid() {
        let n = 257;
        let g = SpatialGrid::new_1d(0.0, 1.0, n).unwrap();
        let mode = |k: usize| ComplexField::from_fn(&g, |q| C64::new((k as f64 * PI * q[0]).sin(), 0.0));
        let phi = mode(3);
        let psi = mode(5);
        let nrm = norm(&phi) * norm(&psi);
        let ip = inner_product(&phi, &psi).unwrap().norm();
        assert!(ip <= 1e-10 * nrm, "overlap {ip}");
    }

    #[test]
    fn normalized_gaussian_integrates_to_one() {
        // h = 1e-2 over [-8, 8]; quadrature error far below 1e-8.
        let n = 1601;
        let g = SpatialGrid::new_1d(-8.0, 8.0, n).unwrap();
        let sigma: f64 = 1.0;
        let rho = RealField::from_fn(&g, |q| {
            (-q[0] * q[0] / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
        });
        assert!((quadrature(&rho) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g1 = grid_1d(16);
        let g2 = SpatialGrid::new_1d(-2.0, 2.0, 16).unwrap();
        let a = ComplexField::zeros(&g1);
        let b = ComplexField::zeros(&g2);
        assert!(inner_product(&a, &b).is_err());
    }

    #[test]
    fn discrete_integration_by_parts() {
        // Σ f·(∂g)·h = −Σ (∂f)·g·h for fields vanishing at the boundary.
        let n = 301;
        let g = SpatialGrid::new_1d(-1.0, 1.0, n).unwrap();
        let taper = |q: f64| (1.0 - q * q).powi(2);
        let f = RealField::from_fn(&g, |q| taper(q[0]) * (3.0 * q[0]).sin());
        let w = RealField::from_fn(&g, |q| taper(q[0]) * (2.0 * q[0]).cos());
        let df = gradient(&f, 0, BoundarySpec::DirichletZero);
        let dw = gradient(&w, 0, BoundarySpec::DirichletZero);
        let h = g.axis(0).spacing();
        let lhs: f64 = f.values().iter().zip(dw.values()).map(|(a, b)| a * b).sum::<f64>() * h;
        let rhs: f64 = df.values().iter().zip(w.values()).map(|(a, b)| a * b).sum::<f64>() * h;
        assert!((lhs + rhs).abs() < 1e-10);
    }

    #[test]
    fn gradient_2d_acts_per_axis() {
        let g = SpatialGrid::new_2d((-1.0, 1.0, 33), (-1.0, 1.0, 17)).unwrap();
        let f = RealField::from_fn(&g, |q| q[0] + 2.0 * q[1]);
        let dx = gradient(&f, 0, BoundarySpec::DirichletZero);
        let dy = gradient(&f, 1, BoundarySpec::DirichletZero);
        // Interior nodes only.
        for flat in 0..g.len() {
            let ij = g.unravel(flat);
            if ij[0] > 0 && ij[0] < 32 && ij[1] > 0 && ij[1] < 16 {
                assert!((dx.values()[flat] - 1.0).abs() < 1e-12);
                assert!((dy.values()[flat] - 2.0).abs() < 1e-12);
            }
        }
    }
}
