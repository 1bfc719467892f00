//! Hydrodynamic decomposition of the wave function and the three velocity
//! fields built from it: Bohmian (±-branch average), the osmotic term, and
//! the branch velocities v± themselves.
//!
//! The phase gradient is read off pointwise as λ·Im(∂ψ/ψ), which never
//! needs the unwrapped phase. Nodes (ρ below a threshold) are masked;
//! samplers substitute the nearest unmasked node there.

use crate::error::{Result, SimError};
use crate::field::RealField;
use crate::grid::{BoundarySpec, SpatialGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::ops::{gradient, gradient_complex, quadrature};
use crate::solver::WaveFunction;

/// Default node threshold, relative to max ρ.
pub const DEFAULT_RHO_EPS_REL: f64 = 1e-12;

/// Density, phase gradient, and node bookkeeping extracted from Ψ.
#[derive(Debug, Clone)]
pub struct HydroFields {
    /// ρ = |ψ|², normalized by construction of the wave function.
    pub rho: RealField,
    /// ∂S per axis = λ·Im(∂ψ/ψ); zeroed on masked nodes.
    pub s_grad: Vec<RealField>,
    /// ∂ρ/ρ per axis; zeroed on masked nodes.
    pub log_rho_grad: Vec<RealField>,
    /// true where ρ < rho_eps.
    pub node_mask: Vec<bool>,
    /// Absolute threshold that produced the mask.
    pub rho_eps: f64,
    pub lambda_mag: f64,
    pub boundary: BoundarySpec,
    /// Flat index of the nearest unmasked node, for each node (identity off
    /// the mask). Present only when something is masked.
    nearest_live: Option<Vec<u32>>,
}

/// Split ψ into (ρ, ∂S) with node masking at ρ < rho_eps_rel · max ρ.
pub fn decompose(
    psi: &WaveFunction,
    boundary: BoundarySpec,
    rho_eps_rel: f64,
) -> Result<HydroFields> {
    let grid = psi.grid().clone();
    let rho = psi.density();
    let rho_max = rho.values().iter().cloned().fold(0.0f64, f64::max);
    if !(rho_max > 0.0) {
        return Err(SimError::DegenerateState(
            "wave function vanishes everywhere".into(),
        ));
    }
    let rho_eps = rho_eps_rel * rho_max;
    let node_mask: Vec<bool> = rho.values().iter().map(|&r| r < rho_eps).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(SimError::DegenerateState(
            "every node fell below the density threshold".into(),
        ));
    }

    let lambda = psi.lambda_mag;
    let mut s_grad = Vec::with_capacity(grid.dim());
    let mut log_rho_grad = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let dpsi = gradient_complex(&psi.psi, axis, boundary);
        let drho = gradient(&rho, axis, boundary);
        let mut sg = RealField::zeros(&grid);
        let mut lg = RealField::zeros(&grid);
        for flat in 0..grid.len() {
            if node_mask[flat] {
                continue;
            }
            let p = psi.psi.values()[flat];
            sg.values_mut()[flat] = lambda * (dpsi.values()[flat] / p).im;
            lg.values_mut()[flat] = drho.values()[flat] / rho.values()[flat];
        }
        s_grad.push(sg);
        log_rho_grad.push(lg);
    }

    let nearest_live = if node_mask.iter().any(|&m| m) {
        Some(nearest_unmasked(&grid, &node_mask))
    } else {
        None
    };

    Ok(HydroFields {
        rho,
        s_grad,
        log_rho_grad,
        node_mask,
        rho_eps,
        lambda_mag: lambda,
        boundary,
        nearest_live,
    })
}

/// Multi-source BFS over the grid adjacency from all unmasked nodes.
fn nearest_unmasked(grid: &SpatialGrid, mask: &[bool]) -> Vec<u32> {
    let n = grid.len();
    let mut nearest: Vec<u32> = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for flat in 0..n {
        if !mask[flat] {
            nearest[flat] = flat as u32;
            queue.push_back(flat);
        }
    }
    let n0 = grid.axis(0).points;
    while let Some(flat) = queue.pop_front() {
        let ij = grid.unravel(flat);
        let mut push = |nb: usize, source: u32| {
            if nearest[nb] == u32::MAX {
                nearest[nb] = source;
                queue.push_back(nb);
            }
        };
        let src = nearest[flat];
        if ij[0] > 0 {
            push(flat - 1, src);
        }
        if ij[0] + 1 < n0 {
            push(flat + 1, src);
        }
        if grid.dim() == 2 {
            if ij[1] > 0 {
                push(flat - n0, src);
            }
            if ij[1] + 1 < grid.axis(1).points {
                push(flat + n0, src);
            }
        }
    }
    nearest
}

impl HydroFields {
    pub fn grid(&self) -> &SpatialGrid {
        self.rho.grid()
    }

    /// Total probability mass on the grid.
    pub fn total_mass(&self) -> f64 {
        quadrature(&self.rho)
    }

    /// Value of `field` at node `flat`, rerouted to the nearest unmasked
    /// node when `flat` is masked.
    #[inline]
    fn live_value(&self, field: &RealField, flat: usize) -> f64 {
        if self.node_mask[flat] {
            match &self.nearest_live {
                Some(map) => field.values()[map[flat] as usize],
                None => field.values()[flat],
            }
        } else {
            field.values()[flat]
        }
    }

    /// Does the interpolation cell containing `q` touch any masked node?
    pub fn cell_touches_mask(&self, q: &[f64]) -> bool {
        if self.nearest_live.is_none() {
            return false;
        }
        let grid = self.grid();
        let mut cell = [0usize; 2];
        for axis in 0..grid.dim() {
            let ax = grid.axis(axis);
            let t = ((q[axis] - ax.min) / ax.spacing()).clamp(0.0, (ax.points - 1) as f64);
            cell[axis] = (t.floor() as usize).min(ax.points - 2);
        }
        match grid.dim() {
            1 => self.node_mask[cell[0]] || self.node_mask[cell[0] + 1],
            _ => {
                let n0 = grid.axis(0).points;
                let base = cell[1] * n0 + cell[0];
                self.node_mask[base]
                    || self.node_mask[base + 1]
                    || self.node_mask[base + n0]
                    || self.node_mask[base + n0 + 1]
            }
        }
    }

    /// Multilinear interpolation of `field` at `q`, with masked nodes
    /// replaced by their nearest unmasked neighbor. `q` is clamped to the
    /// grid extent.
    pub fn interpolate(&self, field: &RealField, q: &[f64]) -> f64 {
        let grid = self.grid();
        debug_assert_eq!(field.grid(), grid);
        let mut cell = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for axis in 0..grid.dim() {
            let ax = grid.axis(axis);
            let h = ax.spacing();
            let t = ((q[axis] - ax.min) / h).clamp(0.0, (ax.points - 1) as f64);
            let i = (t.floor() as usize).min(ax.points - 2);
            cell[axis] = i;
            frac[axis] = t - i as f64;
        }
        match grid.dim() {
            1 => {
                let i = cell[0];
                let a = self.live_value(field, i);
                let b = self.live_value(field, i + 1);
                a + frac[0] * (b - a)
            }
            _ => {
                let n0 = grid.axis(0).points;
                let base = cell[1] * n0 + cell[0];
                let v00 = self.live_value(field, base);
                let v10 = self.live_value(field, base + 1);
                let v01 = self.live_value(field, base + n0);
                let v11 = self.live_value(field, base + n0 + 1);
                let (tx, ty) = (frac[0], frac[1]);
                v00 * (1.0 - tx) * (1.0 - ty)
                    + v10 * tx * (1.0 - ty)
                    + v01 * (1.0 - tx) * ty
                    + v11 * tx * ty
            }
        }
    }
}

/// Bohmian (effective) velocity ṽ = g·(∂S − a) per axis.
pub fn bohmian_velocity(h: &HydroFields, spec: &HamiltonianSpec) -> Result<Vec<RealField>> {
    velocity_with_osmotic(h, spec, 0, h.lambda_mag)
}

/// Osmotic momentum term (λ_signed/2)·∂ρ/ρ per axis (before the metric).
pub fn osmotic_term(h: &HydroFields, lambda_signed: f64) -> Vec<RealField> {
    h.log_rho_grad
        .iter()
        .map(|lg| lg.map(|v| 0.5 * lambda_signed * v))
        .collect()
}

/// Branch velocity v± = g·(∂S ± (λ/2)∂ρ/ρ − a) per axis.
pub fn actual_velocity(
    h: &HydroFields,
    spec: &HamiltonianSpec,
    sign: i8,
    lambda_mag: f64,
) -> Result<Vec<RealField>> {
    if sign != 1 && sign != -1 {
        return Err(SimError::Config("sign: must be ±1".into()));
    }
    velocity_with_osmotic(h, spec, sign, lambda_mag)
}

fn velocity_with_osmotic(
    h: &HydroFields,
    spec: &HamiltonianSpec,
    sign: i8,
    lambda_mag: f64,
) -> Result<Vec<RealField>> {
    let grid = h.grid();
    if spec.dim() != grid.dim() {
        return Err(SimError::Config(
            "hamiltonian dimension does not match the fields".into(),
        ));
    }
    let half_lam = 0.5 * f64::from(sign) * lambda_mag;
    let mut out = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let a = spec.vector_potential_at(axis);
        let mut v = RealField::zeros(grid);
        for flat in 0..grid.len() {
            let qk = grid.axis(axis).coord(grid.unravel(flat)[axis]);
            let p = h.s_grad[axis].values()[flat] + half_lam * h.log_rho_grad[axis].values()[flat];
            v.values_mut()[flat] = spec.metric_at(axis, qk) * (p - a);
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::C64;
    use std::f64::consts::PI;

    fn plane_wave(n: usize, lambda: f64, mode: f64) -> (SpatialGrid, WaveFunction, f64) {
        // Periodic grid with period exactly 1.
        let grid = SpatialGrid::new_1d(0.0, 1.0 - 1.0 / n as f64, n).unwrap();
        let p0 = 2.0 * PI * mode * lambda;
        let wf = WaveFunction::from_fn(&grid, lambda, |q| C64::from_polar(1.0, p0 * q[0] / lambda))
            .unwrap();
        (grid, wf, p0)
    }

    #[test]
    fn plane_wave_has_uniform_density_and_exact_phase_gradient() {
        let (_grid, wf, p0) = plane_wave(128, 0.31, 2.0);
        let h = decompose(&wf, BoundarySpec::Periodic, DEFAULT_RHO_EPS_REL).unwrap();
        let rho0 = h.rho.values()[0];
        for (&r, &sg) in h.rho.values().iter().zip(h.s_grad[0].values()) {
            assert!((r - rho0).abs() < 1e-12);
            assert!((sg - p0).abs() < 1e-8, "s_grad {sg} vs {p0}");
        }
        assert!(h.node_mask.iter().all(|&m| !m));
        assert!((h.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn real_gaussian_has_zero_phase_gradient() {
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 257).unwrap();
        let wf = WaveFunction::gaussian(&grid, 1.0, &[0.3], &[0.9], &[0.0]).unwrap();
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        for (flat, &sg) in h.s_grad[0].values().iter().enumerate() {
            if !h.node_mask[flat] {
                assert!(sg.abs() < 1e-10, "node {flat}: {sg}");
            }
        }
    }

    #[test]
    fn first_excited_state_masks_its_node() {
        // Odd point count puts a grid node exactly at the wave-function node q = 0.
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 257).unwrap();
        let wf = WaveFunction::oscillator_eigenstate(&grid, 1.0, 1.0, 1.0, 0.0, 1).unwrap();
        let h = decompose(&wf, BoundarySpec::DirichletZero, 1e-12).unwrap();
        let center = grid.len() / 2;
        assert!(h.node_mask[center], "central node not masked");
        for flat in 0..grid.len() {
            if !h.node_mask[flat] {
                assert!(h.s_grad[0].values()[flat].is_finite());
                assert!(h.log_rho_grad[0].values()[flat].is_finite());
            }
        }
        // The sampler reroutes the masked node to a live neighbor.
        let v = h.interpolate(&h.log_rho_grad[0], &[0.0]);
        assert!(v.is_finite());
    }

    #[test]
    fn all_node_field_is_degenerate() {
        let grid = SpatialGrid::new_1d(-1.0, 1.0, 16).unwrap();
        // Normalized state but threshold far above everything.
        let wf = WaveFunction::gaussian(&grid, 1.0, &[0.0], &[0.5], &[0.0]).unwrap();
        assert!(matches!(
            decompose(&wf, BoundarySpec::DirichletZero, 10.0),
            Err(SimError::DegenerateState(_))
        ));
    }

    #[test]
    fn bohmian_velocity_of_plane_wave_is_uniform() {
        let (_grid, wf, p0) = plane_wave(128, 0.5, 3.0);
        let mass = 2.0;
        let spec = HamiltonianSpec::free_with_mass(&[mass]);
        let h = decompose(&wf, BoundarySpec::Periodic, DEFAULT_RHO_EPS_REL).unwrap();
        let v = bohmian_velocity(&h, &spec).unwrap();
        for &vi in v[0].values() {
            assert!((vi - p0 / mass).abs() < 1e-8);
        }
    }

    #[test]
    fn real_eigenstate_has_zero_bohmian_velocity() {
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 256).unwrap();
        let wf = WaveFunction::oscillator_eigenstate(&grid, 1.0, 1.0, 1.0, 0.0, 0).unwrap();
        let spec = HamiltonianSpec::harmonic_1d(1.0, 1.0);
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        let v = bohmian_velocity(&h, &spec).unwrap();
        for (flat, &vi) in v[0].values().iter().enumerate() {
            if !h.node_mask[flat] {
                assert!(vi.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn osmotic_term_matches_gaussian_oracle() {
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 1025).unwrap();
        let mu = 0.4;
        let sigma = 1.1;
        let lambda = 0.7;
        let wf = WaveFunction::gaussian(&grid, lambda, &[mu], &[sigma], &[0.0]).unwrap();
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        let osm = osmotic_term(&h, lambda);
        // Oracle: (λ/2)·∂ρ/ρ = −λ(q−μ)/(2σ²).
        for flat in 0..grid.len() {
            let q = grid.position(flat)[0];
            if (q - mu).abs() < 2.0 * sigma {
                let expected = -lambda * (q - mu) / (2.0 * sigma * sigma);
                assert!(
                    (osm[0].values()[flat] - expected).abs() < 1e-4,
                    "q={q}: {} vs {expected}",
                    osm[0].values()[flat]
                );
            }
        }
        // Sign flip of λ flips the field exactly.
        let osm_neg = osmotic_term(&h, -lambda);
        for (a, b) in osm[0].values().iter().zip(osm_neg[0].values()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn osmotic_term_vanishes_for_uniform_density() {
        let (_grid, wf, _p0) = plane_wave(64, 1.0, 1.0);
        let h = decompose(&wf, BoundarySpec::Periodic, DEFAULT_RHO_EPS_REL).unwrap();
        let osm = osmotic_term(&h, 1.0);
        for &v in osm[0].values() {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn branch_average_is_exactly_bohmian() {
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 512).unwrap();
        let lambda = 1.0;
        let wf = WaveFunction::gaussian(&grid, lambda, &[0.5], &[1.2], &[0.8]).unwrap();
        let spec = HamiltonianSpec::free_with_mass(&[1.4]);
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        let vp = actual_velocity(&h, &spec, 1, lambda).unwrap();
        let vm = actual_velocity(&h, &spec, -1, lambda).unwrap();
        let vb = bohmian_velocity(&h, &spec).unwrap();
        for flat in 0..grid.len() {
            if !h.node_mask[flat] {
                let avg = 0.5 * (vp[0].values()[flat] + vm[0].values()[flat]);
                assert!(
                    (avg - vb[0].values()[flat]).abs() < 1e-12,
                    "branch average broke at {flat}"
                );
            }
        }
    }

    #[test]
    fn branches_coincide_at_density_extremum() {
        // Centered Gaussian on an odd grid: ∂ρ = 0 exactly at the center node.
        let grid = SpatialGrid::new_1d(-8.0, 8.0, 257).unwrap();
        let lambda = 1.0;
        let wf = WaveFunction::gaussian(&grid, lambda, &[0.0], &[1.0], &[0.6]).unwrap();
        let spec = HamiltonianSpec::free(1);
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        let vp = actual_velocity(&h, &spec, 1, lambda).unwrap();
        let vm = actual_velocity(&h, &spec, -1, lambda).unwrap();
        let vb = bohmian_velocity(&h, &spec).unwrap();
        let center = grid.len() / 2;
        assert!((vp[0].values()[center] - vb[0].values()[center]).abs() < 1e-12);
        assert!((vm[0].values()[center] - vb[0].values()[center]).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_branches_equal_everywhere() {
        let (_grid, wf, p0) = plane_wave(128, 1.0, 2.0);
        let spec = HamiltonianSpec::free(1);
        let h = decompose(&wf, BoundarySpec::Periodic, DEFAULT_RHO_EPS_REL).unwrap();
        let vp = actual_velocity(&h, &spec, 1, 1.0).unwrap();
        let vm = actual_velocity(&h, &spec, -1, 1.0).unwrap();
        for (a, b) in vp[0].values().iter().zip(vm[0].values()) {
            assert!((a - b).abs() < 1e-9);
            assert!((a - p0).abs() < 1e-7);
        }
    }

    #[test]
    fn decompose_inverts_construction() {
        // ψ = √ρ e^{iS/λ} from smooth (ρ, S): s_grad recovers ∂S to O(h²).
        let grid = SpatialGrid::new_1d(-6.0, 6.0, 801).unwrap();
        let lambda = 0.9;
        let s_fn = |q: f64| 0.3 * q * q + 0.5 * q.sin();
        let ds_fn = |q: f64| 0.6 * q + 0.5 * q.cos();
        let wf = WaveFunction::from_fn(&grid, lambda, |q| {
            let amp = (-(q[0] * q[0]) / 4.0).exp();
            C64::from_polar(amp, s_fn(q[0]) / lambda)
        })
        .unwrap();
        let h = decompose(&wf, BoundarySpec::DirichletZero, DEFAULT_RHO_EPS_REL).unwrap();
        for flat in 0..grid.len() {
            let q = grid.position(flat)[0];
            if q.abs() < 3.0 {
                let err = (h.s_grad[0].values()[flat] - ds_fn(q)).abs();
                assert!(err < 2e-4, "q={q}: err {err}");
            }
        }
    }
}
