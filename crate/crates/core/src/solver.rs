//! Unitary propagation of i|λ|∂_t Ψ = ĤΨ with the flux-ordered Hamiltonian
//! Ĥ = ½(p̂−a)·g(q)·(p̂−a) + V, p̂ = −i|λ|∂.
//!
//! The discrete Ĥ is assembled edge-wise from the quadratic form
//! ½Σ_e g_e |(p̂−a)ψ|_e² + Σ V|ψ|², which makes hermiticity structural:
//! the matrix is tridiagonal in 1D and 5-point banded in 2D. Time stepping
//! is Crank–Nicolson, (1 + i dt Ĥ/2λ)ψ' = (1 − i dt Ĥ/2λ)ψ, an exactly
//! norm-preserving Cayley form solved directly (Thomas / cyclic Thomas /
//! banded LU).

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::field::{ComplexField, RealField};
use crate::grid::{BoundarySpec, SpatialGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::linalg::{cyclic_thomas_solve, thomas_solve, BandedLu};
use crate::ops;

/// Normalized complex state on a grid, with |λ| as the ħ-analog.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub psi: ComplexField,
    pub time: f64,
    pub lambda_mag: f64,
}

impl WaveFunction {
    /// Wrap and normalize a field. Errors when the field is identically
    /// zero or λ is not positive.
    pub fn new(psi: ComplexField, time: f64, lambda_mag: f64) -> Result<Self> {
        if !(lambda_mag > 0.0) || !lambda_mag.is_finite() {
            return Err(SimError::Config("lambda_mag: must be positive".into()));
        }
        let nrm = ops::norm(&psi);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(SimError::DegenerateState(
                "cannot normalize a zero wave function".into(),
            ));
        }
        let mut psi = psi;
        psi.scale(Complex64::new(1.0 / nrm, 0.0));
        Ok(WaveFunction {
            psi,
            time,
            lambda_mag,
        })
    }

    pub fn from_fn(
        grid: &SpatialGrid,
        lambda_mag: f64,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        Self::new(ComplexField::from_fn(grid, f), 0.0, lambda_mag)
    }

    /// Gaussian packet centered at `center` with spatial width `sigma`
    /// (so Var(q) = σ² per axis) and momentum boost `p0` per axis.
    pub fn gaussian(
        grid: &SpatialGrid,
        lambda_mag: f64,
        center: &[f64],
        sigma: &[f64],
        boost: &[f64],
    ) -> Result<Self> {
        let dim = grid.dim();
        if center.len() != dim || sigma.len() != dim || boost.len() != dim {
            return Err(SimError::Config(
                "gaussian: center/width/boost must have one entry per axis".into(),
            ));
        }
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(SimError::Config("width: must be positive".into()));
        }
        let center = center.to_vec();
        let sigma = sigma.to_vec();
        let boost = boost.to_vec();
        Self::from_fn(grid, lambda_mag, move |q| {
            let mut log_amp = 0.0;
            let mut phase = 0.0;
            for k in 0..q.len() {
                let d = q[k] - center[k];
                log_amp -= d * d / (4.0 * sigma[k] * sigma[k]);
                phase += boost[k] * d / lambda_mag;
            }
            Complex64::from_polar(log_amp.exp(), phase)
        })
    }

    /// 1D harmonic-oscillator eigenstate n for H = p²/2m + ½ m ω² (q−c)².
    pub fn oscillator_eigenstate(
        grid: &SpatialGrid,
        lambda_mag: f64,
        mass: f64,
        omega: f64,
        center: f64,
        n: u32,
    ) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(SimError::Config(
                "oscillator_eigenstate: 1D grids only".into(),
            ));
        }
        if !(mass > 0.0) || !(omega > 0.0) {
            return Err(SimError::Config(
                "oscillator_eigenstate: mass and omega must be positive".into(),
            ));
        }
        let scale = (mass * omega / lambda_mag).sqrt();
        Self::from_fn(grid, lambda_mag, move |q| {
            let x = scale * (q[0] - center);
            Complex64::new(hermite(n, x) * (-0.5 * x * x).exp(), 0.0)
        })
    }

    pub fn norm(&self) -> f64 {
        ops::norm(&self.psi)
    }

    /// ρ = |ψ|².
    pub fn density(&self) -> RealField {
        self.psi.norm_squared()
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.psi.grid()
    }
}

/// Physicists' Hermite polynomial H_n(x) by recurrence.
fn hermite(n: u32, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Discrete Ĥ = ½(p̂−a)g(p̂−a) + V on a grid: Hermitian with a real
/// diagonal, tridiagonal (1D) or 5-point banded (2D).
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    grid: SpatialGrid,
    boundary: BoundarySpec,
    lambda_mag: f64,
    /// Main diagonal (always real).
    diag: Vec<f64>,
    /// H[i, i+1] along axis 0; zero at row ends.
    upper_x: Vec<Complex64>,
    /// H[i, i+n0] along axis 1 (2D only).
    upper_y: Option<Vec<Complex64>>,
    /// H[n−1, 0] for 1D periodic grids.
    wrap_x: Option<Complex64>,
}

/// Assemble the discrete Hamiltonian for `spec` on `grid`.
pub fn build_hamiltonian(
    spec: &HamiltonianSpec,
    grid: &SpatialGrid,
    boundary: BoundarySpec,
    lambda_mag: f64,
) -> Result<DiscreteHamiltonian> {
    if !(lambda_mag > 0.0) || !lambda_mag.is_finite() {
        return Err(SimError::Config("lambda_mag: must be positive".into()));
    }
    spec.validate(grid)?;
    if grid.dim() == 2 && boundary == BoundarySpec::Periodic {
        return Err(SimError::Config(
            "periodic boundaries are supported in 1D only for the solver".into(),
        ));
    }

    let n = grid.len();
    let mut diag = vec![0.0; n];
    let mut upper_x = vec![Complex64::default(); n];
    let mut upper_y = if grid.dim() == 2 {
        Some(vec![Complex64::default(); n])
    } else {
        None
    };
    let mut wrap_x = None;

    for flat in 0..n {
        diag[flat] = spec.potential_at(&grid.position(flat));
    }

    for axis in 0..grid.dim() {
        let ax = *grid.axis(axis);
        let h = ax.spacing();
        let a = spec.vector_potential_at(axis);
        let lam_h = lambda_mag / h;
        // Off-diagonal H[left,right] and (twice the) diagonal weight of one
        // edge with metric g_e:
        //   H[l,r]   = ½ g_e (−λ²/h² + iλa/h + a²/4)
        //   H[l,l] += ½ g_e (λ²/h² + a²/4)   (same for r)
        let off_unit = Complex64::new(-lam_h * lam_h + 0.25 * a * a, lam_h * a);
        let diag_unit = lam_h * lam_h + 0.25 * a * a;

        for flat in 0..n {
            let ij = grid.unravel(flat);
            let i_ax = ij[axis];
            let q_ax = ax.coord(i_ax);

            // Edge to the + neighbor (interior or wrap).
            if i_ax + 1 < ax.points {
                let g_e = spec.metric_at(axis, q_ax + 0.5 * h);
                let mut nb = ij;
                nb[axis] = i_ax + 1;
                let j = grid.flatten(&nb[..grid.dim()]);
                diag[flat] += 0.5 * g_e * diag_unit;
                diag[j] += 0.5 * g_e * diag_unit;
                let entry = 0.5 * g_e * off_unit;
                match axis {
                    0 => upper_x[flat] = entry,
                    _ => upper_y.as_mut().expect("2D")[flat] = entry,
                }
            } else {
                match boundary {
                    BoundarySpec::DirichletZero => {
                        // Ghost edge beyond max: only the diagonal survives.
                        let g_e = spec.metric_at(axis, q_ax + 0.5 * h);
                        diag[flat] += 0.5 * g_e * diag_unit;
                    }
                    BoundarySpec::Periodic => {
                        // 1D wrap edge (n−1, 0).
                        let g_e = spec.metric_at(axis, q_ax + 0.5 * h);
                        diag[flat] += 0.5 * g_e * diag_unit;
                        diag[0] += 0.5 * g_e * diag_unit;
                        wrap_x = Some(0.5 * g_e * off_unit);
                    }
                }
            }
            // Ghost edge beyond min (Dirichlet only; the periodic wrap edge
            // was already handled from the other end).
            if i_ax == 0 && boundary == BoundarySpec::DirichletZero {
                let g_e = spec.metric_at(axis, q_ax - 0.5 * h);
                diag[flat] += 0.5 * g_e * diag_unit;
            }
        }
    }

    Ok(DiscreteHamiltonian {
        grid: grid.clone(),
        boundary,
        lambda_mag,
        diag,
        upper_x,
        upper_y,
        wrap_x,
    })
}

impl DiscreteHamiltonian {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn lambda_mag(&self) -> f64 {
        self.lambda_mag
    }

    /// Ĥψ.
    pub fn apply(&self, psi: &ComplexField) -> Result<ComplexField> {
        if psi.grid() != &self.grid {
            return Err(SimError::GridMismatch(
                "state lives on a different grid than the Hamiltonian".into(),
            ));
        }
        let x = psi.values();
        let n = x.len();
        let mut y = vec![Complex64::default(); n];
        for i in 0..n {
            y[i] = x[i] * self.diag[i];
        }
        let n0 = self.grid.axis(0).points;
        for i in 0..n {
            let u = self.upper_x[i];
            if u != Complex64::default() {
                y[i] += u * x[i + 1];
                y[i + 1] += u.conj() * x[i];
            }
        }
        if let Some(uy) = &self.upper_y {
            for i in 0..n {
                let u = uy[i];
                if u != Complex64::default() {
                    y[i] += u * x[i + n0];
                    y[i + n0] += u.conj() * x[i];
                }
            }
        }
        if let Some(w) = self.wrap_x {
            y[n - 1] += w * x[0];
            y[0] += w.conj() * x[n - 1];
        }
        ComplexField::from_values(&self.grid, y)
    }

    /// ⟨φ|Ĥ|ψ⟩.
    pub fn matrix_element(&self, phi: &ComplexField, psi: &ComplexField) -> Result<Complex64> {
        ops::inner_product(phi, &self.apply(psi)?)
    }

    /// ⟨ψ|Ĥ|ψ⟩ (real for Hermitian Ĥ).
    pub fn expectation(&self, wf: &WaveFunction) -> Result<f64> {
        Ok(self.matrix_element(&wf.psi, &wf.psi)?.re)
    }
}

enum Kernel {
    Tridiagonal {
        sub: Vec<Complex64>,
        diag: Vec<Complex64>,
        sup: Vec<Complex64>,
    },
    Cyclic {
        sub: Vec<Complex64>,
        diag: Vec<Complex64>,
        sup: Vec<Complex64>,
        lo: Complex64,
        hi: Complex64,
    },
    Banded(BandedLu),
}

/// Prefactored Crank–Nicolson propagator for a fixed (Ĥ, dt).
pub struct Propagator<'h> {
    h: &'h DiscreteHamiltonian,
    dt: f64,
    alpha: f64,
    kernel: Kernel,
}

/// Maximum allowed norm drift per CN step.
const NORM_DRIFT_PER_STEP: f64 = 1e-10;

impl<'h> Propagator<'h> {
    pub fn new(h: &'h DiscreteHamiltonian, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::Config("dt: must be positive".into()));
        }
        let alpha = dt / (2.0 * h.lambda_mag);
        let n = h.grid.len();
        let ialpha = Complex64::new(0.0, alpha);
        let kernel = if h.grid.dim() == 1 {
            let diag: Vec<Complex64> = h
                .diag
                .iter()
                .map(|&d| Complex64::new(1.0, 0.0) + ialpha * d)
                .collect();
            let sup: Vec<Complex64> = (0..n - 1).map(|i| ialpha * h.upper_x[i]).collect();
            let sub: Vec<Complex64> = (0..n - 1).map(|i| ialpha * h.upper_x[i].conj()).collect();
            match h.wrap_x {
                Some(w) => Kernel::Cyclic {
                    sub,
                    diag,
                    sup,
                    lo: ialpha * w.conj(),
                    hi: ialpha * w,
                },
                None => Kernel::Tridiagonal { sub, diag, sup },
            }
        } else {
            let n0 = h.grid.axis(0).points;
            let mut lu = BandedLu::zeros(n, n0);
            for i in 0..n {
                lu.set(i, i, Complex64::new(1.0, 0.0) + ialpha * h.diag[i]);
            }
            for i in 0..n {
                let u = h.upper_x[i];
                if u != Complex64::default() {
                    lu.set(i, i + 1, ialpha * u);
                    lu.set(i + 1, i, ialpha * u.conj());
                }
                let uy = h.upper_y.as_ref().expect("2D")[i];
                if uy != Complex64::default() {
                    lu.set(i, i + n0, ialpha * uy);
                    lu.set(i + n0, i, ialpha * uy.conj());
                }
            }
            lu.factor()?;
            Kernel::Banded(lu)
        };
        Ok(Propagator {
            h,
            dt,
            alpha,
            kernel,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One CN step in place. Checks that the Cayley form kept the norm.
    pub fn advance(&self, wf: &mut WaveFunction) -> Result<()> {
        if wf.grid() != &self.h.grid {
            return Err(SimError::GridMismatch(
                "state lives on a different grid than the propagator".into(),
            ));
        }
        let norm_before = wf.norm();
        let hpsi = self.h.apply(&wf.psi)?;
        let ialpha = Complex64::new(0.0, self.alpha);
        // rhs = (1 − iαH)ψ
        let rhs: Vec<Complex64> = wf
            .psi
            .values()
            .iter()
            .zip(hpsi.values())
            .map(|(&p, &hp)| p - ialpha * hp)
            .collect();
        let solution = match &self.kernel {
            Kernel::Tridiagonal { sub, diag, sup } => thomas_solve(sub, diag, sup, &rhs)?,
            Kernel::Cyclic {
                sub,
                diag,
                sup,
                lo,
                hi,
            } => cyclic_thomas_solve(sub, diag, sup, *lo, *hi, &rhs)?,
            Kernel::Banded(lu) => {
                let mut b = rhs;
                lu.solve(&mut b)?;
                b
            }
        };
        let psi = ComplexField::from_values(&self.h.grid, solution)?;
        let norm_after = ops::norm(&psi);
        let drift = (norm_after - norm_before).abs();
        if drift > NORM_DRIFT_PER_STEP {
            return Err(SimError::Numerical(format!(
                "Crank-Nicolson step lost unitarity: norm drift {drift:.3e}"
            )));
        }
        wf.psi = psi;
        wf.time += self.dt;
        Ok(())
    }
}

/// One CN step: (1 + i dt Ĥ/2λ)ψ' = (1 − i dt Ĥ/2λ)ψ.
pub fn step(wf: &WaveFunction, h: &DiscreteHamiltonian, dt: f64) -> Result<WaveFunction> {
    let prop = Propagator::new(h, dt)?;
    let mut out = wf.clone();
    prop.advance(&mut out)?;
    Ok(out)
}

/// Evolve to `t_final` with fixed `dt`, returning states at the requested
/// snapshot times (each must sit on the step lattice k·dt).
pub fn evolve(
    wf: &WaveFunction,
    h: &DiscreteHamiltonian,
    t_final: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Vec<WaveFunction>> {
    let steps = steps_for(t_final, dt)?;
    let mut snap_steps: Vec<(usize, usize)> = Vec::new(); // (step, output slot)
    for (slot, &t) in snapshot_times.iter().enumerate() {
        let k = (t / dt).round() as isize;
        if k < 0 || (t - k as f64 * dt).abs() > 1e-6 * dt.max(1e-12) {
            return Err(SimError::Config(format!(
                "snapshot time {t} is not a multiple of dt = {dt}"
            )));
        }
        let k = k as usize;
        if k > steps {
            return Err(SimError::Config(format!(
                "snapshot time {t} exceeds t_final = {t_final}"
            )));
        }
        snap_steps.push((k, slot));
    }
    snap_steps.sort_unstable();

    let mut out: Vec<Option<WaveFunction>> = vec![None; snapshot_times.len()];
    let mut current = wf.clone();
    let mut pending = snap_steps.into_iter().peekable();
    while let Some(&(k, slot)) = pending.peek() {
        if k == 0 {
            out[slot] = Some(current.clone());
            pending.next();
        } else {
            break;
        }
    }
    if steps > 0 {
        let prop = Propagator::new(h, dt)?;
        for k in 1..=steps {
            prop.advance(&mut current)?;
            while let Some(&(ks, slot)) = pending.peek() {
                if ks == k {
                    out[slot] = Some(current.clone());
                    pending.next();
                } else {
                    break;
                }
            }
        }
    }
    Ok(out.into_iter().map(|s| s.expect("all slots filled")).collect())
}

/// Number of steps covering `t_final` with step `dt`; `t_final` must sit on
/// the step lattice.
pub fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(SimError::Config("dt: must be positive".into()));
    }
    if t_final < 0.0 {
        return Err(SimError::Config("t_final: must be nonnegative".into()));
    }
    let steps = (t_final / dt).round();
    if (t_final - steps * dt).abs() > 1e-6 * dt {
        return Err(SimError::Config(format!(
            "t_final = {t_final} is not a multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}
