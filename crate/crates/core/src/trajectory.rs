//! Particle ensembles driven by the ± branch velocity process, advanced
//! against shared field snapshots of the deterministic wave function.
//!
//! Every trajectory owns a ChaCha stream keyed by (master seed, trajectory
//! index); the initial Born sample draws from its own stream. This makes an
//! ensemble run a pure function of the master seed, independent of thread
//! scheduling: particles advance in parallel but never share RNG state, and
//! reductions run in index order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::StochasticParams;
use crate::error::{Result, SimError};
use crate::field::RealField;
use crate::grid::SpatialGrid;
use crate::hamiltonian::HamiltonianSpec;
use crate::madelung::{self, HydroFields, DEFAULT_RHO_EPS_REL};
use crate::rng::{stream, StreamPurpose};
use crate::scenario::Scenario;
use crate::solver::{build_hamiltonian, steps_for, Propagator, WaveFunction};

/// Inverse-CDF Born sampling on the grid cells with within-cell jitter.
///
/// Cell k covers [q_k − h/2, q_k + h/2] (clipped at the extent); a draw
/// picks a cell with probability ∝ ρ_k, then a uniform point inside it.
pub fn sample_initial(rho: &RealField, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    if n < 1 {
        return Err(SimError::Config("n: must be at least 1".into()));
    }
    let grid = rho.grid();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    for &v in rho.values() {
        total += v.max(0.0);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(SimError::DegenerateState("density sums to zero".into()));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * total;
        let cell = cdf.partition_point(|&c| c <= u).min(grid.len() - 1);
        let ij = grid.unravel(cell);
        let mut q = Vec::with_capacity(grid.dim());
        for axis in 0..grid.dim() {
            let ax = grid.axis(axis);
            let h = ax.spacing();
            let center = ax.coord(ij[axis]);
            let jitter: f64 = rng.gen::<f64>() - 0.5;
            q.push((center + jitter * h).clamp(ax.min, ax.max));
        }
        out.push(q);
    }
    Ok(out)
}

/// A single particle path with its own RNG stream.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub stream_id: u64,
    /// (t, q) history, strictly increasing in t.
    pub positions: Vec<(f64, Vec<f64>)>,
    pub sign: i8,
    pub terminated: bool,
    /// Steps that had to reroute a node-masked velocity cell.
    pub node_fallbacks: u32,
    rng: ChaCha8Rng,
}

impl Trajectory {
    /// New trajectory at `q0`; the branch sign is the stream's first draw.
    pub fn new(params: &StochasticParams, stream_id: u64, q0: Vec<f64>, t0: f64) -> Self {
        let mut rng = stream(params.seed, StreamPurpose::Trajectory, stream_id);
        let sign = if rng.gen::<bool>() { 1 } else { -1 };
        Trajectory {
            stream_id,
            positions: vec![(t0, q0)],
            sign,
            terminated: false,
            node_fallbacks: 0,
            rng,
        }
    }

    pub fn time(&self) -> f64 {
        self.positions.last().expect("nonempty").0
    }

    pub fn position(&self) -> &[f64] {
        &self.positions.last().expect("nonempty").1
    }
}

/// One Euler step of the ± process against the given hydro fields: flip the
/// branch with `flip_prob`, then move with the branch velocity interpolated
/// at the current position. Leaving the grid terminates the trajectory.
///
/// This is the single-trajectory path (it rebuilds the velocity field each
/// call); ensembles go through [`run_ensemble`], which shares fields across
/// particles.
pub fn advance(
    traj: &mut Trajectory,
    hydro: &HydroFields,
    spec: &HamiltonianSpec,
    params: &StochasticParams,
    dt: f64,
) -> Result<()> {
    if traj.terminated {
        return Ok(());
    }
    let u: f64 = traj.rng.gen();
    if u < params.flip_prob {
        traj.sign = -traj.sign;
    }
    let v = madelung::actual_velocity(hydro, spec, traj.sign, params.lambda_mag)?;
    let (t, q) = traj.positions.last().expect("nonempty").clone();
    let grid = hydro.grid();
    if hydro.cell_touches_mask(&q) {
        traj.node_fallbacks += 1;
    }
    let mut q_new = q.clone();
    for (axis, v_ax) in v.iter().enumerate() {
        q_new[axis] += hydro.interpolate(v_ax, &q) * dt;
    }
    if !grid.contains(&q_new) {
        traj.terminated = true;
    }
    traj.positions.push((t + dt, q_new));
    Ok(())
}

/// Noise-free reference: integrate the Bohmian velocity with the same
/// frozen-field Euler scheme the stochastic particles use.
pub fn bohmian_reference(
    scn: &Scenario,
    q0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    let grid = scn.build_grid()?;
    let spec = scn.hamiltonian_spec();
    let boundary = scn.grid.boundary;
    let lambda = scn.stochastic.lambda_mag;
    let steps = steps_for(t_final, dt)?;
    let mut psi = scn.initial_wavefunction()?;
    let h = build_hamiltonian(&spec, &grid, boundary, lambda)?;

    let mut traj = Trajectory::new(&scn.stochastic, u64::MAX, q0.to_vec(), 0.0);
    traj.sign = 1;
    if steps == 0 {
        return Ok(traj);
    }
    let prop = Propagator::new(&h, dt)?;
    for k in 0..steps {
        let hydro = madelung::decompose(&psi, boundary, DEFAULT_RHO_EPS_REL)?;
        let vb = madelung::bohmian_velocity(&hydro, &spec)?;
        let (t, q) = traj.positions.last().expect("nonempty").clone();
        if hydro.cell_touches_mask(&q) {
            traj.node_fallbacks += 1;
        }
        let mut q_new = q.clone();
        for (axis, v_ax) in vb.iter().enumerate() {
            q_new[axis] += hydro.interpolate(v_ax, &q) * dt;
        }
        if !grid.contains(&q_new) {
            traj.terminated = true;
            traj.positions.push((t + dt, q_new));
            break;
        }
        traj.positions.push((t + dt, q_new));
        if k + 1 < steps {
            prop.advance(&mut psi)?;
        }
    }
    Ok(traj)
}

/// Initial branch-sign policy for an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignInit {
    /// Each trajectory draws its starting branch from its own stream.
    #[default]
    Random,
    AllPlus,
    AllMinus,
}

/// Where the ensemble starts.
#[derive(Debug, Clone)]
pub enum InitialPositions {
    /// Born sampling from |ψ₀|².
    BornSample,
    /// Every trajectory starts at the positions given (length = n).
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMeta {
    pub scenario: String,
    pub seed: u64,
    pub n_requested: usize,
    pub dt: f64,
    pub lambda_mag: f64,
    pub flip_prob: f64,
    pub boundary: crate::grid::BoundarySpec,
}

/// Fixed-range position histogram; masses are counts / n_requested, so they
/// sum to the retained fraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn from_values(values: impl Iterator<Item = f64>, min: f64, max: f64, bins: usize, n_total: usize) -> Self {
        let mut masses = vec![0.0; bins];
        if n_total > 0 {
            let w = 1.0 / n_total as f64;
            let scale = bins as f64 / (max - min);
            for v in values {
                if v >= min && v <= max {
                    let b = (((v - min) * scale) as usize).min(bins - 1);
                    masses[b] += w;
                }
            }
        }
        Histogram { min, max, masses }
    }

    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.masses.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.masses.len())
            .map(|i| self.min + (i as f64 + 0.5) * w)
            .collect()
    }
}

/// Ensemble state recorded at one snapshot time: surviving trajectories
/// (by index), their positions and sampled momenta p = ∂S ± (λ/2)∂ρ/ρ, the
/// branch signs used, per-axis histograms, and the field snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotEnsemble {
    pub time: f64,
    pub indices: Vec<u32>,
    /// Row-major: positions[row·dim + axis].
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub signs: Vec<i8>,
    pub histograms: Vec<Histogram>,
    pub psi: WaveFunction,
}

impl SnapshotEnsemble {
    pub fn n_alive(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.psi.grid().dim()
    }

    pub fn position(&self, row: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[row * d..(row + 1) * d]
    }

    pub fn momentum(&self, row: usize) -> &[f64] {
        let d = self.dim();
        &self.momenta[row * d..(row + 1) * d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub meta: EnsembleMeta,
    pub snapshots: Vec<SnapshotEnsemble>,
    pub terminated_fraction: f64,
    /// Set when more than 10% of trajectories left the grid.
    pub domain_warning: bool,
    pub final_indices: Vec<u32>,
    pub final_positions: Vec<f64>,
}

struct Particle {
    q: [f64; 2],
    sign: i8,
    alive: bool,
    rng: ChaCha8Rng,
}

/// Run the full scenario: evolve the wave function once and advance all
/// trajectories against its per-step field snapshots.
pub fn run_ensemble(scn: &Scenario, sign_init: SignInit) -> Result<EnsembleResult> {
    run_ensemble_from(scn, sign_init, InitialPositions::BornSample)
}

pub fn run_ensemble_from(
    scn: &Scenario,
    sign_init: SignInit,
    initial: InitialPositions,
) -> Result<EnsembleResult> {
    let grid = scn.build_grid()?;
    let spec = scn.hamiltonian_spec();
    spec.validate(&grid)?;
    let params = scn.stochastic;
    params.validate()?;
    let boundary = scn.grid.boundary;
    let dt = params.dt_step;
    let steps = steps_for(scn.run.t_final, dt)?;
    let psi0 = scn.initial_wavefunction()?;
    let h = build_hamiltonian(&spec, &grid, boundary, params.lambda_mag)?;
    let dim = grid.dim();

    let mut snap_by_step: Vec<Vec<usize>> = vec![Vec::new(); steps + 1];
    for (slot, &t) in scn.run.snapshots.iter().enumerate() {
        snap_by_step[(t / dt).round() as usize].push(slot);
    }

    let n = scn.run.trajectories;
    let init_pos = match initial {
        InitialPositions::BornSample => {
            if n > 0 {
                let mut rng = stream(params.seed, StreamPurpose::InitialSampling, 0);
                sample_initial(&psi0.density(), n, &mut rng)?
            } else {
                Vec::new()
            }
        }
        InitialPositions::Fixed(pos) => {
            if pos.len() != n {
                return Err(SimError::Config(format!(
                    "initial positions: expected {n}, got {}",
                    pos.len()
                )));
            }
            for q in &pos {
                if !grid.contains(q) {
                    return Err(SimError::OutOfDomain { position: q.clone() });
                }
            }
            pos
        }
    };

    let mut particles: Vec<Particle> = (0..n)
        .map(|i| {
            let mut rng = stream(params.seed, StreamPurpose::Trajectory, i as u64);
            // Always consume the branch draw so flip sequences align across
            // sign-init policies.
            let drawn: bool = rng.gen();
            let sign = match sign_init {
                SignInit::Random => {
                    if drawn {
                        1
                    } else {
                        -1
                    }
                }
                SignInit::AllPlus => 1,
                SignInit::AllMinus => -1,
            };
            let mut q = [0.0f64; 2];
            q[..dim].copy_from_slice(&init_pos[i]);
            Particle {
                q,
                sign,
                alive: true,
                rng,
            }
        })
        .collect();

    let mut snapshots: Vec<Option<SnapshotEnsemble>> =
        (0..scn.run.snapshots.len()).map(|_| None).collect();
    let mut psi = psi0;
    let prop = if steps > 0 {
        Some(Propagator::new(&h, dt)?)
    } else {
        None
    };

    for k in 0..=steps {
        let hydro = madelung::decompose(&psi, boundary, DEFAULT_RHO_EPS_REL)?;
        if !snap_by_step[k].is_empty() {
            let snap = record_snapshot(
                k as f64 * dt,
                &grid,
                &hydro,
                &psi,
                &particles,
                n,
                scn.run.histogram_bins,
                params.lambda_mag,
            );
            for &slot in &snap_by_step[k] {
                snapshots[slot] = Some(snap.clone());
            }
        }
        if k < steps {
            let vplus = madelung::actual_velocity(&hydro, &spec, 1, params.lambda_mag)?;
            let vminus = madelung::actual_velocity(&hydro, &spec, -1, params.lambda_mag)?;
            let flip_prob = params.flip_prob;
            particles.par_iter_mut().for_each(|p| {
                if !p.alive {
                    return;
                }
                let u: f64 = p.rng.gen();
                if u < flip_prob {
                    p.sign = -p.sign;
                }
                let v = if p.sign > 0 { &vplus } else { &vminus };
                let mut q_new = p.q;
                for axis in 0..dim {
                    q_new[axis] += hydro.interpolate(&v[axis], &p.q[..dim]) * dt;
                }
                if grid.contains(&q_new[..dim]) {
                    p.q = q_new;
                } else {
                    p.q = q_new;
                    p.alive = false;
                }
            });
            prop.as_ref().expect("steps > 0").advance(&mut psi)?;
        }
    }

    let alive = particles.iter().filter(|p| p.alive).count();
    let terminated_fraction = if n > 0 {
        1.0 - alive as f64 / n as f64
    } else {
        0.0
    };
    let mut final_indices = Vec::with_capacity(alive);
    let mut final_positions = Vec::with_capacity(alive * dim);
    for (i, p) in particles.iter().enumerate() {
        if p.alive {
            final_indices.push(i as u32);
            final_positions.extend_from_slice(&p.q[..dim]);
        }
    }

    Ok(EnsembleResult {
        meta: EnsembleMeta {
            scenario: scn.name.clone(),
            seed: params.seed,
            n_requested: n,
            dt,
            lambda_mag: params.lambda_mag,
            flip_prob: params.flip_prob,
            boundary,
        },
        snapshots: snapshots
            .into_iter()
            .map(|s| s.expect("snapshot slots filled"))
            .collect(),
        terminated_fraction,
        domain_warning: terminated_fraction > 0.10,
        final_indices,
        final_positions,
    })
}

#[allow(clippy::too_many_arguments)]
fn record_snapshot(
    time: f64,
    grid: &SpatialGrid,
    hydro: &HydroFields,
    psi: &WaveFunction,
    particles: &[Particle],
    n_total: usize,
    bins: usize,
    lambda_mag: f64,
) -> SnapshotEnsemble {
    let dim = grid.dim();
    // Momentum fields per branch: p± = ∂S ± (λ/2)·∂ρ/ρ.
    let mut p_plus = Vec::with_capacity(dim);
    let mut p_minus = Vec::with_capacity(dim);
    for axis in 0..dim {
        let sg = &hydro.s_grad[axis];
        let lg = &hydro.log_rho_grad[axis];
        let mut plus = sg.clone();
        let mut minus = sg.clone();
        for flat in 0..grid.len() {
            let o = 0.5 * lambda_mag * lg.values()[flat];
            plus.values_mut()[flat] += o;
            minus.values_mut()[flat] -= o;
        }
        p_plus.push(plus);
        p_minus.push(minus);
    }

    let mut indices = Vec::new();
    let mut positions = Vec::new();
    let mut momenta = Vec::new();
    let mut signs = Vec::new();
    for (i, p) in particles.iter().enumerate() {
        if !p.alive {
            continue;
        }
        indices.push(i as u32);
        signs.push(p.sign);
        let q = &p.q[..dim];
        positions.extend_from_slice(q);
        let pf = if p.sign > 0 { &p_plus } else { &p_minus };
        for axis in 0..dim {
            momenta.push(hydro.interpolate(&pf[axis], q));
        }
    }

    let histograms = (0..dim)
        .map(|axis| {
            let ax = grid.axis(axis);
            Histogram::from_values(
                (0..indices.len()).map(|row| positions[row * dim + axis]),
                ax.min,
                ax.max,
                bins,
                n_total,
            )
        })
        .collect();

    SnapshotEnsemble {
        time,
        indices,
        positions,
        momenta,
        signs,
        histograms,
        psi: psi.clone(),
    }
}
