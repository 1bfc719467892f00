//! Run configuration: grid, Hamiltonian, initial state, stochastic
//! parameters, and schedule — plus the built-in presets the CLI exposes.
//!
//! Configs are TOML with strict parsing: unknown keys are rejected, missing
//! sections fall back to documented defaults, and `normalize` fills the
//! defaults in so a dumped config is stable under reload.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::StochasticParams;
use crate::error::{Result, SimError};
use crate::field::ComplexField;
use crate::grid::{Axis, BoundarySpec, SpatialGrid};
use crate::hamiltonian::{HamiltonianSpec, MetricSpec, Potential1d, VectorPotential1d};
use crate::solver::WaveFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// [min, max] per axis.
    pub extent: Vec<[f64; 2]>,
    /// Nodes per axis (≥ 8).
    pub points: Vec<usize>,
    #[serde(default = "default_boundary")]
    pub boundary: BoundarySpec,
}

fn default_boundary() -> BoundarySpec {
    BoundarySpec::DirichletZero
}

impl GridConfig {
    pub fn build(&self) -> Result<SpatialGrid> {
        if self.extent.len() != self.points.len() {
            return Err(SimError::Config(format!(
                "grid: {} extents for {} point counts",
                self.extent.len(),
                self.points.len()
            )));
        }
        let axes = self
            .extent
            .iter()
            .zip(&self.points)
            .map(|(e, &n)| Axis::new(e[0], e[1], n))
            .collect::<Result<Vec<_>>>()?;
        SpatialGrid::new(axes)
    }
}

/// Initial wave function presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        center: Vec<f64>,
        width: Vec<f64>,
        #[serde(default)]
        boost: Vec<f64>,
    },
    OscillatorEigenstate {
        n: u32,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    /// Weighted sum of normalized presets: Σ weight·e^{i·phase}·ψ.
    Superposition { components: Vec<SuperComponent> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperComponent {
    pub weight: f64,
    #[serde(default)]
    pub phase: f64,
    pub state: InitialState,
}

impl InitialState {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InitialState::Gaussian {
                center,
                width,
                boost,
            } => {
                if center.len() != dim || width.len() != dim {
                    return Err(SimError::Config(format!(
                        "initial_state: center/width must have {dim} entries"
                    )));
                }
                if !boost.is_empty() && boost.len() != dim {
                    return Err(SimError::Config(format!(
                        "boost: must have {dim} entries when given"
                    )));
                }
                if width.iter().any(|&w| !(w > 0.0)) {
                    return Err(SimError::Config("width: must be positive".into()));
                }
            }
            InitialState::OscillatorEigenstate { mass, omega, .. } => {
                if dim != 1 {
                    return Err(SimError::Config(
                        "initial_state: oscillator eigenstates are 1D".into(),
                    ));
                }
                if !(*mass > 0.0) {
                    return Err(SimError::Config("mass: must be positive".into()));
                }
                if !(*omega > 0.0) {
                    return Err(SimError::Config("omega: must be positive".into()));
                }
            }
            InitialState::Superposition { components } => {
                if components.is_empty() {
                    return Err(SimError::Config(
                        "superposition: needs at least one component".into(),
                    ));
                }
                for c in components {
                    c.state.validate(dim)?;
                }
            }
        }
        Ok(())
    }

    fn normalize_in_place(&mut self, dim: usize) {
        if let InitialState::Gaussian { boost, .. } = self {
            if boost.is_empty() {
                *boost = vec![0.0; dim];
            }
        }
        if let InitialState::Superposition { components } = self {
            for c in components {
                c.state.normalize_in_place(dim);
            }
        }
    }

    /// Build the (unnormalized) field for this preset; components of a
    /// superposition are normalized before being weighted.
    fn build_field(&self, grid: &SpatialGrid, lambda_mag: f64) -> Result<ComplexField> {
        match self {
            InitialState::Gaussian {
                center,
                width,
                boost,
            } => {
                let boost = if boost.is_empty() {
                    vec![0.0; grid.dim()]
                } else {
                    boost.clone()
                };
                Ok(WaveFunction::gaussian(grid, lambda_mag, center, width, &boost)?.psi)
            }
            InitialState::OscillatorEigenstate {
                n,
                mass,
                omega,
                center,
            } => {
                Ok(
                    WaveFunction::oscillator_eigenstate(grid, lambda_mag, *mass, *omega, *center, *n)?
                        .psi,
                )
            }
            InitialState::Superposition { components } => {
                let mut total = ComplexField::zeros(grid);
                for c in components {
                    let part = c.state.build_field(grid, lambda_mag)?;
                    let coeff = Complex64::from_polar(c.weight, c.phase);
                    for (t, p) in total.values_mut().iter_mut().zip(part.values()) {
                        *t += coeff * p;
                    }
                }
                Ok(total)
            }
        }
    }

    pub fn build(&self, grid: &SpatialGrid, lambda_mag: f64) -> Result<WaveFunction> {
        WaveFunction::new(self.build_field(grid, lambda_mag)?, 0.0, lambda_mag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_final: f64,
    /// Snapshot times; empty means {0, t_final}. Each must sit on the dt
    /// lattice.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
}

fn default_trajectories() -> usize {
    10_000
}

fn default_histogram_bins() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub grid: GridConfig,
    /// Defaults to a free particle of the grid's dimension.
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSpec>,
    pub initial_state: InitialState,
    #[serde(default)]
    pub stochastic: StochasticParams,
    pub run: RunConfig,
}

impl Scenario {
    /// Parse and fully validate a TOML config; unknown keys are rejected and
    /// defaults are filled in.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut scn: Scenario = toml::from_str(text)
            .map_err(|e| SimError::Config(format!("config parse error: {e}")))?;
        scn.normalize()?;
        Ok(scn)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| SimError::Config(format!("config dump: {e}")))
    }

    /// Fill defaults and validate every field, naming the offender on error.
    pub fn normalize(&mut self) -> Result<()> {
        let grid = self.grid.build()?;
        let dim = grid.dim();

        let spec = match &mut self.hamiltonian {
            Some(spec) => {
                if spec.potential.is_empty() {
                    spec.potential = vec![Potential1d::Zero; dim];
                }
                if spec.vector_potential.is_empty() {
                    spec.vector_potential = vec![VectorPotential1d::Zero; dim];
                }
                spec.clone()
            }
            None => {
                let free = HamiltonianSpec::free(dim);
                self.hamiltonian = Some(free.clone());
                free
            }
        };
        spec.validate(&grid)?;

        self.initial_state.normalize_in_place(dim);
        self.initial_state.validate(dim)?;
        self.stochastic.validate()?;

        if !(self.run.t_final >= 0.0) || !self.run.t_final.is_finite() {
            return Err(SimError::Config("t_final: must be nonnegative".into()));
        }
        if self.run.histogram_bins < 2 {
            return Err(SimError::Config("histogram_bins: must be at least 2".into()));
        }
        let dt = self.stochastic.dt_step;
        crate::solver::steps_for(self.run.t_final, dt)?;
        if self.run.snapshots.is_empty() {
            self.run.snapshots = if self.run.t_final > 0.0 {
                vec![0.0, self.run.t_final]
            } else {
                vec![0.0]
            };
        }
        for &t in &self.run.snapshots {
            if t < 0.0 || t > self.run.t_final + 1e-9 {
                return Err(SimError::Config(format!(
                    "snapshots: time {t} outside [0, {}]",
                    self.run.t_final
                )));
            }
            let k = (t / dt).round();
            if (t - k * dt).abs() > 1e-6 * dt {
                return Err(SimError::Config(format!(
                    "snapshots: time {t} is not a multiple of dt = {dt}"
                )));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<SpatialGrid> {
        self.grid.build()
    }

    pub fn hamiltonian_spec(&self) -> HamiltonianSpec {
        self.hamiltonian
            .clone()
            .unwrap_or_else(|| HamiltonianSpec::free(self.grid.points.len()))
    }

    pub fn initial_wavefunction(&self) -> Result<WaveFunction> {
        let grid = self.build_grid()?;
        self.initial_state.build(&grid, self.stochastic.lambda_mag)
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &[
            "free_gaussian",
            "boosted_gaussian",
            "oscillator_n0",
            "oscillator_n1",
            "superposition_phase",
            "two_free_particles",
            "position_dependent_mass",
        ]
    }

    /// Built-in presets; `None` for unknown names.
    pub fn builtin(name: &str) -> Option<Scenario> {
        let width_doubling_t = 2.0 * 3.0f64.sqrt();
        let mut scn = match name {
            "free_gaussian" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-16.0, 16.0]],
                    points: vec![1025],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: None,
                initial_state: InitialState::Gaussian {
                    center: vec![0.0],
                    width: vec![1.0],
                    boost: vec![0.0],
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: width_doubling_t / 1024.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: width_doubling_t,
                    snapshots: vec![0.0, width_doubling_t / 2.0, width_doubling_t],
                    trajectories: 100_000,
                    histogram_bins: 64,
                },
            },
            "boosted_gaussian" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-14.0, 22.0]],
                    points: vec![1153],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: None,
                initial_state: InitialState::Gaussian {
                    center: vec![0.0],
                    width: vec![1.0],
                    boost: vec![1.0],
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: width_doubling_t / 1024.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: width_doubling_t,
                    snapshots: vec![0.0, width_doubling_t / 2.0, width_doubling_t],
                    trajectories: 100_000,
                    histogram_bins: 64,
                },
            },
            "oscillator_n0" | "oscillator_n1" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-8.0, 8.0]],
                    points: vec![2049],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: Some(HamiltonianSpec::harmonic_1d(1.0, 1.0)),
                initial_state: InitialState::OscillatorEigenstate {
                    n: if name == "oscillator_n0" { 0 } else { 1 },
                    mass: 1.0,
                    omega: 1.0,
                    center: 0.0,
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: 1.0 / 1024.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: 1.0,
                    snapshots: vec![0.0, 0.5, 1.0],
                    trajectories: 100_000,
                    histogram_bins: 64,
                },
            },
            // Two displaced Gaussians with a relative phase: the witness
            // state for the third-moment discrepancy.
            "superposition_phase" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-16.0, 16.0]],
                    points: vec![1025],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: None,
                initial_state: InitialState::Superposition {
                    components: vec![
                        SuperComponent {
                            weight: 1.0,
                            phase: 0.0,
                            state: InitialState::Gaussian {
                                center: vec![-1.0],
                                width: vec![1.0],
                                boost: vec![0.0],
                            },
                        },
                        SuperComponent {
                            weight: 1.0,
                            phase: std::f64::consts::FRAC_PI_2,
                            state: InitialState::Gaussian {
                                center: vec![1.0],
                                width: vec![1.0],
                                boost: vec![1.0],
                            },
                        },
                    ],
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: 0.5 / 512.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: 0.5,
                    snapshots: vec![0.0, 0.5],
                    trajectories: 100_000,
                    histogram_bins: 64,
                },
            },
            "two_free_particles" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-8.0, 8.0], [-8.0, 8.0]],
                    points: vec![129, 129],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: Some(HamiltonianSpec::free_with_mass(&[1.0, 1.5])),
                initial_state: InitialState::Gaussian {
                    center: vec![0.0, 0.0],
                    width: vec![1.0, 0.8],
                    boost: vec![0.5, -0.3],
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: 1.0 / 256.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: 1.0,
                    snapshots: vec![0.0, 1.0],
                    trajectories: 20_000,
                    histogram_bins: 64,
                },
            },
            "position_dependent_mass" => Scenario {
                name: name.into(),
                grid: GridConfig {
                    extent: vec![[-10.0, 10.0]],
                    points: vec![1025],
                    boundary: BoundarySpec::DirichletZero,
                },
                hamiltonian: Some(HamiltonianSpec {
                    metric: MetricSpec::QuadraticMassTerm { b0: 0.5, b2: 0.05 },
                    potential: vec![Potential1d::Harmonic { k: 1.0, center: 0.0 }],
                    vector_potential: vec![VectorPotential1d::Zero],
                }),
                initial_state: InitialState::Gaussian {
                    center: vec![1.0],
                    width: vec![1.0],
                    boost: vec![0.0],
                },
                stochastic: StochasticParams {
                    lambda_mag: 1.0,
                    dt_step: 1.0 / 512.0,
                    flip_prob: 0.5,
                    seed: 42,
                },
                run: RunConfig {
                    t_final: 1.0,
                    snapshots: vec![0.0, 1.0],
                    trajectories: 50_000,
                    histogram_bins: 64,
                },
            },
            _ => return None,
        };
        scn.normalize().expect("builtin scenarios validate");
        Some(scn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"

[grid]
extent = [[-16.0, 16.0]]
points = [1025]

[initial_state]
type = "gaussian"
center = [0.0]
width = [1.0]

[run]
t_final = 0.5
"#;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let scn = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(scn.grid.boundary, BoundarySpec::DirichletZero);
        assert_eq!(scn.hamiltonian, Some(HamiltonianSpec::free(1)));
        assert_eq!(scn.stochastic, StochasticParams::default());
        assert_eq!(scn.run.trajectories, 10_000);
        assert_eq!(scn.run.histogram_bins, 64);
        assert_eq!(scn.run.snapshots, vec![0.0, 0.5]);
        match &scn.initial_state {
            InitialState::Gaussian { boost, .. } => assert_eq!(boost, &vec![0.0]),
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\nnot_a_key = 1\n");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("not_a_key"), "{err}");
    }

    #[test]
    fn parse_error_carries_line_info() {
        let bad = "name = \"x\"\n[grid\n";
        let err = Scenario::from_toml_str(bad).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn nonpositive_mass_names_the_field() {
        let bad = format!(
            "{MINIMAL}\n[hamiltonian]\nmetric = {{ type = \"const_inverse_mass\", mass = [-1.0] }}\n"
        );
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("mass"), "{err}");
    }

    #[test]
    fn dump_load_round_trip_is_idempotent() {
        let scn1 = Scenario::from_toml_str(MINIMAL).unwrap();
        let dump1 = scn1.to_toml_string().unwrap();
        let scn2 = Scenario::from_toml_str(&dump1).unwrap();
        let dump2 = scn2.to_toml_string().unwrap();
        assert_eq!(dump1, dump2);
        assert_eq!(scn1, scn2);
    }

    #[test]
    fn builtins_all_validate_and_build() {
        for name in Scenario::builtin_names() {
            let scn = Scenario::builtin(name).unwrap_or_else(|| panic!("missing builtin {name}"));
            let wf = scn.initial_wavefunction().unwrap();
            assert!((wf.norm() - 1.0).abs() < 1e-10, "{name} not normalized");
        }
        assert!(Scenario::builtin("no_such_scenario").is_none());
    }

    #[test]
    fn misaligned_snapshot_rejected() {
        let bad = format!("{}\n", MINIMAL.replace("t_final = 0.5", "t_final = 0.5\nsnapshots = [0.123]"));
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("snapshot"), "{err}");
    }

    #[test]
    fn superposition_builds_normalized() {
        let scn = Scenario::builtin("superposition_phase").unwrap();
        let wf = scn.initial_wavefunction().unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-10);
        // Genuinely complex: phase gradient should not vanish identically.
        let h = crate::madelung::decompose(&wf, BoundarySpec::DirichletZero, 1e-12).unwrap();
        let max_s = h.s_grad[0]
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_s > 0.01);
    }
}
