//! Stochastic trajectory simulation of quantum dynamics.
//!
//! The model: particle transitions between nearby configuration-space points
//! are weighted by an exponential distribution of the deviation from
//! infinitesimal stationary action, with mean |λ|/2 and a sign tied to a
//! dichotomous ±1 process. Averaged over the sign process this yields unitary
//! Schrödinger dynamics for Ψ = √ρ·exp(iS/|λ|); the particles themselves
//! follow continuous trajectories with velocity
//!
//! ```text
//! v± = g·(∂S ± (λ/2)·∂ρ/ρ − a)
//! ```
//!
//! fluctuating around the Bohmian flow g·(∂S − a). The crate provides the
//! substrate (grids, fields, finite-difference operators), the deviation
//! sampler with its locality/factorization checks, a Crank–Nicolson solver
//! for the uniquely-ordered Hamiltonian ½(p̂−a)g(p̂−a)+V, the Madelung
//! velocity decomposition, a seeded ensemble engine, and observable
//! statistics that compare trajectory averages against ⟨Ψ|Ô|Ψ⟩.

pub mod action;
pub mod error;
pub mod field;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod madelung;
pub mod ops;
pub mod rng;
pub mod scenario;
pub mod solver;
pub mod stats;
pub mod suite;
pub mod trajectory;

pub use error::{Result, SimError};
pub use field::{ComplexField, RealField};
pub use grid::{Axis, BoundarySpec, SpatialGrid};
pub use hamiltonian::HamiltonianSpec;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
