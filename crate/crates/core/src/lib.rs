//! Spectral-Galerkin simulator and certificate engine for the diffusive
//! Oregonator reaction-diffusion system.
//!
//! The Oregonator is the three-species dimensionless model of the
//! Belousov-Zhabotinskii oscillating reaction. On a box domain with
//! homogeneous Dirichlet boundary conditions its solution semiflow is
//! dissipative: trajectories enter a bounded absorbing set, gradients and
//! sup-norms obey explicit a-priori bounds, and the attractor has finite
//! dimension. This crate both *simulates* the system (sine-Galerkin
//! truncation, IMEX stepping with exact modal diffusion) and *checks* the
//! closed-form certificates along the computed trajectories:
//!
//! * [`model`] — parameters, box domain, and every derived constant.
//! * [`spectral`] — Dirichlet sine basis, transforms, dealiased products.
//! * [`dynamics`] — reaction map, IMEX integrators, trajectory generation.
//! * [`bounds`] — energy functionals, decay envelopes, absorbing-entry and
//!   gradient/sup-norm checks.
//! * [`tangent`] — variational flow, Benettin Lyapunov spectra, trace
//!   functional, dimension bounds, and the norm-quotient growth certificate.
//! * [`config`] — the flat key-value run-configuration format.

pub mod bounds;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod init;
pub mod model;
pub mod report;
pub mod spectral;
pub mod tangent;

pub use error::{Error, Result};
pub use model::{
    derive_constants, DerivedConstants, DomainSpec, EmbeddingConstants, OregonatorParams,
};
pub use spectral::{ModeIndex, SineBasis};
