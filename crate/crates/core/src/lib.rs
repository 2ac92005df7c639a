//! Interacting particle systems driven by a shared, divergence-free,
//! space-correlated environmental noise.
//!
//! The crate covers the full pipeline of a propagation-of-chaos study:
//!
//! * [`noise`]: finite spectral synthesis of isotropic Kraichnan-type fields
//!   `σ_k` with covariance `Q(0) = Id`, plus residual checks of their
//!   structural identities.
//! * [`dynamics`]: Euler–Maruyama integration of the `N`-particle system
//!   under common, independent, deterministic-environment or no noise, with
//!   counter-based Brownian increments.
//! * [`transport`]: empirical measures and exact `W₁`/`W₂` via a sparse
//!   network simplex with a dual optimality certificate.
//! * [`meanfield`]: the limit measure path as the fixed point of the
//!   frozen-drift push-forward map, built by Picard iteration.
//! * [`bounds`]: every explicit stability constant of the Wasserstein
//!   estimates.
//! * [`harness`]: configuration, experiments and reports.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod brownian;
pub mod cloud;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod harness;
pub mod kernel;
pub mod meanfield;
pub mod noise;
pub mod observable;
pub mod rng;
pub mod transport;

pub use bounds::{compute_constants, BoundsInput, StabilityConstants};
pub use brownian::{BrownianPath, PathLayout};
pub use cloud::PointCloud;
pub use dynamics::{simulate, NoiseMode, ParticleEnsemble, SimConfig, Trajectory};
pub use error::{Error, Result};
pub use exec::Exec;
pub use kernel::InteractionKernel;
pub use noise::{NoiseModel, Spectrum};
pub use observable::Observable;
pub use transport::{EmpiricalMeasure, MeasurePath};
