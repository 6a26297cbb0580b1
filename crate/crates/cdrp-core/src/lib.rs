//! Exact samplers, density evaluators and statistical verification
//! experiments for the continuum objects that govern directed-polymer
//! localization: Bessel bridges, non-intersecting Brownian bridges, Dyson
//! Brownian motion, argmax path decompositions, and a lattice directed
//! polymer in the intermediate disorder regime.
//!
//! The crate is organized around the objects themselves:
//!
//! * [`numerics`]: scalar kernels (heat kernel, stable 2x2 heat-kernel
//!   determinants, log-sum-exp, adaptive quadrature) and the reproducible
//!   RNG stream contract.
//! * [`paths`]: Brownian motion/bridge, Brownian meander, 3D Bessel
//!   process and Bessel bridge samplers with their exact marginal laws.
//! * [`nonint`]: two-level non-intersecting Brownian motions and bridges,
//!   plus conditioned (non-intersecting) random walks.
//! * [`dyson`]: two-level Dyson Brownian motion, its entrance/transition
//!   laws, and the diffusive-limit experiments.
//! * [`decomp`]: path decompositions around the (joint) maximum, forward
//!   and synthetic, and the soft-crossing Gibbs weight functional.
//! * [`polymer`]: the lattice polymer transfer matrix, quenched densities
//!   and the localization/scaling experiments.
//! * [`stats`]: the test kit (KS, chi-square, Wasserstein-1, exponent
//!   fits) used by every experiment.
//! * [`report`]: JSON-serializable experiment and check reports.
//! * [`suites`]: the named verification suites driven by the CLI.

pub mod decomp;
pub mod dyson;
pub mod error;
pub mod nonint;
pub mod numerics;
pub mod paths;
pub mod polymer;
pub mod report;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
pub use numerics::SeedSpec;
