//! Sparse random linear systems over F2.
//!
//! The crate is organised around five building blocks:
//!
//! - [`gf2`]: bit-packed exact linear algebra (rank, kernel, frozen
//!   coordinates, uniform kernel sampling).
//! - [`graph`]: Tanner graphs and the random generators (Bernoulli
//!   matrices, the pairing model, Galton-Watson trees, perturbations).
//! - [`wp`]: the three-valued warning propagation engine, node
//!   classification, peeling, slush contraction, flippers and the
//!   algebraic per-edge message oracle.
//! - [`analytics`]: closed forms and fixed-point machinery for the
//!   freezing functions and message distributions.
//! - [`experiments`]: the seeded Monte Carlo harness with JSON/CSV
//!   reports.
//!
//! Everything downstream of a seed is deterministic: per-trial RNG
//! streams are derived from `(seed, trial index)`, so reports are
//! bit-identical across runs regardless of how many worker threads are
//! used.

pub mod analytics;
pub mod experiments;
pub mod gf2;
pub mod graph;
pub mod wp;
