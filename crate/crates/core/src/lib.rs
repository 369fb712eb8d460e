//! Feedforward neural networks with random hidden nodes.
//!
//! Hidden-layer weights and biases are drawn at random and frozen; only the
//! output weights are trained, by linear least squares. This crate implements
//! three generation schemes for the hidden parameters:
//!
//! - **SM** — weights and biases both uniform on `[-u, u]`,
//! - **PMu** — weights uniform on `[-u, u]`, each bias chosen so the node's
//!   sigmoid takes value 0.5 at an anchor point inside the input hypercube,
//! - **PMα** — per-dimension slope angles uniform on `[α_min, α_max]`,
//!   converted to weights via `a = 4·tan α` with a random sign, biases
//!   anchored as in PMu.
//!
//! Besides generation and fitting, the crate ships the statistical toolkit
//! used to compare the schemes (inflection-point density, hyperplane-in-box
//! probabilities, slope-angle histograms, Kolmogorov-Smirnov distances) and a
//! benchmark harness that sweeps methods, node counts, and bound grids over
//! synthetic regression tasks.
//!
//! Everything is deterministic given the seeds in the various configs; see
//! [`seeding`] for how substreams are derived.

pub mod analysis;
pub mod bench;
pub mod datagen;
mod error;
pub mod network;
pub mod paramgen;
pub mod seeding;
pub mod solver;

pub use error::{Error, Result};
