//! Desk-scale workbench for backward parabolic problems with measure data
//! on finite sub-Markov chains.
//!
//! The state space is a finite grid carrying cell measures; generators are
//! (possibly time-staged) sub-Markov rate matrices; terminal-value problems
//! `-du/dt - Q u = f(t, x, u) + mu` with a measure source `mu` are solved
//! three independent ways (exact linear algebra, Monte Carlo along chain
//! paths, adjoint duality) so every identity can be cross-checked, exactly
//! or with error bars.

pub mod error;
pub mod estimates;
pub mod grid;
pub mod linear;
pub mod measures;
pub mod operators;
pub mod process;
pub mod propagate;
pub mod scenario;
pub mod semilinear;

pub use error::{Error, Result};
pub use grid::{m_inner, spacetime_inner, uniform_mesh, SpaceTimeField, SpaceTimeGrid};
pub use operators::{
    bilinear_form, divergence_form_generator, fractional_generator, structural_report,
    FormReport, GeneratorFamily, RateMatrix,
};
