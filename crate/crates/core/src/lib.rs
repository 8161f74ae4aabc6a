//! Fully decoupled, second-order pressure-projection finite elements for the
//! two-dimensional micropolar Rayleigh-Benard convection system.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured triangulations of rectangles with tagged boundaries.
//! - [`fem`]: Lagrange P1/P2 reference elements, quadrature, dof maps, fields.
//! - [`sparse`]: CSR matrices, Krylov solvers, Dirichlet elimination.
//! - [`assembly`]: every bilinear form and load vector the time stepper needs.
//! - [`scheme`]: the five-step BDF2 projection stepper and its energy monitors.
//! - [`problems`]: manufactured, lid-driven cavity and passive-scalar stirring set-ups.
//! - [`postproc`]: error norms, convergence rates, CSV and legacy VTK output.
//! - [`config`]: run configuration parsing and the experiment drivers behind the CLI.

pub mod analytic;
pub mod assembly;
pub mod config;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod postproc;
pub mod problems;
pub mod scheme;
pub mod sparse;

pub use error::{Error, Result};
