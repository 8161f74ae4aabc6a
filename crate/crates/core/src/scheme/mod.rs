//! Fully decoupled second-order projection stepper.
//!
//! One step solves, in order and exactly once each: a velocity predictor, a
//! pressure-increment Poisson problem, an L2 velocity correction, the
//! microrotation equation and the temperature equation. All couplings use
//! the extrapolated fields `2 x^n - x^{n-1}`; the very first step is a
//! backward-Euler variant of the same sequence.

mod bc;
mod discretization;
mod energy;
mod step;

use std::fmt;

use thiserror::Error;

use crate::fem::FemError;
use crate::mesh::MeshError;
use crate::sparse::{LinalgError, SolverConfig};

pub use bc::{BoundaryConditions, FieldBc, Prescription};
pub use discretization::Discretization;
pub use energy::EnergyEntry;
pub use step::{
    advance, initialize, run, run_with, step_angular, step_pressure, step_temperature,
    step_velocity_correct, step_velocity_predict, Extrapolated, PressureUpdate, RunOptions,
    RunOutput, SchemeState, Snapshot, SolveInfo, StepDiagnostics,
};

/// Material constants of the micropolar Boussinesq system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Micro-rotation viscosity.
    pub chi: f64,
    /// Newtonian kinematic viscosity.
    pub mu: f64,
    /// Angular viscosity.
    pub upsilon: f64,
    /// Second angular viscosity; its term vanishes for scalar microrotation.
    pub eta: f64,
    /// Inertia density.
    pub zeta: f64,
    /// Thermal diffusivity.
    pub kappa: f64,
    /// Unit buoyancy direction.
    pub e: [f64; 2],
    /// Keep the `theta e` and `u . e` couplings. Switching them off leaves a
    /// system whose energy is non-increasing without sources.
    pub buoyancy_coupling: bool,
}

impl PhysicalParams {
    /// `zeta = eta = 1`, buoyancy along `+y`.
    pub fn new(upsilon: f64, chi: f64, mu: f64, kappa: f64) -> Self {
        PhysicalParams {
            chi,
            mu,
            upsilon,
            eta: 1.0,
            zeta: 1.0,
            kappa,
            e: [0.0, 1.0],
            buoyancy_coupling: true,
        }
    }

    pub fn rayleigh(&self) -> f64 {
        1.0 / ((self.chi + self.mu) * self.kappa)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let positive = [
            ("chi", self.chi),
            ("mu", self.mu),
            ("upsilon", self.upsilon),
            ("zeta", self.zeta),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SchemeError::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(SchemeError::InvalidParams(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        let n = (self.e[0] * self.e[0] + self.e[1] * self.e[1]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(SchemeError::InvalidParams(format!(
                "buoyancy direction must be a unit vector, |e| = {n}"
            )));
        }
        Ok(())
    }
}

/// Time discretisation of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    BackwardEuler,
    Bdf2,
}

impl TimeScheme {
    /// `(a0, h_n, h_prev)` with `dx/dt ~ (a0 x^{n+1} - h_n x^n - h_prev x^{n-1}) / dt`.
    pub fn bdf(self) -> (f64, f64, f64) {
        match self {
            TimeScheme::BackwardEuler => (1.0, 1.0, 0.0),
            TimeScheme::Bdf2 => (1.5, 2.0, -0.5),
        }
    }

    /// Weights `(e_n, e_prev)` of the explicit extrapolation.
    pub fn extrapolation(self) -> (f64, f64) {
        match self {
            TimeScheme::BackwardEuler => (1.0, 0.0),
            TimeScheme::Bdf2 => (2.0, -1.0),
        }
    }
}

/// Solver choices for the symmetric (pressure, mass) and the
/// convection-diffusion systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub symmetric: SolverConfig,
    pub nonsymmetric: SolverConfig,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            symmetric: SolverConfig::symmetric(),
            nonsymmetric: SolverConfig::nonsymmetric(),
        }
    }
}

/// Sub-step of a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    VelocityPredict,
    Pressure,
    VelocityCorrect,
    Angular,
    Temperature,
    PassiveScalar,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::VelocityPredict => "velocity predictor",
            Stage::Pressure => "pressure",
            Stage::VelocityCorrect => "velocity correction",
            Stage::Angular => "microrotation",
            Stage::Temperature => "temperature",
            Stage::PassiveScalar => "passive scalar",
        })
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("final time must be positive and finite, got {0}")]
    InvalidFinalTime(f64),
    #[error("{field} data has the wrong number of components")]
    Components { field: &'static str },
    #[error("{stage} solve failed: {source}")]
    Solve {
        stage: Stage,
        #[source]
        source: LinalgError,
    },
    #[error("step {step} (t = {time:.6}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<SchemeError>,
    },
    #[error("non-finite {field} after step {step}")]
    NonFinite { field: &'static str, step: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl SchemeError {
    pub(crate) fn solve(stage: Stage, source: LinalgError) -> Self {
        SchemeError::Solve { stage, source }
    }

    /// Stage of the failing solve, looking through step wrappers.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            SchemeError::Solve { stage, .. } => Some(*stage),
            SchemeError::AtStep { source, .. } => source.stage(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        let p = PhysicalParams::new(0.1, 0.1, 1.0, 0.1);
        assert!(p.validate().is_ok());
        let bad = PhysicalParams { kappa: -1.0, ..p };
        assert!(matches!(bad.validate(), Err(SchemeError::InvalidParams(_))));
        let tilted = PhysicalParams { e: [1.0, 1.0], ..p };
        assert!(tilted.validate().is_err());
    }

    #[test]
    fn bdf_weights_are_consistent() {
        for s in [TimeScheme::BackwardEuler, TimeScheme::Bdf2] {
            // constants have zero derivative, linear functions are extrapolated exactly
            let (a0, hn, hp) = s.bdf();
            assert_eq!(a0 - hn - hp, 0.0);
            let (en, ep) = s.extrapolation();
            assert_eq!(en + ep, 1.0);
        }
        // BDF2 differentiates t^2 exactly: (3*4 - 4*1 + 0) / 2 = 4 = 2t at t = 2
        let (a0, hn, hp) = TimeScheme::Bdf2.bdf();
        assert_eq!(a0 * 4.0 - hn * 1.0 - hp * 0.0, 4.0);
    }
}
