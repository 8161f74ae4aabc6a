use std::sync::Arc;

use super::{FieldBc, SchemeError, SolverSettings};
use crate::assembly::{mass_matrix, stiffness_matrix};
use crate::fem::{build_space, ElementKind, FeSpace};
use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::sparse::CsrMatrix;

/// P2 velocity, P1 pressure and P2 microrotation/temperature spaces on one
/// mesh, with every time-independent matrix.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Arc<Mesh>,
    velocity: Arc<FeSpace>,
    pressure: Arc<FeSpace>,
    scalar: Arc<FeSpace>,
    scalar_mass: CsrMatrix,
    scalar_stiffness: CsrMatrix,
    velocity_mass: CsrMatrix,
    velocity_stiffness: CsrMatrix,
    pressure_mass: CsrMatrix,
    pressure_stiffness: CsrMatrix,
    pressure_weights: Vec<f64>,
    pressure_basis_norms: Vec<f64>,
    /// `int div(phi_i)` for every velocity dof.
    flux_weights: Vec<f64>,
    solvers: SolverSettings,
}

impl Discretization {
    pub fn new(mesh: &Arc<Mesh>, problem: &ProblemSpec) -> Result<Self, SchemeError> {
        problem.params.validate()?;
        let bc = &problem.bc;
        if !bc.velocity.components_ok(2) {
            return Err(SchemeError::Components {
                field: "velocity boundary",
            });
        }
        if !bc.angular.components_ok(1) || !bc.temperature.components_ok(1) {
            return Err(SchemeError::Components {
                field: "scalar boundary",
            });
        }
        let velocity = build_space(mesh, ElementKind::P2, 2);
        let pressure = build_space(mesh, ElementKind::P1, 1);
        let scalar = build_space(mesh, ElementKind::P2, 1);
        let scalar_mass = mass_matrix(&scalar);
        let scalar_stiffness = stiffness_matrix(&scalar, 1.0);
        let pressure_mass = mass_matrix(&pressure);
        let pressure_stiffness = stiffness_matrix(&pressure, 1.0);
        let pressure_weights = pressure_mass.row_sums();
        let pressure_basis_norms = pressure_mass.diagonal().iter().map(|d| d.sqrt()).collect();
        let flux_weights = divergence_weights(&velocity);
        Ok(Discretization {
            mesh: mesh.clone(),
            velocity_mass: scalar_mass.block_diag2(),
            velocity_stiffness: scalar_stiffness.block_diag2(),
            velocity,
            pressure,
            scalar,
            scalar_mass,
            scalar_stiffness,
            pressure_mass,
            pressure_stiffness,
            pressure_weights,
            pressure_basis_norms,
            flux_weights,
            solvers: SolverSettings::default(),
        })
    }

    pub fn with_solvers(mut self, solvers: SolverSettings) -> Self {
        self.solvers = solvers;
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn velocity_space(&self) -> &Arc<FeSpace> {
        &self.velocity
    }

    pub fn pressure_space(&self) -> &Arc<FeSpace> {
        &self.pressure
    }

    /// Space of the microrotation, temperature and passive scalar.
    pub fn scalar_space(&self) -> &Arc<FeSpace> {
        &self.scalar
    }

    pub fn scalar_mass(&self) -> &CsrMatrix {
        &self.scalar_mass
    }

    pub fn scalar_stiffness(&self) -> &CsrMatrix {
        &self.scalar_stiffness
    }

    pub fn velocity_mass(&self) -> &CsrMatrix {
        &self.velocity_mass
    }

    pub fn velocity_stiffness(&self) -> &CsrMatrix {
        &self.velocity_stiffness
    }

    pub fn pressure_mass(&self) -> &CsrMatrix {
        &self.pressure_mass
    }

    pub fn pressure_stiffness(&self) -> &CsrMatrix {
        &self.pressure_stiffness
    }

    /// `int q_i`, the weights of the zero-mean gauge.
    pub fn pressure_weights(&self) -> &[f64] {
        &self.pressure_weights
    }

    /// `||q_i||_0` for every pressure basis function.
    pub fn pressure_basis_norms(&self) -> &[f64] {
        &self.pressure_basis_norms
    }

    pub fn solvers(&self) -> &SolverSettings {
        &self.solvers
    }

    /// Velocity Dirichlet data at `t`.
    ///
    /// When the whole boundary is Dirichlet the nodal data is shifted by a
    /// multiple of the flux weights so that `int div u = 0` holds exactly for
    /// every discrete field taking these values, which keeps the pure
    /// Neumann pressure problem solvable.
    pub fn velocity_dirichlet(&self, bc: &FieldBc, t: f64) -> (Vec<usize>, Vec<f64>) {
        let (dofs, mut values) = bc.dirichlet_data(&self.velocity, t);
        if bc.fully_dirichlet() {
            let (mut flux, mut norm2) = (0.0, 0.0);
            for (&d, &v) in dofs.iter().zip(&values) {
                let w = self.flux_weights[d];
                flux += w * v;
                norm2 += w * w;
            }
            if norm2 > 0.0 && flux != 0.0 {
                let s = flux / norm2;
                for (&d, v) in dofs.iter().zip(values.iter_mut()) {
                    *v -= s * self.flux_weights[d];
                }
            }
        }
        (dofs, values)
    }

    /// `int div v` for the given velocity coefficients.
    pub fn net_flux(&self, coeffs: &[f64]) -> f64 {
        self.flux_weights
            .iter()
            .zip(coeffs)
            .map(|(w, c)| w * c)
            .sum()
    }
}

fn divergence_weights(space: &FeSpace) -> Vec<f64> {
    let ns = space.scalar_dof_count();
    let mut w = vec![0.0; space.dof_count()];
    let mut g = [[0.0; 2]; 6];
    for e in 0..space.element_count() {
        let dofs = space.element_dofs(e);
        for q in 0..space.quadrature().len() {
            space.basis_grads(e, q, &mut g);
            let jw = space.jxw(e, q);
            for (i, &d) in dofs.iter().enumerate() {
                w[d] += jw * g[i][0];
                w[ns + d] += jw * g[i][1];
            }
        }
    }
    w
}
