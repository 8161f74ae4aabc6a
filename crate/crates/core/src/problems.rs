//! Problem definitions: a manufactured accuracy test on the unit square, the
//! heated lid-driven cavity and the torque-driven stirring of a passive scalar.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::analytic::Analytic;
use crate::fem::FeFunction;
use crate::mesh::{BoundaryTag, Bounds, Mesh, MeshError};
use crate::scheme::{
    BoundaryConditions, Discretization, FieldBc, PhysicalParams, Prescription, SchemeError, Stage,
    TimeScheme,
};
use crate::sparse::{solve_with_guess, CsrMatrix};

/// Initial data or exact solution for the four unknowns.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub velocity: Analytic,
    pub pressure: Analytic,
    pub angular: Analytic,
    pub temperature: Analytic,
}

impl FieldSet {
    pub fn zero() -> Self {
        FieldSet {
            velocity: Analytic::zero_vector(),
            pressure: Analytic::zero_scalar(),
            angular: Analytic::zero_scalar(),
            temperature: Analytic::zero_scalar(),
        }
    }
}

/// Volume sources; `None` means zero.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub velocity: Option<Analytic>,
    pub angular: Option<Analytic>,
    pub temperature: Option<Analytic>,
}

#[derive(Debug, Clone)]
pub struct PassiveScalarSpec {
    pub initial: Analytic,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub bounds: Bounds,
    pub params: PhysicalParams,
    pub bc: BoundaryConditions,
    pub initial: FieldSet,
    pub forcing: Forcing,
    /// Present only for manufactured problems, whose forcing is derived from it.
    pub exact: Option<FieldSet>,
    pub passive: Option<PassiveScalarSpec>,
}

impl ProblemSpec {
    /// Structured mesh with cells of size `h` (rounded to whole subdivisions).
    pub fn mesh(&self, h: f64) -> Result<Arc<Mesh>, MeshError> {
        let nx = (self.bounds.width() / h).round().max(0.0) as usize;
        let ny = (self.bounds.height() / h).round().max(0.0) as usize;
        Ok(Arc::new(Mesh::build_structured_rect(nx, ny, self.bounds)?))
    }

    pub fn rayleigh(&self) -> f64 {
        self.params.rayleigh()
    }
}

/// Phases of the manufactured solution: `a = 2 pi x + t`, `b = 2 pi y + t`,
/// `c = 2 pi (x - y) + t`.
#[inline]
fn phases(x: f64, y: f64, t: f64) -> (f64, f64, f64) {
    (2.0 * PI * x + t, 2.0 * PI * y + t, 2.0 * PI * (x - y) + t)
}

/// Exact fields of the manufactured test, with gradients.
pub fn manufactured_exact() -> FieldSet {
    let tp = 2.0 * PI;
    let velocity = Analytic::vector(|x, y, t| {
        let (a, b, _) = phases(x, y, t);
        [a.sin() * b.sin(), a.cos() * b.cos()]
    })
    .with_vector_gradient(move |x, y, t| {
        let (a, b, _) = phases(x, y, t);
        [
            [tp * a.cos() * b.sin(), tp * a.sin() * b.cos()],
            [-tp * a.sin() * b.cos(), -tp * a.cos() * b.sin()],
        ]
    });
    let pressure =
        Analytic::scalar(|x, y, t| phases(x, y, t).2.sin()).with_scalar_gradient(move |x, y, t| {
            let c = phases(x, y, t).2.cos();
            [tp * c, -tp * c]
        });
    let angular = Analytic::scalar(|x, y, t| {
        let (a, b, _) = phases(x, y, t);
        a.sin() * b.sin()
    })
    .with_scalar_gradient(move |x, y, t| {
        let (a, b, _) = phases(x, y, t);
        [tp * a.cos() * b.sin(), tp * a.sin() * b.cos()]
    });
    let temperature = Analytic::scalar(|x, y, t| {
        let (a, b, _) = phases(x, y, t);
        a.cos() * b.cos()
    })
    .with_scalar_gradient(move |x, y, t| {
        let (a, b, _) = phases(x, y, t);
        [-tp * a.sin() * b.cos(), -tp * a.cos() * b.sin()]
    });
    FieldSet {
        velocity,
        pressure,
        angular,
        temperature,
    }
}

/// Sources that make [`manufactured_exact`] solve the full coupled system
/// with buoyancy direction `(0, 1)` and the couplings switched on.
pub fn manufactured_forcing(params: &PhysicalParams) -> Forcing {
    let (chi, mu, ups, zeta, kappa) = (
        params.chi,
        params.mu,
        params.upsilon,
        params.zeta,
        params.kappa,
    );
    let pi2 = PI * PI;
    let velocity = Analytic::vector(move |x, y, t| {
        let (a, b, c) = phases(x, y, t);
        let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
        [
            (a + b).sin()
                + PI * (2.0 * a).sin()
                + 8.0 * pi2 * (chi + mu) * sa * sb
                + 2.0 * PI * c.cos()
                - 4.0 * PI * chi * sa * cb,
            -(a + b).sin() - PI * (2.0 * b).sin() + 8.0 * pi2 * (chi + mu) * ca * cb
                - 2.0 * PI * c.cos()
                + 4.0 * PI * chi * ca * sb
                - ca * cb,
        ]
    });
    let angular = Analytic::scalar(move |x, y, t| {
        let (a, b, _) = phases(x, y, t);
        let (sa, sb, cb) = (a.sin(), b.sin(), b.cos());
        zeta * (a + b).sin()
            + zeta * PI * (2.0 * a).sin()
            + 8.0 * pi2 * ups * sa * sb
            + 4.0 * chi * sa * sb
            + 8.0 * PI * chi * sa * cb
    });
    let temperature = Analytic::scalar(move |x, y, t| {
        let (a, b, _) = phases(x, y, t);
        let (ca, cb) = (a.cos(), b.cos());
        -(a + b).sin() - PI * (2.0 * b).sin() + 8.0 * pi2 * kappa * ca * cb - ca * cb
    });
    Forcing {
        velocity: Some(velocity),
        angular: Some(angular),
        temperature: Some(temperature),
    }
}

/// Smooth manufactured solution on the unit square with exact Dirichlet data
/// for `u`, `omega`, `theta` on every side.
pub fn manufactured_2d(params: PhysicalParams) -> ProblemSpec {
    let exact = manufactured_exact();
    ProblemSpec {
        name: "manufactured",
        bounds: Bounds::UNIT_SQUARE,
        forcing: manufactured_forcing(&params),
        params,
        bc: BoundaryConditions {
            velocity: FieldBc::dirichlet_everywhere(exact.velocity.clone()),
            angular: FieldBc::dirichlet_everywhere(exact.angular.clone()),
            temperature: FieldBc::dirichlet_everywhere(exact.temperature.clone()),
        },
        initial: exact.clone(),
        exact: Some(exact),
        passive: None,
    }
}

/// Lid-driven cavity heated from the right wall.
///
/// The lid value `(1, 0)` also holds at the two top corners.
pub fn cavity_2d(chi: f64, mu: f64, kappa: f64, upsilon: f64) -> ProblemSpec {
    let params = PhysicalParams::new(upsilon, chi, mu, kappa);
    let wall = || Prescription::Dirichlet(Analytic::zero_vector());
    let velocity = FieldBc::uniform(wall())
        .with(
            BoundaryTag::Top,
            Prescription::Dirichlet(Analytic::constant_vector([1.0, 0.0])),
        )
        .with_precedence([
            BoundaryTag::Bottom,
            BoundaryTag::Left,
            BoundaryTag::Right,
            BoundaryTag::Top,
        ]);
    let temperature = FieldBc::homogeneous_neumann()
        .with(
            BoundaryTag::Left,
            Prescription::Dirichlet(Analytic::constant_scalar(0.0)),
        )
        .with(
            BoundaryTag::Right,
            Prescription::Dirichlet(Analytic::constant_scalar(1.0)),
        );
    ProblemSpec {
        name: "cavity",
        bounds: Bounds::UNIT_SQUARE,
        params,
        bc: BoundaryConditions {
            velocity,
            angular: FieldBc::dirichlet_everywhere(Analytic::zero_scalar()),
            temperature,
        },
        initial: FieldSet::zero(),
        forcing: Forcing::default(),
        exact: None,
        passive: None,
    }
}

/// Applied torque of the stirring test.
pub fn stirring_torque() -> Analytic {
    Analytic::scalar(|x, _, _| 25.0 * (x - 1.0))
}

/// Initial interface profile `0.5 (1 - tanh(y / delta))`.
pub fn stirring_interface(delta: f64) -> Analytic {
    Analytic::scalar(move |_, y, _| 0.5 * (1.0 - (y / delta).tanh()))
}

/// Torque-driven flow on `(-1, 1)^2` carrying a passive scalar whose initial
/// interface width is half the cell size `h`.
pub fn stirring_2d(h: f64) -> ProblemSpec {
    let params = PhysicalParams::new(2.0, 0.1, 0.1, 1.0);
    ProblemSpec {
        name: "stir",
        bounds: Bounds::new(-1.0, 1.0, -1.0, 1.0),
        params,
        bc: BoundaryConditions {
            velocity: FieldBc::dirichlet_everywhere(Analytic::zero_vector()),
            angular: FieldBc::dirichlet_everywhere(Analytic::zero_scalar()),
            temperature: FieldBc::homogeneous_neumann(),
        },
        initial: FieldSet::zero(),
        forcing: Forcing {
            angular: Some(stirring_torque()),
            ..Forcing::default()
        },
        exact: None,
        passive: Some(PassiveScalarSpec {
            initial: stirring_interface(0.5 * h),
        }),
    }
}

/// Two time levels of the transported scalar.
#[derive(Debug, Clone)]
pub struct PassiveScalarState {
    pub phi: FeFunction,
    pub phi_prev: FeFunction,
}

/// Clamp every coefficient into `[0, 1]`.
pub fn clamp_unit(coeffs: &mut [f64]) {
    for c in coeffs {
        *c = c.clamp(0.0, 1.0);
    }
}

/// One limited Galerkin advection step `[(a0/dt) M + C] phi = M hist / dt`.
///
/// `convection` is the scalar convection matrix of the extrapolated wind.
pub fn step_scalar(
    disc: &Discretization,
    state: &PassiveScalarState,
    convection: &CsrMatrix,
    scheme: TimeScheme,
    dt: f64,
) -> Result<FeFunction, SchemeError> {
    let (a0, hn, hp) = scheme.bdf();
    let mass = disc.scalar_mass();
    let a = CsrMatrix::linear_combination(&[(a0 / dt, mass), (1.0, convection)])?;
    let hist: Vec<f64> = state
        .phi
        .coeffs()
        .iter()
        .zip(state.phi_prev.coeffs())
        .map(|(n, p)| (hn * n + hp * p) / dt)
        .collect();
    let b = mass.spmv(&hist)?;
    let sol = solve_with_guess(&a, &b, state.phi.coeffs(), &disc.solvers().nonsymmetric)
        .map_err(|e| SchemeError::solve(Stage::PassiveScalar, e))?;
    let mut x = sol.x;
    clamp_unit(&mut x);
    Ok(FeFunction::from_coeffs(state.phi.space(), x)?)
}
