//! Lagrange P1/P2 finite elements on triangles.

mod element;
mod function;
mod quadrature;
mod space;

use thiserror::Error;

pub(crate) use element::shape_eval_into;
pub use element::{shape_eval, ElementKind, ReferenceElement, ShapeValues};
pub use function::{eval_at_quadrature, interpolate, FeFunction, PointEval};
pub use quadrature::{default_quadrature, QuadratureRule};
pub use space::{build_space, ElementGeometry, FeSpace};

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("invalid barycentric point {0:?}: coordinates must be nonnegative and sum to 1")]
    InvalidBarycentric([f64; 3]),
    #[error("field has {found} components but the space has {expected}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("coefficient length {found} does not match the space dof count {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("analytic field has no gradient; H1 quantities need one")]
    MissingGradient,
}
