//! Closed-form space-time fields used for initial data, boundary data,
//! forcing and exact solutions.

use std::fmt;
use std::sync::Arc;

type ValueFn = dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync;
type GradientFn = dyn Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync;

/// A scalar or 2-vector field `f(x, y, t)`, optionally with its spatial gradient.
///
/// Scalar fields store their value in component 0; the second slot is zero.
/// `gradient[c][d]` is the derivative of component `c` along axis `d`.
#[derive(Clone)]
pub struct Analytic {
    components: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl Analytic {
    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Analytic {
            components: 1,
            value: Arc::new(move |x, y, t| [f(x, y, t), 0.0]),
            gradient: None,
        }
    }

    pub fn vector<F>(f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static,
    {
        Analytic {
            components: 2,
            value: Arc::new(f),
            gradient: None,
        }
    }

    /// Attach a scalar gradient `(df/dx, df/dy)`.
    pub fn with_scalar_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static,
    {
        assert_eq!(self.components, 1, "scalar gradient on a vector field");
        self.gradient = Some(Arc::new(move |x, y, t| [g(x, y, t), [0.0, 0.0]]));
        self
    }

    /// Attach a vector gradient, `g[c][d] = d f_c / d x_d`.
    pub fn with_vector_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync + 'static,
    {
        assert_eq!(self.components, 2, "vector gradient on a scalar field");
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn zero_scalar() -> Self {
        Analytic::scalar(|_, _, _| 0.0).with_scalar_gradient(|_, _, _| [0.0, 0.0])
    }

    pub fn zero_vector() -> Self {
        Analytic::vector(|_, _, _| [0.0, 0.0]).with_vector_gradient(|_, _, _| [[0.0; 2]; 2])
    }

    pub fn constant_scalar(c: f64) -> Self {
        Analytic::scalar(move |_, _, _| c).with_scalar_gradient(|_, _, _| [0.0, 0.0])
    }

    pub fn constant_vector(c: [f64; 2]) -> Self {
        Analytic::vector(move |_, _, _| c).with_vector_gradient(|_, _, _| [[0.0; 2]; 2])
    }

    pub fn components(&self) -> usize {
        self.components
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        (self.value)(x, y, t)
    }

    #[inline]
    pub fn eval_scalar(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.value)(x, y, t)[0]
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: f64, y: f64, t: f64) -> Option<[[f64; 2]; 2]> {
        self.gradient.as_ref().map(|g| g(x, y, t))
    }
}

impl fmt::Debug for Analytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Analytic")
            .field("components", &self.components)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}
