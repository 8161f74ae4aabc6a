use std::sync::Arc;

use super::element::shape_eval_into;
use super::quadrature::QuadratureRule;
use super::space::FeSpace;
use super::FemError;
use crate::analytic::Analytic;

/// A finite-element field: one coefficient per global dof of `space`.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

/// Value and physical gradient of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub x: [f64; 2],
    pub value: [f64; 2],
    /// `grad[c][d]`: derivative of component `c` along axis `d`.
    pub grad: [[f64; 2]; 2],
}

impl FeFunction {
    pub fn zeros(space: &Arc<FeSpace>) -> Self {
        FeFunction {
            space: space.clone(),
            coeffs: vec![0.0; space.dof_count()],
        }
    }

    pub fn from_coeffs(space: &Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self, FemError> {
        if coeffs.len() != space.dof_count() {
            return Err(FemError::LengthMismatch {
                expected: space.dof_count(),
                found: coeffs.len(),
            });
        }
        Ok(FeFunction {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Scalar coefficients of component `c`.
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.space.scalar_dof_count();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// `a * self + b * other` on the same space.
    pub fn combine(&self, a: f64, other: &FeFunction, b: f64) -> FeFunction {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        FeFunction {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Values and physical gradients on element `e` at every point of the
    /// space's default quadrature rule.
    pub fn eval_element(
        &self,
        e: usize,
        values: &mut Vec<[f64; 2]>,
        grads: &mut Vec<[[f64; 2]; 2]>,
    ) {
        let s = &*self.space;
        let nq = s.quadrature().len();
        let ns = s.scalar_dof_count();
        let dofs = s.element_dofs(e);
        values.clear();
        grads.clear();
        let mut g = [[0.0; 2]; 6];
        for q in 0..nq {
            let phi = s.basis_values(q);
            s.basis_grads(e, q, &mut g);
            let mut v = [0.0; 2];
            let mut gr = [[0.0; 2]; 2];
            for c in 0..s.components() {
                for (i, &d) in dofs.iter().enumerate() {
                    let coef = self.coeffs[c * ns + d];
                    v[c] += coef * phi[i];
                    gr[c][0] += coef * g[i][0];
                    gr[c][1] += coef * g[i][1];
                }
            }
            values.push(v);
            grads.push(gr);
        }
    }
}

/// Nodal interpolation of `f(., ., t)` onto `space`.
pub fn interpolate(space: &Arc<FeSpace>, f: &Analytic, t: f64) -> Result<FeFunction, FemError> {
    if f.components() != space.components() {
        return Err(FemError::ComponentMismatch {
            expected: space.components(),
            found: f.components(),
        });
    }
    let ns = space.scalar_dof_count();
    let mut coeffs = vec![0.0; space.dof_count()];
    for (d, p) in space.dof_coords().iter().enumerate() {
        let v = f.eval(p[0], p[1], t);
        for c in 0..space.components() {
            coeffs[c * ns + d] = v[c];
        }
    }
    Ok(FeFunction {
        space: space.clone(),
        coeffs,
    })
}

/// Evaluate `fh` on triangle `tri` at every point of `rule`.
pub fn eval_at_quadrature(fh: &FeFunction, tri: usize, rule: &QuadratureRule) -> Vec<PointEval> {
    let s = &**fh.space();
    let n = s.local_dofs();
    let ns = s.scalar_dof_count();
    let geo = s.geometry(tri);
    let dofs = s.element_dofs(tri);
    let mut vals = [0.0; 6];
    let mut rgrads = [[0.0; 2]; 6];
    rule.points
        .iter()
        .map(|&p| {
            shape_eval_into(s.kind(), p, &mut vals[..n], &mut rgrads[..n]);
            let mut out = PointEval {
                x: geo.map(p),
                value: [0.0; 2],
                grad: [[0.0; 2]; 2],
            };
            for c in 0..s.components() {
                for i in 0..n {
                    let coef = fh.coeffs[c * ns + dofs[i]];
                    let g = geo.physical_grad(rgrads[i]);
                    out.value[c] += coef * vals[i];
                    out.grad[c][0] += coef * g[0];
                    out.grad[c][1] += coef * g[1];
                }
            }
            out
        })
        .collect()
}
