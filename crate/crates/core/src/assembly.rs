//! Bilinear forms and load vectors.
//!
//! Matrices are assembled element by element, in element order, into a
//! fixed sparsity pattern, so repeated assembly is bit-reproducible. Vector
//! spaces get block-diagonal operators (component-blocked dof numbering).
//!
//! 2D curl conventions: a scalar `w` maps to the vector `(dw/dy, -dw/dx)` and
//! a vector `u` to the scalar `du2/dx - du1/dy`. With these signs
//! `(curl w, v) = (w, curl v)` for `v` vanishing on the boundary.

use crate::analytic::Analytic;
use crate::fem::{FeFunction, FeSpace, FemError};
use crate::sparse::CsrMatrix;

fn check_mesh(a: &FeSpace, b: &FeFunction) -> Result<(), FemError> {
    if a.same_mesh(b.space()) {
        Ok(())
    } else {
        Err(FemError::MeshMismatch)
    }
}

fn check_components(f: &FeFunction, expected: usize) -> Result<(), FemError> {
    let found = f.space().components();
    if found == expected {
        Ok(())
    } else {
        Err(FemError::ComponentMismatch { expected, found })
    }
}

fn lift(space: &FeSpace, scalar: CsrMatrix) -> CsrMatrix {
    if space.components() == 2 {
        scalar.block_diag2()
    } else {
        scalar
    }
}

/// Assemble a symmetric scalar form from its per-point integrand.
fn assemble_symmetric<F>(space: &FeSpace, mut local: F) -> CsrMatrix
where
    F: FnMut(usize, usize, &mut [[f64; 6]; 6]),
{
    let mut m = space.scalar_pattern().clone();
    let n = space.local_dofs();
    for e in 0..space.element_count() {
        let mut k = [[0.0; 6]; 6];
        for q in 0..space.quadrature().len() {
            local(e, q, &mut k);
        }
        let dofs = space.element_dofs(e);
        for i in 0..n {
            for j in 0..n {
                // mirror the upper triangle so the element matrix is exactly symmetric
                let v = if j >= i { k[i][j] } else { k[j][i] };
                m.add_at(dofs[i], dofs[j], v);
            }
        }
    }
    m
}

/// `(phi_j, phi_i)`.
pub fn mass_matrix(space: &FeSpace) -> CsrMatrix {
    let n = space.local_dofs();
    let scalar = assemble_symmetric(space, |e, q, k| {
        let phi = space.basis_values(q);
        let w = space.jxw(e, q);
        for i in 0..n {
            for j in i..n {
                k[i][j] += w * phi[i] * phi[j];
            }
        }
    });
    lift(space, scalar)
}

/// `coeff * (grad phi_j, grad phi_i)`.
pub fn stiffness_matrix(space: &FeSpace, coeff: f64) -> CsrMatrix {
    let n = space.local_dofs();
    let mut g = [[0.0; 2]; 6];
    let scalar = assemble_symmetric(space, |e, q, k| {
        space.basis_grads(e, q, &mut g);
        let w = coeff * space.jxw(e, q);
        for i in 0..n {
            for j in i..n {
                k[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    });
    lift(space, scalar)
}

/// Skew-symmetric convection `C = (C1 - C1^T) / 2` with
/// `(C1)_ij = ((wind . grad) phi_j, phi_i)`.
///
/// Antisymmetrisation happens per element and contributions are added in
/// element order, so `C + C^T` is exactly zero.
pub fn convection_matrix(space: &FeSpace, wind: &FeFunction) -> Result<CsrMatrix, FemError> {
    check_mesh(space, wind)?;
    check_components(wind, 2)?;
    let mut m = space.scalar_pattern().clone();
    let n = space.local_dofs();
    let mut g = [[0.0; 2]; 6];
    let (mut wv, mut wg) = (Vec::new(), Vec::new());
    for e in 0..space.element_count() {
        wind.eval_element(e, &mut wv, &mut wg);
        let mut c1 = [[0.0; 6]; 6];
        for q in 0..space.quadrature().len() {
            let phi = space.basis_values(q);
            space.basis_grads(e, q, &mut g);
            let w = space.jxw(e, q);
            let [a, b] = wv[q];
            for j in 0..n {
                let adv = w * (a * g[j][0] + b * g[j][1]);
                for i in 0..n {
                    c1[i][j] += adv * phi[i];
                }
            }
        }
        let dofs = space.element_dofs(e);
        for i in 0..n {
            for j in 0..n {
                m.add_at(dofs[i], dofs[j], 0.5 * (c1[i][j] - c1[j][i]));
            }
        }
    }
    Ok(lift(space, m))
}

/// `b_i = int g . phi_i`, where `integrand(e, q)` gives `g` at point `q` of
/// element `e`, one entry per component of `space`.
fn assemble_load<F>(space: &FeSpace, mut integrand: F) -> Vec<f64>
where
    F: FnMut(usize, usize) -> [f64; 2],
{
    let ns = space.scalar_dof_count();
    let mut b = vec![0.0; space.dof_count()];
    for e in 0..space.element_count() {
        let dofs = space.element_dofs(e);
        for q in 0..space.quadrature().len() {
            let g = integrand(e, q);
            let w = space.jxw(e, q);
            let phi = space.basis_values(q);
            for c in 0..space.components() {
                let wc = w * g[c];
                for (i, &d) in dofs.iter().enumerate() {
                    b[c * ns + d] += wc * phi[i];
                }
            }
        }
    }
    b
}

/// Load whose integrand depends on one field's values and gradients.
fn field_load<F>(space: &FeSpace, field: &FeFunction, f: F) -> Vec<f64>
where
    F: Fn([f64; 2], [[f64; 2]; 2]) -> [f64; 2],
{
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut cached = usize::MAX;
    assemble_load(space, |e, q| {
        if cached != e {
            field.eval_element(e, &mut vals, &mut grads);
            cached = e;
        }
        f(vals[q], grads[q])
    })
}

/// `factor * ((dw/dy, -dw/dx), v_i)` for scalar `omega`, vector test space.
pub fn curl_scalar_to_vector_rhs(
    vspace: &FeSpace,
    omega: &FeFunction,
    factor: f64,
) -> Result<Vec<f64>, FemError> {
    check_mesh(vspace, omega)?;
    check_components(omega, 1)?;
    if vspace.components() != 2 {
        return Err(FemError::ComponentMismatch {
            expected: 2,
            found: vspace.components(),
        });
    }
    Ok(field_load(vspace, omega, |_, g| {
        [factor * g[0][1], -factor * g[0][0]]
    }))
}

/// `factor * (du2/dx - du1/dy, lambda_i)` for vector `u`, scalar test space.
pub fn curl_vector_to_scalar_rhs(
    wspace: &FeSpace,
    u: &FeFunction,
    factor: f64,
) -> Result<Vec<f64>, FemError> {
    check_mesh(wspace, u)?;
    check_components(u, 2)?;
    if wspace.components() != 1 {
        return Err(FemError::ComponentMismatch {
            expected: 1,
            found: wspace.components(),
        });
    }
    Ok(field_load(wspace, u, |_, g| {
        [factor * (g[1][0] - g[0][1]), 0.0]
    }))
}

/// `(grad p, v_i)`.
pub fn grad_pressure_rhs(vspace: &FeSpace, p: &FeFunction) -> Result<Vec<f64>, FemError> {
    check_mesh(vspace, p)?;
    check_components(p, 1)?;
    if vspace.components() != 2 {
        return Err(FemError::ComponentMismatch {
            expected: 2,
            found: vspace.components(),
        });
    }
    Ok(field_load(vspace, p, |_, g| g[0]))
}

/// `(div u, q_i)`.
pub fn div_velocity_rhs(pspace: &FeSpace, u: &FeFunction) -> Result<Vec<f64>, FemError> {
    check_mesh(pspace, u)?;
    check_components(u, 2)?;
    Ok(field_load(pspace, u, |_, g| [g[0][0] + g[1][1], 0.0]))
}

/// `(theta e, v_i)`.
pub fn buoyancy_rhs(
    vspace: &FeSpace,
    theta: &FeFunction,
    e: [f64; 2],
) -> Result<Vec<f64>, FemError> {
    check_mesh(vspace, theta)?;
    check_components(theta, 1)?;
    Ok(field_load(vspace, theta, |v, _| [v[0] * e[0], v[0] * e[1]]))
}

/// `(u . e, psi_i)`.
pub fn velocity_dot_e_rhs(
    tspace: &FeSpace,
    u: &FeFunction,
    e: [f64; 2],
) -> Result<Vec<f64>, FemError> {
    check_mesh(tspace, u)?;
    check_components(u, 2)?;
    Ok(field_load(tspace, u, |v, _| {
        [v[0] * e[0] + v[1] * e[1], 0.0]
    }))
}

/// `(f(., t), phi_i)` by quadrature.
pub fn source_rhs(space: &FeSpace, f: &Analytic, t: f64) -> Result<Vec<f64>, FemError> {
    if f.components() != space.components() {
        return Err(FemError::ComponentMismatch {
            expected: space.components(),
            found: f.components(),
        });
    }
    let pts: Vec<[f64; 3]> = space.quadrature().points.clone();
    Ok(assemble_load(space, |e, q| {
        let x = space.geometry(e).map(pts[q]);
        f.eval(x[0], x[1], t)
    }))
}
