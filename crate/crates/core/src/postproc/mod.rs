//! Error norms, convergence tables, CSV and legacy VTK output.

mod export;

use thiserror::Error;

use crate::analytic::Analytic;
use crate::fem::{FeFunction, FemError};
use crate::scheme::SchemeState;

pub use export::{
    export_energy_csv, export_vtk, read_csv, vertex_values, write_convergence_csv, VtkField,
};

#[derive(Debug, Error)]
pub enum PostprocError {
    #[error("need at least two rows to compute rates, got {0}")]
    TooFewRows(usize),
    #[error("mesh sizes must strictly decrease: 1/h = {previous} followed by {current}")]
    NonMonotone { previous: f64, current: f64 },
    #[error("field {name} has {found} vertex values, mesh has {expected} nodes")]
    FieldLength {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// `(int (fh - f)^2)^(1/2)`, optionally after removing both means.
fn l2_impl(fh: &FeFunction, exact: &Analytic, t: f64, align: bool) -> Result<f64, FemError> {
    let s = fh.space();
    if exact.components() != s.components() {
        return Err(FemError::ComponentMismatch {
            expected: s.components(),
            found: exact.components(),
        });
    }
    let nq = s.quadrature().len();
    let pts = &s.quadrature().points;
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut diffs = Vec::with_capacity(s.element_count() * nq);
    let mut weights = Vec::with_capacity(s.element_count() * nq);
    for e in 0..s.element_count() {
        fh.eval_element(e, &mut vals, &mut grads);
        let geo = s.geometry(e);
        for q in 0..nq {
            let x = geo.map(pts[q]);
            let f = exact.eval(x[0], x[1], t);
            diffs.push([vals[q][0] - f[0], vals[q][1] - f[1]]);
            weights.push(s.jxw(e, q));
        }
    }
    let nc = s.components();
    let mut shift = [0.0; 2];
    if align {
        let area: f64 = weights.iter().sum();
        for c in 0..nc {
            shift[c] = diffs
                .iter()
                .zip(&weights)
                .map(|(d, w)| d[c] * w)
                .sum::<f64>()
                / area;
        }
    }
    let mut sum = 0.0;
    for (d, w) in diffs.iter().zip(&weights) {
        for c in 0..nc {
            let v = d[c] - shift[c];
            sum += w * v * v;
        }
    }
    Ok(sum.sqrt())
}

pub fn l2_error(fh: &FeFunction, exact: &Analytic, t: f64) -> Result<f64, FemError> {
    l2_impl(fh, exact, t, false)
}

/// L2 error of a pressure, invariant under constant shifts of either field.
pub fn l2_error_mean_aligned(fh: &FeFunction, exact: &Analytic, t: f64) -> Result<f64, FemError> {
    l2_impl(fh, exact, t, true)
}

/// `|fh - f|_1`, the exact field must carry its gradient.
pub fn h1_error(fh: &FeFunction, exact: &Analytic, t: f64) -> Result<f64, FemError> {
    let s = fh.space();
    if exact.components() != s.components() {
        return Err(FemError::ComponentMismatch {
            expected: s.components(),
            found: exact.components(),
        });
    }
    if !exact.has_gradient() {
        return Err(FemError::MissingGradient);
    }
    let pts = &s.quadrature().points;
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut sum = 0.0;
    for e in 0..s.element_count() {
        fh.eval_element(e, &mut vals, &mut grads);
        let geo = s.geometry(e);
        for (q, gq) in grads.iter().enumerate() {
            let x = geo.map(pts[q]);
            let g = exact.gradient(x[0], x[1], t).expect("checked above");
            let w = s.jxw(e, q);
            for c in 0..s.components() {
                for d in 0..2 {
                    let v = gq[c][d] - g[c][d];
                    sum += w * v * v;
                }
            }
        }
    }
    Ok(sum.sqrt())
}

/// `||fh||_0`.
pub fn l2_norm(fh: &FeFunction) -> f64 {
    let s = fh.space();
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut sum = 0.0;
    for e in 0..s.element_count() {
        fh.eval_element(e, &mut vals, &mut grads);
        for (q, v) in vals.iter().enumerate() {
            sum += s.jxw(e, q) * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    sum.sqrt()
}

/// `||u^{n+1} - u^n||_0 / dt`.
pub fn steady_state_residual(state: &SchemeState) -> f64 {
    l2_norm(&state.u.combine(1.0, &state.u_prev, -1.0)) / state.dt
}

/// Errors of one resolution, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub u_l2: f64,
    pub u_h1: f64,
    pub p_l2: f64,
    pub w_l2: f64,
    pub w_h1: f64,
    pub t_l2: f64,
    pub t_h1: f64,
}

impl FieldErrors {
    pub const NAMES: [&'static str; 7] = ["u_l2", "u_h1", "p_l2", "w_l2", "w_h1", "t_l2", "t_h1"];

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.u_l2, self.u_h1, self.p_l2, self.w_l2, self.w_h1, self.t_l2, self.t_h1,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        FieldErrors {
            u_l2: a[0],
            u_h1: a[1],
            p_l2: a[2],
            w_l2: a[3],
            w_h1: a[4],
            t_l2: a[5],
            t_h1: a[6],
        }
    }
}

/// Errors of the final state of a manufactured run against the exact fields.
pub fn field_errors(
    state: &SchemeState,
    exact: &crate::problems::FieldSet,
) -> Result<FieldErrors, FemError> {
    let t = state.time;
    Ok(FieldErrors {
        u_l2: l2_error(&state.u, &exact.velocity, t)?,
        u_h1: h1_error(&state.u, &exact.velocity, t)?,
        p_l2: l2_error_mean_aligned(&state.p, &exact.pressure, t)?,
        w_l2: l2_error(&state.omega, &exact.angular, t)?,
        w_h1: h1_error(&state.omega, &exact.angular, t)?,
        t_l2: l2_error(&state.theta, &exact.temperature, t)?,
        t_h1: h1_error(&state.theta, &exact.temperature, t)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub one_over_h: f64,
    pub errors: FieldErrors,
    /// Observed orders against the previous row; `None` on the first row.
    pub rates: Option<FieldErrors>,
}

impl ConvergenceRow {
    pub fn new(one_over_h: f64, errors: FieldErrors) -> Self {
        ConvergenceRow {
            one_over_h,
            errors,
            rates: None,
        }
    }
}

/// Fill in `log(e_prev / e_cur) / log(h_prev / h_cur)` for consecutive rows.
pub fn rates(rows: &[ConvergenceRow]) -> Result<Vec<ConvergenceRow>, PostprocError> {
    if rows.len() < 2 {
        return Err(PostprocError::TooFewRows(rows.len()));
    }
    for w in rows.windows(2) {
        if !(w[1].one_over_h > w[0].one_over_h) {
            return Err(PostprocError::NonMonotone {
                previous: w[0].one_over_h,
                current: w[1].one_over_h,
            });
        }
    }
    let mut out = rows.to_vec();
    out[0].rates = None;
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        // h_prev / h_cur = (1/h_cur) / (1/h_prev)
        let lh = (cur.one_over_h / prev.one_over_h).ln();
        let ep = prev.errors.to_array();
        let ec = cur.errors.to_array();
        let mut r = [0.0; 7];
        for k in 0..7 {
            r[k] = (ep[k] / ec[k]).ln() / lh;
        }
        out[i].rates = Some(FieldErrors::from_array(r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::fem::{build_space, interpolate, ElementKind, FeSpace};
    use crate::mesh::Mesh;

    fn space(kind: ElementKind, comps: usize) -> Arc<FeSpace> {
        let m = Arc::new(Mesh::unit_square(4).unwrap());
        build_space(&m, kind, comps)
    }

    fn quad_field() -> Analytic {
        Analytic::scalar(|x, y, _| x * x - 2.0 * x * y + 0.5)
            .with_scalar_gradient(|x, y, _| [2.0 * x - 2.0 * y, -2.0 * x])
    }

    #[test]
    fn reproduced_polynomials_have_zero_error() {
        let s = space(ElementKind::P2, 1);
        let f = quad_field();
        let fh = interpolate(&s, &f, 0.0).unwrap();
        assert!(l2_error(&fh, &f, 0.0).unwrap() < 1e-13);
        assert!(h1_error(&fh, &f, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn simple_norms() {
        let s = space(ElementKind::P1, 1);
        let zero = FeFunction::zeros(&s);
        assert!(
            (l2_error(&zero, &Analytic::constant_scalar(1.0), 0.0).unwrap() - 1.0).abs() < 1e-14
        );
        let x = Analytic::scalar(|x, _, _| x).with_scalar_gradient(|_, _, _| [1.0, 0.0]);
        assert!((h1_error(&zero, &x, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let c = interpolate(&s, &Analytic::constant_scalar(2.0), 0.0).unwrap();
        assert!(h1_error(&c, &Analytic::constant_scalar(2.0), 0.0).unwrap() == 0.0);
        assert_eq!(
            h1_error(&zero, &Analytic::scalar(|x, _, _| x), 0.0).unwrap_err(),
            FemError::MissingGradient
        );
    }

    #[test]
    fn pressure_error_ignores_constants() {
        let s = space(ElementKind::P1, 1);
        let f = Analytic::scalar(|x, y, _| (3.0 * x).sin() * y);
        let fh = interpolate(&s, &f, 0.0).unwrap();
        let shifted = interpolate(
            &s,
            &Analytic::scalar(|x, y, _| (3.0 * x).sin() * y + 5.0),
            0.0,
        )
        .unwrap();
        let a = l2_error_mean_aligned(&fh, &f, 0.0).unwrap();
        let b = l2_error_mean_aligned(&shifted, &f, 0.0).unwrap();
        let c = l2_error_mean_aligned(
            &fh,
            &Analytic::scalar(|x, y, _| (3.0 * x).sin() * y - 1.0),
            0.0,
        )
        .unwrap();
        assert!((a - b).abs() < 1e-13 && (a - c).abs() < 1e-13);
        assert!(a > 0.0);
    }

    #[test]
    fn rate_formula() {
        let mk = |n: f64, e: f64| ConvergenceRow::new(n, FieldErrors::from_array([e; 7]));
        let r = rates(&[mk(8.0, 1e-2), mk(16.0, 1.25e-3)]).unwrap();
        assert!(r[0].rates.is_none());
        assert!((r[1].rates.unwrap().u_l2 - 3.0).abs() < 1e-12);
        let r = rates(&[mk(8.0, 1e-2), mk(16.0, 1e-2)]).unwrap();
        assert_eq!(r[1].rates.unwrap().t_h1, 0.0);
        assert!(matches!(
            rates(&[mk(16.0, 1.0), mk(8.0, 1.0)]),
            Err(PostprocError::NonMonotone { .. })
        ));
        assert!(matches!(
            rates(&[mk(8.0, 1.0)]),
            Err(PostprocError::TooFewRows(1))
        ));
    }

    #[test]
    fn steady_residual_of_identical_levels() {
        use crate::problems::cavity_2d;
        use crate::scheme::{initialize, Discretization};
        let p = cavity_2d(0.1, 0.1, 0.01, 1.0);
        let m = p.mesh(0.25).unwrap();
        let d = Discretization::new(&m, &p).unwrap();
        let (mut s, _) = initialize(&d, &p, 0.01).unwrap();
        assert!(steady_state_residual(&s) > 0.0);
        s.u_prev = s.u.clone();
        assert_eq!(steady_state_residual(&s), 0.0);
        s.u = FeFunction::zeros(d.velocity_space());
        s.u_prev = s.u.clone();
        assert_eq!(steady_state_residual(&s), 0.0);
    }

    proptest! {
        #[test]
        fn l2_error_is_a_norm(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            // d(f, g) = ||f_h - g|| with g exact: triangle inequality through a third field
            let s = space(ElementKind::P2, 1);
            let f = interpolate(&s, &Analytic::scalar(move |x, y, _| a * x + b * y * y), 0.0).unwrap();
            let g = interpolate(&s, &Analytic::scalar(move |x, y, _| c * x * y), 0.0).unwrap();
            let zero = Analytic::zero_scalar();
            let nf = l2_error(&f, &zero, 0.0).unwrap();
            let ng = l2_error(&g, &zero, 0.0).unwrap();
            let nfg = l2_error(&f.combine(1.0, &g, 1.0), &zero, 0.0).unwrap();
            prop_assert!(nf >= 0.0 && ng >= 0.0);
            prop_assert!(nfg <= nf + ng + 1e-12);
            let self_err = l2_error(&f, &Analytic::scalar(move |x, y, _| a * x + b * y * y), 0.0).unwrap();
            prop_assert!(self_err < 1e-13);
        }
    }
}
