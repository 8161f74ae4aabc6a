use super::{CsrMatrix, LinalgError};
use crate::fem::FeFunction;

/// Impose `x[dofs[k]] = values[k]` by symmetric elimination.
///
/// Constrained rows and columns are zeroed, their diagonal set to one and the
/// right-hand side adjusted, so a symmetric `a` stays symmetric.
pub fn apply_dirichlet(
    a: &mut CsrMatrix,
    b: &mut [f64],
    dofs: &[usize],
    values: &[f64],
) -> Result<(), LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            nrows: n,
            ncols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if values.len() != dofs.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: dofs.len(),
            found: values.len(),
        });
    }
    let mut prescribed: Vec<Option<f64>> = vec![None; n];
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= n {
            return Err(LinalgError::IndexOutOfRange {
                row: d,
                col: d,
                nrows: n,
                ncols: n,
            });
        }
        if prescribed[d].replace(v).is_some() {
            return Err(LinalgError::DuplicateDof(d));
        }
    }

    let offsets = a.row_offsets().to_vec();
    let cols = a.col_indices().to_vec();
    let vals = a.values_mut();
    for i in 0..n {
        let row = offsets[i]..offsets[i + 1];
        if let Some(g) = prescribed[i] {
            for k in row {
                vals[k] = if cols[k] == i { 1.0 } else { 0.0 };
            }
            b[i] = g;
        } else {
            for k in row {
                if let Some(g) = prescribed[cols[k]] {
                    b[i] -= vals[k] * g;
                    vals[k] = 0.0;
                }
            }
        }
    }
    for (&d, &v) in dofs.iter().zip(values) {
        if a.position(d, d).is_none() {
            return Err(LinalgError::ZeroDiagonal(d));
        }
        b[d] = v;
    }
    Ok(())
}

/// Remove the weighted mean: `c <- c - (w.c / sum w)`.
pub fn project_zero_mean_in_place(coeffs: &mut [f64], weights: &[f64]) -> Result<(), LinalgError> {
    if coeffs.len() != weights.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: weights.len(),
            found: coeffs.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(LinalgError::ZeroWeight);
    }
    let mean = coeffs.iter().zip(weights).map(|(c, w)| c * w).sum::<f64>() / total;
    coeffs.iter_mut().for_each(|c| *c -= mean);
    Ok(())
}

/// Zero-mean representative of `p`, with `weights` the row sums of the
/// pressure mass matrix so that `weights . coeffs = int p`.
pub fn project_zero_mean(p: &FeFunction, weights: &[f64]) -> Result<FeFunction, LinalgError> {
    let mut c = p.coeffs().to_vec();
    project_zero_mean_in_place(&mut c, weights)?;
    Ok(FeFunction::from_coeffs(p.space(), c).expect("length preserved"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{solve, SolverConfig};

    fn spd() -> CsrMatrix {
        CsrMatrix::from_triplets(
            (2, 2),
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap()
    }

    #[test]
    fn identity_single_constraint() {
        let mut a = CsrMatrix::identity(3);
        let mut b = vec![1.0, 2.0, 3.0];
        apply_dirichlet(&mut a, &mut b, &[0], &[5.0]).unwrap();
        let s = solve(&a, &b, &SolverConfig::symmetric()).unwrap();
        assert!((s.x[0] - 5.0).abs() < 1e-12);
        assert!((s.x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constrain_everything() {
        let mut a = spd();
        let mut b = vec![1.0, 1.0];
        apply_dirichlet(&mut a, &mut b, &[1, 0], &[-2.0, 7.0]).unwrap();
        let s = solve(&a, &b, &SolverConfig::symmetric()).unwrap();
        assert!((s.x[0] - 7.0).abs() < 1e-12 && (s.x[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_two_by_two() {
        let mut a = spd();
        let b0 = 3.0;
        let mut b = vec![b0, 9.0];
        apply_dirichlet(&mut a, &mut b, &[1], &[0.0]).unwrap();
        assert_eq!(a.symmetry_defect(), 0.0);
        let s = solve(&a, &b, &SolverConfig::symmetric()).unwrap();
        assert!((s.x[0] - b0 / 4.0).abs() < 1e-12);
        assert_eq!(s.x[1], 0.0);
    }

    #[test]
    fn duplicates_rejected() {
        let mut a = spd();
        let mut b = vec![0.0, 0.0];
        assert_eq!(
            apply_dirichlet(&mut a, &mut b, &[1, 1], &[0.0, 0.0]),
            Err(LinalgError::DuplicateDof(1))
        );
    }

    #[test]
    fn zero_mean_projection() {
        let w = [0.25, 0.5, 0.25];
        let mut c = vec![1.0, 1.0, 1.0];
        project_zero_mean_in_place(&mut c, &w).unwrap();
        assert_eq!(c, vec![0.0; 3]);
        let mut d = vec![1.0, -0.5, 0.0];
        project_zero_mean_in_place(&mut d, &w).unwrap();
        let once = d.clone();
        project_zero_mean_in_place(&mut d, &w).unwrap();
        for (x, y) in d.iter().zip(&once) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(
            project_zero_mean_in_place(&mut d, &[0.0; 3]),
            Err(LinalgError::ZeroWeight)
        );
    }

    proptest::proptest! {
        #[test]
        fn dirichlet_preserves_symmetry(vals in proptest::collection::vec(-3.0f64..3.0, 10), mask in 0u8..32) {
            // symmetric tridiagonal-plus-corner matrix on 5 unknowns
            let mut t = Vec::new();
            for i in 0..5 {
                t.push((i, i, 10.0 + vals[i]));
                if i + 1 < 5 {
                    t.push((i, i + 1, vals[5 + i]));
                    t.push((i + 1, i, vals[5 + i]));
                }
            }
            t.push((0, 4, 0.5));
            t.push((4, 0, 0.5));
            let mut a = CsrMatrix::from_triplets((5, 5), &t).unwrap();
            let dofs: Vec<usize> = (0..5).filter(|i| mask & (1 << i) != 0).collect();
            let g: Vec<f64> = dofs.iter().map(|&d| d as f64 - 1.5).collect();
            let mut b = vec![1.0; 5];
            apply_dirichlet(&mut a, &mut b, &dofs, &g).unwrap();
            proptest::prop_assert_eq!(a.symmetry_defect(), 0.0);
        }

        #[test]
        fn zero_mean_is_linear(x in proptest::collection::vec(-5.0f64..5.0, 6), y in proptest::collection::vec(-5.0f64..5.0, 6), s in -2.0f64..2.0) {
            let w = [0.1, 0.2, 0.3, 0.1, 0.2, 0.1];
            let mut px = x.clone();
            let mut py = y.clone();
            let mut pxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + s * b).collect();
            project_zero_mean_in_place(&mut px, &w).unwrap();
            project_zero_mean_in_place(&mut py, &w).unwrap();
            project_zero_mean_in_place(&mut pxy, &w).unwrap();
            for i in 0..6 {
                proptest::prop_assert!((pxy[i] - (px[i] + s * py[i])).abs() < 1e-12);
            }
        }
    }
}
