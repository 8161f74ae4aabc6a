use serde::{Deserialize, Serialize};

use super::{CsrMatrix, LinalgError};

/// Preconditioner choice for the Krylov solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

/// Incomplete LU factorisation with zero fill-in, stored on the pattern of A.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
    inv_diag: Vec<f64>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            diag.push(lu.position(i, i).ok_or(LinalgError::ZeroDiagonal(i))?);
        }
        let offsets = lu.row_offsets().to_vec();
        let cols = lu.col_indices().to_vec();
        let mut pos = vec![usize::MAX; n];
        let vals = lu.values_mut();
        for i in 0..n {
            let (ra, rb) = (offsets[i], offsets[i + 1]);
            for k in ra..rb {
                pos[cols[k]] = k;
            }
            for kk in ra..rb {
                let k = cols[kk];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(LinalgError::ZeroDiagonal(k));
                }
                let lik = vals[kk] / pivot;
                vals[kk] = lik;
                for kj in diag[k] + 1..offsets[k + 1] {
                    let p = pos[cols[kj]];
                    if p != usize::MAX {
                        vals[p] -= lik * vals[kj];
                    }
                }
            }
            for k in ra..rb {
                pos[cols[k]] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return Err(LinalgError::ZeroDiagonal(i));
            }
        }
        let inv_diag = diag.iter().map(|&d| 1.0 / lu.values()[d]).collect();
        Ok(Ilu0 { lu, diag, inv_diag })
    }

    /// Solve `L U z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let offs = self.lu.row_offsets();
        let cols = self.lu.col_indices();
        let vals = self.lu.values();
        for i in 0..n {
            let (a, d) = (offs[i], self.diag[i]);
            let s: f64 = cols[a..d]
                .iter()
                .zip(&vals[a..d])
                .map(|(&j, &v)| v * z[j])
                .sum();
            z[i] = r[i] - s;
        }
        for i in (0..n).rev() {
            let (d, b) = (self.diag[i], offs[i + 1]);
            let s: f64 = cols[d + 1..b]
                .iter()
                .zip(&vals[d + 1..b])
                .map(|(&j, &v)| v * z[j])
                .sum();
            z[i] = (z[i] - s) * self.inv_diag[i];
        }
    }
}

/// A preconditioner ready to apply.
pub(crate) enum Built {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(Ilu0),
}

impl Built {
    pub(crate) fn new(kind: Preconditioner, a: &CsrMatrix) -> Result<Self, LinalgError> {
        Ok(match kind {
            Preconditioner::None => Built::Identity,
            Preconditioner::Jacobi => {
                let d = a.diagonal();
                let mut inv = Vec::with_capacity(d.len());
                for (i, v) in d.into_iter().enumerate() {
                    if v == 0.0 || !v.is_finite() {
                        return Err(LinalgError::ZeroDiagonal(i));
                    }
                    inv.push(1.0 / v);
                }
                Built::Jacobi(inv)
            }
            Preconditioner::Ilu0 => Built::Ilu(Ilu0::new(a)?),
        })
    }

    #[inline]
    pub(crate) fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Built::Identity => z.copy_from_slice(r),
            Built::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
            Built::Ilu(ilu) => ilu.apply(r, z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // no fill-in for a tridiagonal matrix, so ILU(0) = LU
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -2.0));
            }
        }
        let a = CsrMatrix::from_triplets((n, n), &t).unwrap();
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let b = a.spmv(&x).unwrap();
        let mut z = vec![0.0; n];
        ilu.apply(&b, &mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-13);
        }
    }

    #[test]
    fn missing_diagonal_is_an_error() {
        let a = CsrMatrix::from_triplets((2, 2), &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(Ilu0::new(&a), Err(LinalgError::ZeroDiagonal(0))));
        assert!(Built::new(Preconditioner::Jacobi, &a).is_err());
    }
}
