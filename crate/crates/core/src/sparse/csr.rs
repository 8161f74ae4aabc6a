use super::LinalgError;

/// Compressed sparse row matrix with strictly increasing columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are added in input order, so identical triplet lists give
    /// bitwise identical matrices.
    pub fn from_triplets(
        shape: (usize, usize),
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let (nrows, ncols) = shape;
        for &(row, col, _) in triplets {
            if row >= nrows || col >= ncols {
                return Err(LinalgError::IndexOutOfRange {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: preserves input order among duplicates
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Zero-valued matrix whose pattern is the union of the dense blocks
    /// `rows(e) x cols(e)` over all `e`.
    pub fn from_block_pattern<'a, I>(shape: (usize, usize), blocks: I) -> Self
    where
        I: IntoIterator<Item = (&'a [usize], &'a [usize])>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); shape.0];
        for (r, c) in blocks {
            for &i in r {
                rows[i].extend_from_slice(c);
            }
        }
        let mut row_offsets = Vec::with_capacity(shape.0 + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_indices.extend(row);
            row_offsets.push(col_indices.len());
        }
        let nnz = col_indices.len();
        CsrMatrix {
            nrows: shape.0,
            ncols: shape.1,
            row_offsets,
            col_indices,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        CsrMatrix {
            nrows: shape.0,
            ncols: shape.1,
            row_offsets: vec![0; shape.0 + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(columns, values)` of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    /// Position of `(i, j)` in the value array, if stored.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        self.col_indices[a..b].binary_search(&j).ok().map(|k| a + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Add into a stored entry. Panics if `(i, j)` is outside the pattern.
    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.shape() == other.shape()
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }

    /// Same pattern, all values zero.
    pub fn zeroed(&self) -> Self {
        CsrMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `sum_k coef_k * M_k` for matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<Self, LinalgError> {
        let (_, first) = terms.first().ok_or(LinalgError::PatternMismatch)?;
        let mut out = first.zeroed();
        for (a, m) in terms {
            if !m.same_pattern(first) {
                return Err(LinalgError::PatternMismatch);
            }
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += a * v;
            }
        }
        Ok(out)
    }

    /// Block-diagonal `[[A, 0], [0, A]]`.
    pub fn block_diag2(&self) -> Self {
        let nnz = self.nnz();
        let mut row_offsets = self.row_offsets.clone();
        row_offsets.extend(self.row_offsets[1..].iter().map(|o| o + nnz));
        let mut col_indices = self.col_indices.clone();
        col_indices.extend(self.col_indices.iter().map(|c| c + self.ncols));
        let mut values = self.values.clone();
        values.extend_from_slice(&self.values);
        CsrMatrix {
            nrows: 2 * self.nrows,
            ncols: 2 * self.ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_indices[k] = i;
                values[k] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// `max |A_ij - A_ji|` over stored entries (0 for exactly symmetric).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `max |A_ij + A_ji|` (0 for exactly antisymmetric).
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v + self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.ncols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    #[inline]
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        let (cols, vals) = (&self.col_indices[..], &self.values[..]);
        for (yi, w) in y.iter_mut().zip(self.row_offsets.windows(2)) {
            let (c, v) = (&cols[w[0]..w[1]], &vals[w[0]..w[1]]);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            let mut r = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                r += v * y[c];
            }
            s += xi * r;
        }
        s
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets((1, 1), &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn empty_triplets() {
        let a = CsrMatrix::from_triplets((3, 2), &[]).unwrap();
        assert_eq!(a.row_offsets(), &[0, 0, 0, 0]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn off_diagonal_pair() {
        let a = CsrMatrix::from_triplets((2, 2), &[(0, 1, 5.0), (1, 0, 7.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense(), vec![vec![0.0, 5.0], vec![7.0, 0.0]]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            CsrMatrix::from_triplets((2, 2), &[(2, 0, 1.0)]),
            Err(LinalgError::IndexOutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn spmv_examples() {
        let x = [3.0, -1.0, 2.5];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert_eq!(CsrMatrix::zeros((3, 3)).spmv(&x).unwrap(), vec![0.0; 3]);
        let a = CsrMatrix::from_triplets(
            (2, 2),
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap();
        assert_eq!(a.spmv(&[1.0, 2.0]).unwrap(), vec![6.0, 7.0]);
        assert!(matches!(
            a.spmv(&[1.0]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transpose_and_blocks() {
        let a = CsrMatrix::from_triplets((2, 3), &[(0, 2, 1.0), (1, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let t = a.transpose();
        assert_eq!(
            t.to_dense(),
            vec![vec![0.0, 2.0], vec![0.0, 3.0], vec![1.0, 0.0]]
        );
        let sq = CsrMatrix::from_triplets((2, 2), &[(0, 1, 1.0), (1, 1, 2.0)]).unwrap();
        let b = sq.block_diag2();
        assert_eq!(b.get(2, 3), 1.0);
        assert_eq!(b.get(3, 3), 2.0);
        assert_eq!(b.get(0, 3), 0.0);
        assert_eq!(b.nnz(), 4);
    }

    #[test]
    fn block_pattern_and_combination() {
        let d0 = [0usize, 1];
        let d1 = [1usize, 2];
        let mut m = CsrMatrix::from_block_pattern((3, 3), [(&d0[..], &d0[..]), (&d1[..], &d1[..])]);
        assert_eq!(m.nnz(), 7);
        m.add_at(1, 1, 2.0);
        m.add_at(0, 1, 1.0);
        let c = CsrMatrix::linear_combination(&[(2.0, &m), (1.0, &m)]).unwrap();
        assert_eq!(c.get(1, 1), 6.0);
        assert_eq!(c.get(0, 1), 3.0);
        assert!(
            CsrMatrix::linear_combination(&[(1.0, &m), (1.0, &CsrMatrix::identity(3))]).is_err()
        );
    }

    proptest::proptest! {
        #[test]
        fn triplets_match_dense_accumulation(entries in proptest::collection::vec((0usize..5, 0usize..4, -10.0f64..10.0), 0..40)) {
            let a = CsrMatrix::from_triplets((5, 4), &entries).unwrap();
            let mut dense = vec![vec![0.0; 4]; 5];
            for &(r, c, v) in &entries {
                dense[r][c] += v;
            }
            let got = a.to_dense();
            for r in 0..5 {
                for c in 0..4 {
                    proptest::prop_assert!((got[r][c] - dense[r][c]).abs() < 1e-12);
                }
                let (cols, _) = a.row(r);
                proptest::prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            }
            proptest::prop_assert_eq!(*a.row_offsets().last().unwrap(), a.nnz());
        }
    }
}
