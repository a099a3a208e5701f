use crate::error::{Error, Result};

/// Sparse matrix stored in both compressed-column and compressed-row form.
///
/// Explicit zeros are dropped at construction and duplicate triplets are
/// summed. Indices are strictly increasing within each column and each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    max_col_nnz: usize,
    max_row_nnz: usize,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::IndexOutOfRange { index: r, len: nrows });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange { index: c, len: ncols });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("entry ({r}, {c}) is {v}")));
            }
            entries.push((r, c, v));
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));

        // merge duplicates, drop zeros
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, c, _) in &merged {
            col_ptr[c + 1] += 1;
            row_ptr[r + 1] += 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }

        // merged is column-major, so columns fill in order
        let col_rows: Vec<usize> = merged.iter().map(|e| e.0).collect();
        let col_vals: Vec<f64> = merged.iter().map(|e| e.2).collect();

        // scattering column-major triplets keeps each row's columns increasing
        let nnz = merged.len();
        let mut row_cols = vec![0usize; nnz];
        let mut row_vals = vec![0.0; nnz];
        let mut next = row_ptr.clone();
        for &(r, c, v) in &merged {
            let slot = next[r];
            row_cols[slot] = c;
            row_vals[slot] = v;
            next[r] += 1;
        }

        let max_col_nnz = col_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        let max_row_nnz = row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);

        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            col_rows,
            col_vals,
            row_ptr,
            row_cols,
            row_vals,
            max_col_nnz,
            max_row_nnz,
        })
    }

    /// Builds from row-major dense storage.
    pub fn from_dense(nrows: usize, ncols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                got: values.len(),
            });
        }
        Self::from_triplets(
            nrows,
            ncols,
            (0..nrows).flat_map(|r| (0..ncols).map(move |c| (r, c, values[r * ncols + c]))),
        )
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("identity is valid")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Total stored nonzeros (z).
    pub fn nnz(&self) -> usize {
        self.col_vals.len()
    }

    /// Largest column count (c).
    pub fn max_col_nnz(&self) -> usize {
        self.max_col_nnz
    }

    /// Largest row count (r).
    pub fn max_row_nnz(&self) -> usize {
        self.max_row_nnz
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.col_rows[a..b], &self.col_vals[a..b])
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.row_cols[a..b], &self.row_vals[a..b])
    }

    pub fn col_norm_sq(&self, j: usize) -> f64 {
        self.col(j).1.iter().map(|v| v * v).sum()
    }

    /// Triplets in column-major order.
    pub fn col_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, j, v))
        })
    }

    /// Triplets in row-major order.
    pub fn row_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.nrows];
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *o = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
        Ok(out)
    }

    pub fn t_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: y.len(),
            });
        }
        let mut out = vec![0.0; self.ncols];
        for (j, o) in out.iter_mut().enumerate() {
            let (rows, vals) = self.col(j);
            *o = rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum();
        }
        Ok(out)
    }

    /// Applies `cache += delta * a_j` in O(nnz(a_j)) and returns the rows of
    /// column `j`, all of which are reported as touched even when `delta` is 0.
    pub fn column_update(&self, cache: &mut [f64], j: usize, delta: f64) -> Result<&[usize]> {
        if j >= self.ncols {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.ncols,
            });
        }
        if cache.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: cache.len(),
            });
        }
        let (rows, vals) = self.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            cache[r] += delta * v;
        }
        Ok(rows)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.col_triplets() {
            out[r * self.ncols + c] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, p: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for r in 0..m {
            for c in 0..n {
                if rng.random::<f64>() < p {
                    t.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, t).unwrap()
    }

    #[test]
    fn counts() {
        let a = SparseMatrix::from_triplets(
            3,
            4,
            vec![(0, 0, 1.0), (1, 0, 2.0), (2, 0, 3.0), (0, 3, 4.0), (0, 1, 0.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.max_col_nnz(), 3);
        assert_eq!(a.max_row_nnz(), 2);
        assert_eq!(a.col(1).0.len(), 0);
    }

    #[test]
    fn duplicates_are_summed_and_cancellations_dropped() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)])
            .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.col(0), (&[0usize][..], &[3.0][..]));
    }

    #[test]
    fn rejects_bad_triplets() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 2, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn identity_column_update() {
        let a = SparseMatrix::identity(4);
        let mut cache = vec![0.0; 4];
        let rows = a.column_update(&mut cache, 2, 1.0).unwrap().to_vec();
        assert_eq!(rows, vec![2]);
        assert_eq!(cache, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_delta_still_reports_touched_rows() {
        let a = SparseMatrix::identity(3);
        let mut cache = vec![1.0, 2.0, 3.0];
        let rows = a.column_update(&mut cache, 1, 0.0).unwrap().to_vec();
        assert_eq!(rows, vec![1]);
        assert_eq!(cache, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn column_update_tracks_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (m, n) = (50, 50);
        let a = random_sparse(&mut rng, m, n, 0.1);
        let dense = a.to_dense();
        let mut x = vec![0.0; n];
        let mut cache = a.mul_vec(&x).unwrap();
        for _ in 0..2000 {
            let j = rng.random_range(0..n);
            let delta = rng.random_range(-1.0..1.0);
            x[j] += delta;
            a.column_update(&mut cache, j, delta).unwrap();
        }
        for r in 0..m {
            let fresh: f64 = (0..n).map(|c| dense[r * n + c] * x[c]).sum();
            let scale = 1.0 + fresh.abs();
            assert!((cache[r] - fresh).abs() <= 1e-12 * scale, "row {r}");
        }
    }

    #[test]
    fn transpose_product_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_sparse(&mut rng, 7, 5, 0.4);
        let y: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = a.to_dense();
        let got = a.t_mul_vec(&y).unwrap();
        for c in 0..5 {
            let want: f64 = (0..7).map(|r| d[r * 5 + c] * y[r]).sum();
            assert!((got[c] - want).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn views_hold_identical_triplets(
            entries in proptest::collection::vec((0usize..6, 0usize..9, -3i32..4), 0..40)
        ) {
            let a = SparseMatrix::from_triplets(
                6, 9, entries.iter().map(|&(r, c, v)| (r, c, v as f64))
            ).unwrap();
            let mut by_col: Vec<_> = a.col_triplets().collect();
            let mut by_row: Vec<_> = a.row_triplets().collect();
            by_col.sort_by(|p, q| p.partial_cmp(q).unwrap());
            by_row.sort_by(|p, q| p.partial_cmp(q).unwrap());
            prop_assert_eq!(&by_col, &by_row);
            prop_assert!(by_col.iter().all(|t| t.2 != 0.0));
            prop_assert_eq!(by_col.len(), a.nnz());
            for j in 0..9 {
                prop_assert!(a.col(j).0.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(a.col(j).0.len() <= a.max_col_nnz());
            }
            for i in 0..6 {
                prop_assert!(a.row(i).0.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(a.row(i).0.len() <= a.max_row_nnz());
            }
        }
    }
}
