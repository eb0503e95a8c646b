//! Compressed sparse column storage.

use serde::{Deserialize, Serialize};

/// Sparse matrix in compressed sparse column (CSC) layout.
///
/// Row indices within a column are sorted and unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    pub rows: usize,
    pub cols: usize,
    pub colptr: Vec<usize>,
    pub rowval: Vec<usize>,
    pub nzval: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, colptr: vec![0; cols + 1], rowval: Vec::new(), nzval: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, colptr: (0..=n).collect(), rowval: (0..n).collect(), nzval: vec![1.0; n] }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.nzval.copy_from_slice(d);
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        Self::from_triplets_mapped(rows, cols, triplets).0
    }

    /// Like [`CscMatrix::from_triplets`], also returning for every triplet the
    /// position of the stored entry it was summed into. The map lets callers
    /// refill values for an unchanged pattern with [`CscMatrix::refill`].
    pub fn from_triplets_mapped(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(i, j, _) in triplets {
            assert!(i < rows && j < cols, "triplet ({i},{j}) outside {rows}x{cols}");
        }
        order.sort_by_key(|&k| (triplets[k].1, triplets[k].0));

        let mut colptr = vec![0usize; cols + 1];
        let mut rowval = Vec::with_capacity(triplets.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut map = vec![0usize; triplets.len()];
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *nzval.last_mut().unwrap() += v;
            } else {
                rowval.push(i);
                nzval.push(v);
                colptr[j + 1] += 1;
                last = Some((i, j));
            }
            map[k] = nzval.len() - 1;
        }
        for j in 0..cols {
            colptr[j + 1] += colptr[j];
        }
        (Self { rows, cols, colptr, rowval, nzval }, map)
    }

    /// Overwrites the stored values from triplet values using a map produced by
    /// [`CscMatrix::from_triplets_mapped`] for the same triplet ordering.
    pub fn refill(&mut self, map: &[usize], values: impl IntoIterator<Item = f64>) {
        self.nzval.iter_mut().for_each(|v| *v = 0.0);
        for (&pos, v) in map.iter().zip(values) {
            self.nzval[pos] += v;
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &t)
    }

    pub fn nnz(&self) -> usize {
        self.nzval.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols)
            .flat_map(move |j| (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowval[p], j, self.nzval[p])))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.colptr[j]..self.colptr[j + 1];
        match self.rowval[range.clone()].binary_search(&i) {
            Ok(k) => self.nzval[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.cols, self.rows, &t)
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_acc(x, &mut y, 1.0);
        y
    }

    /// `y += alpha * A x`
    pub fn mul_vec_acc(&self, x: &[f64], y: &mut [f64], alpha: f64) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for j in 0..self.cols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowval[p]] += self.nzval[p] * xj;
            }
        }
    }

    /// `y = A^T x`
    pub fn t_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.t_mul_vec_acc(x, &mut y, 1.0);
        y
    }

    /// `y += alpha * A^T x`
    pub fn t_mul_vec_acc(&self, x: &[f64], y: &mut [f64], alpha: f64) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for j in 0..self.cols {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.nzval[p] * x[self.rowval[p]];
            }
            y[j] += alpha * acc;
        }
    }

    /// `y = M x` for symmetric `M` of which only the upper triangle is stored.
    pub fn sym_upper_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowval[p];
                let v = self.nzval[p];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.triplets().all(|(i, j, _)| i <= j)
    }

    /// Keeps entries with `row <= col`.
    pub fn upper_triangle(&self) -> Self {
        let t: Vec<_> = self.triplets().filter(|&(i, j, _)| i <= j).collect();
        Self::from_triplets(self.rows, self.cols, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.nzval.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.nzval.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copy of rows `start..end`.
    pub fn select_rows(&self, start: usize, end: usize) -> Self {
        let t: Vec<_> =
            self.triplets().filter(|&(i, _, _)| i >= start && i < end).map(|(i, j, v)| (i - start, j, v)).collect();
        Self::from_triplets(end - start, self.cols, &t)
    }
}

/// Helpers over dense `f64` slices.
pub(crate) mod vec_ops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm2(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn norm_inf(a: &[f64]) -> f64 {
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CscMatrix::from_triplets(2, 2, &[(1, 0, 2.0), (0, 0, 1.0), (1, 0, 3.0), (0, 1, -1.0)]);
        assert_eq!(m.colptr, vec![0, 2, 3]);
        assert_eq!(m.rowval, vec![0, 1, 0]);
        assert_eq!(m.nzval, vec![1.0, 5.0, -1.0]);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn refill_reuses_pattern() {
        let t = vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)];
        let (mut m, map) = CscMatrix::from_triplets_mapped(2, 2, &t);
        assert_eq!(m.nzval, vec![4.0, 2.0]);
        m.refill(&map, [10.0, 20.0, 30.0]);
        assert_eq!(m.nzval, vec![40.0, 20.0]);
    }

    #[test]
    fn products_match_dense() {
        let d = vec![vec![1.0, 0.0, 2.0], vec![0.0, -3.0, 4.0]];
        let m = CscMatrix::from_dense(&d);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 1.0]);
        assert_eq!(m.t_mul_vec(&[1.0, 2.0]), vec![1.0, -6.0, 10.0]);
        assert_eq!(m.transpose().to_dense()[2], vec![2.0, 4.0]);
    }

    #[test]
    fn symmetric_upper_product() {
        let full = CscMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let up = full.upper_triangle();
        assert!(up.is_upper_triangular());
        assert_eq!(up.sym_upper_mul_vec(&[1.0, -1.0]), full.mul_vec(&[1.0, -1.0]));
    }
}
