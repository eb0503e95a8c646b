//! Sparse LDLᵀ factorization of symmetric quasi-definite matrices.
//!
//! The matrix is stored as its upper triangle. A fill-reducing ordering and
//! the elimination tree are computed once per sparsity pattern
//! ([`QdSymbolic`]); numeric refactorizations with the same pattern reuse it.
//! Static regularization `ε·diag(sign)` makes the factorization well defined
//! for any ordering; solves refine against the unregularized matrix.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{vec_ops, CscMatrix};

pub const DEFAULT_REG: f64 = 1e-8;
pub const DEFAULT_REFINE_STEPS: usize = 2;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Approximate minimum degree.
    Amd,
    Natural,
    /// Caller-supplied permutation, `perm[new] = old`.
    Given,
}

/// Ordering and elimination-tree analysis for one sparsity pattern.
#[derive(Debug, Clone)]
pub struct QdSymbolic {
    n: usize,
    /// `perm[new] = old`
    pub perm: Vec<usize>,
    /// Pattern of the input upper triangle this analysis was built for.
    in_colptr: Vec<usize>,
    in_rowval: Vec<usize>,
    /// Input entry `k` lands at `permuted.nzval[map[k]]`.
    map: Vec<usize>,
    /// Position of `(k,k)` in the permuted matrix.
    diag_pos: Vec<usize>,
    permuted: CscMatrix,
    etree: Vec<usize>,
    /// Column pointers of the strictly lower factor `L`.
    lp: Vec<usize>,
}

impl QdSymbolic {
    pub fn analyse(m: &CscMatrix, ordering: Ordering, given: Option<&[usize]>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Dimension { what: "square matrix", expected: m.rows, found: m.cols });
        }
        if !m.is_upper_triangular() {
            return Err(Error::NotUpperTriangular);
        }
        let n = m.rows;
        let perm: Vec<usize> = match (ordering, given) {
            (Ordering::Natural, _) => (0..n).collect(),
            (Ordering::Given, Some(p)) => {
                if p.len() != n {
                    return Err(Error::Dimension { what: "permutation", expected: n, found: p.len() });
                }
                p.to_vec()
            }
            (Ordering::Given, None) => return Err(Error::Config("Ordering::Given needs a permutation".into())),
            (Ordering::Amd, _) => amd_ordering(m),
        };
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        let mut t: Vec<(usize, usize, f64)> = m
            .triplets()
            .map(|(i, j, v)| {
                let (a, b) = (pinv[i], pinv[j]);
                (a.min(b), a.max(b), v)
            })
            .collect();
        let nnz_in = t.len();
        t.extend((0..n).map(|k| (k, k, 0.0)));
        let (mut permuted, full_map) = CscMatrix::from_triplets_mapped(n, n, &t);
        permuted.nzval.iter_mut().for_each(|v| *v = 0.0);
        let map = full_map[..nnz_in].to_vec();
        let diag_pos = full_map[nnz_in..].to_vec();

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in permuted.colptr[j]..permuted.colptr[j + 1] {
                let mut i = permuted.rowval[p];
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }

        Ok(Self {
            n,
            perm,
            in_colptr: m.colptr.clone(),
            in_rowval: m.rowval.clone(),
            map,
            diag_pos,
            permuted,
            etree,
            lp,
        })
    }

    pub fn matches_pattern(&self, m: &CscMatrix) -> bool {
        m.rows == self.n && m.colptr == self.in_colptr && m.rowval == self.in_rowval
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }
}

fn amd_ordering(m: &CscMatrix) -> Vec<usize> {
    let n = m.rows;
    if n == 0 {
        return Vec::new();
    }
    // full symmetric pattern with an explicit diagonal
    let mut t: Vec<(usize, usize, f64)> = m.triplets().flat_map(|(i, j, _)| [(i, j, 1.0), (j, i, 1.0)]).collect();
    t.extend((0..n).map(|k| (k, k, 1.0)));
    let full = CscMatrix::from_triplets(n, n, &t);
    match amd::order::<usize>(n, &full.colptr, &full.rowval, &amd::Control::default()) {
        Ok((p, _, _)) => p,
        Err(_) => (0..n).collect(),
    }
}

/// Numeric factor `Pᵀ(M + ε·diag(sign))P = L D Lᵀ`.
#[derive(Debug, Clone)]
pub struct QdFactor {
    symbolic: Arc<QdSymbolic>,
    /// Unregularized input, upper triangle.
    matrix: CscMatrix,
    norm_inf: f64,
    pub sign_pattern: Vec<i8>,
    pub reg: f64,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    /// Pivots that had the wrong sign or vanished and were reset to `±ε`.
    pub dynamic_regs: usize,
}

/// Factors `m` (upper triangle) with an AMD ordering.
pub fn qd_factor(m: &CscMatrix, sign_pattern: &[i8], reg: f64) -> Result<QdFactor> {
    QdFactor::new(m, sign_pattern, reg, Ordering::Amd)
}

/// Solves with a factor, refining against the unregularized matrix.
pub fn qd_solve(f: &QdFactor, rhs: &[f64], refine_steps: usize) -> Result<Vec<f64>> {
    Ok(f.solve_refined(rhs, refine_steps)?.0)
}

impl QdFactor {
    pub fn new(m: &CscMatrix, sign_pattern: &[i8], reg: f64, ordering: Ordering) -> Result<Self> {
        let symbolic = Arc::new(QdSymbolic::analyse(m, ordering, None)?);
        Self::with_symbolic(symbolic, m, sign_pattern, reg)
    }

    pub fn with_symbolic(symbolic: Arc<QdSymbolic>, m: &CscMatrix, sign_pattern: &[i8], reg: f64) -> Result<Self> {
        let n = symbolic.n;
        if sign_pattern.len() != n {
            return Err(Error::Dimension { what: "sign pattern", expected: n, found: sign_pattern.len() });
        }
        let nnz_l = symbolic.factor_nnz();
        let mut f = Self {
            symbolic,
            matrix: CscMatrix::zeros(n, n),
            norm_inf: 0.0,
            sign_pattern: sign_pattern.to_vec(),
            reg,
            li: vec![0; nnz_l],
            lx: vec![0.0; nnz_l],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            dynamic_regs: 0,
        };
        f.refactor(m)?;
        Ok(f)
    }

    /// Numeric refactorization; the symbolic analysis is reused when the
    /// sparsity pattern of `m` is unchanged.
    pub fn refactor(&mut self, m: &CscMatrix) -> Result<()> {
        if !self.symbolic.matches_pattern(m) {
            self.symbolic = Arc::new(QdSymbolic::analyse(m, Ordering::Amd, None)?);
            let nnz_l = self.symbolic.factor_nnz();
            self.li = vec![0; nnz_l];
            self.lx = vec![0.0; nnz_l];
        }
        self.matrix = m.clone();
        self.norm_inf = sym_norm_inf(m);
        self.numeric()
    }

    fn numeric(&mut self) -> Result<()> {
        let sym = Arc::clone(&self.symbolic);
        let n = sym.n;
        let mut a = sym.permuted.clone();
        a.refill(&sym.map, self.matrix.nzval.iter().copied());
        for k in 0..n {
            a.nzval[sym.diag_pos[k]] += self.reg * f64::from(self.sign_pattern[sym.perm[k]]);
        }

        let lp = &sym.lp;
        let etree = &sym.etree;
        let mut y_markers = vec![false; n];
        let mut y_vals = vec![0.0; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = lp[..n].to_vec();
        self.dynamic_regs = 0;

        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let bidx = a.rowval[p];
                if bidx == k {
                    self.d[k] = a.nzval[p];
                    continue;
                }
                y_vals[bidx] = a.nzval[p];
                if !y_markers[bidx] {
                    y_markers[bidx] = true;
                    elim[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = etree[bidx];
                    while next != NONE && next < k {
                        if y_markers[next] {
                            break;
                        }
                        y_markers[next] = true;
                        elim[nnz_e] = next;
                        nnz_e += 1;
                        next = etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        y_idx[nnz_y] = elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in lp[c]..tmp {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let lval = yc * self.dinv[c];
                self.lx[tmp] = lval;
                self.d[k] -= yc * lval;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_markers[c] = false;
            }
            let sign = f64::from(self.sign_pattern[sym.perm[k]]);
            if self.d[k] == 0.0 || (self.reg > 0.0 && self.d[k] * sign <= 0.0) {
                if self.reg > 0.0 && sign != 0.0 {
                    self.d[k] = sign * self.reg;
                    self.dynamic_regs += 1;
                } else {
                    return Err(Error::ZeroPivot { index: k });
                }
            }
            if !self.d[k].is_finite() {
                return Err(Error::ZeroPivot { index: k });
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    pub fn symbolic(&self) -> &Arc<QdSymbolic> {
        &self.symbolic
    }

    pub fn permutation(&self) -> &[usize] {
        &self.symbolic.perm
    }

    /// Pivots in elimination order.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Pivots indexed by original row.
    pub fn d_original_order(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, &old) in self.symbolic.perm.iter().enumerate() {
            out[old] = self.d[k];
        }
        out
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    /// Dense unit lower-triangular `L` in elimination order.
    pub fn l_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut l = vec![vec![0.0; n]; n];
        for (j, row) in l.iter_mut().enumerate() {
            row[j] = 1.0;
        }
        for c in 0..n {
            for p in self.symbolic.lp[c]..self.symbolic.lp[c + 1] {
                l[self.li[p]][c] = self.lx[p];
            }
        }
        l
    }

    /// Solve with the regularized factor only.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let sym = &self.symbolic;
        let n = sym.n;
        let mut x: Vec<f64> = sym.perm.iter().map(|&o| rhs[o]).collect();
        let lp = &sym.lp;
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in lp[i]..lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in lp[i]..lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        let mut out = vec![0.0; n];
        for (k, &o) in sym.perm.iter().enumerate() {
            out[o] = x[k];
        }
        out
    }

    /// Solve followed by up to `refine_steps` refinement passes against the
    /// unregularized matrix. Returns the solution and `‖Mx − rhs‖∞`.
    pub fn solve_refined(&self, rhs: &[f64], refine_steps: usize) -> Result<(Vec<f64>, f64)> {
        if rhs.len() != self.dim() {
            return Err(Error::Dimension { what: "right-hand side", expected: self.dim(), found: rhs.len() });
        }
        let mut x = self.solve(rhs);
        let mut r = self.residual(&x, rhs);
        let mut rnorm = vec_ops::norm_inf(&r);
        let rhs_norm = vec_ops::norm_inf(rhs);
        for _ in 0..refine_steps {
            let tol = 1e-14 * (self.norm_inf * vec_ops::norm_inf(&x) + rhs_norm);
            if rnorm <= tol {
                break;
            }
            let dx = self.solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let r_new = self.residual(&cand, rhs);
            let n_new = vec_ops::norm_inf(&r_new);
            if !(n_new < rnorm) {
                break;
            }
            x = cand;
            r = r_new;
            rnorm = n_new;
        }
        if !rnorm.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::RefinementDiverged { residual: rnorm });
        }
        Ok((x, rnorm))
    }

    /// `rhs − M x`
    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mx = self.matrix.sym_upper_mul_vec(x);
        rhs.iter().zip(&mx).map(|(b, v)| b - v).collect()
    }

    pub fn matrix_norm_inf(&self) -> f64 {
        self.norm_inf
    }
}

/// Infinity norm of a symmetric matrix given by its upper triangle.
pub fn sym_norm_inf(m: &CscMatrix) -> f64 {
    let mut rows = vec![0.0; m.rows];
    for (i, j, v) in m.triplets() {
        rows[i] += v.abs();
        if i != j {
            rows[j] += v.abs();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Numerical rank of a symmetric positive semidefinite dense matrix by
/// diagonally pivoted LDLᵀ: pivots at or below `rel_tol·max_diag` count as zero.
pub fn psd_rank(mut a: Vec<Vec<f64>>, rel_tol: f64) -> (usize, Vec<f64>) {
    let n = a.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let thresh = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut active: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(n);
    while !active.is_empty() {
        let (pos, &k) = active.iter().enumerate().max_by(|x, y| a[*x.1][*x.1].total_cmp(&a[*y.1][*y.1])).unwrap();
        let piv = a[k][k];
        if piv <= thresh {
            break;
        }
        pivots.push(piv);
        active.swap_remove(pos);
        let col: Vec<f64> = active.iter().map(|&i| a[i][k]).collect();
        for (ii, &i) in active.iter().enumerate() {
            for (jj, &j) in active.iter().enumerate() {
                a[i][j] -= col[ii] * col[jj] / piv;
            }
        }
    }
    (pivots.len(), pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_upper(d: &[Vec<f64>]) -> CscMatrix {
        CscMatrix::from_dense(d).upper_triangle()
    }

    #[test]
    fn diagonal_factor() {
        let m = dense_upper(&[vec![2.0, 0.0], vec![0.0, -3.0]]);
        let f = QdFactor::new(&m, &[1, -1], 0.0, Ordering::Natural).unwrap();
        assert_eq!(f.d(), &[2.0, -3.0]);
        assert_eq!(f.l_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn two_by_two_elimination() {
        let m = dense_upper(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        let f = QdFactor::new(&m, &[1, -1], 0.0, Ordering::Natural).unwrap();
        assert_eq!(f.d(), &[1.0, -2.0]);
        assert_eq!(f.l_dense(), vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        let x = qd_solve(&f, &[-1.0, -1.0], 2).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn zero_row_gets_regularization_floor() {
        let m = dense_upper(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, -1.0]]);
        assert!(matches!(QdFactor::new(&m, &[1, 1, -1], 0.0, Ordering::Natural), Err(Error::ZeroPivot { .. })));
        let f = qd_factor(&m, &[1, 1, -1], 1e-8).unwrap();
        assert_eq!(f.d_original_order()[1], 1e-8);
        let (x, _) = f.solve_refined(&[2.0, 0.0, 3.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[2] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_solve() {
        let f = qd_factor(&CscMatrix::identity(4), &[1; 4], 0.0).unwrap();
        let r = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(qd_solve(&f, &r, 2).unwrap(), r.to_vec());
    }

    #[test]
    fn non_upper_input_rejected() {
        let m = CscMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(qd_factor(&m, &[1, 1], 0.0), Err(Error::NotUpperTriangular)));
    }

    /// Random quasi-definite `[[A, Bᵀ], [B, −C]]` with `A, C` positive definite.
    pub(crate) fn random_qd(n1: usize, n2: usize, seed: u64) -> (CscMatrix, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n1 + n2;
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n1 {
            d[i][i] = 1.0 + rng.random::<f64>();
            for j in (i + 1)..n1 {
                if rng.random::<f64>() < 0.2 {
                    let v = rng.random_range(-0.3..0.3);
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
        }
        for i in n1..n {
            d[i][i] = -(0.5 + rng.random::<f64>());
            for j in 0..n1 {
                if rng.random::<f64>() < 0.3 {
                    let v = rng.random_range(-2.0..2.0);
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
        }
        let signs = (0..n).map(|i| if i < n1 { 1 } else { -1 }).collect();
        (dense_upper(&d), signs)
    }

    fn ldlt_minus_permuted(f: &QdFactor, m: &CscMatrix) -> f64 {
        let n = f.dim();
        let l = f.l_dense();
        let dm = m.to_dense();
        let full = |i: usize, j: usize| if i <= j { dm[i][j] } else { dm[j][i] };
        let perm = f.permutation();
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..=i.min(j) {
                    v += l[i][k] * f.d()[k] * l[j][k];
                }
                let mut target = full(perm[i], perm[j]);
                if i == j {
                    target += f.reg * f64::from(f.sign_pattern[perm[i]]);
                }
                err += (v - target).powi(2);
            }
        }
        err.sqrt()
    }

    #[test]
    fn reconstruction_matches_permuted_regularized_matrix() {
        for seed in 0..10 {
            let (m, s) = random_qd(15, 10, seed);
            let f = qd_factor(&m, &s, 1e-8).unwrap();
            assert_eq!(f.dynamic_regs, 0);
            let err = ldlt_minus_permuted(&f, &m);
            assert!(err <= 1e-10 * m.frobenius_norm() * 2f64.sqrt(), "seed {seed}: {err}");
            let d = f.d_original_order();
            for (di, si) in d.iter().zip(&s) {
                assert!(di * f64::from(*si) > 0.0);
            }
        }
    }

    #[test]
    fn refined_solves_meet_residual_bound() {
        for seed in 0..100 {
            let (m, s) = random_qd(30, 20, 1000 + seed);
            let f = qd_factor(&m, &s, DEFAULT_REG).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x_true: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rhs = m.sym_upper_mul_vec(&x_true);
            let (x, res) = f.solve_refined(&rhs, DEFAULT_REFINE_STEPS).unwrap();
            let bound = 1e-10 * (sym_norm_inf(&m) * vec_ops::norm_inf(&x) + vec_ops::norm_inf(&rhs));
            assert!(res <= bound, "seed {seed}: {res} > {bound}");
        }
    }

    #[test]
    fn factor_reuse_matches_independent_solves() {
        let (m, s) = random_qd(12, 8, 77);
        let f = qd_factor(&m, &s, DEFAULT_REG).unwrap();
        for k in 0..5 {
            let rhs: Vec<f64> = (0..20).map(|i| ((i * (k + 3)) % 7) as f64 - 3.0).collect();
            let reused = qd_solve(&f, &rhs, 2).unwrap();
            let fresh = qd_solve(&qd_factor(&m, &s, DEFAULT_REG).unwrap(), &rhs, 2).unwrap();
            for (a, b) in reused.iter().zip(&fresh) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn refactor_reuses_symbolic_analysis() {
        let (m, s) = random_qd(6, 4, 5);
        let mut f = qd_factor(&m, &s, 1e-8).unwrap();
        let before = Arc::clone(f.symbolic());
        let mut m2 = m.clone();
        m2.nzval.iter_mut().for_each(|v| *v *= 2.0);
        f.refactor(&m2).unwrap();
        assert!(Arc::ptr_eq(&before, f.symbolic()));
        let rhs = vec![1.0; 10];
        let x = qd_solve(&f, &rhs, 3).unwrap();
        let r = vec_ops::sub(&m2.sym_upper_mul_vec(&x), &rhs);
        assert!(vec_ops::norm_inf(&r) < 1e-10);
    }

    #[test]
    fn psd_rank_detects_deficiency() {
        let a = vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]];
        assert_eq!(psd_rank(a, 1e-10).0, 2);
        assert_eq!(psd_rank(vec![vec![0.0; 2]; 2], 1e-10).0, 0);
    }
}
