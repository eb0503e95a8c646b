//! Hybrid MPC with discrete-valued inputs.
//!
//! ```text
//! min  Σ_{t<T} γ^t (x_tᵀQx_t + u_tᵀRu_t) + γ^T (x_TᵀQ_T x_T + 2q_Tᵀx_T)
//! s.t. x_0 = x_init,  x_{t+1} = Āx_t + B̄u_t,
//!      ‖u_t − u_{t−1}‖∞ ≤ 1 (optional, u_{−1} = u_prev),  u_t ∈ 𝒰
//! ```
//!
//! The sparse form keeps states as variables with the dynamics as equality
//! rows; the condensed form eliminates them and keeps the resulting constant
//! as the objective offset, so both forms share the same optimal value.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{normal, normal_matrix, rng};
use crate::error::{Error, Result};
use crate::problem::{ConeSpec, ConicProgram, IntegerVar, MicpProblem};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpcForm {
    Condensed,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub n_x: usize,
    pub n_u: usize,
    pub horizon: usize,
    pub a_bar: Vec<Vec<f64>>,
    pub b_bar: Vec<Vec<f64>>,
    pub q_stage: Vec<Vec<f64>>,
    pub r_stage: Vec<Vec<f64>>,
    pub q_terminal: Vec<Vec<f64>>,
    pub q_terminal_lin: Vec<f64>,
    /// Discount factor in `(0, 1]`.
    pub discount: f64,
    pub x_init: Vec<f64>,
    pub u_prev: Vec<f64>,
    /// Allowed values of each input entry.
    pub value_sets: Vec<Vec<f64>>,
    pub ramp: bool,
    pub form: MpcForm,
}

fn identity(n: usize, s: f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect()).collect()
}

fn to_dmatrix(m: &[Vec<f64>], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| m[i][j])
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    to_dmatrix(a, n, n).complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl MpcConfig {
    /// Random system with `Ā` scaled to spectral radius 0.98, `Q = I`,
    /// `R = 0.1·I`, `Q_T = Q`, discount 0.95, inputs in `{−1, 0, 1}`, ramp
    /// constraints on, sparse form.
    pub fn synthetic(n_x: usize, n_u: usize, horizon: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let mut a = normal_matrix(&mut r, n_x, n_x, 1.0);
        let rho = spectral_radius(&a);
        if rho > 0.0 {
            a.iter_mut().flatten().for_each(|v| *v *= 0.98 / rho);
        }
        let b = normal_matrix(&mut r, n_x, n_u, 0.5);
        let x_init = (0..n_x).map(|_| 2.0 * normal(&mut r)).collect();
        Self {
            n_x,
            n_u,
            horizon,
            a_bar: a,
            b_bar: b,
            q_stage: identity(n_x, 1.0),
            r_stage: identity(n_u, 0.1),
            q_terminal: identity(n_x, 1.0),
            q_terminal_lin: vec![0.0; n_x],
            discount: 0.95,
            x_init,
            u_prev: vec![0.0; n_u],
            value_sets: vec![vec![-1.0, 0.0, 1.0]; n_u],
            ramp: true,
            form: MpcForm::Sparse,
        }
    }

    pub fn with_form(mut self, form: MpcForm) -> Self {
        self.form = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, nu) = (self.n_x, self.n_u);
        let square = |m: &Vec<Vec<f64>>, rows: usize, cols: usize, what: &'static str| -> Result<()> {
            if m.len() != rows {
                return Err(Error::Dimension { what, expected: rows, found: m.len() });
            }
            if let Some(r) = m.iter().find(|r| r.len() != cols) {
                return Err(Error::Dimension { what, expected: cols, found: r.len() });
            }
            Ok(())
        };
        square(&self.a_bar, nx, nx, "A_bar")?;
        square(&self.b_bar, nx, nu, "B_bar")?;
        square(&self.q_stage, nx, nx, "Q")?;
        square(&self.r_stage, nu, nu, "R")?;
        square(&self.q_terminal, nx, nx, "Q_T")?;
        for (v, len, what) in
            [(&self.q_terminal_lin, nx, "q_T"), (&self.x_init, nx, "x_init"), (&self.u_prev, nu, "u_prev")]
        {
            if v.len() != len {
                return Err(Error::Dimension { what, expected: len, found: v.len() });
            }
        }
        if self.value_sets.len() != nu {
            return Err(Error::Dimension { what: "value sets", expected: nu, found: self.value_sets.len() });
        }
        if self.value_sets.iter().any(|s| s.is_empty() || s.iter().any(|v| !v.is_finite())) {
            return Err(Error::Config("input value sets must be finite and nonempty".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config("discount must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// `Āx + B̄u`
    pub fn step_dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.n_x)
            .map(|i| {
                (0..self.n_x).map(|j| self.a_bar[i][j] * x[j]).sum::<f64>()
                    + (0..self.n_u).map(|j| self.b_bar[i][j] * u[j]).sum::<f64>()
            })
            .collect()
    }

    /// Moves one interval forward after applying `u0`.
    pub fn advance(&mut self, u0: &[f64]) {
        self.x_init = self.step_dynamics(&self.x_init, u0);
        self.u_prev = u0.to_vec();
    }

    /// Position of `u_0` in the decision vector.
    pub fn input_offset(&self) -> usize {
        match self.form {
            MpcForm::Sparse => self.n_x * (self.horizon + 1),
            MpcForm::Condensed => 0,
        }
    }

    fn input_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut l = Vec::new();
        let mut u = Vec::new();
        for _ in 0..self.horizon {
            for s in &self.value_sets {
                l.push(s.iter().copied().fold(f64::INFINITY, f64::min));
                u.push(s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
        }
        (l, u)
    }

    /// Ramp rows `±(u_t − u_{t−1}) ≤ 1` over input columns starting at `col0`.
    fn ramp_rows(&self, col0: usize) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        let (nu, t_h) = (self.n_u, self.horizon);
        let mut t = Vec::new();
        let mut b = Vec::new();
        let mut row = 0;
        for k in 0..t_h {
            for j in 0..nu {
                for sgn in [1.0, -1.0] {
                    t.push((row, col0 + k * nu + j, sgn));
                    if k == 0 {
                        b.push(1.0 + sgn * self.u_prev[j]);
                    } else {
                        t.push((row, col0 + (k - 1) * nu + j, -sgn));
                        b.push(1.0);
                    }
                    row += 1;
                }
            }
        }
        (t, b)
    }
}

/// Builds the MIQP in the configured form. All input entries are integer.
pub fn gen_mpc(cfg: &MpcConfig) -> Result<MicpProblem> {
    cfg.validate()?;
    match cfg.form {
        MpcForm::Sparse => sparse_form(cfg),
        MpcForm::Condensed => condensed_form(cfg),
    }
}

fn integer_vars(cfg: &MpcConfig, offset: usize) -> Vec<IntegerVar> {
    (0..cfg.horizon * cfg.n_u).map(|k| IntegerVar::new(offset + k, cfg.value_sets[k % cfg.n_u].clone())).collect()
}

fn sparse_form(cfg: &MpcConfig) -> Result<MicpProblem> {
    let (nx, nu, th) = (cfg.n_x, cfg.n_u, cfg.horizon);
    let ns = nx * (th + 1);
    let n = ns + nu * th;
    let mut pt = Vec::new();
    let mut w = 1.0;
    for t in 0..=th {
        let q = if t == th { &cfg.q_terminal } else { &cfg.q_stage };
        for i in 0..nx {
            for j in 0..nx {
                if q[i][j] != 0.0 {
                    pt.push((t * nx + i, t * nx + j, 2.0 * w * q[i][j]));
                }
            }
        }
        if t < th {
            for i in 0..nu {
                for j in 0..nu {
                    if cfg.r_stage[i][j] != 0.0 {
                        pt.push((ns + t * nu + i, ns + t * nu + j, 2.0 * w * cfg.r_stage[i][j]));
                    }
                }
            }
            w *= cfg.discount;
        }
    }
    let mut q = vec![0.0; n];
    for i in 0..nx {
        q[th * nx + i] = 2.0 * w * cfg.q_terminal_lin[i];
    }

    let mut gt = Vec::new();
    for i in 0..nx {
        gt.push((i, i, 1.0));
    }
    for t in 0..th {
        let r0 = nx * (t + 1);
        for i in 0..nx {
            for j in 0..nx {
                if cfg.a_bar[i][j] != 0.0 {
                    gt.push((r0 + i, t * nx + j, cfg.a_bar[i][j]));
                }
            }
            gt.push((r0 + i, (t + 1) * nx + i, -1.0));
            for j in 0..nu {
                if cfg.b_bar[i][j] != 0.0 {
                    gt.push((r0 + i, ns + t * nu + j, cfg.b_bar[i][j]));
                }
            }
        }
    }
    let mut h = cfg.x_init.clone();
    h.extend(std::iter::repeat_n(0.0, nx * th));

    let (a, b, cones) = if cfg.ramp {
        let (t, b) = cfg.ramp_rows(ns);
        let m = b.len();
        (CscMatrix::from_triplets(m, n, &t), b, vec![ConeSpec::nonnegative(m)])
    } else {
        (CscMatrix::zeros(0, n), vec![], vec![])
    };
    let (ul, uu) = cfg.input_bounds();
    let mut l = vec![f64::NEG_INFINITY; ns];
    let mut u = vec![f64::INFINITY; ns];
    l.extend(ul);
    u.extend(uu);
    let prog = ConicProgram::new(
        CscMatrix::from_triplets(n, n, &pt),
        q,
        CscMatrix::from_triplets(ns, n, &gt),
        h,
        a,
        b,
        cones,
        l,
        u,
    )?;
    Ok(MicpProblem::new(prog, integer_vars(cfg, ns)))
}

fn condensed_form(cfg: &MpcConfig) -> Result<MicpProblem> {
    let (nx, nu, th) = (cfg.n_x, cfg.n_u, cfg.horizon);
    let n = nu * th;
    let a = to_dmatrix(&cfg.a_bar, nx, nx);
    let bm = to_dmatrix(&cfg.b_bar, nx, nu);
    // X = S x_init + M U with X = (x_0, …, x_T)
    let mut s = DMatrix::zeros(nx * (th + 1), nx);
    let mut m = DMatrix::zeros(nx * (th + 1), n);
    let mut pow = DMatrix::identity(nx, nx);
    let mut pows = vec![pow.clone()];
    for t in 0..=th {
        s.view_mut((t * nx, 0), (nx, nx)).copy_from(&pow);
        pow = &a * &pow;
        pows.push(pow.clone());
    }
    for t in 1..=th {
        for k in 0..t {
            let blk = &pows[t - 1 - k] * &bm;
            m.view_mut((t * nx, k * nu), (nx, nu)).copy_from(&blk);
        }
    }
    let mut qt = DMatrix::zeros(nx * (th + 1), nx * (th + 1));
    let mut rt = DMatrix::zeros(n, n);
    let mut qlin = nalgebra::DVector::zeros(nx * (th + 1));
    let mut w = 1.0;
    for t in 0..=th {
        let qsrc = if t == th { &cfg.q_terminal } else { &cfg.q_stage };
        qt.view_mut((t * nx, t * nx), (nx, nx)).copy_from(&(to_dmatrix(qsrc, nx, nx) * w));
        if t < th {
            rt.view_mut((t * nu, t * nu), (nu, nu)).copy_from(&(to_dmatrix(&cfg.r_stage, nu, nu) * w));
            w *= cfg.discount;
        } else {
            for i in 0..nx {
                qlin[t * nx + i] = w * cfg.q_terminal_lin[i];
            }
        }
    }
    let x0 = nalgebra::DVector::from_column_slice(&cfg.x_init);
    let sx0 = &s * &x0;
    let mqm = m.transpose() * &qt * &m + &rt;
    let hess = (&mqm + mqm.transpose()) * 1.0;
    let lin = m.transpose() * (&qt * &sx0 + &qlin) * 2.0;
    let offset = sx0.dot(&(&qt * &sx0)) + 2.0 * qlin.dot(&sx0);

    let mut pt = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            let v = hess[(i, j)];
            if v != 0.0 {
                pt.push((i, j, v));
            }
        }
    }
    let (a_rows, b, cones) = if cfg.ramp {
        let (t, b) = cfg.ramp_rows(0);
        let mr = b.len();
        (CscMatrix::from_triplets(mr, n, &t), b, vec![ConeSpec::nonnegative(mr)])
    } else {
        (CscMatrix::zeros(0, n), vec![], vec![])
    };
    let (l, u) = cfg.input_bounds();
    let prog = ConicProgram::new(
        CscMatrix::from_triplets(n, n, &pt),
        lin.iter().copied().collect(),
        CscMatrix::zeros(0, n),
        vec![],
        a_rows,
        b,
        cones,
        l,
        u,
    )?
    .with_offset(offset);
    Ok(MicpProblem::new(prog, integer_vars(cfg, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_system_is_scaled() {
        let cfg = MpcConfig::synthetic(4, 2, 3, 7);
        assert!((spectral_radius(&cfg.a_bar) - 0.98).abs() < 1e-9);
        assert_eq!(cfg, MpcConfig::synthetic(4, 2, 3, 7));
    }

    #[test]
    fn dimensions_of_both_forms() {
        let cfg = MpcConfig::synthetic(12, 6, 8, 1);
        let c = gen_mpc(&cfg.clone().with_form(MpcForm::Condensed)).unwrap();
        assert_eq!(c.n(), 48);
        assert_eq!(c.integers.len(), 48);
        let s = gen_mpc(&cfg).unwrap();
        assert_eq!(s.n(), 156);
        assert_eq!(s.relaxation.data.p_rows(), 108);
        assert_eq!(s.relaxation.data.m(), 2 * 6 * 8);
        assert!(crate::problem::validate(&s).is_empty());
    }

    #[test]
    fn forms_agree_on_objective_of_any_input_sequence() {
        let cfg = MpcConfig::synthetic(3, 2, 4, 3);
        let c = gen_mpc(&cfg.clone().with_form(MpcForm::Condensed)).unwrap();
        let s = gen_mpc(&cfg).unwrap();
        let u = vec![0.0, 0.0, 1.0, 0.0, 1.0, -1.0, 0.0, -1.0];
        let mut x = vec![cfg.x_init.clone()];
        for t in 0..4 {
            let next = cfg.step_dynamics(&x[t], &u[t * 2..t * 2 + 2]);
            x.push(next);
        }
        let mut full: Vec<f64> = x.concat();
        full.extend(&u);
        let fs = s.relaxation.objective(&full).unwrap();
        let fc = c.relaxation.objective(&u).unwrap();
        assert!((fs - fc).abs() <= 1e-9 * (1.0 + fs.abs()), "{fs} vs {fc}");
        assert!(s.relaxation.primal_infeasibility(&full) < 1e-12);
    }

    #[test]
    fn ramp_rows_chain_previous_input() {
        let mut cfg = MpcConfig::synthetic(2, 1, 2, 0).with_form(MpcForm::Condensed);
        cfg.u_prev = vec![1.0];
        let p = gen_mpc(&cfg).unwrap();
        // u_0 ≤ 2, −u_0 ≤ 0, u_1 − u_0 ≤ 1, u_0 − u_1 ≤ 1
        assert_eq!(p.relaxation.data.b, vec![2.0, 0.0, 1.0, 1.0]);
        assert!(p.relaxation.primal_infeasibility(&[-1.0, -1.0]) > 0.5);
    }

    #[test]
    fn inconsistent_dimensions_rejected() {
        let mut cfg = MpcConfig::synthetic(2, 1, 2, 0);
        cfg.x_init.push(0.0);
        assert!(matches!(gen_mpc(&cfg), Err(Error::Dimension { .. })));
    }
}
