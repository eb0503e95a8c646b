//! Operator-splitting subsolver (ADMM).
//!
//! All constraints are stacked as `Ãx = w, w ∈ C` with
//! `Ã = [G; A; I_box]` and `C = {h} × (b − K) × [l, u]`. Each iteration solves
//! one quasi-definite system (factored once in [`admm_setup`]) and projects
//! onto `C`. The conic block of the projection goes through `Π_K`, so the
//! complementary part of the Moreau split, `(I − Π_K)(b − v)`, hands out a
//! multiplier in the polar cone at every iteration.

use crate::cones::{self, ConeWorkspace};
use crate::error::{Error, Result};
use crate::iterate::{Convention, DualIterate, Subsolver, SubsolverStatus};
use crate::linalg::{Ordering, QdFactor};
use crate::problem::{ConeKind, ConicProgram};
use crate::sparse::{vec_ops, CscMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    /// Step penalty for inequality and box rows.
    pub rho: f64,
    /// Penalty multiplier for rows whose set is a single point.
    pub rho_eq_scale: f64,
    pub sigma: f64,
    /// Over-relaxation, in `(0, 2)`.
    pub alpha: f64,
    /// Termination checks run every `check_interval` iterations.
    pub check_interval: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_infeasible: f64,
    pub max_iter: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 0.1,
            rho_eq_scale: 1e3,
            sigma: 1e-6,
            alpha: 1.6,
            check_interval: 25,
            eps_abs: 1e-7,
            eps_rel: 1e-7,
            eps_infeasible: 1e-8,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    prog: ConicProgram,
    pub settings: AdmmSettings,
    factor: QdFactor,
    /// `[G; A; I_box]`
    a_tilde: CscMatrix,
    rho: Vec<f64>,
    /// Variables with at least one finite bound, one box row each.
    box_idx: Vec<usize>,
    n_eq: usize,
    n_cone: usize,
    cone_ws: ConeWorkspace,
    x: Vec<f64>,
    w: Vec<f64>,
    lambda: Vec<f64>,
    prev_x: Vec<f64>,
    prev_lambda: Vec<f64>,
    /// `b − v_A` before projection at the latest iteration.
    cone_input: Vec<f64>,
    iterate: DualIterate,
    iter: usize,
    limit: bool,
}

pub fn admm_setup(prog: &ConicProgram, settings: AdmmSettings) -> Result<AdmmState> {
    AdmmState::new(prog, settings)
}

pub fn admm_iterate(state: &mut AdmmState) -> DualIterate {
    state.step().clone()
}

pub fn admm_status(state: &mut AdmmState, eps_abs: f64, eps_rel: f64) -> SubsolverStatus {
    state.check(eps_abs, eps_rel)
}

impl AdmmState {
    pub fn new(prog: &ConicProgram, settings: AdmmSettings) -> Result<Self> {
        let violations = prog.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(violations));
        }
        if !(settings.rho > 0.0) || settings.check_interval == 0 {
            return Err(Error::Config("ADMM needs rho > 0 and check_interval >= 1".into()));
        }
        if !(settings.alpha > 0.0 && settings.alpha < 2.0) {
            return Err(Error::Config("ADMM relaxation must lie in (0, 2)".into()));
        }
        let d = &prog.data;
        let n = d.n();
        let (n_eq, n_cone) = (d.p_rows(), d.m());
        let box_idx: Vec<usize> = (0..n).filter(|&i| prog.l[i].is_finite() || prog.u[i].is_finite()).collect();
        let rows = n_eq + n_cone + box_idx.len();

        let mut t: Vec<(usize, usize, f64)> = d.g.triplets().collect();
        t.extend(d.a.triplets().map(|(i, j, v)| (n_eq + i, j, v)));
        t.extend(box_idx.iter().enumerate().map(|(k, &i)| (n_eq + n_cone + k, i, 1.0)));
        let a_tilde = CscMatrix::from_triplets(rows, n, &t);

        let eq = settings.rho * settings.rho_eq_scale;
        let mut rho = vec![settings.rho; rows];
        rho[..n_eq].iter_mut().for_each(|r| *r = eq);
        for (c, r) in cones::cone_ranges(&d.cones) {
            if c.kind == ConeKind::Zero {
                rho[n_eq + r.start..n_eq + r.end].iter_mut().for_each(|v| *v = eq);
            }
        }
        for (k, &i) in box_idx.iter().enumerate() {
            if prog.l[i] == prog.u[i] {
                rho[n_eq + n_cone + k] = eq;
            }
        }

        let mut kt: Vec<(usize, usize, f64)> = d.p.triplets().collect();
        kt.extend((0..n).map(|i| (i, i, settings.sigma)));
        kt.extend(a_tilde.triplets().map(|(r, j, v)| (j, n + r, v)));
        kt.extend(rho.iter().enumerate().map(|(r, &p)| (n + r, n + r, -1.0 / p)));
        let kkt = CscMatrix::from_triplets(n + rows, n + rows, &kt);
        let signs: Vec<i8> = (0..n + rows).map(|i| if i < n { 1 } else { -1 }).collect();
        let factor = QdFactor::new(&kkt, &signs, 0.0, Ordering::Amd)?;

        let mut state = Self {
            prog: prog.clone(),
            settings,
            factor,
            a_tilde,
            rho,
            box_idx,
            n_eq,
            n_cone,
            cone_ws: ConeWorkspace::new(&d.cones),
            x: vec![0.0; n],
            w: vec![0.0; rows],
            lambda: vec![0.0; rows],
            prev_x: vec![0.0; n],
            prev_lambda: vec![0.0; rows],
            cone_input: vec![0.0; n_cone],
            iterate: DualIterate::zeros(n, n_cone, n_eq, Convention::Osm),
            iter: 0,
            limit: false,
        };
        state.project_w();
        state.refresh_iterate();
        Ok(state)
    }

    /// Starts from a previous iterate (any convention).
    pub fn warm_start(&mut self, it: &DualIterate) {
        let it = match it.convention {
            Convention::Osm => it.clone(),
            Convention::Ipm => {
                let mut o = it.clone();
                o.y.iter_mut().for_each(|v| *v = -*v);
                o.y_b = o.y_plus.iter().zip(&o.y_minus).map(|(a, b)| a - b).collect();
                o
            }
        };
        let d = &self.prog.data;
        if it.x.len() != d.n() || it.y.len() != d.m() || it.z.len() != d.p_rows() {
            return;
        }
        self.x.copy_from_slice(&it.x);
        let (ne, nc) = (self.n_eq, self.n_cone);
        self.lambda[..ne].copy_from_slice(&it.z);
        for k in 0..nc {
            self.lambda[ne + k] = -it.y[k];
        }
        for (k, &i) in self.box_idx.iter().enumerate() {
            self.lambda[ne + nc + k] = it.y_b[i];
        }
        self.w = self.a_tilde.mul_vec(&self.x);
        self.project_w();
        self.refresh_iterate();
    }

    /// Projects `w` onto `C` in place (used for initialization).
    fn project_w(&mut self) {
        let d = &self.prog.data;
        let (ne, nc) = (self.n_eq, self.n_cone);
        self.w[..ne].copy_from_slice(&d.h);
        let mut u: Vec<f64> = (0..nc).map(|k| d.b[k] - self.w[ne + k]).collect();
        self.cone_ws.project_in_place(&mut u);
        for k in 0..nc {
            self.w[ne + k] = d.b[k] - u[k];
        }
        for (k, &i) in self.box_idx.iter().enumerate() {
            let r = ne + nc + k;
            self.w[r] = self.w[r].clamp(self.prog.l[i], self.prog.u[i]);
        }
    }

    fn refresh_iterate(&mut self) {
        let d = &self.prog.data;
        let (ne, nc) = (self.n_eq, self.n_cone);
        let it = &mut self.iterate;
        it.x.copy_from_slice(&self.x);
        it.z.copy_from_slice(&self.lambda[..ne]);
        for k in 0..nc {
            it.s[k] = d.b[k] - self.w[ne + k];
            it.y[k] = -self.lambda[ne + k];
        }
        it.y_b.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in self.box_idx.iter().enumerate() {
            it.y_b[i] = self.lambda[ne + nc + k];
        }
        it.split_box_multiplier();
        it.iter = self.iter;
    }

    fn do_step(&mut self) {
        let n = self.x.len();
        let rows = self.w.len();
        let (ne, nc) = (self.n_eq, self.n_cone);
        let s = self.settings;
        let q = &self.prog.data.q;

        let mut rhs = Vec::with_capacity(n + rows);
        rhs.extend((0..n).map(|i| s.sigma * self.x[i] - q[i]));
        rhs.extend((0..rows).map(|r| self.w[r] - self.lambda[r] / self.rho[r]));
        let sol = self.factor.solve(&rhs);

        self.prev_x.copy_from_slice(&self.x);
        self.prev_lambda.copy_from_slice(&self.lambda);

        for i in 0..n {
            self.x[i] = s.alpha * sol[i] + (1.0 - s.alpha) * self.x[i];
        }
        let mut v = vec![0.0; rows];
        for r in 0..rows {
            let w_tilde = self.w[r] + (sol[n + r] - self.lambda[r]) / self.rho[r];
            v[r] = s.alpha * w_tilde + (1.0 - s.alpha) * self.w[r] + self.lambda[r] / self.rho[r];
        }

        let d = &self.prog.data;
        self.w[..ne].copy_from_slice(&d.h);
        for k in 0..nc {
            self.cone_input[k] = d.b[k] - v[ne + k];
        }
        let mut s_proj = vec![0.0; nc];
        let mut y_pol = vec![0.0; nc];
        self.cone_ws.split(&self.cone_input, &mut s_proj, &mut y_pol);
        for k in 0..nc {
            self.w[ne + k] = d.b[k] - s_proj[k];
        }
        for (k, &i) in self.box_idx.iter().enumerate() {
            let r = ne + nc + k;
            self.w[r] = v[r].clamp(self.prog.l[i], self.prog.u[i]);
        }
        for r in 0..rows {
            self.lambda[r] = self.rho[r] * (v[r] - self.w[r]);
        }
        // the conic multiplier is taken straight from the polar part of the split
        for k in 0..nc {
            self.lambda[ne + k] = -self.rho[ne + k] * y_pol[k];
        }

        self.iter += 1;
        self.refresh_iterate();
        self.iterate.s[..nc].copy_from_slice(&s_proj[..nc]);
        if self.iter >= s.max_iter {
            self.limit = true;
        }
    }

    /// `b − v` at the latest projection, which equals `s + y/ρ` row-wise.
    pub fn cone_input(&self) -> &[f64] {
        &self.cone_input
    }

    pub fn cone_rho(&self) -> &[f64] {
        &self.rho[self.n_eq..self.n_eq + self.n_cone]
    }

    pub fn program(&self) -> &ConicProgram {
        &self.prog
    }

    /// Dual objective `−½xᵀPx − hᵀz + bᵀy − σ_[l,u](y_b)` at the current iterate.
    pub fn dual_objective(&self) -> f64 {
        osm_dual_objective(&self.prog, &self.iterate)
    }

    pub fn check(&mut self, eps_abs: f64, eps_rel: f64) -> SubsolverStatus {
        let d = &self.prog.data;
        let ax = self.a_tilde.mul_vec(&self.x);
        let prim = vec_ops::norm_inf(&vec_ops::sub(&ax, &self.w));
        let px = d.p_mul(&self.x);
        let atl = self.a_tilde.t_mul_vec(&self.lambda);
        let mut dres = px.clone();
        vec_ops::axpy(1.0, &d.q, &mut dres);
        vec_ops::axpy(1.0, &atl, &mut dres);
        let dual = vec_ops::norm_inf(&dres);
        let eps_p = eps_abs + eps_rel * vec_ops::norm_inf(&ax).max(vec_ops::norm_inf(&self.w));
        let eps_d =
            eps_abs + eps_rel * vec_ops::norm_inf(&px).max(vec_ops::norm_inf(&atl)).max(vec_ops::norm_inf(&d.q));
        if prim <= eps_p && dual <= eps_d {
            let objective = self.prog.objective(&self.x).unwrap_or(f64::NAN);
            return SubsolverStatus::Optimal { x: self.x.clone(), objective };
        }
        if self.iter > 0 {
            if let Some(cert) = self.primal_infeasibility_certificate() {
                return SubsolverStatus::PrimalInfeasible { certificate: cert };
            }
            if let Some(cert) = self.dual_infeasibility_certificate() {
                return SubsolverStatus::DualInfeasible { certificate: cert };
            }
        }
        SubsolverStatus::Running
    }

    fn primal_infeasibility_certificate(&self) -> Option<Vec<f64>> {
        let eps = self.settings.eps_infeasible;
        let dl = vec_ops::sub(&self.lambda, &self.prev_lambda);
        let norm = vec_ops::norm_inf(&dl);
        if norm <= 1e-12 {
            return None;
        }
        if vec_ops::norm_inf(&self.a_tilde.t_mul_vec(&dl)) > eps * norm {
            return None;
        }
        let d = &self.prog.data;
        let (ne, nc) = (self.n_eq, self.n_cone);
        let dl_cone = &dl[ne..ne + nc];
        if cones::dual_cone_distance(&d.cones, dl_cone) > eps * norm {
            return None;
        }
        let (mut bl, mut bu) = (Vec::new(), Vec::new());
        for &i in &self.box_idx {
            bl.push(self.prog.l[i]);
            bu.push(self.prog.u[i]);
        }
        let support =
            vec_ops::dot(&d.h, &dl[..ne]) + vec_ops::dot(&d.b, dl_cone) + cones::support_box(&bl, &bu, &dl[ne + nc..]);
        (support < -eps * norm).then_some(dl)
    }

    fn dual_infeasibility_certificate(&self) -> Option<Vec<f64>> {
        let eps = self.settings.eps_infeasible;
        let dx = vec_ops::sub(&self.x, &self.prev_x);
        let norm = vec_ops::norm_inf(&dx);
        if norm <= 1e-12 {
            return None;
        }
        let d = &self.prog.data;
        if vec_ops::norm_inf(&d.p_mul(&dx)) > eps * norm || vec_ops::dot(&d.q, &dx) >= -eps * norm {
            return None;
        }
        if vec_ops::norm_inf(&d.g.mul_vec(&dx)) > eps * norm {
            return None;
        }
        let neg_adx: Vec<f64> = d.a.mul_vec(&dx).iter().map(|v| -v).collect();
        let proj = cones::project_cone(&d.cones, &neg_adx);
        if vec_ops::norm_inf(&vec_ops::sub(&neg_adx, &proj)) > eps * norm {
            return None;
        }
        for &i in &self.box_idx {
            if (self.prog.u[i].is_finite() && dx[i] > eps * norm) || (self.prog.l[i].is_finite() && dx[i] < -eps * norm)
            {
                return None;
            }
        }
        Some(dx)
    }
}

/// Dual objective of the operator-splitting form at an `Osm` iterate.
pub fn osm_dual_objective(prog: &ConicProgram, it: &DualIterate) -> f64 {
    let d = &prog.data;
    let px = d.p_mul(&it.x);
    -0.5 * vec_ops::dot(&it.x, &px) - vec_ops::dot(&d.h, &it.z) + vec_ops::dot(&d.b, &it.y)
        - cones::support_box(&prog.l, &prog.u, &it.y_b)
        + d.offset
}

impl Subsolver for AdmmState {
    fn step(&mut self) -> &DualIterate {
        self.do_step();
        &self.iterate
    }

    fn iterate(&self) -> &DualIterate {
        &self.iterate
    }

    fn dual_estimate(&self) -> f64 {
        self.dual_objective()
    }

    fn status(&mut self) -> SubsolverStatus {
        let (a, r) = (self.settings.eps_abs, self.settings.eps_rel);
        self.check(a, r)
    }

    fn check_due(&self) -> bool {
        self.iter.is_multiple_of(self.settings.check_interval) || self.limit
    }

    fn iterations(&self) -> usize {
        self.iter
    }

    fn limit_reached(&self) -> bool {
        self.limit
    }
}
