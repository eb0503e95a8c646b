//! Primal-dual interior-point subsolver.
//!
//! The node program is rewritten with every constraint as a conic row,
//! `Âx + ŝ = b̂`, `ŝ ∈ K̂`, where the rows are, in order:
//!
//! * `Gx = h` (zero cone),
//! * `Ax + s = b` with the cones of the program,
//! * `x_i = l_i` for pinned variables (`l_i = u_i`, zero cone),
//! * `x_i + s = u_i` for finite upper bounds,
//! * `−x_i + s = −l_i` for finite lower bounds.
//!
//! Iterates live in a homogeneous embedding `(x, s, z, τ, κ)` so infeasible
//! nodes are recognized from diverging rays instead of stalling. Directions
//! come from a Mehrotra predictor-corrector with Nesterov–Todd scaling. The
//! two box blocks are diagonal in the Newton system and are eliminated into
//! the `P` block before factoring.

mod scaling;

use crate::error::{Error, Result};
use crate::iterate::{Convention, DualIterate, Subsolver, SubsolverStatus};
use crate::linalg::{Ordering, QdFactor};
use crate::problem::{ConeKind, ConeSpec, ConicProgram};
use crate::sparse::{vec_ops, CscMatrix};
use scaling::NtScaling;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmSettings {
    /// Relative tolerance on residuals and gap.
    pub tol: f64,
    pub tol_infeasible: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Static regularization of the Newton system.
    pub reg: f64,
    pub refine_steps: usize,
    /// Interior push applied to a warm-start point.
    pub warm_push: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            tol_infeasible: 1e-8,
            max_iter: 100,
            step_fraction: 0.99,
            reg: 1e-8,
            refine_steps: 5,
            warm_push: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IpmState {
    prog: ConicProgram,
    pub settings: IpmSettings,
    n: usize,
    p: usize,
    m: usize,
    pinned: Vec<usize>,
    upper: Vec<usize>,
    lower: Vec<usize>,
    /// Rows that enter the factored system (`G`, `A`, pinned).
    n_core: usize,
    a_hat: CscMatrix,
    b_hat: Vec<f64>,
    cones_hat: Vec<ConeSpec>,
    scaling: NtScaling,
    kkt: CscMatrix,
    kkt_map: Vec<usize>,
    factor: Option<QdFactor>,
    /// `H` of the box rows, `s_j / z_j`.
    h_box: Vec<f64>,
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
    iterate: DualIterate,
    iter: usize,
    limit: bool,
    /// Largest refined residual of a Newton solve in the latest step.
    pub last_solve_residual: f64,
}

pub fn ipm_setup(prog: &ConicProgram) -> Result<IpmState> {
    IpmState::new(prog, IpmSettings::default())
}

pub fn ipm_iterate(state: &mut IpmState) -> DualIterate {
    state.step().clone()
}

/// Dual objective at the current, uncorrected iterate.
pub fn ipm_dual_estimate(state: &IpmState) -> f64 {
    ipm_dual_objective(&state.prog, &state.iterate)
}

pub fn ipm_status(state: &mut IpmState, tol: f64) -> SubsolverStatus {
    state.check(tol)
}

/// `bound·y` with `0·∞ = 0`.
fn bound_term(bound: f64, y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        bound * y
    }
}

/// `−½xᵀPx − hᵀz − bᵀy − uᵀy₊ + lᵀy₋` at an `Ipm` iterate. A positive
/// multiplier on an infinite bound gives `−∞`.
pub fn ipm_dual_objective(prog: &ConicProgram, it: &DualIterate) -> f64 {
    let d = &prog.data;
    let px = d.p_mul(&it.x);
    let mut val = -0.5 * vec_ops::dot(&it.x, &px) - vec_ops::dot(&d.h, &it.z) - vec_ops::dot(&d.b, &it.y) + d.offset;
    for i in 0..it.x.len() {
        val += -bound_term(prog.u[i], it.y_plus[i]) + bound_term(prog.l[i], it.y_minus[i]);
    }
    if val.is_nan() {
        f64::NEG_INFINITY
    } else {
        val
    }
}

impl IpmState {
    pub fn new(prog: &ConicProgram, settings: IpmSettings) -> Result<Self> {
        if let Some(i) = (0..prog.l.len().min(prog.u.len())).find(|&i| prog.l[i] > prog.u[i]) {
            return Err(Error::EmptyBox { index: i });
        }
        let violations = prog.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(violations));
        }
        let d = &prog.data;
        let (n, p, m) = (d.n(), d.p_rows(), d.m());
        let pinned: Vec<usize> = (0..n).filter(|&i| prog.l[i] == prog.u[i]).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| prog.l[i] != prog.u[i] && prog.u[i].is_finite()).collect();
        let lower: Vec<usize> = (0..n).filter(|&i| prog.l[i] != prog.u[i] && prog.l[i].is_finite()).collect();
        let n_core = p + m + pinned.len();
        let rows = n_core + upper.len() + lower.len();

        let mut t: Vec<(usize, usize, f64)> = d.g.triplets().collect();
        t.extend(d.a.triplets().map(|(i, j, v)| (p + i, j, v)));
        let mut b_hat = d.h.clone();
        b_hat.extend_from_slice(&d.b);
        let mut r = p + m;
        for &i in &pinned {
            t.push((r, i, 1.0));
            b_hat.push(prog.l[i]);
            r += 1;
        }
        for &i in &upper {
            t.push((r, i, 1.0));
            b_hat.push(prog.u[i]);
            r += 1;
        }
        for &i in &lower {
            t.push((r, i, -1.0));
            b_hat.push(-prog.l[i]);
            r += 1;
        }
        let a_hat = CscMatrix::from_triplets(rows, n, &t);

        let mut cones_hat = Vec::new();
        if p > 0 {
            cones_hat.push(ConeSpec::zero(p));
        }
        cones_hat.extend(d.cones.iter().copied());
        for (dim, c) in [
            (pinned.len(), ConeSpec::zero as fn(usize) -> ConeSpec),
            (upper.len(), ConeSpec::nonnegative),
            (lower.len(), ConeSpec::nonnegative),
        ] {
            if dim > 0 {
                cones_hat.push(c(dim));
            }
        }
        let scaling = NtScaling::new(&cones_hat);

        let mut state = Self {
            prog: prog.clone(),
            settings,
            n,
            p,
            m,
            pinned,
            upper,
            lower,
            n_core,
            a_hat,
            b_hat,
            cones_hat,
            scaling,
            kkt: CscMatrix::zeros(0, 0),
            kkt_map: Vec::new(),
            factor: None,
            h_box: vec![1.0; rows - n_core],
            x: vec![0.0; n],
            s: vec![0.0; rows],
            z: vec![0.0; rows],
            tau: 1.0,
            kappa: 1.0,
            iterate: DualIterate::zeros(n, m, p, Convention::Ipm),
            iter: 0,
            limit: false,
            last_solve_residual: 0.0,
        };
        let triplets = state.kkt_triplets(&NtScaling::new(&state.cones_hat));
        let (kkt, map) = CscMatrix::from_triplets_mapped(n + n_core, n + n_core, &triplets);
        state.kkt = kkt;
        state.kkt_map = map;
        state.initialize()?;
        Ok(state)
    }

    fn rows(&self) -> usize {
        self.b_hat.len()
    }

    fn box_rows(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.upper.iter().map(|&i| (i, 1.0)).chain(self.lower.iter().map(|&i| (i, -1.0)))
    }

    /// Newton-system entries in a fixed order, `H` of the core rows taken from `sc`.
    fn kkt_triplets(&self, sc: &NtScaling) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut t: Vec<(usize, usize, f64)> = self.prog.data.p.triplets().collect();
        let mut diag = vec![0.0; n];
        for (j, (i, _)) in self.box_rows().enumerate() {
            diag[i] += 1.0 / self.h_box[j];
        }
        t.extend(diag.iter().enumerate().map(|(i, &v)| (i, i, v)));
        t.extend(self.a_hat.triplets().filter(|&(r, _, _)| r < self.n_core).map(|(r, j, v)| (j, n + r, v)));
        t.extend(sc.h_upper().into_iter().filter(|&(i, _, _)| i < self.n_core).map(|(i, j, v)| (n + i, n + j, -v)));
        t
    }

    fn factorize(&mut self, sc: &NtScaling) -> Result<()> {
        let t = self.kkt_triplets(sc);
        self.kkt.refill(&self.kkt_map, t.iter().map(|e| e.2));
        match &mut self.factor {
            Some(f) => f.refactor(&self.kkt)?,
            None => {
                let signs: Vec<i8> = (0..self.n + self.n_core).map(|i| if i < self.n { 1 } else { -1 }).collect();
                self.factor = Some(QdFactor::new(&self.kkt, &signs, self.settings.reg, Ordering::Amd)?);
            }
        }
        Ok(())
    }

    /// Solves `[P, Âᵀ; Â, −H] (x, z) = (rx, rz)` with the box rows eliminated.
    fn solve_kkt(&mut self, rx: &[f64], rz: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (n, nc) = (self.n, self.n_core);
        let mut rhs = rx.to_vec();
        let box_rows: Vec<(usize, f64)> = self.box_rows().collect();
        for (j, &(i, a)) in box_rows.iter().enumerate() {
            rhs[i] += a * rz[nc + j] / self.h_box[j];
        }
        rhs.extend_from_slice(&rz[..nc]);
        let f = self.factor.as_ref().expect("factorized before solve");
        let (sol, res) = f.solve_refined(&rhs, self.settings.refine_steps)?;
        self.last_solve_residual = self.last_solve_residual.max(res);
        let x = sol[..n].to_vec();
        let mut z = sol[n..].to_vec();
        for (j, &(i, a)) in box_rows.iter().enumerate() {
            z.push((a * x[i] - rz[nc + j]) / self.h_box[j]);
        }
        Ok((x, z))
    }

    fn initialize(&mut self) -> Result<()> {
        let sc = NtScaling::new(&self.cones_hat);
        self.h_box.iter_mut().for_each(|h| *h = 1.0);
        self.factorize(&sc)?;
        let neg_q: Vec<f64> = self.prog.data.q.iter().map(|v| -v).collect();
        let b_hat = self.b_hat.clone();
        let (x, v) = self.solve_kkt(&neg_q, &b_hat)?;
        let zero_rows = self.zero_row_mask();
        self.x = x;
        self.s = v.iter().zip(&zero_rows).map(|(vi, &zr)| if zr { 0.0 } else { -vi }).collect();
        self.z = v;
        let floor = f64::EPSILON.sqrt();
        self.scaling.shift_uniform(&mut self.s, floor);
        self.scaling.shift_uniform(&mut self.z, floor);
        self.tau = 1.0;
        self.kappa = 1.0;
        self.iter = 0;
        self.limit = false;
        self.refresh_iterate();
        Ok(())
    }

    fn zero_row_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.rows()];
        for b in &self.scaling.blocks {
            if b.kind == ConeKind::Zero {
                mask[b.range.clone()].iter_mut().for_each(|v| *v = true);
            }
        }
        mask
    }

    /// Starts from a previous iterate, pushed into the interior.
    pub fn warm_start(&mut self, it: &DualIterate) {
        let it = it.to_ipm_convention();
        let (n, p, m) = (self.n, self.p, self.m);
        if it.x.len() != n || it.y.len() != m || it.z.len() != p {
            return;
        }
        let mut s = vec![0.0; self.rows()];
        let mut z = vec![0.0; self.rows()];
        z[..p].copy_from_slice(&it.z);
        s[p..p + m].copy_from_slice(&it.s);
        z[p..p + m].copy_from_slice(&it.y);
        let mut r = p + m;
        for &i in &self.pinned {
            z[r] = it.y_plus[i] - it.y_minus[i];
            r += 1;
        }
        for &i in &self.upper {
            s[r] = self.prog.u[i] - it.x[i];
            z[r] = it.y_plus[i];
            r += 1;
        }
        for &i in &self.lower {
            s[r] = it.x[i] - self.prog.l[i];
            z[r] = it.y_minus[i];
            r += 1;
        }
        let push = self.settings.warm_push;
        self.scaling.shift_blocks(&mut s, push, push);
        self.scaling.shift_blocks(&mut z, push, push);
        let nu = self.scaling.degree().max(1) as f64;
        self.x = it.x.clone();
        self.s = s;
        self.z = z;
        self.tau = 1.0;
        self.kappa = (vec_ops::dot(&self.s, &self.z) / nu).max(push);
        self.iter = 0;
        self.limit = false;
        self.refresh_iterate();
    }

    fn refresh_iterate(&mut self) {
        let (p, m) = (self.p, self.m);
        let t = self.tau;
        let it = &mut self.iterate;
        it.x.iter_mut().zip(&self.x).for_each(|(a, b)| *a = b / t);
        it.z.iter_mut().zip(&self.z[..p]).for_each(|(a, b)| *a = b / t);
        it.y.iter_mut().zip(&self.z[p..p + m]).for_each(|(a, b)| *a = b / t);
        it.s.iter_mut().zip(&self.s[p..p + m]).for_each(|(a, b)| *a = b / t);
        it.y_plus.iter_mut().for_each(|v| *v = 0.0);
        it.y_minus.iter_mut().for_each(|v| *v = 0.0);
        let mut r = p + m;
        for &i in &self.pinned {
            let w = self.z[r] / t;
            it.y_plus[i] = w.max(0.0);
            it.y_minus[i] = (-w).max(0.0);
            r += 1;
        }
        for &i in &self.upper {
            it.y_plus[i] = self.z[r] / t;
            r += 1;
        }
        for &i in &self.lower {
            it.y_minus[i] = self.z[r] / t;
            r += 1;
        }
        for i in 0..it.y_b.len() {
            it.y_b[i] = it.y_plus[i] - it.y_minus[i];
        }
        it.iter = self.iter;
    }

    /// `(r_x, r_z, r_τ)` of the embedding at the current point.
    fn residuals(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let d = &self.prog.data;
        let px = d.p_mul(&self.x);
        let mut rx = px.clone();
        self.a_hat.t_mul_vec_acc(&self.z, &mut rx, 1.0);
        vec_ops::axpy(self.tau, &d.q, &mut rx);
        let mut rz = self.a_hat.mul_vec(&self.x);
        vec_ops::axpy(1.0, &self.s, &mut rz);
        vec_ops::axpy(-self.tau, &self.b_hat, &mut rz);
        let rt = vec_ops::dot(&d.q, &self.x)
            + vec_ops::dot(&self.b_hat, &self.z)
            + self.kappa
            + vec_ops::dot(&self.x, &px) / self.tau;
        (rx, rz, rt)
    }

    fn max_step(&self, ds: &[f64], dz: &[f64], dtau: f64, dkappa: f64) -> f64 {
        let mut a = self.scaling.max_step(&self.s, ds).min(self.scaling.max_step(&self.z, dz));
        if dtau < 0.0 {
            a = a.min(-self.tau / dtau);
        }
        if dkappa < 0.0 {
            a = a.min(-self.kappa / dkappa);
        }
        a
    }

    fn do_step(&mut self) -> Result<()> {
        let n_rows = self.rows();
        let nc = self.n_core;
        let (rx, rz, rt) = self.residuals();
        let nu = self.scaling.degree() as f64;
        let mu = (vec_ops::dot(&self.s, &self.z) + self.tau * self.kappa) / (nu + 1.0);

        self.scaling.update(&self.s, &self.z);
        for j in 0..n_rows - nc {
            self.h_box[j] = self.s[nc + j] / self.z[nc + j];
        }
        let sc = self.scaling.clone();
        self.factorize(&sc)?;
        self.last_solve_residual = 0.0;

        let d = &self.prog.data;
        let q = d.q.clone();
        let neg_q: Vec<f64> = q.iter().map(|v| -v).collect();
        let b_hat = self.b_hat.clone();
        let (x1, z1) = self.solve_kkt(&neg_q, &b_hat)?;
        let xi: Vec<f64> = self.x.iter().map(|v| v / self.tau).collect();
        let pxi = self.prog.data.p_mul(&xi);
        let mut qp = q.clone();
        vec_ops::axpy(2.0, &pxi, &mut qp);
        let xpx = vec_ops::dot(&xi, &pxi);
        let (tau, kappa) = (self.tau, self.kappa);
        let denom = vec_ops::dot(&qp, &x1) + vec_ops::dot(&b_hat, &z1) - kappa / tau - xpx;

        let lambda = sc.lambda.clone();
        // returns (Δx, Δs, Δz, Δτ, Δκ) for the given right-hand sides
        let direction = |st: &mut Self,
                         dx: &[f64],
                         dz: &[f64],
                         dt: f64,
                         ds: &[f64],
                         dk: f64|
         -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
            let w_ls = sc.mul_w(&sc.jordan_div(&lambda, ds));
            let rhs_x: Vec<f64> = dx.iter().map(|v| -v).collect();
            let rhs_z: Vec<f64> = dz.iter().zip(&w_ls).map(|(a, b)| -a + b).collect();
            let (x2, z2) = st.solve_kkt(&rhs_x, &rhs_z)?;
            let dtau = (-dt + dk / tau - vec_ops::dot(&qp, &x2) - vec_ops::dot(&b_hat, &z2)) / denom;
            let ddx: Vec<f64> = x2.iter().zip(&x1).map(|(a, b)| a + dtau * b).collect();
            let ddz: Vec<f64> = z2.iter().zip(&z1).map(|(a, b)| a + dtau * b).collect();
            let hdz = sc.mul_h(&ddz);
            let dds: Vec<f64> = w_ls.iter().zip(&hdz).map(|(a, b)| -a - b).collect();
            let dkappa = (-dk - kappa * dtau) / tau;
            Ok((ddx, dds, ddz, dtau, dkappa))
        };

        let ds_aff = sc.jordan_prod(&lambda, &lambda);
        let (_, dsa, dza, dta, dka) = direction(self, &rx, &rz, rt, &ds_aff, tau * kappa)?;
        let alpha_aff = self.max_step(&dsa, &dza, dta, dka).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        let f = 1.0 - sigma;
        let rx_c: Vec<f64> = rx.iter().map(|v| f * v).collect();
        let rz_c: Vec<f64> = rz.iter().map(|v| f * v).collect();
        let cross = sc.jordan_prod(&sc.mul_winv(&dsa), &sc.mul_w(&dza));
        let e = sc.identity(n_rows, sigma * mu);
        let ds_c: Vec<f64> = (0..n_rows).map(|k| ds_aff[k] + cross[k] - e[k]).collect();
        let dk_c = tau * kappa + dta * dka - sigma * mu;
        let (dx, ds, dz, dt, dk) = direction(self, &rx_c, &rz_c, f * rt, &ds_c, dk_c)?;

        let alpha = (self.settings.step_fraction * self.max_step(&ds, &dz, dt, dk)).min(1.0);
        if !(alpha > 1e-12) || !alpha.is_finite() {
            return Err(Error::Config("interior-point step vanished".into()));
        }
        vec_ops::axpy(alpha, &dx, &mut self.x);
        vec_ops::axpy(alpha, &ds, &mut self.s);
        vec_ops::axpy(alpha, &dz, &mut self.z);
        self.tau += alpha * dt;
        self.kappa += alpha * dk;
        if self.x.iter().chain(&self.s).chain(&self.z).any(|v| !v.is_finite()) {
            return Err(Error::Config("interior-point iterate became non-finite".into()));
        }
        Ok(())
    }

    pub fn check(&mut self, tol: f64) -> SubsolverStatus {
        let d = &self.prog.data;
        let tau = self.tau;
        let xs: Vec<f64> = self.x.iter().map(|v| v / tau).collect();
        let ss: Vec<f64> = self.s.iter().map(|v| v / tau).collect();
        let zs: Vec<f64> = self.z.iter().map(|v| v / tau).collect();
        let px = d.p_mul(&xs);
        let xpx = vec_ops::dot(&xs, &px);
        let pcost = 0.5 * xpx + vec_ops::dot(&d.q, &xs);
        let dcost = -0.5 * xpx - vec_ops::dot(&self.b_hat, &zs);

        let mut rp = self.a_hat.mul_vec(&xs);
        vec_ops::axpy(1.0, &ss, &mut rp);
        vec_ops::axpy(-1.0, &self.b_hat, &mut rp);
        let mut rd = px.clone();
        self.a_hat.t_mul_vec_acc(&zs, &mut rd, 1.0);
        vec_ops::axpy(1.0, &d.q, &mut rd);
        let ninf = vec_ops::norm_inf;
        let xn = ninf(&xs);
        let ok_p = ninf(&rp) <= tol * (1.0f64).max(ninf(&self.b_hat) + xn + ninf(&ss));
        let ok_d = ninf(&rd) <= tol * (1.0f64).max(ninf(&d.q) + xn + ninf(&zs));
        let ok_gap = (pcost - dcost).abs() <= tol * (1.0f64).max(pcost.abs().min(dcost.abs()));
        if ok_p && ok_d && ok_gap && pcost.is_finite() {
            return SubsolverStatus::Optimal { objective: pcost + d.offset, x: xs };
        }

        let eps = self.settings.tol_infeasible;
        let bz = vec_ops::dot(&self.b_hat, &self.z);
        if bz < -eps && ninf(&self.a_hat.t_mul_vec(&self.z)) <= eps * bz.abs() {
            let cert = self.z.iter().map(|v| v / bz.abs()).collect();
            return SubsolverStatus::PrimalInfeasible { certificate: cert };
        }
        let qx = vec_ops::dot(&d.q, &self.x);
        if qx < -eps {
            let mut ax_s = self.a_hat.mul_vec(&self.x);
            vec_ops::axpy(1.0, &self.s, &mut ax_s);
            if ninf(&d.p_mul(&self.x)) <= eps * qx.abs() && ninf(&ax_s) <= eps * qx.abs() {
                let cert = self.x.iter().map(|v| v / qx.abs()).collect();
                return SubsolverStatus::DualInfeasible { certificate: cert };
            }
        }
        SubsolverStatus::Running
    }

    pub fn program(&self) -> &ConicProgram {
        &self.prog
    }

    /// Homogenizing variables `(τ, κ)`.
    pub fn embedding(&self) -> (f64, f64) {
        (self.tau, self.kappa)
    }
}

impl Subsolver for IpmState {
    fn step(&mut self) -> &DualIterate {
        if !self.limit {
            match self.do_step() {
                Ok(()) => {
                    self.iter += 1;
                    self.refresh_iterate();
                    if self.iter >= self.settings.max_iter {
                        self.limit = true;
                    }
                }
                Err(_) => self.limit = true,
            }
        }
        &self.iterate
    }

    fn iterate(&self) -> &DualIterate {
        &self.iterate
    }

    fn dual_estimate(&self) -> f64 {
        ipm_dual_objective(&self.prog, &self.iterate)
    }

    fn status(&mut self) -> SubsolverStatus {
        let tol = self.settings.tol;
        self.check(tol)
    }

    fn check_due(&self) -> bool {
        true
    }

    fn iterations(&self) -> usize {
        self.iter
    }

    fn limit_reached(&self) -> bool {
        self.limit
    }
}
