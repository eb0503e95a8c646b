//! Dual corrections: turn a subsolver iterate whose conic multipliers are
//! already cone-feasible into a dual-feasible point by cancelling the
//! stationarity residual through the box and equality multipliers.
//!
//! The objective at the corrected point is a valid lower bound on the node
//! optimum. Two corrections are offered:
//!
//! * [`simple_correction`] moves only the box multiplier (`Δy_b = −r`) and
//!   needs every bound finite;
//! * [`opt_correction`] also moves `x` and `z`, solving one regularized
//!   least-squares system whose matrix is fixed for the whole tree.

use serde::{Deserialize, Serialize};

use crate::cones;
use crate::error::{Error, Result};
use crate::iterate::{Convention, DualIterate};
use crate::linalg::{psd_rank, Ordering, QdFactor};
use crate::problem::ConicProgram;
use crate::sparse::{vec_ops, CscMatrix};

/// Relative pivot threshold for the rank test.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionMethod {
    Simple,
    OptimizationBased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub dx: Vec<f64>,
    /// Box-multiplier step restricted to the bounded set.
    pub dy_bounded: Vec<f64>,
    pub dy_b: Vec<f64>,
    pub dy_plus: Vec<f64>,
    pub dy_minus: Vec<f64>,
    pub dz: Vec<f64>,
    pub method: CorrectionMethod,
}

impl Correction {
    fn from_box_step(
        dy_b: Vec<f64>,
        dx: Vec<f64>,
        dz: Vec<f64>,
        dy_bounded: Vec<f64>,
        method: CorrectionMethod,
    ) -> Self {
        let dy_plus: Vec<f64> = dy_b.iter().map(|v| v.max(0.0)).collect();
        let dy_minus = dy_plus.iter().zip(&dy_b).map(|(p, d)| p - d).collect();
        Self { dx, dy_bounded, dy_b, dy_plus, dy_minus, dz, method }
    }
}

/// Stationarity residual under the iterate's convention:
/// `Px + q + Gᵀz − Aᵀy + y_b` (`Osm`) or `Px + q + Gᵀz + Aᵀy + y₊ − y₋` (`Ipm`).
pub fn dual_residual(prog: &ConicProgram, it: &DualIterate) -> Vec<f64> {
    let d = &prog.data;
    let mut r = d.p_mul(&it.x);
    vec_ops::axpy(1.0, &d.q, &mut r);
    d.g.t_mul_vec_acc(&it.z, &mut r, 1.0);
    match it.convention {
        Convention::Osm => {
            d.a.t_mul_vec_acc(&it.y, &mut r, -1.0);
            vec_ops::axpy(1.0, &it.y_b, &mut r);
        }
        Convention::Ipm => {
            d.a.t_mul_vec_acc(&it.y, &mut r, 1.0);
            vec_ops::axpy(1.0, &it.y_plus, &mut r);
            vec_ops::axpy(-1.0, &it.y_minus, &mut r);
        }
    }
    r
}

/// `Δy_b = −r`, split as `Δy₊ = max(0, Δy_b)`, `Δy₋ = Δy₊ − Δy_b`.
///
/// Refuses programs with an infinite bound, whose support function would
/// turn the bound into `−∞`.
pub fn simple_correction(prog: &ConicProgram, r: &[f64]) -> Result<Correction> {
    if let Some(i) = (0..prog.n()).find(|&i| !prog.l[i].is_finite() || !prog.u[i].is_finite()) {
        return Err(Error::InfiniteBound { index: i });
    }
    let n = r.len();
    let dy_b: Vec<f64> = r.iter().map(|v| -v).collect();
    Ok(Correction::from_box_step(
        dy_b.clone(),
        vec![0.0; n],
        vec![0.0; prog.data.p_rows()],
        dy_b,
        CorrectionMethod::Simple,
    ))
}

/// Factored system
/// `[P, I_Bᵀ, Gᵀ; I_B, −ηI, 0; G, 0, −γI]`, built once per problem.
#[derive(Debug, Clone)]
pub struct CorrectionEngine {
    pub bounded: Vec<usize>,
    pub eta: f64,
    pub gamma: f64,
    n: usize,
    p: usize,
    factor: QdFactor,
    g: CscMatrix,
    h: Vec<f64>,
}

/// `P + I_BᵀI_B/η + GᵀG/γ` as a dense matrix.
fn schur_dense(p_upper: &CscMatrix, bounded: &[usize], g: &CscMatrix, eta: f64, gamma: f64) -> Vec<Vec<f64>> {
    let n = p_upper.rows;
    let mut s = vec![vec![0.0; n]; n];
    for (i, j, v) in p_upper.triplets() {
        s[i][j] += v;
        if i != j {
            s[j][i] += v;
        }
    }
    for &i in bounded {
        s[i][i] += 1.0 / eta;
    }
    let gt = g.transpose();
    for r in 0..gt.cols {
        let rng = gt.colptr[r]..gt.colptr[r + 1];
        for a in rng.clone() {
            for b in rng.clone() {
                s[gt.rowval[a]][gt.rowval[b]] += gt.nzval[a] * gt.nzval[b] / gamma;
            }
        }
    }
    s
}

/// True iff `[P, I_Bᵀ, Gᵀ]` has full row rank `n`, decided from the pivots of
/// `P + I_BᵀI_B + GᵀG` with threshold `1e-10·max diagonal`.
pub fn rank_check(p_upper: &CscMatrix, bounded: &[usize], g: &CscMatrix) -> bool {
    let n = p_upper.rows;
    if n == 0 {
        return true;
    }
    let (rank, _) = psd_rank(schur_dense(p_upper, bounded, g, 1.0, 1.0), RANK_TOL);
    rank == n
}

/// Indices with both bounds finite.
pub fn default_bounded_set(l: &[f64], u: &[f64]) -> Vec<usize> {
    (0..l.len()).filter(|&i| l[i].is_finite() && u[i].is_finite()).collect()
}

/// Builds and factors the correction system. `bounded = None` selects every
/// index with both root bounds finite.
pub fn build_correction_kkt(
    prog: &ConicProgram,
    bounded: Option<Vec<usize>>,
    eta: f64,
    gamma: f64,
) -> Result<CorrectionEngine> {
    if !(eta > 0.0 && gamma > 0.0) {
        return Err(Error::Config("correction regularizers must be positive".into()));
    }
    let d = &prog.data;
    let (n, p) = (d.n(), d.p_rows());
    let mut bounded = bounded.unwrap_or_else(|| default_bounded_set(&prog.l, &prog.u));
    bounded.sort_unstable();
    bounded.dedup();
    if let Some(&i) = bounded.iter().find(|&&i| i >= n) {
        return Err(Error::Dimension { what: "bounded index", expected: n, found: i });
    }
    let nb = bounded.len();
    let (rank, _) = psd_rank(schur_dense(&d.p, &bounded, &d.g, eta, gamma), RANK_TOL);
    if rank < n {
        return Err(Error::RankDeficient { rank, n });
    }

    let mut t: Vec<(usize, usize, f64)> = d.p.triplets().collect();
    for (k, &i) in bounded.iter().enumerate() {
        t.push((i, n + k, 1.0));
        t.push((n + k, n + k, -eta));
    }
    t.extend(d.g.triplets().map(|(r, j, v)| (j, n + nb + r, v)));
    t.extend((0..p).map(|r| (n + nb + r, n + nb + r, -gamma)));
    t.extend((0..n).map(|i| (i, i, 0.0)));
    let dim = n + nb + p;
    let kkt = CscMatrix::from_triplets(dim, dim, &t);
    let signs: Vec<i8> = (0..dim).map(|i| if i < n { 1 } else { -1 }).collect();
    // eliminating the negative-definite blocks first leaves the positive
    // definite Schur complement for the x block
    let perm: Vec<usize> = (n..dim).chain(0..n).collect();
    let symbolic = crate::linalg::QdSymbolic::analyse(&kkt, Ordering::Given, Some(&perm))?;
    let factor = QdFactor::with_symbolic(std::sync::Arc::new(symbolic), &kkt, &signs, 0.0)?;
    Ok(CorrectionEngine { bounded, eta, gamma, n, p, factor, g: d.g.clone(), h: d.h.clone() })
}

impl CorrectionEngine {
    pub fn dim(&self) -> usize {
        self.n + self.bounded.len() + self.p
    }
}

/// Solves `[P, I_Bᵀ, Gᵀ; I_B, −ηI, 0; G, 0, −γI](Δx, Δy_B, Δz) =
/// (−r, −I_B x, h − Gx)` and completes `Δy_b` with zeros off the bounded set.
pub fn opt_correction(engine: &CorrectionEngine, it: &DualIterate, r: &[f64]) -> Result<Correction> {
    let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    rhs.extend(engine.bounded.iter().map(|&i| -it.x[i]));
    let gx = engine.g.mul_vec(&it.x);
    rhs.extend(engine.h.iter().zip(&gx).map(|(h, g)| h - g));
    solve_correction(engine, rhs, r)
}

/// Same system with right-hand side `(−r, 0, 0)`: the correction of least
/// `ΔxᵀPΔx + η‖Δy_B‖² + γ‖Δz‖²`. It vanishes with `r`, so its corrected cost
/// tends to the uncorrected dual cost as the iterate converges.
pub fn residual_correction(engine: &CorrectionEngine, r: &[f64]) -> Result<Correction> {
    let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    rhs.resize(engine.dim(), 0.0);
    solve_correction(engine, rhs, r)
}

fn solve_correction(engine: &CorrectionEngine, rhs: Vec<f64>, r: &[f64]) -> Result<Correction> {
    let (n, nb, p) = (engine.n, engine.bounded.len(), engine.p);
    let (sol, _) = engine.factor.solve_refined(&rhs, 3)?;
    let dx = sol[..n].to_vec();
    let dy_bounded = sol[n..n + nb].to_vec();
    let dz = sol[n + nb..n + nb + p].to_vec();
    let mut dy_b = vec![0.0; n];
    for (k, &i) in engine.bounded.iter().enumerate() {
        dy_b[i] = dy_bounded[k];
    }
    // stationarity is restored iff PΔx + I_BᵀΔy_B + GᵀΔz = −r
    let mut res = engine.factor.matrix().sym_upper_mul_vec(&sol)[..n].to_vec();
    vec_ops::axpy(1.0, r, &mut res);
    let rn = vec_ops::norm_inf(&res);
    if !(rn <= 1e-8 * (1.0 + vec_ops::norm_inf(r))) {
        return Err(Error::CorrectionInfeasible { residual: rn });
    }
    Ok(Correction::from_box_step(dy_b, dx, dz, dy_bounded, CorrectionMethod::OptimizationBased))
}

/// Applies a correction to an iterate, keeping its convention.
pub fn apply_correction(it: &DualIterate, corr: &Correction) -> DualIterate {
    let mut out = it.clone();
    vec_ops::axpy(1.0, &corr.dx, &mut out.x);
    vec_ops::axpy(1.0, &corr.dz, &mut out.z);
    vec_ops::axpy(1.0, &corr.dy_b, &mut out.y_b);
    vec_ops::axpy(1.0, &corr.dy_plus, &mut out.y_plus);
    vec_ops::axpy(1.0, &corr.dy_minus, &mut out.y_minus);
    out
}

/// Dual objective at the corrected point:
/// `−½xᵀPx − hᵀz + bᵀy − σ_[l,u](y_b)` for `Osm` iterates and
/// `−½xᵀPx − hᵀz − bᵀy − σ_[l,u](y₊ − y₋)` for `Ipm` iterates.
///
/// Under `Ipm` the two corrected box multipliers are netted before the
/// support function is taken; this is the largest value of `−uᵀy₊ + lᵀy₋`
/// over all splits of the same net multiplier. An infinite support value
/// yields `−∞`.
pub fn corrected_dual_cost(prog: &ConicProgram, it: &DualIterate, corr: &Correction) -> Result<f64> {
    let c = apply_correction(it, corr);
    let r0 = dual_residual(prog, it);
    let r1 = dual_residual(prog, &c);
    let d = &prog.data;
    let scale = [
        vec_ops::norm_inf(&d.p_mul(&c.x)),
        vec_ops::norm_inf(&d.q),
        vec_ops::norm_inf(&d.g.t_mul_vec(&c.z)),
        vec_ops::norm_inf(&d.a.t_mul_vec(&c.y)),
        vec_ops::norm_inf(&c.y_b),
        vec_ops::norm_inf(&c.y_plus),
        vec_ops::norm_inf(&c.y_minus),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let rn = vec_ops::norm_inf(&r1);
    if !(rn <= 1e-8 * (1.0 + vec_ops::norm_inf(&r0)) + 1e-13 * scale) {
        return Err(Error::CorrectionInfeasible { residual: rn });
    }
    let px = d.p_mul(&c.x);
    let base = -0.5 * vec_ops::dot(&c.x, &px) - vec_ops::dot(&d.h, &c.z) + d.offset;
    let (conic, net) = match c.convention {
        Convention::Osm => (vec_ops::dot(&d.b, &c.y), c.y_b.clone()),
        Convention::Ipm => (-vec_ops::dot(&d.b, &c.y), c.y_plus.iter().zip(&c.y_minus).map(|(a, b)| a - b).collect()),
    };
    let support = cones::support_box(&prog.l, &prog.u, &net);
    let val = base + conic - support;
    Ok(if val.is_nan() { f64::NEG_INFINITY } else { val })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ConeSpec;

    fn toy() -> ConicProgram {
        ConicProgram::new(
            CscMatrix::identity(1),
            vec![0.0],
            CscMatrix::zeros(0, 1),
            vec![],
            CscMatrix::zeros(0, 1),
            vec![],
            vec![],
            vec![1.0],
            vec![2.0],
        )
        .unwrap()
    }

    fn ipm_at(x: f64) -> DualIterate {
        let mut it = DualIterate::zeros(1, 0, 0, Convention::Ipm);
        it.x = vec![x];
        it
    }

    #[test]
    fn residual_of_toy_iterates() {
        assert_eq!(dual_residual(&toy(), &ipm_at(1.0)), vec![1.0]);
        let zero = DualIterate::zeros(1, 0, 0, Convention::Osm);
        let mut prog = toy();
        std::sync::Arc::make_mut(&mut prog.data).q = vec![-3.0];
        assert_eq!(dual_residual(&prog, &zero), vec![-3.0]);
    }

    #[test]
    fn simple_split_by_sign() {
        let prog = ConicProgram::new(
            CscMatrix::zeros(2, 2),
            vec![0.0; 2],
            CscMatrix::zeros(0, 2),
            vec![],
            CscMatrix::zeros(0, 2),
            vec![],
            vec![],
            vec![0.0; 2],
            vec![1.0; 2],
        )
        .unwrap();
        let c = simple_correction(&prog, &[-3.0, 2.0]).unwrap();
        assert_eq!(c.dy_b, vec![3.0, -2.0]);
        assert_eq!(c.dy_plus, vec![3.0, 0.0]);
        assert_eq!(c.dy_minus, vec![0.0, 2.0]);
        let z = simple_correction(&prog, &[0.0, 0.0]).unwrap();
        assert!(z.dy_b.iter().chain(&z.dy_plus).chain(&z.dy_minus).all(|v| *v == 0.0));
    }

    #[test]
    fn simple_correction_on_toy() {
        let prog = toy();
        let it = ipm_at(1.0);
        let c = simple_correction(&prog, &dual_residual(&prog, &it)).unwrap();
        assert_eq!((c.dy_plus[0], c.dy_minus[0]), (0.0, 1.0));
        assert!((corrected_dual_cost(&prog, &it, &c).unwrap() - 0.5).abs() < 1e-15);
        let it2 = ipm_at(2.0);
        let c2 = simple_correction(&prog, &dual_residual(&prog, &it2)).unwrap();
        assert_eq!(c2.dy_minus[0], 2.0);
        assert_eq!(corrected_dual_cost(&prog, &it2, &c2).unwrap(), 0.0);
    }

    #[test]
    fn simple_correction_refuses_infinite_bound() {
        let mut prog = toy();
        prog.u[0] = f64::INFINITY;
        assert!(matches!(simple_correction(&prog, &[1.0]), Err(Error::InfiniteBound { index: 0 })));
    }

    #[test]
    fn toy_system_and_optimization_step() {
        let prog = toy();
        let e = build_correction_kkt(&prog, None, 1.0, 1.0).unwrap();
        let dense = e.factor.matrix().to_dense();
        assert_eq!(dense, vec![vec![1.0, 1.0], vec![0.0, -1.0]]);
        let it = ipm_at(1.0);
        let c = opt_correction(&e, &it, &[1.0]).unwrap();
        assert!((c.dx[0] + 1.0).abs() < 1e-14 && c.dy_bounded[0].abs() < 1e-14);
    }

    #[test]
    fn opt_correction_zero_for_stationary_point() {
        let prog = ConicProgram::new(
            CscMatrix::identity(1),
            vec![0.0],
            CscMatrix::zeros(0, 1),
            vec![],
            CscMatrix::zeros(0, 1),
            vec![],
            vec![],
            vec![-1.0],
            vec![1.0],
        )
        .unwrap();
        let e = build_correction_kkt(&prog, None, 1.0, 1.0).unwrap();
        let c = opt_correction(&e, &ipm_at(0.0), &[0.0]).unwrap();
        assert!(c.dx.iter().chain(&c.dy_b).all(|v| *v == 0.0));
    }

    #[test]
    fn residual_correction_scales_with_residual() {
        let prog = toy();
        let e = build_correction_kkt(&prog, None, 1.0, 1.0).unwrap();
        let zero = residual_correction(&e, &[0.0]).unwrap();
        assert!(zero.dx.iter().chain(&zero.dy_b).all(|v| *v == 0.0));
        let a = residual_correction(&e, &[0.5]).unwrap();
        let b = residual_correction(&e, &[1.0]).unwrap();
        assert!((2.0 * a.dx[0] - b.dx[0]).abs() < 1e-14);
        assert!((2.0 * a.dy_b[0] - b.dy_b[0]).abs() < 1e-14);
        let it = ipm_at(0.3);
        let r = dual_residual(&prog, &it);
        let fixed = apply_correction(&it, &residual_correction(&e, &r).unwrap());
        assert!(vec_ops::norm_inf(&dual_residual(&prog, &fixed)) < 1e-12);
    }

    #[test]
    fn singular_system_reported() {
        let prog = ConicProgram::new(
            CscMatrix::zeros(2, 2),
            vec![0.0; 2],
            CscMatrix::zeros(0, 2),
            vec![],
            CscMatrix::zeros(0, 2),
            vec![],
            vec![],
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
        )
        .unwrap();
        assert!(!rank_check(&prog.data.p, &[], &prog.data.g));
        assert!(matches!(build_correction_kkt(&prog, None, 1.0, 1.0), Err(Error::RankDeficient { rank: 0, n: 2 })));
        assert!(rank_check(&prog.data.p, &[0, 1], &prog.data.g));
        assert!(rank_check(&CscMatrix::identity(2), &[], &prog.data.g));
    }

    #[test]
    fn zero_problem_zero_cost() {
        let prog = ConicProgram::new(
            CscMatrix::zeros(3, 3),
            vec![0.0; 3],
            CscMatrix::zeros(0, 3),
            vec![],
            CscMatrix::zeros(0, 3),
            vec![],
            vec![],
            vec![0.0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let it = DualIterate::zeros(3, 0, 0, Convention::Osm);
        let c = simple_correction(&prog, &dual_residual(&prog, &it)).unwrap();
        assert_eq!(corrected_dual_cost(&prog, &it, &c).unwrap(), 0.0);
    }

    #[test]
    fn conventions_agree() {
        let a = CscMatrix::from_dense(&[vec![1.0, 2.0], vec![0.5, -1.0]]);
        let prog = ConicProgram::new(
            CscMatrix::from_dense(&[vec![2.0, 0.5], vec![0.5, 1.0]]),
            vec![0.3, -0.7],
            CscMatrix::from_dense(&[vec![1.0, 1.0]]),
            vec![0.4],
            a,
            vec![1.0, 2.0],
            vec![ConeSpec::nonnegative(2)],
            vec![-1.0, -2.0],
            vec![1.5, 0.5],
        )
        .unwrap();
        let mut osm = DualIterate::zeros(2, 2, 1, Convention::Osm);
        osm.x = vec![0.2, -0.4];
        osm.y = vec![-0.3, -1.1];
        osm.z = vec![0.6];
        osm.y_b = vec![0.25, -0.8];
        osm.split_box_multiplier();
        let ipm = osm.to_ipm_convention();
        let r_o = dual_residual(&prog, &osm);
        let r_i = dual_residual(&prog, &ipm);
        assert!(r_o.iter().zip(&r_i).all(|(a, b)| (a - b).abs() < 1e-15));
        let co = corrected_dual_cost(&prog, &osm, &simple_correction(&prog, &r_o).unwrap()).unwrap();
        let ci = corrected_dual_cost(&prog, &ipm, &simple_correction(&prog, &r_i).unwrap()).unwrap();
        assert!((co - ci).abs() <= 1e-12);
        let e = build_correction_kkt(&prog, None, 1.0, 1.0).unwrap();
        let oo = corrected_dual_cost(&prog, &osm, &opt_correction(&e, &osm, &r_o).unwrap()).unwrap();
        let oi = corrected_dual_cost(&prog, &ipm, &opt_correction(&e, &ipm, &r_i).unwrap()).unwrap();
        assert!((oo - oi).abs() <= 1e-12);
    }
}
