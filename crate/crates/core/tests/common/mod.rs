#![allow(dead_code)]

use conic_bnb::admm::{AdmmSettings, AdmmState};
use conic_bnb::ipm::{IpmSettings, IpmState};
use conic_bnb::iterate::{Subsolver, SubsolverStatus};
use conic_bnb::problem::{build_relaxation, ConicProgram, MicpProblem};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs a subsolver until it reports a verdict or hits its cap.
pub fn run_to_end(s: &mut dyn Subsolver) -> SubsolverStatus {
    loop {
        s.step();
        if s.check_due() {
            let st = s.status();
            if st != SubsolverStatus::Running {
                return st;
            }
        }
        if s.limit_reached() {
            return SubsolverStatus::Running;
        }
    }
}

pub fn ipm_objective(prog: &ConicProgram) -> Option<f64> {
    let mut s = IpmState::new(prog, IpmSettings::default()).ok()?;
    match run_to_end(&mut s) {
        SubsolverStatus::Optimal { objective, .. } => Some(objective),
        SubsolverStatus::PrimalInfeasible { .. } => Some(f64::INFINITY),
        _ => None,
    }
}

pub fn admm_objective(prog: &ConicProgram) -> Option<f64> {
    let mut s = AdmmState::new(prog, AdmmSettings::default()).ok()?;
    match run_to_end(&mut s) {
        SubsolverStatus::Optimal { objective, .. } => Some(objective),
        SubsolverStatus::PrimalInfeasible { .. } => Some(f64::INFINITY),
        _ => None,
    }
}

fn dense_p(prog: &ConicProgram) -> DMatrix<f64> {
    let n = prog.n();
    let mut p = DMatrix::zeros(n, n);
    for (i, j, v) in prog.data.p.triplets() {
        p[(i, j)] += v;
        if i != j {
            p[(j, i)] += v;
        }
    }
    p
}

/// Minimizes `½xᵀPx + qᵀx` over a box for positive definite `P`. A
/// primal-dual active-set guess is accepted only when it satisfies the KKT
/// conditions; otherwise every active set is tried.
pub fn box_qp(p: &DMatrix<f64>, q: &DVector<f64>, l: &[f64], u: &[f64]) -> DVector<f64> {
    let n = q.len();
    // 0 free, 1 lower, 2 upper
    let mut state = vec![0u8; n];
    for _ in 0..60 {
        if let Some(x) = solve_active(p, q, l, u, &state) {
            if kkt_ok(p, q, l, u, &state, &x) {
                return x;
            }
            let g = p * &x + q;
            for i in 0..n {
                let t = x[i] - g[i];
                state[i] = if t < l[i] {
                    1
                } else if t > u[i] {
                    2
                } else {
                    0
                };
            }
        } else {
            break;
        }
    }
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        if let Some(x) = solve_active(p, q, l, u, &state) {
            if kkt_ok(p, q, l, u, &state, &x) {
                return x;
            }
        }
    }
    panic!("box QP oracle found no KKT point");
}

fn solve_active(p: &DMatrix<f64>, q: &DVector<f64>, l: &[f64], u: &[f64], state: &[u8]) -> Option<DVector<f64>> {
    let n = q.len();
    let mut x = DVector::zeros(n);
    for i in 0..n {
        match state[i] {
            1 => x[i] = l[i],
            2 => x[i] = u[i],
            _ => {}
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
    if free.is_empty() {
        return Some(x);
    }
    let k = free.len();
    let pff = DMatrix::from_fn(k, k, |a, b| p[(free[a], free[b])]);
    let rhs = DVector::from_fn(k, |a, _| {
        let i = free[a];
        -q[i] - (0..n).filter(|&j| state[j] != 0).map(|j| p[(i, j)] * x[j]).sum::<f64>()
    });
    let xf = pff.cholesky()?.solve(&rhs);
    for (a, &i) in free.iter().enumerate() {
        x[i] = xf[a];
    }
    Some(x)
}

fn kkt_ok(p: &DMatrix<f64>, q: &DVector<f64>, l: &[f64], u: &[f64], state: &[u8], x: &DVector<f64>) -> bool {
    let g = p * x + q;
    let scale = 1.0 + q.amax() + p.amax();
    (0..q.len()).all(|i| match state[i] {
        0 => x[i] >= l[i] - 1e-12 && x[i] <= u[i] + 1e-12,
        1 => g[i] >= -1e-10 * scale,
        _ => g[i] <= 1e-10 * scale,
    })
}

/// Exact optimum of a box-only MIQP by enumerating the integer assignments
/// and solving each continuous box QP with [`box_qp`].
pub fn enumerate_box_miqp(micp: &MicpProblem) -> f64 {
    let prog = &micp.relaxation;
    assert_eq!(prog.data.m(), 0);
    assert_eq!(prog.data.p_rows(), 0);
    let n = prog.n();
    let p = dense_p(prog);
    let q = DVector::from_column_slice(&prog.data.q);
    let ints: Vec<usize> = micp.integers.iter().map(|v| v.index).collect();
    let cont: Vec<usize> = (0..n).filter(|i| !ints.contains(i)).collect();
    let mut best = f64::INFINITY;
    let sizes: Vec<usize> = micp.integers.iter().map(|v| v.values.len()).collect();
    let total: usize = sizes.iter().product();
    for code in 0..total {
        let mut fixed = vec![0.0; n];
        let mut c = code;
        for (k, iv) in micp.integers.iter().enumerate() {
            fixed[iv.index] = iv.values[c % sizes[k]];
            c /= sizes[k];
        }
        let pc = DMatrix::from_fn(cont.len(), cont.len(), |a, b| p[(cont[a], cont[b])]);
        let qc = DVector::from_fn(cont.len(), |a, _| {
            q[cont[a]] + ints.iter().map(|&j| p[(cont[a], j)] * fixed[j]).sum::<f64>()
        });
        let lc: Vec<f64> = cont.iter().map(|&i| prog.l[i]).collect();
        let uc: Vec<f64> = cont.iter().map(|&i| prog.u[i]).collect();
        let xc = box_qp(&pc, &qc, &lc, &uc);
        let mut x = fixed;
        for (a, &i) in cont.iter().enumerate() {
            x[i] = xc[a];
        }
        let xv = DVector::from_column_slice(&x);
        let f = 0.5 * xv.dot(&(&p * &xv)) + q.dot(&xv) + prog.data.offset;
        best = best.min(f);
    }
    best
}

/// A node relaxation: each integer variable is left at its root range,
/// fixed to one of its values, or cut to a lower or upper part.
pub fn random_node(micp: &MicpProblem, r: &mut ChaCha8Rng) -> ConicProgram {
    let mut l = micp.root_l().to_vec();
    let mut u = micp.root_u().to_vec();
    for iv in &micp.integers {
        let vals: Vec<f64> = iv.values.iter().copied().filter(|v| *v >= l[iv.index] && *v <= u[iv.index]).collect();
        if vals.is_empty() {
            continue;
        }
        let k = r.random_range(0..vals.len());
        match r.random_range(0..4) {
            0 => {
                l[iv.index] = vals[k];
                u[iv.index] = vals[k];
            }
            1 => u[iv.index] = vals[k],
            2 => l[iv.index] = vals[k],
            _ => {}
        }
    }
    build_relaxation(micp, &l, &u).expect("node inside root box")
}
