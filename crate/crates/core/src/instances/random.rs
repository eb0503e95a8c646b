//! Random bounded MIQPs with optional equality, orthant and second-order
//! cone rows. Extra rows are built around a hidden point with binary
//! integer entries, so every generated instance is integer feasible.

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::{normal, rng};
use crate::error::{Error, Result};
use crate::problem::{ConeSpec, ConicProgram, IntegerVar, MicpProblem};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomMiqpConfig {
    pub n: usize,
    pub n_int: usize,
    pub seed: u64,
    /// Fraction of nonzeros in the Hessian factor.
    pub density: f64,
    pub bound: f64,
    pub n_eq: usize,
    pub n_ineq: usize,
    /// Dimension of one SOC block; zero disables it.
    pub soc_dim: usize,
}

impl RandomMiqpConfig {
    pub fn new(n: usize, n_int: usize, seed: u64) -> Self {
        Self { n, n_int, seed, density: 0.3, bound: 2.0, n_eq: 0, n_ineq: 0, soc_dim: 0 }
    }

    pub fn with_rows(mut self, n_eq: usize, n_ineq: usize, soc_dim: usize) -> Self {
        self.n_eq = n_eq;
        self.n_ineq = n_ineq;
        self.soc_dim = soc_dim;
        self
    }
}

/// `P = FᵀF + 10⁻³I`, random `q`, box `[−2, 2]`, `n_int` binaries at random
/// positions and no other constraints.
pub fn gen_random_miqp(n: usize, n_int: usize, seed: u64) -> Result<MicpProblem> {
    gen_random_miqp_with(&RandomMiqpConfig::new(n, n_int, seed))
}

pub fn gen_random_miqp_with(cfg: &RandomMiqpConfig) -> Result<MicpProblem> {
    let n = cfg.n;
    if cfg.n_int > n {
        return Err(Error::Config("more integer variables than variables".into()));
    }
    if cfg.soc_dim == 1 {
        return Err(Error::Config("SOC blocks need dimension at least 2".into()));
    }
    let mut r = rng(cfg.seed);

    let mut f = vec![vec![0.0; n]; n];
    for row in f.iter_mut() {
        for v in row.iter_mut() {
            if r.random::<f64>() < cfg.density {
                *v = normal(&mut r);
            }
        }
    }
    let mut pt = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            let mut v: f64 = (0..n).map(|k| f[k][i] * f[k][j]).sum();
            if i == j {
                v += 1e-3;
            }
            if v != 0.0 {
                pt.push((i, j, v));
            }
        }
    }
    let q: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();

    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut r);
    let mut int_idx = idx[..cfg.n_int].to_vec();
    int_idx.sort_unstable();
    let ints: Vec<IntegerVar> = int_idx.iter().map(|&i| IntegerVar::binary(i)).collect();

    let mut l = vec![-cfg.bound; n];
    let mut u = vec![cfg.bound; n];
    for &i in &int_idx {
        l[i] = l[i].max(0.0);
        u[i] = u[i].min(1.0);
    }

    // hidden feasible point
    let mut x0: Vec<f64> = (0..n).map(|_| cfg.bound * (2.0 * r.random::<f64>() - 1.0) * 0.5).collect();
    for &i in &int_idx {
        x0[i] = if r.random::<bool>() { 1.0 } else { 0.0 };
    }

    let dense_row = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| if r.random::<f64>() < cfg.density { normal(r) } else { 0.0 }).collect()
    };
    let dot = |a: &[f64]| a.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>();

    let mut gt = Vec::new();
    let mut h = Vec::new();
    for k in 0..cfg.n_eq {
        let row = dense_row(&mut r);
        h.push(dot(&row));
        gt.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (k, j, *v)));
    }

    let mut at = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    for k in 0..cfg.n_ineq {
        let row = dense_row(&mut r);
        b.push(dot(&row) + r.random::<f64>());
        at.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (k, j, *v)));
    }
    if cfg.n_ineq > 0 {
        cones.push(ConeSpec::nonnegative(cfg.n_ineq));
    }
    if cfg.soc_dim >= 2 {
        // b − Ax0 = (t, w) with t > ‖w‖
        let r0 = cfg.n_ineq;
        let mut tail = 0.0;
        let mut rows = Vec::new();
        for _ in 0..cfg.soc_dim {
            rows.push(dense_row(&mut r));
        }
        let mut rhs = Vec::new();
        for (k, row) in rows.iter().enumerate() {
            let w = if k == 0 { 0.0 } else { normal(&mut r) };
            tail += w * w;
            rhs.push(dot(row) + w);
        }
        rhs[0] += tail.sqrt() + 0.5;
        for (k, row) in rows.iter().enumerate() {
            at.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (r0 + k, j, *v)));
        }
        b.extend(rhs);
        cones.push(ConeSpec::second_order(cfg.soc_dim));
    }

    let prog = ConicProgram::new(
        CscMatrix::from_triplets(n, n, &pt),
        q,
        CscMatrix::from_triplets(cfg.n_eq, n, &gt),
        h,
        CscMatrix::from_triplets(b.len(), n, &at),
        b,
        cones,
        l,
        u,
    )?;
    Ok(MicpProblem::new(prog, ints))
}
