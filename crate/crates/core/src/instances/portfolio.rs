//! Cardinality-constrained portfolio selection with sector limits.
//!
//! ```text
//! min  rᵀ(x⁺ − x⁻)
//! s.t. ‖F(x⁺ − x⁻)‖² ≤ ρ,  1ᵀ(x⁺ − x⁻) = 1,
//!      Σb ≤ K,  L_min ≤ Σl ≤ L_max,  b ≤ Hl,  l ≤ Hᵀb,
//!      x⁺ ≤ b,  x⁻ ≤ b,  x⁺, x⁻ ∈ [0, 1],  b ∈ {0,1}ⁿ,  l ∈ {0,1}ᴸ
//! ```
//!
//! Variables are ordered `(x⁺, x⁻, b, l)`. `H` is the asset–sector incidence.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{normal, rng};
use crate::error::{Error, Result};
use crate::problem::{ConeSpec, ConicProgram, IntegerVar, MicpProblem};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioConfig {
    pub n_assets: usize,
    pub n_sectors: usize,
    /// Sector of each asset.
    pub sector_of: Vec<usize>,
    pub max_assets: usize,
    pub min_sectors: usize,
    pub max_sectors: usize,
    /// Risk budget on `‖F w‖²`.
    pub rho: f64,
    pub returns: Vec<f64>,
    /// Factor with `FᵀF = Λ`, stored row-major with `n_assets` columns.
    pub factor: Vec<Vec<f64>>,
}

/// Returns `F` with `FᵀF = Λ` via `Λ = VDVᵀ`, `F = D^{1/2}Vᵀ`.
/// Eigenvalues above `−1e-10·max|λ|` are clipped to zero.
pub fn covariance_factor(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = cov.len();
    if let Some(r) = cov.iter().find(|r| r.len() != n) {
        return Err(Error::Dimension { what: "covariance", expected: n, found: r.len() });
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && min_eig < -1e-10 * scale.max(1.0) {
        return Err(Error::NotPsd { min_eig });
    }
    Ok((0..n)
        .map(|k| {
            let d = eig.eigenvalues[k].max(0.0).sqrt();
            (0..n).map(|j| d * eig.eigenvectors[(j, k)]).collect()
        })
        .collect())
}

impl PortfolioConfig {
    /// Builds an instance from expected returns and a covariance matrix.
    /// Assets are assigned to sectors round-robin.
    pub fn from_covariance(
        returns: Vec<f64>,
        cov: &[Vec<f64>],
        n_sectors: usize,
        max_assets: usize,
        rho: f64,
    ) -> Result<Self> {
        let n = returns.len();
        if cov.len() != n {
            return Err(Error::Dimension { what: "covariance", expected: n, found: cov.len() });
        }
        let factor = covariance_factor(cov)?;
        Ok(Self {
            n_assets: n,
            n_sectors,
            sector_of: (0..n).map(|i| i % n_sectors.max(1)).collect(),
            max_assets,
            min_sectors: 1,
            max_sectors: n_sectors,
            rho,
            returns,
            factor,
        })
    }

    /// Returns and covariance estimated from `samples` draws of a
    /// sector-factor model. `K = ⌈n/2⌉`, one sector minimum, no sector
    /// maximum, `ρ` at 1.5× the variance of equal weights on the first `K`
    /// assets.
    pub fn synthetic(n_assets: usize, n_sectors: usize, samples: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let n = n_assets;
        let l = n_sectors.max(1);
        let loading: Vec<f64> = (0..n).map(|_| 0.5 + normal(&mut r).abs()).collect();
        let drift: Vec<f64> = (0..n).map(|_| 0.05 * normal(&mut r)).collect();
        let vol: Vec<f64> = (0..n).map(|_| 0.5 + 0.5 * normal(&mut r).abs()).collect();
        let mut sum = vec![0.0; n];
        let mut cross = vec![vec![0.0; n]; n];
        let mut ret = vec![0.0; n];
        for _ in 0..samples {
            let market = normal(&mut r);
            let sector: Vec<f64> = (0..l).map(|_| normal(&mut r)).collect();
            for i in 0..n {
                ret[i] = drift[i] + 0.5 * market + loading[i] * sector[i % l] + vol[i] * normal(&mut r);
                sum[i] += ret[i];
            }
            for i in 0..n {
                for j in i..n {
                    cross[i][j] += ret[i] * ret[j];
                }
            }
        }
        let t = samples.max(2) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / t).collect();
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (a, b) = if i <= j { (i, j) } else { (j, i) };
                        (cross[a][b] - t * mean[a] * mean[b]) / (t - 1.0)
                    })
                    .collect()
            })
            .collect();
        let k = n.div_ceil(2);
        // 1.5× the variance of equal weights on the first K assets: feasible, and
        // tight enough that the risk row binds
        let w: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| cov[i][j]).sum();
        let rho = 1.5 * w / (k * k).max(1) as f64;
        Self::from_covariance(mean, &cov, l, k, rho).expect("sample covariance is PSD")
    }

    pub fn n_vars(&self) -> usize {
        3 * self.n_assets + self.n_sectors
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        for (len, expected, what) in
            [(self.returns.len(), n, "returns"), (self.sector_of.len(), n, "sector assignment")]
        {
            if len != expected {
                return Err(Error::Dimension { what, expected, found: len });
            }
        }
        if let Some(r) = self.factor.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension { what: "factor", expected: n, found: r.len() });
        }
        if self.sector_of.iter().any(|&s| s >= self.n_sectors) {
            return Err(Error::Config("sector index out of range".into()));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::Config("risk budget must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn gen_portfolio(cfg: &PortfolioConfig) -> Result<MicpProblem> {
    cfg.validate()?;
    let n = cfg.n_assets;
    let ls = cfg.n_sectors;
    let np = cfg.n_vars();
    let (xp, xm, bb, ll) = (0, n, 2 * n, 3 * n);

    let mut q = vec![0.0; np];
    q[..n].copy_from_slice(&cfg.returns);
    for i in 0..n {
        q[xm + i] = -cfg.returns[i];
    }

    let g = CscMatrix::from_triplets(
        1,
        np,
        &(0..n).flat_map(|i| [(0, xp + i, 1.0), (0, xm + i, -1.0)]).collect::<Vec<_>>(),
    );

    // SOC block: (√ρ, F(x⁺ − x⁻))
    let k = cfg.factor.len();
    let mut t = Vec::new();
    let mut b = vec![cfg.rho.sqrt()];
    for (r, row) in cfg.factor.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f != 0.0 {
                t.push((1 + r, xp + j, -f));
                t.push((1 + r, xm + j, f));
            }
        }
        b.push(0.0);
    }
    let mut row = 1 + k;
    let mut push_row = |t: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>, entries: &[(usize, f64)], rhs: f64| {
        for &(c, v) in entries {
            t.push((row, c, v));
        }
        b.push(rhs);
        row += 1;
    };
    let all_b: Vec<(usize, f64)> = (0..n).map(|i| (bb + i, 1.0)).collect();
    push_row(&mut t, &mut b, &all_b, cfg.max_assets as f64);
    let all_l: Vec<(usize, f64)> = (0..ls).map(|s| (ll + s, 1.0)).collect();
    push_row(&mut t, &mut b, &all_l, cfg.max_sectors as f64);
    let neg_l: Vec<(usize, f64)> = all_l.iter().map(|&(c, _)| (c, -1.0)).collect();
    push_row(&mut t, &mut b, &neg_l, -(cfg.min_sectors as f64));
    for i in 0..n {
        push_row(&mut t, &mut b, &[(bb + i, 1.0), (ll + cfg.sector_of[i], -1.0)], 0.0);
    }
    for s in 0..ls {
        let mut e = vec![(ll + s, 1.0)];
        e.extend((0..n).filter(|&i| cfg.sector_of[i] == s).map(|i| (bb + i, -1.0)));
        push_row(&mut t, &mut b, &e, 0.0);
    }
    for i in 0..n {
        push_row(&mut t, &mut b, &[(xp + i, 1.0), (bb + i, -1.0)], 0.0);
    }
    for i in 0..n {
        push_row(&mut t, &mut b, &[(xm + i, 1.0), (bb + i, -1.0)], 0.0);
    }
    let m = b.len();
    let cones = vec![ConeSpec::second_order(1 + k), ConeSpec::nonnegative(m - 1 - k)];
    let prog = ConicProgram::new(
        CscMatrix::zeros(np, np),
        q,
        g,
        vec![1.0],
        CscMatrix::from_triplets(m, np, &t),
        b,
        cones,
        vec![0.0; np],
        vec![1.0; np],
    )?;
    let ints = (bb..np).map(IntegerVar::binary).collect();
    Ok(MicpProblem::new(prog, ints))
}
