//! Nesterov–Todd scaling and Jordan algebra over a product of zero,
//! nonnegative and second-order cones.

use std::ops::Range;

use crate::cones::cone_ranges;
use crate::problem::{ConeKind, ConeSpec};
use crate::sparse::vec_ops;

#[derive(Debug, Clone)]
enum BlockScaling {
    Zero,
    /// `w_i = sqrt(s_i / z_i)`
    Orthant(Vec<f64>),
    /// Normalized scaling point `w̄` (with `w̄ᵀJw̄ = 1`) and factor `η`.
    Soc {
        w: Vec<f64>,
        eta: f64,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub kind: ConeKind,
    pub range: Range<usize>,
}

/// Scaling `W` with `W z = W⁻¹ s = λ` for every cone block.
#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    pub blocks: Vec<Block>,
    data: Vec<BlockScaling>,
    pub lambda: Vec<f64>,
}

fn soc_det(v: &[f64]) -> f64 {
    v[0] * v[0] - vec_ops::dot(&v[1..], &v[1..])
}

impl NtScaling {
    pub fn new(cones: &[ConeSpec]) -> Self {
        let blocks: Vec<Block> = cone_ranges(cones)
            .filter(|(c, _)| c.dim > 0)
            .map(|(c, range)| Block {
                // a one-dimensional second-order cone is the half line
                kind: if c.kind == ConeKind::SecondOrder && c.dim == 1 { ConeKind::Nonnegative } else { c.kind },
                range,
            })
            .collect();
        let m = cones.iter().map(|c| c.dim).sum();
        let data = blocks
            .iter()
            .map(|b| match b.kind {
                ConeKind::Zero => BlockScaling::Zero,
                ConeKind::Nonnegative => BlockScaling::Orthant(vec![1.0; b.range.len()]),
                ConeKind::SecondOrder => {
                    let mut w = vec![0.0; b.range.len()];
                    w[0] = 1.0;
                    BlockScaling::Soc { w, eta: 1.0 }
                }
            })
            .collect();
        Self { blocks, data, lambda: vec![0.0; m] }
    }

    /// Barrier degree: one per orthant row and per second-order block.
    pub fn degree(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b.kind {
                ConeKind::Zero => 0,
                ConeKind::Nonnegative => b.range.len(),
                ConeKind::SecondOrder => 1,
            })
            .sum()
    }

    /// Recomputes the scaling for interior `s`, `z`.
    pub fn update(&mut self, s: &[f64], z: &[f64]) {
        for (b, d) in self.blocks.iter().zip(self.data.iter_mut()) {
            let (sb, zb) = (&s[b.range.clone()], &z[b.range.clone()]);
            match d {
                BlockScaling::Zero => {
                    self.lambda[b.range.clone()].iter_mut().for_each(|v| *v = 0.0);
                }
                BlockScaling::Orthant(w) => {
                    for k in 0..sb.len() {
                        w[k] = (sb[k] / zb[k]).sqrt();
                        self.lambda[b.range.start + k] = (sb[k] * zb[k]).sqrt();
                    }
                }
                BlockScaling::Soc { w, eta } => {
                    let (ds, dz) = (soc_det(sb).sqrt(), soc_det(zb).sqrt());
                    let sbar: Vec<f64> = sb.iter().map(|v| v / ds).collect();
                    let zbar: Vec<f64> = zb.iter().map(|v| v / dz).collect();
                    let gamma = ((1.0 + vec_ops::dot(&sbar, &zbar)) / 2.0).sqrt();
                    w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                    for k in 1..w.len() {
                        w[k] = (sbar[k] - zbar[k]) / (2.0 * gamma);
                    }
                    // renormalize so that w̄ᵀJw̄ = 1 holds to rounding
                    let nw1 = vec_ops::norm2(&w[1..]);
                    w[0] = (1.0 + nw1 * nw1).sqrt();
                    *eta = (ds / dz).sqrt();
                }
            }
        }
        let lam = self.mul_w(z);
        for b in &self.blocks {
            if b.kind != ConeKind::Nonnegative {
                self.lambda[b.range.clone()].copy_from_slice(&lam[b.range.clone()]);
            }
        }
    }

    fn apply(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (b, d) in self.blocks.iter().zip(&self.data) {
            let (vb, ob) = (&v[b.range.clone()], &mut out[b.range.clone()]);
            match d {
                BlockScaling::Zero => {}
                BlockScaling::Orthant(w) => {
                    for k in 0..vb.len() {
                        ob[k] = if inverse { vb[k] / w[k] } else { vb[k] * w[k] };
                    }
                }
                BlockScaling::Soc { w, eta } => {
                    let sgn = if inverse { -1.0 } else { 1.0 };
                    let f = if inverse { 1.0 / eta } else { *eta };
                    let w1v1 = vec_ops::dot(&w[1..], &vb[1..]);
                    ob[0] = f * (w[0] * vb[0] + sgn * w1v1);
                    let c = sgn * vb[0] + w1v1 / (1.0 + w[0]);
                    for k in 1..vb.len() {
                        ob[k] = f * (vb[k] + c * w[k]);
                    }
                }
            }
        }
        out
    }

    /// `W v` (zero on zero-cone rows).
    pub fn mul_w(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, false)
    }

    /// `W⁻¹ v` (zero on zero-cone rows).
    pub fn mul_winv(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, true)
    }

    /// Upper-triangle entries `(i, j, H_ij)` of `H = WᵀW`, block by block, in
    /// a fixed order. Zero-cone rows emit an explicit zero diagonal.
    pub fn h_upper(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (b, d) in self.blocks.iter().zip(&self.data) {
            let r0 = b.range.start;
            match d {
                BlockScaling::Zero => out.extend(b.range.clone().map(|i| (i, i, 0.0))),
                BlockScaling::Orthant(w) => out.extend(w.iter().enumerate().map(|(k, wk)| (r0 + k, r0 + k, wk * wk))),
                BlockScaling::Soc { w, eta } => {
                    let e2 = eta * eta;
                    for j in 0..w.len() {
                        for i in 0..=j {
                            let jv = if i == j {
                                if i == 0 {
                                    1.0
                                } else {
                                    -1.0
                                }
                            } else {
                                0.0
                            };
                            out.push((r0 + i, r0 + j, e2 * (2.0 * w[i] * w[j] - jv)));
                        }
                    }
                }
            }
        }
        out
    }

    /// `H v` with `H = WᵀW`.
    pub fn mul_h(&self, v: &[f64]) -> Vec<f64> {
        self.mul_w(&self.mul_w(v))
    }

    /// Jordan product `a ∘ b` (zero on zero-cone rows).
    pub fn jordan_prod(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for blk in &self.blocks {
            let r = blk.range.clone();
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => {
                    for i in r {
                        out[i] = a[i] * b[i];
                    }
                }
                ConeKind::SecondOrder => {
                    let (ab, bb) = (&a[r.clone()], &b[r.clone()]);
                    out[r.start] = vec_ops::dot(ab, bb);
                    for k in 1..ab.len() {
                        out[r.start + k] = ab[0] * bb[k] + bb[0] * ab[k];
                    }
                }
            }
        }
        out
    }

    /// Solves `λ ∘ x = r` for `x` with `λ` interior.
    pub fn jordan_div(&self, lambda: &[f64], r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        for blk in &self.blocks {
            let rg = blk.range.clone();
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => {
                    for i in rg {
                        out[i] = r[i] / lambda[i];
                    }
                }
                ConeKind::SecondOrder => {
                    let (l, rb) = (&lambda[rg.clone()], &r[rg.clone()]);
                    let det = soc_det(l);
                    let x0 = (l[0] * rb[0] - vec_ops::dot(&l[1..], &rb[1..])) / det;
                    out[rg.start] = x0;
                    for k in 1..l.len() {
                        out[rg.start + k] = (rb[k] - x0 * l[k]) / l[0];
                    }
                }
            }
        }
        out
    }

    /// Identity element `e` scaled by `t` (zero on zero-cone rows).
    pub fn identity(&self, m: usize, t: f64) -> Vec<f64> {
        let mut e = vec![0.0; m];
        for blk in &self.blocks {
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => e[blk.range.clone()].iter_mut().for_each(|v| *v = t),
                ConeKind::SecondOrder => e[blk.range.start] = t,
            }
        }
        e
    }

    /// Smallest eigenvalue of `v` over all non-zero blocks (`+∞` if none).
    pub fn margin(&self, v: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for blk in &self.blocks {
            let vb = &v[blk.range.clone()];
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => m = vb.iter().copied().fold(m, f64::min),
                ConeKind::SecondOrder => m = m.min(vb[0] - vec_ops::norm2(&vb[1..])),
            }
        }
        m
    }

    /// If the smallest eigenvalue `m` of `v` is below `floor`, adds
    /// `(1 − m)·e` so that the new smallest eigenvalue is one.
    pub fn shift_uniform(&self, v: &mut [f64], floor: f64) {
        let m = self.margin(v);
        if m < floor {
            let e = self.identity(v.len(), 1.0 - m);
            v.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
        }
    }

    /// Per-block margin shift: adds `(target − margin_block)·e` to every block
    /// whose smallest eigenvalue is below `floor`.
    pub fn shift_blocks(&self, v: &mut [f64], floor: f64, target: f64) {
        for blk in &self.blocks {
            let r = blk.range.clone();
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => {
                    for i in r {
                        if v[i] < floor {
                            v[i] = target;
                        }
                    }
                }
                ConeKind::SecondOrder => {
                    let m = v[r.start] - vec_ops::norm2(&v[r.start + 1..r.end]);
                    if m < floor {
                        v[r.start] += target - m;
                    }
                }
            }
        }
    }

    /// Largest `α` with `v + α·dv` in the closed cone (`+∞` if unbounded).
    pub fn max_step(&self, v: &[f64], dv: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for blk in &self.blocks {
            let r = blk.range.clone();
            match blk.kind {
                ConeKind::Zero => {}
                ConeKind::Nonnegative => {
                    for i in r {
                        if dv[i] < 0.0 {
                            alpha = alpha.min(-v[i] / dv[i]);
                        }
                    }
                }
                ConeKind::SecondOrder => {
                    alpha = alpha.min(soc_max_step(&v[r.clone()], &dv[r]));
                }
            }
        }
        alpha
    }
}

fn soc_max_step(v: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -v[0] / d[0];
    }
    let a = soc_det(d);
    let b = 2.0 * (v[0] * d[0] - vec_ops::dot(&v[1..], &d[1..]));
    let c = soc_det(v).max(0.0);
    let root = if a == 0.0 {
        if b < 0.0 {
            -c / b
        } else {
            f64::INFINITY
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let qq = -0.5 * (b + b.signum() * sq);
            let r1 = qq / a;
            let r2 = if qq != 0.0 { c / qq } else { f64::INFINITY };
            [r1, r2].into_iter().filter(|r| *r >= 0.0).fold(f64::INFINITY, f64::min)
        }
    };
    alpha.min(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc3() -> NtScaling {
        NtScaling::new(&[ConeSpec::nonnegative(2), ConeSpec::second_order(3), ConeSpec::zero(1)])
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn nt_point_maps_s_and_z_to_lambda() {
        let mut sc = soc3();
        let s = [1.0, 2.0, 3.0, 1.0, -0.5, 0.0];
        let z = [0.5, 4.0, 2.0, -0.3, 1.2, 0.0];
        sc.update(&s, &z);
        let wz = sc.mul_w(&z);
        let winv_s = sc.mul_winv(&s);
        assert!(close(&wz[..5], &winv_s[..5], 1e-12));
        assert!(close(&wz, &sc.lambda, 1e-12));
        let back = sc.mul_w(&sc.mul_winv(&[0.3, -1.0, 0.7, 0.2, 0.9, 0.0]));
        assert!(close(&back[..5], &[0.3, -1.0, 0.7, 0.2, 0.9], 1e-12));
    }

    #[test]
    fn h_entries_match_double_application() {
        let mut sc = soc3();
        sc.update(&[1.0, 2.0, 3.0, 1.0, -0.5, 0.0], &[0.5, 4.0, 2.0, -0.3, 1.2, 0.0]);
        let mut dense = vec![vec![0.0; 6]; 6];
        for (i, j, v) in sc.h_upper() {
            dense[i][j] = v;
            dense[j][i] = v;
        }
        let v = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6];
        let hv: Vec<f64> = dense.iter().map(|row| vec_ops::dot(row, &v)).collect();
        assert!(close(&hv, &sc.mul_h(&v), 1e-12));
    }

    #[test]
    fn jordan_division_inverts_product() {
        let sc = soc3();
        let lam = [1.0, 2.0, 2.0, 0.5, 0.5, 0.0];
        let x = [0.4, -1.0, 0.2, 0.3, -0.7, 0.0];
        let r = sc.jordan_prod(&lam, &x);
        assert!(close(&sc.jordan_div(&lam, &r), &x, 1e-12));
    }

    #[test]
    fn step_to_boundary() {
        let sc = soc3();
        let v = [1.0, 1.0, 2.0, 0.0, 0.0, 0.0];
        let d = [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        // the orthant row 0 hits zero at α = 1; the cone block at α = 2
        assert!((sc.max_step(&v, &d) - 1.0).abs() < 1e-15);
        let d2 = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert!((sc.max_step(&v, &d2) - 2.0).abs() < 1e-12);
        assert_eq!(sc.max_step(&v, &[0.0, 0.0, 1.0, 0.0, 0.0, 5.0]), f64::INFINITY);
    }

    #[test]
    fn degree_and_margin() {
        let sc = soc3();
        assert_eq!(sc.degree(), 3);
        assert!((sc.margin(&[1.0, 2.0, 3.0, 1.0, 0.0, 9.0]) - 1.0).abs() < 1e-15);
        let mut v = [-1.0, 2.0, 0.0, 1.0, 0.0, 0.0];
        sc.shift_blocks(&mut v, 0.1, 1.0);
        assert_eq!(v[0], 1.0);
        assert!((v[2] - (v[3] * v[3] + v[4] * v[4]).sqrt() - 1.0).abs() < 1e-12);
    }
}
