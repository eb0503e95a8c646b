//! Euclidean projections onto products of zero, nonnegative and second-order
//! cones, their polars, and the support function of a box.

use crate::problem::{ConeKind, ConeSpec};
use crate::sparse::vec_ops;

/// Scratch space for repeated projections against one cone product.
#[derive(Debug, Clone)]
pub struct ConeWorkspace {
    pub cones: Vec<ConeSpec>,
    pub scratch: Vec<f64>,
}

impl ConeWorkspace {
    pub fn new(cones: &[ConeSpec]) -> Self {
        let m = cones.iter().map(|c| c.dim).sum();
        Self { cones: cones.to_vec(), scratch: vec![0.0; m] }
    }

    /// Projects `v` onto `K` in place.
    pub fn project_in_place(&mut self, v: &mut [f64]) {
        project_cone_in_place(&self.cones, v);
    }

    /// Writes `Π_K(v)` into `s` and `v − Π_K(v)` into `y`.
    pub fn split(&mut self, v: &[f64], s: &mut [f64], y: &mut [f64]) {
        self.scratch.copy_from_slice(v);
        project_cone_in_place(&self.cones, &mut self.scratch);
        s.copy_from_slice(&self.scratch);
        for ((yi, vi), si) in y.iter_mut().zip(v).zip(&self.scratch) {
            *yi = vi - si;
        }
    }
}

/// Iterator over `(spec, start..end)` row ranges of a cone product.
pub fn cone_ranges(cones: &[ConeSpec]) -> impl Iterator<Item = (ConeSpec, std::ops::Range<usize>)> + '_ {
    let mut start = 0;
    cones.iter().map(move |c| {
        let r = start..start + c.dim;
        start += c.dim;
        (*c, r)
    })
}

fn project_soc(v: &mut [f64]) {
    if v.len() == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let t = v[0];
    let nx = vec_ops::norm2(&v[1..]);
    if nx <= t {
        return;
    }
    if nx <= -t {
        v.iter_mut().for_each(|e| *e = 0.0);
        return;
    }
    let scale = 0.5 * (t + nx);
    v[0] = scale;
    let f = scale / nx;
    v[1..].iter_mut().for_each(|e| *e *= f);
}

pub fn project_cone_in_place(cones: &[ConeSpec], v: &mut [f64]) {
    for (c, r) in cone_ranges(cones) {
        let block = &mut v[r];
        match c.kind {
            ConeKind::Zero => block.iter_mut().for_each(|e| *e = 0.0),
            ConeKind::Nonnegative => block.iter_mut().for_each(|e| *e = e.max(0.0)),
            ConeKind::SecondOrder => project_soc(block),
        }
    }
}

/// `Π_K(v)`
pub fn project_cone(cones: &[ConeSpec], v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_cone_in_place(cones, &mut out);
    out
}

/// `Π_{K°}(v) = v − Π_K(v)` (Moreau decomposition).
pub fn project_polar(cones: &[ConeSpec], v: &[f64]) -> Vec<f64> {
    let p = project_cone(cones, v);
    v.iter().zip(&p).map(|(a, b)| a - b).collect()
}

/// Dual cone `K*`: the zero cone dualizes to the free cone, the others are self-dual.
fn dual_cone(c: ConeSpec) -> Option<ConeSpec> {
    match c.kind {
        ConeKind::Zero => None,
        _ => Some(c),
    }
}

/// Whether `y ∈ K*` up to a projection distance of `tol`.
pub fn in_dual_cone(cones: &[ConeSpec], y: &[f64], tol: f64) -> bool {
    dual_cone_distance(cones, y) <= tol
}

/// `‖y − Π_{K*}(y)‖`
pub fn dual_cone_distance(cones: &[ConeSpec], y: &[f64]) -> f64 {
    let mut sq = 0.0;
    for (c, r) in cone_ranges(cones) {
        if let Some(dc) = dual_cone(c) {
            let block = &y[r];
            let mut p = block.to_vec();
            project_cone_in_place(&[dc], &mut p);
            sq += block.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    sq.sqrt()
}

/// Whether `y ∈ K°` up to a projection distance of `tol`.
pub fn in_polar_cone(cones: &[ConeSpec], y: &[f64], tol: f64) -> bool {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    in_dual_cone(cones, &neg, tol)
}

/// Whether `s ∈ K` up to a projection distance of `tol`.
pub fn in_cone(cones: &[ConeSpec], s: &[f64], tol: f64) -> bool {
    let p = project_cone(cones, s);
    vec_ops::norm2(&vec_ops::sub(s, &p)) <= tol
}

/// Support function of the box `[l, u]`: `uᵀ max(y,0) + lᵀ min(y,0)`.
///
/// Returns `+∞` when a multiplier of the matching sign meets an infinite bound.
/// Entries with a zero multiplier contribute nothing whatever their bound.
pub fn support_box(l: &[f64], u: &[f64], y_b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((&lo, &hi), &y) in l.iter().zip(u).zip(y_b) {
        if y > 0.0 {
            if hi == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += hi * y;
        } else if y < 0.0 {
            if lo == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            acc += lo * y;
        }
    }
    acc
}
