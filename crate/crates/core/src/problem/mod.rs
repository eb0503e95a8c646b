//! Mixed-integer conic problem data and node relaxations.
//!
//! A problem has the form
//!
//! ```text
//! minimize    ½ xᵀPx + qᵀx + c0
//! subject to  Gx = h
//!             Ax + s = b,  s ∈ K
//!             l ≤ x ≤ u,   x_i ∈ Z_i  for i in the integer set
//! ```
//!
//! where `K` is a product of zero, nonnegative and second-order cones. The
//! continuous relaxation of a branch-and-bound node keeps every matrix and
//! replaces only the box `[l, u]`.

mod json;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{vec_ops, CscMatrix};

pub use json::{from_json_str, to_json_string, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    #[serde(alias = "zero", alias = "ZERO")]
    Zero,
    #[serde(alias = "nonnegative", alias = "nonneg", alias = "Nonneg")]
    Nonnegative,
    #[serde(alias = "second_order", alias = "soc", alias = "SOC", alias = "secondorder")]
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub dim: usize,
}

impl ConeSpec {
    pub fn zero(dim: usize) -> Self {
        Self { kind: ConeKind::Zero, dim }
    }
    pub fn nonnegative(dim: usize) -> Self {
        Self { kind: ConeKind::Nonnegative, dim }
    }
    pub fn second_order(dim: usize) -> Self {
        Self { kind: ConeKind::SecondOrder, dim }
    }
}

/// Matrices and vectors shared by every node relaxation of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicData {
    /// Upper triangle of the symmetric PSD objective matrix.
    pub p: CscMatrix,
    pub q: Vec<f64>,
    pub g: CscMatrix,
    pub h: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<ConeSpec>,
    /// Constant objective term.
    pub offset: f64,
}

impl ConicData {
    pub fn n(&self) -> usize {
        self.q.len()
    }
    /// Number of conic rows.
    pub fn m(&self) -> usize {
        self.b.len()
    }
    /// Number of equality rows.
    pub fn p_rows(&self) -> usize {
        self.h.len()
    }

    /// `P x` with the stored triangle mirrored.
    pub fn p_mul(&self, x: &[f64]) -> Vec<f64> {
        self.p.sym_upper_mul_vec(x)
    }
}

/// Continuous relaxation `CP(l, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub data: Arc<ConicData>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl ConicProgram {
    /// Assembles a program. `p` may hold the full symmetric matrix or one
    /// triangle; entries below the diagonal are mirrored into the upper one.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: CscMatrix,
        q: Vec<f64>,
        g: CscMatrix,
        h: Vec<f64>,
        a: CscMatrix,
        b: Vec<f64>,
        cones: Vec<ConeSpec>,
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self> {
        let p = symmetric_upper(&p)?;
        Ok(Self { data: Arc::new(ConicData { p, q, g, h, a, b, cones, offset: 0.0 }), l, u })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        Arc::make_mut(&mut self.data).offset = offset;
        self
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_program(self, &mut out);
        out
    }

    /// `½ xᵀPx + qᵀx + c0`
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        primal_objective(self, x)
    }

    /// Largest violation of `Gx = h`, `b - Ax ∈ K` and the box at `x`.
    pub fn primal_infeasibility(&self, x: &[f64]) -> f64 {
        let d = &self.data;
        let mut worst = 0.0f64;
        let gx = d.g.mul_vec(x);
        for (gi, hi) in gx.iter().zip(&d.h) {
            worst = worst.max((gi - hi).abs());
        }
        let mut s = d.b.clone();
        d.a.mul_vec_acc(x, &mut s, -1.0);
        let proj = crate::cones::project_cone(&d.cones, &s);
        worst = worst.max(vec_ops::norm_inf(&vec_ops::sub(&s, &proj)));
        for i in 0..x.len() {
            worst = worst.max(self.l[i] - x[i]).max(x[i] - self.u[i]);
        }
        worst
    }
}

/// Mirrors a symmetric matrix given in full or triangular storage into its
/// upper triangle. Fails if both triangles are given and disagree by more than
/// `1e-12·max|P|`.
pub fn symmetric_upper(p: &CscMatrix) -> Result<CscMatrix> {
    if p.rows != p.cols {
        return Err(Error::Dimension { what: "P columns", expected: p.rows, found: p.cols });
    }
    let tol = 1e-12 * p.max_abs().max(f64::MIN_POSITIVE);
    let has_lower = p.triplets().any(|(i, j, _)| i > j);
    let has_upper = p.triplets().any(|(i, j, _)| i < j);
    if has_lower && has_upper {
        for (i, j, v) in p.triplets() {
            if i != j && (v - p.get(j, i)).abs() > tol {
                return Err(Error::InvalidProblem(vec![Violation::new(
                    ViolationKind::Symmetry,
                    Some(i.min(j)),
                    format!("P[{i},{j}] = {v} but P[{j},{i}] = {}", p.get(j, i)),
                )]));
            }
        }
        return Ok(p.upper_triangle());
    }
    let t: Vec<_> = p.triplets().map(|(i, j, v)| (i.min(j), i.max(j), v)).collect();
    Ok(CscMatrix::from_triplets(p.rows, p.cols, &t))
}

/// One integer-restricted variable and its finite value set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerVar {
    pub index: usize,
    /// Sorted ascending, distinct.
    pub values: Vec<f64>,
}

impl IntegerVar {
    pub fn new(index: usize, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        values.dedup();
        Self { index, values }
    }

    pub fn binary(index: usize) -> Self {
        Self::new(index, vec![0.0, 1.0])
    }

    /// Consecutive integers `lo..=hi`.
    pub fn range(index: usize, lo: i64, hi: i64) -> Self {
        Self::new(index, (lo..=hi).map(|v| v as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicpProblem {
    /// Relaxation at the root box `[l̄, ū]`.
    pub relaxation: ConicProgram,
    pub integers: Vec<IntegerVar>,
}

impl MicpProblem {
    pub fn new(relaxation: ConicProgram, integers: Vec<IntegerVar>) -> Self {
        Self { relaxation, integers }
    }

    pub fn n(&self) -> usize {
        self.relaxation.n()
    }

    pub fn root_l(&self) -> &[f64] {
        &self.relaxation.l
    }

    pub fn root_u(&self) -> &[f64] {
        &self.relaxation.u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Dimension,
    Bound,
    ConePartition,
    ConeDim,
    Symmetry,
    IntegerIndex,
    IntegerValues,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, index: Option<usize>, message: impl Into<String>) -> Self {
        Self { kind, index, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{:?} at index {}: {}", self.kind, i, self.message),
            None => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

fn check_len(out: &mut Vec<Violation>, what: &str, expected: usize, found: usize) {
    if expected != found {
        out.push(Violation::new(ViolationKind::Dimension, None, format!("{what}: expected {expected}, found {found}")));
    }
}

fn check_program(prog: &ConicProgram, out: &mut Vec<Violation>) {
    let d = &prog.data;
    let n = d.n();
    check_len(out, "P rows", n, d.p.rows);
    check_len(out, "P cols", n, d.p.cols);
    if !d.p.is_upper_triangular() {
        out.push(Violation::new(ViolationKind::Symmetry, None, "P must be stored as its upper triangle"));
    }
    check_len(out, "G cols", n, d.g.cols);
    check_len(out, "h length", d.g.rows, d.h.len());
    check_len(out, "A cols", n, d.a.cols);
    check_len(out, "b length", d.a.rows, d.b.len());
    check_len(out, "l length", n, prog.l.len());
    check_len(out, "u length", n, prog.u.len());

    let finite_vectors: [(&str, &[f64]); 3] = [("q", &d.q), ("h", &d.h), ("b", &d.b)];
    for (name, v) in finite_vectors {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            out.push(Violation::new(ViolationKind::NonFinite, Some(i), format!("{name} has a non-finite entry")));
        }
    }
    if [&d.p, &d.g, &d.a].iter().any(|m| m.nzval.iter().any(|v| !v.is_finite())) {
        out.push(Violation::new(ViolationKind::NonFinite, None, "matrix with non-finite entry"));
    }

    for (i, (&lo, &hi)) in prog.l.iter().zip(&prog.u).enumerate() {
        if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            out.push(Violation::new(ViolationKind::Bound, Some(i), format!("invalid bound pair [{lo}, {hi}]")));
        } else if lo > hi {
            out.push(Violation::new(
                ViolationKind::Bound,
                Some(i),
                format!("lower bound {lo} exceeds upper bound {hi}"),
            ));
        }
    }

    for (k, c) in d.cones.iter().enumerate() {
        if c.dim == 0 {
            out.push(Violation::new(ViolationKind::ConeDim, Some(k), "cone dimension must be positive"));
        }
    }
    let total: usize = d.cones.iter().map(|c| c.dim).sum();
    if total != d.m() {
        out.push(Violation::new(
            ViolationKind::ConePartition,
            None,
            format!("cone dimensions sum to {total}, but A has {} rows", d.m()),
        ));
    }
}

/// Returns every invariant violation; an empty list means the problem is valid.
pub fn validate(problem: &MicpProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let prog = &problem.relaxation;
    check_program(prog, &mut out);
    let n = prog.n();
    let mut seen = vec![false; n];
    for (k, iv) in problem.integers.iter().enumerate() {
        if iv.index >= n {
            out.push(Violation::new(
                ViolationKind::IntegerIndex,
                Some(iv.index),
                format!("integer entry {k} refers to a variable outside 0..{n}"),
            ));
            continue;
        }
        if std::mem::replace(&mut seen[iv.index], true) {
            out.push(Violation::new(
                ViolationKind::IntegerIndex,
                Some(iv.index),
                "variable listed twice in the integer set",
            ));
        }
        if iv.values.is_empty() {
            out.push(Violation::new(ViolationKind::IntegerValues, Some(iv.index), "empty value set"));
            continue;
        }
        if iv.values.iter().any(|v| !v.is_finite()) || iv.values.windows(2).any(|w| w[0] >= w[1]) {
            out.push(Violation::new(
                ViolationKind::IntegerValues,
                Some(iv.index),
                "value set must be finite, sorted and distinct",
            ));
        }
        if prog.l.len() == n && prog.u.len() == n {
            let (lo, hi) = (prog.l[iv.index], prog.u[iv.index]);
            if iv.values.iter().any(|&v| v < lo || v > hi) {
                out.push(Violation::new(
                    ViolationKind::IntegerValues,
                    Some(iv.index),
                    format!("value set leaves the root box [{lo}, {hi}]"),
                ));
            }
        }
    }
    out
}

/// Relaxation of a node with box `[node_l, node_u]` inside the root box.
pub fn build_relaxation(micp: &MicpProblem, node_l: &[f64], node_u: &[f64]) -> Result<ConicProgram> {
    let n = micp.n();
    for (what, v) in [("node_l", node_l), ("node_u", node_u)] {
        if v.len() != n {
            return Err(Error::Dimension {
                what: if what == "node_l" { "node lower bound" } else { "node upper bound" },
                expected: n,
                found: v.len(),
            });
        }
    }
    let (root_l, root_u) = (micp.root_l(), micp.root_u());
    for i in 0..n {
        if node_l[i] < root_l[i] || node_u[i] > root_u[i] || node_l[i].is_nan() || node_u[i].is_nan() {
            return Err(Error::BoundsOutsideRoot { index: i });
        }
    }
    Ok(ConicProgram { data: Arc::clone(&micp.relaxation.data), l: node_l.to_vec(), u: node_u.to_vec() })
}

/// `½ xᵀPx + qᵀx + c0`
pub fn primal_objective(prog: &ConicProgram, x: &[f64]) -> Result<f64> {
    let d = &prog.data;
    if x.len() != d.n() {
        return Err(Error::Dimension { what: "x", expected: d.n(), found: x.len() });
    }
    let px = d.p_mul(x);
    Ok(0.5 * vec_ops::dot(x, &px) + vec_ops::dot(&d.q, x) + d.offset)
}

/// Absolute slack granted on top of `tol` so that a decimal boundary value such
/// as `0.999999` (stored as `0.99999899999999997…`) still counts as within `1e-6`.
fn representation_slack(a: f64, b: f64) -> f64 {
    4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

/// True iff every integer-restricted entry lies within `tol` (inclusive) of an
/// allowed value.
pub fn is_integer_feasible(x: &[f64], micp: &MicpProblem, tol: f64) -> bool {
    micp.integers.iter().all(|iv| {
        let xi = x[iv.index];
        iv.values.iter().any(|&v| (xi - v).abs() <= tol + representation_slack(xi, v))
    })
}

/// Distance from `x_i` to the nearest allowed value.
pub(crate) fn integer_distance(xi: f64, values: &[f64]) -> f64 {
    values.iter().map(|&v| (xi - v).abs()).fold(f64::INFINITY, f64::min)
}
