//! Primal-dual iterates emitted by the subsolvers.

use serde::{Deserialize, Serialize};

/// Sign convention of the conic and box multipliers.
///
/// * `Osm`: stationarity `Px + q + Gᵀz − Aᵀy + y_b = 0` with `y ∈ K°`.
/// * `Ipm`: stationarity `Px + q + Gᵀz + Aᵀy + y₊ − y₋ = 0` with `y ∈ K*`,
///   `y₊, y₋ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    Osm,
    Ipm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualIterate {
    pub x: Vec<f64>,
    /// Conic slack, `s ∈ K`.
    pub s: Vec<f64>,
    /// Conic multiplier.
    pub y: Vec<f64>,
    /// Box multiplier. Under `Ipm` this is always `y_plus − y_minus`.
    pub y_b: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    /// Equality multiplier.
    pub z: Vec<f64>,
    pub convention: Convention,
    pub iter: usize,
}

impl DualIterate {
    pub fn zeros(n: usize, m: usize, p: usize, convention: Convention) -> Self {
        Self {
            x: vec![0.0; n],
            s: vec![0.0; m],
            y: vec![0.0; m],
            y_b: vec![0.0; n],
            y_plus: vec![0.0; n],
            y_minus: vec![0.0; n],
            z: vec![0.0; p],
            convention,
            iter: 0,
        }
    }

    /// Splits `y_b` into `y_plus = max(y_b, 0)` and `y_minus = max(−y_b, 0)`.
    pub fn split_box_multiplier(&mut self) {
        for i in 0..self.y_b.len() {
            self.y_plus[i] = self.y_b[i].max(0.0);
            self.y_minus[i] = (-self.y_b[i]).max(0.0);
        }
    }

    /// Re-expresses an `Osm` iterate under the `Ipm` convention (`y ↦ −y`,
    /// box multiplier split by sign). `Ipm` iterates are returned unchanged.
    pub fn to_ipm_convention(&self) -> Self {
        match self.convention {
            Convention::Ipm => self.clone(),
            Convention::Osm => {
                let mut out = self.clone();
                out.y.iter_mut().for_each(|v| *v = -*v);
                out.split_box_multiplier();
                out.convention = Convention::Ipm;
                out
            }
        }
    }
}

/// Outcome of a subsolver termination check.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsolverStatus {
    Running,
    Optimal { x: Vec<f64>, objective: f64 },
    PrimalInfeasible { certificate: Vec<f64> },
    DualInfeasible { certificate: Vec<f64> },
}

/// Interface the branch-and-bound driver uses to run a node relaxation.
pub trait Subsolver {
    /// Advances one iteration and returns the new iterate.
    fn step(&mut self) -> &DualIterate;

    /// Current iterate.
    fn iterate(&self) -> &DualIterate;

    /// Dual objective at the current, uncorrected iterate.
    fn dual_estimate(&self) -> f64;

    /// Termination check at the current iterate.
    fn status(&mut self) -> SubsolverStatus;

    /// Whether termination and early-termination checks are due after the
    /// latest step.
    fn check_due(&self) -> bool;

    fn iterations(&self) -> usize;

    /// True once the iteration cap has been hit without a verdict.
    fn limit_reached(&self) -> bool;
}
