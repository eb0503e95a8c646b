//! Best-first branch-and-bound with early termination of node solves.
//!
//! Every node relaxation runs a subsolver one iteration at a time. Once an
//! incumbent exists and the uncorrected dual estimate reaches it, the iterate
//! is corrected into a dual-feasible point; if the corrected bound still
//! reaches the incumbent the node is pruned before the solve finishes.

use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::admm::{AdmmSettings, AdmmState};
use crate::correction::{
    build_correction_kkt, corrected_dual_cost, dual_residual, opt_correction, residual_correction, simple_correction,
    CorrectionEngine, CorrectionMethod,
};
use crate::error::{Error, Result};
use crate::ipm::{IpmSettings, IpmState};
use crate::iterate::{DualIterate, Subsolver, SubsolverStatus};
use crate::problem::{self, integer_distance, ConicProgram, MicpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsolverKind {
    Admm,
    Ipm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbConfig {
    pub subsolver: SubsolverKind,
    pub admm: AdmmSettings,
    pub ipm: IpmSettings,
    pub early_termination: bool,
    pub correction: CorrectionMethod,
    /// Regularizers of the optimization-based correction.
    pub eta: f64,
    pub gamma: f64,
    /// Indices whose box multipliers the optimization-based correction may
    /// move; `None` means every index with both root bounds finite.
    pub bounded_set: Option<Vec<usize>>,
    pub integer_tol: f64,
    pub max_nodes: usize,
    /// Cap on subsolver iterations summed over the tree.
    pub max_iterations: usize,
    pub warm_start: bool,
    /// Starting value of the incumbent bound (`+∞` when unset).
    pub initial_upper_bound: Option<f64>,
    /// Re-solve every early-pruned node to completion and record the result.
    pub verify_early_pruning: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            subsolver: SubsolverKind::Ipm,
            admm: AdmmSettings::default(),
            ipm: IpmSettings::default(),
            early_termination: true,
            correction: CorrectionMethod::OptimizationBased,
            eta: 1.0,
            gamma: 1.0,
            bounded_set: None,
            integer_tol: 1e-6,
            max_nodes: 100_000,
            max_iterations: usize::MAX,
            warm_start: false,
            initial_upper_bound: None,
            verify_early_pruning: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub node_l: Vec<f64>,
    pub node_u: Vec<f64>,
    pub parent_bound: f64,
    pub depth: usize,
    /// Creation order, for FIFO tie-breaking.
    pub seq: usize,
    pub warm_start: Option<DualIterate>,
}

/// Heap entry: the greatest entry is the one to explore next.
struct Queued(BnbNode);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        let (a, b) = (&self.0, &other.0);
        b.parent_bound.total_cmp(&a.parent_bound).then(a.depth.cmp(&b.depth)).then(b.seq.cmp(&a.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// A relaxation is unbounded below.
    Unbounded,
    /// Node or iteration limit hit, or a node relaxation did not converge.
    LimitReached,
    /// Nothing better than the supplied initial bound exists.
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentEvent {
    pub objective: f64,
    pub nodes_solved: usize,
    pub total_iterations: usize,
}

/// Outcome of re-solving a node that was pruned early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyPruneCheck {
    pub upper_at_prune: f64,
    pub corrected_bound: f64,
    /// `+∞` for an infeasible node, `NaN` if the re-solve did not finish.
    pub node_optimum: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Nodes whose relaxation was started.
    pub nodes_solved: usize,
    pub nodes_pruned_early: usize,
    pub nodes_pruned_bound: usize,
    pub nodes_infeasible: usize,
    pub nodes_unresolved: usize,
    pub total_subsolver_iterations: usize,
    pub iterations_after_first_incumbent: usize,
    /// Corrections computed by the early-termination check.
    pub corrections: usize,
    pub incumbent_history: Vec<IncumbentEvent>,
    pub verification: Vec<EarlyPruneCheck>,
    /// Why early termination was disabled for this run, if it was.
    pub early_termination_disabled: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub x_star: Option<Vec<f64>>,
    pub stats: SolveStats,
}

/// Decision of [`early_termination_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtDecision {
    Continue,
    TerminateEarly(f64),
}

/// Correction method plus the factored system when one is needed.
#[derive(Debug, Clone)]
pub struct Corrector {
    pub method: CorrectionMethod,
    pub engine: Option<CorrectionEngine>,
}

impl Corrector {
    /// Corrected dual cost, or `None` if no correction applies.
    pub fn lower_bound(&self, prog: &ConicProgram, it: &DualIterate) -> Option<f64> {
        let r = dual_residual(prog, it);
        let corr = match self.method {
            CorrectionMethod::Simple => match simple_correction(prog, &r) {
                Ok(c) => Ok(c),
                Err(Error::InfiniteBound { .. }) => opt_correction(self.engine.as_ref()?, it, &r),
                Err(e) => Err(e),
            },
            CorrectionMethod::OptimizationBased => {
                // the regularized correction keeps a bias as r → 0; the
                // residual-only one does not, and both are dual feasible
                let e = self.engine.as_ref()?;
                let a = opt_correction(e, it, &r).ok().and_then(|c| corrected_dual_cost(prog, it, &c).ok());
                let b = residual_correction(e, &r).ok().and_then(|c| corrected_dual_cost(prog, it, &c).ok());
                return match (a, b) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
        };
        corrected_dual_cost(prog, it, &corr.ok()?).ok()
    }
}

/// No correction unless `d_k ≥ upper`;
/// terminate iff the corrected cost also reaches `upper`.
pub fn early_termination_check(
    prog: &ConicProgram,
    it: &DualIterate,
    d_k: f64,
    upper: f64,
    corrector: &Corrector,
) -> EtDecision {
    if !(upper < f64::INFINITY) || !(d_k >= upper) {
        return EtDecision::Continue;
    }
    match corrector.lower_bound(prog, it) {
        Some(lb) if lb >= upper => EtDecision::TerminateEarly(lb),
        _ => EtDecision::Continue,
    }
}

/// Most-fractional branching over `Z_i ∩ [node_l_i, node_u_i]`; ties go to the
/// lowest index. Returns `None` when no index is farther than `tol` from its
/// allowed values.
pub fn branch(
    node: &BnbNode,
    x_hat: &[f64],
    micp: &MicpProblem,
    tol: f64,
    seq: &mut usize,
) -> Option<(BnbNode, BnbNode)> {
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut ints: Vec<_> = micp.integers.iter().collect();
    ints.sort_by_key(|iv| iv.index);
    for iv in ints {
        let i = iv.index;
        let vals: Vec<f64> =
            iv.values.iter().copied().filter(|&v| v >= node.node_l[i] && v <= node.node_u[i]).collect();
        if vals.len() < 2 {
            continue;
        }
        let dist = integer_distance(x_hat[i], &vals);
        if dist > tol && best.as_ref().is_none_or(|b| dist > b.2) {
            best = Some((i, vals, dist));
        }
    }
    let (i, vals, _) = best?;
    let xi = x_hat[i];
    let mut k = vals.iter().filter(|&&v| v <= xi).count();
    // x̂ outside the hull of the allowed values: split next to the nearest one
    k = k.clamp(1, vals.len() - 1);
    let mut down = node.clone();
    let mut up = node.clone();
    down.node_u[i] = vals[k - 1];
    up.node_l[i] = vals[k];
    for c in [&mut down, &mut up] {
        c.depth = node.depth + 1;
        c.seq = *seq;
        *seq += 1;
    }
    Some((down, up))
}

/// Pops the node with the smallest parent bound; ties go to the deepest, then
/// to the earliest created.
pub fn select_node(tree: &mut BinaryHeap<QueuedNode>) -> Option<BnbNode> {
    tree.pop().map(|q| q.0 .0)
}

/// Tree entry ordered for [`select_node`].
pub struct QueuedNode(Queued);

impl QueuedNode {
    pub fn new(node: BnbNode) -> Self {
        Self(Queued(node))
    }

    pub fn node(&self) -> &BnbNode {
        &self.0 .0
    }
}

impl PartialEq for QueuedNode {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl Eq for QueuedNode {}
impl PartialOrd for QueuedNode {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedNode {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.0.cmp(&other.0)
    }
}

enum NodeOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    Early(f64),
    Unresolved,
}

fn make_subsolver(prog: &ConicProgram, cfg: &BnbConfig, warm: Option<&DualIterate>) -> Result<Box<dyn Subsolver>> {
    Ok(match cfg.subsolver {
        SubsolverKind::Admm => {
            let mut s = AdmmState::new(prog, cfg.admm)?;
            if let Some(w) = warm {
                s.warm_start(w);
            }
            Box::new(s)
        }
        SubsolverKind::Ipm => {
            let mut s = IpmState::new(prog, cfg.ipm)?;
            if let Some(w) = warm {
                s.warm_start(w);
            }
            Box::new(s)
        }
    })
}

/// Mutable search state of one solve.
pub struct BnbState<'a> {
    micp: &'a MicpProblem,
    pub config: BnbConfig,
    pub tree: BinaryHeap<QueuedNode>,
    pub upper: f64,
    pub x_star: Option<Vec<f64>>,
    pub stats: SolveStats,
    corrector: Option<Corrector>,
    seq: usize,
    limit_hit: bool,
}

impl<'a> BnbState<'a> {
    pub fn new(micp: &'a MicpProblem, config: BnbConfig) -> Result<Self> {
        let violations = problem::validate(micp);
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(violations));
        }
        let mut stats = SolveStats::default();
        let corrector = if config.early_termination {
            let needs_engine = config.correction == CorrectionMethod::OptimizationBased
                || micp.root_l().iter().chain(micp.root_u()).any(|v| !v.is_finite());
            let engine = if needs_engine {
                match build_correction_kkt(&micp.relaxation, config.bounded_set.clone(), config.eta, config.gamma) {
                    Ok(e) => Some(e),
                    Err(e) => {
                        stats.early_termination_disabled = Some(e.to_string());
                        None
                    }
                }
            } else {
                None
            };
            if needs_engine && engine.is_none() {
                None
            } else {
                Some(Corrector { method: config.correction, engine })
            }
        } else {
            None
        };
        let mut node_l = micp.root_l().to_vec();
        let mut node_u = micp.root_u().to_vec();
        for iv in &micp.integers {
            node_l[iv.index] = node_l[iv.index].max(iv.values[0]);
            node_u[iv.index] = node_u[iv.index].min(*iv.values.last().unwrap());
        }
        let mut tree = BinaryHeap::new();
        tree.push(QueuedNode::new(BnbNode {
            node_l,
            node_u,
            parent_bound: f64::NEG_INFINITY,
            depth: 0,
            seq: 0,
            warm_start: None,
        }));
        Ok(Self {
            micp,
            upper: config.initial_upper_bound.unwrap_or(f64::INFINITY),
            config,
            tree,
            x_star: None,
            stats,
            corrector,
            seq: 1,
            limit_hit: false,
        })
    }

    fn run_node(
        &mut self,
        prog: &ConicProgram,
        node: &BnbNode,
        early: bool,
    ) -> Result<(NodeOutcome, Option<DualIterate>)> {
        let warm = if self.config.warm_start { node.warm_start.as_ref() } else { None };
        let mut solver = make_subsolver(prog, &self.config, warm)?;
        let corrector = if early { self.corrector.clone() } else { None };
        loop {
            if self.stats.total_subsolver_iterations >= self.config.max_iterations {
                self.limit_hit = true;
                return Ok((NodeOutcome::Unresolved, None));
            }
            solver.step();
            self.stats.total_subsolver_iterations += 1;
            if self.upper < f64::INFINITY {
                self.stats.iterations_after_first_incumbent += 1;
            }
            if solver.check_due() {
                match solver.status() {
                    SubsolverStatus::Running => {}
                    SubsolverStatus::Optimal { x, objective } => {
                        return Ok((NodeOutcome::Optimal { x, objective }, Some(solver.iterate().clone())))
                    }
                    SubsolverStatus::PrimalInfeasible { .. } => return Ok((NodeOutcome::Infeasible, None)),
                    SubsolverStatus::DualInfeasible { .. } => return Ok((NodeOutcome::Unbounded, None)),
                }
                if let Some(c) = &corrector {
                    let it = solver.iterate();
                    let d_k = solver.dual_estimate();
                    if d_k >= self.upper && self.upper < f64::INFINITY {
                        self.stats.corrections += 1;
                    }
                    if let EtDecision::TerminateEarly(lb) = early_termination_check(prog, it, d_k, self.upper, c) {
                        return Ok((NodeOutcome::Early(lb), None));
                    }
                }
            }
            if solver.limit_reached() {
                return Ok((NodeOutcome::Unresolved, None));
            }
        }
    }

    /// Solves a node to completion without early termination and without
    /// touching the statistics; used by the verification mode.
    fn resolve_node(&self, prog: &ConicProgram) -> Result<f64> {
        let mut solver = make_subsolver(prog, &self.config, None)?;
        loop {
            solver.step();
            if solver.check_due() {
                match solver.status() {
                    SubsolverStatus::Running => {}
                    SubsolverStatus::Optimal { objective, .. } => return Ok(objective),
                    SubsolverStatus::PrimalInfeasible { .. } => return Ok(f64::INFINITY),
                    SubsolverStatus::DualInfeasible { .. } => return Ok(f64::NEG_INFINITY),
                }
            }
            if solver.limit_reached() {
                return Ok(f64::NAN);
            }
        }
    }

    fn update_incumbent(&mut self, x: Vec<f64>, objective: f64) {
        self.upper = objective;
        self.x_star = Some(x);
        self.stats.incumbent_history.push(IncumbentEvent {
            objective,
            nodes_solved: self.stats.nodes_solved,
            total_iterations: self.stats.total_subsolver_iterations,
        });
        let u = self.upper;
        let before = self.tree.len();
        self.tree.retain(|q| !(q.node().parent_bound > u));
        self.stats.nodes_pruned_bound += before - self.tree.len();
    }

    pub fn solve(mut self) -> Result<BnbResult> {
        let mut unbounded = false;
        while let Some(node) = select_node(&mut self.tree) {
            if node.parent_bound > self.upper {
                self.stats.nodes_pruned_bound += 1;
                continue;
            }
            if self.stats.nodes_solved >= self.config.max_nodes {
                self.limit_hit = true;
                break;
            }
            self.stats.nodes_solved += 1;
            let prog = problem::build_relaxation(self.micp, &node.node_l, &node.node_u)?;
            let early = self.corrector.is_some();
            let (outcome, final_it) = self.run_node(&prog, &node, early)?;
            match outcome {
                NodeOutcome::Optimal { x, objective } => {
                    if objective > self.upper {
                        self.stats.nodes_pruned_bound += 1;
                    } else if problem::is_integer_feasible(&x, self.micp, self.config.integer_tol) {
                        if objective < self.upper || self.x_star.is_none() {
                            self.update_incumbent(x, objective);
                        }
                    } else {
                        let mut seq = self.seq;
                        match branch(&node, &x, self.micp, self.config.integer_tol, &mut seq) {
                            Some((mut down, mut up)) => {
                                for c in [&mut down, &mut up] {
                                    c.parent_bound = objective;
                                    c.warm_start = if self.config.warm_start { final_it.clone() } else { None };
                                }
                                self.tree.push(QueuedNode::new(down));
                                self.tree.push(QueuedNode::new(up));
                            }
                            // fractional only against values the node already excludes
                            None => self.stats.nodes_unresolved += 1,
                        }
                        self.seq = seq;
                    }
                }
                NodeOutcome::Infeasible => self.stats.nodes_infeasible += 1,
                NodeOutcome::Unbounded => {
                    unbounded = true;
                    break;
                }
                NodeOutcome::Early(lb) => {
                    self.stats.nodes_pruned_early += 1;
                    if self.config.verify_early_pruning {
                        let node_optimum = self.resolve_node(&prog)?;
                        self.stats.verification.push(EarlyPruneCheck {
                            upper_at_prune: self.upper,
                            corrected_bound: lb,
                            node_optimum,
                        });
                    }
                }
                NodeOutcome::Unresolved => {
                    self.stats.nodes_unresolved += 1;
                    if self.limit_hit {
                        break;
                    }
                }
            }
        }
        let status = if unbounded {
            SolveStatus::Unbounded
        } else if self.limit_hit || self.stats.nodes_unresolved > 0 {
            SolveStatus::LimitReached
        } else if self.x_star.is_some() {
            SolveStatus::Optimal
        } else if self.config.initial_upper_bound.is_some_and(|u| u < f64::INFINITY) {
            SolveStatus::Cutoff
        } else {
            SolveStatus::Infeasible
        };
        let objective = match status {
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ if self.x_star.is_some() => self.upper,
            _ => f64::INFINITY,
        };
        Ok(BnbResult { status, objective, x_star: self.x_star, stats: self.stats })
    }
}

/// Runs branch-and-bound to completion or to a configured limit.
pub fn bnb_solve(micp: &MicpProblem, config: &BnbConfig) -> Result<BnbResult> {
    BnbState::new(micp, config.clone())?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ConicProgram, IntegerVar};
    use crate::sparse::CscMatrix;

    fn node(bound: f64, depth: usize, seq: usize) -> BnbNode {
        BnbNode { node_l: vec![0.0], node_u: vec![1.0], parent_bound: bound, depth, seq, warm_start: None }
    }

    #[test]
    fn selection_order() {
        let mut t = BinaryHeap::new();
        t.push(QueuedNode::new(node(0.3, 0, 0)));
        t.push(QueuedNode::new(node(0.1, 0, 1)));
        assert_eq!(select_node(&mut t).unwrap().parent_bound, 0.1);
        let mut t = BinaryHeap::new();
        t.push(QueuedNode::new(node(0.2, 2, 0)));
        t.push(QueuedNode::new(node(0.2, 5, 1)));
        assert_eq!(select_node(&mut t).unwrap().depth, 5);
        let mut t = BinaryHeap::new();
        t.push(QueuedNode::new(node(0.2, 3, 7)));
        t.push(QueuedNode::new(node(0.2, 3, 4)));
        assert_eq!(select_node(&mut t).unwrap().seq, 4);
        assert!(select_node(&mut t).is_some() && select_node(&mut t).is_none());
    }

    fn box_micp(n: usize, ints: Vec<IntegerVar>, l: f64, u: f64) -> MicpProblem {
        let prog = ConicProgram::new(
            CscMatrix::identity(n),
            vec![0.0; n],
            CscMatrix::zeros(0, n),
            vec![],
            CscMatrix::zeros(0, n),
            vec![],
            vec![],
            vec![l; n],
            vec![u; n],
        )
        .unwrap();
        MicpProblem::new(prog, ints)
    }

    #[test]
    fn branching_rules() {
        let m = box_micp(1, vec![IntegerVar::binary(0)], 0.0, 1.0);
        let mut seq = 1;
        let (d, u) = branch(&node(0.0, 0, 0), &[0.5], &m, 1e-6, &mut seq).unwrap();
        assert_eq!((d.node_u[0], u.node_l[0]), (0.0, 1.0));

        let m = box_micp(1, vec![IntegerVar::range(0, -1, 1)], -1.0, 1.0);
        let mut root = node(0.0, 0, 0);
        root.node_l = vec![-1.0];
        let (d, u) = branch(&root, &[0.2], &m, 1e-6, &mut seq).unwrap();
        assert_eq!((d.node_l[0], d.node_u[0]), (-1.0, 0.0));
        assert_eq!((u.node_l[0], u.node_u[0]), (1.0, 1.0));

        let m = box_micp(2, vec![IntegerVar::binary(0), IntegerVar::binary(1)], 0.0, 1.0);
        let mut two = node(0.0, 0, 0);
        two.node_l = vec![0.0; 2];
        two.node_u = vec![1.0; 2];
        let (d, _) = branch(&two, &[0.5, 0.5], &m, 1e-6, &mut seq).unwrap();
        assert_eq!(d.node_u, vec![0.0, 1.0]);
        assert!(branch(&two, &[0.0, 1.0], &m, 1e-6, &mut seq).is_none());
    }

    #[test]
    fn gate_closed_without_incumbent() {
        let m = box_micp(1, vec![], 1.0, 2.0);
        let it = DualIterate::zeros(1, 0, 0, crate::Convention::Ipm);
        let c = Corrector { method: CorrectionMethod::Simple, engine: None };
        assert_eq!(early_termination_check(&m.relaxation, &it, 1e9, f64::INFINITY, &c), EtDecision::Continue);
    }

    #[test]
    fn toy_node_terminates_only_below_optimum() {
        let m = box_micp(1, vec![], 1.0, 2.0);
        let mut it = DualIterate::zeros(1, 0, 0, crate::Convention::Ipm);
        it.x = vec![1.0 + 1e-4];
        it.y_minus = vec![1.0];
        it.y_b = vec![-1.0];
        let c = Corrector { method: CorrectionMethod::Simple, engine: None };
        let d_k = crate::ipm::ipm_dual_objective(&m.relaxation, &it);
        match early_termination_check(&m.relaxation, &it, d_k, 0.4, &c) {
            EtDecision::TerminateEarly(lb) => assert!(lb > 0.4 && lb <= 0.5 + 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(early_termination_check(&m.relaxation, &it, d_k, 0.6, &c), EtDecision::Continue);
    }

    #[test]
    fn one_dimensional_binary() {
        // min (x − 0.4)² over {0, 1}
        let prog = ConicProgram::new(
            CscMatrix::from_diagonal(&[2.0]),
            vec![-0.8],
            CscMatrix::zeros(0, 1),
            vec![],
            CscMatrix::zeros(0, 1),
            vec![],
            vec![],
            vec![0.0],
            vec![1.0],
        )
        .unwrap()
        .with_offset(0.16);
        let m = MicpProblem::new(prog, vec![IntegerVar::binary(0)]);
        for kind in [SubsolverKind::Ipm, SubsolverKind::Admm] {
            let cfg = BnbConfig { subsolver: kind, ..BnbConfig::default() };
            let r = bnb_solve(&m, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!((r.objective - 0.16).abs() < 1e-6, "{kind:?}: {}", r.objective);
            assert!(r.x_star.unwrap()[0].abs() < 1e-6);
        }
    }

    #[test]
    fn infeasible_micp() {
        let prog = ConicProgram::new(
            CscMatrix::zeros(2, 2),
            vec![0.0; 2],
            CscMatrix::from_dense(&[vec![1.0, 1.0]]),
            vec![3.0],
            CscMatrix::zeros(0, 2),
            vec![],
            vec![],
            vec![0.0; 2],
            vec![1.0; 2],
        )
        .unwrap();
        let m = MicpProblem::new(prog, vec![IntegerVar::binary(0), IntegerVar::binary(1)]);
        let r = bnb_solve(&m, &BnbConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.x_star.is_none());
    }
}
