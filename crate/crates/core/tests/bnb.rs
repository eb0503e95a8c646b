use conic_bnb::bnb::{bnb_solve, BnbConfig, SolveStatus, SubsolverKind};
use conic_bnb::correction::CorrectionMethod;
use conic_bnb::instances::{gen_mpc, gen_portfolio, gen_random_miqp, MpcConfig, PortfolioConfig};
use conic_bnb::{ConicProgram, CscMatrix, IntegerVar, MicpProblem};

fn toy() -> MicpProblem {
    // (x − 0.4)²
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
    MicpProblem::new(prog, vec![IntegerVar::binary(0)])
}

#[test]
fn toy_optimum() {
    for subsolver in [SubsolverKind::Ipm, SubsolverKind::Admm] {
        let res = bnb_solve(&toy(), &BnbConfig { subsolver, ..Default::default() }).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - 0.16).abs() < 1e-6);
        assert!(res.x_star.unwrap()[0].abs() < 1e-6);
    }
}

#[test]
fn integer_infeasible_equality() {
    let prog = ConicProgram::new(
        CscMatrix::zeros(2, 2),
        vec![0.0, 0.0],
        CscMatrix::from_dense(&[vec![1.0, 1.0]]),
        vec![3.0],
        CscMatrix::zeros(0, 2),
        vec![],
        vec![],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    )
    .unwrap();
    let p = MicpProblem::new(prog, vec![IntegerVar::binary(0), IntegerVar::binary(1)]);
    assert_eq!(bnb_solve(&p, &BnbConfig::default()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn admm_tree_matches_ipm_tree() {
    for seed in 0..8 {
        let p = gen_random_miqp(6, 3, 400 + seed).unwrap();
        let ipm = bnb_solve(&p, &BnbConfig::default()).unwrap();
        let admm = bnb_solve(&p, &BnbConfig { subsolver: SubsolverKind::Admm, ..Default::default() }).unwrap();
        assert!((ipm.objective - admm.objective).abs() <= 1e-5 * (1.0 + ipm.objective.abs()), "seed {seed}");
    }
}

#[test]
fn admm_early_termination_keeps_objective() {
    let p = gen_mpc(&MpcConfig::synthetic(3, 2, 3, 5)).unwrap();
    let base = BnbConfig { subsolver: SubsolverKind::Admm, ..Default::default() };
    let on = bnb_solve(&p, &base).unwrap();
    let off = bnb_solve(&p, &BnbConfig { early_termination: false, ..base }).unwrap();
    assert!((on.objective - off.objective).abs() <= 1e-5 * (1.0 + off.objective.abs()));
    assert!(on.stats.iterations_after_first_incumbent <= off.stats.iterations_after_first_incumbent);
}

#[test]
fn warm_start_keeps_objective() {
    for seed in 0..4 {
        let p = gen_mpc(&MpcConfig::synthetic(4, 2, 4, 20 + seed)).unwrap();
        let cold = bnb_solve(&p, &BnbConfig::default()).unwrap();
        let warm = bnb_solve(&p, &BnbConfig { warm_start: true, ..Default::default() }).unwrap();
        assert!((cold.objective - warm.objective).abs() <= 1e-6, "seed {seed}");
    }
}

#[test]
fn simple_correction_prunes_portfolio_nodes_soundly() {
    let mut fired = 0;
    for seed in 0..4 {
        let p = gen_portfolio(&PortfolioConfig::synthetic(10, 3, 2000, seed)).unwrap();
        let off = bnb_solve(&p, &BnbConfig { early_termination: false, ..Default::default() }).unwrap();
        let cfg = BnbConfig { correction: CorrectionMethod::Simple, verify_early_pruning: true, ..Default::default() };
        let on = bnb_solve(&p, &cfg).unwrap();
        assert!((on.objective - off.objective).abs() <= 1e-6);
        fired += on.stats.nodes_pruned_early;
        for v in &on.stats.verification {
            assert!(v.node_optimum >= v.upper_at_prune - 1e-6);
            assert!(v.corrected_bound <= v.node_optimum + 1e-6);
        }
    }
    assert!(fired > 0);
}

#[test]
fn simple_correction_on_free_states_falls_back() {
    // states are unbounded, so the simple rule cannot be applied directly
    let p = gen_mpc(&MpcConfig::synthetic(3, 2, 3, 9)).unwrap();
    let off = bnb_solve(&p, &BnbConfig { early_termination: false, ..Default::default() }).unwrap();
    let on = bnb_solve(&p, &BnbConfig { correction: CorrectionMethod::Simple, ..Default::default() }).unwrap();
    assert!((on.objective - off.objective).abs() <= 1e-6);
}

#[test]
fn node_limit_reports_limit() {
    let p = gen_mpc(&MpcConfig::synthetic(4, 2, 4, 104)).unwrap();
    let res = bnb_solve(&p, &BnbConfig { max_nodes: 2, ..Default::default() }).unwrap();
    assert_eq!(res.status, SolveStatus::LimitReached);
}

#[test]
fn injected_bound_at_optimum_gives_cutoff_or_optimum() {
    let p = gen_mpc(&MpcConfig::synthetic(4, 2, 4, 101)).unwrap();
    let off = bnb_solve(&p, &BnbConfig { early_termination: false, ..Default::default() }).unwrap();
    let res = bnb_solve(&p, &BnbConfig { initial_upper_bound: Some(off.objective), ..Default::default() }).unwrap();
    assert!(matches!(res.status, SolveStatus::Cutoff | SolveStatus::Optimal));
    assert!(res.stats.nodes_pruned_early >= 1);
}

#[test]
fn random_instances_with_many_binaries_agree_on_off() {
    for seed in 0..5 {
        let p = gen_random_miqp(12, 8, 900 + seed).unwrap();
        let on = bnb_solve(&p, &BnbConfig::default()).unwrap();
        let off = bnb_solve(&p, &BnbConfig { early_termination: false, ..Default::default() }).unwrap();
        assert!((on.objective - off.objective).abs() <= 1e-6);
    }
}
