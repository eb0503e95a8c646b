//! Experiment driver: single solves, paired ET on/off benchmarks emitted as
//! CSV, and closed-loop MPC simulation.
//!
//! Iterations are counted per subsolver step. ADMM only stops at a check
//! (every `check_interval` steps), so its counts come in blocks of that size;
//! compare ADMM and IPM numbers with that in mind.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bnb::{bnb_solve, BnbConfig, BnbResult, SolveStats, SolveStatus, SubsolverKind};
use crate::correction::CorrectionMethod;
use crate::error::{Error, Result};
use crate::instances::{gen_mpc, gen_portfolio, gen_random_miqp, MpcConfig, MpcForm, PortfolioConfig};
use crate::problem::MicpProblem;

pub const CSV_HEADER: &str = "instance,arm,status,objective,nodes,nodes_early,iters,iters_after_incumbent,wall_ms";

/// Environment variable capping bench parallelism.
pub const THREADS_ENV: &str = "CONIC_BNB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveFlags {
    pub subsolver: SubsolverKind,
    pub early_termination: bool,
    pub correction: CorrectionMethod,
    pub eta: f64,
    pub gamma: f64,
    pub check_interval: usize,
    pub warm_start: bool,
    /// Subsolver tolerance; `None` keeps each subsolver's default.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for SolveFlags {
    fn default() -> Self {
        Self {
            subsolver: SubsolverKind::Ipm,
            early_termination: true,
            correction: CorrectionMethod::OptimizationBased,
            eta: 1.0,
            gamma: 1.0,
            check_interval: 25,
            warm_start: false,
            tol: None,
            seed: 0,
        }
    }
}

impl SolveFlags {
    pub fn to_config(&self) -> BnbConfig {
        let mut c = BnbConfig {
            subsolver: self.subsolver,
            early_termination: self.early_termination,
            correction: self.correction,
            eta: self.eta,
            gamma: self.gamma,
            warm_start: self.warm_start,
            ..BnbConfig::default()
        };
        c.admm.check_interval = self.check_interval;
        if let Some(t) = self.tol {
            c.ipm.tol = t;
            c.admm.eps_abs = t;
            c.admm.eps_rel = t;
        }
        c
    }

    /// First 16 hex digits of the SHA-256 of the flags' JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("flags serialize");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub config_hash: String,
    pub status: SolveStatus,
    /// Present iff `status` is `Optimal`.
    pub objective: Option<f64>,
    pub nodes_solved: usize,
    pub nodes_pruned_early: usize,
    pub total_subsolver_iterations: usize,
    pub iterations_after_first_incumbent: usize,
    pub wall_ms: f64,
}

impl RunRecord {
    fn from_result(instance: &str, flags: &SolveFlags, res: &BnbResult, wall_ms: f64) -> Self {
        let s = &res.stats;
        Self {
            instance: instance.to_string(),
            config_hash: flags.hash(),
            status: res.status,
            objective: (res.status == SolveStatus::Optimal).then_some(res.objective),
            nodes_solved: s.nodes_solved,
            nodes_pruned_early: s.nodes_pruned_early,
            total_subsolver_iterations: s.total_subsolver_iterations,
            iterations_after_first_incumbent: s.iterations_after_first_incumbent,
            wall_ms,
        }
    }
}

/// CLI exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible | SolveStatus::Cutoff => 2,
        SolveStatus::Unbounded | SolveStatus::LimitReached => 3,
    }
}

pub fn run(instance: &str, micp: &MicpProblem, flags: &SolveFlags) -> Result<(RunRecord, BnbResult)> {
    let t0 = Instant::now();
    let res = bnb_solve(micp, &flags.to_config())?;
    let wall = t0.elapsed().as_secs_f64() * 1e3;
    Ok((RunRecord::from_result(instance, flags, &res, wall), res))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchFamily {
    MpcCondensed,
    MpcSparse,
    Portfolio,
    RandomMiqp,
}

impl FromStr for BenchFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpc-condensed" => Ok(Self::MpcCondensed),
            "mpc-sparse" => Ok(Self::MpcSparse),
            "portfolio" => Ok(Self::Portfolio),
            "random-miqp" => Ok(Self::RandomMiqp),
            _ => Err(Error::Config(format!("unknown family `{s}`"))),
        }
    }
}

impl BenchFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::MpcCondensed => "mpc-condensed",
            Self::MpcSparse => "mpc-sparse",
            Self::Portfolio => "portfolio",
            Self::RandomMiqp => "random-miqp",
        }
    }
}

/// Instance sizes for generated benchmark families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySizes {
    pub mpc_n_x: usize,
    pub mpc_n_u: usize,
    pub mpc_horizon: usize,
    pub portfolio_assets: usize,
    pub portfolio_sectors: usize,
    pub portfolio_samples: usize,
    pub random_n: usize,
    pub random_n_int: usize,
}

impl Default for FamilySizes {
    fn default() -> Self {
        Self {
            mpc_n_x: 4,
            mpc_n_u: 2,
            mpc_horizon: 4,
            portfolio_assets: 10,
            portfolio_sectors: 3,
            portfolio_samples: 2000,
            random_n: 8,
            random_n_int: 4,
        }
    }
}

/// The `index`-th instance of a family; seeded with `seed + index`.
pub fn family_instance(
    family: BenchFamily,
    sizes: &FamilySizes,
    seed: u64,
    index: usize,
) -> Result<(String, MicpProblem)> {
    let s = seed.wrapping_add(index as u64);
    let id = format!("{}-{index:03}", family.name());
    let p = match family {
        BenchFamily::MpcCondensed | BenchFamily::MpcSparse => {
            let form = if family == BenchFamily::MpcSparse { MpcForm::Sparse } else { MpcForm::Condensed };
            gen_mpc(&MpcConfig::synthetic(sizes.mpc_n_x, sizes.mpc_n_u, sizes.mpc_horizon, s).with_form(form))?
        }
        BenchFamily::Portfolio => gen_portfolio(&PortfolioConfig::synthetic(
            sizes.portfolio_assets,
            sizes.portfolio_sectors,
            sizes.portfolio_samples,
            s,
        ))?,
        BenchFamily::RandomMiqp => gen_random_miqp(sizes.random_n, sizes.random_n_int, s)?,
    };
    Ok((id, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPair {
    pub on: RunRecord,
    pub off: RunRecord,
}

impl BenchPair {
    /// `1 − on/off` on iterations after the first incumbent; 0 when the OFF
    /// arm counted none.
    pub fn reduction_ratio(&self) -> f64 {
        let off = self.off.iterations_after_first_incumbent as f64;
        if off == 0.0 {
            0.0
        } else {
            1.0 - self.on.iterations_after_first_incumbent as f64 / off
        }
    }
}

/// Runs both arms on pre-built instances, in parallel across instances.
/// Output order follows the input.
pub fn bench_problems(problems: &[(String, MicpProblem)], flags: &SolveFlags) -> Result<Vec<BenchPair>> {
    let on = SolveFlags { early_termination: true, ..flags.clone() };
    let off = SolveFlags { early_termination: false, ..flags.clone() };
    with_pool(|| {
        problems.par_iter().map(|(id, p)| Ok(BenchPair { on: run(id, p, &on)?.0, off: run(id, p, &off)?.0 })).collect()
    })
}

pub fn bench(family: BenchFamily, count: usize, sizes: &FamilySizes, flags: &SolveFlags) -> Result<Vec<BenchPair>> {
    let problems = (0..count).map(|i| family_instance(family, sizes, flags.seed, i)).collect::<Result<Vec<_>>>()?;
    bench_problems(&problems, flags)
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn csv_row(r: &RunRecord, arm: &str) -> String {
    let obj = r.objective.map(|v| format!("{v:e}")).unwrap_or_default();
    format!(
        "{},{arm},{:?},{obj},{},{},{},{},{:.3}",
        r.instance,
        r.status,
        r.nodes_solved,
        r.nodes_pruned_early,
        r.total_subsolver_iterations,
        r.iterations_after_first_incumbent,
        r.wall_ms
    )
}

/// Header plus two rows per pair, ET-on first.
pub fn write_csv(pairs: &[BenchPair], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in pairs {
        let rows = format!("{}\n{}\n", csv_row(&p.on, "et-on"), csv_row(&p.off, "et-off"));
        w.write_all(rows.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcIntervalRecord {
    pub interval: usize,
    pub x_init: Vec<f64>,
    pub u_applied: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcLoopOutput {
    pub records: Vec<MpcIntervalRecord>,
    /// Set when a solve did not reach optimality; `records` is then partial.
    pub aborted: Option<String>,
}

/// Closed loop: solve, apply the first input, propagate the state, chain the
/// applied input into the ramp constraints.
pub fn mpc_loop(cfg: &MpcConfig, intervals: usize, flags: &SolveFlags) -> Result<MpcLoopOutput> {
    let mut cfg = cfg.clone();
    let config = flags.to_config();
    let mut records = Vec::with_capacity(intervals);
    for k in 0..intervals {
        let micp = gen_mpc(&cfg)?;
        let res = bnb_solve(&micp, &config)?;
        let x = match (&res.status, &res.x_star) {
            (SolveStatus::Optimal, Some(x)) => x,
            _ => return Ok(MpcLoopOutput { records, aborted: Some(format!("interval {k}: {:?}", res.status)) }),
        };
        let off = cfg.input_offset();
        let u0: Vec<f64> = (0..cfg.n_u).map(|j| snap(x[off + j], &cfg.value_sets[j])).collect();
        records.push(MpcIntervalRecord {
            interval: k,
            x_init: cfg.x_init.clone(),
            u_applied: u0.clone(),
            stats: res.stats,
        });
        cfg.advance(&u0);
    }
    Ok(MpcLoopOutput { records, aborted: None })
}

fn snap(v: f64, set: &[f64]) -> f64 {
    set.iter().copied().min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs())).unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_flags() {
        let a = SolveFlags::default();
        let b = SolveFlags { eta: 2.0, ..a.clone() };
        assert_eq!(a.hash(), SolveFlags::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn family_names_round_trip() {
        for f in [BenchFamily::MpcCondensed, BenchFamily::MpcSparse, BenchFamily::Portfolio, BenchFamily::RandomMiqp] {
            assert_eq!(f.name().parse::<BenchFamily>().unwrap(), f);
        }
        assert!("knapsack".parse::<BenchFamily>().is_err());
    }

    #[test]
    fn csv_layout() {
        let pairs = bench(
            BenchFamily::RandomMiqp,
            2,
            &FamilySizes { random_n: 4, random_n_int: 2, ..Default::default() },
            &SolveFlags::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&pairs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("random-miqp-000,et-on,Optimal,"));
        assert!(lines[2].starts_with("random-miqp-000,et-off,Optimal,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
    }

    #[test]
    fn snapping_picks_nearest_value() {
        assert_eq!(snap(0.9999999, &[-1.0, 0.0, 1.0]), 1.0);
        assert_eq!(snap(-1e-9, &[-1.0, 0.0, 1.0]), 0.0);
    }

    #[test]
    fn zero_intervals_is_empty() {
        let cfg = MpcConfig::synthetic(2, 1, 2, 0);
        let out = mpc_loop(&cfg, 0, &SolveFlags::default()).unwrap();
        assert!(out.records.is_empty() && out.aborted.is_none());
    }
}
