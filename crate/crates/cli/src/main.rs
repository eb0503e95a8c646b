use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conic_bnb::bnb::SubsolverKind;
use conic_bnb::correction::CorrectionMethod;
use conic_bnb::harness::{self, BenchFamily, FamilySizes, SolveFlags};
use conic_bnb::instances::{MpcConfig, MpcForm};
use conic_bnb::problem::{from_json_str, to_json_string};

#[derive(Parser)]
#[command(name = "conic-bnb", version, about = "Mixed-integer conic branch-and-bound with early termination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print the run record as JSON.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        flags: FlagArgs,
    },
    /// Run every generated instance with early termination on and off; print CSV.
    Bench {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[command(flatten)]
        sizes: SizeArgs,
        #[command(flatten)]
        flags: FlagArgs,
        /// Also print the per-instance iteration reduction ratio to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// Write one generated instance as problem JSON.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        sizes: SizeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop MPC; one JSON record per interval.
    MpcLoop {
        /// MPC configuration as JSON; a synthetic system is used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        intervals: usize,
        #[command(flatten)]
        sizes: SizeArgs,
        #[arg(long, value_enum, default_value_t = Form::Sparse)]
        form: Form,
        #[command(flatten)]
        flags: FlagArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    MpcCondensed,
    MpcSparse,
    Portfolio,
    RandomMiqp,
}

impl From<Family> for BenchFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::MpcCondensed => BenchFamily::MpcCondensed,
            Family::MpcSparse => BenchFamily::MpcSparse,
            Family::Portfolio => BenchFamily::Portfolio,
            Family::RandomMiqp => BenchFamily::RandomMiqp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Sparse,
    Condensed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Subsolver {
    Ipm,
    Admm,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Correction {
    Simple,
    Opt,
}

#[derive(Args)]
struct FlagArgs {
    #[arg(long, value_enum, default_value_t = Subsolver::Ipm)]
    subsolver: Subsolver,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    early_termination: OnOff,
    #[arg(long, value_enum, default_value_t = Correction::Opt)]
    correction: Correction,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// ADMM iterations between termination and early-termination checks.
    #[arg(long, default_value_t = 25)]
    check_interval: usize,
    #[arg(long)]
    warm_start: bool,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FlagArgs {
    fn to_flags(&self) -> SolveFlags {
        SolveFlags {
            subsolver: match self.subsolver {
                Subsolver::Ipm => SubsolverKind::Ipm,
                Subsolver::Admm => SubsolverKind::Admm,
            },
            early_termination: matches!(self.early_termination, OnOff::On),
            correction: match self.correction {
                Correction::Simple => CorrectionMethod::Simple,
                Correction::Opt => CorrectionMethod::OptimizationBased,
            },
            eta: self.eta,
            gamma: self.gamma,
            check_interval: self.check_interval,
            warm_start: self.warm_start,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SizeArgs {
    #[arg(long, default_value_t = 4)]
    n_x: usize,
    #[arg(long, default_value_t = 2)]
    n_u: usize,
    #[arg(long, default_value_t = 4)]
    horizon: usize,
    #[arg(long, default_value_t = 10)]
    assets: usize,
    #[arg(long, default_value_t = 3)]
    sectors: usize,
    /// Return samples used to estimate portfolio statistics.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    n_int: usize,
}

impl SizeArgs {
    fn to_sizes(&self) -> FamilySizes {
        FamilySizes {
            mpc_n_x: self.n_x,
            mpc_n_u: self.n_u,
            mpc_horizon: self.horizon,
            portfolio_assets: self.assets,
            portfolio_sectors: self.sectors,
            portfolio_samples: self.samples,
            random_n: self.n,
            random_n_int: self.n_int,
        }
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { path, flags } => {
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => return fail(format!("{}: {e}", path.display())),
            };
            let micp = match from_json_str(&text) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match harness::run(&id, &micp, &flags.to_flags()) {
                Ok((rec, res)) => {
                    println!("{}", serde_json::to_string_pretty(&rec).expect("record serializes"));
                    ExitCode::from(harness::exit_code(res.status) as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::Bench { family, instances, sizes, flags, summary } => {
            let pairs = match harness::bench(family.into(), instances, &sizes.to_sizes(), &flags.to_flags()) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let stdout = io::stdout();
            if let Err(e) = harness::write_csv(&pairs, stdout.lock()) {
                return fail(e);
            }
            if summary {
                for p in &pairs {
                    eprintln!("{} reduction {:.4}", p.on.instance, p.reduction_ratio());
                }
            }
            ExitCode::SUCCESS
        }
        Command::Generate { family, seed, sizes, out } => {
            let (_, micp) = match harness::family_instance(family.into(), &sizes.to_sizes(), seed, 0) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let json = match to_json_string(&micp) {
                Ok(j) => j,
                Err(e) => return fail(e),
            };
            let written = match out {
                Some(p) => fs::write(p, json),
                None => writeln!(io::stdout(), "{json}"),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::MpcLoop { config, intervals, sizes, form, flags } => {
            let flags = flags.to_flags();
            let form = match form {
                Form::Sparse => MpcForm::Sparse,
                Form::Condensed => MpcForm::Condensed,
            };
            let cfg = match config {
                Some(p) => {
                    let parsed = fs::read_to_string(&p)
                        .map_err(|e| e.to_string())
                        .and_then(|t| serde_json::from_str::<MpcConfig>(&t).map_err(|e| e.to_string()));
                    match parsed {
                        Ok(c) => c,
                        Err(e) => return fail(format!("{}: {e}", p.display())),
                    }
                }
                None => MpcConfig::synthetic(sizes.n_x, sizes.n_u, sizes.horizon, flags.seed).with_form(form),
            };
            let out = match harness::mpc_loop(&cfg, intervals, &flags) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            for r in &out.records {
                println!("{}", serde_json::to_string(r).expect("record serializes"));
            }
            match out.aborted {
                Some(msg) => {
                    println!("{}", serde_json::json!({ "aborted": msg }));
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
    }
}
