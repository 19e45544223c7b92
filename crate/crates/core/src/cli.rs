//! Command-line front end. Exit codes: 0 success, 1 usage or parse error,
//! 2 verification or self-test failure, 3 no convergence or solver breakdown.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info, warn, LevelFilter};

use crate::diagnostics::{certify_stabilizing, scare_residual, sdare_residual, Stabilizing};
use crate::error::Error;
use crate::io::{gen_instance, load_instance_str, save_instance, InstanceKind, ResultFile};
use crate::model::{feedback_scare, feedback_sdare, Instance};
use crate::solve::{solve_instance, SolveMethod, SolveOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "riccati", version, about = "Stochastic Riccati equation solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance file and write a result file.
    Solve(SolveArgs),
    /// Generate a seeded well-posed instance file.
    Gen(GenArgs),
    /// Run the embedded property suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Fixed-point iteration.
    Fp,
    /// Doubling with fixed-point refinement past the row cap.
    Sda,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "fp")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = crate::sdare::DEFAULT_CAP)]
    cap: usize,
    /// Cayley parameter for continuous instances.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Recompute the original residual and the stabilizing certificate.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1e-9)]
    verify_tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Sdare,
    Scare,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Fast subset only.
    #[arg(long)]
    quick: bool,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Maps `RICCATI_LOG` (`quiet`, `info`, `debug`) to a log level; warnings by default.
pub fn init_logging() {
    let level = match std::env::var("RICCATI_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("info") => LevelFilter::Info,
        Ok("debug") => LevelFilter::Debug,
        _ => LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Selftest(a) => crate::selftest::cmd_selftest(a.quick, a.inject_fault),
    }
}

fn cmd_gen(args: &GenArgs) -> i32 {
    let kind = match args.kind {
        KindArg::Sdare => InstanceKind::Sdare,
        KindArg::Scare => InstanceKind::Scare,
    };
    match gen_instance(kind, args.n, args.m, args.r, args.seed).and_then(|f| save_instance(&args.out, &f)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn feedback_of(inst: &Instance, x: &crate::matrix::Matrix) -> Option<crate::matrix::Matrix> {
    match inst {
        Instance::Sdare(i) => feedback_sdare(i, x).ok(),
        Instance::Scare(i) => feedback_scare(i, x).ok(),
    }
}

fn cmd_solve(args: &SolveArgs) -> i32 {
    let bytes = match fs::read(&args.input) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return EXIT_USAGE;
        }
    };
    let inst = match std::str::from_utf8(&bytes)
        .map_err(|e| Error::parse("file", e.to_string()))
        .and_then(load_instance_str)
    {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let kind = match inst {
        Instance::Sdare(_) => InstanceKind::Sdare,
        Instance::Scare(_) => InstanceKind::Scare,
    };
    let opts = SolveOptions {
        method: match args.method {
            MethodArg::Fp => SolveMethod::FixedPoint,
            MethodArg::Sda => SolveMethod::Doubling,
        },
        tol: args.tol,
        max_iter: args.max_iter,
        cap: args.cap,
        gamma: args.gamma,
        seed: args.seed,
        accept_residual: args.verify_tol,
        ..SolveOptions::default()
    };
    let sol = match solve_instance(&inst, &opts) {
        Ok(s) => s,
        Err(Error::NoConvergence { iterations, last }) => {
            let (x, report) = *last;
            eprintln!("error: no convergence after {iterations} iterations; writing partial result");
            let f = feedback_of(&inst, &x);
            let res = ResultFile::new(kind, false, &x, f.as_ref(), report, &bytes);
            if let Err(e) = res.save(&args.out) {
                eprintln!("error: cannot write {}: {e}", args.out.display());
            }
            return EXIT_NO_CONVERGENCE;
        }
        Err(e) => {
            eprintln!("error: solver failed: {e}");
            return EXIT_NO_CONVERGENCE;
        }
    };
    info!(
        "solved in {} iterations, residual {:?}",
        sol.report.iterations, sol.report.residual_original
    );
    let res = ResultFile::new(kind, true, &sol.x, Some(&sol.f), sol.report.clone(), &bytes);
    if let Err(e) = res.save(&args.out) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return EXIT_USAGE;
    }
    if args.verify {
        return verify(&inst, &sol.x, args.verify_tol);
    }
    if sol.report.stabilizing == Stabilizing::No {
        warn!("solution is not stabilizing");
    }
    EXIT_OK
}

fn verify(inst: &Instance, x: &crate::matrix::Matrix, tol: f64) -> i32 {
    let (residual, kind) = match inst {
        Instance::Sdare(i) => (sdare_residual(i, x), crate::model::Kind::Discrete),
        Instance::Scare(i) => (scare_residual(i, x), crate::model::Kind::Continuous),
    };
    let residual = match residual {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verify: residual failed: {e}");
            return EXIT_VERIFY;
        }
    };
    let cert = certify_stabilizing(inst.data(), x, kind);
    let mut ok = true;
    if residual.is_nan() || residual > tol {
        eprintln!("verify: residual {residual:e} exceeds {tol:e}");
        ok = false;
    }
    match cert {
        Ok((true, _)) => {}
        Ok((false, v)) => {
            eprintln!("verify: closed loop not stable (value {v:e})");
            ok = false;
        }
        Err(e) => {
            eprintln!("verify: certificate failed: {e}");
            ok = false;
        }
    }
    if ok {
        eprintln!("verify: residual {residual:e}, stabilizing");
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
