//! Embedded property suite behind `riccati selftest`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::io::{gen_instance, InstanceKind};
use crate::matrix::Matrix;
use crate::model::{Instance, ProblemData, ScareInstance, SdareInstance, StandardSdare};
use crate::sdare::{
    doubling_oracle, doubling_step, fp_step, symplectic_defect, toeplitz_iterate, DoublingState, DEFAULT_CAP,
};
use crate::solve::{solve_instance, SolveMethod, SolveOptions};
use crate::stp::{kron, ltimes, mixed_shuffle_perm, shuffle_perm};
use crate::Stabilizing;

pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(&mut ChaCha8Rng, bool) -> Result<(bool, String)>;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// A random standard triple with `‖A‖` kept moderate.
pub fn random_standard(rng: &mut ChaCha8Rng, n: usize, m: usize, r: usize) -> StandardSdare {
    let a = uniform(rng, r * n, n).scale(0.6 / (r as f64).sqrt());
    let b = uniform(rng, r * n, m);
    let c = uniform(rng, n, n);
    StandardSdare::from_parts(a, b, c).expect("random triple has standard shapes")
}

fn scalar(a: &[f64], b: &[f64]) -> ProblemData {
    ProblemData {
        a: a.iter().map(|&v| Matrix::scalar(v)).collect(),
        b: b.iter().map(|&v| Matrix::scalar(v)).collect(),
        q: Matrix::scalar(1.0),
        l: Matrix::scalar(0.0),
        r: Matrix::scalar(1.0),
    }
}

fn check_ltimes_definition(rng: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (m, n, k) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4));
        let a = uniform(rng, m, n);
        let b = uniform(rng, n * k, 2);
        let by_def = kron(&a, &Matrix::identity(k)).matmul(&b);
        worst = worst.max((&ltimes(&a, &b)? - &by_def).max_abs());
    }
    Ok((worst <= 1e-14, format!("max defect {worst:.1e}")))
}

fn check_associativity(rng: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = uniform(rng, 2, 3);
        let b = uniform(rng, 6, 2);
        let c = uniform(rng, 4, 3);
        let lhs = ltimes(&ltimes(&a, &b)?, &c)?;
        let rhs = ltimes(&a, &ltimes(&b, &c)?)?;
        worst = worst.max((&lhs - &rhs).max_abs());
    }
    Ok((worst <= 1e-12, format!("max defect {worst:.1e}")))
}

fn check_shuffles(rng: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (n, r) in [(2, 2), (3, 2), (2, 3)] {
        let x = uniform(rng, n, n);
        let p = shuffle_perm(n, r);
        let lhs = p.transpose().matmul(&kron(&x, &Matrix::identity(r))).matmul(&p);
        worst = worst.max((&lhs - &kron(&Matrix::identity(r), &x)).max_abs());
        let pt = mixed_shuffle_perm(n, r)?;
        let lhs = pt.transpose().matmul(&kron(&x, &Matrix::identity(r))).matmul(&pt);
        let mut rhs = Matrix::zeros(n * r, n * r);
        rhs.set_block(0, 0, &x);
        rhs.set_block(n, n, &kron(&x, &Matrix::identity(r - 1)));
        worst = worst.max((&lhs - &rhs).max_abs());
    }
    Ok((worst == 0.0, format!("max defect {worst:.1e}")))
}

fn check_golden_ratio(_: &mut ChaCha8Rng, fault: bool) -> Result<(bool, String)> {
    let inst = Instance::Sdare(SdareInstance::new(scalar(&[1.0], &[1.0]))?);
    let target = if fault { 1.6 } else { (1.0 + 5f64.sqrt()) / 2.0 };
    let fp = solve_instance(&inst, &SolveOptions::default())?;
    let sda = solve_instance(
        &inst,
        &SolveOptions {
            method: SolveMethod::Doubling,
            ..Default::default()
        },
    )?;
    let err = (fp.x[(0, 0)] - target).abs().max((sda.x[(0, 0)] - target).abs());
    Ok((
        err <= 1e-12 && fp.report.iterations <= 80 && sda.report.iterations <= 6,
        format!(
            "error {err:.1e}, {} fixed-point / {} doubling steps",
            fp.report.iterations, sda.report.iterations
        ),
    ))
}

fn check_toeplitz(rng: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let std = random_standard(rng, 2, 2, 2);
        let gram = std.gram();
        let mut x = Matrix::zeros(2, 2);
        for t in 1..=5 {
            x = fp_step(&gram, &x)?;
            let xt = toeplitz_iterate(&std, t, DEFAULT_CAP)?;
            worst = worst.max((&xt - &x).frobenius_norm() / (1.0 + x.frobenius_norm()));
        }
    }
    Ok((worst <= 1e-10, format!("max relative defect {worst:.1e}")))
}

fn check_doubling(rng: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut sym = 0.0f64;
    for _ in 0..5 {
        let std = random_standard(rng, 2, 1, 2);
        let gram = std.gram();
        let mut state = DoublingState::initial(&gram);
        let mut x = fp_step(&gram, &Matrix::zeros(2, 2))?;
        let mut t = 1;
        sym = sym.max(symplectic_defect(&state));
        for k in 1..=2 {
            state = doubling_step(&state, DEFAULT_CAP)?;
            sym = sym.max(symplectic_defect(&state));
            while t < 1 << k {
                x = fp_step(&gram, &x)?;
                t += 1;
            }
            let scale = 1.0 + x.frobenius_norm();
            worst = worst.max((&state.h - &x).frobenius_norm() / scale);
            let o = doubling_oracle(&std, k, DEFAULT_CAP)?;
            let d = (&o.a - &state.a)
                .frobenius_norm()
                .max((&o.g - &state.g).frobenius_norm())
                .max((&o.h - &state.h).frobenius_norm());
            worst = worst.max(d / (1.0 + state.g.frobenius_norm()));
        }
    }
    Ok((
        worst <= 1e-10 && sym <= 1e-10,
        format!("oracle defect {worst:.1e}, symplectic defect {sym:.1e}"),
    ))
}

fn check_scalar_scare(_: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let care = Instance::Scare(ScareInstance::new(scalar(&[-1.0], &[1.0]))?);
    let x1 = solve_instance(&care, &SolveOptions::default())?.x[(0, 0)];
    let noisy = Instance::Scare(ScareInstance::new(scalar(&[-2.0, 0.5], &[1.0, 0.0]))?);
    let x2 = solve_instance(&noisy, &SolveOptions::default())?.x[(0, 0)];
    let e1 = (x1 - (2f64.sqrt() - 1.0)).abs();
    let e2 = (x2 - 0.25).abs();
    Ok((e1 <= 1e-10 && e2 <= 1e-8, format!("errors {e1:.1e}, {e2:.1e}")))
}

fn check_generated(_: &mut ChaCha8Rng, _: bool) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut all_stable = true;
    for seed in 0..4 {
        for kind in [InstanceKind::Sdare, InstanceKind::Scare] {
            for method in [SolveMethod::FixedPoint, SolveMethod::Doubling] {
                let inst = gen_instance(kind, 3, 2, 2, seed)?.to_instance()?;
                let sol = solve_instance(
                    &inst,
                    &SolveOptions {
                        method,
                        ..Default::default()
                    },
                )?;
                worst = worst.max(sol.report.residual_original.unwrap_or(f64::INFINITY));
                all_stable &= sol.report.stabilizing == Stabilizing::Yes;
            }
        }
    }
    Ok((
        worst <= 1e-9 && all_stable,
        format!("max residual {worst:.1e}, stabilizing: {all_stable}"),
    ))
}

const CHECKS: &[(&str, bool, Check)] = &[
    ("ltimes matches Kronecker definition", true, check_ltimes_definition),
    ("ltimes associativity", true, check_associativity),
    ("shuffle identities", true, check_shuffles),
    ("golden-ratio scalar SDARE", true, check_golden_ratio),
    ("scalar SCARE bridge", true, check_scalar_scare),
    ("Toeplitz closed form vs fixed point", false, check_toeplitz),
    ("doubling vs fixed point, oracle, symplectic", false, check_doubling),
    ("generated instances end to end", false, check_generated),
];

pub fn run_checks(quick: bool, inject_fault: bool) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    CHECKS
        .iter()
        .filter(|(_, in_quick, _)| !quick || *in_quick)
        .map(|(name, _, check)| {
            let (passed, detail) = match check(&mut rng, inject_fault) {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}

/// Prints the pass/fail table; exit code 0 iff every check passes, else 2.
pub fn cmd_selftest(quick: bool, inject_fault: bool) -> i32 {
    let start = Instant::now();
    let outcomes = run_checks(quick, inject_fault);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        println!(
            "{}  {:width$}  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} checks, {} failed, {:.2} s",
        outcomes.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        0
    } else {
        2
    }
}
