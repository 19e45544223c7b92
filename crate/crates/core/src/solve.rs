//! End-to-end drivers: reduce, solve, and fill in residuals, feedback,
//! stabilizing certificate and rate figures.

use crate::diagnostics::{
    certify_stabilizing, rate_report, rho_f_star_continuous, scare_residual, sdare_residual,
    SolveReport, Stabilizing,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    closed_loop_op_discrete, feedback_scare, feedback_sdare, reduce_scare, reduce_sdare, Instance,
    Kind, ScareInstance, SdareInstance,
};
use crate::scare::solve_scare;
use crate::sdare::{solve_gram, DEFAULT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveMethod {
    #[default]
    FixedPoint,
    Doubling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
    /// Row cap for doubling iterates.
    pub cap: usize,
    /// Fixed Cayley parameter; `None` uses the candidate ladder.
    pub gamma: Option<f64>,
    pub seed: u64,
    pub gamma_attempts: usize,
    /// Largest SCARE residual accepted before trying another `γ`.
    pub accept_residual: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::FixedPoint,
            tol: 1e-12,
            max_iter: 10_000,
            cap: DEFAULT_CAP,
            gamma: None,
            seed: 0,
            gamma_attempts: 8,
            accept_residual: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Matrix,
    /// Feedback `F_X ∈ ℝ^{m×n}`.
    pub f: Matrix,
    pub report: SolveReport,
}

fn refresh_rate(report: &mut SolveReport) {
    if let Some(bound) = report.rate_bound {
        if let Ok((rate, _)) = rate_report(&report.iterates, bound) {
            report.rate_empirical = Some(rate);
        }
    }
}

fn attach_original(report: &mut SolveReport, residual: Result<f64>) {
    report.residual_original = residual.ok();
}

pub fn solve_sdare_instance(inst: &SdareInstance, opts: &SolveOptions) -> Result<Solution> {
    let std = reduce_sdare(inst)?;
    let doubling = opts.method == SolveMethod::Doubling;
    let (x, mut report) = match solve_gram(&std.gram(), doubling, opts.tol, opts.max_iter, opts.cap) {
        Ok(v) => v,
        Err(Error::NoConvergence { iterations, mut last }) => {
            attach_original(&mut last.1, sdare_residual(inst, &last.0));
            return Err(Error::NoConvergence { iterations, last });
        }
        Err(e) => return Err(e),
    };
    attach_original(&mut report, sdare_residual(inst, &x));
    let f = feedback_sdare(inst, &x)?;
    let (ok, rho) = certify_stabilizing(inst, &x, Kind::Discrete)?;
    report.stabilizing = if ok { Stabilizing::Yes } else { Stabilizing::No };
    report.stability_value = Some(rho);
    report.rate_bound = Some(closed_loop_op_discrete(inst, &f)?.spectral_radius());
    refresh_rate(&mut report);
    Ok(Solution { x, f, report })
}

pub fn solve_scare_instance(inst: &ScareInstance, opts: &SolveOptions) -> Result<Solution> {
    let std = reduce_scare(inst)?;
    let (x, mut report) = match solve_scare(&std, opts) {
        Ok(v) => v,
        Err(Error::NoConvergence { iterations, mut last }) => {
            attach_original(&mut last.1, scare_residual(inst, &last.0));
            return Err(Error::NoConvergence { iterations, last });
        }
        Err(e) => return Err(e),
    };
    attach_original(&mut report, scare_residual(inst, &x));
    let f = feedback_scare(inst, &x)?;
    let (ok, abscissa) = certify_stabilizing(inst, &x, Kind::Continuous)?;
    report.stabilizing = if ok { Stabilizing::Yes } else { Stabilizing::No };
    report.stability_value = Some(abscissa);
    if let Some(gamma) = report.gamma {
        report.rate_bound = rho_f_star_continuous(inst, &f, gamma).ok();
    }
    refresh_rate(&mut report);
    Ok(Solution { x, f, report })
}

pub fn solve_instance(inst: &Instance, opts: &SolveOptions) -> Result<Solution> {
    match inst {
        Instance::Sdare(i) => solve_sdare_instance(i, opts),
        Instance::Scare(i) => solve_scare_instance(i, opts),
    }
}
