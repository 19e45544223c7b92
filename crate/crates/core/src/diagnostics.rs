//! Residuals, stabilizing certificates and convergence-rate reporting.
//!
//! All norms are Frobenius. Residuals are normalized by `1 + ‖X‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    check_symmetric_input, closed_loop_op_continuous, closed_loop_op_discrete, feedback_scare,
    feedback_sdare, Kind, ProblemData, ScareInstance, SdareInstance,
};
use crate::stp::kron;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fixed_point")]
    FixedPoint,
    #[serde(rename = "doubling")]
    Doubling,
    #[serde(rename = "cayley+fixed_point")]
    CayleyFixedPoint,
    #[serde(rename = "cayley+doubling")]
    CayleyDoubling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stabilizing {
    Yes,
    No,
    NotChecked,
}

/// One recorded step: iterate index `t`, `‖X_t − X_{t−1}‖` and the smallest
/// eigenvalue of `X_t − X_{t−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub t: usize,
    pub increment: f64,
    pub min_increment_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    pub doubling_steps: usize,
    pub residual_original: Option<f64>,
    pub residual_standard: f64,
    /// Residual of the bridged SDARE (continuous problems only).
    pub residual_bridged: Option<f64>,
    /// `None` when the history is too short for an estimate.
    pub rate_empirical: Option<f64>,
    pub rate_bound: Option<f64>,
    pub stabilizing: Stabilizing,
    /// Closed-loop spectral radius (discrete) or abscissa (continuous).
    pub stability_value: Option<f64>,
    pub cap_limited: bool,
    pub gamma: Option<f64>,
    /// Smallest eigenvalue over all increments `X_{t+1} − X_t`.
    pub min_increment_eig: Option<f64>,
    /// Largest asymmetry of doubling iterates before symmetrization.
    pub max_sym_defect: f64,
    #[serde(skip)]
    pub history: Vec<HistoryPoint>,
    #[serde(skip)]
    pub iterates: Vec<(usize, Matrix)>,
}

impl SolveReport {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            iterations: 0,
            doubling_steps: 0,
            residual_original: None,
            residual_standard: 0.0,
            residual_bridged: None,
            rate_empirical: None,
            rate_bound: None,
            stabilizing: Stabilizing::NotChecked,
            stability_value: None,
            cap_limited: false,
            gamma: None,
            min_increment_eig: None,
            max_sym_defect: 0.0,
            history: Vec::new(),
            iterates: Vec::new(),
        }
    }

    pub(crate) fn note_increment(&mut self, eig: f64) {
        self.min_increment_eig = Some(self.min_increment_eig.map_or(eig, |e| e.min(eig)));
    }
}

fn normalized(m: &Matrix, x: &Matrix) -> f64 {
    m.frobenius_norm() / (1.0 + x.frobenius_norm())
}

/// Right-hand side of the discrete equation minus `X`.
pub fn sdare_residual_matrix(inst: &SdareInstance, x: &Matrix) -> Result<Matrix> {
    let x = check_symmetric_input(inst, x)?;
    let mut rhs = inst.q.clone();
    let mut s = inst.r.clone();
    let mut nmat = inst.l.clone();
    for (a, b) in inst.a.iter().zip(&inst.b) {
        let xa = x.matmul(a);
        let xb = x.matmul(b);
        rhs += &a.transpose().matmul(&xa);
        s += &b.transpose().matmul(&xb);
        nmat += &a.transpose().matmul(&xb);
    }
    let corr = nmat.matmul(&s.solve(&nmat.transpose())?);
    Ok(&(&rhs - &corr) - &x)
}

/// `‖RHS(X) − X‖_F / (1 + ‖X‖_F)` for the discrete equation.
pub fn sdare_residual(inst: &SdareInstance, x: &Matrix) -> Result<f64> {
    Ok(normalized(&sdare_residual_matrix(inst, x)?, x))
}

/// Left-hand side of the continuous equation.
pub fn scare_residual_matrix(inst: &ScareInstance, x: &Matrix) -> Result<Matrix> {
    let x = check_symmetric_input(inst, x)?;
    let a0 = &inst.a[0];
    let mut lhs = &(&a0.transpose().matmul(&x) + &x.matmul(a0)) + &inst.q;
    let mut s = inst.r.clone();
    let mut nmat = &x.matmul(&inst.b[0]) + &inst.l;
    for (a, b) in inst.a.iter().zip(&inst.b).skip(1) {
        let xb = x.matmul(b);
        lhs += &a.transpose().matmul(&x.matmul(a));
        s += &b.transpose().matmul(&xb);
        nmat += &a.transpose().matmul(&xb);
    }
    let corr = nmat.matmul(&s.solve(&nmat.transpose())?);
    Ok(&lhs - &corr)
}

/// `‖LHS(X)‖_F / (1 + ‖X‖_F)` for the continuous equation.
pub fn scare_residual(inst: &ScareInstance, x: &Matrix) -> Result<f64> {
    Ok(normalized(&scare_residual_matrix(inst, x)?, x))
}

/// Builds `F_X` with the matching feedback formula and checks the closed
/// loop: `(ρ < 1, ρ)` for discrete, `(max Re λ < 0, max Re λ)` for continuous.
pub fn certify_stabilizing(data: &ProblemData, x: &Matrix, kind: Kind) -> Result<(bool, f64)> {
    match kind {
        Kind::Discrete => {
            let inst = SdareInstance::new(data.clone())?;
            let f = feedback_sdare(&inst, x)?;
            let rho = closed_loop_op_discrete(&inst, &f)?.spectral_radius();
            Ok((rho < 1.0, rho))
        }
        Kind::Continuous => {
            let inst = ScareInstance::new(data.clone())?;
            let f = feedback_scare(&inst, x)?;
            let abscissa = closed_loop_op_continuous(&inst, &f)?.spectral_abscissa();
            Ok((abscissa < 0.0, abscissa))
        }
    }
}

/// Points below this relative error are dominated by round-off.
pub const RATE_ERROR_FLOOR: f64 = 1e-8;
/// Number of tail points used by [`rate_report`].
pub const RATE_WINDOW: usize = 10;
/// History length needed by [`rate_report`].
pub const RATE_MIN_POINTS: usize = 5;

/// Empirical R-linear rate from `(t, X_t)` pairs, paired with `rate_bound`.
///
/// With `e_t = ‖X_t − X_final‖/‖X_final‖`, only points with
/// `e_t ≥ 1e-8` are used. The rate is the per-step geometric mean
/// `(e_end/e_start)^{1/(t_end − t_start)}` over the last ten of them, or
/// `e_t^{1/t}` when a single point remains. A run that reproduces its final
/// iterate exactly has rate 0 regardless of length.
pub fn rate_report(iterates: &[(usize, Matrix)], rate_bound: f64) -> Result<(f64, f64)> {
    let Some((_, last)) = iterates.last() else {
        return Err(Error::InsufficientHistory {
            have: 0,
            need: RATE_MIN_POINTS,
        });
    };
    let scale = last.frobenius_norm();
    let errors: Vec<(usize, f64)> = iterates
        .iter()
        .map(|(t, x)| {
            let d = (x - last).frobenius_norm();
            (*t, if scale > 0.0 { d / scale } else { d })
        })
        .collect();
    let exact = iterates.len() >= 2 && iterates[iterates.len() - 2].1 == *last;
    if exact && errors.iter().all(|&(_, e)| e == 0.0 || e.is_nan()) {
        return Ok((0.0, rate_bound));
    }
    if iterates.len() < RATE_MIN_POINTS {
        if exact {
            return Ok((0.0, rate_bound));
        }
        return Err(Error::InsufficientHistory {
            have: iterates.len(),
            need: RATE_MIN_POINTS,
        });
    }
    let valid: Vec<(usize, f64)> = errors
        .into_iter()
        .filter(|&(_, e)| e >= RATE_ERROR_FLOOR)
        .collect();
    let tail = &valid[valid.len().saturating_sub(RATE_WINDOW)..];
    let rate = match tail {
        [] => 0.0,
        [(t, e)] => {
            if *t == 0 {
                0.0
            } else {
                e.powf(1.0 / *t as f64)
            }
        }
        [(t0, e0), .., (t1, e1)] => (e1 / e0).powf(1.0 / (t1 - t0) as f64),
    };
    Ok((rate, rate_bound))
}

/// `ρ([(Ā+γI)⊗(Ā+γI) + 2γ Σ_{i≥1} (Aᵢ+BᵢF)⊗(Aᵢ+BᵢF)]·((Ā−γI)⁻¹⊗(Ā−γI)⁻¹))`
/// with `Ā = A_0 + B_0F`.
pub fn rho_f_star_continuous(inst: &ScareInstance, f: &Matrix, gamma: f64) -> Result<f64> {
    if f.shape() != (inst.m(), inst.n()) {
        return Err(Error::Shape(format!(
            "feedback is {}x{}, expected {}x{}",
            f.rows(),
            f.cols(),
            inst.m(),
            inst.n()
        )));
    }
    let n = inst.n();
    let id = Matrix::identity(n);
    let drift = &inst.a[0] + &inst.b[0].matmul(f);
    let plus = &drift + &id.scale(gamma);
    let minus_inv = (&drift - &id.scale(gamma)).inverse()?;
    let mut num = kron(&plus, &plus);
    for (a, b) in inst.a.iter().zip(&inst.b).skip(1) {
        let t = a + &b.matmul(f);
        num += &kron(&t, &t).scale(2.0 * gamma);
    }
    Ok(num.matmul(&kron(&minus_inv, &minus_inv)).spectral_radius())
}
