//! Cayley bridge from the standard SCARE to an equivalent SDARE.
//!
//! For `γ > 0` with `A_γ = A − γI` nonsingular and `Z = C A_γ⁻¹ B`:
//!
//! ```text
//! E = Π̃ [A_γ + 2γI + BZᵀC; √(2γ)(Â + B̂ZᵀC)] (I + A_γ⁻¹BZᵀC)⁻¹ A_γ⁻¹
//! H = 2γ A_γ⁻ᵀ Cᵀ (I + ZZᵀ)⁻¹ C A_γ⁻¹
//! G = Π̃ [√(2γ) A_γ⁻¹B; ÂA_γ⁻¹B − B̂] (I + ZᵀZ)⁻¹ [·]ᵀ Π̃ᵀ
//! ```
//!
//! and the SCARE solution is the stabilizing solution of
//! `X = Eᵀ⋉X⋉(I + G⋉X)⁻¹⋉E + H`.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{StandardSdare, StandardScare};
use crate::sdare::{solve_gram, ssf1_pair, SdareGram};
use crate::solve::{SolveMethod, SolveOptions};
use crate::stp::{ltimes, mixed_shuffle_perm};

/// Smallest admissible `σ_min(A − γI)` relative to `‖A‖_F`.
pub const GAMMA_SIGMA_FLOOR: f64 = 1e-8;
/// Largest admissible condition number of `I + G⋉X` at the solution.
pub const BRIDGE_COND_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct CayleyData {
    pub gamma: f64,
    pub a_gamma: Matrix,
    pub z: Matrix,
    pub e: Matrix,
    pub g: Matrix,
    pub h: Matrix,
    /// `B_γ` with `B_γB_γᵀ = G`.
    pub b_factor: Matrix,
    /// `C_γ` with `C_γᵀC_γ = H`.
    pub c_factor: Matrix,
}

impl CayleyData {
    pub fn gram(&self) -> SdareGram {
        SdareGram::new(self.e.clone(), self.g.clone(), self.h.clone())
            .expect("Cayley data has Gram-form shapes")
    }

    /// The bridged equation as a factored triple `(E, B_γ, C_γ)`.
    pub fn factored(&self) -> StandardSdare {
        StandardSdare::from_parts(self.e.clone(), self.b_factor.clone(), self.c_factor.clone())
            .expect("Cayley factors have standard shapes")
    }
}

/// Residual matrix of the standard SCARE.
pub fn standard_residual_matrix(std: &StandardScare, x: &Matrix) -> Result<Matrix> {
    if x.shape() != (std.n, std.n) {
        return Err(Error::Shape(format!("X is {:?}, expected {}x{}", x.shape(), std.n, std.n)));
    }
    let x = x.symmetric_part();
    let x_ahat = ltimes(&x, &std.ahat)?;
    let x_bhat = ltimes(&x, &std.bhat)?;
    let lin = &(&std.a.transpose().matmul(&x) + &x.matmul(&std.a))
        + &(&std.c.transpose().matmul(&std.c) + &std.ahat.transpose().matmul(&x_ahat));
    let left = &x.matmul(&std.b) + &std.ahat.transpose().matmul(&x_bhat);
    let mid = &std.bhat.transpose().matmul(&x_bhat) + &Matrix::identity(std.m);
    Ok(&lin - &left.matmul(&mid.solve(&left.transpose())?))
}

/// `‖·‖_F / (1 + ‖X‖_F)` of [`standard_residual_matrix`].
pub fn standard_residual(std: &StandardScare, x: &Matrix) -> Result<f64> {
    Ok(standard_residual_matrix(std, x)?.frobenius_norm() / (1.0 + x.frobenius_norm()))
}

pub fn gamma_admissible(std: &StandardScare, gamma: f64) -> bool {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return false;
    }
    let shifted = &std.a - &Matrix::identity(std.n).scale(gamma);
    let smin = shifted.singular_values().last().copied().unwrap_or(0.0);
    smin > 0.0 && smin >= GAMMA_SIGMA_FLOOR * std.a.frobenius_norm()
}

/// Candidate ladder: `1`, `‖A‖_∞ + 1`, then seeded draws from `(0, 2‖A‖_∞ + 2]`.
pub fn gamma_candidates(std: &StandardScare, attempts: usize, seed: u64) -> Vec<f64> {
    let norm = std.a.inf_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = 2.0 * norm + 2.0;
    let mut out: Vec<f64> = Vec::with_capacity(attempts);
    for i in 0..attempts {
        let cand = match i {
            0 => 1.0,
            1 => norm + 1.0,
            _ => hi * (1.0 - rng.random::<f64>()),
        };
        if out.contains(&cand) {
            let redraw = hi * (1.0 - rng.random::<f64>());
            out.push(redraw);
        } else {
            out.push(cand);
        }
    }
    out
}

/// First admissible candidate whose Cayley data can be built.
pub fn select_gamma(std: &StandardScare, attempts: usize, seed: u64) -> Result<f64> {
    gamma_candidates(std, attempts, seed)
        .into_iter()
        .find(|&g| gamma_admissible(std, g) && cayley_ssf1(std, g).is_ok())
        .ok_or(Error::GammaSelectionFailed(attempts))
}

pub fn cayley_ssf1(std: &StandardScare, gamma: f64) -> Result<CayleyData> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Validation(format!("gamma must be positive, got {gamma}")));
    }
    let n = std.n;
    let id = Matrix::identity(n);
    let a_gamma = &std.a - &id.scale(gamma);
    let ag_inv = a_gamma
        .inverse()
        .map_err(|_| Error::Singular(format!("A − γI at γ = {gamma}")))?;
    let ag_inv_b = ag_inv.matmul(&std.b);
    let z = std.c.matmul(&ag_inv_b);
    let zt_c = z.transpose().matmul(&std.c);
    let k = &id + &ag_inv_b.matmul(&zt_c);
    let root = (2.0 * gamma).sqrt();
    let top = &(&a_gamma + &id.scale(2.0 * gamma)) + &std.b.matmul(&zt_c);
    let bottom = (&std.ahat + &std.bhat.matmul(&zt_c)).scale(root);
    let pi_tilde = mixed_shuffle_perm(n, std.r)?;
    let stacked = pi_tilde.matmul(&Matrix::vstack(&[&top, &bottom])?);
    let e = k
        .solve_right(&stacked)
        .map_err(|_| Error::Singular(format!("I + A_γ⁻¹BZᵀC at γ = {gamma}")))?
        .matmul(&ag_inv);

    let izz = &Matrix::identity(std.l) + &z.matmul(&z.transpose());
    let c_factor = izz.sym_inverse_sqrt()?.matmul(&std.c).matmul(&ag_inv).scale(root);
    let h = c_factor.transpose().matmul(&c_factor).symmetric_part();

    let gf = pi_tilde.matmul(&Matrix::vstack(&[
        &ag_inv_b.scale(root),
        &(&std.ahat.matmul(&ag_inv_b) - &std.bhat),
    ])?);
    let izz_t = &Matrix::identity(std.m) + &z.transpose().matmul(&z);
    let b_factor = gf.matmul(&izz_t.sym_inverse_sqrt()?);
    let g = b_factor.matmul(&b_factor.transpose()).symmetric_part();

    Ok(CayleyData {
        gamma,
        a_gamma,
        z,
        e: e.ensure_finite("E_γ")?,
        g: g.ensure_finite("G_γ")?,
        h: h.ensure_finite("H_γ")?,
        b_factor,
        c_factor,
    })
}

/// `Θ_γ = [E 0; −H I]`, `Φ_γ = [I G; 0 Eᵀ]`.
pub fn ssf1_pencil(data: &CayleyData) -> (Matrix, Matrix) {
    ssf1_pair(&data.e, &data.g, &data.h).expect("Cayley blocks are conformal")
}

/// Solves the standard SCARE through the bridge, retrying other `γ` when the
/// bridged solve breaks down, `I + G⋉X` is badly conditioned, or the SCARE
/// residual exceeds `opts.accept_residual`.
pub fn solve_scare(std: &StandardScare, opts: &SolveOptions) -> Result<(Matrix, SolveReport)> {
    let candidates = match opts.gamma {
        Some(g) => vec![g],
        None => gamma_candidates(std, opts.gamma_attempts, opts.seed),
    };
    let doubling = opts.method == SolveMethod::Doubling;
    let mut best: Option<(Matrix, SolveReport)> = None;
    let mut last_err: Option<Error> = None;
    for gamma in candidates {
        if !gamma_admissible(std, gamma) {
            debug!("gamma {gamma} rejected: A − γI too close to singular");
            continue;
        }
        let data = match cayley_ssf1(std, gamma) {
            Ok(d) => d,
            Err(e) => {
                debug!("gamma {gamma} rejected: {e}");
                last_err = Some(e);
                continue;
            }
        };
        let gram = data.gram();
        let tag = |rep: &mut SolveReport| {
            rep.method = if doubling { Method::CayleyDoubling } else { Method::CayleyFixedPoint };
            rep.gamma = Some(gamma);
            rep.residual_bridged = Some(rep.residual_standard);
        };
        let (x, mut rep) = match solve_gram(&gram, doubling, opts.tol, opts.max_iter, opts.cap) {
            Ok(v) => v,
            Err(Error::NoConvergence { iterations, mut last }) => {
                tag(&mut last.1);
                last.1.residual_standard = standard_residual(std, &last.0).unwrap_or(f64::NAN);
                debug!("gamma {gamma}: no convergence after {iterations} iterations");
                last_err = Some(Error::NoConvergence { iterations, last });
                continue;
            }
            Err(e) => {
                debug!("gamma {gamma}: bridged solve failed: {e}");
                last_err = Some(e);
                continue;
            }
        };
        tag(&mut rep);
        rep.residual_standard = standard_residual(std, &x)?;
        let cond = (&Matrix::identity(gram.a.rows()) + &ltimes(&gram.g, &x)?).condition_number();
        if cond <= BRIDGE_COND_LIMIT && rep.residual_standard <= opts.accept_residual {
            return Ok((x, rep));
        }
        debug!(
            "gamma {gamma}: cond(I + G⋉X) = {cond:e}, residual {:e}; retrying",
            rep.residual_standard
        );
        if best
            .as_ref()
            .is_none_or(|(_, b)| rep.residual_standard < b.residual_standard)
        {
            best = Some((x, rep));
        }
    }
    if let Some((x, rep)) = best {
        warn!(
            "no gamma met the acceptance test; returning the best solution (residual {:e})",
            rep.residual_standard
        );
        return Ok((x, rep));
    }
    Err(last_err.unwrap_or(Error::GammaSelectionFailed(opts.gamma_attempts)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_std(a: f64, b: f64, ahat: &[f64], bhat: &[f64], c: f64) -> StandardScare {
        StandardScare::from_parts(
            Matrix::scalar(a),
            Matrix::scalar(b),
            Matrix::column(ahat),
            Matrix::column(bhat),
            Matrix::scalar(c),
        )
        .unwrap()
    }

    #[test]
    fn scalar_cayley_data() {
        let std = scalar_std(-1.0, 1.0, &[], &[], 1.0);
        let d = cayley_ssf1(&std, 1.0).unwrap();
        assert!((d.a_gamma[(0, 0)] + 2.0).abs() < 1e-15);
        assert!((d.z[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((d.e[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((d.h[(0, 0)] - 0.4).abs() < 1e-15);
        assert!((d.g[(0, 0)] - 0.4).abs() < 1e-15);
        let (theta, phi) = ssf1_pencil(&d);
        assert_eq!(theta.shape(), (2, 2));
        assert!((theta[(1, 0)] + 0.4).abs() < 1e-15);
        assert!((phi[(0, 1)] - 0.4).abs() < 1e-15);
        assert!((phi[(1, 1)] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cayley_data() {
        let std = scalar_std(-1.0, 1.0, &[0.5], &[0.0], 0.0);
        let std = StandardScare::from_parts(
            std.a.clone(),
            std.b.clone(),
            std.ahat.clone(),
            std.bhat.clone(),
            Matrix::zeros(0, 1),
        )
        .unwrap();
        let d = cayley_ssf1(&std, 1.0).unwrap();
        assert_eq!(d.h, Matrix::scalar(0.0));
        assert_eq!(d.z.shape(), (0, 1));
        // E = Π̃[A_γ + 2γI; √(2γ)Â]A_γ⁻¹ with A_γ = −2.
        assert!((d.e[(0, 0)] - (-2.0 + 2.0) / -2.0).abs() < 1e-15);
        assert!((d.e[(1, 0)] - 2f64.sqrt() * 0.5 / -2.0).abs() < 1e-15);

        let std = scalar_std(-1.0, 0.0, &[0.3], &[0.0], 1.0);
        let d = cayley_ssf1(&std, 1.0).unwrap();
        assert_eq!(d.g, Matrix::zeros(2, 2));
    }

    #[test]
    fn gamma_ladder() {
        let std = StandardScare::from_parts(
            Matrix::identity(2).scale(-1.0),
            Matrix::column(&[1.0, 0.0]),
            Matrix::zeros(0, 2),
            Matrix::zeros(0, 1),
            Matrix::identity(2),
        )
        .unwrap();
        assert_eq!(select_gamma(&std, 5, 0).unwrap(), 1.0);
        let std = StandardScare::from_parts(
            Matrix::identity(2),
            Matrix::column(&[1.0, 0.0]),
            Matrix::zeros(0, 2),
            Matrix::zeros(0, 1),
            Matrix::identity(2),
        )
        .unwrap();
        assert!(!gamma_admissible(&std, 1.0));
        assert_eq!(select_gamma(&std, 5, 0).unwrap(), 2.0);
        assert!(matches!(select_gamma(&std, 1, 0), Err(Error::GammaSelectionFailed(1))));
        let c = gamma_candidates(&std, 6, 42);
        assert_eq!(c, gamma_candidates(&std, 6, 42));
        assert!(c.iter().all(|&g| g > 0.0 && g <= 4.0));
    }

    #[test]
    fn bridge_scalar_solutions() {
        let opts = SolveOptions::default();
        let (x, rep) = solve_scare(&scalar_std(-1.0, 1.0, &[], &[], 1.0), &opts).unwrap();
        assert!((x[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        assert_eq!(rep.gamma, Some(1.0));

        let (x, _) = solve_scare(&scalar_std(-1.0, 1.0, &[0.4], &[0.0], 0.0), &opts).unwrap();
        assert_eq!(x, Matrix::scalar(0.0));

        // x² + 3.75x − 1 = 0 from 2a_0x + a_1²x + c² − x²b_0² = 0 with a_1 = 0.5.
        let (x, _) = solve_scare(&scalar_std(-2.0, 1.0, &[0.5], &[0.0], 1.0), &opts).unwrap();
        let root = (-3.75 + (3.75f64 * 3.75 + 4.0).sqrt()) / 2.0;
        assert!((x[(0, 0)] - root).abs() < 1e-10, "{} vs {root}", x[(0, 0)]);

        let dbl = SolveOptions {
            method: SolveMethod::Doubling,
            ..SolveOptions::default()
        };
        let (y, rep) = solve_scare(&scalar_std(-2.0, 1.0, &[0.5], &[0.0], 1.0), &dbl).unwrap();
        assert!((y[(0, 0)] - root).abs() < 1e-10);
        assert_eq!(rep.method, Method::CayleyDoubling);
    }
}
