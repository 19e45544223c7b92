//! Solvers for the standard-form SDARE
//! `X = Aᵀ⋉X⋉(I + G⋉X)⁻¹⋉A + H`, with `G = BBᵀ` and `H = CᵀC`.
//!
//! Three routes compute the same iterates:
//!
//! * fixed point `X_{t+1} = 𝒟(X_t)` from `X_0 = 0`;
//! * the closed form `X_t = V_tᵀ(I + T_tT_tᵀ)⁻¹V_t` with ⋉-block-Toeplitz `T_t`;
//! * doubling on `(A_k, G_k, H_k)`, for which `H_k = X_{2^k}`.
//!
//! The doubling iterates live in `ℝ^{r^{2^k}n}`, so they are capped and the
//! caller may finish with fixed-point refinement (see [`solve_gram`]).

use log::{debug, info};

use crate::diagnostics::{rate_report, HistoryPoint, Method, SolveReport};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::StandardSdare;
use crate::stp::{geometric_count, kron_identity, ltimes, ltimes_pow, toepl};

/// Default doubling row cap.
pub const DEFAULT_CAP: usize = 4096;

/// The SDARE in Gram form: `A ∈ ℝ^{rn×n}`, `G ∈ ℝ^{rn×rn}`, `H ∈ ℝ^{n×n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdareGram {
    pub a: Matrix,
    pub g: Matrix,
    pub h: Matrix,
    pub r: usize,
    pub n: usize,
}

impl SdareGram {
    pub fn new(a: Matrix, g: Matrix, h: Matrix) -> Result<Self> {
        let n = a.cols();
        let s = a.rows();
        if n == 0 || !s.is_multiple_of(n) || s == 0 || g.shape() != (s, s) || h.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "Gram SDARE shapes A {:?}, G {:?}, H {:?} are inconsistent",
                a.shape(),
                g.shape(),
                h.shape()
            )));
        }
        Ok(Self {
            r: s / n,
            n,
            a,
            g: g.symmetric_part(),
            h: h.symmetric_part(),
        })
    }
}

impl StandardSdare {
    pub fn gram(&self) -> SdareGram {
        SdareGram {
            a: self.a.clone(),
            g: self.b.matmul(&self.b.transpose()),
            h: self.c.transpose().matmul(&self.c),
            r: self.r,
            n: self.n,
        }
    }
}

/// `(I + G⋉X)⁻¹⋉A`, the closed-loop factor of the map at `X`.
pub fn closed_loop_factor(gram: &SdareGram, x: &Matrix) -> Result<Matrix> {
    let s = gram.a.rows();
    let m = &Matrix::identity(s) + &ltimes(&gram.g, x)?;
    m.solve(&gram.a)
}

/// One application of `𝒟(X) = Aᵀ⋉X⋉(I + G⋉X)⁻¹⋉A + H`.
pub fn fp_step(gram: &SdareGram, x: &Matrix) -> Result<Matrix> {
    let y = closed_loop_factor(gram, x)?;
    let next = &gram.a.transpose().matmul(&ltimes(x, &y)?) + &gram.h;
    next.symmetric_part().ensure_finite("fixed-point iterate")
}

/// Spectral radius of `Y ↦ Āᵀ⋉Y⋉Ā` with `Ā = (I + G⋉X)⁻¹⋉A`, i.e. of
/// `Σ_a Ā_a ⊗ Ā_a` over the `r` interleaved row blocks of `Ā`.
pub fn closed_loop_rho(gram: &SdareGram, x: &Matrix) -> Result<f64> {
    let abar = closed_loop_factor(gram, x)?;
    let (r, n) = (gram.r, gram.n);
    let mut op = Matrix::zeros(n * n, n * n);
    for a in 0..r {
        let blk = Matrix::from_fn(n, n, |i, j| abar[(i * r + a, j)]);
        op += &crate::stp::kron(&blk, &blk);
    }
    Ok(op.spectral_radius())
}

/// `‖𝒟(X) − X‖_F / (1 + ‖X‖_F)`.
pub fn standard_residual(gram: &SdareGram, x: &Matrix) -> Result<f64> {
    let d = fp_step(gram, x)?;
    Ok((&d - x).frobenius_norm() / (1.0 + x.frobenius_norm()))
}

/// Fixed-point iteration from `X_0 = 0`.
pub fn fixed_point_solve(gram: &SdareGram, tol: f64, max_iter: usize) -> Result<(Matrix, SolveReport)> {
    fixed_point_solve_from(gram, Matrix::zeros(gram.n, gram.n), 0, tol, max_iter)
}

/// Fixed-point iteration from `X_{t0} = x0`, stopping when
/// `‖X_{t+1} − X_t‖ ≤ tol·(1 + ‖X_{t+1}‖)` or when an iterate repeats exactly.
pub fn fixed_point_solve_from(
    gram: &SdareGram,
    x0: Matrix,
    t0: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Matrix, SolveReport)> {
    let mut report = SolveReport::new(Method::FixedPoint);
    let mut x = x0;
    report.iterates.push((t0, x.clone()));
    for step in 1..=max_iter {
        let next = fp_step(gram, &x)?;
        let inc = &next - &x;
        let inc_norm = inc.frobenius_norm();
        let inc_eig = inc.min_sym_eigenvalue();
        let t = t0 + step;
        report.iterations = step;
        report.note_increment(inc_eig);
        report.history.push(HistoryPoint {
            t,
            increment: inc_norm,
            min_increment_eig: inc_eig,
        });
        report.iterates.push((t, next.clone()));
        let done = next == x || inc_norm <= tol * (1.0 + next.frobenius_norm());
        x = next;
        if done {
            debug!("fixed point converged at t = {t}");
            finish_report(gram, &x, &mut report)?;
            return Ok((x, report));
        }
    }
    finish_report(gram, &x, &mut report)?;
    Err(Error::NoConvergence {
        iterations: max_iter,
        last: Box::new((x, report)),
    })
}

fn finish_report(gram: &SdareGram, x: &Matrix, report: &mut SolveReport) -> Result<()> {
    report.residual_standard = standard_residual(gram, x)?;
    let bound = closed_loop_rho(gram, x).ok();
    report.rate_bound = bound;
    report.rate_empirical = rate_report(&report.iterates, bound.unwrap_or(f64::NAN))
        .ok()
        .map(|(rate, _)| rate);
    Ok(())
}

/// Finite Toeplitz data `V_t`, `T_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzData {
    pub t: usize,
    /// `[C; C⋉A; …; C⋉A^{⋉(t−1)}]`.
    pub v: Matrix,
    /// `toepl([0, C⋉B, C⋉A⋉B, …, C⋉A^{⋉(t−2)}⋉B])`.
    pub tt: Matrix,
}

fn check_geometric(r: usize, t: usize, width: usize, cap: usize) -> Result<usize> {
    let mut count: usize = 0;
    let mut term: usize = 1;
    for _ in 0..t {
        count = count.saturating_add(term);
        term = term.saturating_mul(r);
    }
    let needed = count.saturating_mul(width.max(1));
    if needed > cap {
        return Err(Error::SizeCapExceeded { needed, cap });
    }
    Ok(count)
}

pub fn toeplitz_data(std: &StandardSdare, t: usize, cap: usize) -> Result<ToeplitzData> {
    if t == 0 {
        return Err(Error::Dimension("Toeplitz depth must be at least 1".into()));
    }
    check_geometric(std.r, t, std.l.max(std.m), cap)?;
    let mut v_blocks = Vec::with_capacity(t);
    let mut t_blocks = vec![Matrix::zeros(std.l, std.m)];
    let mut power = Matrix::identity(std.n);
    for j in 0..t {
        v_blocks.push(ltimes(&std.c, &power)?);
        if j + 1 < t {
            t_blocks.push(ltimes(&std.c, &ltimes(&power, &std.b)?)?);
        }
        power = if j == 0 { std.a.clone() } else { ltimes(&power, &std.a)? };
    }
    let v = Matrix::vstack(&v_blocks.iter().collect::<Vec<_>>())?;
    let tt = toepl(&t_blocks, std.r, std.l, std.m)?;
    Ok(ToeplitzData { t, v, tt })
}

/// `X_t = V_tᵀ(I + T_tT_tᵀ)⁻¹V_t`.
pub fn toeplitz_iterate(std: &StandardSdare, t: usize, cap: usize) -> Result<Matrix> {
    let data = toeplitz_data(std, t, cap)?;
    let k = data.tt.rows();
    let m = &Matrix::identity(k) + &data.tt.matmul(&data.tt.transpose());
    let x = data.v.transpose().matmul(&m.solve(&data.v)?);
    Ok(x.symmetric_part())
}

/// Doubling iterate `(A_k, G_k, H_k)` with `A_k ∈ ℝ^{s×n}`, `s = r^{2^k}n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublingState {
    pub k: usize,
    pub a: Matrix,
    pub g: Matrix,
    pub h: Matrix,
    pub row_dim: usize,
    pub n: usize,
    /// Asymmetry of `G_k`, `H_k` before the last symmetrization.
    pub sym_defect: f64,
}

impl DoublingState {
    pub fn initial(gram: &SdareGram) -> Self {
        Self {
            k: 0,
            a: gram.a.clone(),
            g: gram.g.clone(),
            h: gram.h.clone(),
            row_dim: gram.a.rows(),
            n: gram.n,
            sym_defect: 0.0,
        }
    }

    /// Row dimension after one more step, `s²/n`.
    pub fn next_row_dim(&self) -> usize {
        (self.row_dim / self.n).saturating_mul(self.row_dim)
    }
}

/// One doubling step:
///
/// ```text
/// A_{k+1} = A_k⋉(I + G_k⋉H_k)⁻¹⋉A_k
/// G_{k+1} = G_k⊗I_{s/n} + A_k⋉(I + G_k⋉H_k)⁻¹⋉G_k⋉A_kᵀ
/// H_{k+1} = H_k + A_kᵀ⋉H_k⋉(I + G_k⋉H_k)⁻¹⋉A_k
/// ```
pub fn doubling_step(state: &DoublingState, cap: usize) -> Result<DoublingState> {
    let s = state.row_dim;
    let next = state.next_row_dim();
    if next > cap {
        return Err(Error::SizeCapExceeded { needed: next, cap });
    }
    let pad = s / state.n;
    let m = &Matrix::identity(s) + &ltimes(&state.g, &state.h)?;
    let m_a = m.solve(&state.a)?;
    let m_g = m.solve(&state.g)?;
    let a = ltimes(&state.a, &m_a)?;
    let g = &kron_identity(&state.g, pad) + &ltimes(&ltimes(&state.a, &m_g)?, &state.a.transpose())?;
    let h = &state.h + &state.a.transpose().matmul(&ltimes(&state.h, &m_a)?);
    let sym_defect = g.asymmetry().max(h.asymmetry());
    Ok(DoublingState {
        k: state.k + 1,
        a: a.ensure_finite("doubling A")?,
        g: g.symmetric_part().ensure_finite("doubling G")?,
        h: h.symmetric_part().ensure_finite("doubling H")?,
        row_dim: next,
        n: state.n,
        sym_defect,
    })
}

/// Maximum number of doubling steps attempted by [`doubling_solve`].
pub const MAX_DOUBLING_STEPS: usize = 64;

/// Doubling from `(A, G, H)` until `‖H_{k+1} − H_k‖ ≤ tol·(1 + ‖H_k‖)` or the
/// cap stops growth. A cap stop sets `cap_limited` and returns the last `H_k`.
pub fn doubling_solve(gram: &SdareGram, tol: f64, cap: usize) -> Result<(Matrix, SolveReport)> {
    let mut report = SolveReport::new(Method::Doubling);
    let mut state = DoublingState::initial(gram);
    report.iterates.push((1, state.h.clone()));
    let mut converged = false;
    while state.k < MAX_DOUBLING_STEPS {
        if state.row_dim > cap || state.next_row_dim() > cap {
            info!(
                "doubling stopped by the row cap at k = {} (next dimension {})",
                state.k,
                state.next_row_dim()
            );
            report.cap_limited = true;
            break;
        }
        let next = doubling_step(&state, cap)?;
        let inc = &next.h - &state.h;
        let inc_norm = inc.frobenius_norm();
        let inc_eig = inc.min_sym_eigenvalue();
        report.iterations = next.k;
        report.doubling_steps = next.k;
        report.max_sym_defect = report.max_sym_defect.max(next.sym_defect);
        report.note_increment(inc_eig);
        let t = 1usize.checked_shl(next.k as u32).unwrap_or(usize::MAX);
        report.history.push(HistoryPoint {
            t,
            increment: inc_norm,
            min_increment_eig: inc_eig,
        });
        report.iterates.push((t, next.h.clone()));
        let done = next.h == state.h || inc_norm <= tol * (1.0 + state.h.frobenius_norm());
        state = next;
        if done {
            converged = true;
            break;
        }
    }
    let x = state.h.clone();
    finish_report(gram, &x, &mut report)?;
    if !converged && !report.cap_limited {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            last: Box::new((x, report)),
        });
    }
    Ok((x, report))
}

/// Doubling followed, when the cap intervened, by fixed-point refinement
/// from the last `H_k = X_{2^k}`; or plain fixed point.
pub fn solve_gram(
    gram: &SdareGram,
    doubling: bool,
    tol: f64,
    max_iter: usize,
    cap: usize,
) -> Result<(Matrix, SolveReport)> {
    if !doubling {
        return fixed_point_solve(gram, tol, max_iter);
    }
    let (h, mut report) = doubling_solve(gram, tol, cap)?;
    if !report.cap_limited {
        return Ok((h, report));
    }
    let t0 = report.iterates.last().map_or(1, |(t, _)| *t);
    let budget = max_iter.saturating_sub(report.iterations);
    let merge = |report: &mut SolveReport, fp: SolveReport| {
        report.iterations += fp.iterations;
        report.history.extend(fp.history);
        report.iterates.extend(fp.iterates.into_iter().skip(1));
        if let Some(e) = fp.min_increment_eig {
            report.note_increment(e);
        }
        report.residual_standard = fp.residual_standard;
        report.rate_bound = fp.rate_bound;
    };
    match fixed_point_solve_from(gram, h, t0, tol, budget) {
        Ok((x, fp)) => {
            merge(&mut report, fp);
            finish_report(gram, &x, &mut report)?;
            Ok((x, report))
        }
        Err(Error::NoConvergence { iterations, last }) => {
            let (x, fp) = *last;
            merge(&mut report, fp);
            Err(Error::NoConvergence {
                iterations: iterations + report.doubling_steps,
                last: Box::new((x, report)),
            })
        }
        Err(e) => Err(e),
    }
}

/// `(A_k, G_k, H_k)` from the decoupled forms with `t = 2^k`:
///
/// ```text
/// A_k = A^{⋉t} − U_t(I + T_tᵀT_t)⁻¹T_tᵀV_t
/// G_k = U_t(I + T_tᵀT_t)⁻¹U_tᵀ
/// H_k = V_tᵀ(I + T_tT_tᵀ)⁻¹V_t
/// ```
///
/// where block `j` of `U_t` is `(A^{⋉(t−1−j)}⋉B) ⊗ I_{r^j}`.
pub fn doubling_oracle(std: &StandardSdare, k: usize, cap: usize) -> Result<DoublingState> {
    let t = 1usize
        .checked_shl(k as u32)
        .ok_or(Error::SizeCapExceeded { needed: usize::MAX, cap })?;
    let row_dim = std.r.checked_pow(t as u32).and_then(|p| p.checked_mul(std.n));
    let row_dim = match row_dim {
        Some(s) if s <= cap => s,
        other => {
            return Err(Error::SizeCapExceeded {
                needed: other.unwrap_or(usize::MAX),
                cap,
            })
        }
    };
    let data = toeplitz_data(std, t, cap)?;
    let mut blocks = Vec::with_capacity(t);
    let mut pad = 1;
    for j in 0..t {
        let e = t - 1 - j;
        let p = if e == 0 { Matrix::identity(std.n) } else { ltimes_pow(&std.a, e)? };
        blocks.push(kron_identity(&ltimes(&p, &std.b)?, pad));
        pad *= std.r;
    }
    let u = Matrix::hstack(&blocks.iter().collect::<Vec<_>>())?;
    debug_assert_eq!(u.cols(), geometric_count(std.r, t) * std.m);
    let tt = &data.tt;
    let k_dim = tt.cols();
    let inner = &Matrix::identity(k_dim) + &tt.transpose().matmul(tt);
    let tv = tt.transpose().matmul(&data.v);
    let a = &ltimes_pow(&std.a, t)? - &u.matmul(&inner.solve(&tv)?);
    let g = u.matmul(&inner.solve(&u.transpose())?);
    let outer = &Matrix::identity(tt.rows()) + &tt.matmul(&tt.transpose());
    let h = data.v.transpose().matmul(&outer.solve(&data.v)?);
    Ok(DoublingState {
        k,
        a,
        g: g.symmetric_part(),
        h: h.symmetric_part(),
        row_dim,
        n: std.n,
        sym_defect: 0.0,
    })
}

/// `J = [0 I_n; −I_n 0]`.
pub fn canonical_j(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `Θ = [A 0; −H I_n]` and `Φ = [I_s G; 0 Aᵀ]` for `A ∈ ℝ^{s×n}`.
pub fn ssf1_pair(a: &Matrix, g: &Matrix, h: &Matrix) -> Result<(Matrix, Matrix)> {
    let (s, n) = a.shape();
    let theta = Matrix::block(&[
        &[a, &Matrix::zeros(s, n)],
        &[&-h, &Matrix::identity(n)],
    ])?;
    let phi = Matrix::block(&[
        &[&Matrix::identity(s), g],
        &[&Matrix::zeros(n, s), &a.transpose()],
    ])?;
    Ok((theta, phi))
}

/// `‖Θ⋉J⋉Θᵀ − Φ⋉J⋉Φᵀ‖_F` for the SSF1 pair built from `(A, G, H)`.
pub fn pair_defect(a: &Matrix, g: &Matrix, h: &Matrix) -> Result<f64> {
    let (theta, phi) = ssf1_pair(a, g, h)?;
    let j = canonical_j(a.cols());
    let lhs = ltimes(&ltimes(&theta, &j)?, &theta.transpose())?;
    let rhs = ltimes(&ltimes(&phi, &j)?, &phi.transpose())?;
    Ok((&lhs - &rhs).frobenius_norm())
}

pub fn symplectic_defect(state: &DoublingState) -> f64 {
    pair_defect(&state.a, &state.g, &state.h).unwrap_or(f64::INFINITY)
}

/// The doubling multipliers `(Θ', Φ')` of a state.
pub fn doubling_multipliers(state: &DoublingState) -> Result<(Matrix, Matrix)> {
    let (s, n) = (state.row_dim, state.n);
    let gh = &Matrix::identity(s) + &ltimes(&state.g, &state.h)?;
    let hg = &Matrix::identity(s) + &ltimes(&state.h, &state.g)?;
    let gh_inv = gh.inverse()?;
    let hg_inv = hg.inverse()?;
    let top_left = ltimes(&state.a, &gh_inv)?;
    let at_hg = state.a.transpose().matmul(&hg_inv);
    let bottom_left = -&ltimes(&at_hg, &state.h)?;
    let big = top_left.rows();
    let theta = Matrix::block(&[
        &[&top_left, &Matrix::zeros(big, n)],
        &[&bottom_left, &Matrix::identity(n)],
    ])?;
    let top_right = ltimes(&state.a, &state.g.matmul(&hg_inv))?;
    let phi = Matrix::block(&[
        &[&Matrix::identity(big), &top_right],
        &[&Matrix::zeros(n, big), &at_hg],
    ])?;
    Ok((theta, phi))
}

/// `‖Θ'⋉Φ_k − Φ'⋉Θ_k‖_F`.
pub fn doubling_transform_defect(state: &DoublingState) -> Result<f64> {
    let (theta_p, phi_p) = doubling_multipliers(state)?;
    let (theta, phi) = ssf1_pair(&state.a, &state.g, &state.h)?;
    let lhs = ltimes(&theta_p, &phi)?;
    let rhs = ltimes(&phi_p, &theta)?;
    Ok((&lhs - &rhs).frobenius_norm())
}
