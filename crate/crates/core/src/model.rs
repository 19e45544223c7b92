//! Problem instances, standing-assumption checks, reduction to standard
//! form, feedback gains and closed-loop operators.
//!
//! An instance carries `r` terms `A_0..A_{r−1} ∈ ℝ^{n×n}`,
//! `B_0..B_{r−1} ∈ ℝ^{n×m}` and the weights `Q`, `L`, `R`. The same layout
//! serves both the discrete equation (all terms enter symmetrically) and the
//! continuous one (`A_0`, `B_0` are the drift, the rest are diffusion terms).

use std::ops::Deref;

use log::warn;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stp::{kron, mixed_shuffle_perm, psd_sqrt_factor, shuffle_perm, DEFAULT_FACTOR_TOL};

/// Raw coefficient data shared by both equation kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub a: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub q: Matrix,
    /// Cross weight `L ∈ ℝ^{n×m}`.
    pub l: Matrix,
    /// Control weight `R ∈ ℝ^{m×m}`.
    pub r: Matrix,
}

impl ProblemData {
    /// Number of terms `r` (one drift plus `r − 1` noise channels).
    pub fn terms(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn m(&self) -> usize {
        self.r.rows()
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if self.a.is_empty() {
            return Err(Error::Shape("at least one A term is required".into()));
        }
        if self.b.len() != self.a.len() {
            return Err(Error::Shape(format!(
                "{} A terms but {} B terms",
                self.a.len(),
                self.b.len()
            )));
        }
        if n == 0 {
            return Err(Error::Shape("state dimension n must be positive".into()));
        }
        let expect = |what: String, mat: &Matrix, shape: (usize, usize)| {
            if mat.shape() == shape {
                Ok(())
            } else {
                Err(Error::Shape(format!(
                    "{what} is {}x{}, expected {}x{}",
                    mat.rows(),
                    mat.cols(),
                    shape.0,
                    shape.1
                )))
            }
        };
        expect("Q".into(), &self.q, (n, n))?;
        expect("R".into(), &self.r, (m, m))?;
        expect("L".into(), &self.l, (n, m))?;
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            expect(format!("A[{i}]"), a, (n, n))?;
            expect(format!("B[{i}]"), b, (n, m))?;
        }
        Ok(())
    }

    fn symmetrized(mut self) -> Self {
        for (name, mat) in [("Q", &mut self.q), ("R", &mut self.r)] {
            let scale = 1.0 + mat.frobenius_norm();
            if mat.asymmetry() > 1e-12 * scale {
                warn!("{name} is not symmetric (defect {:e}); using its symmetric part", mat.asymmetry());
            }
            *mat = mat.symmetric_part();
        }
        self
    }

    /// `[Q L; Lᵀ R]`.
    pub fn weight_matrix(&self) -> Matrix {
        Matrix::block(&[&[&self.q, &self.l], &[&self.l.transpose(), &self.r]])
            .expect("weight blocks are conformal")
    }

    /// `R^{−1/2}` and `R⁻¹`.
    fn r_inverse_parts(&self) -> Result<(Matrix, Matrix)> {
        let half = self.r.sym_inverse_sqrt()?;
        let full = half.matmul(&half);
        Ok((half, full))
    }

    /// `Q − L R⁻¹ Lᵀ`.
    pub fn schur_weight(&self) -> Result<Matrix> {
        let (_, r_inv) = self.r_inverse_parts()?;
        Ok((&self.q - &self.l.matmul(&r_inv).matmul(&self.l.transpose())).symmetric_part())
    }

    fn check_feedback(&self, f: &Matrix) -> Result<()> {
        if f.shape() != (self.m(), self.n()) {
            return Err(Error::Shape(format!(
                "feedback is {}x{}, expected {}x{}",
                f.rows(),
                f.cols(),
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }
}

macro_rules! instance_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(ProblemData);

        impl $name {
            /// Checks shapes and replaces `Q`, `R` by their symmetric parts.
            pub fn new(data: ProblemData) -> Result<Self> {
                data.check_shapes()?;
                Ok(Self(data.symmetrized()))
            }

            pub fn data(&self) -> &ProblemData {
                &self.0
            }

            pub fn into_data(self) -> ProblemData {
                self.0
            }
        }

        impl Deref for $name {
            type Target = ProblemData;

            fn deref(&self) -> &ProblemData {
                &self.0
            }
        }
    };
}

instance_type!(
    /// Data of `X = Σ AᵢᵀXAᵢ + Q − (Σ AᵢᵀXBᵢ + L)(R + Σ BᵢᵀXBᵢ)⁻¹(Σ BᵢᵀXAᵢ + Lᵀ)`.
    SdareInstance
);
instance_type!(
    /// Data of `A_0ᵀX + XA_0 + Σ_{i≥1} AᵢᵀXAᵢ + Q − (XB_0 + Σ_{i≥1} AᵢᵀXBᵢ + L)(R + Σ_{i≥1} BᵢᵀXBᵢ)⁻¹(·)ᵀ = 0`.
    ScareInstance
);

/// Either kind of instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Sdare(SdareInstance),
    Scare(ScareInstance),
}

impl Instance {
    pub fn kind(&self) -> Kind {
        match self {
            Instance::Sdare(_) => Kind::Discrete,
            Instance::Scare(_) => Kind::Continuous,
        }
    }

    pub fn data(&self) -> &ProblemData {
        match self {
            Instance::Sdare(i) => i.data(),
            Instance::Scare(i) => i.data(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Discrete,
    Continuous,
}

/// Data needed to map standard-form results back to the original weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub r_weight: Matrix,
    pub l_cross: Matrix,
    /// Shuffle permutation applied to the stacked terms.
    pub pi: Matrix,
}

/// `X = Aᵀ⋉X⋉(I + BBᵀ⋉X)⁻¹⋉A + CᵀC` with `A ∈ ℝ^{rn×n}`, `B ∈ ℝ^{rn×m}`, `C ∈ ℝ^{l×n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardSdare {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub r: usize,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    /// `None` when the triple did not come from an instance.
    pub recovery: Option<Recovery>,
}

impl StandardSdare {
    /// Wraps a bare triple, checking `A ∈ ℝ^{rn×n}`, `B ∈ ℝ^{rn×m}`, `C ∈ ℝ^{l×n}`.
    pub fn from_parts(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.cols();
        if n == 0 || !a.rows().is_multiple_of(n) || a.rows() == 0 {
            return Err(Error::Shape(format!(
                "standard A must be rn×n, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() || c.cols() != n {
            return Err(Error::Shape(format!(
                "standard triple shapes {:?}, {:?}, {:?} are inconsistent",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self {
            r: a.rows() / n,
            n,
            m: b.cols(),
            l: c.rows(),
            a,
            b,
            c,
            recovery: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScareRecovery {
    pub r_weight: Matrix,
    pub l_cross: Matrix,
    pub pi: Matrix,
    pub pi_tilde: Matrix,
}

/// `AᵀX + XA + CᵀC + Âᵀ⋉X⋉Â − (XB + Âᵀ⋉X⋉B̂)(I + B̂ᵀ⋉X⋉B̂)⁻¹(BᵀX + B̂ᵀ⋉X⋉Â) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardScare {
    pub a: Matrix,
    pub b: Matrix,
    /// `Â ∈ ℝ^{(r−1)n×n}`, empty when `r = 1`.
    pub ahat: Matrix,
    pub bhat: Matrix,
    pub c: Matrix,
    pub r: usize,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub recovery: Option<ScareRecovery>,
}

impl StandardScare {
    pub fn from_parts(a: Matrix, b: Matrix, ahat: Matrix, bhat: Matrix, c: Matrix) -> Result<Self> {
        let n = a.rows();
        let m = b.cols();
        if !a.is_square()
            || n == 0
            || b.rows() != n
            || ahat.cols() != n
            || !ahat.rows().is_multiple_of(n)
            || bhat.shape() != (ahat.rows(), m)
            || c.cols() != n
        {
            return Err(Error::Shape(format!(
                "standard SCARE shapes A {:?}, B {:?}, Â {:?}, B̂ {:?}, C {:?} are inconsistent",
                a.shape(),
                b.shape(),
                ahat.shape(),
                bhat.shape(),
                c.shape()
            )));
        }
        Ok(Self {
            r: ahat.rows() / n + 1,
            n,
            m,
            l: c.rows(),
            a,
            b,
            ahat,
            bhat,
            c,
            recovery: None,
        })
    }
}

/// Outcome of a stabilizability or detectability certificate search.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// A witness gain was found; `value` is the closed-loop spectral radius
    /// (discrete) or abscissa (continuous).
    Passed { witness: String, value: f64 },
    /// No witness among the heuristics; `best` is the best value seen.
    Inconclusive { best: f64 },
}

impl Certificate {
    pub fn passed(&self) -> bool {
        matches!(self, Certificate::Passed { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub weight_psd: bool,
    pub weight_min_eig: f64,
    pub r_positive: bool,
    pub r_min_eig: f64,
    pub stabilizable: Certificate,
    pub detectable: Certificate,
}

impl ValidationReport {
    /// Weight conditions hold (these are hard requirements).
    pub fn weights_ok(&self) -> bool {
        self.weight_psd && self.r_positive
    }

    pub fn passed(&self) -> bool {
        self.weights_ok() && self.stabilizable.passed() && self.detectable.passed()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.weight_psd {
            out.push(format!(
                "[Q L; Lᵀ R] not PSD (min eigenvalue {:e})",
                self.weight_min_eig
            ));
        }
        if !self.r_positive {
            out.push(format!("R not positive definite (min eigenvalue {:e})", self.r_min_eig));
        }
        if let Certificate::Inconclusive { best } = self.stabilizable {
            out.push(format!("stabilizability inconclusive (best {best:e})"));
        }
        if let Certificate::Inconclusive { best } = self.detectable {
            out.push(format!("detectability inconclusive (best {best:e})"));
        }
        out
    }
}

/// Optional witness gains for [`validate_sdare_with`] / [`validate_scare_with`].
#[derive(Clone, Debug, Default)]
pub struct Witnesses {
    /// Candidate feedback `F ∈ ℝ^{m×n}`.
    pub feedback: Option<Matrix>,
    /// Candidate dual gain `K ∈ ℝ^{l×n}` for the pair `(Aᵢᵀ, Cᵢᵀ)`.
    pub dual: Option<Matrix>,
}

fn weight_checks(data: &ProblemData, tol: f64) -> (bool, f64, bool, f64) {
    let w = data.weight_matrix();
    let w_min = w.min_sym_eigenvalue();
    let scale = 1.0 + w.frobenius_norm();
    let r_min = data.r.min_sym_eigenvalue();
    let r_scale = data.r.frobenius_norm().max(f64::MIN_POSITIVE);
    (
        w_min >= -tol * scale,
        w_min,
        data.m() == 0 || r_min > tol * r_scale,
        r_min,
    )
}

/// The detectability dual: terms `Aᵢᵀ` with input `Cᵀ` on the first term only.
fn dual_data(data: &ProblemData, c: &Matrix) -> ProblemData {
    let (n, l) = (data.n(), c.rows());
    let b = (0..data.terms())
        .map(|i| if i == 0 { c.transpose() } else { Matrix::zeros(n, l) })
        .collect();
    ProblemData {
        a: data.a.iter().map(Matrix::transpose).collect(),
        b,
        q: Matrix::identity(n),
        l: Matrix::zeros(n, l),
        r: Matrix::identity(l),
    }
}

/// Same dynamics with identity weights, for the heuristic Riccati gain.
fn identity_weight_data(data: &ProblemData) -> ProblemData {
    ProblemData {
        a: data.a.clone(),
        b: data.b.clone(),
        q: Matrix::identity(data.n()),
        l: Matrix::zeros(data.n(), data.m()),
        r: Matrix::identity(data.m()),
    }
}

const HEURISTIC_TOL: f64 = 1e-10;
const HEURISTIC_MAX_ITER: usize = 2000;

fn search_certificate(
    data: &ProblemData,
    supplied: Option<&Matrix>,
    kind: Kind,
) -> Certificate {
    let measure = |f: &Matrix| -> Option<f64> {
        match kind {
            Kind::Discrete => closed_loop_op_discrete(&SdareInstance(data.clone()), f)
                .ok()
                .map(|op| op.spectral_radius()),
            Kind::Continuous => closed_loop_op_continuous(&ScareInstance(data.clone()), f)
                .ok()
                .map(|op| op.spectral_abscissa()),
        }
    };
    let stable = |v: f64| match kind {
        Kind::Discrete => v < 1.0,
        Kind::Continuous => v < 0.0,
    };
    let mut best = f64::INFINITY;
    let mut candidates: Vec<(String, Matrix)> = vec![("F = 0".into(), Matrix::zeros(data.m(), data.n()))];
    if let Some(f) = supplied {
        candidates.push(("supplied".into(), f.clone()));
    }
    for (witness, f) in candidates {
        if let Some(v) = measure(&f) {
            if stable(v) {
                return Certificate::Passed { witness, value: v };
            }
            best = best.min(v);
        }
    }
    if data.m() > 0 {
        if let Some(f) = heuristic_gain(data, kind) {
            if let Some(v) = measure(&f) {
                if stable(v) {
                    return Certificate::Passed {
                        witness: "identity-weight Riccati gain".into(),
                        value: v,
                    };
                }
                best = best.min(v);
            }
        }
    }
    Certificate::Inconclusive { best }
}

fn heuristic_gain(data: &ProblemData, kind: Kind) -> Option<Matrix> {
    let aux = identity_weight_data(data);
    match kind {
        Kind::Discrete => {
            let inst = SdareInstance(aux);
            let std = reduce_sdare(&inst).ok()?;
            let (x, _) = crate::sdare::fixed_point_solve(&std.gram(), HEURISTIC_TOL, HEURISTIC_MAX_ITER).ok()?;
            feedback_sdare(&inst, &x).ok()
        }
        Kind::Continuous => {
            let inst = ScareInstance(aux);
            let opts = crate::solve::SolveOptions {
                tol: HEURISTIC_TOL,
                max_iter: HEURISTIC_MAX_ITER,
                ..Default::default()
            };
            let sol = crate::solve::solve_scare_instance(&inst, &opts).ok()?;
            Some(sol.f)
        }
    }
}

fn validate(data: &ProblemData, tol: f64, witnesses: &Witnesses, kind: Kind) -> ValidationReport {
    let (weight_psd, weight_min_eig, r_positive, r_min_eig) = weight_checks(data, tol);
    let stabilizable = search_certificate(data, witnesses.feedback.as_ref(), kind);
    let detectable = match data
        .schur_weight()
        .and_then(|w| psd_sqrt_factor(&w, DEFAULT_FACTOR_TOL))
    {
        Ok(c) => search_certificate(&dual_data(data, &c), witnesses.dual.as_ref(), kind),
        Err(_) => Certificate::Inconclusive { best: f64::INFINITY },
    };
    ValidationReport {
        weight_psd,
        weight_min_eig,
        r_positive,
        r_min_eig,
        stabilizable,
        detectable,
    }
}

/// Checks the weight conditions and searches for stabilizability and
/// detectability certificates with the default heuristics.
pub fn validate_sdare(inst: &SdareInstance, tol: f64) -> ValidationReport {
    validate_sdare_with(inst, tol, &Witnesses::default())
}

pub fn validate_sdare_with(inst: &SdareInstance, tol: f64, witnesses: &Witnesses) -> ValidationReport {
    validate(inst, tol, witnesses, Kind::Discrete)
}

pub fn validate_scare(inst: &ScareInstance, tol: f64) -> ValidationReport {
    validate_scare_with(inst, tol, &Witnesses::default())
}

pub fn validate_scare_with(inst: &ScareInstance, tol: f64, witnesses: &Witnesses) -> ValidationReport {
    validate(inst, tol, witnesses, Kind::Continuous)
}

fn stack(parts: &[Matrix]) -> Matrix {
    Matrix::vstack(&parts.iter().collect::<Vec<_>>()).expect("terms share a column count")
}

/// `(Π(Ã − B̃R⁻¹Lᵀ), ΠB̃R^{−1/2})` for the stacked terms.
fn shifted_stack(a: &[Matrix], b: &[Matrix], data: &ProblemData, pi: &Matrix) -> Result<(Matrix, Matrix)> {
    let (r_half, r_inv) = data.r_inverse_parts()?;
    let a_st = stack(a);
    let b_st = stack(b);
    let shift = b_st.matmul(&r_inv).matmul(&data.l.transpose());
    Ok((pi.matmul(&(&a_st - &shift)), pi.matmul(&b_st.matmul(&r_half))))
}

/// Reduction to `X = Aᵀ⋉X⋉(I + BBᵀ⋉X)⁻¹⋉A + CᵀC`.
pub fn reduce_sdare(inst: &SdareInstance) -> Result<StandardSdare> {
    let (n, r) = (inst.n(), inst.terms());
    let pi = shuffle_perm(n, r);
    let (a, b) = shifted_stack(&inst.a, &inst.b, inst, &pi)?;
    let c = psd_sqrt_factor(&inst.schur_weight()?, DEFAULT_FACTOR_TOL)?;
    Ok(StandardSdare {
        r,
        n,
        m: inst.m(),
        l: c.rows(),
        a,
        b,
        c,
        recovery: Some(Recovery {
            r_weight: inst.r.clone(),
            l_cross: inst.l.clone(),
            pi,
        }),
    })
}

/// Reduction to the standard SCARE with drift `A`, `B` and diffusion `Â`, `B̂`.
pub fn reduce_scare(inst: &ScareInstance) -> Result<StandardScare> {
    let (n, r) = (inst.n(), inst.terms());
    let pi0 = Matrix::identity(n);
    let (a, b) = shifted_stack(&inst.a[..1], &inst.b[..1], inst, &pi0)?;
    let pi = shuffle_perm(n, r - 1);
    let (ahat, bhat) = if r == 1 {
        (Matrix::zeros(0, n), Matrix::zeros(0, inst.m()))
    } else {
        shifted_stack(&inst.a[1..], &inst.b[1..], inst, &pi)?
    };
    let c = psd_sqrt_factor(&inst.schur_weight()?, DEFAULT_FACTOR_TOL)?;
    Ok(StandardScare {
        r,
        n,
        m: inst.m(),
        l: c.rows(),
        a,
        b,
        ahat,
        bhat,
        c,
        recovery: Some(ScareRecovery {
            r_weight: inst.r.clone(),
            l_cross: inst.l.clone(),
            pi,
            pi_tilde: mixed_shuffle_perm(n, r)?,
        }),
    })
}

/// `F_X = −(Σ BᵢᵀXBᵢ + R)⁻¹(Σ AᵢᵀXBᵢ + L)ᵀ`.
pub fn feedback_sdare(inst: &SdareInstance, x: &Matrix) -> Result<Matrix> {
    let x = check_symmetric_input(inst, x)?;
    let mut s = inst.r.clone();
    let mut nt = inst.l.transpose();
    for (a, b) in inst.a.iter().zip(&inst.b) {
        let xb = x.matmul(b);
        s += &b.transpose().matmul(&xb);
        nt += &xb.transpose().matmul(a);
    }
    Ok(-&s.solve(&nt)?)
}

/// `F_X = −(Σ_{i≥1} BᵢᵀXBᵢ + R)⁻¹(B_0ᵀX + Σ_{i≥1} BᵢᵀXAᵢ + Lᵀ)`.
pub fn feedback_scare(inst: &ScareInstance, x: &Matrix) -> Result<Matrix> {
    let x = check_symmetric_input(inst, x)?;
    let mut s = inst.r.clone();
    let mut nt = &inst.b[0].transpose().matmul(&x) + &inst.l.transpose();
    for (a, b) in inst.a.iter().zip(&inst.b).skip(1) {
        let xb = x.matmul(b);
        s += &b.transpose().matmul(&xb);
        nt += &xb.transpose().matmul(a);
    }
    Ok(-&s.solve(&nt)?)
}

pub(crate) fn check_symmetric_input(data: &ProblemData, x: &Matrix) -> Result<Matrix> {
    if x.shape() != (data.n(), data.n()) {
        return Err(Error::Shape(format!(
            "X is {}x{}, expected {}x{}",
            x.rows(),
            x.cols(),
            data.n(),
            data.n()
        )));
    }
    Ok(x.symmetric_part())
}

fn closed_loop_terms<'a>(data: &'a ProblemData, f: &'a Matrix) -> impl Iterator<Item = Matrix> + 'a {
    data.a.iter().zip(&data.b).map(move |(a, b)| a + &b.matmul(f))
}

/// `Σᵢ (Aᵢ + BᵢF) ⊗ (Aᵢ + BᵢF)`, the matrix of `𝒮_F`.
pub fn closed_loop_op_discrete(inst: &SdareInstance, f: &Matrix) -> Result<Matrix> {
    inst.check_feedback(f)?;
    let n = inst.n();
    let mut op = Matrix::zeros(n * n, n * n);
    for t in closed_loop_terms(inst, f) {
        op += &kron(&t, &t);
    }
    Ok(op)
}

/// `(A_0+B_0F) ⊗ I + I ⊗ (A_0+B_0F) + Σ_{i≥1} (Aᵢ+BᵢF) ⊗ (Aᵢ+BᵢF)`, the matrix of `ℒ_F`.
pub fn closed_loop_op_continuous(inst: &ScareInstance, f: &Matrix) -> Result<Matrix> {
    inst.check_feedback(f)?;
    let n = inst.n();
    let id = Matrix::identity(n);
    let mut terms = closed_loop_terms(inst, f);
    let drift = terms.next().expect("at least one term");
    let mut op = &kron(&drift, &id) + &kron(&id, &drift);
    for t in terms {
        op += &kron(&t, &t);
    }
    Ok(op)
}
