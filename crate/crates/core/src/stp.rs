//! Left semi-tensor product and the structured matrices built from it.
//!
//! For `A ∈ ℝ^{m×n}` and `B ∈ ℝ^{p×q}` the left semi-tensor product is
//!
//! ```text
//! A ⋉ B = (A ⊗ I_{p/n}) B     if n | p
//! A ⋉ B = A (B ⊗ I_{n/p})     if p | n
//! ```
//!
//! and coincides with the ordinary product when `n = p`. It is associative,
//! bilinear, and satisfies `(A⋉B)ᵀ = Bᵀ⋉Aᵀ`, so every Riccati formula in this
//! crate reads like its deterministic counterpart with `⋉` in place of the
//! matrix product.
//!
//! [`ltimes`] never materializes the Kronecker factor; it sums directly over
//! the padded index. [`kron`] is kept separate and serves as the reference
//! route in tests.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which divisibility rule a semi-tensor product uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisibilityCase {
    /// `left_cols | right_rows`: the left factor is padded, `(A ⊗ I_k) B`.
    LeftDivides,
    /// `right_rows | left_cols`: the right factor is padded, `A (B ⊗ I_k)`.
    RightDivides,
}

/// Operand shapes of a semi-tensor product and the rule that applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LtimesShape {
    pub left_rows: usize,
    pub left_cols: usize,
    pub right_rows: usize,
    pub right_cols: usize,
    pub divisibility_case: DivisibilityCase,
}

impl LtimesShape {
    pub fn of(a: &Matrix, b: &Matrix) -> Result<Self> {
        let (left_rows, left_cols) = a.shape();
        let (right_rows, right_cols) = b.shape();
        let divisibility_case = if left_cols == right_rows
            || (left_cols > 0 && right_rows % left_cols == 0)
        {
            DivisibilityCase::LeftDivides
        } else if right_rows > 0 && left_cols % right_rows == 0 {
            DivisibilityCase::RightDivides
        } else {
            return Err(Error::Dimension(format!(
                "{left_rows}x{left_cols} ⋉ {right_rows}x{right_cols}: neither inner dimension divides the other"
            )));
        };
        Ok(Self {
            left_rows,
            left_cols,
            right_rows,
            right_cols,
            divisibility_case,
        })
    }

    /// Kronecker padding factor `k` (1 when the inner dimensions agree).
    pub fn padding(&self) -> usize {
        if self.left_cols == self.right_rows {
            return 1;
        }
        match self.divisibility_case {
            DivisibilityCase::LeftDivides => self.right_rows / self.left_cols,
            DivisibilityCase::RightDivides => self.left_cols / self.right_rows,
        }
    }

    pub fn output_shape(&self) -> (usize, usize) {
        let k = self.padding();
        match self.divisibility_case {
            DivisibilityCase::LeftDivides => (self.left_rows * k, self.right_cols),
            DivisibilityCase::RightDivides => (self.left_rows, self.right_cols * k),
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = b.shape();
    Matrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// `a ⊗ I_k` without building the identity.
pub fn kron_identity(a: &Matrix, k: usize) -> Matrix {
    if k == 1 {
        return a.clone();
    }
    Matrix::from_fn(a.rows() * k, a.cols() * k, |i, j| {
        if i % k == j % k {
            a[(i / k, j / k)]
        } else {
            0.0
        }
    })
}

/// Left semi-tensor product `a ⋉ b`.
pub fn ltimes(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let shape = LtimesShape::of(a, b)?;
    let k = shape.padding();
    if k == 1 {
        return Ok(a.matmul(b));
    }
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let out = match shape.divisibility_case {
        // ((A ⊗ I_k) B)[i·k+s, j] = Σ_t A[i,t] B[t·k+s, j]
        DivisibilityCase::LeftDivides => {
            let mut out = Matrix::zeros(m * k, q);
            for i in 0..m {
                for t in 0..n {
                    let a_it = a[(i, t)];
                    if a_it == 0.0 {
                        continue;
                    }
                    for s in 0..k {
                        for j in 0..q {
                            out[(i * k + s, j)] += a_it * b[(t * k + s, j)];
                        }
                    }
                }
            }
            out
        }
        // (A (B ⊗ I_k))[i, j·k+s] = Σ_t A[i, t·k+s] B[t, j]
        DivisibilityCase::RightDivides => {
            let mut out = Matrix::zeros(m, q * k);
            for i in 0..m {
                for t in 0..p {
                    for j in 0..q {
                        let b_tj = b[(t, j)];
                        if b_tj == 0.0 {
                            continue;
                        }
                        for s in 0..k {
                            out[(i, j * k + s)] += a[(i, t * k + s)] * b_tj;
                        }
                    }
                }
            }
            out
        }
    };
    Ok(out)
}

/// Left-to-right semi-tensor product of a chain of factors.
pub fn ltimes_chain(factors: &[&Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Dimension("empty ⋉ chain".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, f| ltimes(&acc, f))
}

/// `A^{⋉k} = A ⋉ A ⋉ … ⋉ A` for `A ∈ ℝ^{rn×n}`.
///
/// `k = 0` is only defined for square `A` and yields the identity.
pub fn ltimes_pow(a: &Matrix, k: usize) -> Result<Matrix> {
    let (rows, cols) = a.shape();
    if cols == 0 || rows % cols != 0 {
        return Err(Error::Dimension(format!(
            "⋉-power needs an rn×n matrix, got {rows}x{cols}"
        )));
    }
    if k == 0 {
        if rows != cols {
            return Err(Error::Dimension(format!(
                "zeroth ⋉-power of non-square {rows}x{cols} matrix"
            )));
        }
        return Ok(Matrix::identity(rows));
    }
    let mut acc = a.clone();
    for _ in 1..k {
        acc = ltimes(&acc, a)?;
    }
    Ok(acc)
}

/// The rn×rn permutation Π with `Πᵀ (X ⊗ I_r) Π = I_r ⊗ X` for all `X ∈ ℝ^{n×n}`.
///
/// Convention: `Π[i·r + a, a·n + i] = 1`. The defining identity does not pin
/// Π down uniquely; this is the perfect shuffle.
pub fn shuffle_perm(n: usize, r: usize) -> Matrix {
    let mut p = Matrix::zeros(n * r, n * r);
    for i in 0..n {
        for a in 0..r {
            p[(i * r + a, a * n + i)] = 1.0;
        }
    }
    p
}

/// The rn×rn permutation Π̃ with `diag(X, X ⊗ I_{r−1}) = Π̃ᵀ (X ⊗ I_r) Π̃`.
///
/// Column `i < n` picks row `i·r`; column `n + i·(r−1) + a` picks row
/// `i·r + a + 1`. For `r = 1` this is `I_n`.
pub fn mixed_shuffle_perm(n: usize, r: usize) -> Result<Matrix> {
    if r == 0 {
        return Err(Error::Dimension("mixed shuffle needs r ≥ 1".into()));
    }
    let mut p = Matrix::zeros(n * r, n * r);
    for i in 0..n {
        p[(i * r, i)] = 1.0;
        for a in 0..r - 1 {
            p[(i * r + a + 1, n + i * (r - 1) + a)] = 1.0;
        }
    }
    Ok(p)
}

/// `1 + r + … + r^{m−1}`.
pub fn geometric_count(r: usize, m: usize) -> usize {
    let mut total = 0;
    let mut term = 1;
    for _ in 0..m {
        total += term;
        term *= r;
    }
    total
}

/// ⋉-block-Toeplitz matrix from `blocks[i] ∈ ℝ^{r^i p1 × p2}`.
///
/// The (i, j) block is `blocks[i−j] ⊗ I_{r^j}` on and below the block
/// diagonal and zero above it; with `r = 1` this is an ordinary lower block
/// Toeplitz matrix.
pub fn toepl(blocks: &[Matrix], r: usize, p1: usize, p2: usize) -> Result<Matrix> {
    if r == 0 {
        return Err(Error::Dimension("toepl needs r ≥ 1".into()));
    }
    let m = blocks.len();
    let mut pow = 1;
    for (i, b) in blocks.iter().enumerate() {
        if b.shape() != (pow * p1, p2) {
            return Err(Error::Dimension(format!(
                "toepl block {i} is {}x{}, expected {}x{p2}",
                b.rows(),
                b.cols(),
                pow * p1
            )));
        }
        pow *= r;
    }
    let count = geometric_count(r, m);
    let mut out = Matrix::zeros(count * p1, count * p2);
    let mut row0 = 0;
    let mut row_pow = 1;
    for i in 0..m {
        let mut col0 = 0;
        let mut col_pow = 1;
        for j in 0..=i {
            out.set_block(row0, col0, &kron_identity(&blocks[i - j], col_pow));
            col0 += col_pow * p2;
            col_pow *= r;
        }
        row0 += row_pow * p1;
        row_pow *= r;
    }
    Ok(out)
}

/// Default relative rank tolerance of [`psd_sqrt_factor`].
pub const DEFAULT_FACTOR_TOL: f64 = 1e-10;

/// Factor `C` with `CᵀC = m` for a symmetric positive semi-definite `m`.
///
/// The rank `l` is the number of eigenvalues above `tol·‖m‖`; eigenvalues in
/// `[−tol·‖m‖·n, tol·‖m‖]` are treated as zero. The rows of `C` are
/// `√λ_k v_kᵀ` in descending eigenvalue order, so a zero matrix yields a
/// `0×n` factor.
pub fn psd_sqrt_factor(m: &Matrix, tol: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "factor of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.frobenius_norm();
    if m.asymmetry() > tol.max(1e-12) * (1.0 + scale) {
        return Err(Error::Shape(format!(
            "factor of non-symmetric matrix (asymmetry {:e})",
            m.asymmetry()
        )));
    }
    let (values, vectors) = m.sym_eigen();
    let floor = -tol * scale * n as f64;
    if let Some(&lo) = values.first() {
        if lo < floor {
            return Err(Error::NotPsd {
                min_eig: lo,
                threshold: floor,
            });
        }
    }
    let keep: Vec<usize> = (0..n).rev().filter(|&k| values[k] > tol * scale).collect();
    Ok(Matrix::from_fn(keep.len(), n, |row, j| {
        let k = keep[row];
        values[k].sqrt() * vectors[(j, k)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn kron_examples() {
        let a = m(&[&[1.0, 2.0]]);
        let b = m(&[&[3.0], &[4.0]]);
        // Expanded by hand: [1·[3;4], 2·[3;4]].
        assert_eq!(kron(&a, &b), m(&[&[3.0, 6.0], &[4.0, 8.0]]));
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(3)), Matrix::identity(6));
        let x = m(&[&[1.0, -2.0], &[0.5, 4.0]]);
        assert_eq!(kron(&Matrix::scalar(1.0), &x), x);
        assert_eq!(kron_identity(&x, 3), kron(&x, &Matrix::identity(3)));
    }

    #[test]
    fn ltimes_examples() {
        assert_eq!(
            ltimes(&Matrix::scalar(2.0), &Matrix::scalar(3.0)).unwrap(),
            Matrix::scalar(6.0)
        );
        let b = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(ltimes(&Matrix::identity(2), &b).unwrap(), b);
        // (A ⊗ I_2) B with A = [1 2], B = e1 + e4: [[1,0,2,0],[0,1,0,2]]·[1,0,0,1]ᵀ.
        let a = m(&[&[1.0, 2.0]]);
        let b = Matrix::column(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ltimes(&a, &b).unwrap(), Matrix::column(&[1.0, 2.0]));
    }

    #[test]
    fn ltimes_matches_kronecker_definition() {
        let a = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let b = Matrix::from_fn(6, 2, |i, j| ((i + 3 * j) % 5) as f64);
        let by_def = kron(&a, &Matrix::identity(3)).matmul(&b);
        assert_eq!(ltimes(&a, &b).unwrap(), by_def);

        let a = Matrix::from_fn(2, 6, |i, j| (i as f64 + 1.0) * (j as f64 - 2.0));
        let b = Matrix::from_fn(2, 3, |i, j| (i + j) as f64 * 0.5);
        let by_def = a.matmul(&kron(&b, &Matrix::identity(3)));
        assert_eq!(ltimes(&a, &b).unwrap(), by_def);
    }

    #[test]
    fn ltimes_rejects_incompatible() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 1);
        assert!(matches!(ltimes(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn ltimes_zero_row_operand() {
        // Empty stochastic part: X ⋉ Â with Â ∈ ℝ^{0×n}.
        let x = Matrix::identity(2);
        let hat = Matrix::zeros(0, 2);
        let prod = ltimes(&x, &hat).unwrap();
        assert_eq!(prod.shape(), (0, 2));
        let quad = ltimes(&hat.transpose(), &prod).unwrap();
        assert_eq!(quad, Matrix::zeros(2, 2));
    }

    #[test]
    fn ltimes_pow_examples() {
        let a = Matrix::column(&[2.0, 3.0]);
        assert_eq!(ltimes_pow(&a, 1).unwrap(), a);
        // (A ⊗ I_2) A = [a0², a0·a1, a1·a0, a1²].
        assert_eq!(
            ltimes_pow(&a, 2).unwrap(),
            Matrix::column(&[4.0, 6.0, 6.0, 9.0])
        );
        let sq = m(&[&[1.0, 1.0], &[0.0, 2.0]]);
        assert_eq!(ltimes_pow(&sq, 2).unwrap(), sq.matmul(&sq));
        assert_eq!(ltimes_pow(&sq, 0).unwrap(), Matrix::identity(2));
        assert!(ltimes_pow(&a, 0).is_err());
        assert!(ltimes_pow(&Matrix::zeros(3, 2), 2).is_err());
        assert_eq!(ltimes_pow(&Matrix::zeros(4, 2), 3).unwrap().shape(), (16, 2));
    }

    #[test]
    fn shuffle_degenerate_cases() {
        assert_eq!(shuffle_perm(1, 4), Matrix::identity(4));
        assert_eq!(shuffle_perm(3, 1), Matrix::identity(3));
        assert_eq!(mixed_shuffle_perm(1, 3).unwrap(), Matrix::identity(3));
        assert_eq!(mixed_shuffle_perm(2, 1).unwrap(), Matrix::identity(2));
        assert!(mixed_shuffle_perm(2, 0).is_err());
    }

    #[test]
    fn mixed_shuffle_identity_on_basis() {
        let (n, r) = (2, 3);
        let p = mixed_shuffle_perm(n, r).unwrap();
        for i in 0..n {
            for j in 0..n {
                let e = Matrix::from_fn(n, n, |a, b| if (a, b) == (i, j) { 1.0 } else { 0.0 });
                let lhs = p.transpose().matmul(&kron(&e, &Matrix::identity(r))).matmul(&p);
                let mut rhs = Matrix::zeros(n * r, n * r);
                rhs.set_block(0, 0, &e);
                rhs.set_block(n, n, &kron(&e, &Matrix::identity(r - 1)));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn toepl_examples() {
        let a0 = m(&[&[1.0, 2.0]]);
        assert_eq!(toepl(std::slice::from_ref(&a0), 2, 1, 2).unwrap(), a0);

        let a1 = m(&[&[3.0, 4.0], &[5.0, 6.0]]);
        let t = toepl(&[a0.clone(), a1.clone()], 2, 1, 2).unwrap();
        let z = Matrix::zeros(1, 4);
        let expected = Matrix::block(&[&[&a0, &z], &[&a1, &kron_identity(&a0, 2)]]).unwrap();
        assert_eq!(t, expected);

        let b = [Matrix::scalar(1.0), Matrix::scalar(2.0), Matrix::scalar(3.0)];
        let t = toepl(&b, 1, 1, 1).unwrap();
        assert_eq!(t, m(&[&[1.0, 0.0, 0.0], &[2.0, 1.0, 0.0], &[3.0, 2.0, 1.0]]));

        assert!(toepl(&[a0, Matrix::zeros(1, 2)], 2, 1, 2).is_err());
    }

    #[test]
    fn psd_factor_examples() {
        let c = psd_sqrt_factor(&Matrix::identity(3), DEFAULT_FACTOR_TOL).unwrap();
        assert!((&c.transpose().matmul(&c) - &Matrix::identity(3)).max_abs() < 1e-14);

        let c = psd_sqrt_factor(&Matrix::zeros(2, 2), DEFAULT_FACTOR_TOL).unwrap();
        assert_eq!(c.shape(), (0, 2));

        let c = psd_sqrt_factor(&Matrix::diagonal(&[2.0, 0.0]), DEFAULT_FACTOR_TOL).unwrap();
        assert_eq!(c.shape(), (1, 2));
        assert!((c[(0, 0)].abs() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c[(0, 1)], 0.0);

        let err = psd_sqrt_factor(&Matrix::diagonal(&[1.0, -0.5]), DEFAULT_FACTOR_TOL);
        assert!(matches!(err, Err(Error::NotPsd { .. })));
        // Tiny negative round-off is clamped.
        let c = psd_sqrt_factor(&Matrix::diagonal(&[1.0, -1e-13]), DEFAULT_FACTOR_TOL).unwrap();
        assert_eq!(c.shape(), (1, 2));
    }
}
