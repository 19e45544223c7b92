//! Left semi-tensor product, shuffle permutations and ⋉-block-Toeplitz matrices.

use stp_riccati::stp::{kron, ltimes, ltimes_pow, mixed_shuffle_perm, shuffle_perm, toepl, LtimesShape};
use stp_riccati::{Matrix, Result};

fn main() -> Result<()> {
    let a = Matrix::from_rows(&[[1.0, 2.0]])?;
    let b = Matrix::column(&[1.0, 0.0, 0.0, 1.0]);
    let shape = LtimesShape::of(&a, &b)?;
    println!("[1 2] ⋉ [1 0 0 1]ᵀ has shape {:?} ({:?})", shape.output_shape(), shape.divisibility_case);
    println!("{:?}", ltimes(&a, &b)?.to_rows());

    let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])?;
    let p = shuffle_perm(2, 3);
    let moved = p.transpose().matmul(&kron(&x, &Matrix::identity(3))).matmul(&p);
    println!("Πᵀ(X⊗I₃)Π == I₃⊗X: {}", moved == kron(&Matrix::identity(3), &x));

    let pt = mixed_shuffle_perm(2, 3)?;
    let split = pt.transpose().matmul(&kron(&x, &Matrix::identity(3))).matmul(&pt);
    println!("Π̃ᵀ(X⊗I₃)Π̃ top-left block: {:?}", split.submatrix(0, 0, 2, 2).to_rows());

    let col = Matrix::column(&[0.5, 0.25]);
    println!("[0.5 0.25]ᵀ^⋉3 = {:?}", ltimes_pow(&col, 3)?.as_slice());

    let blocks = [Matrix::scalar(1.0), Matrix::column(&[2.0, 3.0])];
    println!("toepl with r = 2:\n{:?}", toepl(&blocks, 2, 1, 1)?.to_rows());
    Ok(())
}
