//! Closed-form t-th fixed-point iterate from the ⋉-block-Toeplitz representation.

use stp_riccati::io::{gen_instance, InstanceKind};
use stp_riccati::model::reduce_sdare;
use stp_riccati::sdare::{fp_step, toeplitz_iterate, DEFAULT_CAP};
use stp_riccati::{Instance, Matrix, Result};

fn main() -> Result<()> {
    let Instance::Sdare(inst) = gen_instance(InstanceKind::Sdare, 2, 1, 2, 3)?.to_instance()? else {
        unreachable!()
    };
    let std = reduce_sdare(&inst)?;
    let gram = std.gram();
    let mut x = Matrix::zeros(std.n, std.n);
    for t in 1..=6 {
        x = fp_step(&gram, &x)?;
        let closed = toeplitz_iterate(&std, t, DEFAULT_CAP)?;
        println!("t = {t}: ‖X_t(closed) − X_t(iterated)‖ = {:.2e}", (&closed - &x).frobenius_norm());
    }
    Ok(())
}
