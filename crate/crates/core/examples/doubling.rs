//! Doubling iteration: H_k tracks X_{2^k}, symplectic structure is kept, and
//! the row cap hands over to fixed-point refinement.

use stp_riccati::io::{gen_instance, InstanceKind};
use stp_riccati::model::reduce_sdare;
use stp_riccati::sdare::{doubling_step, fp_step, solve_gram, symplectic_defect, DoublingState, DEFAULT_CAP};
use stp_riccati::{Instance, Matrix, Result};

fn main() -> Result<()> {
    let Instance::Sdare(inst) = gen_instance(InstanceKind::Sdare, 2, 1, 2, 5)?.to_instance()? else {
        unreachable!()
    };
    let gram = reduce_sdare(&inst)?.gram();
    let mut state = DoublingState::initial(&gram);
    let mut x = fp_step(&gram, &Matrix::zeros(2, 2))?;
    let mut t = 1;
    while state.next_row_dim() <= DEFAULT_CAP {
        state = doubling_step(&state, DEFAULT_CAP)?;
        while t < 1 << state.k {
            x = fp_step(&gram, &x)?;
            t += 1;
        }
        println!(
            "k = {}: rows {:4}, ‖H_k − X_{t}‖ = {:.2e}, symplectic defect {:.2e}",
            state.k,
            state.row_dim,
            (&state.h - &x).frobenius_norm(),
            symplectic_defect(&state)
        );
    }

    let (_, report) = solve_gram(&gram, true, 1e-12, 1000, 64)?;
    println!(
        "cap 64: {} doubling steps, {} total iterations, cap limited: {}",
        report.doubling_steps, report.iterations, report.cap_limited
    );
    Ok(())
}
