//! Continuous equation solved through the Cayley bridge, compared across γ.

use stp_riccati::model::reduce_scare;
use stp_riccati::scare::{cayley_ssf1, gamma_candidates};
use stp_riccati::{solve_scare_instance, Matrix, ProblemData, Result, ScareInstance, SolveOptions};

fn main() -> Result<()> {
    // 2ax + a₁²x + 1 − x² = 0 with a = −2, a₁ = 0.5 has root 0.25.
    let inst = ScareInstance::new(ProblemData {
        a: vec![Matrix::scalar(-2.0), Matrix::scalar(0.5)],
        b: vec![Matrix::scalar(1.0), Matrix::scalar(0.0)],
        q: Matrix::scalar(1.0),
        l: Matrix::scalar(0.0),
        r: Matrix::scalar(1.0),
    })?;
    let std = reduce_scare(&inst)?;
    let data = cayley_ssf1(&std, 1.0)?;
    println!("γ = 1: E = {:?}, G = {:?}, H = {:?}", data.e.as_slice(), data.g.to_rows(), data.h.as_slice());

    for gamma in gamma_candidates(&std, 4, 0) {
        let opts = SolveOptions {
            gamma: Some(gamma),
            ..Default::default()
        };
        let sol = solve_scare_instance(&inst, &opts)?;
        println!(
            "γ = {gamma:.4}: X = {:.15}, residual {:.1e}, ρ_F = {:?}",
            sol.x[(0, 0)],
            sol.report.residual_original.unwrap_or(f64::NAN),
            sol.report.rate_bound
        );
    }
    Ok(())
}
