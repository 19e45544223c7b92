//! Fixed-point solve of a generated SDARE with convergence diagnostics.

use stp_riccati::io::{gen_instance, InstanceKind};
use stp_riccati::{solve_instance, Result, SolveOptions};

fn main() -> Result<()> {
    let inst = gen_instance(InstanceKind::Sdare, 3, 2, 2, 42)?.to_instance()?;
    let sol = solve_instance(&inst, &SolveOptions::default())?;
    let rep = &sol.report;
    println!("X = {:?}", sol.x.to_rows());
    println!("F = {:?}", sol.f.to_rows());
    println!("iterations          {}", rep.iterations);
    println!("original residual   {:.2e}", rep.residual_original.unwrap_or(f64::NAN));
    println!("min increment eig   {:.2e}", rep.min_increment_eig.unwrap_or(f64::NAN));
    println!("empirical rate      {:?}", rep.rate_empirical);
    println!("rate bound          {:?}", rep.rate_bound);
    println!("stabilizing         {:?} (ρ = {:?})", rep.stabilizing, rep.stability_value);
    for h in rep.history.iter().take(5) {
        println!("  t = {:2}  ‖ΔX‖ = {:.3e}", h.t, h.increment);
    }
    Ok(())
}
