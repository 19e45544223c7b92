//! Generate an instance file, solve it, write a result file and verify it.

use stp_riccati::diagnostics::certify_stabilizing;
use stp_riccati::io::{gen_instance, load_instance, save_instance, InstanceKind, ResultFile};
use stp_riccati::{solve_instance, Result, SolveMethod, SolveOptions};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("riccati-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("scare.json");
    let output = dir.join("scare.out.json");

    save_instance(&input, &gen_instance(InstanceKind::Scare, 4, 2, 3, 11)?)?;
    let inst = load_instance(&input)?;
    let opts = SolveOptions {
        method: SolveMethod::Doubling,
        ..Default::default()
    };
    let sol = solve_instance(&inst, &opts)?;
    let bytes = std::fs::read(&input)?;
    ResultFile::new(InstanceKind::Scare, true, &sol.x, Some(&sol.f), sol.report.clone(), &bytes).save(&output)?;

    let reloaded = ResultFile::load(&output)?;
    let (stable, abscissa) = certify_stabilizing(inst.data(), &sol.x, inst.kind())?;
    println!("method {:?}, γ = {:?}", reloaded.report.method, reloaded.report.gamma);
    println!("residual {:.2e}", reloaded.report.residual_original.unwrap_or(f64::NAN));
    println!("stabilizing {stable} (abscissa {abscissa:.3})");
    println!("input hash {}", reloaded.input_hash);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
