//! The scalar worst case: directly compressed gradient descent on
//! f(x) = (mu/2) x^2 with the eps-ball compressor stalls at exactly eps/mu,
//! matching the closed-form trajectory digit for digit. This is the lower
//! bound that makes the direct-compression floor tight.
//!
//!     cargo run --example scalar_lower_bound

use ecgrad::config::{load_source, ExperimentConfig, RawConfig};
use ecgrad::simulation::run;
use ecgrad::theory::example3_trajectory;

fn main() -> ecgrad::Result<()> {
    let config = ExperimentConfig::from_raw(&RawConfig::parse(&load_source("preset:scalar-example")?)?)?;
    let problem = config.build_problem()?;
    let trace = run(&problem, &config.run_config(&problem, config.scheme.clone())?)?;

    // mu = 2, gamma = 0.4, eps = 0.3, x0 = 1.7 — the preset's parameters
    let reference = example3_trajectory(2.0, 0.4, 0.3, 1.7, config.iters)?;

    println!("{:>4} {:>16} {:>16} {:>12}", "k", "simulated |x|", "closed form", "|diff|");
    for (row, want) in trace.rows.iter().zip(&reference.values).step_by(10) {
        let got = row.dist.unwrap();
        println!("{:>4} {:>16.12} {:>16.12} {:>12.2e}", row.k, got, want, (got - want).abs());
    }
    println!();
    println!("floor eps/mu = {}; the trajectory approaches it from above and", reference.dist_floor);
    println!("never crosses: min dist = {}", trace.rows.iter().map(|r| r.dist.unwrap()).fold(f64::INFINITY, f64::min));
    Ok(())
}
