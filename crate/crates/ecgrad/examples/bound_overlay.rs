//! Overlay a simulated trajectory with its closed-form bound curve — the
//! data behind a classic "theory vs practice" plot. Direct compression is
//! bounded by rho^k d0 + eps/mu, Hessian-weighted compensation by
//! rho^k d0 + gamma eps; both runs obey their curve at every iterate.
//!
//!     cargo run --example bound_overlay

use ecgrad::compressors::eps_bound;
use ecgrad::config::{load_source, ExperimentConfig, RawConfig};
use ecgrad::schemes::{SchemeKind, Weighting};
use ecgrad::simulation::run;
use ecgrad::theory::{thm1_bound, thm5_bound, BoundInputs};

fn main() -> ecgrad::Result<()> {
    let config = ExperimentConfig::from_raw(&RawConfig::parse(&load_source("preset:bounds-demo")?)?)?;
    let problem = config.build_problem()?;
    let constants = problem.constants()?;

    let mut inputs = BoundInputs::from_constants(&constants);
    inputs.eps = eps_bound(&config.compressor, problem.dim(), None).expect("input-independent compressor");
    inputs.k = config.iters;

    println!(
        "d = {}, kappa = {:.1}, compressor = {}, gamma = 1/L",
        problem.dim(),
        constants.kappa,
        config.compressor.label()
    );
    println!();
    println!("{:>4} {:>13} {:>13} {:>13} {:>13}", "k", "direct", "thm1 bound", "ec:hessian", "thm5 bound");

    let mut curves = Vec::new();
    for kind in [SchemeKind::Direct, SchemeKind::ErrorCompensated(Weighting::Hessian)] {
        let rc = config.run_config(&problem, kind.clone())?;
        let trace = run(&problem, &rc)?;
        inputs.gamma = rc.scheme.gamma;
        inputs.x0_dist = trace.rows[0].dist.unwrap();
        let bound = match kind {
            SchemeKind::Direct => thm1_bound(&inputs)?,
            _ => thm5_bound(&inputs)?,
        };
        curves.push((trace, bound));
    }
    for k in (0..=config.iters).step_by(10) {
        println!(
            "{:>4} {:>13.5e} {:>13.5e} {:>13.5e} {:>13.5e}",
            k,
            curves[0].0.rows[k].dist.unwrap(),
            curves[0].1.values[k],
            curves[1].0.rows[k].dist.unwrap(),
            curves[1].1.values[k],
        );
    }
    println!();
    println!(
        "floors:  thm1 eps/mu = {:.4}   thm5 gamma*eps = {:.4}",
        curves[0].1.floor, curves[1].1.floor
    );
    println!("(the bounds subcommand writes the same curves as CSV: ecgrad bounds --config preset:bounds-demo)");
    Ok(())
}
