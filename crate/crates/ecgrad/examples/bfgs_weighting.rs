//! Hessian-free compensation: when Hessian-vector products are too expensive
//! or unavailable, a BFGS model built from the gradients already in hand can
//! stand in for the true curvature in the error weighting. On a quadratic
//! the secant model converges to H and the floor approaches the exact
//! Hessian weighting's; the diagonal approximation sits in between.
//!
//!     cargo run --example bfgs_weighting

use ecgrad::config::{ExperimentConfig, RawConfig};
use ecgrad::simulation::{compare, empirical_floor, Metric};

fn main() -> ecgrad::Result<()> {
    let raw = RawConfig::parse(
        "problem = quad-kappa\nd = 12\nkappa = 80\nproblem_seed = 4\n\
         compressor = rounding:0.2\nschemes = direct,ec:identity,ec:diag,ec:bfgs,ec:hessian\n\
         gamma_rule = 1/L\niters = 2000\nx0 = slow:3.0\n",
    )?;
    let config = ExperimentConfig::from_raw(&raw)?;
    let problem = config.build_problem()?;

    let configs = config
        .schemes
        .iter()
        .map(|kind| config.run_config(&problem, kind.clone()))
        .collect::<ecgrad::Result<Vec<_>>>()?;
    let comparison = compare(&problem, &configs)?;

    println!("d = 12, kappa = 80, rounding compressor; which curvature model feeds the weighting?");
    println!();
    println!("{:<14} {:>14} {:>14}", "scheme", "dist floor", "vs direct");
    let direct_floor = comparison.entries[0].floor_dist.unwrap();
    for entry in &comparison.entries {
        let floor = entry.floor_dist.unwrap();
        println!("{:<14} {:>14.4e} {:>13.1}x", entry.trace.scheme_label, floor, direct_floor / floor);
    }

    // the BFGS model needs some history before it pays off: compare the
    // floor of the first tenth of the run against the last tenth
    let trace = &comparison.entries[3].trace;
    let dist = trace.column(Metric::Dist).unwrap();
    let early = empirical_floor(&dist[..dist.len() / 10], 1.0)?;
    let late = empirical_floor(&dist, 0.1)?;
    println!();
    println!("ec:bfgs mean dist, first tenth {early:.3e} -> last tenth {late:.3e}");
    println!("(the secant model needs iterates to learn curvature; the floor tightens as it does)");
    Ok(())
}
