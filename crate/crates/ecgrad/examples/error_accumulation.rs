//! Why the weighting matters: on the same quadratic run, decompose the
//! iterate error into transient + latest compression error + accumulated
//! history. Hessian weighting zeroes the history term exactly; identity
//! weighting (classic error feedback) lets it grow to the size of the floor
//! itself.
//!
//!     cargo run --example error_accumulation

use ecgrad::compressors::CompressorSpec;
use ecgrad::problems::{OracleMode, Problem, QuadraticProblem};
use ecgrad::schemes::{
    accumulation_diagnostic, ec_step, SchemeConfig, SchemeKind, Weighting, WorkerState,
};
use nalgebra::{DMatrix, DVector};

fn history_norms(
    q: &QuadraticProblem,
    weighting: Weighting,
    gamma: f64,
    iters: u64,
) -> ecgrad::Result<Vec<f64>> {
    let problem = Problem::Quadratic(q.clone());
    let compressor = CompressorSpec::Rounding { delta: 1.0 };
    let scheme = SchemeConfig::new(SchemeKind::ErrorCompensated(weighting), gamma)?;
    let mut x = DVector::from_row_slice(&[6.0, -4.0]);
    let mut workers = vec![WorkerState::new(2, 0)];
    let mut xs = vec![x.clone()];
    let mut errors = vec![DVector::zeros(2)];
    for k in 0..iters {
        let report = ec_step(&x, &mut workers, &problem, &compressor, &scheme, &OracleMode::Deterministic, k)?;
        x = report.x_next;
        xs.push(x.clone());
        errors.push(workers[0].error_memory.clone());
    }
    Ok(accumulation_diagnostic(q, gamma, weighting, &xs, &errors)?
        .iter()
        .map(DVector::norm)
        .collect())
}

fn main() -> ecgrad::Result<()> {
    let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.25]);
    let q = QuadraticProblem::new(h, DVector::from_row_slice(&[1.0, -0.5]))?;
    let gamma = 0.3;

    let hessian = history_norms(&q, Weighting::Hessian, gamma, 500)?;
    let identity = history_norms(&q, Weighting::Identity, gamma, 500)?;

    println!("accumulated-history term |acc^k| (rounding compressor, delta = 1, gamma = {gamma})");
    println!("{:>5} {:>16} {:>16}", "k", "hessian", "identity");
    for k in [0, 1, 5, 20, 100, 250, 500] {
        println!("{:>5} {:>16.3e} {:>16.3e}", k, hessian[k], identity[k]);
    }
    println!();
    println!(
        "max over the run:  hessian {:.3e}   identity {:.3e}",
        hessian.iter().cloned().fold(0.0, f64::max),
        identity.iter().cloned().fold(0.0, f64::max),
    );
    println!("Hessian weighting keeps the identity exact; plain error feedback does not.");
    Ok(())
}
