//! Tour of the compressors: what each one does to the same vector, the
//! realized error, the invented payload size, and the worst-case bound.
//!
//!     cargo run --example compressor_zoo

use ecgrad::compressors::{compress, eps_bound, payload_bits, CompressorSpec};
use nalgebra::DVector;

fn main() {
    let v = DVector::from_row_slice(&[3.0, -1.25, 0.4, 0.0, -2.6, 1.55]);
    let d = v.len();
    let cap = v.amax();

    let specs = [
        CompressorSpec::Exact,
        CompressorSpec::Rounding { delta: 1.0 },
        CompressorSpec::ScaledSign,
        CompressorSpec::TopK { k: 2 },
        CompressorSpec::EpsBall { eps: 0.5 },
    ];

    println!("input v = {:?}   (|v| = {:.4})", v.as_slice(), v.norm());
    println!();
    println!("{:<14} {:<46} {:>10} {:>8} {:>12}", "compressor", "Q(v)", "error", "bits", "worst case");
    for spec in &specs {
        let r = compress(spec, &v).expect("valid inputs");
        let bound = eps_bound(spec, d, Some(cap))
            .map(|e| format!("{e:.4}"))
            .unwrap_or_else(|| "-".into());
        let rounded: Vec<f64> = r.output.iter().map(|x| (x * 1e4).round() / 1e4).collect();
        println!(
            "{:<14} {:<46} {:>10.4} {:>8} {:>12}",
            spec.label(),
            format!("{rounded:?}"),
            r.error_norm,
            payload_bits(spec, &v),
            bound,
        );
    }

    println!();
    println!("Every compressor is deterministic and satisfies |Q(v) - v| <= worst case;");
    println!("sign and top-k need an entrywise cap on the inputs before a worst case exists.");
}
