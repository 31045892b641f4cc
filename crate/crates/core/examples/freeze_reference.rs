//! Brute-force Monte Carlo failure probabilities for the catalog benchmarks,
//! with the out-of-domain penalty applied as in the estimators.
//!
//! `cargo run --release -p lbfis-core --example freeze_reference [samples]`

use rayon::prelude::*;

use lbfis::benchmarks::{Benchmark, BenchmarkParams, REFERENCE_SAMPLES, REFERENCE_SEED};
use lbfis::Stream;

fn main() {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse().expect("sample count")).unwrap_or(REFERENCE_SAMPLES);
    for b in [Benchmark::Borehole, Benchmark::BoreholeLow, Benchmark::Synthetic1000, Benchmark::Beam] {
        let spec = b.build::<f64>(&BenchmarkParams::default()).unwrap();
        let stream = Stream::new(REFERENCE_SEED).tagged(b.name());
        let d = spec.dim();
        let (hf, lf, both) = (0..n)
            .into_par_iter()
            .fold(
                || (vec![0.0; d], 0u64, 0u64, 0u64),
                |(mut z, a, c, e), i| {
                    spec.reference().sample_row(&stream, i as usize, &mut z);
                    let h = spec.hf_eval(&z).unwrap() < 0.0;
                    let l = spec.lf_eval(&z).unwrap() < 0.0;
                    (z, a + h as u64, c + l as u64, e + (h && l) as u64)
                },
            )
            .map(|(_, a, c, e)| (a, c, e))
            .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
        let nf = n as f64;
        println!(
            "{:14} P_HF = {:.7} (se {:.1e})  P_LF = {:.7}  P_both = {:.7}",
            b.name(),
            hf as f64 / nf,
            ((hf as f64 / nf) * (1.0 - hf as f64 / nf) / nf).sqrt(),
            lf as f64 / nf,
            both as f64 / nf
        );
    }
}
