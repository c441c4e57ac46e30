//! Decoder failure rate next to the lower bound that no decoder can beat
//! (errors covering at least half of some qubit line), on identical error
//! samples.
//!
//!     cargo run --release --example lower_bound -- 11 20000

use paritydec::experiments::{lower_bound_point, run_point, PointConfig};
use paritydec::graph_builders::Strategy;

fn main() -> paritydec::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let d = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(11);
    let trials: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    println!("d={d}, {trials} trials per point");
    println!("{:>6} {:>10} {:>10} {:>7}", "p", "decoder", "bound", "ratio");
    for p in [0.05, 0.08, 0.10, 0.12, 0.15, 0.20] {
        let cfg = PointConfig::code_capacity(d, p, Strategy::Mwpm, true, trials, 5);
        let dec = run_point(&cfg)?;
        let lb = lower_bound_point(&cfg)?;
        let ratio = if lb.failures > 0 { dec.failure_rate / lb.failure_rate } else { f64::NAN };
        println!("{p:>6.2} {:>10.5} {:>10.5} {:>7.3}", dec.failure_rate, lb.failure_rate, ratio);
    }
    Ok(())
}
