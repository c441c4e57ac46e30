//! Code-capacity failure-rate curves for several distances and the
//! crossing points of neighbouring curves.
//!
//!     cargo run --release --example threshold_scan -- mwpm on 3000

use paritydec::experiments::{estimate_threshold, run_curve, PointConfig};
use paritydec::graph_builders::Strategy;

fn main() -> paritydec::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let strategy: Strategy = args.get(1).map(String::as_str).unwrap_or("mwpm").parse()?;
    let pp = args.get(2).map(String::as_str).unwrap_or("on") == "on";
    let trials: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let ds = [5, 7, 9, 11];
    let ps: Vec<f64> = if pp { vec![0.20, 0.24, 0.28, 0.32, 0.36, 0.40] } else { vec![0.08, 0.12, 0.16, 0.20, 0.24] };

    let mut curves = Vec::new();
    for d in ds {
        let grid: Vec<PointConfig> = ps.iter().map(|&p| PointConfig::code_capacity(d, p, strategy, pp, trials, 11)).collect();
        let curve = run_curve(&grid)?;
        let rates: Vec<String> = curve.iter().map(|c| format!("{:.3}", c.failure_rate)).collect();
        println!("d={d:<3} {}", rates.join(" "));
        curves.push(curve);
    }
    for w in curves.windows(2) {
        match estimate_threshold(&w[0], &w[1]) {
            Ok(t) => println!("({}, {}) cross at p = {:.3} +- {:.3}", t.d_low, t.d_high, t.p_cross, t.std_err),
            Err(e) => println!("({}, {}) {e}", w[0][0].d, w[1][0].d),
        }
    }
    Ok(())
}
