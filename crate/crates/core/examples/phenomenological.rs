//! Repeated noisy syndrome measurement: injects one measurement error and
//! one data error, shows the detectors and the decoded correction, then
//! estimates failure rates at p = q for a few distances.
//!
//!     cargo run --release --example phenomenological -- 0.03 500

use paritydec::experiments::{run_point, PointConfig};
use paritydec::graph_builders::Strategy;
use paritydec::noise_sim::{decode_3d, run_rounds_with, trial_rng, Injection};
use paritydec::{Code, NoiseConfig, QubitId, StabilizerId};

fn main() -> paritydec::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.03);
    let trials: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);

    let code = Code::new(5)?;
    let quiet = NoiseConfig::phenomenological(0.0, 0.0, 5)?;
    let s = code.stabilizer_index(StabilizerId::new(2, 4))?;
    let q = code.qubit_index(QubitId::new(3, 5))?;
    let inject = Injection { data: vec![(1, q)], measurement: vec![(2, s)] };
    let (dets, error) = run_rounds_with(&code, &quiet, &inject, &mut trial_rng(0, 0))?;
    println!("detectors:");
    for det in &dets {
        println!("  round {} {}", det.round, code.stabilizer(det.stabilizer));
    }
    let weights = NoiseConfig::phenomenological(0.05, 0.05, 5)?;
    let dec = decode_3d(&code, &weights, Strategy::Mwpm, true, &dets)?;
    let show = |v: &[usize]| v.iter().map(|&q| code.qubit(q).to_string()).collect::<Vec<_>>().join(" ");
    println!("true error {}, cumulative correction {}\n", show(&error), show(&dec.correction));

    println!("p = q = {p}, rounds = d, {trials} trials");
    for strategy in [Strategy::Ism, Strategy::Mwpm] {
        for d in [5, 7, 9] {
            let pt = run_point(&PointConfig::phenomenological(d, p, strategy, true, trials, 3))?;
            println!(
                "  {strategy:<5} d={d:<3} failure rate {:.4} [{:.4}, {:.4}]",
                pt.failure_rate, pt.ci_low, pt.ci_high
            );
        }
    }
    Ok(())
}
