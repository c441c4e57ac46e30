//! Compares MWPM, independent-symmetry and random matching on the same
//! random errors: total matching length and failure counts, with and
//! without post-processing.
//!
//!     cargo run --release --example matching_strategies -- 9 0.15 2000

use paritydec::graph_builders::{match_ism_2d, match_mwpm_2d, match_random_2d, Strategy};
use paritydec::noise_sim::{adjudicate, decode_2d, sample_error, trial_rng};
use paritydec::Code;

fn main() -> paritydec::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let d = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(9);
    let p: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.15);
    let trials: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let code = Code::new(d)?;

    let mut length = [0.0; 3];
    let mut failures = [[0u64; 2]; 3];
    let strategies = [Strategy::Mwpm, Strategy::Ism, Strategy::Random];
    for t in 0..trials {
        let mut rng = trial_rng(1, t);
        let e = sample_error(&code, p, &mut rng);
        let s = code.syndrome(&e);
        length[0] += match_mwpm_2d(&code, &s, p)?.cost(&code, 1.0);
        length[1] += match_ism_2d(&code, &s, p)?.cost(&code, 1.0);
        length[2] += match_random_2d(&code, &s, &mut rng)?.cost(&code, 1.0);
        for (k, strategy) in strategies.iter().enumerate() {
            for pp in [false, true] {
                let dec = decode_2d(&code, p, *strategy, pp, &s, &mut rng)?;
                failures[k][pp as usize] += adjudicate(&code, &e, &dec.correction)?.failed as u64;
            }
        }
    }
    println!("d={d} p={p} trials={trials}");
    println!("{:<8} {:>12} {:>12} {:>12}", "strategy", "avg length", "fail (raw)", "fail (pp)");
    for (k, s) in strategies.iter().enumerate() {
        println!(
            "{:<8} {:>12.2} {:>12.4} {:>12.4}",
            s.to_string(),
            length[k] / trials as f64,
            failures[k][0] as f64 / trials as f64,
            failures[k][1] as f64 / trials as f64
        );
    }
    Ok(())
}
