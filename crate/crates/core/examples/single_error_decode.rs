//! Decodes a few hand-picked errors and prints every step: syndrome,
//! matched pairs, clusters with their contours, and the correction.
//!
//!     cargo run --example single_error_decode -- 5 q2.4 base1

use paritydec::graph_builders::Strategy;
use paritydec::noise_sim::trial_rng;
use paritydec::trace::decode_trace;
use paritydec::{Code, QubitId};

fn main() -> paritydec::Result<()> {
    let mut args = std::env::args().skip(1);
    let d = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let code = Code::new(d)?;
    let mut names: Vec<String> = args.collect();
    if names.is_empty() {
        names = vec!["q2.4".into(), "base1".into(), format!("q1.{d}")];
    }
    for name in &names {
        let q = code.qubit_index(name.parse::<QubitId>()?)?;
        println!("== {name} ==");
        let t = decode_trace(&code, &[q], Strategy::Mwpm, true, 0.1, &mut trial_rng(0, 0))?;
        print!("{t}");
        println!();
    }

    // two neighbouring qubits of line 1 form one cluster reaching the chain
    let pair = [code.line(1)[0], code.line(1)[1]];
    let t = decode_trace(&code, &pair, Strategy::Ism, true, 0.1, &mut trial_rng(0, 0))?;
    println!("== two qubits of line 1 (ism) ==");
    print!("{t}");
    Ok(())
}
