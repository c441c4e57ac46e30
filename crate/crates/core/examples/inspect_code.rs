//! Prints the code tables for a small distance: qubit lines, hooks, the
//! virtual chain and a few syndromes.
//!
//!     cargo run --example inspect_code -- 5

use paritydec::trace::code_summary;
use paritydec::{Code, QubitId};

fn main() -> paritydec::Result<()> {
    let d = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let code = Code::new(d)?;
    print!("{}", code_summary(&code));

    println!("\nstabilizer supports:");
    for s in code.stabilizers() {
        let sup: Vec<String> = code.stabilizer_support(*s)?.iter().map(|q| q.to_string()).collect();
        println!("  {s}: {}", sup.join(" "));
    }

    println!("\nsingle-qubit syndromes:");
    for q in [QubitId::base(1), QubitId::new(1, d), QubitId::new(2, d - 1)] {
        let s = code.syndrome_ids(&[q])?;
        let s: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        println!("  {q}: {}", s.join(" "));
    }

    // every line is a logical operator: no syndrome, and line 0 flips all d logicals
    for m in 0..=d {
        assert!(code.syndrome(code.line(m)).is_empty());
    }
    println!("\nline 0 decomposes as {:?}", code.decompose_residual(code.line(0))?);
    Ok(())
}
