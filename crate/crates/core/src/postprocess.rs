//! 1-line post-processing: while some qubit line carries at least
//! ceil((d+1)/2) correction qubits, flipping the whole line gives a lighter
//! correction with the same syndrome.

use serde::Serialize;

use crate::clusters::SpacetimeCorrection;
use crate::code::Code;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PostProcessReport {
    pub result: Vec<usize>,
    pub cycles: usize,
}

pub fn line_threshold(code: &Code) -> usize {
    (code.distance() + 1).div_ceil(2)
}

/// Overlap of `c` with every line 0..=d.
pub fn line_overlaps(code: &Code, c: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; code.distance() + 1];
    for &q in c {
        for m in code.lines_through(q) {
            counts[m] += 1;
        }
    }
    counts
}

/// Flips the line with the largest overlap (smallest index on ties) until
/// every overlap is below threshold. Each flip removes at least one qubit.
pub fn post_process(code: &Code, c: &[usize]) -> PostProcessReport {
    let thr = line_threshold(code);
    let mut inside = vec![false; code.num_qubits()];
    for &q in c {
        inside[q] ^= true;
    }
    let mut counts = vec![0usize; code.distance() + 1];
    for q in (0..inside.len()).filter(|&q| inside[q]) {
        for m in code.lines_through(q) {
            counts[m] += 1;
        }
    }
    let mut cycles = 0;
    loop {
        let (m, &best) = counts.iter().enumerate().rev().max_by_key(|(_, &k)| k).unwrap();
        if best < thr {
            break;
        }
        for &q in code.line(m) {
            let delta: isize = if inside[q] { -1 } else { 1 };
            inside[q] ^= true;
            for l in code.lines_through(q) {
                counts[l] = (counts[l] as isize + delta) as usize;
            }
        }
        cycles += 1;
    }
    PostProcessReport { result: (0..inside.len()).filter(|&q| inside[q]).collect(), cycles }
}

/// Post-processes every round of a spacetime correction on its own.
pub fn post_process_slices(code: &Code, c3d: &SpacetimeCorrection) -> (SpacetimeCorrection, usize) {
    let mut cycles = 0;
    let slices = c3d
        .slices
        .iter()
        .map(|s| {
            let r = post_process(code, s);
            cycles += r.cycles;
            r.result
        })
        .collect();
    (SpacetimeCorrection::from_slices(slices), cycles)
}
