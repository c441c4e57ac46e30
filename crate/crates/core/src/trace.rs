//! Code summaries and step-by-step decode traces for inspection.

use rand::Rng;
use serde::Serialize;

use crate::clusters::{contour, extract_clusters, interior};
use crate::code::{sym_diff, Code, QubitId, StabilizerId};
use crate::error::Result;
use crate::graph_builders::{match_ism_2d, match_mwpm_2d, match_random_2d, LabeledPair, Strategy};
use crate::noise_sim::adjudicate;
use crate::postprocess::post_process;
use crate::symmetry::{Location, Site};

#[derive(Clone, Debug, Serialize)]
pub struct CodeSummary {
    pub distance: usize,
    pub qubits: usize,
    pub stabilizers: usize,
    pub weight3_stabilizers: usize,
    /// Qubit lines 0..=d.
    pub lines: Vec<Vec<QubitId>>,
    /// Hook members 1..=d from start to end.
    pub symmetries: Vec<Vec<Site>>,
    pub virtual_chain: Vec<Site>,
}

pub fn code_summary(code: &Code) -> CodeSummary {
    let d = code.distance();
    CodeSummary {
        distance: d,
        qubits: code.num_qubits(),
        stabilizers: code.num_stabilizers(),
        weight3_stabilizers: (0..code.num_stabilizers()).filter(|&s| code.support(s).len() == 3).count(),
        lines: (0..=d).map(|m| code.line(m).iter().map(|&q| code.qubit(q)).collect()).collect(),
        symmetries: (1..=d).map(|a| code.symmetry_members(a).expect("a in range")).collect(),
        virtual_chain: code.virtual_chain(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterTrace {
    pub locations: Vec<Location>,
    pub segments: Vec<usize>,
    pub interior: Vec<QubitId>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodeTrace {
    pub error: Vec<QubitId>,
    pub syndrome: Vec<StabilizerId>,
    pub strategy: Strategy,
    pub pairs: Vec<LabeledPair>,
    pub clusters: Vec<ClusterTrace>,
    /// Correction before post-processing.
    pub matched_correction: Vec<QubitId>,
    pub pp_cycles: usize,
    pub correction: Vec<QubitId>,
    pub failed: bool,
    pub logical_flips: Vec<bool>,
}

/// Decodes the syndrome of `error` under ideal measurements, keeping every
/// intermediate step.
pub fn decode_trace<R: Rng + ?Sized>(
    code: &Code,
    error: &[usize],
    strategy: Strategy,
    pp: bool,
    p: f64,
    rng: &mut R,
) -> Result<DecodeTrace> {
    let ids = |v: &[usize]| v.iter().map(|&q| code.qubit(q)).collect::<Vec<_>>();
    let error = crate::code::reduce_mod2(error.to_vec());
    let syndrome = code.syndrome(&error);
    let m = match strategy {
        Strategy::Mwpm => match_mwpm_2d(code, &syndrome, p)?,
        Strategy::Ism => match_ism_2d(code, &syndrome, p)?,
        Strategy::Random => match_random_2d(code, &syndrome, rng)?,
    };
    let mut clusters = Vec::new();
    let mut matched = Vec::new();
    for cl in extract_clusters(&m)? {
        let c = contour(code, &cl)?;
        let inside = interior(code, &c)?;
        matched = sym_diff(&matched, &inside);
        clusters.push(ClusterTrace { locations: cl.locations, segments: c.segments, interior: ids(&inside) });
    }
    let (correction, pp_cycles) = if pp {
        let r = post_process(code, &matched);
        (r.result, r.cycles)
    } else {
        (matched.clone(), 0)
    };
    let rec = adjudicate(code, &error, &correction)?;
    Ok(DecodeTrace {
        error: ids(&error),
        syndrome: syndrome.iter().map(|&s| code.stabilizer(s)).collect(),
        strategy,
        pairs: m.pairs,
        clusters,
        matched_correction: ids(&matched),
        pp_cycles,
        correction: ids(&correction),
        failed: rec.failed,
        logical_flips: rec.logical_flips,
    })
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    if v.is_empty() {
        return "{}".into();
    }
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl std::fmt::Display for CodeSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "distance {}: {} qubits, {} stabilizers ({} of weight 3)", self.distance, self.qubits, self.stabilizers, self.weight3_stabilizers)?;
        for (m, l) in self.lines.iter().enumerate() {
            writeln!(f, "line {m}: {}", join(l))?;
        }
        for (a, s) in self.symmetries.iter().enumerate() {
            writeln!(f, "symmetry {}: {}", a + 1, join(s))?;
        }
        writeln!(f, "virtual chain: {}", join(&self.virtual_chain))
    }
}

impl std::fmt::Display for DecodeTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "error: {}", join(&self.error))?;
        writeln!(f, "syndrome ({} defects): {}", self.syndrome.len(), join(&self.syndrome))?;
        writeln!(f, "{} matching, {} pairs:", self.strategy, self.pairs.len())?;
        for p in &self.pairs {
            let sym = if p.symmetry == 0 { "chain".to_string() } else { format!("symmetry {}", p.symmetry) };
            writeln!(f, "  {} - {} on {sym}", p.a.site, p.b.site)?;
        }
        for (k, c) in self.clusters.iter().enumerate() {
            let sites: Vec<Site> = c.locations.iter().map(|l| l.site).collect();
            writeln!(f, "cluster {k}: {} locations [{}]", sites.len(), join(&sites))?;
            writeln!(f, "  contour segments: {}", join(&c.segments))?;
            writeln!(f, "  interior: {}", join(&c.interior))?;
        }
        writeln!(f, "matched correction: {}", join(&self.matched_correction))?;
        writeln!(f, "post-processing cycles: {}", self.pp_cycles)?;
        writeln!(f, "correction: {}", join(&self.correction))?;
        writeln!(f, "{}", if self.failed { "logical failure" } else { "decoded correctly" })
    }
}
