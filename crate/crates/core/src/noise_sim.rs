//! Noise sampling, repeated syndrome measurement, the end-to-end decoder and
//! failure adjudication.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clusters::{correction_2d, correction_3d};
use crate::code::{sym_diff, Code};
use crate::error::{internal, invalid, Error, Result};
use crate::graph_builders::{
    match_ism_2d, match_ism_3d, match_mwpm_2d, match_mwpm_3d, match_random_2d, Detector, Strategy,
};
use crate::postprocess::{line_overlaps, line_threshold, post_process, post_process_slices};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    CodeCapacity,
    Phenomenological,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Model::CodeCapacity => "code-capacity",
            Model::Phenomenological => "phenomenological",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-capacity" => Ok(Model::CodeCapacity),
            "phenomenological" => Ok(Model::Phenomenological),
            _ => Err(invalid(format!("unknown noise model {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseConfig {
    pub model: Model,
    /// Data flip probability (per round when phenomenological).
    pub p: f64,
    /// Measurement flip probability; the last round is always ideal.
    pub q: f64,
    pub rounds: usize,
}

impl NoiseConfig {
    pub fn code_capacity(p: f64) -> Result<Self> {
        let cfg = NoiseConfig { model: Model::CodeCapacity, p, q: 0.0, rounds: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn phenomenological(p: f64, q: f64, rounds: usize) -> Result<Self> {
        let cfg = NoiseConfig { model: Model::Phenomenological, p, q, rounds };
        cfg.validate()?;
        Ok(cfg)
    }

    /// p = 0 is accepted so that single-fault injections can run noiselessly;
    /// decoding still needs p > 0 for its weights.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.p) {
            return Err(invalid(format!("p={} must lie in [0, 0.5)", self.p)));
        }
        match self.model {
            Model::CodeCapacity if self.q != 0.0 || self.rounds != 1 => {
                Err(invalid("code-capacity noise has q = 0 and a single round"))
            }
            Model::Phenomenological if !(0.0..0.5).contains(&self.q) => {
                Err(invalid(format!("q={} must lie in [0, 0.5)", self.q)))
            }
            Model::Phenomenological if self.rounds == 0 => Err(invalid("rounds must be >= 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub failed: bool,
    pub logical_flips: Vec<bool>,
    pub pp_cycles: usize,
    pub defect_count: usize,
}

/// Independent generator for one trial: the master seed picks the key,
/// the trial index picks the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// I.i.d. flips, sorted qubit indices.
pub fn sample_error<R: Rng + ?Sized>(code: &Code, p: f64, rng: &mut R) -> Vec<usize> {
    (0..code.num_qubits()).filter(|_| rng.gen_bool(p)).collect()
}

/// Deterministic faults added on top of the sampled noise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Injection {
    /// (round, qubit) data flips, applied before that round's measurement.
    pub data: Vec<(usize, usize)>,
    /// (round, stabilizer) flipped outcomes.
    pub measurement: Vec<(usize, usize)>,
}

pub fn run_rounds<R: Rng + ?Sized>(code: &Code, cfg: &NoiseConfig, rng: &mut R) -> Result<(Vec<Detector>, Vec<usize>)> {
    run_rounds_with(code, cfg, &Injection::default(), rng)
}

/// Phenomenological noise: before every round each qubit flips with
/// probability p, then every stabilizer of the accumulated error is measured
/// and its outcome flipped with probability q (never in the last round).
/// A detector fires where an outcome differs from the previous round; before
/// round 0 all outcomes are +1.
pub fn run_rounds_with<R: Rng + ?Sized>(
    code: &Code,
    cfg: &NoiseConfig,
    inject: &Injection,
    rng: &mut R,
) -> Result<(Vec<Detector>, Vec<usize>)> {
    cfg.validate()?;
    if cfg.model != Model::Phenomenological {
        return Err(invalid("run_rounds needs the phenomenological model"));
    }
    let (n, m) = (code.num_qubits(), code.num_stabilizers());
    for &(t, q) in &inject.data {
        if t >= cfg.rounds || q >= n {
            return Err(invalid(format!("injected data flip ({t}, {q}) out of range")));
        }
    }
    for &(t, s) in &inject.measurement {
        if t >= cfg.rounds || s >= m {
            return Err(invalid(format!("injected measurement flip ({t}, {s}) out of range")));
        }
    }
    let mut error = vec![false; n];
    let mut syndrome = vec![false; m];
    let mut previous = vec![false; m];
    let mut detectors = Vec::new();
    let flip = |q: usize, error: &mut Vec<bool>, syndrome: &mut Vec<bool>| {
        error[q] ^= true;
        for &s in code.incident(q) {
            syndrome[s] ^= true;
        }
    };
    for t in 0..cfg.rounds {
        for q in 0..n {
            if cfg.p > 0.0 && rng.gen_bool(cfg.p) {
                flip(q, &mut error, &mut syndrome);
            }
        }
        for &(_, q) in inject.data.iter().filter(|(r, _)| *r == t) {
            flip(q, &mut error, &mut syndrome);
        }
        let last = t + 1 == cfg.rounds;
        let mut outcome = syndrome.clone();
        if !last && cfg.q > 0.0 {
            for o in outcome.iter_mut() {
                if rng.gen_bool(cfg.q) {
                    *o ^= true;
                }
            }
        }
        for &(_, s) in inject.measurement.iter().filter(|(r, _)| *r == t) {
            outcome[s] ^= true;
        }
        for s in 0..m {
            if outcome[s] != previous[s] {
                detectors.push(Detector { round: t, stabilizer: s });
            }
        }
        previous = outcome;
    }
    Ok((detectors, (0..n).filter(|&q| error[q]).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decoded {
    pub correction: Vec<usize>,
    pub pp_cycles: usize,
}

/// Ideal-measurement decoding of a syndrome.
pub fn decode_2d<R: Rng + ?Sized>(
    code: &Code,
    p: f64,
    strategy: Strategy,
    pp: bool,
    syndrome: &[usize],
    rng: &mut R,
) -> Result<Decoded> {
    let m = match strategy {
        Strategy::Mwpm => match_mwpm_2d(code, syndrome, p)?,
        Strategy::Ism => match_ism_2d(code, syndrome, p)?,
        Strategy::Random => match_random_2d(code, syndrome, rng)?,
    };
    let corr = correction_2d(code, syndrome, &m)?;
    if !pp {
        return Ok(Decoded { correction: corr, pp_cycles: 0 });
    }
    let r = post_process(code, &corr);
    Ok(Decoded { correction: r.result, pp_cycles: r.cycles })
}

/// Spacetime decoding; returns the cumulative correction.
pub fn decode_3d(code: &Code, cfg: &NoiseConfig, strategy: Strategy, pp: bool, detectors: &[Detector]) -> Result<Decoded> {
    let m = match strategy {
        Strategy::Mwpm => match_mwpm_3d(code, detectors, cfg.p, cfg.q, cfg.rounds)?,
        Strategy::Ism => match_ism_3d(code, detectors, cfg.p, cfg.q, cfg.rounds)?,
        Strategy::Random => return Err(invalid("random matching is only defined for code-capacity noise")),
    };
    let c3 = correction_3d(code, detectors, &m, cfg.rounds)?;
    if !pp {
        return Ok(Decoded { correction: c3.cumulative, pp_cycles: 0 });
    }
    let (c3, cycles) = post_process_slices(code, &c3);
    if code.syndrome(&c3.cumulative) != crate::code::reduce_mod2(detectors.iter().map(|d| d.stabilizer).collect()) {
        return Err(internal("post-processing changed the cumulative syndrome"));
    }
    Ok(Decoded { correction: c3.cumulative, pp_cycles: cycles })
}

/// Failure iff the residual is nonempty; its line decomposition says which
/// logical qubits flipped.
pub fn adjudicate(code: &Code, true_error: &[usize], correction: &[usize]) -> Result<TrialRecord> {
    let residual = sym_diff(true_error, correction);
    let flips = code.decompose_residual(&residual).map_err(|e| match e {
        Error::Precondition(msg) => internal(msg),
        other => other,
    })?;
    Ok(TrialRecord { failed: !residual.is_empty(), logical_flips: flips, pp_cycles: 0, defect_count: 0 })
}

/// Lower bound for any decoder: the error already fills at least half of
/// some qubit line.
pub fn lower_bound_trial(code: &Code, true_error: &[usize]) -> bool {
    let thr = line_threshold(code);
    line_overlaps(code, true_error).iter().any(|&k| k >= thr)
}

/// One full trial: sample, decode, adjudicate.
pub fn run_trial<R: Rng + ?Sized>(
    code: &Code,
    cfg: &NoiseConfig,
    strategy: Strategy,
    pp: bool,
    rng: &mut R,
) -> Result<TrialRecord> {
    let (error, decoded, defects) = match cfg.model {
        Model::CodeCapacity => {
            let e = sample_error(code, cfg.p, rng);
            let s = code.syndrome(&e);
            let dec = decode_2d(code, cfg.p, strategy, pp, &s, rng)?;
            (e, dec, s.len())
        }
        Model::Phenomenological => {
            let (dets, e) = run_rounds(code, cfg, rng)?;
            let dec = decode_3d(code, cfg, strategy, pp, &dets)?;
            (e, dec, dets.len())
        }
    };
    if pp && cfg.model == Model::CodeCapacity {
        let thr = line_threshold(code);
        if line_overlaps(code, &decoded.correction).iter().any(|&k| k >= thr) {
            return Err(internal("post-processed correction violates the 1-line bound"));
        }
    }
    let mut rec = adjudicate(code, &error, &decoded.correction)?;
    rec.pp_cycles = decoded.pp_cycles;
    rec.defect_count = defects;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::QubitId;

    fn qi(code: &Code, s: &str) -> usize {
        code.qubit_index(s.parse::<QubitId>().unwrap()).unwrap()
    }

    #[test]
    fn config_guards() {
        assert!(NoiseConfig::code_capacity(0.6).is_err());
        assert!(NoiseConfig::code_capacity(0.5).is_err());
        assert!(NoiseConfig::code_capacity(0.1).is_ok());
        assert!(NoiseConfig::phenomenological(0.1, 0.5, 3).is_err());
        assert!(NoiseConfig::phenomenological(0.1, 0.1, 0).is_err());
        assert_eq!("phenomenological".parse::<Model>().unwrap(), Model::Phenomenological);
        assert!("circuit".parse::<Model>().is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_unbiased() {
        let c = Code::new(9).unwrap();
        let a = sample_error(&c, 0.2, &mut trial_rng(5, 17));
        let b = sample_error(&c, 0.2, &mut trial_rng(5, 17));
        assert_eq!(a, b);
        assert_ne!(a, sample_error(&c, 0.2, &mut trial_rng(5, 18)));
        let trials = 20_000;
        let total: usize = (0..trials).map(|t| sample_error(&c, 0.2, &mut trial_rng(1, t)).len()).sum();
        let n = c.num_qubits() as f64;
        let mean = total as f64 / trials as f64;
        let sigma = (n * 0.2 * 0.8 / trials as f64).sqrt();
        assert!((mean - 0.2 * n).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn noiseless_rounds_are_silent() {
        let c = Code::new(5).unwrap();
        let cfg = NoiseConfig::phenomenological(0.0, 0.0, 5).unwrap();
        let (dets, e) = run_rounds(&c, &cfg, &mut trial_rng(0, 0)).unwrap();
        assert!(dets.is_empty() && e.is_empty());
    }

    #[test]
    fn injected_measurement_error_gives_a_temporal_pair() {
        let c = Code::new(5).unwrap();
        let cfg = NoiseConfig::phenomenological(0.0, 0.0, 5).unwrap();
        let inj = Injection { data: vec![], measurement: vec![(2, 3)] };
        let (dets, _) = run_rounds_with(&c, &cfg, &inj, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(dets, vec![Detector { round: 2, stabilizer: 3 }, Detector { round: 3, stabilizer: 3 }]);
    }

    #[test]
    fn injected_bulk_flip_gives_four_detectors() {
        let c = Code::new(5).unwrap();
        let cfg = NoiseConfig::phenomenological(0.0, 0.0, 5).unwrap();
        let q = qi(&c, "q2.4");
        let inj = Injection { data: vec![(1, q)], measurement: vec![] };
        let (dets, e) = run_rounds_with(&c, &cfg, &inj, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(e, vec![q]);
        assert_eq!(dets.len(), 4);
        assert!(dets.iter().all(|d| d.round == 1));
    }

    #[test]
    fn data_error_in_round_zero_persists() {
        let c = Code::new(5).unwrap();
        let cfg = NoiseConfig::phenomenological(0.05, 0.05, 5).unwrap();
        let q = qi(&c, "q3.5");
        let inj = Injection { data: vec![(0, q)], measurement: vec![] };
        let quiet = NoiseConfig { p: 0.0, q: 0.0, ..cfg };
        let (dets, e) = run_rounds_with(&c, &quiet, &inj, &mut trial_rng(0, 0)).unwrap();
        assert!(dets.iter().all(|d| d.round == 0));
        let dec = decode_3d(&c, &cfg, Strategy::Mwpm, true, &dets).unwrap();
        assert_eq!(dec.correction, e);
    }

    #[test]
    fn adjudication_examples() {
        let c = Code::new(5).unwrap();
        let mut e = vec![qi(&c, "q2.4"), qi(&c, "base1")];
        e.sort();
        let ok = adjudicate(&c, &e, &e).unwrap();
        assert!(!ok.failed && ok.logical_flips.iter().all(|&f| !f));
        let r = adjudicate(&c, &e, &sym_diff(&e, c.line(2))).unwrap();
        assert!(r.failed);
        assert_eq!(r.logical_flips, vec![false, true, false, false, false]);
        let r = adjudicate(&c, &e, &sym_diff(&e, c.line(0))).unwrap();
        assert_eq!(r.logical_flips, vec![true; 5]);
        assert!(matches!(adjudicate(&c, &e, &[]), Err(Error::Internal(_))));
    }

    #[test]
    fn lower_bound_examples() {
        let c = Code::new(5).unwrap();
        assert!(!lower_bound_trial(&c, &[]));
        assert!(lower_bound_trial(&c, c.line(3)));
        // line 1 = {base1, base2, q2.3, q2.4, q2.5}
        let three = vec![qi(&c, "base2"), qi(&c, "q2.3"), qi(&c, "q2.4")];
        assert!(lower_bound_trial(&c, &three));
        assert!(!lower_bound_trial(&c, &three[..2]));
    }

    #[test]
    fn single_round_spacetime_equals_code_capacity() {
        let c = Code::new(7).unwrap();
        let cfg = NoiseConfig::phenomenological(0.1, 0.0, 1).unwrap();
        for t in 0..300 {
            let mut rng = trial_rng(3, t);
            let (dets, e) = run_rounds(&c, &cfg, &mut rng).unwrap();
            let s = c.syndrome(&e);
            for strategy in [Strategy::Mwpm, Strategy::Ism] {
                for pp in [false, true] {
                    let a = decode_2d(&c, 0.1, strategy, pp, &s, &mut rng).unwrap();
                    let b = decode_3d(&c, &cfg, strategy, pp, &dets).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn random_strategy_rejected_in_spacetime() {
        let c = Code::new(3).unwrap();
        let cfg = NoiseConfig::phenomenological(0.1, 0.1, 3).unwrap();
        assert!(decode_3d(&c, &cfg, Strategy::Random, false, &[]).is_err());
    }

    #[test]
    fn trials_run_end_to_end() {
        let c = Code::new(5).unwrap();
        for cfg in [NoiseConfig::code_capacity(0.1).unwrap(), NoiseConfig::phenomenological(0.03, 0.03, 5).unwrap()] {
            for t in 0..200 {
                let r = run_trial(&c, &cfg, Strategy::Mwpm, true, &mut trial_rng(11, t)).unwrap();
                assert_eq!(r.failed, r.logical_flips.iter().any(|&f| f));
            }
        }
    }
}
