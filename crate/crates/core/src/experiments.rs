//! Monte-Carlo failure-rate curves, threshold crossings and result files.
//!
//! Trial i of a point always draws from `trial_rng(seed, i)`, and trials run
//! in fixed-size batches whose results are summed in index order, so a point
//! does not depend on how many workers the pool has. Early stopping is only
//! checked between batches for the same reason.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::code::Code;
use crate::error::{invalid, Error, Result};
use crate::graph_builders::Strategy;
use crate::noise_sim::{lower_bound_trial, run_trial, sample_error, trial_rng, Model, NoiseConfig};

pub const BATCH: u64 = 500;
const Z95: f64 = 1.959963984540054;

/// One point of a failure-rate curve.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig {
    pub model: Model,
    pub strategy: Strategy,
    pub post_process: bool,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub q: f64,
    pub trials: u64,
    pub seed: u64,
    /// Stop after the first batch that reaches this many failures.
    pub target_failures: Option<u64>,
}

impl PointConfig {
    pub fn code_capacity(d: usize, p: f64, strategy: Strategy, post_process: bool, trials: u64, seed: u64) -> Self {
        PointConfig {
            model: Model::CodeCapacity,
            strategy,
            post_process,
            d,
            rounds: 1,
            p,
            q: 0.0,
            trials,
            seed,
            target_failures: None,
        }
    }

    /// p = q and d rounds unless changed afterwards.
    pub fn phenomenological(d: usize, p: f64, strategy: Strategy, post_process: bool, trials: u64, seed: u64) -> Self {
        PointConfig { model: Model::Phenomenological, rounds: d, q: p, ..Self::code_capacity(d, p, strategy, post_process, trials, seed) }
    }

    pub fn noise(&self) -> Result<NoiseConfig> {
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(invalid(format!("p={} must lie in (0, 0.5)", self.p)));
        }
        let cfg = NoiseConfig { model: self.model, p: self.p, q: self.q, rounds: self.rounds };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<NoiseConfig> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.model == Model::Phenomenological && self.strategy == Strategy::Random {
            return Err(invalid("random matching is only defined for code-capacity noise"));
        }
        Code::new(self.d)?;
        self.noise()
    }
}

fn on_off<S: Serializer>(b: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(if *b { "on" } else { "off" })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub model: Model,
    pub strategy: Strategy,
    #[serde(serialize_with = "on_off")]
    pub post_process: bool,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub q: f64,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub avg_pp_cycles: f64,
    pub seed: u64,
}

impl CurvePoint {
    fn new(cfg: &PointConfig, trials: u64, failures: u64, pp_cycles: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, trials);
        CurvePoint {
            model: cfg.model,
            strategy: cfg.strategy,
            post_process: cfg.post_process,
            d: cfg.d,
            rounds: cfg.rounds,
            p: cfg.p,
            q: cfg.q,
            trials,
            failures,
            failure_rate: failures as f64 / trials as f64,
            ci_low,
            ci_high,
            avg_pp_cycles: pp_cycles as f64 / trials as f64,
            seed: cfg.seed,
        }
    }

    /// Binomial standard error of the failure rate.
    pub fn std_err(&self) -> f64 {
        let f = self.failure_rate;
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (n, f, z2) = (n as f64, k as f64 / n as f64, Z95 * Z95);
    let centre = (f + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (f * (1.0 - f) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0).min(f), (centre + half).min(1.0).max(f))
}

/// Runs trials batch by batch; `trial` returns (failed, pp cycles).
fn run_batched<F>(cfg: &PointConfig, trial: F) -> Result<CurvePoint>
where
    F: Fn(u64) -> Result<(bool, usize)> + Sync,
{
    let (mut done, mut failures, mut cycles) = (0u64, 0u64, 0u64);
    while done < cfg.trials {
        let end = (done + BATCH).min(cfg.trials);
        let results: Vec<(bool, usize)> = (done..end).into_par_iter().map(&trial).collect::<Result<_>>()?;
        failures += results.iter().filter(|r| r.0).count() as u64;
        cycles += results.iter().map(|r| r.1 as u64).sum::<u64>();
        done = end;
        if cfg.target_failures.is_some_and(|t| failures >= t) {
            break;
        }
    }
    Ok(CurvePoint::new(cfg, done, failures, cycles))
}

pub fn run_point(cfg: &PointConfig) -> Result<CurvePoint> {
    let noise = cfg.validate()?;
    let code = Code::new(cfg.d)?;
    run_batched(cfg, |i| {
        let r = run_trial(&code, &noise, cfg.strategy, cfg.post_process, &mut trial_rng(cfg.seed, i))?;
        Ok((r.failed, r.pp_cycles))
    })
}

/// Runs every point in order; the points themselves run in parallel inside.
pub fn run_curve(grid: &[PointConfig]) -> Result<Vec<CurvePoint>> {
    grid.iter().map(run_point).collect()
}

/// Fraction of code-capacity errors that already defeat any decoder. With
/// the same seed it sees exactly the errors `run_point` decodes.
pub fn lower_bound_point(cfg: &PointConfig) -> Result<CurvePoint> {
    let noise = cfg.validate()?;
    if noise.model != Model::CodeCapacity {
        return Err(invalid("the lower bound is defined for code-capacity noise"));
    }
    let code = Code::new(cfg.d)?;
    run_batched(cfg, |i| Ok((lower_bound_trial(&code, &sample_error(&code, cfg.p, &mut trial_rng(cfg.seed, i))), 0)))
}

pub fn lower_bound_curve(grid: &[PointConfig]) -> Result<Vec<CurvePoint>> {
    grid.iter().map(lower_bound_point).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub d_low: usize,
    pub d_high: usize,
    pub p_cross: f64,
    pub p_low: f64,
    pub p_high: f64,
    /// Parametric bootstrap standard error of `p_cross`.
    pub std_err: f64,
}

/// Log-odds with a continuity correction so that 0 and n failures stay finite.
fn logit(k: u64, n: u64) -> f64 {
    let f = (k as f64 + 0.5) / (n as f64 + 1.0);
    (f / (1.0 - f)).ln()
}

/// First upward sign change of logit(f_high) - logit(f_low) along p, with
/// linear interpolation inside the bracket.
fn crossing(ps: &[f64], low: &[(u64, u64)], high: &[(u64, u64)]) -> Option<(f64, usize)> {
    let g: Vec<f64> = low.iter().zip(high).map(|(a, b)| logit(b.0, b.1) - logit(a.0, a.1)).collect();
    (0..g.len().saturating_sub(1)).find(|&i| g[i] < 0.0 && g[i + 1] >= 0.0).map(|i| {
        let t = -g[i] / (g[i + 1] - g[i]);
        (ps[i] + t * (ps[i + 1] - ps[i]), i)
    })
}

/// Crossing of the failure-rate curves of two distances sampled on the same
/// p grid.
pub fn estimate_threshold(low: &[CurvePoint], high: &[CurvePoint]) -> Result<ThresholdEstimate> {
    let (Some(a), Some(b)) = (low.first(), high.first()) else {
        return Err(invalid("empty curve"));
    };
    if a.d == b.d {
        return Err(invalid(format!("both curves have distance {}", a.d)));
    }
    let mut low = low.to_vec();
    let mut high = high.to_vec();
    low.sort_by(|x, y| x.p.total_cmp(&y.p));
    high.sort_by(|x, y| x.p.total_cmp(&y.p));
    let ps: Vec<f64> = low.iter().map(|x| x.p).collect();
    if ps.len() < 2 || high.iter().map(|x| x.p).ne(ps.iter().copied()) {
        return Err(invalid("curves must share a p grid with at least two points"));
    }
    let kl: Vec<(u64, u64)> = low.iter().map(|x| (x.failures, x.trials)).collect();
    let kh: Vec<(u64, u64)> = high.iter().map(|x| (x.failures, x.trials)).collect();
    let Some((p_cross, i)) = crossing(&ps, &kl, &kh) else {
        let rates: Vec<String> =
            low.iter().zip(&high).map(|(x, y)| format!("p={}: {:.4} vs {:.4}", x.p, x.failure_rate, y.failure_rate)).collect();
        return Err(Error::NoCrossing(format!("d={} and d={} do not cross: {}", a.d, b.d, rates.join(", "))));
    };

    // resample every point binomially around its observed rate
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ ((a.d as u64) << 32) ^ b.d as u64);
    let mut draws = Vec::new();
    for _ in 0..400 {
        let mut resample = |pts: &[(u64, u64)]| -> Vec<(u64, u64)> {
            pts.iter()
                .map(|&(k, n)| (Binomial::new(n, k as f64 / n as f64).unwrap().sample(&mut rng), n))
                .collect()
        };
        let (rl, rh) = (resample(&kl), resample(&kh));
        if let Some((p, _)) = crossing(&ps, &rl, &rh) {
            draws.push(p);
        }
    }
    let std_err = if draws.len() > 1 {
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ThresholdEstimate { d_low: a.d, d_high: b.d, p_cross, p_low: ps[i], p_high: ps[i + 1], std_err })
}

/// Writes `rows` as CSV or pretty JSON via a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], json: bool) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_rows_to(tmp.as_file_mut(), rows, json)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_rows_to<T: Serialize, W: std::io::Write>(out: W, rows: &[T], json: bool) -> Result<()> {
    if json {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, rows)?;
        writeln!(out)?;
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
