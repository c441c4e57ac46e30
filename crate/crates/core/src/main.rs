use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use paritydec::experiments::{
    estimate_threshold, lower_bound_point, run_point, write_rows, write_rows_to, CurvePoint, PointConfig,
};
use paritydec::noise_sim::trial_rng;
use paritydec::trace::{code_summary, decode_trace};
use paritydec::{Code, Error, Model, QubitId, Strategy};

#[derive(Parser)]
#[command(name = "paritydec", version, about = "Symmetry-matching decoder for the LHZ parity code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Failure rates for one distance over a list of error rates.
    Simulate(SimulateArgs),
    /// Crossing points of the failure-rate curves of adjacent distances.
    Threshold(ThresholdArgs),
    /// Code tables, or a step-by-step decode of one error.
    Inspect(InspectArgs),
}

/// Flags shared by the Monte-Carlo subcommands. Every flag can also be given
/// in the TOML file passed with --config; flags win.
#[derive(Args, Default, Clone)]
struct RunOpts {
    /// Measurement error rate (phenomenological; defaults to p).
    #[arg(long)]
    q: Option<f64>,
    /// Measurement rounds (phenomenological; defaults to d).
    #[arg(long)]
    rounds: Option<usize>,
    /// code-capacity or phenomenological.
    #[arg(long)]
    model: Option<String>,
    /// mwpm, ism or random.
    #[arg(long)]
    strategy: Option<String>,
    /// on or off.
    #[arg(long)]
    post_process: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop a point early once it has this many failures.
    #[arg(long)]
    target_failures: Option<u64>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, env = "PARITYDEC_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    distance: Option<usize>,
    /// Comma list or lo:hi:step range.
    #[arg(long)]
    p: Option<String>,
    /// Count lower-bound failures (some line at least half covered) instead of decoding.
    #[arg(long)]
    lower_bound: bool,
    #[command(flatten)]
    run: RunOpts,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// At least two distances, comma separated.
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<usize>>,
    /// Comma list or lo:hi:step range.
    #[arg(long)]
    p_grid: Option<String>,
    /// Also write the sampled curves here.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[command(flatten)]
    run: RunOpts,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    distance: Option<usize>,
    /// Qubit ids such as q2.4 or base1, comma separated.
    #[arg(long)]
    error: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    post_process: Option<String>,
    /// Error rate used for matching weights.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// text or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

type CliResult<T> = Result<T, Error>;

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Contents of a --config file: the same keys as the flags, in kebab case.
/// Keys that do not apply to the subcommand are ignored.
#[derive(Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    distance: Option<usize>,
    distances: Option<Vec<usize>>,
    p: Option<Number>,
    p_grid: Option<String>,
    lower_bound: Option<bool>,
    curves: Option<PathBuf>,
    error: Option<String>,
    q: Option<f64>,
    rounds: Option<usize>,
    model: Option<String>,
    strategy: Option<String>,
    post_process: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    target_failures: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
    workers: Option<usize>,
}

/// `p = 0.05` or `p = "0.05,0.1"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Value(f64),
    Text(String),
}

impl Number {
    fn text(self) -> String {
        match self {
            Number::Value(x) => x.to_string(),
            Number::Text(s) => s,
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> CliResult<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

macro_rules! fill {
    ($dst:expr, $src:expr, $($f:ident),+) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.take(); } )+
    };
}

impl RunOpts {
    fn fill(&mut self, file: &mut FileConfig) {
        fill!(self, file, q, rounds, model, strategy, post_process, trials, seed, target_failures, out, format, workers);
    }
}

fn parse_on_off(s: Option<&str>) -> CliResult<bool> {
    match s.unwrap_or("on") {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(usage(format!("--post-process must be on or off, got {other:?}"))),
    }
}

fn parse_json_format(s: Option<&str>, default: &str, alt: &str) -> CliResult<bool> {
    match s.unwrap_or(default) {
        f if f == default => Ok(false),
        f if f == alt => Ok(true),
        other => Err(usage(format!("--format must be {default} or {alt}, got {other:?}"))),
    }
}

/// `0.1,0.2` or `0.20:0.48:0.04` (both ends included).
fn parse_p_list(s: &str) -> CliResult<Vec<f64>> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| usage(format!("bad number {x:?} in p list")));
    let parts: Vec<&str> = s.split(':').collect();
    let v = match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(usage(format!("bad range {s:?}")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| ((lo + i as f64 * step) * 1e10).round() / 1e10).collect()
        }
        [_] => s.split(',').map(num).collect::<CliResult<Vec<f64>>>()?,
        _ => return Err(usage(format!("bad p list {s:?}"))),
    };
    if v.is_empty() {
        return Err(usage("empty p list"));
    }
    Ok(v)
}

struct Plan {
    model: Model,
    strategy: Strategy,
    pp: bool,
    trials: u64,
    seed: u64,
    json: bool,
}

fn plan(run: &RunOpts) -> CliResult<Plan> {
    Ok(Plan {
        model: run.model.as_deref().unwrap_or("code-capacity").parse()?,
        strategy: run.strategy.as_deref().unwrap_or("mwpm").parse()?,
        pp: parse_on_off(run.post_process.as_deref())?,
        trials: run.trials.unwrap_or(10_000),
        seed: run.seed.unwrap_or(0),
        json: parse_json_format(run.format.as_deref(), "csv", "json")?,
    })
}

fn point(plan: &Plan, run: &RunOpts, d: usize, p: f64) -> PointConfig {
    let mut cfg = match plan.model {
        Model::CodeCapacity => {
            let mut c = PointConfig::code_capacity(d, p, plan.strategy, plan.pp, plan.trials, plan.seed);
            // let validation reject explicit q / rounds for code capacity
            c.q = run.q.unwrap_or(0.0);
            c.rounds = run.rounds.unwrap_or(1);
            c
        }
        Model::Phenomenological => {
            let mut c = PointConfig::phenomenological(d, p, plan.strategy, plan.pp, plan.trials, plan.seed);
            c.q = run.q.unwrap_or(p);
            c.rounds = run.rounds.unwrap_or(d);
            c
        }
    };
    cfg.target_failures = run.target_failures;
    cfg
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        Some(0) => Err(usage("--workers must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Internal(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn emit<T: Serialize>(out: &Option<PathBuf>, rows: &[T], json: bool) -> CliResult<()> {
    match out {
        Some(path) => write_rows(path, rows, json),
        None => write_rows_to(std::io::stdout().lock(), rows, json),
    }
}

fn simulate(mut a: SimulateArgs) -> CliResult<()> {
    let mut file = load_config(&a.config)?;
    fill!(a, file, distance);
    a.p = a.p.or(file.p.take().map(Number::text));
    a.lower_bound |= file.lower_bound.unwrap_or(false);
    a.run.fill(&mut file);
    let d = a.distance.ok_or_else(|| usage("--distance is required"))?;
    let ps = parse_p_list(a.p.as_deref().ok_or_else(|| usage("--p is required"))?)?;
    let plan = plan(&a.run)?;
    let grid: Vec<PointConfig> = ps.iter().map(|&p| point(&plan, &a.run, d, p)).collect();
    for cfg in &grid {
        cfg.validate()?;
    }
    let lower_bound = a.lower_bound;
    let rows = with_workers(a.run.workers, || {
        grid.iter().map(|c| if lower_bound { lower_bound_point(c) } else { run_point(c) }).collect::<CliResult<Vec<_>>>()
    })??;
    emit(&a.run.out, &rows, plan.json)
}

#[derive(Serialize)]
struct ThresholdRow {
    d_low: usize,
    d_high: usize,
    status: &'static str,
    p_cross: Option<f64>,
    p_low: Option<f64>,
    p_high: Option<f64>,
    std_err: Option<f64>,
}

fn threshold(mut a: ThresholdArgs) -> CliResult<()> {
    let mut file = load_config(&a.config)?;
    fill!(a, file, distances, p_grid, curves);
    a.run.fill(&mut file);
    let ds = a.distances.clone().ok_or_else(|| usage("--distances is required"))?;
    if ds.len() < 2 {
        return Err(usage("--distances needs at least two values"));
    }
    if ds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--distances must be strictly increasing"));
    }
    let ps = parse_p_list(a.p_grid.as_deref().ok_or_else(|| usage("--p-grid is required"))?)?;
    if ps.len() < 2 {
        return Err(usage("--p-grid needs at least two points"));
    }
    let plan = plan(&a.run)?;
    let grids: Vec<Vec<PointConfig>> = ds.iter().map(|&d| ps.iter().map(|&p| point(&plan, &a.run, d, p)).collect()).collect();
    for cfg in grids.iter().flatten() {
        cfg.validate()?;
    }
    let curves = with_workers(a.run.workers, || {
        grids.iter().map(|g| g.iter().map(run_point).collect::<CliResult<Vec<CurvePoint>>>()).collect::<CliResult<Vec<_>>>()
    })??;
    let mut rows = Vec::new();
    for w in curves.windows(2) {
        let (d_low, d_high) = (w[0][0].d, w[1][0].d);
        match estimate_threshold(&w[0], &w[1]) {
            Ok(t) => rows.push(ThresholdRow {
                d_low,
                d_high,
                status: "ok",
                p_cross: Some(t.p_cross),
                p_low: Some(t.p_low),
                p_high: Some(t.p_high),
                std_err: Some(t.std_err),
            }),
            Err(Error::NoCrossing(msg)) => {
                eprintln!("warning: {msg}");
                rows.push(ThresholdRow { d_low, d_high, status: "no-crossing", p_cross: None, p_low: None, p_high: None, std_err: None });
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(path) = &a.curves {
        let flat: Vec<CurvePoint> = curves.into_iter().flatten().collect();
        write_rows(path, &flat, plan.json)?;
    }
    emit(&a.run.out, &rows, plan.json)
}

fn inspect(mut a: InspectArgs) -> CliResult<()> {
    let mut file = load_config(&a.config)?;
    fill!(a, file, distance, error, strategy, post_process, seed, format);
    if a.p.is_none() {
        if let Some(n) = file.p.take() {
            a.p = Some(n.text().parse().map_err(|_| usage("inspect takes a single p"))?);
        }
    }
    let d = a.distance.ok_or_else(|| usage("--distance is required"))?;
    let code = Code::new(d)?;
    let json = parse_json_format(a.format.as_deref(), "text", "json")?;
    let mut out = std::io::stdout().lock();
    let Some(error) = &a.error else {
        let s = code_summary(&code);
        if json {
            writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
        } else {
            write!(out, "{s}")?;
        }
        return Ok(());
    };
    let mut qubits = Vec::new();
    for id in error.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let q: QubitId = id.parse()?;
        qubits.push(code.qubit_index(q)?);
    }
    let strategy: Strategy = a.strategy.as_deref().unwrap_or("mwpm").parse()?;
    let pp = parse_on_off(a.post_process.as_deref())?;
    let p = a.p.unwrap_or(0.1);
    let t = decode_trace(&code, &qubits, strategy, pp, p, &mut trial_rng(a.seed.unwrap_or(0), 0))?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&t)?)?;
    } else {
        write!(out, "{t}")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Threshold(a) => threshold(a),
        Command::Inspect(a) => inspect(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e @ Error::InvalidParameter(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
