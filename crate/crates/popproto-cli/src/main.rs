//! Batch runner: single executions, trial sweeps, and exhaustive
//! reachability checks, with CSV/SVG export and JSON-lines logging.
//!
//! Exit codes: 0 success, 1 bad configuration, 2 incorrect or violated
//! execution, 3 budget exhausted without convergence, 4 reachability cap
//! overflow.

use clap::{Args, Parser, Subcommand};
use popproto::analysis::{self, summarize, TrialMetric};
use popproto::broadcast::{Gather, Rounds, SymFunc};
use popproto::core::{Configuration, Protocol, SimError};
use popproto::counting::{Counting, CountingInput};
use popproto::engine::{run_until, ExecutionReport, RunOptions, Snapshot};
use popproto::junta::{IntervalSchedule, JuntaElection};
use popproto::reach::{check_stably_correct, multiset_of, reachable_set};
use popproto::sce::{BitBroadcast, Sce};
use popproto::tm::{TmCtrl, TmSpec};
use popproto::toy::{Contender, Epidemic, Null, ThreeStateFratricide};
use popproto::wrap::Wrap;
use popproto::balls::Balls;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "popproto", about = "Population-protocol experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One execution of one protocol instance.
    Run(CommonArgs),
    /// A trial farm over an n-list, with per-n summaries.
    Sweep(CommonArgs),
    /// Exhaustive reachability and stable-correctness at tiny n.
    Reach(CommonArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    #[arg(long)]
    protocol: Option<String>,
    /// Population size(s); comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Explicit seed list; overrides --seed/--trials derivation.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    trials: Option<u64>,
    /// Interaction budget per execution.
    #[arg(long)]
    budget: Option<u64>,
    /// Snapshot stride in parallel time; enables time-series export.
    #[arg(long)]
    stride: Option<f64>,
    /// Report file; time-series CSV/SVG are written alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; command-line flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON-lines event log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Reachable-configuration cap for `reach`.
    #[arg(long)]
    cap: Option<usize>,
    /// Protocol parameter override, repeatable: b, c, m, f, tm.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    /// Junta interval-growth base.
    b: Option<u64>,
    /// Junta schedule constant, or the ball-batch size.
    c: Option<u64>,
    /// Counting clock modulus.
    m: Option<u8>,
    /// Gather function: or | count | max.
    f: Option<String>,
    /// Turing machine description file.
    tm: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    protocol: Option<String>,
    n: Option<NList>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    trials: Option<u64>,
    budget: Option<u64>,
    stride: Option<f64>,
    out: Option<String>,
    jobs: Option<usize>,
    log: Option<String>,
    cap: Option<usize>,
    params: Params,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum NList {
    One(usize),
    Many(Vec<usize>),
}

/// Fully resolved configuration, embedded verbatim in every output artifact.
#[derive(Clone, Debug, Serialize)]
struct Effective {
    command: String,
    protocol: String,
    n: Vec<usize>,
    seeds: Vec<u64>,
    budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stride: Option<f64>,
    jobs: usize,
    cap: usize,
    params: Params,
}

struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(a) => resolve(a, "run", 1).and_then(|e| cmd_run(&e, a)),
        Cmd::Sweep(a) => resolve(a, "sweep", 10).and_then(|e| cmd_sweep(&e, a)),
        Cmd::Reach(a) => resolve(a, "reach", 1).and_then(|e| cmd_reach(&e, a)),
    };
    match result {
        Ok(()) => {}
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    }
}

fn resolve(args: &CommonArgs, command: &str, default_trials: u64) -> Result<Effective, Failure> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(1, format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| fail(1, format!("bad config: {e}")))?
        }
        None => FileConfig::default(),
    };

    let protocol = args
        .protocol
        .clone()
        .or(file.protocol)
        .ok_or_else(|| fail(1, "missing --protocol"))?;
    let n = args
        .n
        .clone()
        .or(file.n.map(|v| match v {
            NList::One(x) => vec![x],
            NList::Many(xs) => xs,
        }))
        .ok_or_else(|| fail(1, "missing --n"))?;
    if n.is_empty() {
        return Err(fail(1, "empty n-list"));
    }
    if command != "sweep" && n.len() != 1 {
        return Err(fail(1, format!("{command} takes exactly one n")));
    }
    if let Some(&bad) = n.iter().find(|&&x| x < 2) {
        return Err(fail(1, format!("n = {bad} is below the minimum population of 2")));
    }

    let trials = args.trials.or(file.trials).unwrap_or(default_trials);
    if trials == 0 {
        return Err(fail(1, "trials must be positive"));
    }
    let seeds = match args.seeds.clone().or(file.seeds) {
        Some(s) if !s.is_empty() => s,
        Some(_) => return Err(fail(1, "empty seed list")),
        None => {
            let base = args.seed.or(file.seed).unwrap_or(0);
            (base..base + trials).collect()
        }
    };

    let mut params = file.params;
    for kv in &args.param {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| fail(1, format!("bad --param {kv:?}, expected KEY=VALUE")))?;
        let num = || v.parse::<u64>().map_err(|_| fail(1, format!("bad value for {k}: {v}")));
        match k {
            "b" => params.b = Some(num()?),
            "c" => params.c = Some(num()?),
            "m" => params.m = Some(num()? as u8),
            "f" => params.f = Some(v.to_string()),
            "tm" => params.tm = Some(v.to_string()),
            _ => return Err(fail(1, format!("unknown parameter {k}"))),
        }
    }

    Ok(Effective {
        command: command.to_string(),
        protocol,
        n,
        seeds,
        budget: args.budget.or(file.budget).unwrap_or(1_000_000_000),
        stride: args.stride.or(file.stride),
        jobs: args.jobs.or(file.jobs).unwrap_or(1).max(1),
        cap: args.cap.or(file.cap).unwrap_or(100_000),
        params,
    })
}

fn out_path(args: &CommonArgs) -> Option<PathBuf> {
    args.out.clone()
}

/// Prefix every config line with `# ` so it survives inside CSV files too.
fn config_echo(eff: &Effective) -> String {
    let toml = toml::to_string(eff).expect("config serializes");
    let mut s = String::from("# --- config ---\n");
    for line in toml.lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

struct Logger(Option<Mutex<fs::File>>);

impl Logger {
    fn open(path: &Option<PathBuf>) -> Result<Logger, Failure> {
        match path {
            None => Ok(Logger(None)),
            Some(p) => fs::File::create(p)
                .map(|f| Logger(Some(Mutex::new(f))))
                .map_err(|e| fail(1, format!("cannot open log {}: {e}", p.display()))),
        }
    }

    fn event(&self, value: serde_json::Value) {
        if let Some(f) = &self.0 {
            let mut f = f.lock().unwrap();
            let _ = writeln!(f, "{value}");
        }
    }
}

fn write_artifact(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fail(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Trial execution, type-erased per protocol.

struct Trial {
    seed: u64,
    interactions: u64,
    /// Interaction count at which the run stopped or first converged;
    /// excludes the confirmation tail.
    settled_at: u64,
    parallel_time: f64,
    stopped: bool,
    converged: bool,
    budget_exhausted: bool,
    ok: bool,
    outputs: String,
    snapshots: Vec<Snapshot>,
}

fn outputs_summary<O: Debug>(outputs: &[O]) -> String {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for o in outputs {
        *counts.entry(format!("{o:?}")).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(k, v)| format!("{k} x{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[allow(clippy::too_many_arguments)]
fn execute<P: Protocol>(
    proto: &P,
    inputs: &[P::Input],
    seed: u64,
    budget: u64,
    snap_stride: Option<f64>,
    metric: Option<&dyn Fn(&P::State) -> f64>,
    stop: &dyn Fn(&Configuration<P>) -> bool,
    ok: &dyn Fn(&ExecutionReport<P::Output>) -> bool,
) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = Configuration::from_inputs(proto, inputs, &mut rng);
    let n = cfg.n() as u64;
    let opts = RunOptions {
        budget,
        confirmation_tail: None,
        check_stride: (n / 8).max(1),
        snapshot_stride: snap_stride,
        metric,
    };
    let report = run_until(&mut cfg, proto, |c| stop(c), opts, &mut rng);
    Trial {
        seed,
        interactions: report.interactions,
        settled_at: report
            .stopped_at
            .or(report.converged_at)
            .unwrap_or(report.interactions),
        parallel_time: report.parallel_time,
        stopped: report.stopped(),
        converged: report.converged_at.is_some(),
        budget_exhausted: report.budget_exhausted,
        ok: ok(&report),
        outputs: outputs_summary(&report.final_outputs),
        snapshots: report.snapshots,
    }
}

fn load_tm(params: &Params) -> Result<TmSpec, Failure> {
    match &params.tm {
        None => Ok(TmSpec::unary_parity()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(1, format!("cannot read {path}: {e}")))?;
            TmSpec::parse(&text).map_err(|e| fail(1, format!("bad machine description: {e}")))
        }
    }
}

fn gather_func(params: &Params) -> Result<SymFunc, Failure> {
    match params.f.as_deref().unwrap_or("or") {
        "or" => Ok(SymFunc::Or),
        "count" => Ok(SymFunc::CountOnes),
        "max" => Ok(SymFunc::Max),
        other => Err(fail(1, format!("unknown function {other}; expected or|count|max"))),
    }
}

fn run_trial(eff: &Effective, n: usize, seed: u64) -> Result<Trial, Failure> {
    let budget = eff.budget;
    let stride = eff.stride;
    match eff.protocol.as_str() {
        "null" => {
            let proto = Null;
            Ok(execute(&proto, &vec![(); n], seed, budget, stride, None, &|_| true, &|_| true))
        }
        "epidemic" => {
            let proto = Epidemic;
            let mut inputs = vec![false; n];
            inputs[0] = true;
            let metric = |s: &bool| if *s { 1.0 } else { 0.0 };
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                Some(&metric),
                &|c| c.agents.iter().all(|&a| a),
                &|r| r.stopped(),
            ))
        }
        "fratricide3" => {
            let proto = ThreeStateFratricide;
            Ok(execute(
                &proto,
                &vec![Contender::Undecided; n],
                seed,
                budget,
                stride,
                None,
                &|c| proto.correct(&c.agents),
                &|r| r.converged_at.is_some(),
            ))
        }
        "junta" => {
            let b = eff.params.b.unwrap_or(2);
            let c = eff.params.c.unwrap_or(16);
            let proto = JuntaElection::new(IntervalSchedule::new(b, c));
            let metric = |s: &popproto::junta::JuntaState| s.count as f64;
            Ok(execute(
                &proto,
                &vec![(); n],
                seed,
                budget,
                stride,
                Some(&metric),
                &|cfg| proto.halted(&cfg.agents),
                &|r| r.stopped(),
            ))
        }
        "counting" | "log-estimate" => {
            let exact = eff.protocol == "counting";
            let m = eff.params.m.unwrap_or(16);
            let proto = Counting { mode: if exact { Counting::exact().mode } else { Counting::log_estimate().mode }, m };
            let inputs: Vec<CountingInput> = (0..n)
                .map(|k| CountingInput { leader: k == 0, weighted: k == 0 })
                .collect();
            let metric = |s: &popproto::counting::CountingState| s.pi as f64;
            let ok: Box<dyn Fn(&ExecutionReport<Option<u64>>) -> bool> = if exact {
                Box::new(move |r: &ExecutionReport<Option<u64>>| {
                    r.final_outputs.iter().all(|o| *o == Some(n as u64))
                })
            } else {
                let lo = (n as f64).log2().floor() as u64;
                let hi = (n as f64).log2().ceil() as u64;
                Box::new(move |r: &ExecutionReport<Option<u64>>| {
                    r.final_outputs.iter().all(|o| *o == Some(lo) || *o == Some(hi))
                })
            };
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                Some(&metric),
                &|cfg| proto.all_decided(&cfg.agents),
                &ok,
            ))
        }
        "sce-broadcast" => {
            let proto = Sce::new(BitBroadcast);
            let inputs: Vec<u8> = (0..n).map(|k| (k % 2) as u8).collect();
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                None,
                &|cfg| proto.correct(&cfg.agents),
                &|r| r.converged_at.is_some(),
            ))
        }
        "balls" => {
            let c = eff.params.c.unwrap_or(3) as u32;
            if c == 0 {
                return Err(fail(1, "ball batch size must be positive"));
            }
            let proto = Balls::new(c);
            Ok(execute(
                &proto,
                &vec![(); n],
                seed,
                budget,
                stride,
                None,
                &|cfg| proto.correct(&cfg.agents),
                &|r| r.converged_at.is_some(),
            ))
        }
        "gather" => {
            let f = gather_func(&eff.params)?;
            let proto = Rounds::new(Gather::new(f));
            let mut in_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
            let inputs: Vec<u64> = (0..n)
                .map(|_| match f {
                    SymFunc::Max => in_rng.gen_range(0..10),
                    _ => in_rng.gen_range(0..2),
                })
                .collect();
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                None,
                &|cfg| proto.correct(&cfg.agents),
                &|r| r.converged_at.is_some(),
            ))
        }
        "tm" => {
            let spec = load_tm(&eff.params)?;
            let blank = spec.blank;
            let fill = spec
                .symbol_index("1")
                .filter(|&s| Some(s) != spec.end)
                .unwrap_or(blank);
            let proto = Rounds::new(TmCtrl::new(spec));
            let mut inputs = vec![fill; n];
            inputs[0] = blank; // the leader's own input never reaches the tape
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                None,
                &|cfg| proto.correct(&cfg.agents),
                &|r| r.converged_at.is_some(),
            ))
        }
        "wrapped-epidemic" => {
            let proto = Wrap::new(Epidemic);
            let inputs: Vec<(bool, bool)> = (0..n).map(|k| (k == 0, k == 0)).collect();
            Ok(execute(
                &proto,
                &inputs,
                seed,
                budget,
                stride,
                None,
                &|cfg| Wrap::<Epidemic>::project(&cfg.agents).iter().all(|&a| a),
                &|r| r.stopped(),
            ))
        }
        other => Err(fail(1, format!("unknown protocol {other}"))),
    }
}

// ---------------------------------------------------------------------------
// Commands.

fn cmd_run(eff: &Effective, args: &CommonArgs) -> Result<(), Failure> {
    let logger = Logger::open(&args.log)?;
    let n = eff.n[0];
    let seed = eff.seeds[0];
    logger.event(serde_json::json!({
        "event": "run_start", "protocol": eff.protocol, "n": n, "seed": seed,
    }));
    let trial = run_trial(eff, n, seed)?;
    logger.event(serde_json::json!({
        "event": "run_end", "interactions": trial.interactions,
        "converged": trial.converged, "stopped": trial.stopped, "ok": trial.ok,
    }));

    let mut report = config_echo(eff);
    report.push_str("# --- result ---\n");
    report.push_str(&format!("n = {n}\nseed = {seed}\n"));
    report.push_str(&format!("interactions = {}\n", trial.interactions));
    report.push_str(&format!("settled_at = {}\n", trial.settled_at));
    report.push_str(&format!(
        "parallel_time = {}\n",
        analysis::format_sig6(trial.parallel_time)
    ));
    report.push_str(&format!("stopped = {}\n", trial.stopped));
    report.push_str(&format!("converged = {}\n", trial.converged));
    report.push_str(&format!("budget_exhausted = {}\n", trial.budget_exhausted));
    report.push_str(&format!("ok = {}\n", trial.ok));
    report.push_str(&format!("outputs = \"{}\"\n", trial.outputs));
    write_artifact(&out_path(args), &report)?;

    if let (Some(out), Some(_)) = (&args.out, eff.stride) {
        let mut csv = config_echo(eff).into_bytes();
        analysis::emit_timeseries(&trial.snapshots, &mut csv)
            .map_err(|e| fail(1, format!("csv write failed: {e}")))?;
        fs::write(out.with_extension("csv"), csv)
            .map_err(|e| fail(1, format!("csv write failed: {e}")))?;
        let mut svg = Vec::new();
        let title = format!("{} n={n} seed={seed}", eff.protocol);
        analysis::emit_svg_chart(&trial.snapshots, &title, &mut svg)
            .map_err(|e| fail(1, format!("svg write failed: {e}")))?;
        fs::write(out.with_extension("svg"), svg)
            .map_err(|e| fail(1, format!("svg write failed: {e}")))?;
    }

    if trial.ok {
        Ok(())
    } else if trial.budget_exhausted {
        Err(fail(3, "budget exhausted without convergence"))
    } else {
        Err(fail(2, "execution finished with incorrect outputs"))
    }
}

fn farm(
    eff: &Effective,
    n: usize,
    logger: &Logger,
) -> Result<Vec<TrialMetric>, Failure> {
    let seeds = &eff.seeds;
    let chunk = seeds.len().div_ceil(eff.jobs);
    let results: Mutex<Vec<(usize, Vec<Result<Trial, Failure>>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for (idx, part) in seeds.chunks(chunk).enumerate() {
            let results = &results;
            scope.spawn(move || {
                let batch: Vec<Result<Trial, Failure>> =
                    part.iter().map(|&s| run_trial(eff, n, s)).collect();
                results.lock().unwrap().push((idx, batch));
            });
        }
    });
    let mut parts = results.into_inner().unwrap();
    parts.sort_by_key(|(idx, _)| *idx);
    let mut metrics = Vec::with_capacity(seeds.len());
    for (_, batch) in parts {
        for trial in batch {
            let trial = trial?;
            logger.event(serde_json::json!({
                "event": "trial", "n": n, "seed": trial.seed,
                "interactions": trial.interactions, "ok": trial.ok,
                "outputs": trial.outputs,
            }));
            metrics.push(TrialMetric {
                seed: trial.seed,
                interactions: trial.settled_at,
                converged: trial.ok,
            });
        }
    }
    Ok(metrics)
}

fn cmd_sweep(eff: &Effective, args: &CommonArgs) -> Result<(), Failure> {
    let logger = Logger::open(&args.log)?;
    let mut report = config_echo(eff);
    report.push_str("# --- results ---\n");
    let mut any_success = false;
    for &n in &eff.n {
        let metrics = farm(eff, n, &logger)?;
        let s = summarize(&metrics);
        any_success |= s.success_rate > 0.0;
        report.push_str(&format!(
            "n = {n}: trials = {}, success_rate = {}, mean_interactions = {}, p50 = {}, p95 = {}",
            s.trials,
            analysis::format_sig6(s.success_rate),
            analysis::format_sig6(s.mean_interactions),
            s.p50,
            s.p95
        ));
        if eff.protocol == "epidemic" {
            let expected = (n as f64 - 1.0) * analysis::harmonic(n as u64 - 1);
            report.push_str(&format!(
                ", expected_interactions = {}",
                analysis::format_sig6(expected)
            ));
        }
        report.push('\n');
    }
    write_artifact(&out_path(args), &report)?;
    if any_success {
        Ok(())
    } else {
        Err(fail(3, "no trial converged at any n"))
    }
}

fn reach_report<P>(
    proto: &P,
    inputs: &[P::Input],
    cap: usize,
) -> Result<(usize, bool), Failure>
where
    P: Protocol,
    P::State: Ord + std::hash::Hash,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let initial: Vec<P::State> = inputs.iter().map(|i| proto.init(i, &mut rng)).collect();
    let set = reachable_set(proto, &initial, cap).map_err(reach_fail)?;
    let stable = check_stably_correct(proto, &initial, cap).map_err(reach_fail)?;
    Ok((set.len(), stable))
}

fn reach_fail(e: SimError) -> Failure {
    match e {
        SimError::CapExceeded { cap, visited } => fail(
            4,
            format!("reachability cap {cap} overflowed; {visited} configurations visited"),
        ),
        other => fail(2, format!("{other}")),
    }
}

fn cmd_reach(eff: &Effective, args: &CommonArgs) -> Result<(), Failure> {
    let n = eff.n[0];
    let cap = eff.cap;
    let mut report = config_echo(eff);
    report.push_str("# --- result ---\n");
    report.push_str(&format!("protocol = {}\nn = {n}\n", eff.protocol));
    match eff.protocol.as_str() {
        "null" => {
            let (size, stable) = reach_report(&Null, &vec![(); n], cap)?;
            report.push_str(&format!("reachable = {size}\nstably_correct = {stable}\n"));
        }
        "epidemic" => {
            let mut inputs = vec![false; n];
            inputs[0] = true;
            let (size, stable) = reach_report(&Epidemic, &inputs, cap)?;
            report.push_str(&format!("reachable = {size}\nstably_correct = {stable}\n"));
        }
        "fratricide3" => {
            let (size, stable) =
                reach_report(&ThreeStateFratricide, &vec![Contender::Undecided; n], cap)?;
            report.push_str(&format!("reachable = {size}\nstably_correct = {stable}\n"));
        }
        "balls" => {
            let c = eff.params.c.unwrap_or(3) as u32;
            let (size, stable) = reach_report(&Balls::new(c), &vec![(); n], cap)?;
            report.push_str(&format!("reachable = {size}\nstably_correct = {stable}\n"));
        }
        "wrapped-epidemic" => {
            let proto = Wrap::new(Epidemic);
            let inputs: Vec<(bool, bool)> = (0..n).map(|k| (k == 0, k == 0)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let initial: Vec<_> = inputs.iter().map(|i| proto.init(i, &mut rng)).collect();
            let wrapped = reachable_set(&proto, &initial, cap).map_err(reach_fail)?;
            let projected: std::collections::HashSet<_> = wrapped
                .iter()
                .map(|ms| {
                    let mut flat = Vec::new();
                    for (s, count) in ms {
                        for _ in 0..*count {
                            flat.push(s.p);
                        }
                    }
                    multiset_of(&flat)
                })
                .collect();
            let mut direct_inputs = vec![false; n];
            direct_inputs[0] = true;
            let direct_init: Vec<bool> = direct_inputs.clone();
            let direct = reachable_set(&Epidemic, &direct_init, cap).map_err(reach_fail)?;
            report.push_str(&format!("reachable = {}\n", wrapped.len()));
            report.push_str(&format!("projected = {}\n", projected.len()));
            report.push_str(&format!("projected_equals_direct = {}\n", projected == direct));
        }
        other => return Err(fail(1, format!("reach does not support protocol {other}"))),
    }
    write_artifact(&out_path(args), &report)
}
