//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a command fails at run time, 2 for
//! usage or configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::aggregation::{feature_table, learn_aggregation, AggregationPolicy, QLearningParams};
use crate::baselines::{brute_force_solve, dp_solve_with_budget, greedy_solve, DEFAULT_DP_BUDGET_BYTES};
use crate::config::{fingerprint, RunConfig};
use crate::dataset_io::{read_dataset, write_dataset};
use crate::env::RewardScale;
use crate::error::{Error, Result};
use crate::generate::generate;
use crate::instance::{Dataset, Family, Solution};
use crate::metrics::{
    compare_highest, compute_metrics, highest_counts, learning_curve, render_csv,
    render_instance_csv, render_svg, render_table, steps_to_fraction, TableRow,
};
use crate::neural::{checkpoint, ActionMode, ActorCritic, RmsPropConfig};
use crate::trainer::{solve_with_policy, train, InstanceOrder, TrainConfig, TrainLog};

/// Directory used for outputs whose path is not given explicitly.
pub const OUT_DIR_ENV: &str = "KPAGG_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "kpagg", version, about = "0-1 knapsack solving with actor-critic and state aggregation")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for per-instance parallel work.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of random instances.
    Generate(GenerateArgs),
    /// Learn an aggregation policy from a dataset.
    Aggregate(AggregateArgs),
    /// Train an actor-critic model on a dataset.
    Train(TrainArgs),
    /// Solve every instance of a dataset.
    Solve(SolveArgs),
    /// Report metrics of one or more methods against the exact optimum.
    Evaluate(EvaluateArgs),
    /// Head-to-head comparison of two methods.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// ri, fi or hi.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the fixed capacity of the fi family (scaled units).
    #[arg(long)]
    pub capacity: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Largest split count per feature.
    #[arg(long)]
    pub x: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Aggregation policy file, or `none` for the raw feature vector.
    #[arg(long)]
    pub agg: String,
    #[arg(long)]
    pub tmax: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// random or cyclic.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub entropy: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Divide rewards by the instance scale instead of the initial capacity.
    #[arg(long)]
    pub raw_rewards: bool,
    #[arg(long)]
    pub log_stride: Option<u64>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    #[arg(long)]
    pub out_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Greedy,
    Dp,
    Brute,
    Policy,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub method: SolveMethod,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model checkpoint (policy method).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Aggregation policy file or `none` (policy method).
    #[arg(long)]
    pub agg: Option<String>,
    /// greedy or sample (policy method).
    #[arg(long)]
    pub mode: Option<String>,
    /// Sampled episodes per instance in sample mode.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Memory budget of the dp table in MiB.
    #[arg(long)]
    pub dp_budget_mb: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `[NAME=]SOURCE` with SOURCE one of greedy, dp, log:PATH,
    /// solutions:PATH, policy:MODEL[:AGG]. Repeatable.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    /// auto, full or last-half.
    #[arg(long)]
    pub highest: Option<String>,
    /// Learning-curve sampling interval in steps.
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-instance values as CSV.
    #[arg(long)]
    pub instances_csv: Option<PathBuf>,
    /// SVG learning curves of the log sources.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// First method, `[NAME=]SOURCE`.
    pub a: String,
    /// Second method, `[NAME=]SOURCE`.
    pub b: String,
    #[arg(long)]
    pub highest: Option<String>,
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers.or(cfg.workers) {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        // only the first configuration in a process takes effect
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &cfg),
        Command::Aggregate(a) => cmd_aggregate(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Solve(a) => cmd_solve(a, &cfg),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg),
        Command::Compare(a) => cmd_compare(a, &cfg),
    }
}

fn out_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(default_name)
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing --{flag} (flag or config file)")))
}

fn parse_family(s: &str) -> Result<Family> {
    s.parse()
        .map_err(|_| Error::Config(format!("unknown family `{s}`, expected ri, fi or hi")))
}

fn cmd_generate(a: GenerateArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.generate;
    let family = parse_family(&required(a.family.or(c.family.clone()), "family")?)?;
    let m = required(a.m.or(c.m), "m")?;
    let n = required(a.n.or(c.n), "n")?;
    let r = match family {
        Family::FixedCapacity => a.r.or(c.r).unwrap_or(0),
        _ => required(a.r.or(c.r), "r")?,
    };
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let capacity = a.capacity.or(c.capacity);
    let fp = fingerprint(&format!(
        "generate family={family} m={m} n={n} r={r} seed={seed} capacity={capacity:?}"
    ));
    let ds = generate(family, m, n, r, seed, capacity)?;
    let name = format!("{}_m{m}_n{n}_s{seed}.kp", family.code().to_lowercase());
    let path = out_path(a.out, &name);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_dataset(&ds, &path)?;
    println!("wrote {} instances to {}", ds.len(), path.display());
    println!("fingerprint {fp}");
    Ok(())
}

fn cmd_aggregate(a: AggregateArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.aggregate;
    let d = QLearningParams::default();
    let params = QLearningParams {
        max_splits: a.x.or(c.x).unwrap_or(d.max_splits),
        alpha: a.alpha.or(c.alpha).unwrap_or(d.alpha),
        gamma: a.gamma.or(c.gamma).unwrap_or(d.gamma),
        epsilon: a.epsilon.or(c.epsilon).unwrap_or(d.epsilon),
        iterations: a.iterations.or(c.iterations).unwrap_or(d.iterations),
    };
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let ds = read_dataset(&a.dataset)?;
    let fp = fingerprint(&format!(
        "aggregate dataset={}:{}:{}:{}:{} {params:?} seed={seed}",
        ds.family, ds.params.m, ds.params.n, ds.params.r, ds.params.seed
    ));
    let table = feature_table(&ds.instances, ds.n_max())?;
    let outcome = learn_aggregation(&table, &params, seed)?;
    let path = out_path(a.out, "aggregation.txt");
    let mut text = outcome.policy.to_text();
    writeln!(text, "# fingerprint {fp}").unwrap();
    write_text(&path, &text)?;
    println!("wrote aggregation policy for N={} to {}", ds.n_max(), path.display());
    println!("d* {:?}", outcome.policy.d_star());
    println!("fingerprint {fp}");
    Ok(())
}

fn load_agg(spec: &str) -> Result<Option<AggregationPolicy>> {
    if spec == "none" {
        Ok(None)
    } else {
        AggregationPolicy::load(spec).map(Some)
    }
}

fn cmd_train(a: TrainArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.train;
    let ds = read_dataset(&a.dataset)?;
    let agg = load_agg(&a.agg)?;
    let mut tc = TrainConfig::for_n(ds.n_max());
    tc.t_max = a.tmax.or(c.tmax).unwrap_or(tc.t_max);
    tc.gamma = a.gamma.or(c.gamma).unwrap_or(tc.gamma);
    tc.seed = a.seed.or(c.seed).unwrap_or(tc.seed);
    if let Some(order) = a.order.as_deref().or(c.order.as_deref()) {
        tc.instance_order = match order {
            "random" => InstanceOrder::UniformRandom,
            "cyclic" => InstanceOrder::Cyclic,
            other => {
                return Err(Error::Config(format!(
                    "unknown order `{other}`, expected random or cyclic"
                )))
            }
        };
    }
    tc.entropy_coef = a.entropy.or(c.entropy).unwrap_or(tc.entropy_coef);
    tc.rmsprop = RmsPropConfig {
        learning_rate: a.lr.or(c.lr).unwrap_or(tc.rmsprop.learning_rate),
        decay: a.decay.or(c.decay).unwrap_or(tc.rmsprop.decay),
        epsilon: a.eps.or(c.eps).unwrap_or(tc.rmsprop.epsilon),
    };
    tc.rmsprop
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    tc.hidden = a.hidden.or(c.hidden.clone()).unwrap_or(tc.hidden);
    if a.raw_rewards || c.raw_rewards == Some(true) {
        tc.rewards = RewardScale::Raw;
    }
    tc.step_log_stride = a.log_stride.or(c.log_stride).unwrap_or(tc.step_log_stride);
    if tc.t_max == 0 {
        return Err(Error::Config("--tmax must be at least 1".into()));
    }

    let outcome = train(&ds, agg.as_ref(), &tc)?;
    let model_path = out_path(a.out_model, "model.ckpt");
    let log_path = out_path(a.out_log, "train_log.csv");
    for p in [&model_path, &log_path] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    checkpoint::save(&outcome.model, &model_path)?;
    outcome.log.save_csv(&log_path)?;
    let last = outcome.log.episodes.last().map_or(0.0, |e| e.best_valbar);
    println!(
        "trained {} steps over {} episodes ({} embedding)",
        outcome.log.total_steps,
        outcome.log.episodes.len(),
        outcome.log.embedding
    );
    println!("best Val-bar {last}");
    println!("model {}", model_path.display());
    println!("log {}", log_path.display());
    println!("fingerprint {}", outcome.log.fingerprint);
    Ok(())
}

fn parse_mode(s: &str) -> Result<ActionMode> {
    match s {
        "greedy" => Ok(ActionMode::Greedy),
        "sample" => Ok(ActionMode::Sample),
        other => Err(Error::Config(format!(
            "unknown mode `{other}`, expected greedy or sample"
        ))),
    }
}

fn solve_all(
    ds: &Dataset,
    f: impl Fn(&crate::KpInstance) -> Result<Solution> + Send + Sync,
) -> Result<Vec<Solution>> {
    ds.instances.par_iter().map(f).collect()
}

fn dp_all(ds: &Dataset, budget: usize) -> Result<Vec<Solution>> {
    solve_all(ds, |i| dp_solve_with_budget(i, budget))
}

fn format_solutions(method: &str, scale: u64, fp: &str, sols: &[Solution]) -> String {
    let mut out = String::new();
    writeln!(out, "# kpagg-solutions 1").unwrap();
    writeln!(out, "# method {method}").unwrap();
    writeln!(out, "# scale {scale}").unwrap();
    writeln!(out, "# fingerprint {fp}").unwrap();
    for (i, s) in sols.iter().enumerate() {
        write!(out, "{} {} {}", i + 1, s.total_value, s.total_weight).unwrap();
        for item in &s.selected {
            write!(out, " {item}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads a solutions file written by `solve` and checks each selection
/// against `ds`.
pub fn read_solutions(path: &Path, ds: &Dataset) -> Result<Vec<Solution>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut sols: Vec<Option<Solution>> = vec![None; ds.len()];
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let nums: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, ln, format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if nums.len() < 3 {
            return Err(Error::parse(path, ln, "expected `id value weight items...`"));
        }
        let id = nums[0] as usize;
        if id == 0 || id > ds.len() {
            return Err(Error::parse(path, ln, format!("instance id {id} outside 1..={}", ds.len())));
        }
        if sols[id - 1].is_some() {
            return Err(Error::parse(path, ln, format!("duplicate instance id {id}")));
        }
        let sol = Solution {
            selected: nums[3..].iter().map(|&x| x as usize).collect(),
            total_value: nums[1],
            total_weight: nums[2],
        };
        if !sol.is_feasible(&ds.instances[id - 1]) {
            return Err(Error::Integrity(format!(
                "{}:{ln}: solution for instance {id} is infeasible or misreports its totals",
                path.display()
            )));
        }
        sols[id - 1] = Some(sol);
    }
    sols.into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| Error::parse(path, text.lines().count(), format!("no solution for instance {}", i + 1)))
        })
        .collect()
}

fn cmd_solve(a: SolveArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.solve;
    let ds = read_dataset(&a.dataset)?;
    let budget = a
        .dp_budget_mb
        .or(c.dp_budget_mb)
        .map_or(DEFAULT_DP_BUDGET_BYTES, |mb| mb << 20);
    let mode_name = a.mode.or(c.mode.clone()).unwrap_or_else(|| "greedy".into());
    let mode = parse_mode(&mode_name)?;
    let episodes = a.episodes.or(c.episodes).unwrap_or(64);
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let (sols, canonical) = match a.method {
        SolveMethod::Greedy => (solve_all(&ds, |i| Ok(greedy_solve(i)))?, "greedy".to_string()),
        SolveMethod::Dp => (dp_all(&ds, budget)?, format!("dp budget={budget}")),
        SolveMethod::Brute => (solve_all(&ds, brute_force_solve)?, "brute".to_string()),
        SolveMethod::Policy => {
            let model_path = a
                .model
                .ok_or_else(|| Error::Config("policy method needs --model".into()))?;
            let agg_spec = a
                .agg
                .ok_or_else(|| Error::Config("policy method needs --agg FILE|none".into()))?;
            let model = checkpoint::load(&model_path, None)?;
            let agg = load_agg(&agg_spec)?;
            let sols = solve_all(&ds, |i| {
                solve_with_policy(&model, agg.as_ref(), i, mode, episodes, seed)
            })?;
            (
                sols,
                format!(
                    "policy model={} agg={agg_spec} mode={mode_name} episodes={episodes} seed={seed}",
                    model_path.display()
                ),
            )
        }
    };
    let fp = fingerprint(&format!(
        "solve dataset={}:{}:{}:{}:{} {canonical}",
        ds.family, ds.params.m, ds.params.n, ds.params.r, ds.params.seed
    ));
    let method = format!("{:?}", a.method).to_lowercase();
    let path = out_path(a.out, &format!("solutions_{method}.txt"));
    let scale = ds.instances.first().map_or(1, |i| i.scale);
    write_text(&path, &format_solutions(&method, scale, &fp, &sols))?;
    let total: u128 = sols.iter().map(|s| s.total_value as u128).sum();
    println!("solved {} instances with {method}, total value {total}", sols.len());
    println!("wrote {}", path.display());
    println!("fingerprint {fp}");
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Greedy,
    Dp,
    Log(PathBuf),
    Solutions(PathBuf),
    Policy { model: PathBuf, agg: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
struct MethodSpec {
    name: String,
    source: Source,
}

fn parse_method(spec: &str) -> Result<MethodSpec> {
    let (name, src) = match spec.split_once('=') {
        Some((n, s)) => (Some(n.to_string()), s),
        None => (None, spec),
    };
    let stem = |p: &str| {
        Path::new(p)
            .file_stem()
            .map_or_else(|| p.to_string(), |s| s.to_string_lossy().into_owned())
    };
    let (default, source) = if src == "greedy" {
        ("Greedy".to_string(), Source::Greedy)
    } else if src == "dp" {
        ("DP".to_string(), Source::Dp)
    } else if let Some(p) = src.strip_prefix("log:") {
        (stem(p), Source::Log(p.into()))
    } else if let Some(p) = src.strip_prefix("solutions:") {
        (stem(p), Source::Solutions(p.into()))
    } else if let Some(rest) = src.strip_prefix("policy:") {
        let (model, agg) = match rest.split_once(':') {
            Some((m, "none")) => (m, None),
            Some((m, a)) => (m, Some(PathBuf::from(a))),
            None => (rest, None),
        };
        (
            stem(model),
            Source::Policy {
                model: model.into(),
                agg,
            },
        )
    } else {
        return Err(Error::Config(format!(
            "unknown method source `{src}`; use greedy, dp, log:PATH, solutions:PATH or policy:MODEL[:AGG]"
        )));
    };
    if src.ends_with(':') || src.ends_with("log:") {
        return Err(Error::Config(format!("method source `{src}` is missing a path")));
    }
    Ok(MethodSpec {
        name: name.unwrap_or(default),
        source,
    })
}

struct Evaluated {
    spec: MethodSpec,
    values: Vec<u64>,
    log: Option<TrainLog>,
}

fn method_values(spec: &MethodSpec, ds: &Dataset, optima: &[Solution]) -> Result<Evaluated> {
    let mut log = None;
    let values = match &spec.source {
        Source::Greedy => ds.instances.par_iter().map(|i| greedy_solve(i).total_value).collect(),
        Source::Dp => optima.iter().map(|s| s.total_value).collect(),
        Source::Log(path) => {
            let l = TrainLog::load_csv(path)?;
            if l.m != ds.len() {
                return Err(Error::Dimension(format!(
                    "{} covers M={}, dataset has M={}",
                    path.display(),
                    l.m,
                    ds.len()
                )));
            }
            let v = l.best_values();
            log = Some(l);
            v
        }
        Source::Solutions(path) => read_solutions(path, ds)?
            .into_iter()
            .map(|s| s.total_value)
            .collect(),
        Source::Policy { model, agg } => {
            let model: ActorCritic = checkpoint::load(model, None)?;
            let agg = agg.as_ref().map(AggregationPolicy::load).transpose()?;
            solve_all(ds, |i| {
                solve_with_policy(&model, agg.as_ref(), i, ActionMode::Greedy, 0, 0)
            })?
            .into_iter()
            .map(|s| s.total_value)
            .collect()
        }
    };
    Ok(Evaluated {
        spec: spec.clone(),
        values,
        log,
    })
}

fn last_half_for(ds: &Dataset, setting: Option<&str>) -> Result<bool> {
    match setting.unwrap_or("auto") {
        "auto" => Ok(ds.family == Family::Hard),
        "full" => Ok(false),
        "last-half" => Ok(true),
        other => Err(Error::Config(format!(
            "unknown highest range `{other}`, expected auto, full or last-half"
        ))),
    }
}

struct Report {
    rows: Vec<TableRow>,
    evaluated: Vec<Evaluated>,
    last_half: bool,
    fingerprint: String,
}

fn build_report(
    dataset: &Path,
    specs: &[String],
    highest: Option<&str>,
    budget: usize,
) -> Result<Report> {
    let ds = read_dataset(dataset)?;
    let specs: Vec<MethodSpec> = specs.iter().map(|s| parse_method(s)).collect::<Result<_>>()?;
    let last_half = last_half_for(&ds, highest)?;
    let optima = dp_all(&ds, budget)?;
    let optimum_values: Vec<u64> = optima.iter().map(|s| s.total_value).collect();
    let scale = crate::trainer::common_scale(&ds)?;
    let evaluated: Vec<Evaluated> = specs
        .iter()
        .map(|s| method_values(s, &ds, &optima))
        .collect::<Result<_>>()?;
    let contenders: Vec<usize> = (0..evaluated.len())
        .filter(|&i| evaluated[i].spec.source != Source::Dp)
        .collect();
    let counted = highest_counts(
        &contenders.iter().map(|&i| &evaluated[i].values[..]).collect::<Vec<_>>(),
        last_half,
    )?;
    let mut highest = vec![0; evaluated.len()];
    for (&i, c) in contenders.iter().zip(counted) {
        highest[i] = c;
    }
    let rows = evaluated
        .iter()
        .zip(highest)
        .map(|(e, h)| {
            Ok(TableRow {
                dataset: ds.family.code().to_string(),
                method: e.spec.name.clone(),
                n: ds.n_max(),
                report: compute_metrics(&e.values, &optimum_values, scale)?,
                highest: h,
            })
        })
        .collect::<Result<_>>()?;
    let fp = fingerprint(&format!(
        "evaluate dataset={}:{}:{}:{}:{} methods={specs:?} last_half={last_half}",
        ds.family, ds.params.m, ds.params.n, ds.params.r, ds.params.seed
    ));
    Ok(Report {
        rows,
        evaluated,
        last_half,
        fingerprint: fp,
    })
}

fn write_plot(path: &Path, report: &Report, window: u64) -> Result<()> {
    let curves = report
        .evaluated
        .iter()
        .filter_map(|e| e.log.as_ref().map(|l| (e.spec.name.clone(), l)))
        .map(|(name, l)| Ok((name, learning_curve(l, window)?)))
        .collect::<Result<Vec<_>>>()?;
    if curves.is_empty() {
        return Err(Error::Config("--plot needs at least one log: source".into()));
    }
    write_text(path, &render_svg("best-so-far Val-bar", &curves))
}

fn cmd_evaluate(a: EvaluateArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.evaluate;
    let methods = if a.methods.is_empty() {
        vec!["greedy".to_string()]
    } else {
        a.methods
    };
    let highest = a.highest.or(c.highest.clone());
    let report = build_report(&a.dataset, &methods, highest.as_deref(), DEFAULT_DP_BUDGET_BYTES)?;
    print!("{}", render_table(&report.rows));
    println!(
        "#highest over {} instances",
        if report.last_half { "the last M/2" } else { "all" }
    );
    println!("fingerprint {}", report.fingerprint);
    if let Some(p) = a.csv {
        write_text(&p, &format!("# fingerprint {}\n{}", report.fingerprint, render_csv(&report.rows)))?;
    }
    if let Some(p) = a.instances_csv {
        write_text(&p, &render_instance_csv(&report.rows))?;
    }
    if let Some(p) = a.plot {
        write_plot(&p, &report, a.window.or(c.window).unwrap_or(1000))?;
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs, cfg: &RunConfig) -> Result<()> {
    let c = &cfg.evaluate;
    let highest = a.highest.or(c.highest.clone());
    let report = build_report(
        &a.dataset,
        &[a.a, a.b],
        highest.as_deref(),
        DEFAULT_DP_BUDGET_BYTES,
    )?;
    let (ea, eb) = (&report.evaluated[0], &report.evaluated[1]);
    let (wa, wb) = compare_highest(&ea.values, &eb.values, report.last_half)?;
    print!("{}", render_table(&report.rows));
    let range = if report.last_half { "last M/2" } else { "all" };
    println!("strict wins over {range} instances: {} {wa}, {} {wb}", ea.spec.name, eb.spec.name);
    let mut csv = format!(
        "# fingerprint {}\nmethod,wins,steps_to_99pct\n",
        report.fingerprint
    );
    for (e, w) in [(ea, wa), (eb, wb)] {
        let t99 = e.log.as_ref().and_then(|l| steps_to_fraction(l, 0.99));
        if let Some(t) = t99 {
            println!("{} first reaches 99% of its final Val-bar at step {t}", e.spec.name);
        }
        writeln!(csv, "{},{w},{}", e.spec.name, t99.map_or(String::new(), |t| t.to_string())).unwrap();
    }
    println!("fingerprint {}", report.fingerprint);
    if let Some(p) = a.csv {
        write_text(&p, &csv)?;
    }
    if let Some(p) = a.plot {
        write_plot(&p, &report, a.window.or(c.window).unwrap_or(1000))?;
    }
    Ok(())
}
