//! Actor-critic training over a dataset and policy rollouts.
//!
//! Training repeatedly picks an instance, rolls out one episode with a
//! softmax-sampled policy, updates both networks after every transition and
//! remembers the best episode value per instance. It stops at the first
//! episode boundary at or after `t_max` environment steps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aggregation::AggregationPolicy;
use crate::config::fingerprint;
use crate::env::{ActionIndex, EnvState, KpEnv, RewardScale};
use crate::error::{Error, Result};
use crate::features::feature_dim;
use crate::instance::{Dataset, KpInstance, Solution};
use crate::neural::{ActionMode, ActorCritic, RmsPropConfig, Transition, DEFAULT_HIDDEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceOrder {
    Cyclic,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Environment-step budget.
    pub t_max: u64,
    pub gamma: f64,
    pub instance_order: InstanceOrder,
    pub seed: u64,
    /// Entropy bonus weight; 0 disables it.
    pub entropy_coef: f64,
    pub rmsprop: RmsPropConfig,
    pub hidden: Vec<usize>,
    pub rewards: RewardScale,
    /// Keep every `k`-th step record in the log (0 keeps none).
    pub step_log_stride: u64,
}

impl TrainConfig {
    /// Defaults for models over at most `n_max` items: `t_max = 3N * 10^4`.
    pub fn for_n(n_max: usize) -> Self {
        TrainConfig {
            t_max: 3 * n_max as u64 * 10_000,
            gamma: 0.99,
            instance_order: InstanceOrder::UniformRandom,
            seed: 0,
            entropy_coef: 0.01,
            rmsprop: RmsPropConfig::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            rewards: RewardScale::CapacityNormalized,
            step_log_stride: 1000,
        }
    }

    /// Everything but the embedding, so both ablation arms share it.
    fn canonical(&self, ds: &Dataset) -> String {
        format!(
            "dataset={}:{}:{}:{}:{} t_max={} gamma={} order={:?} seed={} entropy={} \
             rmsprop={}:{}:{} hidden={:?} rewards={:?}",
            ds.family,
            ds.params.m,
            ds.params.n,
            ds.params.r,
            ds.params.seed,
            self.t_max,
            self.gamma,
            self.instance_order,
            self.seed,
            self.entropy_coef,
            self.rmsprop.learning_rate,
            self.rmsprop.decay,
            self.rmsprop.epsilon,
            self.hidden,
            self.rewards,
        )
    }

    pub fn fingerprint(&self, ds: &Dataset) -> String {
        fingerprint(&self.canonical(ds))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub instance: u32,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// Total steps taken when the episode finished.
    pub t: u64,
    pub instance: u32,
    /// Scaled integer value of the episode's selection.
    pub value: u64,
    /// Mean best value over all instances after this episode, unscaled.
    pub best_valbar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub fingerprint: String,
    /// `aggregated` or `raw`.
    pub embedding: String,
    pub m: usize,
    pub scale: u64,
    pub total_steps: u64,
    pub steps: Vec<StepRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

/// Best episode per instance, indexed by `id - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSolutions {
    pub values: Vec<u64>,
    pub solutions: Vec<Solution>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub log: TrainLog,
    pub best: BestSolutions,
}

/// Shared scale of all instances in a dataset.
pub fn common_scale(ds: &Dataset) -> Result<u64> {
    let scale = ds.instances.first().map_or(1, |i| i.scale);
    if ds.instances.iter().any(|i| i.scale != scale) {
        return Err(Error::param("dataset mixes instance scales"));
    }
    Ok(scale)
}

/// Writes the model input for the current state into `out`.
fn observe(
    env: &KpEnv<'_>,
    state: &EnvState,
    aggregation: Option<&AggregationPolicy>,
    out: &mut Vec<f64>,
) -> Result<()> {
    let fv = env.features(state)?;
    match aggregation {
        Some(policy) => {
            out.resize(fv.entries.len(), 0.0);
            policy.embed_into(&fv.entries, out)
        }
        None => {
            out.clear();
            out.extend_from_slice(&fv.entries);
            Ok(())
        }
    }
}

fn check_dims(n_max: usize, aggregation: Option<&AggregationPolicy>) -> Result<()> {
    if let Some(p) = aggregation {
        if p.n_max() != n_max {
            return Err(Error::Dimension(format!(
                "aggregation policy is for N={}, model for N={n_max}",
                p.n_max()
            )));
        }
    }
    Ok(())
}

pub fn train(
    dataset: &Dataset,
    aggregation: Option<&AggregationPolicy>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if config.t_max == 0 {
        return Err(Error::param("t_max must be at least 1"));
    }
    if dataset.is_empty() {
        return Err(Error::param("dataset has no instances"));
    }
    let n_max = dataset.n_max();
    check_dims(n_max, aggregation)?;
    let scale = common_scale(dataset)?;
    let m = dataset.len();
    let mut model = ActorCritic::new(n_max, &config.hidden, config.rmsprop, config.seed)?;

    let mut pick_rng = ChaCha8Rng::seed_from_u64(config.seed);
    pick_rng.set_stream(1);
    let mut act_rng = ChaCha8Rng::seed_from_u64(config.seed);
    act_rng.set_stream(2);

    let mut best = BestSolutions {
        values: vec![0; m],
        solutions: vec![Solution::default(); m],
    };
    let mut best_sum: u128 = 0;
    let mut log = TrainLog {
        fingerprint: config.fingerprint(dataset),
        embedding: if aggregation.is_some() { "aggregated" } else { "raw" }.to_string(),
        m,
        scale,
        total_steps: 0,
        steps: Vec::new(),
        episodes: Vec::new(),
    };

    let dim = feature_dim(n_max);
    let mut cur = Vec::with_capacity(dim);
    let mut next = Vec::with_capacity(dim);
    let mut t: u64 = 0;
    let mut episode: usize = 0;
    while t < config.t_max {
        let k = match config.instance_order {
            InstanceOrder::Cyclic => episode % m,
            InstanceOrder::UniformRandom => pick_rng.gen_range(0..m),
        };
        episode += 1;
        let instance = &dataset.instances[k];
        let env = KpEnv::new(instance, n_max, config.rewards)?;
        let mut state = env.reset();
        if !state.done {
            observe(&env, &state, aggregation, &mut cur)?;
        }
        while !state.done {
            let a = model.act(&cur, ActionMode::Sample, &mut act_rng)?;
            let step = env.apply(&mut state, ActionIndex::from_output(a))?;
            if !step.done {
                observe(&env, &state, aggregation, &mut next)?;
            }
            model
                .update(
                    &Transition {
                        state: &cur,
                        action: a,
                        reward: step.reward,
                        next_state: &next,
                        done: step.done,
                    },
                    config.gamma,
                    config.entropy_coef,
                )
                .map_err(|e| match e {
                    Error::Numeric(msg) => Error::Numeric(format!(
                        "{msg} at step {t}, instance {}",
                        instance.id
                    )),
                    other => other,
                })?;
            t += 1;
            if config.step_log_stride > 0 && t.is_multiple_of(config.step_log_stride) {
                log.steps.push(StepRecord {
                    t,
                    instance: instance.id,
                    reward: step.reward,
                });
            }
            std::mem::swap(&mut cur, &mut next);
        }
        if state.ov > best.values[k] {
            best_sum += (state.ov - best.values[k]) as u128;
            best.values[k] = state.ov;
            best.solutions[k] = env.solution(&state);
        }
        log.episodes.push(EpisodeRecord {
            t,
            instance: instance.id,
            value: state.ov,
            best_valbar: best_sum as f64 / (m as f64 * scale as f64),
        });
    }
    log.total_steps = t;
    Ok(TrainOutcome { model, log, best })
}

fn rollout<R: Rng>(
    model: &mut ActorCritic,
    env: &KpEnv<'_>,
    aggregation: Option<&AggregationPolicy>,
    mode: ActionMode,
    rng: &mut R,
) -> Result<Solution> {
    let mut state = env.reset();
    let mut obs = Vec::new();
    while !state.done {
        observe(env, &state, aggregation, &mut obs)?;
        let a = model.act(&obs, mode, rng)?;
        env.apply(&mut state, ActionIndex::from_output(a))?;
    }
    Ok(env.solution(&state))
}

/// Solves `instance` with a trained policy. `Greedy` runs one argmax episode;
/// `Sample` returns the best of that episode and `episodes` sampled ones.
pub fn solve_with_policy(
    model: &ActorCritic,
    aggregation: Option<&AggregationPolicy>,
    instance: &KpInstance,
    mode: ActionMode,
    episodes: usize,
    seed: u64,
) -> Result<Solution> {
    let n_max = model.n_max();
    check_dims(n_max, aggregation)?;
    let env = KpEnv::new(instance, n_max, RewardScale::default())?;
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance.id as u64);
    let mut best = rollout(&mut model, &env, aggregation, ActionMode::Greedy, &mut rng)?;
    if mode == ActionMode::Sample {
        for _ in 0..episodes {
            let s = rollout(&mut model, &env, aggregation, ActionMode::Sample, &mut rng)?;
            if s.total_value > best.total_value {
                best = s;
            }
        }
    }
    Ok(best)
}

/// Exact decimal rendering of a scaled integer.
pub fn format_scaled(value: u64, scale: u64) -> String {
    if scale == 1 {
        return value.to_string();
    }
    let digits = scale.trailing_zeros_base10();
    format!("{}.{:0width$}", value / scale, value % scale, width = digits)
}

/// Inverse of [`format_scaled`].
pub fn parse_scaled(text: &str, scale: u64) -> Option<u64> {
    let digits = scale.trailing_zeros_base10();
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > digits || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int: u64 = int.parse().ok()?;
    let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let frac_scaled = frac_val * 10u64.pow((digits - frac.len()) as u32);
    int.checked_mul(scale)?.checked_add(frac_scaled)
}

trait Base10 {
    fn trailing_zeros_base10(self) -> usize;
}

impl Base10 for u64 {
    fn trailing_zeros_base10(mut self) -> usize {
        let mut n = 0;
        while self >= 10 && self.is_multiple_of(10) {
            self /= 10;
            n += 1;
        }
        n
    }
}

const LOG_TAG: &str = "kpagg-trainlog";
const LOG_HEADER: &str = "t,instance,episode_value,best_valbar";

impl TrainLog {
    /// CSV with `# key value` preamble lines and one row per episode.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {LOG_TAG} 1").unwrap();
        writeln!(out, "# fingerprint {}", self.fingerprint).unwrap();
        writeln!(out, "# embedding {}", self.embedding).unwrap();
        writeln!(out, "# m {}", self.m).unwrap();
        writeln!(out, "# scale {}", self.scale).unwrap();
        writeln!(out, "# total_steps {}", self.total_steps).unwrap();
        writeln!(out, "{LOG_HEADER}").unwrap();
        for e in &self.episodes {
            writeln!(
                out,
                "{},{},{},{}",
                e.t,
                e.instance,
                format_scaled(e.value, self.scale),
                e.best_valbar
            )
            .unwrap();
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    /// Step records are not persisted; a parsed log has none.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let mut log = TrainLog {
            fingerprint: String::new(),
            embedding: String::new(),
            m: 0,
            scale: 1,
            total_steps: 0,
            steps: Vec::new(),
            episodes: Vec::new(),
        };
        let mut seen_header = false;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, val) = meta.split_once(' ').unwrap_or((meta, ""));
                let bad = || Error::parse(path, ln, format!("bad `{key}` value `{val}`"));
                match key {
                    LOG_TAG => {
                        if val != "1" {
                            return Err(Error::parse(path, ln, "unsupported log version"));
                        }
                    }
                    "fingerprint" => log.fingerprint = val.to_string(),
                    "embedding" => log.embedding = val.to_string(),
                    "m" => log.m = val.parse().map_err(|_| bad())?,
                    "scale" => log.scale = val.parse().map_err(|_| bad())?,
                    "total_steps" => log.total_steps = val.parse().map_err(|_| bad())?,
                    _ => return Err(Error::parse(path, ln, format!("unknown key `{key}`"))),
                }
                continue;
            }
            if !seen_header {
                if line != LOG_HEADER {
                    return Err(Error::parse(path, ln, format!("expected header `{LOG_HEADER}`")));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse(path, ln, "expected 4 comma-separated fields"));
            }
            let rec = EpisodeRecord {
                t: f[0].parse().map_err(|_| Error::parse(path, ln, "bad t"))?,
                instance: f[1]
                    .parse()
                    .map_err(|_| Error::parse(path, ln, "bad instance id"))?,
                value: parse_scaled(f[2], log.scale)
                    .ok_or_else(|| Error::parse(path, ln, "bad episode value"))?,
                best_valbar: f[3]
                    .parse()
                    .map_err(|_| Error::parse(path, ln, "bad best_valbar"))?,
            };
            if log.episodes.last().is_some_and(|p| p.t >= rec.t) {
                return Err(Error::parse(path, ln, "t must be strictly increasing"));
            }
            if rec.instance == 0 || rec.instance as usize > log.m {
                return Err(Error::parse(path, ln, "instance id outside 1..=M"));
            }
            log.episodes.push(rec);
        }
        if !seen_header {
            return Err(Error::parse(path, text.lines().count().max(1), "missing CSV header"));
        }
        Ok(log)
    }

    /// Best value per instance (by id) over all logged episodes.
    pub fn best_values(&self) -> Vec<u64> {
        let mut best = vec![0; self.m];
        for e in &self.episodes {
            let slot = &mut best[e.instance as usize - 1];
            *slot = (*slot).max(e.value);
        }
        best
    }
}
