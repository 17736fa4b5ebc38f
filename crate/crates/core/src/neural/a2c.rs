//! One-step advantage actor-critic.
//!
//! For a transition `(s, a, r, s', done)` the advantage is
//! `A = r + gamma * V(s') * (1 - done) - V(s)`. The policy ascends
//! `A * grad log pi(a | s)` (plus an optional entropy bonus) and the value
//! network descends `(r + gamma * V(s') - V(s))^2` with the bootstrap target
//! held fixed. Both step through RMSProp.

use rand::Rng;

use super::mlp::{Head, Mlp, Workspace};
use super::rmsprop::{RmsProp, RmsPropConfig};
use crate::error::{Error, Result};
use crate::features::feature_dim;

/// Width of each hidden layer in both networks.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Gain on the policy output layer at initialisation; near-uniform start.
pub const POLICY_HEAD_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<'a> {
    pub state: &'a [f64],
    /// 0-based network output index.
    pub action: usize,
    pub reward: f64,
    /// Ignored when `done`.
    pub next_state: &'a [f64],
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub advantage: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Sample from the softmax distribution.
    Sample,
    /// Take the most probable action (lowest index on ties).
    Greedy,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    policy_ws: Workspace,
    value_ws: Workspace,
    next_ws: Workspace,
    policy_grad: Vec<f64>,
    value_grad: Vec<f64>,
    d_logits: Vec<f64>,
}

/// Policy and value networks with their optimizers.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub policy: Mlp,
    pub value: Mlp,
    pub policy_opt: RmsProp,
    pub value_opt: RmsProp,
    scratch: Scratch,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; fall back to the last non-zero entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

impl ActorCritic {
    /// Networks `2N+4 -> hidden.. -> N` (softmax) and `2N+4 -> hidden.. -> 1`.
    pub fn new(n_max: usize, hidden: &[usize], rmsprop: RmsPropConfig, seed: u64) -> Result<Self> {
        rmsprop.validate()?;
        if n_max == 0 {
            return Err(Error::param("N must be at least 1"));
        }
        let input = feature_dim(n_max);
        let mut pdims = vec![input];
        pdims.extend_from_slice(hidden);
        let mut vdims = pdims.clone();
        pdims.push(n_max);
        vdims.push(1);
        let policy = Mlp::new(&pdims, Head::Softmax, POLICY_HEAD_GAIN, seed)?;
        let value = Mlp::new(&vdims, Head::Linear, 1.0, seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
        let policy_opt = RmsProp::new(rmsprop, policy.params().len());
        let value_opt = RmsProp::new(rmsprop, value.params().len());
        Self::from_parts(policy, value, policy_opt, value_opt)
    }

    pub fn from_parts(
        policy: Mlp,
        value: Mlp,
        policy_opt: RmsProp,
        value_opt: RmsProp,
    ) -> Result<Self> {
        if policy.head() != Head::Softmax || value.head() != Head::Linear {
            return Err(Error::Dimension("policy needs a softmax head, value a linear head".into()));
        }
        let n = policy.output_dim();
        if policy.input_dim() != feature_dim(n) || value.input_dim() != feature_dim(n) {
            return Err(Error::Dimension(format!(
                "inputs ({}, {}) do not match 2N+4 = {} for N = {n}",
                policy.input_dim(),
                value.input_dim(),
                feature_dim(n)
            )));
        }
        if value.output_dim() != 1 {
            return Err(Error::Dimension("value network must have one output".into()));
        }
        if policy_opt.square_avg().len() != policy.params().len()
            || value_opt.square_avg().len() != value.params().len()
        {
            return Err(Error::Dimension("optimizer state does not match parameters".into()));
        }
        Ok(ActorCritic {
            policy,
            value,
            policy_opt,
            value_opt,
            scratch: Scratch::default(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn policy_forward(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        self.policy.probabilities(embedding)
    }

    pub fn value_forward(&self, embedding: &[f64]) -> Result<f64> {
        self.value.value(embedding)
    }

    /// Chooses a 0-based action for `embedding`.
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        embedding: &[f64],
        mode: ActionMode,
        rng: &mut R,
    ) -> Result<usize> {
        let probs = self.policy.forward(embedding, &mut self.scratch.policy_ws)?;
        Ok(match mode {
            ActionMode::Greedy => argmax(probs),
            ActionMode::Sample => sample_index(probs, rng),
        })
    }

    /// Applies one actor-critic update for `tr`.
    pub fn update(
        &mut self,
        tr: &Transition<'_>,
        gamma: f64,
        entropy_coef: f64,
    ) -> Result<UpdateStats> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param(format!("discount {gamma} outside [0, 1]")));
        }
        let n = self.n_max();
        if tr.action >= n {
            return Err(Error::param(format!("action index {} >= N = {n}", tr.action)));
        }
        let s = &mut self.scratch;

        let v_next = if tr.done {
            0.0
        } else {
            self.value.forward(tr.next_state, &mut s.next_ws)?[0]
        };
        let v = self.value.forward(tr.state, &mut s.value_ws)?[0];
        let advantage = tr.reward + gamma * v_next - v;
        if !advantage.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite advantage: reward {}, V(s) {v}, V(s') {v_next}",
                tr.reward
            )));
        }

        let probs = self.policy.forward(tr.state, &mut s.policy_ws)?;
        let h = entropy(probs);
        // d(-A log p_a - beta H) / dz_j = -A (1[j=a] - p_j) + beta p_j (ln p_j + H)
        s.d_logits.clear();
        s.d_logits.extend(probs.iter().enumerate().map(|(j, &p)| {
            let onehot = if j == tr.action { 1.0 } else { 0.0 };
            let ent = if p > 0.0 { p * (p.ln() + h) } else { 0.0 };
            -advantage * (onehot - p) + entropy_coef * ent
        }));

        s.policy_grad.clear();
        s.policy_grad.resize(self.policy.params().len(), 0.0);
        self.policy
            .backward(&mut s.policy_ws, &s.d_logits, &mut s.policy_grad);

        s.value_grad.clear();
        s.value_grad.resize(self.value.params().len(), 0.0);
        self.value
            .backward(&mut s.value_ws, &[-2.0 * advantage], &mut s.value_grad);

        if s.policy_grad.iter().chain(&s.value_grad).any(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient (advantage {advantage}, entropy {h})"
            )));
        }
        self.policy_opt.step(self.policy.params_mut(), &s.policy_grad);
        self.value_opt.step(self.value.params_mut(), &s.value_grad);
        Ok(UpdateStats {
            advantage,
            value: v,
            entropy: h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> ActorCritic {
        ActorCritic::new(3, &[5, 4], RmsPropConfig::default(), 1).unwrap()
    }

    #[test]
    fn zero_advantage_leaves_policy_unchanged() {
        let mut ac = small();
        let s = vec![0.3; 10];
        let v = ac.value_forward(&s).unwrap();
        let before = ac.policy.params().to_vec();
        let stats = ac
            .update(
                &Transition {
                    state: &s,
                    action: 1,
                    reward: v,
                    next_state: &s,
                    done: true,
                },
                0.99,
                0.0,
            )
            .unwrap();
        assert_eq!(stats.advantage, 0.0);
        assert_eq!(ac.policy.params(), &before[..]);
    }

    #[test]
    fn terminal_zero_td_error_leaves_value_unchanged() {
        let mut ac = small();
        let s = vec![-0.2; 10];
        let v = ac.value_forward(&s).unwrap();
        let before = ac.value.params().to_vec();
        ac.update(
            &Transition {
                state: &s,
                action: 0,
                reward: v,
                next_state: &[],
                done: true,
            },
            0.5,
            0.01,
        )
        .unwrap();
        assert_eq!(ac.value.params(), &before[..]);
    }

    #[test]
    fn positive_advantage_raises_action_probability() {
        let mut ac = small();
        let s = vec![0.1; 10];
        let p0 = ac.policy_forward(&s).unwrap()[2];
        for _ in 0..20 {
            ac.update(
                &Transition {
                    state: &s,
                    action: 2,
                    reward: 10.0,
                    next_state: &s,
                    done: true,
                },
                0.9,
                0.0,
            )
            .unwrap();
        }
        assert!(ac.policy_forward(&s).unwrap()[2] > p0);
    }

    #[test]
    fn greedy_and_sampled_actions() {
        let mut ac = small();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = vec![0.0; 10];
        let a = ac.act(&s, ActionMode::Greedy, &mut rng).unwrap();
        assert_eq!(a, ac.act(&s, ActionMode::Greedy, &mut rng).unwrap());
        for _ in 0..50 {
            assert!(ac.act(&s, ActionMode::Sample, &mut rng).unwrap() < 3);
        }
    }

    #[test]
    fn sampling_follows_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probs = [0.1, 0.0, 0.6, 0.3];
        let mut counts = [0usize; 4];
        for _ in 0..20_000 {
            counts[sample_index(&probs, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[2] as f64 / 20_000.0 - 0.6).abs() < 0.02);
    }

    #[test]
    fn invalid_updates() {
        let mut ac = small();
        let s = vec![0.0; 10];
        let tr = Transition {
            state: &s,
            action: 3,
            reward: 0.0,
            next_state: &s,
            done: false,
        };
        assert!(ac.update(&tr, 0.9, 0.0).is_err());
        let tr = Transition { action: 0, ..tr };
        assert!(ac.update(&tr, 1.5, 0.0).is_err());
        let bad = vec![f64::NAN; 10];
        let tr = Transition {
            state: &bad,
            ..tr
        };
        assert!(matches!(ac.update(&tr, 0.9, 0.0), Err(Error::Numeric(_))));
    }
}
