//! Knapsack filling as a sequential decision process.
//!
//! Action `i` picks the rank-`i` item of the current feature vector, i.e. the
//! `i`-th best remaining value/weight ratio. Picking an item that fits adds it;
//! picking one that does not removes it without touching the capacity; picking
//! a rank past the remaining item count changes nothing and is penalised by
//! the remaining capacity. Episodes end when no items remain, the capacity is
//! exhausted, or `2N` decisions were made.

use crate::error::{Error, Result};
use crate::features::{build_ranked, FeatureVector};
use crate::instance::{KpInstance, Solution};

/// 1-based rank of the item to pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionIndex(usize);

impl ActionIndex {
    pub fn new(rank: usize, n_max: usize) -> Result<Self> {
        if rank == 0 || rank > n_max {
            return Err(Error::param(format!("action {rank} outside 1..={n_max}")));
        }
        Ok(ActionIndex(rank))
    }

    /// From a 0-based network output index.
    pub(crate) fn from_output(index: usize) -> Self {
        ActionIndex(index + 1)
    }

    pub fn rank(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    /// Original indices of the items still on offer, in rank order.
    pub remaining: Vec<usize>,
    pub capacity_left: u64,
    pub ow: u64,
    pub ov: u64,
    pub steps: usize,
    pub done: bool,
    /// Original indices of accepted items, in acceptance order.
    pub accepted: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Accepted(usize),
    Rejected(usize),
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub kind: StepKind,
}

/// How rewards are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardScale {
    /// `+v`, `-w`, `-W'` divided by the instance's initial capacity.
    #[default]
    CapacityNormalized,
    /// `+v`, `-w`, `-W'` in unscaled instance units.
    Raw,
}

#[derive(Debug, Clone, Copy)]
pub struct KpEnv<'a> {
    instance: &'a KpInstance,
    n_max: usize,
    rewards: RewardScale,
}

impl<'a> KpEnv<'a> {
    pub fn new(instance: &'a KpInstance, n_max: usize, rewards: RewardScale) -> Result<Self> {
        if instance.items.len() > n_max {
            return Err(Error::param(format!(
                "instance {} has {} items, the model handles at most {n_max}",
                instance.id,
                instance.items.len()
            )));
        }
        Ok(KpEnv {
            instance,
            n_max,
            rewards,
        })
    }

    pub fn instance(&self) -> &'a KpInstance {
        self.instance
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Step guard: no episode makes more than `2N` decisions.
    pub fn step_limit(&self) -> usize {
        2 * self.n_max
    }

    pub fn reset(&self) -> EnvState {
        let remaining = self.instance.ratio_order();
        let done = remaining.is_empty() || self.instance.capacity == 0;
        EnvState {
            remaining,
            capacity_left: self.instance.capacity,
            ow: 0,
            ov: 0,
            steps: 0,
            done,
            accepted: Vec::new(),
        }
    }

    /// Feature vector of the remaining sub-instance.
    pub fn features(&self, state: &EnvState) -> Result<FeatureVector> {
        build_ranked(
            &self.instance.items,
            &state.remaining,
            state.capacity_left,
            self.instance.scale,
            self.n_max,
        )
    }

    fn scale_reward(&self, raw: u64) -> f64 {
        match self.rewards {
            RewardScale::CapacityNormalized => raw as f64 / self.instance.capacity as f64,
            RewardScale::Raw => raw as f64 / self.instance.scale as f64,
        }
    }

    /// Pure transition: returns the successor state, reward and done flag.
    pub fn step(&self, state: &EnvState, action: ActionIndex) -> Result<(EnvState, f64, bool)> {
        let mut next = state.clone();
        let r = self.apply(&mut next, action)?;
        Ok((next, r.reward, r.done))
    }

    /// In-place transition.
    pub fn apply(&self, state: &mut EnvState, action: ActionIndex) -> Result<StepResult> {
        if state.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        if action.0 == 0 || action.0 > self.n_max {
            return Err(Error::param(format!("action {} outside 1..={}", action.0, self.n_max)));
        }
        let (reward, kind) = if action.0 > state.remaining.len() {
            (-self.scale_reward(state.capacity_left), StepKind::Undefined)
        } else {
            let idx = state.remaining.remove(action.0 - 1);
            let item = self.instance.items[idx];
            if item.weight <= state.capacity_left {
                state.capacity_left -= item.weight;
                state.ow += item.weight;
                state.ov += item.value;
                state.accepted.push(idx);
                (self.scale_reward(item.value), StepKind::Accepted(idx))
            } else {
                (-self.scale_reward(item.weight), StepKind::Rejected(idx))
            }
        };
        state.steps += 1;
        state.done = state.remaining.is_empty()
            || state.capacity_left == 0
            || state.steps >= self.step_limit();
        Ok(StepResult {
            reward,
            done: state.done,
            kind,
        })
    }

    pub fn solution(&self, state: &EnvState) -> Solution {
        Solution::from_selection(self.instance, state.accepted.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Item;

    fn inst(items: &[(u64, u64)], capacity: u64) -> KpInstance {
        KpInstance {
            id: 1,
            items: items.iter().map(|&(v, w)| Item::new(v, w)).collect(),
            capacity,
            scale: 1,
        }
    }

    fn act(i: usize) -> ActionIndex {
        ActionIndex(i)
    }

    #[test]
    fn reset_is_pure() {
        let p = inst(&[(4, 3), (1, 5)], 10);
        let env = KpEnv::new(&p, 5, RewardScale::Raw).unwrap();
        let s = env.reset();
        assert_eq!(s.capacity_left, 10);
        assert_eq!((s.ow, s.ov, s.steps, s.done), (0, 0, 0, false));
        assert_eq!(s, env.reset());
    }

    #[test]
    fn accept_case() {
        let p = inst(&[(4, 3), (1, 5)], 10);
        let env = KpEnv::new(&p, 5, RewardScale::Raw).unwrap();
        let (s, r, done) = env.step(&env.reset(), act(1)).unwrap();
        assert_eq!(r, 4.0);
        assert_eq!(s.capacity_left, 7);
        assert_eq!(s.remaining, vec![1]);
        assert!(!done);
    }

    #[test]
    fn reject_case_keeps_capacity() {
        let p = inst(&[(9, 12), (1, 5)], 10);
        let env = KpEnv::new(&p, 5, RewardScale::Raw).unwrap();
        let (s, r, _) = env.step(&env.reset(), act(1)).unwrap();
        assert_eq!(r, -12.0);
        assert_eq!(s.capacity_left, 10);
        assert_eq!(s.remaining, vec![1]);
    }

    #[test]
    fn undefined_case() {
        let p = inst(&[(1, 1), (1, 2), (1, 3)], 10);
        let env = KpEnv::new(&p, 5, RewardScale::Raw).unwrap();
        let s0 = env.reset();
        let (s, r, _) = env.step(&s0, act(5)).unwrap();
        assert_eq!(r, -10.0);
        assert_eq!(s.remaining, s0.remaining);
        assert_eq!(s.steps, 1);
    }

    #[test]
    fn normalized_rewards_divide_by_capacity() {
        let p = inst(&[(4, 3), (9, 12)], 8);
        let env = KpEnv::new(&p, 3, RewardScale::CapacityNormalized).unwrap();
        let mut s = env.reset();
        assert_eq!(env.apply(&mut s, act(1)).unwrap().reward, 0.5);
        assert_eq!(env.apply(&mut s, act(3)).unwrap().reward, -5.0 / 8.0);
        assert_eq!(env.apply(&mut s, act(1)).unwrap().reward, -1.5);
    }

    #[test]
    fn step_after_done_is_usage_error() {
        let p = inst(&[(4, 3)], 10);
        let env = KpEnv::new(&p, 2, RewardScale::Raw).unwrap();
        let (s, _, done) = env.step(&env.reset(), act(1)).unwrap();
        assert!(done);
        assert!(matches!(env.step(&s, act(1)), Err(Error::Usage(_))));
    }

    #[test]
    fn guard_ends_undefined_loops() {
        let p = inst(&[(4, 30)], 10);
        let env = KpEnv::new(&p, 3, RewardScale::Raw).unwrap();
        let mut s = env.reset();
        let mut n = 0;
        while !s.done {
            env.apply(&mut s, act(3)).unwrap();
            n += 1;
        }
        assert_eq!(n, 6);
    }

    #[test]
    fn exact_fill_terminates() {
        let p = inst(&[(4, 5), (3, 5), (1, 7)], 10);
        let env = KpEnv::new(&p, 3, RewardScale::Raw).unwrap();
        let mut s = env.reset();
        env.apply(&mut s, act(1)).unwrap();
        let r = env.apply(&mut s, act(1)).unwrap();
        assert!(r.done);
        assert_eq!(env.solution(&s).total_value, 7);
    }

    #[test]
    fn oversized_instance_rejected() {
        let p = inst(&[(1, 1), (1, 1)], 3);
        assert!(KpEnv::new(&p, 1, RewardScale::Raw).is_err());
        assert!(ActionIndex::new(0, 3).is_err());
        assert!(ActionIndex::new(4, 3).is_err());
    }
}
