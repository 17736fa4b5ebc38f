//! Environment transitions against an independent simulator.

use kpagg::env::{ActionIndex, KpEnv, RewardScale, StepKind};
use kpagg::{Item, KpInstance};
use proptest::prelude::*;

fn inst(items: &[(u64, u64)], capacity: u64, scale: u64) -> KpInstance {
    KpInstance::new(1, items.iter().map(|&(v, w)| Item::new(v, w)).collect(), capacity, scale)
        .unwrap()
}

/// Plain simulator: remaining items kept in ratio order, ties by index.
#[derive(Clone)]
struct Sim {
    items: Vec<(u64, u64)>,
    remaining: Vec<usize>,
    cap: u64,
    steps: usize,
}

impl Sim {
    fn new(items: &[(u64, u64)], cap: u64) -> Self {
        let mut remaining: Vec<usize> = (0..items.len()).collect();
        // Insertion sort by v_a * w_b > v_b * w_a.
        for i in 1..remaining.len() {
            let mut j = i;
            while j > 0 {
                let (a, b) = (remaining[j - 1], remaining[j]);
                let (va, wa) = items[a];
                let (vb, wb) = items[b];
                let swap = (vb as u128) * (wa as u128) > (va as u128) * (wb as u128);
                if !swap {
                    break;
                }
                remaining.swap(j - 1, j);
                j -= 1;
            }
        }
        Sim { items: items.to_vec(), remaining, cap, steps: 0 }
    }

    /// Unnormalised reward (sign, magnitude).
    fn step(&mut self, rank: usize) -> i64 {
        self.steps += 1;
        if rank > self.remaining.len() {
            return -(self.cap as i64);
        }
        let idx = self.remaining.remove(rank - 1);
        let (v, w) = self.items[idx];
        if w <= self.cap {
            self.cap -= w;
            v as i64
        } else {
            -(w as i64)
        }
    }

    fn done(&self, n_max: usize) -> bool {
        self.remaining.is_empty() || self.cap == 0 || self.steps >= 2 * n_max
    }
}

#[test]
fn worked_transitions() {
    // W' = 10, picking (4, 3) gives +4 and leaves 7.
    let a = inst(&[(4, 3), (1, 9)], 10, 1);
    let env = KpEnv::new(&a, 5, RewardScale::Raw).unwrap();
    let mut s = env.reset();
    let r = env.apply(&mut s, ActionIndex::new(1, 5).unwrap()).unwrap();
    assert_eq!(r.reward, 4.0);
    assert_eq!(s.capacity_left, 7);
    assert_eq!(r.kind, StepKind::Accepted(0));

    // (9, 12) does not fit: -12, removed, capacity untouched.
    let b = inst(&[(9, 12), (1, 1)], 10, 1);
    let env = KpEnv::new(&b, 5, RewardScale::Raw).unwrap();
    let mut s = env.reset();
    let r = env.apply(&mut s, ActionIndex::new(2, 5).unwrap()).unwrap();
    assert_eq!(r.reward, -12.0);
    assert_eq!(r.kind, StepKind::Rejected(0));
    assert_eq!(s.capacity_left, 10);
    assert_eq!(s.remaining, vec![1]);

    // Three items left, action 5 is past them: -W' and nothing changes.
    let c = inst(&[(1, 20), (2, 20), (3, 20)], 10, 1);
    let env = KpEnv::new(&c, 5, RewardScale::Raw).unwrap();
    let mut s = env.reset();
    let before = s.clone();
    let r = env.apply(&mut s, ActionIndex::new(5, 5).unwrap()).unwrap();
    assert_eq!(r.reward, -10.0);
    assert_eq!(r.kind, StepKind::Undefined);
    assert_eq!(s.remaining, before.remaining);
    assert_eq!(s.capacity_left, 10);
    assert_eq!(s.steps, 1);
}

#[test]
fn normalised_rewards_divide_by_initial_capacity() {
    let a = inst(&[(40_000, 30_000), (10_000, 90_000)], 100_000, 10_000);
    let env = KpEnv::new(&a, 3, RewardScale::CapacityNormalized).unwrap();
    let mut s = env.reset();
    let r1 = env.apply(&mut s, ActionIndex::new(1, 3).unwrap()).unwrap();
    assert_eq!(r1.reward, 0.4);
    let r2 = env.apply(&mut s, ActionIndex::new(1, 3).unwrap()).unwrap();
    assert_eq!(r2.reward, -0.9);
    let raw = KpEnv::new(&a, 3, RewardScale::Raw).unwrap();
    let mut s = raw.reset();
    assert_eq!(raw.apply(&mut s, ActionIndex::new(1, 3).unwrap()).unwrap().reward, 4.0);
}

#[test]
fn stepping_a_finished_episode_is_a_usage_error() {
    let a = inst(&[(1, 1)], 1, 1);
    let env = KpEnv::new(&a, 2, RewardScale::Raw).unwrap();
    let mut s = env.reset();
    assert!(env.apply(&mut s, ActionIndex::new(1, 2).unwrap()).unwrap().done);
    let err = env.apply(&mut s, ActionIndex::new(1, 2).unwrap()).unwrap_err();
    assert!(matches!(err, kpagg::Error::Usage(_)));
}

#[test]
fn too_many_items_is_rejected() {
    let a = inst(&[(1, 1), (1, 1), (1, 1)], 2, 1);
    assert!(matches!(KpEnv::new(&a, 2, RewardScale::Raw), Err(kpagg::Error::Parameter(_))));
}

/// Every action sequence of length three over small instances.
#[test]
fn exhaustive_short_sequences_match_simulator() {
    let n_max = 4;
    let instances: Vec<(Vec<(u64, u64)>, u64)> = vec![
        (vec![(5, 4), (3, 2), (4, 6)], 7),
        (vec![(2, 2), (2, 2), (9, 3), (1, 8)], 5),
        (vec![(6, 6)], 5),
        (vec![(1, 1), (3, 3), (5, 5), (7, 7)], 6),
        (vec![(4, 1), (4, 2)], 3),
    ];
    let mut seen = [false; 3];
    for (items, cap) in instances {
        let kp = inst(&items, cap, 1);
        let env = KpEnv::new(&kp, n_max, RewardScale::Raw).unwrap();
        for code in 0..n_max.pow(3) {
            let actions = [code % n_max + 1, code / n_max % n_max + 1, code / n_max / n_max + 1];
            let mut sim = Sim::new(&items, cap);
            let mut s = env.reset();
            assert_eq!(s.remaining, sim.remaining);
            for &a in &actions {
                if s.done {
                    break;
                }
                let expected = sim.step(a);
                let r = env.apply(&mut s, ActionIndex::new(a, n_max).unwrap()).unwrap();
                assert_eq!(r.reward, expected as f64, "{items:?} {actions:?}");
                assert_eq!(s.remaining, sim.remaining);
                assert_eq!(s.capacity_left, sim.cap);
                assert_eq!(r.done, sim.done(n_max));
                seen[match r.kind {
                    StepKind::Accepted(_) => 0,
                    StepKind::Rejected(_) => 1,
                    StepKind::Undefined => 2,
                }] = true;
            }
        }
    }
    assert_eq!(seen, [true; 3]);
}

fn arb_case() -> impl Strategy<Value = (Vec<(u64, u64)>, u64, usize, Vec<usize>)> {
    (1usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec((1u64..50, 1u64..50), 1..=n),
            1u64..120,
            Just(n),
            prop::collection::vec(1usize..=n, 0..40),
        )
    })
}

proptest! {
    #[test]
    fn episode_accounting((items, cap, n_max, actions) in arb_case()) {
        let kp = inst(&items, cap, 1);
        let env = KpEnv::new(&kp, n_max, RewardScale::Raw).unwrap();
        let mut s = env.reset();
        let mut sum_accepted = 0i64;
        let mut steps = 0;
        for (i, _) in std::iter::repeat(()).enumerate() {
            if s.done {
                break;
            }
            let a = actions.get(i).copied().unwrap_or(1);
            let before = s.capacity_left;
            let r = env.apply(&mut s, ActionIndex::new(a, n_max).unwrap()).unwrap();
            steps += 1;
            match r.kind {
                StepKind::Accepted(idx) => {
                    prop_assert!(r.reward > 0.0);
                    prop_assert_eq!(s.capacity_left, before - items[idx].1);
                    sum_accepted += r.reward as i64;
                }
                StepKind::Rejected(idx) => {
                    prop_assert!(r.reward < 0.0);
                    prop_assert!(items[idx].1 > before);
                    prop_assert_eq!(s.capacity_left, before);
                }
                StepKind::Undefined => {
                    prop_assert_eq!(r.reward, -(before as f64));
                    prop_assert_eq!(s.capacity_left, before);
                }
            }
            prop_assert!(s.capacity_left <= cap);
        }
        prop_assert!(steps <= 2 * n_max);
        let sol = env.solution(&s);
        prop_assert!(sol.is_feasible(&kp));
        prop_assert_eq!(sol.total_value as i64, sum_accepted);
        prop_assert_eq!(s.ov, sol.total_value);
        prop_assert_eq!(s.ow + s.capacity_left, cap);
    }
}
