//! Knapsack instances, datasets and solutions.
//!
//! Every quantity is a scaled integer: a stored value `x` on an instance with
//! `scale = 10^s` denotes the rational `x / 10^s`. Integer families use
//! `scale = 1`; the fixed-capacity family uses `10^4`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Item {
    pub value: u64,
    pub weight: u64,
}

impl Item {
    pub const fn new(value: u64, weight: u64) -> Self {
        Item { value, weight }
    }
}

/// A single 0-1 knapsack problem.
///
/// Fields are public so that solvers and tests can build degenerate instances
/// (zero capacity, no items); [`KpInstance::validate`] checks the dataset
/// invariants when they matter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpInstance {
    /// 1-based id, contiguous within a dataset.
    pub id: u32,
    pub items: Vec<Item>,
    pub capacity: u64,
    /// Power-of-ten denominator.
    pub scale: u64,
}

impl KpInstance {
    /// Builds a validated instance.
    pub fn new(id: u32, items: Vec<Item>, capacity: u64, scale: u64) -> Result<Self> {
        let inst = KpInstance {
            id,
            items,
            capacity,
            scale,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id == 0 {
            return Err(Error::Domain("instance id must be positive".into()));
        }
        if self.items.is_empty() {
            return Err(Error::Domain(format!("instance {} has no items", self.id)));
        }
        if self.capacity == 0 {
            return Err(Error::Domain(format!("instance {} has zero capacity", self.id)));
        }
        if !is_power_of_ten(self.scale) {
            return Err(Error::Domain(format!(
                "instance {}: scale {} is not a power of ten",
                self.id, self.scale
            )));
        }
        if let Some(i) = self.items.iter().position(|it| it.weight == 0) {
            return Err(Error::Domain(format!(
                "instance {}: item {} has zero weight",
                self.id,
                i + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.items.iter().map(|it| it.weight).sum()
    }

    /// Capacity as an unscaled real.
    pub fn capacity_real(&self) -> f64 {
        self.capacity as f64 / self.scale as f64
    }

    /// Item indices ordered by non-increasing value/weight ratio, ties by
    /// lower index. This is both the greedy scan order and the rank order of
    /// the feature vector.
    pub fn ratio_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.items.len()).collect();
        order.sort_by(|&a, &b| cmp_ratio_desc(&self.items, a, b));
        order
    }
}

/// Orders item `a` before item `b` when its value/weight ratio is larger,
/// comparing exactly by cross-multiplication; equal ratios keep index order.
pub fn cmp_ratio_desc(items: &[Item], a: usize, b: usize) -> Ordering {
    let (ia, ib) = (items[a], items[b]);
    let lhs = ia.value as u128 * ib.weight as u128;
    let rhs = ib.value as u128 * ia.weight as u128;
    rhs.cmp(&lhs).then(a.cmp(&b))
}

pub(crate) fn is_power_of_ten(mut x: u64) -> bool {
    if x == 0 {
        return false;
    }
    while x.is_multiple_of(10) {
        x /= 10;
    }
    x == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Random item counts, values, weights and capacity.
    Random,
    /// Fixed item count and capacity, real-valued items.
    FixedCapacity,
    /// Strongly correlated values with rank-scaled capacity.
    Hard,
}

impl Family {
    pub fn code(self) -> &'static str {
        match self {
            Family::Random => "RI",
            Family::FixedCapacity => "FI",
            Family::Hard => "HI",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ri" => Ok(Family::Random),
            "fi" => Ok(Family::FixedCapacity),
            "hi" => Ok(Family::Hard),
            other => Err(Error::param(format!("unknown instance family `{other}`"))),
        }
    }
}

/// Generator parameters recorded in the dataset header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub m: usize,
    pub n: usize,
    pub r: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub family: Family,
    pub params: GenParams,
    pub instances: Vec<KpInstance>,
}

impl Dataset {
    /// Maximum item count the dataset was generated for.
    pub fn n_max(&self) -> usize {
        self.params.n
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Checks per-instance invariants plus id contiguity and the item bound.
    pub fn validate(&self) -> Result<()> {
        if self.instances.len() != self.params.m {
            return Err(Error::Domain(format!(
                "dataset declares M={} but holds {} instances",
                self.params.m,
                self.instances.len()
            )));
        }
        for (k, inst) in self.instances.iter().enumerate() {
            inst.validate()?;
            if inst.id as usize != k + 1 {
                return Err(Error::Domain(format!(
                    "instance at position {} has id {}, expected {}",
                    k + 1,
                    inst.id,
                    k + 1
                )));
            }
            if inst.len() > self.params.n {
                return Err(Error::Domain(format!(
                    "instance {} has {} items, more than N={}",
                    inst.id,
                    inst.len(),
                    self.params.n
                )));
            }
        }
        Ok(())
    }
}

/// A feasible (or checked-for-feasibility) item selection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Solution {
    /// Ascending original item indices (0-based).
    pub selected: Vec<usize>,
    pub total_value: u64,
    pub total_weight: u64,
}

impl Solution {
    pub fn from_selection(instance: &KpInstance, mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        selected.dedup();
        let (total_value, total_weight) = selected.iter().fold((0, 0), |(v, w), &i| {
            (v + instance.items[i].value, w + instance.items[i].weight)
        });
        Solution {
            selected,
            total_value,
            total_weight,
        }
    }

    pub fn is_feasible(&self, instance: &KpInstance) -> bool {
        if self.selected.iter().any(|&i| i >= instance.items.len())
            || self.selected.windows(2).any(|w| w[0] >= w[1])
        {
            return false;
        }
        let check = Solution::from_selection(instance, self.selected.clone());
        check.total_value == self.total_value
            && check.total_weight == self.total_weight
            && self.total_weight <= instance.capacity
    }
}
