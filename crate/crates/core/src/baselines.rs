//! Reference solvers: the ratio greedy heuristic, an exact capacity DP and
//! exhaustive enumeration for small instances.
//!
//! All three accept unvalidated instances (zero capacity, no items).

use crate::error::{Error, Result};
use crate::instance::{KpInstance, Solution};

/// Largest item count accepted by [`brute_force_solve`].
pub const BRUTE_FORCE_MAX_ITEMS: usize = 25;

/// Default memory budget for the DP table and its parent bits.
pub const DEFAULT_DP_BUDGET_BYTES: usize = 1 << 30;

/// Scans items by non-increasing value/weight ratio (ties: lower index) and
/// takes each one that still fits.
pub fn greedy_solve(instance: &KpInstance) -> Solution {
    let mut left = instance.capacity;
    let mut selected = Vec::new();
    for i in instance.ratio_order() {
        let w = instance.items[i].weight;
        if w <= left {
            left -= w;
            selected.push(i);
        }
    }
    Solution::from_selection(instance, selected)
}

pub fn dp_solve(instance: &KpInstance) -> Result<Solution> {
    dp_solve_with_budget(instance, DEFAULT_DP_BUDGET_BYTES)
}

/// Exact 0-1 knapsack by a one-dimensional DP over capacity, with one parent
/// bit per (item, capacity) cell for reconstruction.
pub fn dp_solve_with_budget(instance: &KpInstance, budget_bytes: usize) -> Result<Solution> {
    let n = instance.items.len();
    // capacities beyond the total weight are never binding
    let cap = instance.capacity.min(instance.total_weight());
    let width = cap as usize + 1;
    let words_per_item = width.div_ceil(64);
    let need = n
        .checked_mul(words_per_item)
        .and_then(|w| w.checked_mul(8))
        .and_then(|b| b.checked_add(width * 8))
        .unwrap_or(usize::MAX);
    if need > budget_bytes {
        return Err(Error::Resource(format!(
            "DP table for instance {} needs {need} bytes (budget {budget_bytes}); \
             use brute force for small n or a branch-and-bound solver",
            instance.id
        )));
    }

    let mut best = vec![0u64; width];
    let mut parent = vec![0u64; n * words_per_item];
    for (i, item) in instance.items.iter().enumerate() {
        let w = item.weight as usize;
        if w > cap as usize {
            continue;
        }
        let row = &mut parent[i * words_per_item..(i + 1) * words_per_item];
        for c in (w..width).rev() {
            let cand = best[c - w] + item.value;
            if cand > best[c] {
                best[c] = cand;
                row[c / 64] |= 1 << (c % 64);
            }
        }
    }

    let mut c = cap as usize;
    let mut selected = Vec::new();
    for i in (0..n).rev() {
        if parent[i * words_per_item + c / 64] >> (c % 64) & 1 == 1 {
            selected.push(i);
            c -= instance.items[i].weight as usize;
        }
    }
    let sol = Solution::from_selection(instance, selected);
    debug_assert_eq!(sol.total_value, best[cap as usize]);
    Ok(sol)
}

/// Exhaustive maximum over all subsets, visited in Gray-code order.
pub fn brute_force_solve(instance: &KpInstance) -> Result<Solution> {
    let n = instance.items.len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::param(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_ITEMS} items, instance {} has {n}",
            instance.id
        )));
    }
    let (mut value, mut weight) = (0u64, 0u64);
    let (mut best_value, mut best_mask) = (0u64, 0u32);
    let mut mask = 0u32;
    for k in 1u32..(1u32 << n) {
        let bit = k.trailing_zeros() as usize;
        let item = instance.items[bit];
        mask ^= 1 << bit;
        if mask & (1 << bit) != 0 {
            value += item.value;
            weight += item.weight;
        } else {
            value -= item.value;
            weight -= item.weight;
        }
        if weight <= instance.capacity && value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    let selected = (0..n).filter(|i| best_mask >> i & 1 == 1).collect();
    Ok(Solution::from_selection(instance, selected))
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

    #[test]
    fn classic_three_item_example() {
        let p = inst(&[(60, 10), (100, 20), (120, 30)], 50);
        let g = greedy_solve(&p);
        assert_eq!(g.total_value, 160);
        assert_eq!(g.selected, vec![0, 1]);
        let d = dp_solve(&p).unwrap();
        assert_eq!(d.total_value, 220);
        assert_eq!(d.selected, vec![1, 2]);
        assert_eq!(brute_force_solve(&p).unwrap().total_value, 220);
    }

    #[test]
    fn greedy_edge_cases() {
        let p = inst(&[(10, 8)], 5);
        let g = greedy_solve(&p);
        assert_eq!(g.total_value, 0);
        assert!(g.selected.is_empty());

        let p = inst(&[(3, 2), (5, 4), (1, 1)], 7);
        assert_eq!(greedy_solve(&p).total_value, 9);
    }

    #[test]
    fn greedy_skips_and_continues() {
        // ratios 3, 2, 1; the middle item does not fit after the first
        let p = inst(&[(9, 3), (10, 5), (2, 2)], 6);
        assert_eq!(greedy_solve(&p).selected, vec![0, 2]);
    }

    #[test]
    fn dp_edge_cases() {
        assert_eq!(dp_solve(&inst(&[(5, 3)], 0)).unwrap().total_value, 0);
        assert_eq!(dp_solve(&inst(&[(7, 3)], 4)).unwrap().total_value, 7);
        assert_eq!(dp_solve(&inst(&[], 4)).unwrap().total_value, 0);
    }

    #[test]
    fn dp_budget_is_enforced() {
        let p = inst(&[(1, 1); 10], 1_000_000);
        assert!(dp_solve_with_budget(&p, 1 << 20).is_ok());
        let p = inst(&[(1, 100_000); 100], 10_000_000);
        assert!(matches!(
            dp_solve_with_budget(&p, 1 << 20),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn brute_force_examples() {
        let p = inst(&[(5, 5), (4, 4), (3, 3)], 7);
        let s = brute_force_solve(&p).unwrap();
        assert_eq!(s.total_value, 7);
        assert_eq!(s.selected, vec![1, 2]);
        assert_eq!(brute_force_solve(&inst(&[], 3)).unwrap().total_value, 0);
        assert!(brute_force_solve(&inst(&[(1, 1); 26], 3)).is_err());
    }
}
