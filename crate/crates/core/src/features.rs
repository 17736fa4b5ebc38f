//! Normalised, rank-sorted feature vectors.
//!
//! For an instance (or the remainder of one during an episode) with capacity
//! `W`, each item becomes `vr = v / (w * W)` and `wr = w / W`, evaluated on the
//! unscaled rationals. The vector is
//!
//! ```text
//! (n, W, Sv, Sw, vr_1, wr_1, ..., vr_N, wr_N)
//! ```
//!
//! with items in non-increasing `vr` order, `Sv`/`Sw` the sums of the
//! normalised entries, and zeros past rank `n`.

use crate::error::{Error, Result};
use crate::instance::{cmp_ratio_desc, Item, KpInstance};

/// Offset of `vr_1` inside a feature vector.
pub const ITEM_OFFSET: usize = 4;

/// Length of a feature vector for at most `n_max` items.
pub const fn feature_dim(n_max: usize) -> usize {
    2 * n_max + ITEM_OFFSET
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedItem {
    pub vr: f64,
    pub wr: f64,
    pub origin_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<f64>,
    /// `item_ranks[r]` is the original index of the item at rank `r + 1`.
    pub item_ranks: Vec<usize>,
}

impl FeatureVector {
    pub fn n_max(&self) -> usize {
        (self.entries.len() - ITEM_OFFSET) / 2
    }

    pub fn item_count(&self) -> usize {
        self.item_ranks.len()
    }

    /// `vr` at 1-based `rank`.
    pub fn vr(&self, rank: usize) -> f64 {
        self.entries[ITEM_OFFSET + 2 * (rank - 1)]
    }

    /// `wr` at 1-based `rank`.
    pub fn wr(&self, rank: usize) -> f64 {
        self.entries[ITEM_OFFSET + 2 * (rank - 1) + 1]
    }
}

fn normalize_one(item: Item, capacity: u64, scale: u64) -> (f64, f64) {
    let vr = (item.value as f64 * scale as f64) / (item.weight as f64 * capacity as f64);
    let wr = item.weight as f64 / capacity as f64;
    (vr, wr)
}

/// Normalised `(vr, wr)` for every item, in original order.
pub fn normalize(instance: &KpInstance) -> Result<Vec<NormalizedItem>> {
    if instance.capacity == 0 {
        return Err(Error::Domain(format!("instance {} has zero capacity", instance.id)));
    }
    instance
        .items
        .iter()
        .enumerate()
        .map(|(i, &item)| {
            if item.weight == 0 {
                return Err(Error::Domain(format!(
                    "instance {}: item {} has zero weight",
                    instance.id,
                    i + 1
                )));
            }
            let (vr, wr) = normalize_one(item, instance.capacity, instance.scale);
            Ok(NormalizedItem {
                vr,
                wr,
                origin_index: i,
            })
        })
        .collect()
}

/// Builds the feature vector of a whole instance.
pub fn build_feature_vector(instance: &KpInstance, n_max: usize) -> Result<FeatureVector> {
    let mut ranked: Vec<usize> = (0..instance.items.len()).collect();
    ranked.sort_by(|&a, &b| cmp_ratio_desc(&instance.items, a, b));
    build_ranked(&instance.items, &ranked, instance.capacity, instance.scale, n_max)
}

/// Builds the feature vector of the sub-instance made of `ranked` items of
/// `items` under `capacity`. `ranked` must already be in rank order (see
/// [`cmp_ratio_desc`]); episodes maintain that order incrementally.
pub fn build_ranked(
    items: &[Item],
    ranked: &[usize],
    capacity: u64,
    scale: u64,
    n_max: usize,
) -> Result<FeatureVector> {
    if ranked.len() > n_max {
        return Err(Error::param(format!(
            "{} items exceed the model bound N={n_max}",
            ranked.len()
        )));
    }
    let mut entries = vec![0.0; feature_dim(n_max)];
    entries[0] = ranked.len() as f64;
    entries[1] = capacity as f64 / scale as f64;
    if ranked.is_empty() {
        return Ok(FeatureVector {
            entries,
            item_ranks: Vec::new(),
        });
    }
    if capacity == 0 {
        return Err(Error::Domain("cannot normalise against zero capacity".into()));
    }
    let (mut sv, mut sw) = (0.0, 0.0);
    for (r, &idx) in ranked.iter().enumerate() {
        let item = items[idx];
        if item.weight == 0 {
            return Err(Error::Domain(format!("item {} has zero weight", idx + 1)));
        }
        let (vr, wr) = normalize_one(item, capacity, scale);
        entries[ITEM_OFFSET + 2 * r] = vr;
        entries[ITEM_OFFSET + 2 * r + 1] = wr;
        sv += vr;
        sw += wr;
    }
    entries[2] = sv;
    entries[3] = sw;
    Ok(FeatureVector {
        entries,
        item_ranks: ranked.to_vec(),
    })
}
