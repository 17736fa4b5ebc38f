//! Seeded generators for the three instance families.
//!
//! Each instance draws from its own ChaCha8 stream: the generator is seeded
//! with `seed` and switched to stream `p` (the instance id). Instances are
//! therefore independent of generation order, and the draw order inside an
//! instance (item count, then `(value, weight)` pairs, then capacity) is part
//! of the dataset stability contract.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Dataset, Family, GenParams, Item, KpInstance};

/// Scale used to materialise the real-valued fixed-capacity family.
pub const FIXED_SCALE: u64 = 10_000;

fn instance_rng(seed: u64, id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

fn check_counts(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::param("M must be at least 1"));
    }
    if m > u32::MAX as usize {
        return Err(Error::param("M does not fit a 32-bit instance id"));
    }
    if n == 0 {
        return Err(Error::param("N must be at least 1"));
    }
    Ok(())
}

fn build(
    family: Family,
    params: GenParams,
    make: impl Fn(u32) -> KpInstance + Send + Sync,
) -> Dataset {
    let instances = (1..=params.m as u32).into_par_iter().map(make).collect();
    Dataset {
        family,
        params,
        instances,
    }
}

/// Random instances: `n_P ~ U{1..N}`, values and weights `~ U{1..R}`,
/// capacity `~ U{R/10..3R}`.
pub fn gen_random_instances(m: usize, n: usize, r: u64, seed: u64) -> Result<Dataset> {
    check_counts(m, n)?;
    if r < 10 {
        return Err(Error::param(format!("R must be at least 10, got {r}")));
    }
    let params = GenParams { m, n, r, seed };
    Ok(build(Family::Random, params, |id| {
        let mut rng = instance_rng(seed, id);
        let count = rng.gen_range(1..=n);
        let items = (0..count)
            .map(|_| {
                let value = rng.gen_range(1..=r);
                let weight = rng.gen_range(1..=r);
                Item::new(value, weight)
            })
            .collect();
        let capacity = rng.gen_range(r / 10..=3 * r);
        KpInstance {
            id,
            items,
            capacity,
            scale: 1,
        }
    }))
}

/// Capacity preset (scaled by [`FIXED_SCALE`]) for the fixed-capacity family.
pub fn fixed_capacity_preset(n: usize) -> Option<u64> {
    match n {
        50 => Some(125_000),
        300 | 500 => Some(375_000),
        _ => None,
    }
}

/// Fixed-capacity instances: `n_P = N`, values and weights uniform in `(0, 1)`
/// at four decimal places. `capacity` (scaled) overrides the preset and is
/// required for `N` outside {50, 300, 500}.
pub fn gen_fixed_instances(
    m: usize,
    n: usize,
    seed: u64,
    capacity: Option<u64>,
) -> Result<Dataset> {
    check_counts(m, n)?;
    let capacity = match capacity.or_else(|| fixed_capacity_preset(n)) {
        Some(0) => return Err(Error::param("capacity must be positive")),
        Some(c) => c,
        None => {
            return Err(Error::param(format!(
                "no preset capacity for N={n}; pass an explicit capacity"
            )))
        }
    };
    let params = GenParams { m, n, r: 0, seed };
    Ok(build(Family::FixedCapacity, params, |id| {
        let mut rng = instance_rng(seed, id);
        let items = (0..n)
            .map(|_| {
                let value = rng.gen_range(1..FIXED_SCALE);
                let weight = rng.gen_range(1..FIXED_SCALE);
                Item::new(value, weight)
            })
            .collect();
        KpInstance {
            id,
            items,
            capacity,
            scale: FIXED_SCALE,
        }
    }))
}

/// `floor(p / (M + 1) * sum_w)`, raised to 1 when the floor vanishes.
pub fn hard_capacity(id: u32, m: usize, weight_sum: u64) -> u64 {
    let cap = (id as u128 * weight_sum as u128) / (m as u128 + 1);
    (cap as u64).max(1)
}

/// Strongly correlated instances: `w ~ U{1..R}`, `v = w + R/10`, and capacity
/// growing linearly with the instance id.
pub fn gen_hard_instances(m: usize, n: usize, r: u64, seed: u64) -> Result<Dataset> {
    check_counts(m, n)?;
    if r < 10 || !r.is_multiple_of(10) {
        return Err(Error::param(format!(
            "R must be a positive multiple of 10, got {r}"
        )));
    }
    let params = GenParams { m, n, r, seed };
    Ok(build(Family::Hard, params, |id| {
        let mut rng = instance_rng(seed, id);
        let items: Vec<Item> = (0..n)
            .map(|_| {
                let weight = rng.gen_range(1..=r);
                Item::new(weight + r / 10, weight)
            })
            .collect();
        let weight_sum = items.iter().map(|it| it.weight).sum();
        KpInstance {
            id,
            items,
            capacity: hard_capacity(id, m, weight_sum),
            scale: 1,
        }
    }))
}

/// Dispatches on `family`. `r` is ignored for the fixed-capacity family and
/// `capacity` is only consulted there.
pub fn generate(
    family: Family,
    m: usize,
    n: usize,
    r: u64,
    seed: u64,
    capacity: Option<u64>,
) -> Result<Dataset> {
    match family {
        Family::Random => gen_random_instances(m, n, r, seed),
        Family::FixedCapacity => gen_fixed_instances(m, n, seed, capacity),
        Family::Hard => gen_hard_instances(m, n, r, seed),
    }
}
