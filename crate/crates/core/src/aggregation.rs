//! State aggregation.
//!
//! Each `vr_i` column of the training feature table is discretised into
//! `d + 1` near-equal-count subsets. The split count `d` per column is chosen
//! by tabular Q-learning whose states are the columns and whose actions are
//! the split counts `1..=x`, rewarded by [`split_reward`]. `wr_i` columns use
//! the fixed cuts `{0.5, 1.0}` (light / heavy / does-not-fit) and the four
//! leading scalars pass through unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{build_feature_vector, feature_dim, FeatureVector, ITEM_OFFSET};
use crate::instance::KpInstance;

/// Fixed cut points for every `wr` feature.
pub const WR_CUTS: [f64; 2] = [0.5, 1.0];

const FORMAT_TAG: &str = "kpagg-aggregation";
const FORMAT_VERSION: u32 = 1;

/// Ascending cut points. A value maps to the number of cuts strictly below
/// it, so a value equal to a cut lands in the lower bin and values outside
/// the fitted range clamp to the extreme bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    boundaries: Vec<f64>,
}

impl Bins {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("bin boundaries must be finite"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("bin boundaries must be strictly ascending"));
        }
        Ok(Bins { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of distinct labels, `boundaries + 1`.
    pub fn label_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    #[inline]
    pub fn label(&self, value: f64) -> usize {
        self.boundaries.partition_point(|&b| b < value)
    }
}

/// The subsets of a quantile split (ascending) and the bins derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSplit {
    pub subsets: Vec<Vec<f64>>,
    pub bins: Bins,
}

/// Size of every subset but the last: `ceil(M / (d + 1))`.
fn chunk_len(m: usize, d: usize) -> usize {
    m.div_ceil(d + 1)
}

/// Whether `d` splits of `m` values leave every subset non-empty.
pub fn split_is_valid(m: usize, d: usize) -> bool {
    d >= 1 && d < m && chunk_len(m, d) * d < m
}

fn check_split(m: usize, d: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::param("cannot split an empty column"));
    }
    if d == 0 {
        return Err(Error::param("split count must be at least 1"));
    }
    if d + 1 > m {
        return Err(Error::param(format!(
            "{} subsets requested from {m} values",
            d + 1
        )));
    }
    if !split_is_valid(m, d) {
        return Err(Error::param(format!(
            "{d} splits of {m} values leave the last subset empty"
        )));
    }
    Ok(())
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::param("column contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Sorts `values` and cuts them into `d + 1` subsets: the first `d` hold
/// `ceil(M / (d + 1))` values each and the last holds the remainder. Cut points
/// are the maxima of the first `d` subsets (repeated maxima collapse).
pub fn quantile_split(values: &[f64], d: usize) -> Result<QuantileSplit> {
    check_split(values.len(), d)?;
    let sorted = sorted_copy(values)?;
    Ok(split_sorted(&sorted, d))
}

fn split_sorted(sorted: &[f64], d: usize) -> QuantileSplit {
    let k = chunk_len(sorted.len(), d);
    let mut subsets: Vec<Vec<f64>> = sorted.chunks(k).map(<[f64]>::to_vec).collect();
    debug_assert_eq!(subsets.len(), d + 1);
    subsets.truncate(d + 1);
    let mut boundaries: Vec<f64> = subsets[..d].iter().map(|s| s[s.len() - 1]).collect();
    boundaries.dedup();
    QuantileSplit {
        subsets,
        bins: Bins { boundaries },
    }
}

/// Split reward `prod_j l_j / ((d + 1) * max(1, c))`, where `l_j` is the size of
/// subset `j` and `c` counts values shared between subsets (a value spread
/// over `s` subsets contributes `s - 1`).
pub fn split_reward(values: &[f64], d: usize) -> Result<f64> {
    check_split(values.len(), d)?;
    let sorted = sorted_copy(values)?;
    Ok(reward_sorted(&sorted, d))
}

fn reward_sorted(sorted: &[f64], d: usize) -> f64 {
    let m = sorted.len();
    let k = chunk_len(m, d);
    let product = (k as f64).powi(d as i32) * (m - k * d) as f64;
    // sorted order: a shared value always straddles a chunk edge
    let common = (1..=d).filter(|&j| sorted[j * k - 1] == sorted[j * k]).count();
    product / ((d + 1) as f64 * common.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearningParams {
    /// Largest split count `x`; actions are `1..=x`.
    pub max_splits: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for QLearningParams {
    fn default() -> Self {
        QLearningParams {
            max_splits: 9,
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.1,
            iterations: 50_000,
        }
    }
}

/// Q-values indexed by (`vr` feature, split count).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    features: usize,
    max_splits: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(features: usize, max_splits: usize) -> Self {
        QTable {
            features,
            max_splits,
            values: vec![0.0; features * max_splits],
        }
    }

    /// `Q(vr_feature, d)`, `feature` 0-based, `d` in `1..=x`.
    pub fn get(&self, feature: usize, d: usize) -> f64 {
        self.values[feature * self.max_splits + d - 1]
    }

    fn get_mut(&mut self, feature: usize, d: usize) -> &mut f64 {
        &mut self.values[feature * self.max_splits + d - 1]
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn max_splits(&self) -> usize {
        self.max_splits
    }

    /// Best action among `actions` (ties: smallest `d`) and its value.
    fn best(&self, feature: usize, actions: &[usize]) -> (usize, f64) {
        let mut best = (actions[0], self.get(feature, actions[0]));
        for &d in &actions[1..] {
            let q = self.get(feature, d);
            if q > best.1 {
                best = (d, q);
            }
        }
        best
    }
}

/// Learned discretisation for feature vectors of a fixed `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationPolicy {
    n_max: usize,
    d_star: Vec<usize>,
    vr_bins: Vec<Bins>,
}

/// Rows are full feature vectors of the training instances.
pub fn feature_table(instances: &[KpInstance], n_max: usize) -> Result<Vec<Vec<f64>>> {
    instances
        .iter()
        .map(|inst| build_feature_vector(inst, n_max).map(|fv| fv.entries))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AggregationOutcome {
    pub policy: AggregationPolicy,
    pub q_table: QTable,
}

/// Learns split counts for every `vr` column and fits their bins.
pub fn learn_aggregation(
    table: &[Vec<f64>],
    params: &QLearningParams,
    seed: u64,
) -> Result<AggregationOutcome> {
    let first = table
        .first()
        .ok_or_else(|| Error::param("feature table is empty"))?;
    if first.len() < ITEM_OFFSET + 2 || !(first.len() - ITEM_OFFSET).is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "feature rows must have length 2N+4 with N >= 1, got {}",
            first.len()
        )));
    }
    if let Some(bad) = table.iter().position(|r| r.len() != first.len()) {
        return Err(Error::Dimension(format!(
            "row {} has length {}, expected {}",
            bad + 1,
            table[bad].len(),
            first.len()
        )));
    }
    if params.max_splits == 0 {
        return Err(Error::param("max split count x must be at least 1"));
    }
    if !(0.0..=1.0).contains(&params.epsilon) || !(0.0..=1.0).contains(&params.gamma) {
        return Err(Error::param("epsilon and gamma must lie in [0, 1]"));
    }
    let n_max = (first.len() - ITEM_OFFSET) / 2;
    let m = table.len();
    let actions: Vec<usize> = (1..=params.max_splits)
        .filter(|&d| split_is_valid(m, d))
        .collect();
    if actions.is_empty() {
        return Err(Error::param(format!(
            "{m} instances admit no valid split in 1..={}",
            params.max_splits
        )));
    }

    let columns: Vec<Vec<f64>> = (0..n_max)
        .map(|i| sorted_copy(&table.iter().map(|r| r[ITEM_OFFSET + 2 * i]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    // rewards are deterministic per (feature, d)
    let rewards: Vec<Vec<f64>> = columns
        .iter()
        .map(|col| {
            (1..=params.max_splits)
                .map(|d| if split_is_valid(m, d) { reward_sorted(col, d) } else { 0.0 })
                .collect()
        })
        .collect();

    let mut q = QTable::new(n_max, params.max_splits);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = rng.gen_range(0..n_max);
    for _ in 0..params.iterations {
        let next = rng.gen_range(0..n_max);
        let d = if rng.gen::<f64>() < params.epsilon {
            actions[rng.gen_range(0..actions.len())]
        } else {
            q.best(state, &actions).0
        };
        let target = rewards[state][d - 1] + params.gamma * q.best(next, &actions).1;
        let cell = q.get_mut(state, d);
        *cell += params.alpha * (target - *cell);
        state = next;
    }

    let d_star: Vec<usize> = (0..n_max).map(|i| q.best(i, &actions).0).collect();
    let vr_bins = columns
        .iter()
        .zip(&d_star)
        .map(|(col, &d)| split_sorted(col, d).bins)
        .collect();
    Ok(AggregationOutcome {
        policy: AggregationPolicy {
            n_max,
            d_star,
            vr_bins,
        },
        q_table: q,
    })
}

#[inline]
fn wr_label(wr: f64) -> f64 {
    if wr <= WR_CUTS[0] {
        0.0
    } else if wr <= WR_CUTS[1] {
        1.0
    } else {
        2.0
    }
}

impl AggregationPolicy {
    /// Builds a policy from explicit split counts and `vr` bins.
    pub fn from_parts(d_star: Vec<usize>, vr_bins: Vec<Bins>) -> Result<Self> {
        if d_star.is_empty() || d_star.len() != vr_bins.len() {
            return Err(Error::Dimension(format!(
                "{} split counts for {} bin sets",
                d_star.len(),
                vr_bins.len()
            )));
        }
        for (i, (&d, bins)) in d_star.iter().zip(&vr_bins).enumerate() {
            if d == 0 || bins.boundaries.len() > d {
                return Err(Error::param(format!(
                    "vr feature {}: {} cuts for d*={d}",
                    i + 1,
                    bins.boundaries.len()
                )));
            }
        }
        Ok(AggregationPolicy {
            n_max: d_star.len(),
            d_star,
            vr_bins,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn d_star(&self) -> &[usize] {
        &self.d_star
    }

    pub fn vr_bins(&self) -> &[Bins] {
        &self.vr_bins
    }

    /// Maps a feature vector to its state embedding.
    pub fn embed_state(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        let mut out = vec![0.0; fv.entries.len()];
        self.embed_into(&fv.entries, &mut out)?;
        Ok(out)
    }

    /// Same as [`Self::embed_state`] on raw entries, writing into `out`.
    pub fn embed_into(&self, entries: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = feature_dim(self.n_max);
        if entries.len() != dim || out.len() != dim {
            return Err(Error::Dimension(format!(
                "aggregation policy expects length {dim}, got {} -> {}",
                entries.len(),
                out.len()
            )));
        }
        out[..ITEM_OFFSET].copy_from_slice(&entries[..ITEM_OFFSET]);
        for (i, bins) in self.vr_bins.iter().enumerate() {
            let at = ITEM_OFFSET + 2 * i;
            out[at] = bins.label(entries[at]) as f64;
            out[at + 1] = wr_label(entries[at + 1]);
        }
        Ok(())
    }

    /// Text form: a version line, `n N`, then one `k d* b1 .. bm` line per
    /// item feature (`k` is the 1-based feature index; `m <= d*` because
    /// repeated cut points collapse).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION}").unwrap();
        writeln!(out, "n {}", self.n_max).unwrap();
        for (i, (d, bins)) in self.d_star.iter().zip(&self.vr_bins).enumerate() {
            let k = ITEM_OFFSET + 2 * i + 1;
            write!(out, "{k} {d}").unwrap();
            for b in &bins.boundaries {
                write!(out, " {b}").unwrap();
            }
            out.push('\n');
            writeln!(out, "{} 2 {} {}", k + 1, WR_CUTS[0], WR_CUTS[1]).unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, tag) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let mut head = tag.split_whitespace();
        if head.next() != Some(FORMAT_TAG) {
            return Err(Error::parse(path, ln, format!("expected `{FORMAT_TAG}` header")));
        }
        match head.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(FORMAT_VERSION) => {}
            other => {
                return Err(Error::parse(
                    path,
                    ln,
                    format!("unsupported format version {other:?}"),
                ))
            }
        }
        let (ln, nline) = lines
            .next()
            .ok_or_else(|| Error::parse(path, ln + 1, "missing `n N` line"))?;
        let n_max: usize = nline
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::parse(path, ln, "expected `n N` with N >= 1"))?;

        let mut d_star = vec![0usize; n_max];
        let mut vr_bins: Vec<Option<Bins>> = vec![None; n_max];
        let mut wr_seen = vec![false; n_max];
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::parse(path, ln, "expected `k d* cuts...`"));
            }
            let k: usize = toks[0]
                .parse()
                .map_err(|_| Error::parse(path, ln, format!("bad feature index `{}`", toks[0])))?;
            let d: usize = toks[1]
                .parse()
                .map_err(|_| Error::parse(path, ln, format!("bad split count `{}`", toks[1])))?;
            let cuts: Vec<f64> = toks[2..]
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(path, ln, format!("bad cut point `{t}`")))
                })
                .collect::<Result<_>>()?;
            if k <= ITEM_OFFSET || k > feature_dim(n_max) {
                return Err(Error::parse(path, ln, format!("feature index {k} out of range")));
            }
            let i = (k - ITEM_OFFSET - 1) / 2;
            if (k - ITEM_OFFSET) % 2 == 1 {
                if vr_bins[i].is_some() {
                    return Err(Error::parse(path, ln, format!("feature {k} listed twice")));
                }
                if d == 0 || cuts.len() > d {
                    return Err(Error::parse(path, ln, format!("{} cuts for d*={d}", cuts.len())));
                }
                let bins = Bins::new(cuts).map_err(|e| Error::parse(path, ln, e.to_string()))?;
                d_star[i] = d;
                vr_bins[i] = Some(bins);
            } else {
                if d != 2 || cuts != WR_CUTS {
                    return Err(Error::parse(
                        path,
                        ln,
                        "weight features must use `2 0.5 1`",
                    ));
                }
                wr_seen[i] = true;
            }
        }
        let last = text.lines().count().max(1);
        if let Some(i) = vr_bins.iter().position(Option::is_none) {
            return Err(Error::parse(
                path,
                last,
                format!("missing line for feature {}", ITEM_OFFSET + 2 * i + 1),
            ));
        }
        if let Some(i) = wr_seen.iter().position(|s| !s) {
            return Err(Error::parse(
                path,
                last,
                format!("missing line for feature {}", ITEM_OFFSET + 2 * i + 2),
            ));
        }
        Ok(AggregationPolicy {
            n_max,
            d_star,
            vr_bins: vr_bins.into_iter().map(Option::unwrap).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: [f64; 7] = [1.0, 2.0, 6.0, 3.0, 1.0, 2.0, 5.0];

    #[test]
    fn worked_split() {
        let s = quantile_split(&WORKED, 2).unwrap();
        assert_eq!(
            s.subsets,
            vec![vec![1.0, 1.0, 2.0], vec![2.0, 3.0, 5.0], vec![6.0]]
        );
        assert_eq!(s.bins.boundaries(), &[2.0, 5.0]);
        let labels: Vec<usize> = WORKED.iter().map(|&v| s.bins.label(v)).collect();
        assert_eq!(labels, vec![0, 0, 2, 1, 0, 0, 1]);
    }

    #[test]
    fn even_split() {
        let s = quantile_split(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(s.subsets, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(s.bins.boundaries(), &[2.0]);
        let labels: Vec<usize> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| s.bins.label(v)).collect();
        assert_eq!(labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn split_errors() {
        assert!(quantile_split(&[], 1).is_err());
        assert!(quantile_split(&[1.0, 2.0], 0).is_err());
        assert!(quantile_split(&[1.0, 2.0], 2).is_err());
        // ceil(10/6) = 2, five chunks of two use all ten values
        assert!(quantile_split(&[0.0; 10], 5).is_err());
        assert!(quantile_split(&[f64::NAN, 1.0], 1).is_err());
    }

    #[test]
    fn reward_hand_values() {
        assert_eq!(split_reward(&WORKED, 2).unwrap(), 3.0);
        assert_eq!(split_reward(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), 2.0);
        assert_eq!(split_reward(&[5.0; 4], 1).unwrap(), 2.0);
        // 5 spans all three subsets of (5,5,5,5,5,5): c = 2, (2*2*2)/(3*2)
        assert!((split_reward(&[5.0; 6], 2).unwrap() - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bins_clamp_and_tie_low() {
        let b = Bins::new(vec![0.2, 0.7]).unwrap();
        assert_eq!(b.label(-5.0), 0);
        assert_eq!(b.label(0.2), 0);
        assert_eq!(b.label(0.3), 1);
        assert_eq!(b.label(0.7), 1);
        assert_eq!(b.label(9.0), 2);
        assert!(Bins::new(vec![1.0, 1.0]).is_err());
        assert!(Bins::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn repeated_maxima_collapse() {
        let s = quantile_split(&[1.0, 1.0, 1.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(s.bins.boundaries(), &[1.0]);
    }

    fn toy_table() -> Vec<Vec<f64>> {
        // N = 2, M = 8
        (0..8)
            .map(|r| {
                let r = r as f64;
                vec![2.0, 10.0, 0.0, 0.0, r * 0.5, 0.1 * r, (r % 3.0) * 0.25, 1.2]
            })
            .collect()
    }

    #[test]
    fn wr_cuts_are_fixed() {
        let out = learn_aggregation(&toy_table(), &QLearningParams::default(), 3).unwrap();
        let text = out.policy.to_text();
        assert!(text.contains("6 2 0.5 1\n"), "{text}");
        assert!(text.contains("8 2 0.5 1\n"), "{text}");
    }

    #[test]
    fn embedding_maps_weights_and_passes_scalars() {
        let policy = AggregationPolicy::from_parts(
            vec![1, 1, 1],
            vec![Bins::new(vec![0.5]).unwrap(); 3],
        )
        .unwrap();
        let fv = FeatureVector {
            entries: vec![3.0, 7.5, 1.25, 2.6, 0.9, 0.3, 0.4, 0.9, 0.1, 1.4],
            item_ranks: vec![0, 1, 2],
        };
        let e = policy.embed_state(&fv).unwrap();
        assert_eq!(&e[..4], &[3.0, 7.5, 1.25, 2.6]);
        assert_eq!([e[5], e[7], e[9]], [0.0, 1.0, 2.0]);
        assert_eq!([e[4], e[6], e[8]], [1.0, 0.0, 0.0]);

        let short = FeatureVector {
            entries: vec![0.0; 8],
            item_ranks: vec![],
        };
        assert!(matches!(policy.embed_state(&short), Err(Error::Dimension(_))));
    }

    #[test]
    fn text_round_trip() {
        let out = learn_aggregation(&toy_table(), &QLearningParams::default(), 3).unwrap();
        let back = AggregationPolicy::parse(&out.policy.to_text(), Path::new("p")).unwrap();
        assert_eq!(back, out.policy);
    }

    #[test]
    fn parse_rejects_bad_files() {
        let p = Path::new("p");
        assert!(AggregationPolicy::parse("", p).is_err());
        assert!(AggregationPolicy::parse("kpagg-aggregation 2\nn 1\n5 1 0.5\n6 2 0.5 1\n", p).is_err());
        assert!(AggregationPolicy::parse("kpagg-aggregation 1\nn 1\n5 1 0.5\n", p).is_err());
        assert!(AggregationPolicy::parse("kpagg-aggregation 1\nn 1\n5 1 0.5\n6 2 0.4 1\n", p).is_err());
        assert!(AggregationPolicy::parse("kpagg-aggregation 1\nn 1\n5 1 0.5 0.7\n6 2 0.5 1\n", p).is_err());
        assert!(AggregationPolicy::parse("kpagg-aggregation 1\nn 1\n5 1 0.5\n6 2 0.5 1\n", p).is_ok());
    }

    #[test]
    fn learning_errors() {
        assert!(learn_aggregation(&[], &QLearningParams::default(), 0).is_err());
        let ragged = vec![vec![0.0; 6], vec![0.0; 8]];
        assert!(learn_aggregation(&ragged, &QLearningParams::default(), 0).is_err());
        // one instance cannot be split
        assert!(learn_aggregation(&[vec![0.0; 6]], &QLearningParams::default(), 0).is_err());
    }
}
