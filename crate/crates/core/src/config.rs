//! Run configuration file.
//!
//! A TOML document with one optional table per subcommand. Every key is
//! optional; command-line flags override file values, which override the
//! built-in defaults. Unknown tables or keys are rejected.
//!
//! ```toml
//! workers = 4        # thread count for solve/evaluate
//!
//! [generate]
//! family = "ri"      # ri | fi | hi
//! m = 100
//! n = 50
//! r = 100
//! seed = 7
//! capacity = 125000  # fi only, scaled units
//!
//! [aggregate]
//! x = 9
//! alpha = 0.1
//! gamma = 0.9
//! epsilon = 0.1
//! iterations = 50000
//! seed = 0
//!
//! [train]
//! tmax = 1500000
//! gamma = 0.99
//! seed = 0
//! order = "random"   # random | cyclic
//! entropy = 0.01
//! lr = 0.0007
//! decay = 0.99
//! eps = 0.00001
//! hidden = [64, 64]
//! raw_rewards = false
//! log_stride = 1000
//!
//! [solve]
//! mode = "greedy"    # greedy | sample
//! episodes = 64
//! seed = 0
//! dp_budget_mb = 1024
//!
//! [evaluate]
//! highest = "auto"   # auto | full | last-half
//! window = 1000
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub family: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<u64>,
    pub seed: Option<u64>,
    pub capacity: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateSection {
    pub x: Option<usize>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub tmax: Option<u64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub order: Option<String>,
    pub entropy: Option<f64>,
    pub lr: Option<f64>,
    pub decay: Option<f64>,
    pub eps: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub raw_rewards: Option<bool>,
    pub log_stride: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub mode: Option<String>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub dp_budget_mb: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub highest: Option<String>,
    pub window: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub workers: Option<usize>,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub aggregate: AggregateSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            Error::Config(format!("{}: {}", path.display(), e.message()))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }
}

/// Short hex digest of a canonical settings string.
pub fn fingerprint(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}
