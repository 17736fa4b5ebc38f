//! Model checkpoints.
//!
//! A UTF-8 header terminated by a `---` line, followed by little-endian `f64`
//! payload: policy parameters, value parameters, policy RMSProp
//! accumulators, value RMSProp accumulators, each in the flat layer order of
//! [`Mlp`](super::mlp::Mlp).
//!
//! ```text
//! kpagg-checkpoint 1
//! n 50
//! policy 104 64 64 50
//! value 104 64 64 1
//! rmsprop 0.0007 0.99 0.00001
//! floats 21381
//! ---
//! <payload>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::a2c::ActorCritic;
use super::mlp::{Head, Mlp};
use super::rmsprop::{RmsProp, RmsPropConfig};
use crate::error::{Error, Result};

const TAG: &str = "kpagg-checkpoint";
const VERSION: u32 = 1;
const SEPARATOR: &str = "---\n";

fn join(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn encode(model: &ActorCritic) -> Vec<u8> {
    let cfg = model.policy_opt.config;
    let total = model.policy.params().len() * 2 + model.value.params().len() * 2;
    let mut header = String::new();
    writeln!(header, "{TAG} {VERSION}").unwrap();
    writeln!(header, "n {}", model.n_max()).unwrap();
    writeln!(header, "policy {}", join(model.policy.dims())).unwrap();
    writeln!(header, "value {}", join(model.value.dims())).unwrap();
    writeln!(header, "rmsprop {} {} {}", cfg.learning_rate, cfg.decay, cfg.epsilon).unwrap();
    writeln!(header, "floats {total}").unwrap();
    header.push_str(SEPARATOR);

    let mut bytes = header.into_bytes();
    bytes.reserve(total * 8);
    for chunk in [
        model.policy.params(),
        model.value.params(),
        model.policy_opt.square_avg(),
        model.value_opt.square_avg(),
    ] {
        for x in chunk {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    bytes
}

pub fn save(model: &ActorCritic, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint; `expected_n`, when given, must match the stored `N`.
pub fn load(path: impl AsRef<Path>, expected_n: Option<usize>) -> Result<ActorCritic> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path, expected_n)
}

fn parse_fields<T: std::str::FromStr>(
    line: &str,
    key: &str,
    path: &Path,
    lineno: usize,
) -> Result<Vec<T>> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(key) {
        return Err(Error::parse(path, lineno, format!("expected `{key}` line")));
    }
    toks.map(|t| {
        t.parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad `{key}` field `{t}`")))
    })
    .collect()
}

pub fn decode(bytes: &[u8], path: &Path, expected_n: Option<usize>) -> Result<ActorCritic> {
    let sep = bytes
        .windows(SEPARATOR.len())
        .position(|w| w == SEPARATOR.as_bytes())
        .ok_or_else(|| Error::parse(path, 1, "truncated checkpoint: no header terminator"))?;
    let header = std::str::from_utf8(&bytes[..sep])
        .map_err(|_| Error::parse(path, 1, "checkpoint header is not UTF-8"))?;
    let payload = &bytes[sep + SEPARATOR.len()..];
    let lines: Vec<&str> = header.lines().collect();
    if lines.len() != 6 {
        return Err(Error::parse(path, lines.len().max(1), "checkpoint header needs 6 lines"));
    }
    let version: Vec<u32> = parse_fields(lines[0], TAG, path, 1)?;
    if version != [VERSION] {
        return Err(Error::parse(path, 1, format!("unsupported checkpoint version {version:?}")));
    }
    let n: Vec<usize> = parse_fields(lines[1], "n", path, 2)?;
    let [n] = n[..] else {
        return Err(Error::parse(path, 2, "expected `n N`"));
    };
    if let Some(want) = expected_n {
        if want != n {
            return Err(Error::Dimension(format!(
                "checkpoint was trained for N={n}, requested N={want}"
            )));
        }
    }
    let pdims: Vec<usize> = parse_fields(lines[2], "policy", path, 3)?;
    let vdims: Vec<usize> = parse_fields(lines[3], "value", path, 4)?;
    let rms: Vec<f64> = parse_fields(lines[4], "rmsprop", path, 5)?;
    let [learning_rate, decay, epsilon] = rms[..] else {
        return Err(Error::parse(path, 5, "expected `rmsprop lr decay eps`"));
    };
    let floats: Vec<usize> = parse_fields(lines[5], "floats", path, 6)?;
    let [floats] = floats[..] else {
        return Err(Error::parse(path, 6, "expected `floats COUNT`"));
    };

    if pdims.last() != Some(&n) {
        return Err(Error::Dimension(format!(
            "policy layout {pdims:?} does not end in N={n}"
        )));
    }
    let policy = Mlp::zeros(&pdims, Head::Softmax)?;
    let value = Mlp::zeros(&vdims, Head::Linear)?;
    let (np, nv) = (policy.params().len(), value.params().len());
    if floats != 2 * (np + nv) {
        return Err(Error::Dimension(format!(
            "header declares {floats} floats, layouts need {}",
            2 * (np + nv)
        )));
    }
    if payload.len() != floats * 8 {
        return Err(Error::parse(
            path,
            7,
            format!(
                "truncated checkpoint: payload has {} bytes, expected {}",
                payload.len(),
                floats * 8
            ),
        ));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |k: usize| values.by_ref().take(k).collect::<Vec<f64>>();
    let policy = Mlp::from_params(&pdims, Head::Softmax, take(np))?;
    let value = Mlp::from_params(&vdims, Head::Linear, take(nv))?;
    let cfg = RmsPropConfig {
        learning_rate,
        decay,
        epsilon,
    };
    cfg.validate()?;
    let policy_opt = RmsProp::from_state(cfg, take(np))?;
    let value_opt = RmsProp::from_state(cfg, take(nv))?;
    if policy.params().iter().chain(value.params()).any(|p| !p.is_finite()) {
        return Err(Error::Numeric("checkpoint holds non-finite parameters".into()));
    }
    ActorCritic::from_parts(policy, value, policy_opt, value_opt)
}
