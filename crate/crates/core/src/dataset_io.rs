//! Line-oriented dataset files.
//!
//! ```text
//! #RI 100 50 100 7
//! 1 3 150 1 60 10 100 20 120 30
//! ```
//!
//! The header is `#family M N R seed`; each following line is one instance,
//! `id n capacity scale v1 w1 ... vn wn`, all decimal integers separated by a
//! single space. Writing is byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{is_power_of_ten, Dataset, Family, GenParams, Item, KpInstance};

pub fn format_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    let p = &ds.params;
    writeln!(out, "#{} {} {} {} {}", ds.family, p.m, p.n, p.r, p.seed).unwrap();
    for inst in &ds.instances {
        write!(
            out,
            "{} {} {} {}",
            inst.id,
            inst.items.len(),
            inst.capacity,
            inst.scale
        )
        .unwrap();
        for it in &inst.items {
            write!(out, " {} {}", it.value, it.weight).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("{what}: expected a non-negative integer, got `{tok}`")))
}

/// Parses dataset text; `path` is only used for error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, hline, "missing `#family M N R seed` header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 {
        return Err(Error::parse(
            path,
            hline,
            format!("header needs 5 fields, found {}", toks.len()),
        ));
    }
    let family: Family = toks[0]
        .parse()
        .map_err(|e: Error| Error::parse(path, hline, e.to_string()))?;
    let params = GenParams {
        m: parse_num(toks[1], "M", path, hline)?,
        n: parse_num(toks[2], "N", path, hline)?,
        r: parse_num(toks[3], "R", path, hline)?,
        seed: parse_num(toks[4], "seed", path, hline)?,
    };

    let mut instances: Vec<KpInstance> = Vec::with_capacity(params.m);
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 4 {
            return Err(Error::parse(path, lineno, "record needs `id n capacity scale`"));
        }
        let id: u32 = parse_num(toks[0], "id", path, lineno)?;
        let n: usize = parse_num(toks[1], "n", path, lineno)?;
        let capacity: u64 = parse_num(toks[2], "capacity", path, lineno)?;
        let scale: u64 = parse_num(toks[3], "scale", path, lineno)?;
        if toks.len() != 4 + 2 * n {
            return Err(Error::parse(
                path,
                lineno,
                format!("declared {n} items but found {} numbers", toks.len() - 4),
            ));
        }
        if id as usize != instances.len() + 1 {
            let why = if instances.iter().any(|i| i.id == id) {
                format!("duplicate id {id}")
            } else {
                format!("id {id} out of sequence, expected {}", instances.len() + 1)
            };
            return Err(Error::parse(path, lineno, why));
        }
        if n == 0 {
            return Err(Error::parse(path, lineno, "instance has no items"));
        }
        if n > params.n {
            return Err(Error::parse(
                path,
                lineno,
                format!("{n} items exceed header N={}", params.n),
            ));
        }
        if capacity == 0 {
            return Err(Error::parse(path, lineno, "capacity must be positive"));
        }
        if !is_power_of_ten(scale) {
            return Err(Error::parse(path, lineno, format!("scale {scale} is not a power of ten")));
        }
        let mut items = Vec::with_capacity(n);
        for pair in toks[4..].chunks_exact(2) {
            let value = parse_num(pair[0], "value", path, lineno)?;
            let weight = parse_num(pair[1], "weight", path, lineno)?;
            if weight == 0 {
                return Err(Error::parse(path, lineno, "item weight must be positive"));
            }
            items.push(Item::new(value, weight));
        }
        instances.push(KpInstance {
            id,
            items,
            capacity,
            scale,
        });
    }
    if instances.len() != params.m {
        return Err(Error::parse(
            path,
            hline,
            format!("header declares M={} but file has {} records", params.m, instances.len()),
        ));
    }
    Ok(Dataset {
        family,
        params,
        instances,
    })
}
