//! Solution-quality metrics, Table-style reports and learning curves.
//!
//! All averages and ratios are exact rationals over the scaled integer
//! values; floats appear only when printing.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::trainer::TrainLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceRow {
    pub id: u32,
    pub value: u64,
    pub optimum: u64,
}

impl InstanceRow {
    pub fn is_optimal(&self) -> bool {
        self.value == self.optimum
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsReport {
    pub scale: u64,
    pub sum_values: u128,
    pub sum_optima: u128,
    pub n_opt: usize,
    pub rows: Vec<InstanceRow>,
}

impl MetricsReport {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Mean solution value in instance units.
    pub fn val_bar(&self) -> Ratio<u128> {
        Ratio::new(self.sum_values, self.m() as u128 * self.scale as u128)
    }

    pub fn val_bar_opt(&self) -> Ratio<u128> {
        Ratio::new(self.sum_optima, self.m() as u128 * self.scale as u128)
    }

    /// `val_bar / val_bar_opt`; 1 when every optimum is 0.
    pub fn ratio(&self) -> Ratio<u128> {
        if self.sum_optima == 0 {
            Ratio::from_integer(1)
        } else {
            Ratio::new(self.sum_values, self.sum_optima)
        }
    }
}

pub fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact decimal rendering of `r` rounded half-up to `decimals` places.
pub fn format_ratio(r: Ratio<u128>, decimals: u32) -> String {
    let pow = 10u128.pow(decimals);
    let (n, d) = (*r.numer(), *r.denom());
    let scaled = (n * pow * 2 + d) / (2 * d);
    let (int, frac) = (scaled / pow, scaled % pow);
    if decimals == 0 {
        int.to_string()
    } else {
        format!("{int}.{frac:0width$}", width = decimals as usize)
    }
}

/// Metrics of scaled integer `values` against `optima`, instance ids `1..=M`.
pub fn compute_metrics(values: &[u64], optima: &[u64], scale: u64) -> Result<MetricsReport> {
    if values.len() != optima.len() {
        return Err(Error::Dimension(format!(
            "{} values for {} optima",
            values.len(),
            optima.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::param("no instances to evaluate"));
    }
    if scale == 0 {
        return Err(Error::param("scale must be positive"));
    }
    let mut rows = Vec::with_capacity(values.len());
    for (i, (&value, &optimum)) in values.iter().zip(optima).enumerate() {
        let id = i as u32 + 1;
        if value > optimum {
            return Err(Error::Integrity(format!(
                "instance {id}: value {value} exceeds optimum {optimum}"
            )));
        }
        rows.push(InstanceRow { id, value, optimum });
    }
    Ok(MetricsReport {
        scale,
        sum_values: values.iter().map(|&v| v as u128).sum(),
        sum_optima: optima.iter().map(|&v| v as u128).sum(),
        n_opt: rows.iter().filter(|r| r.is_optimal()).count(),
        rows,
    })
}

/// 0-based index range covered by `#highest`.
pub fn highest_range(m: usize, last_half: bool) -> std::ops::Range<usize> {
    if last_half {
        m / 2..m
    } else {
        0..m
    }
}

/// Strict wins of `a` over `b` and of `b` over `a`; ties count for neither.
/// With `last_half` only ids `M/2+1..=M` are compared.
pub fn compare_highest(a: &[u64], b: &[u64], last_half: bool) -> Result<(usize, usize)> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "cannot compare {} values with {}",
            a.len(),
            b.len()
        )));
    }
    let range = highest_range(a.len(), last_half);
    let (a, b) = (&a[range.clone()], &b[range]);
    let wins_a = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let wins_b = a.iter().zip(b).filter(|(x, y)| y > x).count();
    Ok((wins_a, wins_b))
}

/// For each method, the number of instances where it is strictly above all
/// the others.
pub fn highest_counts(methods: &[&[u64]], last_half: bool) -> Result<Vec<usize>> {
    let Some(first) = methods.first() else {
        return Ok(Vec::new());
    };
    if methods.iter().any(|m| m.len() != first.len()) {
        return Err(Error::Dimension("methods cover different instance counts".into()));
    }
    let mut counts = vec![0; methods.len()];
    if methods.len() < 2 {
        return Ok(counts);
    }
    for i in highest_range(first.len(), last_half) {
        let best = methods.iter().map(|m| m[i]).max().unwrap();
        let mut at_best = methods.iter().enumerate().filter(|(_, m)| m[i] == best);
        let (k, _) = at_best.next().unwrap();
        if at_best.next().is_none() {
            counts[k] += 1;
        }
    }
    Ok(counts)
}

/// Best-so-far mean value sampled every `window` steps up to the end of the
/// log; a window past the end yields the single final point.
pub fn learning_curve(log: &TrainLog, window: u64) -> Result<Vec<(u64, f64)>> {
    let last = log
        .episodes
        .last()
        .ok_or_else(|| Error::param("training log has no episodes"))?;
    if window == 0 {
        return Err(Error::param("curve window must be at least 1"));
    }
    let end = log.total_steps.max(last.t);
    let mut out = Vec::new();
    let mut idx = 0;
    let mut current = 0.0;
    let mut t = window.min(end);
    loop {
        while idx < log.episodes.len() && log.episodes[idx].t <= t {
            current = log.episodes[idx].best_valbar;
            idx += 1;
        }
        out.push((t, current));
        if t >= end {
            break;
        }
        t = (t + window).min(end);
    }
    Ok(out)
}

/// First step at which the best-so-far mean reaches `fraction` of its final
/// value.
pub fn steps_to_fraction(log: &TrainLog, fraction: f64) -> Option<u64> {
    let last = log.episodes.last()?.best_valbar;
    log.episodes
        .iter()
        .find(|e| e.best_valbar >= fraction * last)
        .map(|e| e.t)
}

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    pub method: String,
    pub n: usize,
    pub report: MetricsReport,
    pub highest: usize,
}

const COLUMNS: [&str; 8] = [
    "Dataset",
    "Method",
    "N",
    "Val-bar",
    "#opt",
    "#highest",
    "Val-bar_opt",
    "ratio",
];

fn cells(row: &TableRow) -> [String; 8] {
    let pct = row.report.ratio() * Ratio::from_integer(100);
    [
        row.dataset.clone(),
        row.method.clone(),
        row.n.to_string(),
        format_ratio(row.report.val_bar(), 2),
        row.report.n_opt.to_string(),
        row.highest.to_string(),
        format_ratio(row.report.val_bar_opt(), 2),
        format!("{}%", format_ratio(pct, 3)),
    ]
}

/// Column-aligned text table.
pub fn render_table(rows: &[TableRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(cells).collect();
    let mut widths = COLUMNS.map(str::len);
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i < 2 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&mut out, &COLUMNS.map(String::from));
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    writeln!(out, "{}", "-".repeat(rule)).unwrap();
    for r in &body {
        line(&mut out, r);
    }
    out
}

pub fn render_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("dataset,method,n,val_bar,n_opt,n_highest,val_bar_opt,ratio_pct\n");
    for r in rows {
        let c = cells(r);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c[0],
            c[1],
            c[2],
            c[3],
            c[4],
            c[5],
            c[6],
            c[7].trim_end_matches('%')
        )
        .unwrap();
    }
    out
}

/// Per-instance CSV: `id,optimum,<method>...`.
pub fn render_instance_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("id,optimum");
    for r in rows {
        write!(out, ",{}", r.method).unwrap();
    }
    out.push('\n');
    let Some(first) = rows.first() else {
        return out;
    };
    for (i, base) in first.report.rows.iter().enumerate() {
        write!(out, "{},{}", base.id, base.optimum).unwrap();
        for r in rows {
            write!(out, ",{}", r.report.rows[i].value).unwrap();
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// SVG line chart of one or more learning curves.
pub fn render_svg(title: &str, curves: &[(String, Vec<(u64, f64)>)]) -> String {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
    let pts = curves.iter().flat_map(|(_, c)| c.iter());
    let t_max = pts.clone().map(|p| p.0).max().unwrap_or(1).max(1) as f64;
    let y_lo = pts.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (y_lo, y_hi) = if y_lo.is_finite() && y_hi > y_lo {
        (y_lo, y_hi)
    } else {
        let c = if y_lo.is_finite() { y_lo } else { 0.0 };
        (c - 1.0, c + 1.0)
    };
    let sx = |t: f64| left + (w - left - right) * t / t_max;
    let sy = |v: f64| h - bottom - (h - top - bottom) * (v - y_lo) / (y_hi - y_lo);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (w - right + left) / 2.0,
        escape(title)
    )
    .unwrap();
    let (x0, x1, y0, y1) = (left, w - right, h - bottom, top);
    writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (tx, vy) = (t_max * f, y_lo + (y_hi - y_lo) * f);
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(tx),
            y0 + 18.0,
            tx.round()
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            x0 - 6.0,
            sy(vy) + 4.0,
            vy
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">timestep</text>"#,
        (x0 + x1) / 2.0,
        h - 12.0
    )
    .unwrap();
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = curve
            .iter()
            .enumerate()
            .map(|(j, &(t, v))| {
                format!("{}{:.2} {:.2}", if j == 0 { 'M' } else { 'L' }, sx(t as f64), sy(v))
            })
            .collect();
        writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.join(" ")
        )
        .unwrap();
        let ly = top + 16.0 * i as f64 + 10.0;
        writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x1 + 10.0,
            x1 + 30.0,
            x1 + 36.0,
            ly + 4.0,
            escape(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::EpisodeRecord;

    #[test]
    fn two_instance_example() {
        let r = compute_metrics(&[10, 20], &[10, 25], 1).unwrap();
        assert_eq!(r.val_bar(), Ratio::from_integer(15));
        assert_eq!(r.n_opt, 1);
        assert_eq!(r.ratio(), Ratio::new(30, 35));
        assert!((ratio_to_f64(r.ratio()) - 0.857142857).abs() < 1e-8);
    }

    #[test]
    fn identical_and_zero() {
        let r = compute_metrics(&[3, 4, 5], &[3, 4, 5], 10).unwrap();
        assert_eq!(r.ratio(), Ratio::from_integer(1));
        assert_eq!(r.n_opt, 3);
        assert_eq!(r.val_bar(), Ratio::new(12, 30));
        let r = compute_metrics(&[0], &[5], 1).unwrap();
        assert_eq!(r.ratio(), Ratio::from_integer(0));
        assert_eq!(r.n_opt, 0);
    }

    #[test]
    fn value_above_optimum_is_integrity_error() {
        assert!(matches!(
            compute_metrics(&[6], &[5], 1),
            Err(Error::Integrity(_))
        ));
        assert!(compute_metrics(&[1, 2], &[5], 1).is_err());
    }

    #[test]
    fn highest_examples() {
        assert_eq!(compare_highest(&[5, 7, 9], &[5, 6, 10], false).unwrap(), (1, 1));
        assert_eq!(compare_highest(&[1, 2], &[1, 2], false).unwrap(), (0, 0));
        assert_eq!(compare_highest(&[9, 9, 1, 5], &[1, 1, 2, 5], true).unwrap(), (0, 1));
        assert!(compare_highest(&[1], &[1, 2], false).is_err());
        assert_eq!(
            highest_counts(&[&[5, 7, 9], &[5, 6, 10], &[4, 7, 3]], false).unwrap(),
            vec![0, 1, 0]
        );
    }

    #[test]
    fn rounding() {
        assert_eq!(format_ratio(Ratio::new(98694, 1000), 3), "98.694");
        assert_eq!(format_ratio(Ratio::new(2, 3), 3), "0.667");
        assert_eq!(format_ratio(Ratio::new(1, 8), 2), "0.13");
        assert_eq!(format_ratio(Ratio::from_integer(7), 0), "7");
    }

    fn log(points: &[(u64, f64)]) -> TrainLog {
        TrainLog {
            fingerprint: String::new(),
            embedding: "raw".into(),
            m: 1,
            scale: 1,
            total_steps: points.last().unwrap().0,
            steps: Vec::new(),
            episodes: points
                .iter()
                .map(|&(t, v)| EpisodeRecord {
                    t,
                    instance: 1,
                    value: v as u64,
                    best_valbar: v,
                })
                .collect(),
        }
    }

    #[test]
    fn curve_sampling() {
        let l = log(&[(3, 1.0), (7, 2.0), (12, 2.0)]);
        assert_eq!(
            learning_curve(&l, 5).unwrap(),
            vec![(5, 1.0), (10, 2.0), (12, 2.0)]
        );
        assert_eq!(learning_curve(&l, 100).unwrap(), vec![(12, 2.0)]);
        let flat = log(&[(2, 4.0), (4, 4.0), (6, 4.0)]);
        assert!(learning_curve(&flat, 2).unwrap().iter().all(|p| p.1 == 4.0));
        assert_eq!(steps_to_fraction(&l, 0.99), Some(7));
    }

    #[test]
    fn table_has_paper_columns() {
        let row = TableRow {
            dataset: "RI".into(),
            method: "Greedy".into(),
            n: 50,
            report: compute_metrics(&[98694], &[100000], 1).unwrap(),
            highest: 0,
        };
        let t = render_table(std::slice::from_ref(&row));
        assert!(t.starts_with("Dataset"));
        assert!(t.contains("98.694%"), "{t}");
        assert!(render_csv(&[row]).lines().nth(1).unwrap().ends_with(",98.694"));
    }
}
