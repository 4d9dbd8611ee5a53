//! Runtime estimators over repeated runs: quartiles, mean, coefficient of
//! variation and boxplot data.
//!
//! Quartiles interpolate linearly between order statistics: the q-th
//! quantile of sorted `x[0..n]` is taken at fractional index `q * (n - 1)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimacs::SolveStatus;
use crate::harness::RunRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no runtimes to summarize")]
    Empty,
    #[error("runtime {0} is negative or not finite")]
    BadValue(String),
    #[error("table: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatsSummary {
    pub count: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub mean: f64,
    /// Sample standard deviation as a percentage of the mean.
    pub cv_percent: f64,
    pub min: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
    pub censored_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boxplot {
    pub min: f64,
    pub lower_quartile: f64,
    pub median: f64,
    pub upper_quartile: f64,
    pub max: f64,
    /// Most extreme points within 1.5 IQR of the box.
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

fn sorted(times: &[f64]) -> Result<Vec<f64>, StatsError> {
    if times.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(bad) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(StatsError::BadValue(bad.to_string()));
    }
    let mut v = times.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    let h = q * (x.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

pub fn boxplot_summary(times: &[f64]) -> Result<Boxplot, StatsError> {
    let x = sorted(times)?;
    let q1 = quantile_sorted(&x, 0.25);
    let q3 = quantile_sorted(&x, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo, hi) = (q1 - fence, q3 + fence);
    let inside: Vec<f64> = x.iter().copied().filter(|&t| t >= lo && t <= hi).collect();
    Ok(Boxplot {
        min: x[0],
        lower_quartile: q1,
        median: quantile_sorted(&x, 0.5),
        upper_quartile: q3,
        max: x[x.len() - 1],
        lower_whisker: inside.first().copied().unwrap_or(q1),
        upper_whisker: inside.last().copied().unwrap_or(q3),
        outliers: x.iter().copied().filter(|&t| t < lo || t > hi).collect(),
    })
}

pub fn summarize(times: &[f64]) -> Result<RunStatsSummary, StatsError> {
    let b = boxplot_summary(times)?;
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let cv = if times.len() > 1 && mean > 0.0 {
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        100.0 * var.sqrt() / mean
    } else {
        0.0
    };
    Ok(RunStatsSummary {
        count: times.len(),
        median: b.median,
        lower_quartile: b.lower_quartile,
        upper_quartile: b.upper_quartile,
        mean,
        cv_percent: cv,
        min: b.min,
        max: b.max,
        outliers: b.outliers,
        censored_count: 0,
    })
}

/// Summary over successful (SAT) runs; timeouts and other statuses count
/// as censored.
pub fn summarize_records(records: &[RunRecord]) -> Result<RunStatsSummary, StatsError> {
    let times: Vec<f64> = records
        .iter()
        .filter(|r| r.status == SolveStatus::Sat)
        .map(RunRecord::runtime)
        .collect();
    let mut s = summarize(&times)?;
    s.censored_count = records.len() - times.len();
    Ok(s)
}

pub const TABLE_HEADER: [&str; 7] = [
    "instance",
    "count",
    "median",
    "Q1",
    "Q3",
    "mean",
    "sigma_pct",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub instance: String,
    pub count: usize,
    pub median: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q3")]
    pub q3: f64,
    pub mean: f64,
    pub sigma_pct: f64,
}

impl TableRow {
    pub fn new(label: &str, s: &RunStatsSummary) -> Self {
        let r1 = |x: f64| (x * 10.0).round() / 10.0;
        TableRow {
            instance: label.to_string(),
            count: s.count,
            median: r1(s.median),
            q1: r1(s.lower_quartile),
            q3: r1(s.upper_quartile),
            mean: r1(s.mean),
            sigma_pct: s.cv_percent.round(),
        }
    }
}

/// CSV table with one row per labelled summary. Times keep one decimal and
/// the spread is a whole percentage.
pub fn to_table(summaries: &[(String, RunStatsSummary)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for (label, s) in summaries {
        let r = TableRow::new(label, s);
        w.write_record([
            r.instance.clone(),
            r.count.to_string(),
            format!("{:.1}", r.median),
            format!("{:.1}", r.q1),
            format!("{:.1}", r.q3),
            format!("{:.1}", r.mean),
            format!("{:.0}", r.sigma_pct),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>, StatsError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| StatsError::Csv(e.to_string()))
}

/// Whitespace-separated boxplot data, one labelled series per line:
/// index, label, lower whisker, Q1, median, Q3, upper whisker, outliers.
pub fn gnuplot_data(series: &[(String, Boxplot)]) -> String {
    let mut out = String::from("# idx label whisker_lo q1 median q3 whisker_hi outliers...\n");
    for (i, (label, b)) in series.iter().enumerate() {
        let _ = write!(
            out,
            "{} \"{}\" {} {} {} {} {}",
            i + 1,
            label,
            b.lower_whisker,
            b.lower_quartile,
            b.median,
            b.upper_quartile,
            b.upper_whisker
        );
        for o in &b.outliers {
            let _ = write!(out, " {o}");
        }
        out.push('\n');
    }
    out
}
