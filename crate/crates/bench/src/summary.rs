//! Per-cell lifetime statistics over seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use wsn_core::ProtocolKind;

use crate::experiment::RunRecord;

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("no runs to summarize")]
    Empty,
    #[error("runs.csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

pub const RUNS_HEADER: &str =
    "protocol,n_nodes,n_gateways,seed,fnd,hnd,lnd,rounds_executed,total_energy_spent_j";

/// One line of runs.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub protocol: ProtocolKind,
    pub n_nodes: usize,
    pub n_gateways: usize,
    pub seed: u64,
    pub fnd: Option<u32>,
    pub hnd: Option<u32>,
    pub lnd: Option<u32>,
    pub rounds_executed: usize,
    pub total_energy_spent_j: f64,
}

impl RunRow {
    pub fn from_record(r: &RunRecord) -> Self {
        Self {
            protocol: r.config.protocol,
            n_nodes: r.config.n_nodes,
            n_gateways: r.config.n_gateways,
            seed: r.config.seed,
            fnd: r.result.lifetime.fnd,
            hnd: r.result.lifetime.hnd,
            lnd: r.result.lifetime.lnd,
            rounds_executed: r.result.rounds_executed(),
            total_energy_spent_j: r.result.total_energy_spent(),
        }
    }
}

fn opt(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl std::fmt::Display for RunRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.n_nodes,
            self.n_gateways,
            self.seed,
            opt(self.fnd),
            opt(self.hnd),
            opt(self.lnd),
            self.rounds_executed,
            self.total_energy_spent_j
        )
    }
}

/// Parses runs.csv text. Empty metric fields are undefined metrics.
pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRow>, SummaryError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RUNS_HEADER => {}
        _ => {
            return Err(SummaryError::Csv {
                line: 1,
                msg: format!("expected header `{RUNS_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| SummaryError::Csv { line: line_no, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} {s:?}"))
        }
        let metric = |s: &str, name: &str| -> Result<Option<u32>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        };
        let row = (|| -> Result<RunRow, String> {
            Ok(RunRow {
                protocol: fields[0]
                    .parse()
                    .map_err(|e: wsn_core::Error| e.to_string())?,
                n_nodes: num(fields[1], "n_nodes")?,
                n_gateways: num(fields[2], "n_gateways")?,
                seed: num(fields[3], "seed")?,
                fnd: metric(fields[4], "fnd")?,
                hnd: metric(fields[5], "hnd")?,
                lnd: metric(fields[6], "lnd")?,
                rounds_executed: num(fields[7], "rounds_executed")?,
                total_energy_spent_j: num(fields[8], "total_energy_spent_j")?,
            })
        })()
        .map_err(err)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Descriptive statistics of the defined values of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            count: values.len(),
            mean,
            min,
            max,
            stddev,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    /// `None` when no seed reached the metric.
    pub stats: Option<Stats>,
    pub undefined: usize,
}

impl MetricSummary {
    fn of(values: impl Iterator<Item = Option<u32>>) -> Self {
        let mut defined = Vec::new();
        let mut undefined = 0;
        for v in values {
            match v {
                Some(x) => defined.push(f64::from(x)),
                None => undefined += 1,
            }
        }
        Self {
            stats: Stats::of(&defined),
            undefined,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        self.stats.map(|s| s.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub runs: usize,
    pub fnd: MetricSummary,
    pub hnd: MetricSummary,
    pub lnd: MetricSummary,
}

/// Statistics keyed by (protocol, node count).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonSummary {
    pub per_cell: BTreeMap<(ProtocolKind, usize), CellSummary>,
}

impl ComparisonSummary {
    pub fn get(&self, protocol: ProtocolKind, n_nodes: usize) -> Option<&CellSummary> {
        self.per_cell.get(&(protocol, n_nodes))
    }

    /// CSV rendering: one row per cell and metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("protocol,n_nodes,metric,runs,undefined,mean,min,max,stddev\n");
        for ((protocol, n), cell) in &self.per_cell {
            for (name, m) in [("fnd", cell.fnd), ("hnd", cell.hnd), ("lnd", cell.lnd)] {
                let stats = m
                    .stats
                    .map(|s| format!("{},{},{},{}", s.mean, s.min, s.max, s.stddev))
                    .unwrap_or_else(|| ",,,".to_string());
                let _ = writeln!(
                    out,
                    "{protocol},{n},{name},{},{},{stats}",
                    cell.runs, m.undefined
                );
            }
        }
        out
    }
}

/// Summarizes parsed runs.csv rows.
pub fn summarize_rows(rows: &[RunRow]) -> Result<ComparisonSummary, SummaryError> {
    if rows.is_empty() {
        return Err(SummaryError::Empty);
    }
    let mut sorted: Vec<&RunRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.protocol, r.n_nodes, r.seed));
    let mut groups: BTreeMap<(ProtocolKind, usize), Vec<&RunRow>> = BTreeMap::new();
    for r in sorted {
        groups.entry((r.protocol, r.n_nodes)).or_default().push(r);
    }
    let per_cell = groups
        .into_iter()
        .map(|(key, rows)| {
            let cell = CellSummary {
                runs: rows.len(),
                fnd: MetricSummary::of(rows.iter().map(|r| r.fnd)),
                hnd: MetricSummary::of(rows.iter().map(|r| r.hnd)),
                lnd: MetricSummary::of(rows.iter().map(|r| r.lnd)),
            };
            (key, cell)
        })
        .collect();
    Ok(ComparisonSummary { per_cell })
}

/// Summarizes in-memory results.
pub fn summarize(results: &[RunRecord]) -> Result<ComparisonSummary, SummaryError> {
    let rows: Vec<RunRow> = results.iter().map(RunRow::from_record).collect();
    summarize_rows(&rows)
}
