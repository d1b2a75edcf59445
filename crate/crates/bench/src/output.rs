//! runs.csv / series.csv and whitespace-delimited plot tables.
//!
//! Rows are always sorted by (protocol, n_nodes, seed, round) and floats use
//! Rust's shortest round-trip formatting, so identical results produce
//! identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use wsn_core::ProtocolKind;

use crate::experiment::RunRecord;
use crate::summary::{summarize, RunRow, RUNS_HEADER};

pub const SERIES_HEADER: &str =
    "protocol,n_nodes,seed,round,alive_normal,alive_high,heads,energy_remaining_j,packets_to_sink";

fn sorted(results: &[RunRecord]) -> Vec<&RunRecord> {
    let mut out: Vec<&RunRecord> = results.iter().collect();
    out.sort_by_key(|r| (r.protocol(), r.n_nodes(), r.seed()));
    out
}

pub fn write_runs<W: Write>(results: &[RunRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in sorted(results) {
        writeln!(w, "{}", RunRow::from_record(r))?;
    }
    w.flush()
}

pub fn write_series<W: Write>(results: &[RunRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{SERIES_HEADER}")?;
    for r in sorted(results) {
        let (p, n, seed) = (r.protocol(), r.n_nodes(), r.seed());
        for m in &r.result.series {
            writeln!(
                w,
                "{p},{n},{seed},{},{},{},{},{},{}",
                m.round,
                m.alive_normal,
                m.alive_high,
                m.heads_count,
                m.energy_remaining_total,
                m.packets_to_sink
            )?;
        }
    }
    w.flush()
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes runs.csv and series.csv into `dir`, returning their paths.
pub fn emit_csv(results: &[RunRecord], dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let runs = dir.join("runs.csv");
    let series = dir.join("series.csv");
    write_runs(results, create(&runs)?)?;
    write_series(results, create(&series)?)?;
    Ok((runs, series))
}

/// Mean alive-normal count per round over the given runs. Runs that ended
/// early contribute their final count to the remaining rounds.
pub fn mean_alive_curve(runs: &[&RunRecord]) -> Vec<f64> {
    let len = runs
        .iter()
        .map(|r| r.result.series.len())
        .max()
        .unwrap_or(0);
    (0..len)
        .map(|i| {
            let total: f64 = runs
                .iter()
                .map(|r| {
                    let s = &r.result.series;
                    s.get(i).or(s.last()).map_or(0.0, |m| m.alive_normal as f64)
                })
                .sum();
            total / runs.len() as f64
        })
        .collect()
}

pub fn curve_file_name(protocol: ProtocolKind) -> String {
    format!("curve_{}.dat", protocol.as_str().to_ascii_lowercase())
}

/// Writes one `curve_<protocol>.dat` per protocol (one block per node
/// count, columns `round mean_alive`) and `fnd_vs_n.dat` (columns
/// `n_nodes mean_fnd_leach mean_fnd_sep mean_fnd_gateway`, NaN where a
/// protocol is absent or never lost a node).
pub fn emit_plot_data(results: &[RunRecord], dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut groups: BTreeMap<ProtocolKind, BTreeMap<usize, Vec<&RunRecord>>> = BTreeMap::new();
    for r in sorted(results) {
        groups
            .entry(r.protocol())
            .or_default()
            .entry(r.n_nodes())
            .or_default()
            .push(r);
    }
    let mut written = Vec::new();
    for (protocol, by_n) in &groups {
        let path = dir.join(curve_file_name(*protocol));
        let mut w = create(&path)?;
        for (block, (n, runs)) in by_n.iter().enumerate() {
            if block > 0 {
                // Two blank lines separate data sets for `index` selection.
                writeln!(w)?;
                writeln!(w)?;
            }
            writeln!(w, "# protocol {protocol} n_nodes {n} seeds {}", runs.len())?;
            writeln!(w, "# round mean_alive")?;
            for (round, mean) in mean_alive_curve(runs).iter().enumerate() {
                writeln!(w, "{round} {mean}")?;
            }
        }
        w.flush()?;
        written.push(path);
    }

    let summary = summarize(results).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let mut counts: Vec<usize> = results.iter().map(|r| r.n_nodes()).collect();
    counts.sort_unstable();
    counts.dedup();
    let path = dir.join("fnd_vs_n.dat");
    let mut w = create(&path)?;
    writeln!(w, "# n_nodes mean_fnd_leach mean_fnd_sep mean_fnd_gateway")?;
    for n in counts {
        write!(w, "{n}")?;
        for protocol in ProtocolKind::ALL {
            let mean = summary
                .get(protocol, n)
                .and_then(|c| c.fnd.mean())
                .unwrap_or(f64::NAN);
            write!(w, " {mean}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}
