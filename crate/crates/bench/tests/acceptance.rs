//! Acceptance criteria, run in order with one PASS/FAIL/FLAG line each.
//!
//! FLAG marks a criterion whose mechanics hold but whose outcome disagrees
//! with the expected protocol ordering; it does not fail the test.
//!
//! Criteria share one expensive default-grid execution, so they live in a
//! single test function. The report goes to stderr even without
//! `--nocapture`.

mod oracle;

use std::io::Write;
use std::time::{Duration, Instant};

use wsn_bench::experiment::{run_experiment, ExperimentGrid, RunRecord};
use wsn_bench::output::emit_csv;
use wsn_bench::summary::{summarize, CellSummary};
use wsn_core::energy::{aggregate_energy, crossover_distance, receive_energy, transmit_energy};
use wsn_core::protocols::leach_threshold;
use wsn_core::{ProtocolKind, RadioParams, SimConfig, Simulation};

const REL_TOL: f64 = 1e-12;
const CONSERVATION_TOL_J: f64 = 1e-9;
const ROTATION_BUDGET: Duration = Duration::from_secs(1);
const GRID_BUDGET: Duration = Duration::from_secs(60);
const GRID_PARALLELISM: usize = 4;
const AUDIT_SEED: u64 = 1;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, pass: bool, detail: String) {
        self.record_tagged(id, title, pass, if pass { "PASS" } else { "FAIL" }, detail);
    }

    fn record_tagged(&mut self, id: u32, title: &str, pass: bool, tag: &str, detail: String) {
        let line = format!("[{tag}] {id}. {title}: {detail}");
        // Straight to the stderr handle: libtest captures the print macros,
        // and the report should show up in every run.
        let _ = writeln!(std::io::stderr(), "{line}");
        self.lines.push((pass, line));
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

fn threshold_exactness() -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, expected) in [(0, 0.1), (5, 0.2), (9, 1.0)] {
        let got = leach_threshold(true, r, 0.1).unwrap();
        ok &= rel_close(got, expected);
        detail.push(format!("T(r={r})={got}"));
    }
    let zero_outside_g = (0..10).all(|r| leach_threshold(false, r, 0.1).unwrap() == 0.0);
    ok &= zero_outside_g;
    detail.push(format!("T=0 outside G for r in 0..10: {zero_outside_g}"));
    (ok, detail.join(", "))
}

fn radio_exactness() -> (bool, String) {
    let p = RadioParams::default();
    let checks = [
        (
            "tx(2000,50)",
            transmit_energy(2000, 50.0, &p).unwrap(),
            1.5e-4,
        ),
        (
            "tx(2000,100)",
            transmit_energy(2000, 100.0, &p).unwrap(),
            3.6e-4,
        ),
        ("rx(4000)", receive_energy(4000, &p), 2.0e-4),
        ("agg(2000,5)", aggregate_energy(2000, 5, &p), 5.0e-5),
        // sqrt(10 / 0.0013) evaluated independently of the crate.
        (
            "d0",
            crossover_distance(10e-12, 0.0013e-12).unwrap(),
            (10.0f64 / 0.0013).sqrt(),
        ),
    ];
    let ok = checks.iter().all(|(_, got, want)| rel_close(*got, *want));
    let d0 = p.crossover_distance();
    let ok = ok && (d0 - 87.7058).abs() < 5e-5;
    let detail = checks
        .iter()
        .map(|(name, got, _)| format!("{name}={got}"))
        .collect::<Vec<_>>()
        .join(", ");
    (ok, detail)
}

fn rotation() -> (bool, String) {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..10 {
        let mut sim = Simulation::new(SimConfig {
            protocol: ProtocolKind::Leach,
            n_nodes: 100,
            n_gateways: 0,
            e0_normal: 1e9,
            e0_high: 1e9,
            p_select: 0.1,
            seed,
            ..SimConfig::default()
        })
        .unwrap();
        let mut served = vec![0u32; 100];
        for _ in 0..10 {
            for h in sim.step().unwrap().topology.heads {
                served[h] += 1;
            }
        }
        if !served.iter().all(|&c| c == 1) {
            failures.push(seed);
        }
    }
    let elapsed = start.elapsed();
    (
        failures.is_empty() && elapsed < ROTATION_BUDGET,
        format!("10 seeds, failing seeds {failures:?}, {elapsed:.2?} (budget {ROTATION_BUDGET:?})"),
    )
}

fn energy_audit() -> (bool, String) {
    let setup = oracle::Setup {
        seed: AUDIT_SEED,
        n_normal: 5,
        rounds: 3,
        p: 0.1,
        bits: 4000.0,
        side: 100.0,
        sink: (50.0, 100.0),
        e0_normal: 0.5,
        e0_gateway: 1.0,
    };
    let expected = oracle::gateway_run(&setup);
    let mut sim = Simulation::new(SimConfig {
        protocol: ProtocolKind::Gateway,
        n_nodes: 5,
        n_gateways: 1,
        max_rounds: 3,
        seed: AUDIT_SEED,
        ..SimConfig::default()
    })
    .unwrap();
    for _ in 0..3 {
        sim.step().unwrap();
    }
    let spent = sim.ledger().per_node_spent();
    let mut worst = 0.0f64;
    let mut ok = spent.len() == expected.spent.len();
    for (got, want) in spent.iter().zip(&expected.spent) {
        let rel = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ok &= rel_close(*got, *want);
    }
    (
        ok,
        format!(
            "seed {AUDIT_SEED}: {} nodes, {} gateway-managed clusters, {} headless rounds, worst relative error {worst:e}",
            spent.len(),
            expected.managed_clusters,
            expected.headless_rounds
        ),
    )
}

fn conservation(records: &[RunRecord]) -> (bool, String) {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for r in records {
        let res = &r.result;
        let gap =
            (res.initial_energy_total - res.remaining_energy_total() - res.ledger.total_spent())
                .abs();
        worst = worst.max(gap);
        let monotone = res.series.windows(2).all(|w| {
            w[1].alive_normal <= w[0].alive_normal
                && w[1].alive_high <= w[0].alive_high
                && w[1].energy_remaining_total <= w[0].energy_remaining_total
        });
        if gap > CONSERVATION_TOL_J || !monotone {
            bad.push((r.protocol(), r.n_nodes(), r.seed()));
        }
    }
    (
        bad.is_empty(),
        format!(
            "{} runs, worst |initial - remaining - ledger| = {worst:e} J, violations {bad:?}",
            records.len()
        ),
    )
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Cohen's d over runs that reached the metric.
fn effect_size(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, sa) = mean_and_sd(a);
    let (mb, sb) = mean_and_sd(b);
    let pooled = (((a.len() - 1) as f64 * sa * sa + (b.len() - 1) as f64 * sb * sb)
        / (a.len() + b.len() - 2) as f64)
        .sqrt();
    (pooled > 0.0).then(|| (ma - mb) / pooled)
}

fn metric_values(records: &[RunRecord], protocol: ProtocolKind, lnd: bool) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.protocol() == protocol && r.n_nodes() == 100)
        .filter_map(|r| {
            if lnd {
                r.result.lifetime.lnd
            } else {
                r.result.lifetime.fnd
            }
        })
        .map(f64::from)
        .collect()
}

/// Orderings are reported, never failed: an inversion contradicts the
/// expected ordering, not the implementation.
fn protocol_ordering(records: &[RunRecord]) -> (bool, bool, String) {
    let summary = summarize(records).unwrap();
    let cell = |p| -> CellSummary { *summary.get(p, 100).expect("n=100 cell in default grid") };
    let (leach, sep, gw) = (
        cell(ProtocolKind::Leach),
        cell(ProtocolKind::Sep),
        cell(ProtocolKind::Gateway),
    );
    let all_seeds = leach.runs == 30 && sep.runs == 30 && gw.runs == 30;
    let mut notes = Vec::new();
    let mut flagged = false;
    let mut compare = |label: &str,
                       lnd: bool,
                       a: ProtocolKind,
                       b: ProtocolKind,
                       ma: Option<f64>,
                       mb: Option<f64>| {
        let d = effect_size(
            &metric_values(records, a, lnd),
            &metric_values(records, b, lnd),
        );
        let d = d.map_or_else(|| "n/a".to_string(), |d| format!("{d:+.2}"));
        match (ma, mb) {
            (Some(x), Some(y)) => {
                flagged |= x <= y;
                let flag = if x > y { "holds" } else { "FLAG: inverted" };
                notes.push(format!(
                    "{label} {x:.1} vs {y:.1} (diff {:+.1}, d={d}) {flag}",
                    x - y
                ));
            }
            _ => {
                flagged = true;
                notes.push(format!(
                    "{label}: FLAG undefined (mean {ma:?} vs {mb:?}; no run reached it within max_rounds)"
                ))
            }
        }
    };
    compare(
        "FND(GATEWAY)>FND(LEACH)",
        false,
        ProtocolKind::Gateway,
        ProtocolKind::Leach,
        gw.fnd.mean(),
        leach.fnd.mean(),
    );
    compare(
        "FND(GATEWAY)>FND(SEP)",
        false,
        ProtocolKind::Gateway,
        ProtocolKind::Sep,
        gw.fnd.mean(),
        sep.fnd.mean(),
    );
    compare(
        "LND(GATEWAY)>LND(LEACH)",
        true,
        ProtocolKind::Gateway,
        ProtocolKind::Leach,
        gw.lnd.mean(),
        leach.lnd.mean(),
    );
    notes.push(format!(
        "FND undefined runs: LEACH {}, SEP {}, GATEWAY {}",
        leach.fnd.undefined, sep.fnd.undefined, gw.fnd.undefined
    ));
    (all_seeds, flagged, notes.join("; "))
}

fn determinism(first: &[RunRecord]) -> (bool, String) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_csv(first, a.path()).unwrap();
    // Different thread count, so completion order differs too.
    let second = run_experiment(&ExperimentGrid::default(), 2, false).unwrap();
    emit_csv(&second, b.path()).unwrap();
    let mut same = true;
    let mut sizes = Vec::new();
    for name in ["runs.csv", "series.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        same &= x == y;
        sizes.push(format!("{name} {} bytes", x.len()));
    }
    (
        same,
        format!(
            "two full-grid executions byte-identical: {same} ({})",
            sizes.join(", ")
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let _ = writeln!(std::io::stderr());
    let mut report = Report { lines: Vec::new() };

    let (ok, d) = threshold_exactness();
    report.record(1, "threshold exactness", ok, d);

    let (ok, d) = radio_exactness();
    report.record(2, "radio-model exactness", ok, d);

    let (ok, d) = rotation();
    report.record(3, "rotation property", ok, d);

    let (ok, d) = energy_audit();
    report.record(4, "energy audit vs event-list oracle", ok, d);

    let grid = ExperimentGrid::default();
    let start = Instant::now();
    let records = run_experiment(&grid, GRID_PARALLELISM, false).unwrap();
    let grid_time = start.elapsed();

    let (ok, d) = conservation(&records);
    report.record(5, "conservation and monotone decay", ok, d);

    let (ok, flagged, d) = protocol_ordering(&records);
    let tag = match (ok, flagged) {
        (false, _) => "FAIL",
        (true, true) => "FLAG",
        (true, false) => "PASS",
    };
    report.record_tagged(6, "protocol comparison at default parameters", ok, tag, d);

    let (ok, d) = determinism(&records);
    report.record(7, "determinism", ok, d);

    report.record(
        8,
        "default grid runtime",
        records.len() == 540 && grid_time < GRID_BUDGET,
        format!(
            "{} runs in {grid_time:.2?} with parallelism {GRID_PARALLELISM} on {} available cores (budget {GRID_BUDGET:?})",
            records.len(),
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ),
    );

    let failed: Vec<&String> = report
        .lines
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, l)| l)
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{failed:#?}");
}
