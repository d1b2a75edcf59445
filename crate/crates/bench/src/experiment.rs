//! Grid expansion and parallel execution of simulation runs.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use thiserror::Error;
use wsn_core::{ProtocolKind, SimConfig, SimResult};

use crate::config::ConfigFile;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("grid has no {0}")]
    EmptyGrid(&'static str),
    #[error(
        "run {protocol} n_nodes={n_nodes} n_gateways={n_gateways} seed={seed} failed: {source}"
    )]
    Cell {
        protocol: ProtocolKind,
        n_nodes: usize,
        n_gateways: usize,
        seed: u64,
        source: wsn_core::Error,
    },
    #[error("cannot build thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Node counts × protocols × seeds over a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub node_counts: Vec<usize>,
    pub protocols: Vec<ProtocolKind>,
    pub seeds: Vec<u64>,
    pub base_config: SimConfig,
    /// Keep `base_config.n_gateways` at every node count instead of scaling it.
    pub pin_gateways: bool,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            node_counts: vec![50, 100, 200, 300, 400, 500],
            protocols: ProtocolKind::ALL.to_vec(),
            seeds: (0..30).collect(),
            base_config: SimConfig::default(),
            pin_gateways: false,
        }
    }
}

impl ExperimentGrid {
    pub fn from_config(file: &ConfigFile) -> Self {
        let defaults = Self::default();
        Self {
            node_counts: file.node_counts.clone().unwrap_or(defaults.node_counts),
            protocols: file.protocols.clone().unwrap_or(defaults.protocols),
            seeds: file.seeds.clone().unwrap_or(defaults.seeds),
            base_config: file.sim.clone(),
            pin_gateways: file.pin_gateways.unwrap_or(false),
        }
    }

    /// High-energy node count for a cell. Unpinned grids keep the base
    /// config's per-100-nodes ratio, never going below the base count:
    /// `max(g, round(g·n/100))`, i.e. `max(4, round(0.04·n))` by default.
    pub fn gateways_for(&self, n_nodes: usize) -> usize {
        let base = self.base_config.n_gateways;
        if self.pin_gateways {
            return base;
        }
        let scaled = (base as f64 * n_nodes as f64 / 100.0).round() as usize;
        base.max(scaled)
    }

    pub fn len(&self) -> usize {
        self.node_counts.len() * self.protocols.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every cell as a resolved config, sorted by (protocol, n_nodes, seed).
    pub fn expand(&self) -> Vec<SimConfig> {
        let mut protocols = self.protocols.clone();
        protocols.sort_unstable();
        protocols.dedup();
        let mut counts = self.node_counts.clone();
        counts.sort_unstable();
        counts.dedup();
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let mut out = Vec::with_capacity(protocols.len() * counts.len() * seeds.len());
        for &protocol in &protocols {
            for &n_nodes in &counts {
                for &seed in &seeds {
                    out.push(SimConfig {
                        protocol,
                        n_nodes,
                        n_gateways: self.gateways_for(n_nodes),
                        seed,
                        ..self.base_config.clone()
                    });
                }
            }
        }
        out
    }
}

/// One finished cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: SimConfig,
    pub result: SimResult,
}

impl RunRecord {
    pub fn protocol(&self) -> ProtocolKind {
        self.config.protocol
    }

    pub fn n_nodes(&self) -> usize {
        self.config.n_nodes
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }
}

fn run_cell(config: &SimConfig) -> Result<RunRecord, ExperimentError> {
    wsn_core::run(config)
        .map(|result| RunRecord {
            config: config.clone(),
            result,
        })
        .map_err(|source| ExperimentError::Cell {
            protocol: config.protocol,
            n_nodes: config.n_nodes,
            n_gateways: config.n_gateways,
            seed: config.seed,
            source,
        })
}

/// Runs every cell on up to `parallelism` threads. Output order is the
/// sorted cell order whatever the completion order was. Progress goes to
/// stderr when `progress` is set.
pub fn run_experiment(
    grid: &ExperimentGrid,
    parallelism: usize,
    progress: bool,
) -> Result<Vec<RunRecord>, ExperimentError> {
    if grid.node_counts.is_empty() {
        return Err(ExperimentError::EmptyGrid("node counts"));
    }
    if grid.protocols.is_empty() {
        return Err(ExperimentError::EmptyGrid("protocols"));
    }
    if grid.seeds.is_empty() {
        return Err(ExperimentError::EmptyGrid("seeds"));
    }
    run_configs(&grid.expand(), parallelism, progress)
}

/// Runs an explicit list of configs; results come back in input order.
pub fn run_configs(
    configs: &[SimConfig],
    parallelism: usize,
    progress: bool,
) -> Result<Vec<RunRecord>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()?;
    let total = configs.len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let record = run_cell(cfg);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if progress && (finished.is_multiple_of(step) || finished == total) {
                    eprintln!("[{finished}/{total}] runs complete");
                }
                record
            })
            .collect()
    })
}
