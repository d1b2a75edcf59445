//! Deployment, the round loop and lifetime metrics.
//!
//! Each round runs epoch bookkeeping, cluster-head election, member (and
//! gateway) assignment, `frames_per_round` steady-state frames, then records
//! a [`RoundMetrics`] row. All randomness comes from one ChaCha8 stream seeded
//! with `SimConfig::seed`: node positions first (x then y per node, normal
//! nodes before high-energy ones), then one draw per election candidate per
//! round in ascending id order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{EnergyLedger, RadioParams};
use crate::error::{Error, Result};
use crate::node::{Node, NodeKind, Position, Role};
use crate::protocols::{
    charge_setup, elect_cluster_heads, steady_state_round, ClusterTopology, ElectionState,
    EnergyEvent, ProtocolKind,
};

/// Name of the generator behind every run, echoed into results.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GatewayPlacement {
    /// Uniform i.i.d. positions, like the normal sensors.
    #[default]
    Random,
    /// Centers of an evenly spaced lattice over the area.
    Grid,
}

impl fmt::Display for GatewayPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GatewayPlacement::Random => "RANDOM",
            GatewayPlacement::Grid => "GRID",
        })
    }
}

impl FromStr for GatewayPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RANDOM" => Ok(GatewayPlacement::Random),
            "GRID" => Ok(GatewayPlacement::Grid),
            other => Err(Error::invalid(format!(
                "unknown gateway placement {other:?} (expected RANDOM or GRID)"
            ))),
        }
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Width and height of the deployment area in meters.
    pub area: (f64, f64),
    /// Normal sensing nodes.
    pub n_nodes: usize,
    /// High-energy nodes: gateways under GATEWAY, advanced sensors under
    /// SEP, plain high-energy sensors under LEACH.
    pub n_gateways: usize,
    pub e0_normal: f64,
    pub e0_high: f64,
    pub p_select: f64,
    pub packet_bits: u64,
    pub frames_per_round: u32,
    pub max_rounds: u32,
    pub sink: Position,
    pub protocol: ProtocolKind,
    /// Advanced-node fraction for SEP; `None` derives `n_gateways / n_nodes`.
    pub sep_m: Option<f64>,
    /// Extra-energy factor for SEP.
    pub sep_a: f64,
    pub seed: u64,
    pub gateway_placement: GatewayPlacement,
    /// Control-message cost charged to every alive node once per round.
    pub setup_cost_joules: f64,
    pub radio: RadioParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area: (100.0, 100.0),
            n_nodes: 100,
            n_gateways: 4,
            e0_normal: 0.5,
            e0_high: 1.0,
            p_select: 0.1,
            packet_bits: 4000,
            frames_per_round: 1,
            max_rounds: 1000,
            sink: Position::new(50.0, 100.0),
            protocol: ProtocolKind::Leach,
            sep_m: None,
            sep_a: 1.0,
            seed: 0,
            gateway_placement: GatewayPlacement::Random,
            setup_cost_joules: 0.0,
            radio: RadioParams::default(),
        }
    }
}

impl SimConfig {
    pub fn effective_sep_m(&self) -> f64 {
        self.sep_m
            .unwrap_or_else(|| self.n_gateways as f64 / self.n_nodes.max(1) as f64)
    }

    pub fn total_nodes(&self) -> usize {
        self.n_nodes + self.n_gateways
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.area;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(Error::invalid(format!(
                "area must be positive, got {w}x{h}"
            )));
        }
        if self.n_nodes == 0 {
            return Err(Error::invalid("n_nodes must be positive"));
        }
        for (name, e) in [("e0_normal", self.e0_normal), ("e0_high", self.e0_high)] {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be non-negative, got {e}"
                )));
            }
        }
        if !(self.p_select > 0.0 && self.p_select < 1.0) {
            return Err(Error::invalid(format!(
                "p_select must lie in (0, 1), got {}",
                self.p_select
            )));
        }
        if self.packet_bits == 0 {
            return Err(Error::invalid("packet_bits must be positive"));
        }
        if self.frames_per_round == 0 {
            return Err(Error::invalid("frames_per_round must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be positive"));
        }
        if !(self.sink.x.is_finite() && self.sink.y.is_finite()) {
            return Err(Error::invalid(format!(
                "sink must be finite, got {}",
                self.sink
            )));
        }
        if !(self.setup_cost_joules >= 0.0 && self.setup_cost_joules.is_finite()) {
            return Err(Error::invalid(format!(
                "setup_cost_joules must be non-negative, got {}",
                self.setup_cost_joules
            )));
        }
        ElectionState::new(
            self.protocol,
            self.p_select,
            self.effective_sep_m(),
            self.sep_a,
        )?;
        Ok(())
    }
}

/// Lattice cell centers, row-major, for `count` points over `area`.
fn grid_positions(count: usize, (w, h): (f64, f64)) -> Vec<Position> {
    if count == 0 {
        return Vec::new();
    }
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    (0..count)
        .map(|i| {
            let (row, col) = (i / cols, i % cols);
            Position::new(
                (col as f64 + 0.5) * w / cols as f64,
                (row as f64 + 0.5) * h / rows as f64,
            )
        })
        .collect()
}

/// Places `n_nodes` normal sensors (ids `0..n_nodes`) then `n_gateways`
/// high-energy nodes. The high-energy kind depends on the protocol.
pub fn init_deployment<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Vec<Node>> {
    config.validate()?;
    let (w, h) = config.area;
    let uniform = |rng: &mut R| {
        let x = rng.random::<f64>() * w;
        let y = rng.random::<f64>() * h;
        Position::new(x, y)
    };
    let mut nodes = Vec::with_capacity(config.total_nodes());
    for id in 0..config.n_nodes {
        nodes.push(Node::new(
            id,
            uniform(rng),
            NodeKind::Normal,
            config.e0_normal,
        ));
    }
    let high_kind = match config.protocol {
        ProtocolKind::Gateway => NodeKind::Gateway,
        ProtocolKind::Leach | ProtocolKind::Sep => NodeKind::Advanced,
    };
    let high_positions = match config.gateway_placement {
        GatewayPlacement::Random => (0..config.n_gateways).map(|_| uniform(rng)).collect(),
        GatewayPlacement::Grid => grid_positions(config.n_gateways, config.area),
    };
    for (i, pos) in high_positions.into_iter().enumerate() {
        nodes.push(Node::new(
            config.n_nodes + i,
            pos,
            high_kind,
            config.e0_high,
        ));
    }
    Ok(nodes)
}

/// Telemetry captured at the end of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: u32,
    /// Alive nodes among the `n_nodes` normal sensors.
    pub alive_normal: usize,
    /// Alive high-energy nodes (gateways or advanced sensors).
    pub alive_high: usize,
    pub heads_count: usize,
    /// Heads that had at least one member.
    pub clusters_count: usize,
    pub energy_remaining_total: f64,
    pub packets_to_sink: u64,
}

/// First, half and last node death rounds over the normal sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lifetime {
    pub fnd: Option<u32>,
    pub hnd: Option<u32>,
    pub lnd: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxRounds,
    AllSensorsDead,
}

/// The config a run used, with the generator that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEcho {
    pub config: SimConfig,
    pub rng_algorithm: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub lifetime: Lifetime,
    pub series: Vec<RoundMetrics>,
    pub config_echo: ConfigEcho,
    pub termination: Termination,
    pub initial_energy_total: f64,
    pub ledger: EnergyLedger,
}

impl SimResult {
    pub fn rounds_executed(&self) -> usize {
        self.series.len()
    }

    pub fn remaining_energy_total(&self) -> f64 {
        self.series
            .last()
            .map_or(self.initial_energy_total, |m| m.energy_remaining_total)
    }

    pub fn total_energy_spent(&self) -> f64 {
        self.ledger.total_spent()
    }
}

/// Applies the FND/HND/LND definitions to a series of alive counts.
pub fn lifetime_metrics(series: &[RoundMetrics], deployed: usize) -> Result<Lifetime> {
    if series.is_empty() {
        return Err(Error::invalid("lifetime metrics need a non-empty series"));
    }
    let mut out = Lifetime::default();
    let mut previous = usize::MAX;
    for m in series {
        let alive = m.alive_normal;
        if alive > previous {
            return Err(Error::contract(format!(
                "alive count rose from {previous} to {alive} at round {}",
                m.round
            )));
        }
        previous = alive;
        if out.fnd.is_none() && alive < deployed {
            out.fnd = Some(m.round);
        }
        if out.hnd.is_none() && 2 * alive <= deployed {
            out.hnd = Some(m.round);
        }
        if out.lnd.is_none() && alive == 0 {
            out.lnd = Some(m.round);
        }
    }
    Ok(out)
}

/// Everything one round produced, for callers that step the engine.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub topology: ClusterTopology,
    pub metrics: RoundMetrics,
    pub events: Vec<EnergyEvent>,
}

/// A run in progress.
pub struct Simulation {
    config: SimConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    election: ElectionState,
    ledger: EnergyLedger,
    round: u32,
    initial_energy_total: f64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let nodes = init_deployment(&config, &mut rng)?;
        let election = ElectionState::new(
            config.protocol,
            config.p_select,
            config.effective_sep_m(),
            config.sep_a,
        )?;
        let initial_energy_total = nodes.iter().map(|n| n.energy).sum();
        Ok(Self {
            ledger: EnergyLedger::new(nodes.len()),
            config,
            rng,
            nodes,
            election,
            round: 0,
            initial_energy_total,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    /// Index of the next round to run.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn initial_energy_total(&self) -> f64 {
        self.initial_energy_total
    }

    pub fn sensing_alive(&self) -> bool {
        self.nodes.iter().any(|n| n.alive && n.kind.is_sensing())
    }

    /// Runs one full round (setup then steady state).
    pub fn step(&mut self) -> Result<RoundOutcome> {
        let mut events = Vec::new();
        let (topology, metrics) = self.advance(&mut events)?;
        Ok(RoundOutcome {
            topology,
            metrics,
            events,
        })
    }

    /// One round, appending its debits to `events`.
    fn advance(
        &mut self,
        events: &mut Vec<EnergyEvent>,
    ) -> Result<(ClusterTopology, RoundMetrics)> {
        let round = self.round;
        let kind = self.config.protocol;

        for node in &mut self.nodes {
            node.role = None;
        }
        charge_setup(&mut self.nodes, &self.config, &mut self.ledger, events)?;

        self.election.begin_round(round, &mut self.nodes)?;
        let heads = elect_cluster_heads(&mut self.nodes, &self.election, &mut self.rng)?;
        let topology = ClusterTopology::form(kind, &self.nodes, heads);
        self.assign_roles(&topology);

        let packets = steady_state_round(
            kind,
            &topology,
            &mut self.nodes,
            &self.config,
            &mut self.ledger,
            events,
        )?;

        let mut alive_normal = 0;
        let mut alive_high = 0;
        let mut energy_remaining_total = 0.0;
        for node in &self.nodes {
            if node.alive {
                match node.kind {
                    NodeKind::Normal => alive_normal += 1,
                    NodeKind::Advanced | NodeKind::Gateway => alive_high += 1,
                }
            }
            energy_remaining_total += node.energy;
        }
        let mut has_member = vec![false; self.nodes.len()];
        for &h in topology.membership.values() {
            has_member[h] = true;
        }
        let clusters_count = has_member.iter().filter(|&&b| b).count();
        let metrics = RoundMetrics {
            round,
            alive_normal,
            alive_high,
            heads_count: topology.heads.len(),
            clusters_count,
            energy_remaining_total,
            packets_to_sink: packets,
        };
        self.round += 1;
        Ok((topology, metrics))
    }

    fn assign_roles(&mut self, topo: &ClusterTopology) {
        for &h in &topo.heads {
            self.nodes[h].role = Some(Role::Head);
        }
        for &m in topo.membership.keys() {
            self.nodes[m].role = Some(Role::Member);
        }
        for &d in &topo.direct_to_sink {
            self.nodes[d].role = Some(Role::DirectToSink);
        }
        if self.config.protocol == ProtocolKind::Gateway {
            for node in self
                .nodes
                .iter_mut()
                .filter(|n| n.alive && n.kind == NodeKind::Gateway)
            {
                node.role = Some(Role::GatewayRelay);
            }
        }
    }

    /// Runs until `max_rounds` or until no sensing node is alive.
    pub fn run_to_end(mut self) -> Result<SimResult> {
        let mut series = Vec::with_capacity(self.config.max_rounds as usize);
        let mut termination = Termination::MaxRounds;
        // Nobody reads per-round events here; reuse one buffer.
        let mut events = Vec::new();
        while self.round < self.config.max_rounds {
            events.clear();
            series.push(self.advance(&mut events)?.1);
            if !self.sensing_alive() {
                termination = Termination::AllSensorsDead;
                break;
            }
        }
        let lifetime = lifetime_metrics(&series, self.config.n_nodes)?;
        Ok(SimResult {
            lifetime,
            series,
            config_echo: ConfigEcho {
                config: self.config,
                rng_algorithm: RNG_ALGORITHM,
            },
            termination,
            initial_energy_total: self.initial_energy_total,
            ledger: self.ledger,
        })
    }
}

/// Executes a whole run. A pure function of `config`.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    Simulation::new(config.clone())?.run_to_end()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(alive: &[usize]) -> Vec<RoundMetrics> {
        alive
            .iter()
            .enumerate()
            .map(|(i, &a)| RoundMetrics {
                round: i as u32,
                alive_normal: a,
                alive_high: 0,
                heads_count: 0,
                clusters_count: 0,
                energy_remaining_total: 0.0,
                packets_to_sink: 0,
            })
            .collect()
    }

    #[test]
    fn lifetime_examples() {
        let l = lifetime_metrics(&metrics(&[100, 100, 99, 99]), 100).unwrap();
        assert_eq!(l.fnd, Some(2));
        assert_eq!(l.hnd, None);
        let l = lifetime_metrics(&metrics(&[100, 100, 100]), 100).unwrap();
        assert_eq!(l, Lifetime::default());
        let l = lifetime_metrics(&metrics(&[100, 50, 0]), 100).unwrap();
        assert_eq!((l.fnd, l.hnd, l.lnd), (Some(1), Some(1), Some(2)));
        assert!(matches!(
            lifetime_metrics(&metrics(&[100, 90, 95]), 100),
            Err(Error::ContractViolation(_))
        ));
        assert!(lifetime_metrics(&[], 100).is_err());
    }

    #[test]
    fn deployment_matches_config() {
        let cfg = SimConfig {
            seed: 3,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let nodes = init_deployment(&cfg, &mut rng).unwrap();
        assert_eq!(nodes.len(), 104);
        assert!(nodes.iter().enumerate().all(|(i, n)| n.id == i));
        assert!(nodes.iter().all(
            |n| (0.0..=100.0).contains(&n.position.x) && (0.0..=100.0).contains(&n.position.y)
        ));
        assert_eq!(
            nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Advanced)
                .count(),
            4
        );
        assert!(nodes[100..].iter().all(|n| n.energy == 1.0));
        assert!(nodes[..100].iter().all(|n| n.energy == 0.5));

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let again = init_deployment(&cfg, &mut rng).unwrap();
        assert_eq!(nodes, again);
    }

    #[test]
    fn deployment_kinds_follow_protocol() {
        for (kind, expected) in [
            (ProtocolKind::Leach, NodeKind::Advanced),
            (ProtocolKind::Sep, NodeKind::Advanced),
            (ProtocolKind::Gateway, NodeKind::Gateway),
        ] {
            let cfg = SimConfig {
                protocol: kind,
                ..SimConfig::default()
            };
            let nodes = init_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert!(nodes[100..].iter().all(|n| n.kind == expected));
        }
        let cfg = SimConfig {
            n_gateways: 0,
            ..SimConfig::default()
        };
        let nodes = init_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(nodes.len(), 100);
    }

    #[test]
    fn grid_placement_uses_cell_centers() {
        assert_eq!(
            grid_positions(4, (100.0, 100.0)),
            vec![
                Position::new(25.0, 25.0),
                Position::new(75.0, 25.0),
                Position::new(25.0, 75.0),
                Position::new(75.0, 75.0),
            ]
        );
        assert_eq!(
            grid_positions(1, (100.0, 50.0)),
            vec![Position::new(50.0, 25.0)]
        );
        let cfg = SimConfig {
            gateway_placement: GatewayPlacement::Grid,
            protocol: ProtocolKind::Gateway,
            ..SimConfig::default()
        };
        let nodes = init_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(nodes[100].position, Position::new(25.0, 25.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SimConfig {
                n_nodes: 0,
                ..SimConfig::default()
            },
            SimConfig {
                area: (0.0, 100.0),
                ..SimConfig::default()
            },
            SimConfig {
                p_select: 1.5,
                ..SimConfig::default()
            },
            SimConfig {
                e0_normal: -1.0,
                ..SimConfig::default()
            },
            SimConfig {
                packet_bits: 0,
                ..SimConfig::default()
            },
            SimConfig {
                frames_per_round: 0,
                ..SimConfig::default()
            },
            SimConfig {
                protocol: ProtocolKind::Sep,
                sep_m: Some(2.0),
                ..SimConfig::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(run(&cfg), Err(Error::InvalidParameters(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn huge_energy_never_dies() {
        let cfg = SimConfig {
            e0_normal: 1e9,
            e0_high: 1e9,
            max_rounds: 50,
            ..SimConfig::default()
        };
        let res = run(&cfg).unwrap();
        assert_eq!(res.lifetime, Lifetime::default());
        assert_eq!(res.series.len(), 50);
        assert_eq!(res.termination, Termination::MaxRounds);
    }

    #[test]
    fn zero_energy_is_dead_at_round_zero() {
        let cfg = SimConfig {
            e0_normal: 0.0,
            e0_high: 0.0,
            ..SimConfig::default()
        };
        let res = run(&cfg).unwrap();
        assert_eq!(res.series.len(), 1);
        assert_eq!(res.lifetime.lnd, Some(0));
        assert_eq!(res.lifetime.fnd, Some(0));
        assert_eq!(res.termination, Termination::AllSensorsDead);
        assert_eq!(res.total_energy_spent(), 0.0);
    }

    #[test]
    fn result_echoes_config_and_generator() {
        let cfg = SimConfig {
            max_rounds: 5,
            seed: 99,
            ..SimConfig::default()
        };
        let res = run(&cfg).unwrap();
        assert_eq!(res.config_echo.config, cfg);
        assert_eq!(res.config_echo.rng_algorithm, RNG_ALGORITHM);
    }

    #[test]
    fn setup_cost_is_charged_to_every_alive_node() {
        let cfg = SimConfig {
            setup_cost_joules: 1e-3,
            max_rounds: 1,
            protocol: ProtocolKind::Gateway,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg).unwrap();
        let out = sim.step().unwrap();
        let setups = out
            .events
            .iter()
            .filter(|e| e.kind == crate::protocols::EventKind::Setup)
            .count();
        assert_eq!(setups, 104);
    }
}
