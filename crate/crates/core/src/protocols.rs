//! Cluster-head election, cluster formation and the steady-state data
//! exchange for LEACH, SEP and the gateway-managed protocol.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::energy::{self, aggregate_energy, receive_energy, transmit_energy, EnergyLedger};
use crate::error::{Error, Result};
use crate::node::{Node, NodeKind, Position};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Leach,
    Sep,
    Gateway,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::Leach,
        ProtocolKind::Sep,
        ProtocolKind::Gateway,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Leach => "LEACH",
            ProtocolKind::Sep => "SEP",
            ProtocolKind::Gateway => "GATEWAY",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LEACH" => Ok(ProtocolKind::Leach),
            "SEP" => Ok(ProtocolKind::Sep),
            "GATEWAY" => Ok(ProtocolKind::Gateway),
            other => Err(Error::invalid(format!(
                "unknown protocol {other:?} (expected LEACH, SEP or GATEWAY)"
            ))),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "election probability must lie in (0, 1), got {p}"
        )))
    }
}

/// Number of rounds after which every node of a class is eligible again.
pub fn epoch_length(p: f64) -> Result<u32> {
    check_probability(p)?;
    Ok((1.0 / p).round() as u32)
}

/// LEACH election threshold `P / (1 − P·(r mod round(1/P)))` for a node still
/// in the unelected set, and 0 for a node that already served this epoch.
///
/// The denominator stays positive for every `P` in (0, 1), and reaches `P`
/// in the last round of an epoch, so the threshold is exactly 1 there.
pub fn leach_threshold(in_g: bool, round: u32, p: f64) -> Result<f64> {
    let epoch = epoch_length(p)?;
    if !in_g {
        return Ok(0.0);
    }
    let phase = f64::from(round % epoch);
    Ok((p / (1.0 - p * phase)).clamp(0.0, 1.0))
}

/// SEP's weighted election probabilities for a population where a fraction
/// `m` of nodes carries `1 + a` times the normal initial energy. The
/// population-weighted mean stays equal to `p`.
pub fn sep_probabilities(p: f64, m: f64, a: f64) -> Result<(f64, f64)> {
    check_probability(p)?;
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::invalid(format!("sep_m must lie in [0, 1], got {m}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!(
            "sep_a must be non-negative, got {a}"
        )));
    }
    let denom = 1.0 + a * m;
    let p_normal = p / denom;
    let p_advanced = p * (1.0 + a) / denom;
    if p_advanced >= 1.0 {
        return Err(Error::invalid(format!(
            "advanced-node probability {p_advanced} is not below 1 (p_select={p}, sep_m={m}, sep_a={a})"
        )));
    }
    Ok((p_normal, p_advanced))
}

/// Round counter and per-class election probabilities. Eligibility itself
/// (the unelected set) lives on each [`Node`] as `in_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectionState {
    pub kind: ProtocolKind,
    pub round: u32,
    pub p_normal: f64,
    pub p_advanced: f64,
}

impl ElectionState {
    pub fn new(kind: ProtocolKind, p_select: f64, sep_m: f64, sep_a: f64) -> Result<Self> {
        check_probability(p_select)?;
        let (p_normal, p_advanced) = match kind {
            ProtocolKind::Sep => sep_probabilities(p_select, sep_m, sep_a)?,
            ProtocolKind::Leach | ProtocolKind::Gateway => (p_select, p_select),
        };
        Ok(Self {
            kind,
            round: 0,
            p_normal,
            p_advanced,
        })
    }

    /// Election probability of a node class; `None` for nodes that never run.
    pub fn probability(&self, kind: NodeKind) -> Option<f64> {
        match kind {
            NodeKind::Normal => Some(self.p_normal),
            NodeKind::Advanced => Some(self.p_advanced),
            NodeKind::Gateway => None,
        }
    }

    /// Moves to `round` and returns every alive node whose class starts a new
    /// epoch to the unelected set.
    pub fn begin_round(&mut self, round: u32, nodes: &mut [Node]) -> Result<()> {
        self.round = round;
        let normal_epoch = epoch_length(self.p_normal)?;
        let advanced_epoch = epoch_length(self.p_advanced)?;
        for node in nodes.iter_mut().filter(|n| n.alive) {
            let epoch = match node.kind {
                NodeKind::Normal => normal_epoch,
                NodeKind::Advanced => advanced_epoch,
                NodeKind::Gateway => continue,
            };
            if round.is_multiple_of(epoch) {
                node.in_g = true;
            }
        }
        Ok(())
    }
}

/// Draws one uniform number per alive, eligible candidate in ascending id
/// order and elects it when the draw falls below its class threshold.
/// Elected nodes leave the unelected set. Returns head ids in ascending order.
pub fn elect_cluster_heads<R: Rng + ?Sized>(
    nodes: &mut [Node],
    state: &ElectionState,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut heads = Vec::new();
    for node in nodes.iter_mut() {
        if !node.alive || !node.in_g {
            continue;
        }
        let Some(p) = state.probability(node.kind) else {
            continue;
        };
        let threshold = leach_threshold(true, state.round, p)?;
        let draw: f64 = rng.random();
        if draw < threshold {
            node.in_g = false;
            heads.push(node.id);
        }
    }
    Ok(heads)
}

/// Member-to-head assignment for one round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Membership {
    pub membership: BTreeMap<usize, usize>,
    pub direct_to_sink: Vec<usize>,
}

/// `candidates` must be in ascending id order; strict comparison then keeps
/// the lowest id on ties.
fn nearest(from: Position, candidates: &[(usize, Position)]) -> Option<usize> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for &(id, pos) in candidates {
        let d = from.distance_sq(&pos);
        if d < best_d {
            best_d = d;
            best = Some(id);
        }
    }
    best
}

/// Every alive sensing node that is not a head joins the closest head, ties
/// going to the lowest head id. With no heads, all of them go direct to sink.
pub fn assign_members(nodes: &[Node], heads: &[usize]) -> Membership {
    let mut head_positions: Vec<(usize, Position)> =
        heads.iter().map(|&h| (h, nodes[h].position)).collect();
    head_positions.sort_unstable_by_key(|&(h, _)| h);
    let mut is_head = vec![false; nodes.len()];
    for &h in heads {
        is_head[h] = true;
    }
    let mut membership = Vec::new();
    let mut direct_to_sink = Vec::new();
    for node in nodes {
        if !node.alive || !node.kind.is_sensing() || is_head[node.id] {
            continue;
        }
        match nearest(node.position, &head_positions) {
            Some(h) => membership.push((node.id, h)),
            None => direct_to_sink.push(node.id),
        }
    }
    Membership {
        membership: membership.into_iter().collect(),
        direct_to_sink,
    }
}

/// Each head is managed by the closest alive gateway, ties going to the
/// lowest gateway id. Empty when no gateway is alive.
pub fn assign_gateways(nodes: &[Node], heads: &[usize]) -> BTreeMap<usize, usize> {
    let gateways: Vec<(usize, Position)> = nodes
        .iter()
        .filter(|n| n.alive && n.kind == NodeKind::Gateway)
        .map(|n| (n.id, n.position))
        .collect();
    heads
        .iter()
        .filter_map(|&h| nearest(nodes[h].position, &gateways).map(|g| (h, g)))
        .collect()
}

/// One round's cluster structure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterTopology {
    /// Cluster heads, ascending.
    pub heads: Vec<usize>,
    /// Member id to head id.
    pub membership: BTreeMap<usize, usize>,
    /// Sensing nodes that report straight to the sink (only when no head exists).
    pub direct_to_sink: Vec<usize>,
    /// Head id to managing gateway id. Empty unless the gateway protocol has
    /// an alive gateway.
    pub gateway_of: BTreeMap<usize, usize>,
}

impl ClusterTopology {
    /// Builds the full topology: members for every protocol, gateways only
    /// for [`ProtocolKind::Gateway`].
    pub fn form(kind: ProtocolKind, nodes: &[Node], heads: Vec<usize>) -> Self {
        let Membership {
            membership,
            direct_to_sink,
        } = assign_members(nodes, &heads);
        let gateway_of = match kind {
            ProtocolKind::Gateway => assign_gateways(nodes, &heads),
            ProtocolKind::Leach | ProtocolKind::Sep => BTreeMap::new(),
        };
        Self {
            heads,
            membership,
            direct_to_sink,
            gateway_of,
        }
    }

    /// Members of each head, both in ascending id order.
    pub fn clusters(&self) -> Vec<(usize, Vec<usize>)> {
        let mut clusters: Vec<(usize, Vec<usize>)> =
            self.heads.iter().map(|&h| (h, Vec::new())).collect();
        clusters.sort_unstable_by_key(|&(h, _)| h);
        for (&member, &head) in &self.membership {
            if let Ok(i) = clusters.binary_search_by_key(&head, |&(h, _)| h) {
                clusters[i].1.push(member);
            }
        }
        clusters
    }

    /// Gateways managing at least one head this round, ascending.
    pub fn active_gateways(&self) -> Vec<usize> {
        let mut gws: Vec<usize> = self.gateway_of.values().copied().collect();
        gws.sort_unstable();
        gws.dedup();
        gws
    }

    /// Checks role exclusivity and that every referenced node is alive and
    /// of the right kind.
    pub fn validate(&self, kind: ProtocolKind, nodes: &[Node]) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Seen {
            None,
            Head,
            Member,
            Direct,
        }
        let mut seen = vec![Seen::None; nodes.len()];
        let lookup = |id: usize, what: &str| -> Result<&Node> {
            let node = nodes
                .get(id)
                .ok_or_else(|| Error::contract(format!("{what} {id} does not exist")))?;
            if !node.alive {
                return Err(Error::contract(format!("{what} {id} is dead")));
            }
            Ok(node)
        };
        let claim = |seen: &mut Vec<Seen>, id: usize, role: Seen| -> Result<()> {
            if seen[id] != Seen::None {
                return Err(Error::contract(format!(
                    "node {id} holds more than one role"
                )));
            }
            seen[id] = role;
            Ok(())
        };
        for &h in &self.heads {
            if !lookup(h, "head")?.kind.is_sensing() {
                return Err(Error::contract(format!("gateway {h} elected as head")));
            }
            claim(&mut seen, h, Seen::Head)?;
        }
        for (&m, &h) in &self.membership {
            if !lookup(m, "member")?.kind.is_sensing() {
                return Err(Error::contract(format!("gateway {m} listed as member")));
            }
            lookup(h, "head")?;
            claim(&mut seen, m, Seen::Member)?;
        }
        for (&m, &h) in &self.membership {
            if seen[h] != Seen::Head {
                return Err(Error::contract(format!("member {m} joined non-head {h}")));
            }
        }
        if !self.heads.is_empty() && !self.direct_to_sink.is_empty() {
            return Err(Error::contract("direct-to-sink nodes while heads exist"));
        }
        for &d in &self.direct_to_sink {
            if !lookup(d, "direct-to-sink node")?.kind.is_sensing() {
                return Err(Error::contract(format!(
                    "gateway {d} listed as direct-to-sink"
                )));
            }
            claim(&mut seen, d, Seen::Direct)?;
        }
        if kind != ProtocolKind::Gateway && !self.gateway_of.is_empty() {
            return Err(Error::contract(format!(
                "{kind} topology carries gateway assignments"
            )));
        }
        for (&h, &g) in &self.gateway_of {
            if seen[h] != Seen::Head {
                return Err(Error::contract(format!(
                    "gateway {g} assigned to non-head {h}"
                )));
            }
            if lookup(g, "gateway")?.kind != NodeKind::Gateway {
                return Err(Error::contract(format!("node {g} is not a gateway")));
            }
        }
        Ok(())
    }
}

/// What an energy debit paid for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Per-round control overhead.
    Setup,
    /// Member to head.
    MemberTx,
    /// Head receiving a member packet.
    HeadRx,
    /// Head forwarding one raw packet to its gateway.
    HeadTx,
    /// Gateway receiving a forwarded packet.
    GatewayRx,
    /// Data fusion at the node that talks to the sink.
    Aggregate,
    /// One fused packet to the sink.
    SinkTx,
}

/// A single debit together with the inputs that priced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEvent {
    pub node: usize,
    pub kind: EventKind,
    pub bits: u64,
    /// Link length for transmissions.
    pub distance: Option<f64>,
    /// Fused signal count for aggregation.
    pub signals: u64,
    /// Price before clamping at the node's remaining energy.
    pub nominal: f64,
    pub charged: f64,
}

struct Frame<'a> {
    nodes: &'a mut [Node],
    ledger: &'a mut EnergyLedger,
    events: &'a mut Vec<EnergyEvent>,
    config: &'a SimConfig,
}

impl Frame<'_> {
    /// Charges `node` and reports whether the paid-for action completed.
    /// Dead nodes do nothing.
    fn charge(
        &mut self,
        node: usize,
        kind: EventKind,
        distance: Option<f64>,
        signals: u64,
    ) -> Result<bool> {
        if !self.nodes[node].alive {
            return Ok(false);
        }
        let bits = self.config.packet_bits;
        let radio = &self.config.radio;
        let nominal = match kind {
            EventKind::MemberTx | EventKind::HeadTx | EventKind::SinkTx => {
                transmit_energy(bits, distance.unwrap_or(0.0), radio)?
            }
            EventKind::HeadRx | EventKind::GatewayRx => receive_energy(bits, radio),
            EventKind::Aggregate => aggregate_energy(bits, signals, radio),
            EventKind::Setup => self.config.setup_cost_joules,
        };
        let debit = energy::debit(&mut self.nodes[node], nominal, self.ledger)?;
        self.events.push(EnergyEvent {
            node,
            kind,
            bits,
            distance,
            signals,
            nominal,
            charged: debit.charged,
        });
        Ok(debit.completed)
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.nodes[a].distance_to(&self.nodes[b])
    }

    fn sink_distance(&self, a: usize) -> f64 {
        self.nodes[a].position.distance(&self.config.sink)
    }

    /// Fuse `signals` packets at `node` and send the result to the sink.
    fn fuse_and_uplink(&mut self, node: usize, signals: u64) -> Result<u64> {
        if !self.charge(node, EventKind::Aggregate, None, signals)? {
            return Ok(0);
        }
        let d = self.sink_distance(node);
        Ok(u64::from(self.charge(
            node,
            EventKind::SinkTx,
            Some(d),
            0,
        )?))
    }

    fn run(
        &mut self,
        kind: ProtocolKind,
        topo: &ClusterTopology,
        clusters: &[(usize, Vec<usize>)],
    ) -> Result<u64> {
        let mut delivered = 0;
        for &node in &topo.direct_to_sink {
            delivered += self.fuse_and_uplink(node, 1)?;
        }
        for (head, members) in clusters {
            let head = *head;
            let mut received = 0u64;
            for &member in members {
                if !self.nodes[head].alive {
                    break;
                }
                let d = self.distance(member, head);
                if self.charge(member, EventKind::MemberTx, Some(d), 0)?
                    && self.charge(head, EventKind::HeadRx, None, 0)?
                {
                    received += 1;
                }
            }
            if !self.nodes[head].alive {
                continue;
            }
            let signals = received + 1;
            let gateway = match kind {
                ProtocolKind::Gateway => topo
                    .gateway_of
                    .get(&head)
                    .copied()
                    .filter(|&g| self.nodes[g].alive),
                ProtocolKind::Leach | ProtocolKind::Sep => None,
            };
            match gateway {
                Some(gw) => {
                    // Raw forwarding: no fusion at the head.
                    let d = self.distance(head, gw);
                    let mut forwarded = 0u64;
                    for _ in 0..signals {
                        if !self.charge(head, EventKind::HeadTx, Some(d), 0)? {
                            break;
                        }
                        if self.charge(gw, EventKind::GatewayRx, None, 0)? {
                            forwarded += 1;
                        }
                        if !self.nodes[head].alive || !self.nodes[gw].alive {
                            break;
                        }
                    }
                    if forwarded > 0 {
                        delivered += self.fuse_and_uplink(gw, forwarded)?;
                    }
                }
                None => delivered += self.fuse_and_uplink(head, signals)?,
            }
        }
        Ok(delivered)
    }
}

/// Runs `config.frames_per_round` TDMA frames over a formed topology and
/// returns the number of fused packets that reached the sink.
///
/// Per frame, in order: direct-to-sink nodes (ascending id) fuse their own
/// sample and uplink; then each cluster (ascending head id) has its members
/// send one packet each to the head. Under LEACH/SEP, or under the gateway
/// protocol when the head has no alive gateway, the head fuses the
/// `received + 1` signals and sends one packet to the sink. Otherwise the
/// head forwards `received + 1` raw packets to its gateway, which fuses them
/// and sends one packet to the sink. A node that cannot pay for an action
/// dies and the action does not happen.
///
/// Every debit is appended to `events`.
pub fn steady_state_round(
    kind: ProtocolKind,
    topo: &ClusterTopology,
    nodes: &mut [Node],
    config: &SimConfig,
    ledger: &mut EnergyLedger,
    events: &mut Vec<EnergyEvent>,
) -> Result<u64> {
    topo.validate(kind, nodes)?;
    let clusters = topo.clusters();
    let mut frame = Frame {
        nodes,
        ledger,
        events,
        config,
    };
    let mut delivered = 0;
    for _ in 0..config.frames_per_round {
        delivered += frame.run(kind, topo, &clusters)?;
    }
    Ok(delivered)
}

/// Debits the per-round control cost from every alive node. No-op at zero cost.
pub fn charge_setup(
    nodes: &mut [Node],
    config: &SimConfig,
    ledger: &mut EnergyLedger,
    events: &mut Vec<EnergyEvent>,
) -> Result<()> {
    if config.setup_cost_joules <= 0.0 {
        return Ok(());
    }
    let mut frame = Frame {
        nodes,
        ledger,
        events,
        config,
    };
    for id in 0..frame.nodes.len() {
        frame.charge(id, EventKind::Setup, None, 0)?;
    }
    Ok(())
}
