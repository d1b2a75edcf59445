//! First-order radio energy model and per-node energy bookkeeping.
//!
//! Transmitting `k` bits over `d` meters costs `e_elec·k + eps_fs·k·d²` when
//! `d ≤ d0` (free space) and `e_elec·k + eps_mp·k·d⁴` otherwise (multipath),
//! with `d0 = sqrt(eps_fs / eps_mp)`. Receiving costs `e_elec·k`, and fusing
//! `n` signals of `k` bits costs `e_da·k·n`. All values are joules.

use crate::error::{Error, Result};
use crate::node::Node;

/// Radio constants in joules. The crossover distance is always derived from
/// the two amplifier coefficients, never set on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    e_elec: f64,
    eps_fs: f64,
    eps_mp: f64,
    e_da: f64,
    d0: f64,
}

impl RadioParams {
    /// 50 nJ/bit electronics.
    pub const DEFAULT_E_ELEC: f64 = 50e-9;
    /// 10 pJ/bit/m² free-space amplifier.
    pub const DEFAULT_EPS_FS: f64 = 10e-12;
    /// 0.0013 pJ/bit/m⁴ multipath amplifier.
    pub const DEFAULT_EPS_MP: f64 = 0.0013e-12;
    /// 5 nJ/bit/signal aggregation.
    pub const DEFAULT_E_DA: f64 = 5e-9;

    pub fn new(e_elec: f64, eps_fs: f64, eps_mp: f64, e_da: f64) -> Result<Self> {
        for (name, value) in [("e_elec", e_elec), ("e_da", e_da)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        let d0 = crossover_distance(eps_fs, eps_mp)?;
        Ok(Self {
            e_elec,
            eps_fs,
            eps_mp,
            e_da,
            d0,
        })
    }

    pub fn e_elec(&self) -> f64 {
        self.e_elec
    }

    pub fn eps_fs(&self) -> f64 {
        self.eps_fs
    }

    pub fn eps_mp(&self) -> f64 {
        self.eps_mp
    }

    pub fn e_da(&self) -> f64 {
        self.e_da
    }

    /// Distance in meters at which the amplifier switches from d² to d⁴.
    pub fn crossover_distance(&self) -> f64 {
        self.d0
    }
}

impl Default for RadioParams {
    fn default() -> Self {
        Self::new(
            Self::DEFAULT_E_ELEC,
            Self::DEFAULT_EPS_FS,
            Self::DEFAULT_EPS_MP,
            Self::DEFAULT_E_DA,
        )
        .expect("default radio constants are positive")
    }
}

/// `sqrt(eps_fs / eps_mp)`, the distance where both amplifier regimes cost the same.
pub fn crossover_distance(eps_fs: f64, eps_mp: f64) -> Result<f64> {
    if !(eps_fs > 0.0 && eps_fs.is_finite()) || !(eps_mp > 0.0 && eps_mp.is_finite()) {
        return Err(Error::invalid(format!(
            "amplifier coefficients must be positive, got eps_fs={eps_fs}, eps_mp={eps_mp}"
        )));
    }
    Ok((eps_fs / eps_mp).sqrt())
}

/// Cost of sending `bits` over `distance` meters. The free-space branch is
/// used up to and including the crossover distance.
pub fn transmit_energy(bits: u64, distance: f64, params: &RadioParams) -> Result<f64> {
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::invalid(format!(
            "distance must be finite and non-negative, got {distance}"
        )));
    }
    let k = bits as f64;
    let electronics = params.e_elec * k;
    let amplifier = if distance <= params.d0 {
        params.eps_fs * k * distance * distance
    } else {
        params.eps_mp * k * distance.powi(4)
    };
    Ok(electronics + amplifier)
}

pub fn receive_energy(bits: u64, params: &RadioParams) -> f64 {
    params.e_elec * bits as f64
}

/// Cost of fusing `n_signals` incoming signals of `bits_per_signal` bits each.
pub fn aggregate_energy(bits_per_signal: u64, n_signals: u64, params: &RadioParams) -> f64 {
    params.e_da * bits_per_signal as f64 * n_signals as f64
}

/// Cumulative joules removed from each node during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    per_node_spent: Vec<f64>,
    total_spent: f64,
    // Neumaier compensation: millions of tiny debits land in a total of
    // hundreds of joules, and naive summation drifts by ~1e-9 J.
    carry: f64,
}

impl EnergyLedger {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            per_node_spent: vec![0.0; n_nodes],
            total_spent: 0.0,
            carry: 0.0,
        }
    }

    pub fn spent_by(&self, node: usize) -> f64 {
        self.per_node_spent.get(node).copied().unwrap_or(0.0)
    }

    pub fn per_node_spent(&self) -> &[f64] {
        &self.per_node_spent
    }

    pub fn total_spent(&self) -> f64 {
        self.total_spent + self.carry
    }

    fn record(&mut self, node: usize, amount: f64) {
        if node >= self.per_node_spent.len() {
            self.per_node_spent.resize(node + 1, 0.0);
        }
        self.per_node_spent[node] += amount;
        let t = self.total_spent + amount;
        self.carry += if self.total_spent.abs() >= amount.abs() {
            (self.total_spent - t) + amount
        } else {
            (amount - t) + self.total_spent
        };
        self.total_spent = t;
    }
}

/// Outcome of one [`debit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Debit {
    /// Joules actually removed (capped at what the node had left).
    pub charged: f64,
    /// The node could pay the full amount, so the action it paid for happened.
    pub completed: bool,
}

/// Removes `amount` joules from `node`, clamping at zero. A node whose energy
/// reaches zero is dead from this point on.
pub fn debit(node: &mut Node, amount: f64, ledger: &mut EnergyLedger) -> Result<Debit> {
    if !node.alive {
        return Err(Error::contract(format!("debit on dead node {}", node.id)));
    }
    if !(amount >= 0.0 && amount.is_finite()) {
        return Err(Error::invalid(format!(
            "debit amount must be finite and non-negative, got {amount}"
        )));
    }
    let completed = node.energy >= amount;
    let charged = amount.min(node.energy);
    node.energy -= charged;
    if node.energy <= 0.0 {
        node.energy = 0.0;
        node.alive = false;
        node.role = None;
    }
    ledger.record(node.id, charged);
    Ok(Debit { charged, completed })
}
