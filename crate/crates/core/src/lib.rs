//! Round-based simulator for cluster-based wireless sensor networks.
//!
//! Three clustering protocols share one engine:
//!
//! * [`ProtocolKind::Leach`]: rotating cluster heads elected with the LEACH
//!   threshold; heads aggregate their members' data and send one packet to
//!   the sink.
//! * [`ProtocolKind::Sep`]: LEACH with two energy classes, where the
//!   high-energy ("advanced") class is elected proportionally more often.
//! * [`ProtocolKind::Gateway`]: LEACH-style heads among normal sensors, but a
//!   small set of high-energy gateways manages the heads. Heads forward raw
//!   member data to their gateway, which aggregates and talks to the sink.
//!
//! Energy is accounted with the first-order radio model in [`energy`]. A run
//! is a pure function of its [`SimConfig`] (seed included).

pub mod energy;
mod error;
pub mod node;
pub mod protocols;
pub mod sim;

pub use energy::{EnergyLedger, RadioParams};
pub use error::{Error, Result};
pub use node::{Node, NodeKind, Position, Role};
pub use protocols::{ClusterTopology, ElectionState, ProtocolKind};
pub use sim::{
    lifetime_metrics, run, GatewayPlacement, Lifetime, RoundMetrics, SimConfig, SimResult,
    Simulation, Termination, RNG_ALGORITHM,
};
