use std::fmt;

/// A point in the deployment plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Hardware class of a deployed node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Ordinary sensor with the normal initial energy.
    Normal,
    /// High-energy sensor. It senses, is elected and dies like a normal node
    /// (SEP's advanced class; a plain sensor with more energy under LEACH).
    Advanced,
    /// High-energy manager node under the gateway protocol. Never senses and
    /// is never elected cluster head.
    Gateway,
}

impl NodeKind {
    pub fn is_sensing(self) -> bool {
        !matches!(self, NodeKind::Gateway)
    }
}

/// What a node does in the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Member,
    Head,
    GatewayRelay,
    DirectToSink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Position,
    pub kind: NodeKind,
    pub energy: f64,
    pub initial_energy: f64,
    pub alive: bool,
    /// Still eligible for election in the current epoch.
    pub in_g: bool,
    /// `None` for dead nodes and between rounds.
    pub role: Option<Role>,
}

impl Node {
    pub fn new(id: usize, position: Position, kind: NodeKind, initial_energy: f64) -> Self {
        Self {
            id,
            position,
            kind,
            energy: initial_energy,
            initial_energy,
            alive: initial_energy > 0.0,
            in_g: true,
            role: None,
        }
    }

    pub fn distance_to(&self, other: &Node) -> f64 {
        self.position.distance(&other.position)
    }
}
