//! Straight-line energy calculator for tiny gateway-protocol runs.
//!
//! Deliberately shares no code with the engine: deployment, election,
//! clustering and every energy term are spelled out here from the radio
//! table, assuming energies large enough that nobody dies.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E_ELEC: f64 = 50e-9;
const EPS_FS: f64 = 10e-12;
const EPS_MP: f64 = 0.0013e-12;
const E_DA: f64 = 5e-9;

pub struct Setup {
    pub seed: u64,
    pub n_normal: usize,
    pub rounds: u32,
    pub p: f64,
    pub bits: f64,
    pub side: f64,
    pub sink: (f64, f64),
    pub e0_normal: f64,
    pub e0_gateway: f64,
}

pub struct Outcome {
    /// Joules spent per node; the gateway is the last entry.
    pub spent: Vec<f64>,
    /// Clusters whose head forwarded to the gateway, over all rounds.
    pub managed_clusters: usize,
    /// Rounds where nobody was elected.
    pub headless_rounds: usize,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn tx(bits: f64, d: f64) -> f64 {
    let d0 = (EPS_FS / EPS_MP).sqrt();
    if d <= d0 {
        E_ELEC * bits + EPS_FS * bits * d * d
    } else {
        E_ELEC * bits + EPS_MP * bits * d.powi(4)
    }
}

fn rx(bits: f64) -> f64 {
    E_ELEC * bits
}

fn agg(bits: f64, signals: usize) -> f64 {
    E_DA * bits * signals as f64
}

/// One gateway, `n_normal` sensors, gateway protocol.
pub fn gateway_run(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut pos = Vec::new();
    for _ in 0..=s.n_normal {
        let x = rng.random::<f64>() * s.side;
        let y = rng.random::<f64>() * s.side;
        pos.push((x, y));
    }
    let gw = s.n_normal;
    let epoch = (1.0 / s.p).round() as u32;

    let mut spent = vec![0.0; s.n_normal + 1];
    let mut eligible = vec![true; s.n_normal];
    let mut managed_clusters = 0;
    let mut headless_rounds = 0;

    for r in 0..s.rounds {
        if r % epoch == 0 {
            eligible.iter_mut().for_each(|e| *e = true);
        }
        let threshold = s.p / (1.0 - s.p * f64::from(r % epoch));
        let mut heads = Vec::new();
        for i in 0..s.n_normal {
            if eligible[i] {
                let u: f64 = rng.random();
                if u < threshold {
                    heads.push(i);
                    eligible[i] = false;
                }
            }
        }

        if heads.is_empty() {
            headless_rounds += 1;
            for i in 0..s.n_normal {
                spent[i] += agg(s.bits, 1) + tx(s.bits, dist(pos[i], s.sink));
            }
            continue;
        }

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); heads.len()];
        for i in 0..s.n_normal {
            if heads.contains(&i) {
                continue;
            }
            let mut best = 0;
            for k in 1..heads.len() {
                if dist(pos[i], pos[heads[k]]) < dist(pos[i], pos[heads[best]]) {
                    best = k;
                }
            }
            members[best].push(i);
        }

        for (k, &h) in heads.iter().enumerate() {
            for &m in &members[k] {
                spent[m] += tx(s.bits, dist(pos[m], pos[h]));
                spent[h] += rx(s.bits);
            }
            let forwarded = members[k].len() + 1;
            spent[h] += forwarded as f64 * tx(s.bits, dist(pos[h], pos[gw]));
            spent[gw] += forwarded as f64 * rx(s.bits)
                + agg(s.bits, forwarded)
                + tx(s.bits, dist(pos[gw], s.sink));
            managed_clusters += 1;
        }
    }

    for (i, &e) in spent.iter().enumerate() {
        let budget = if i == gw { s.e0_gateway } else { s.e0_normal };
        assert!(
            e < budget,
            "oracle assumes no deaths; node {i} spent {e} of {budget}"
        );
    }
    Outcome {
        spent,
        managed_clusters,
        headless_rounds,
    }
}
