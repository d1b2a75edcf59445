//! Flat `key = value` configuration files.
//!
//! Keys mirror [`SimConfig`] field names. `#` starts a comment. Experiment
//! files may also set the grid keys `node_counts`, `protocols`, `seeds` and
//! `pin_gateways`. Unknown or repeated keys are errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use wsn_core::{GatewayPlacement, Position, ProtocolKind, RadioParams, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("{}`{key}`: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Value {
        line: Option<usize>,
        key: String,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Every key a config file may contain, with its default, in the order the
/// help text lists them.
pub const KEYS: &[(&str, &str)] = &[
    ("area", "100,100"),
    ("n_nodes", "100"),
    ("n_gateways", "4"),
    ("e0_normal", "0.5"),
    ("e0_high", "1.0"),
    ("p_select", "0.1"),
    ("packet_bits", "4000"),
    ("frames_per_round", "1"),
    ("max_rounds", "1000"),
    ("sink", "50,100"),
    ("protocol", "LEACH"),
    ("sep_m", "auto"),
    ("sep_a", "1.0"),
    ("seed", "0"),
    ("gateway_placement", "RANDOM"),
    ("setup_cost_joules", "0"),
    ("e_elec", "50e-9"),
    ("eps_fs", "10e-12"),
    ("eps_mp", "0.0013e-12"),
    ("e_da", "5e-9"),
    ("node_counts", "50,100,200,300,400,500"),
    ("protocols", "LEACH,SEP,GATEWAY"),
    ("seeds", "0..=29"),
    ("pin_gateways", "false"),
];

/// Grid keys, only meaningful for experiments.
pub const GRID_KEYS: &[&str] = &["node_counts", "protocols", "seeds", "pin_gateways"];

/// A parsed config file: the base run plus any grid settings it named.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub node_counts: Option<Vec<usize>>,
    pub protocols: Option<Vec<ProtocolKind>>,
    pub seeds: Option<Vec<u64>>,
    pub pin_gateways: Option<bool>,
}

impl ConfigFile {
    pub fn has_grid_keys(&self) -> bool {
        self.node_counts.is_some()
            || self.protocols.is_some()
            || self.seeds.is_some()
            || self.pin_gateways.is_some()
    }
}

struct Radio {
    e_elec: f64,
    eps_fs: f64,
    eps_mp: f64,
    e_da: f64,
}

fn value_err(line: Option<usize>, key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_scalar<T: FromStr>(line: Option<usize>, key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| value_err(line, key, format!("cannot parse {raw:?}: {e}")))
}

fn parse_list<T: FromStr>(line: Option<usize>, key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(line, key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(value_err(line, key, "list is empty"));
    }
    Ok(items)
}

fn parse_pair(line: Option<usize>, key: &str, raw: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(line, key, raw)?.as_slice() {
        [a, b] if a.is_finite() && b.is_finite() => Ok((*a, *b)),
        _ => Err(value_err(
            line,
            key,
            format!("expected two numbers `a,b`, got {raw:?}"),
        )),
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(
    line: Option<usize>,
    key: &str,
    v: T,
) -> Result<T> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(value_err(line, key, format!("must be positive, got {v}")))
    }
}

fn non_negative(line: Option<usize>, key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(value_err(
            line,
            key,
            format!("must be non-negative, got {v}"),
        ))
    }
}

/// Parses a seed list: `a..b` (exclusive), `a..=b` (inclusive) or `a,b,c`.
pub fn parse_seeds(raw: &str) -> std::result::Result<Vec<u64>, String> {
    let raw = raw.trim();
    let range = |lo: &str, hi: &str, inclusive: bool| -> std::result::Result<Vec<u64>, String> {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad seed {lo:?}: {e}"))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad seed {hi:?}: {e}"))?;
        let seeds: Vec<u64> = if inclusive {
            (lo..=hi).collect()
        } else {
            (lo..hi).collect()
        };
        if seeds.is_empty() {
            Err(format!("seed range {raw:?} is empty"))
        } else {
            Ok(seeds)
        }
    };
    if let Some((lo, hi)) = raw.split_once("..=") {
        return range(lo, hi, true);
    }
    if let Some((lo, hi)) = raw.split_once("..") {
        return range(lo, hi, false);
    }
    let seeds: Vec<u64> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| format!("bad seed {s:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let unique: BTreeSet<u64> = seeds.iter().copied().collect();
    if seeds.is_empty() {
        Err("seed list is empty".into())
    } else if unique.len() != seeds.len() {
        Err(format!("seed list {raw:?} repeats a seed"))
    } else {
        Ok(seeds)
    }
}

/// Sets one key on `file`. `line` is `None` for command-line overrides.
pub fn apply_key(file: &mut ConfigFile, key: &str, raw: &str, line: Option<usize>) -> Result<()> {
    let mut radio = Radio {
        e_elec: file.sim.radio.e_elec(),
        eps_fs: file.sim.radio.eps_fs(),
        eps_mp: file.sim.radio.eps_mp(),
        e_da: file.sim.radio.e_da(),
    };
    let sim = &mut file.sim;
    match key {
        "area" => {
            let (w, h) = parse_pair(line, key, raw)?;
            positive(line, key, w)?;
            positive(line, key, h)?;
            sim.area = (w, h);
        }
        "n_nodes" => sim.n_nodes = positive(line, key, parse_scalar(line, key, raw)?)?,
        "n_gateways" => sim.n_gateways = parse_scalar(line, key, raw)?,
        "e0_normal" => sim.e0_normal = non_negative(line, key, parse_scalar(line, key, raw)?)?,
        "e0_high" => sim.e0_high = non_negative(line, key, parse_scalar(line, key, raw)?)?,
        "p_select" => {
            let p: f64 = parse_scalar(line, key, raw)?;
            if !(p > 0.0 && p < 1.0) {
                return Err(value_err(line, key, format!("must lie in (0, 1), got {p}")));
            }
            sim.p_select = p;
        }
        "packet_bits" => sim.packet_bits = positive(line, key, parse_scalar(line, key, raw)?)?,
        "frames_per_round" => {
            sim.frames_per_round = positive(line, key, parse_scalar(line, key, raw)?)?
        }
        "max_rounds" => sim.max_rounds = positive(line, key, parse_scalar(line, key, raw)?)?,
        "sink" => {
            let (x, y) = parse_pair(line, key, raw)?;
            sim.sink = Position::new(x, y);
        }
        "protocol" => sim.protocol = parse_scalar(line, key, raw)?,
        "sep_m" => {
            sim.sep_m = if raw.trim().eq_ignore_ascii_case("auto") {
                None
            } else {
                let m: f64 = parse_scalar(line, key, raw)?;
                if !(0.0..=1.0).contains(&m) {
                    return Err(value_err(line, key, format!("must lie in [0, 1], got {m}")));
                }
                Some(m)
            }
        }
        "sep_a" => sim.sep_a = non_negative(line, key, parse_scalar(line, key, raw)?)?,
        "seed" => sim.seed = parse_scalar(line, key, raw)?,
        "gateway_placement" => {
            sim.gateway_placement = parse_scalar::<GatewayPlacement>(line, key, raw)?
        }
        "setup_cost_joules" => {
            sim.setup_cost_joules = non_negative(line, key, parse_scalar(line, key, raw)?)?
        }
        "e_elec" => radio.e_elec = positive(line, key, parse_scalar(line, key, raw)?)?,
        "eps_fs" => radio.eps_fs = positive(line, key, parse_scalar(line, key, raw)?)?,
        "eps_mp" => radio.eps_mp = positive(line, key, parse_scalar(line, key, raw)?)?,
        "e_da" => radio.e_da = positive(line, key, parse_scalar(line, key, raw)?)?,
        "node_counts" => {
            let counts: Vec<usize> = parse_list(line, key, raw)?;
            for &n in &counts {
                positive(line, key, n)?;
            }
            file.node_counts = Some(counts);
        }
        "protocols" => file.protocols = Some(parse_list(line, key, raw)?),
        "seeds" => file.seeds = Some(parse_seeds(raw).map_err(|m| value_err(line, key, m))?),
        "pin_gateways" => file.pin_gateways = Some(parse_scalar(line, key, raw)?),
        _ => {
            return Err(ConfigError::UnknownKey {
                line: line.unwrap_or(0),
                key: key.to_string(),
            })
        }
    }
    file.sim.radio = RadioParams::new(radio.e_elec, radio.eps_fs, radio.eps_mp, radio.e_da)
        .map_err(|e| value_err(line, key, e.to_string()))?;
    Ok(())
}

/// Parses config text on top of the default [`SimConfig`].
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let mut file = ConfigFile::default();
    let mut seen = BTreeSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw_line.to_string(),
            });
        };
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        apply_key(&mut file, key, value, Some(line))?;
    }
    Ok(file)
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Final cross-field validation once file and flags are merged.
pub fn validate(sim: &SimConfig) -> Result<()> {
    sim.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Help text listing every key and its default.
pub fn keys_help() -> String {
    let mut out =
        String::from("Config file keys (flat `key = value`, `#` comments) and defaults:\n");
    for (key, default) in KEYS {
        out.push_str(&format!("  {key} = {default}\n"));
    }
    out.push_str(
        "\nGrid keys (node_counts, protocols, seeds, pin_gateways) apply to `experiment` only.\n\
         Command-line flags override values from --config.",
    );
    out
}
