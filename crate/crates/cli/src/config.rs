//! Flat `key = value` configuration with per-command defaults.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use hokm_core::experiments::{Draw, RunSetup, Thresholds};
use hokm_core::{ControlMode, Couplings, Hypergraph, IntegrationPlan, SecondTriadicSign};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Pin,
    Switch,
    Basin,
    Cost,
    Validate,
    Gen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Pin => "pin",
            Command::Switch => "switch",
            Command::Basin => "basin",
            Command::Cost => "cost",
            Command::Validate => "validate",
            Command::Gen => "gen",
        }
    }
}

const COMMON: &[(&str, &str)] = &[
    ("topology", "all_to_all"),
    ("n", "50"),
    ("k1_deg", "10"),
    ("k2_deg", "5"),
    ("path", ""),
    ("k1", "1"),
    ("k2", "1"),
    ("omega", "uniform"),
    ("omega_lo", "0"),
    ("omega_hi", "1"),
    ("omega_file", ""),
    ("phase_lo", "0"),
    ("phase_hi", "0.3"),
    ("dt", "0.1"),
    ("t_end", "40"),
    ("sample_every", "1"),
    ("window_start", "30"),
    ("window_end", "40"),
    ("sync_threshold", "0.95"),
    ("cluster_threshold", "0.95"),
    ("resonance_retries", "100"),
];

fn command_defaults(cmd: Command) -> &'static [(&'static str, &'static str)] {
    match cmd {
        Command::Sweep => &[
            ("mode", "none"),
            ("pinned", "all"),
            ("k1_min", "0"),
            ("k1_max", "2"),
            ("k1_steps", "11"),
            ("k2_min", "0"),
            ("k2_max", "2"),
            ("k2_steps", "11"),
            ("replicates", "5"),
        ],
        Command::Pin => &[
            ("mode", "full"),
            ("m_values", "fifths"),
            ("couplings", "1:1"),
            ("replicates", "50"),
        ],
        Command::Switch => &[
            ("mode", "full"),
            ("k1", "0.05"),
            ("k2", "0.05"),
            ("k1_after", "0.05"),
            ("k2_after", "1"),
            ("t_switch", "15"),
            ("phase_hi", "6.283185307179586"),
        ],
        Command::Basin => &[
            ("k2", "2"),
            ("omega", "zero"),
            ("phase_hi", "6.283185307179586"),
            ("t_end", "100"),
            ("window_start", "90"),
            ("window_end", "100"),
            ("n_ic", "100"),
        ],
        Command::Cost => &[("modes", "full,pairwise"), ("seeds", "20")],
        Command::Validate => &[("sign", "plus"), ("instances", "20")],
        Command::Gen => &[("topology", "random_sc")],
    }
}

/// Resolved configuration: defaults, then the file, then `--set` overrides.
#[derive(Debug, Clone)]
pub struct Config {
    command: Command,
    values: BTreeMap<String, String>,
    pub seed: u64,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl Config {
    pub fn load(
        command: Command,
        file: Option<&Path>,
        overrides: &[(String, String)],
        seed: u64,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = COMMON
            .iter()
            .chain(command_defaults(command))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut pairs = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            pairs = parse_pairs(&text)?;
        }
        pairs.extend(overrides.iter().cloned());
        let mut seed = seed;
        for (k, v) in pairs {
            if k == "seed" {
                seed = v
                    .parse()
                    .map_err(|_| CliError::Config(format!("seed: not an integer: {v:?}")))?;
                continue;
            }
            if !values.contains_key(&k) {
                return Err(CliError::Config(format!(
                    "unknown key {k:?} for command {}",
                    command.name()
                )));
            }
            values.insert(k, v);
        }
        Ok(Self { command, values, seed })
    }

    pub fn command(&self) -> Command {
        self.command
    }

    /// `# key = value` lines echoing every resolved setting.
    pub fn header(&self) -> Vec<String> {
        let mut lines = vec![
            format!("command = {}", self.command.name()),
            format!("seed = {}", self.seed),
        ];
        lines.extend(self.values.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.str(key);
        raw.parse()
            .map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("{key}: must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key)
    }

    pub fn mode(&self, key: &str) -> Result<ControlMode, CliError> {
        self.str(key).parse().map_err(|_| {
            CliError::Config(format!(
                "{key}: expected none, pairwise or full, got {:?}",
                self.str(key)
            ))
        })
    }

    pub fn modes(&self, key: &str) -> Result<Vec<ControlMode>, CliError> {
        self.str(key)
            .split(',')
            .map(|m| {
                m.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{key}: unknown mode {m:?}")))
            })
            .collect()
    }

    pub fn sign(&self) -> Result<SecondTriadicSign, CliError> {
        match self.str("sign") {
            "plus" => Ok(SecondTriadicSign::Plus),
            "minus" => Ok(SecondTriadicSign::Minus),
            other => Err(CliError::Config(format!("sign: expected plus or minus, got {other:?}"))),
        }
    }

    pub fn couplings(&self) -> Result<Couplings, CliError> {
        Ok(Couplings::new(self.f64("k1")?, self.f64("k2")?))
    }

    /// `k1:k2` pairs separated by commas.
    pub fn coupling_list(&self, key: &str) -> Result<Vec<Couplings>, CliError> {
        self.str(key)
            .split(',')
            .map(|pair| {
                let (a, b) = pair
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("{key}: expected k1:k2, got {pair:?}")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("{key}: bad number {s:?}")))
                };
                Ok(Couplings::new(parse(a)?, parse(b)?))
            })
            .collect()
    }

    /// Comma-separated counts, or `fifths` for `0, n/5, …, n`.
    pub fn m_values(&self, n: usize) -> Result<Vec<usize>, CliError> {
        let raw = self.str("m_values");
        if raw == "fifths" {
            return Ok((0..=5).map(|k| k * n / 5).collect());
        }
        raw.split(',')
            .map(|m| {
                m.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("m_values: bad count {m:?}")))
            })
            .collect()
    }

    pub fn hypergraph(&self) -> Result<Hypergraph, CliError> {
        match self.str("topology") {
            "all_to_all" => Ok(Hypergraph::all_to_all(self.usize("n")?)?),
            "random_sc" => Ok(Hypergraph::random_simplicial_complex(
                self.usize("n")?,
                self.f64("k1_deg")?,
                self.f64("k2_deg")?,
                self.seed,
            )?),
            "file" => {
                let path = self.str("path");
                if path.is_empty() {
                    return Err(CliError::Config("topology = file needs path".into()));
                }
                Ok(Hypergraph::load(path)?)
            }
            other => Err(CliError::Config(format!("topology: unknown kind {other:?}"))),
        }
    }

    pub fn setup(&self, n: usize) -> Result<RunSetup, CliError> {
        let omega = match self.str("omega") {
            "uniform" => Draw::Uniform {
                lo: self.f64("omega_lo")?,
                hi: self.f64("omega_hi")?,
            },
            "zero" => Draw::Fixed(vec![0.0; n]),
            "file" => Draw::Fixed(hokm_core::model::load_frequencies(self.str("omega_file"))?),
            other => {
                return Err(CliError::Config(format!(
                    "omega: expected uniform, zero or file, got {other:?}"
                )))
            }
        };
        let phase_hi = self.f64("phase_hi")?;
        if phase_hi > TAU + 1e-12 {
            log::warn!("phase_hi = {phase_hi} exceeds 2π");
        }
        let plan = IntegrationPlan::new(0.0, self.f64("t_end")?, self.f64("dt")?)?
            .with_sample_every(self.usize("sample_every")?)?;
        Ok(RunSetup {
            couplings: self.couplings()?,
            omega,
            phases: Draw::Uniform {
                lo: self.f64("phase_lo")?,
                hi: phase_hi,
            },
            plan,
            window: (self.f64("window_start")?, self.f64("window_end")?),
            thresholds: Thresholds {
                sync: self.f64("sync_threshold")?,
                two_cluster: self.f64("cluster_threshold")?,
            },
            resonance_retries: self.usize("resonance_retries")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_and_unknown_keys() {
        let over = vec![
            ("k1".to_string(), "0.5".to_string()),
            ("seed".to_string(), "9".to_string()),
        ];
        let c = Config::load(Command::Sweep, None, &over, 1).unwrap();
        assert_eq!(c.f64("k1").unwrap(), 0.5);
        assert_eq!(c.seed, 9);
        assert_eq!(c.str("mode"), "none");
        let bad = vec![("bogus".to_string(), "1".to_string())];
        assert!(matches!(
            Config::load(Command::Sweep, None, &bad, 1),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn pair_parsing() {
        let p = parse_pairs("# c\n a = 1 \n\nb=x # tail\n").unwrap();
        assert_eq!(p, vec![("a".into(), "1".into()), ("b".into(), "x".into())]);
        assert!(parse_pairs("novalue").is_err());
        assert!(parse_override("k=v").is_ok());
        assert!(parse_override("kv").is_err());
    }

    #[test]
    fn lists() {
        let over = vec![("couplings".to_string(), "1:1, 0.5:2".to_string())];
        let c = Config::load(Command::Pin, None, &over, 0).unwrap();
        assert_eq!(
            c.coupling_list("couplings").unwrap(),
            vec![Couplings::new(1.0, 1.0), Couplings::new(0.5, 2.0)]
        );
        assert_eq!(c.m_values(50).unwrap(), vec![0, 10, 20, 30, 40, 50]);
    }
}
