//! Run configuration: defaults, the `key = value` file format, and
//! validation.
//!
//! Unknown keys are rejected rather than ignored so that typos in
//! experiment files fail loudly. `#` starts a comment anywhere on a line.

use crate::engine::{EconomyParams, Mode, NetworkParams, WorldParams};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: malformed line, expected `key = value`")]
    MalformedLine { line: usize },
    #[error("line {line}: key `{key}`: {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("key `{key}`: {message}")]
    OutOfDomain { key: String, message: String },
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Complete run configuration. Field defaults are the reference world; every
/// value can be overridden by a config file and again by CLI flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n_sites: usize,
    pub radius: f64,
    pub capacity_min: f64,
    pub capacity_max: f64,
    pub regrow_rate: f64,
    /// Genome length (config key `G`).
    pub genome_length: usize,
    /// Day length in timesteps (config key `T`).
    pub day_length: usize,
    pub point_rate: f64,
    pub path_rate: f64,
    pub tau: f64,
    pub harvest_rate: f64,
    pub c_move: f64,
    pub metabolic: f64,
    pub breed_threshold: f64,
    pub child_endowment: f64,
    pub initial_energy: f64,
    /// Founding population size (config key `N0`).
    pub initial_population: usize,
    pub max_days: u64,
    pub age_split: u32,
    pub mode: Mode,
    pub runs: u64,
    pub base_seed: u64,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            n_sites: 50,
            radius: 0.25,
            capacity_min: 5.0,
            capacity_max: 100.0,
            regrow_rate: 100.0,
            genome_length: 60,
            day_length: 20,
            point_rate: 0.05,
            path_rate: 0.02,
            tau: 1.0 / 3.0,
            harvest_rate: 0.04,
            c_move: 0.1,
            metabolic: 2.0,
            breed_threshold: 100.0,
            child_endowment: 24.0,
            initial_energy: 50.0,
            initial_population: 50,
            max_days: 1000,
            age_split: 50,
            mode: Mode::Socializers,
            runs: 1,
            base_seed: 42,
        }
    }
}

impl Config {
    /// Parses a line-oriented `key = value` file over the defaults.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::MalformedLine { line });
            };
            let key = key.trim();
            let value = value.trim();
            cfg.assign(key, value, line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text)
    }

    fn assign(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn bad(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
            ConfigError::BadValue {
                line,
                key: key.to_string(),
                message: message.into(),
            }
        }
        fn parse_num<T: std::str::FromStr>(
            value: &str,
            line: usize,
            key: &str,
        ) -> Result<T, ConfigError> {
            value
                .parse::<T>()
                .map_err(|_| bad(line, key, format!("cannot parse `{value}`")))
        }

        match key {
            "n_sites" => self.n_sites = parse_num(value, line, key)?,
            "radius" => self.radius = parse_num(value, line, key)?,
            "capacity_min" => self.capacity_min = parse_num(value, line, key)?,
            "capacity_max" => self.capacity_max = parse_num(value, line, key)?,
            "regrow_rate" => self.regrow_rate = parse_num(value, line, key)?,
            "G" => self.genome_length = parse_num(value, line, key)?,
            "T" => self.day_length = parse_num(value, line, key)?,
            "point_rate" => self.point_rate = parse_num(value, line, key)?,
            "path_rate" => self.path_rate = parse_num(value, line, key)?,
            "tau" => self.tau = parse_num(value, line, key)?,
            "harvest_rate" => self.harvest_rate = parse_num(value, line, key)?,
            "c_move" => self.c_move = parse_num(value, line, key)?,
            "metabolic" => self.metabolic = parse_num(value, line, key)?,
            "breed_threshold" => self.breed_threshold = parse_num(value, line, key)?,
            "child_endowment" => self.child_endowment = parse_num(value, line, key)?,
            "initial_energy" => self.initial_energy = parse_num(value, line, key)?,
            "N0" => self.initial_population = parse_num(value, line, key)?,
            "max_days" => self.max_days = parse_num(value, line, key)?,
            "age_split" => self.age_split = parse_num(value, line, key)?,
            "mode" => {
                self.mode = value
                    .parse::<Mode>()
                    .map_err(|message| bad(line, key, message))?;
            }
            "runs" => self.runs = parse_num(value, line, key)?,
            "base_seed" => self.base_seed = parse_num(value, line, key)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        // Single-field domain checks fail right here with the line number;
        // cross-field relations wait for the final validation pass.
        if let Some(message) = self.single_field_error(key) {
            return Err(bad(line, key, message));
        }
        Ok(())
    }

    fn single_field_error(&self, key: &str) -> Option<String> {
        let positive = |v: f64| {
            if v > 0.0 && v.is_finite() {
                None
            } else {
                Some(format!("must be strictly positive, got {v}"))
            }
        };
        match key {
            "n_sites" if self.n_sites == 0 => Some("must be >= 1".into()),
            "radius" if !(self.radius > 0.0 && self.radius <= std::f64::consts::SQRT_2) => {
                Some(format!("must lie in (0, sqrt(2)], got {}", self.radius))
            }
            "capacity_min" if self.capacity_min < 0.0 => Some("must be non-negative".into()),
            "capacity_max" if self.capacity_max < 0.0 => Some("must be non-negative".into()),
            "regrow_rate" if self.regrow_rate < 0.0 => Some("must be non-negative".into()),
            "T" if self.day_length == 0 => Some("must be >= 1".into()),
            "G" if self.genome_length == 0 => Some("must be >= 1".into()),
            "point_rate" if !(0.0..=1.0).contains(&self.point_rate) => {
                Some("must lie in [0, 1]".into())
            }
            "path_rate" if !(0.0..=1.0).contains(&self.path_rate) => {
                Some("must lie in [0, 1]".into())
            }
            "tau" => {
                if let Some(msg) = positive(self.tau) {
                    Some(msg)
                } else if self.tau * 3.0 > 1.0 {
                    Some(format!("3 * tau must not exceed 1, got tau = {}", self.tau))
                } else {
                    None
                }
            }
            "harvest_rate" => positive(self.harvest_rate),
            "c_move" => positive(self.c_move),
            "metabolic" => positive(self.metabolic),
            "breed_threshold" => positive(self.breed_threshold),
            "child_endowment" => positive(self.child_endowment),
            "initial_energy" => positive(self.initial_energy),
            "runs" if self.runs == 0 => Some("must be >= 1".into()),
            _ => None,
        }
    }

    /// Cross-field domain validation; used after parsing and again after
    /// CLI overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn fail(key: &str, message: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::OutOfDomain {
                key: key.to_string(),
                message: message.into(),
            })
        }
        if self.n_sites == 0 {
            return fail("n_sites", "must be >= 1");
        }
        if !(self.radius > 0.0 && self.radius <= std::f64::consts::SQRT_2) {
            return fail("radius", format!("must lie in (0, sqrt(2)], got {}", self.radius));
        }
        if !(self.capacity_min >= 0.0 && self.capacity_min <= self.capacity_max) {
            return fail(
                "capacity_min",
                format!(
                    "capacity range [{}, {}] must satisfy 0 <= min <= max",
                    self.capacity_min, self.capacity_max
                ),
            );
        }
        if self.regrow_rate < 0.0 {
            return fail("regrow_rate", "must be non-negative");
        }
        if self.day_length == 0 {
            return fail("T", "must be >= 1");
        }
        if self.genome_length < self.day_length {
            return fail(
                "G",
                format!(
                    "genome length {} must be >= day length {}",
                    self.genome_length, self.day_length
                ),
            );
        }
        if !(0.0..=1.0).contains(&self.point_rate) {
            return fail("point_rate", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.path_rate) {
            return fail("path_rate", "must lie in [0, 1]");
        }
        if self.runs == 0 {
            return fail("runs", "must be >= 1");
        }
        for key in [
            "tau",
            "harvest_rate",
            "c_move",
            "metabolic",
            "breed_threshold",
            "child_endowment",
            "initial_energy",
        ] {
            if let Some(message) = self.single_field_error(key) {
                return fail(key, message);
            }
        }
        if self.child_endowment > 2.0 * self.breed_threshold {
            return fail(
                "child_endowment",
                format!(
                    "must not exceed twice breed_threshold ({} > 2 * {})",
                    self.child_endowment, self.breed_threshold
                ),
            );
        }
        Ok(())
    }

    pub fn economy(&self) -> EconomyParams {
        EconomyParams {
            harvest_rate: self.harvest_rate,
            tau: self.tau,
            c_move: self.c_move,
            metabolic: self.metabolic,
            breed_threshold: self.breed_threshold,
            child_endowment: self.child_endowment,
            initial_energy: self.initial_energy,
        }
    }

    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            mode: self.mode,
            day_length: self.day_length,
            genome_length: self.genome_length,
            point_rate: self.point_rate,
            path_rate: self.path_rate,
            initial_population: self.initial_population,
            econ: self.economy(),
            network: NetworkParams {
                n_sites: self.n_sites,
                radius: self.radius,
                capacity_min: self.capacity_min,
                capacity_max: self.capacity_max,
                regrow_rate: self.regrow_rate,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = Config::parse("# a comment\n\n  \nn_sites = 10 # trailing\n").unwrap();
        assert_eq!(cfg.n_sites, 10);
    }

    #[test]
    fn mode_override() {
        let cfg = Config::parse("mode = breeders\n").unwrap();
        assert_eq!(cfg.mode, Mode::Breeders);
    }

    #[test]
    fn tau_domain_violation_is_rejected() {
        let err = Config::parse("tau = 0.9\n").unwrap_err();
        let message = err.to_string();
        assert!(message.contains("tau"), "{message}");
        assert!(message.contains("line 1"), "{message}");
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let err = Config::parse("n_sites = 10\nbogus = 3\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "bogus");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn malformed_value_is_rejected() {
        let err = Config::parse("radius = not_a_number\n").unwrap_err();
        assert!(err.to_string().contains("radius"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        let err = Config::parse("just some words\n").unwrap_err();
        assert!(matches!(err, ConfigError::MalformedLine { line: 1 }));
    }

    #[test]
    fn cross_field_checks_run_after_parse() {
        let err = Config::parse("G = 5\nT = 10\n").unwrap_err();
        assert!(err.to_string().contains('G'), "{err}");
    }

    #[test]
    fn all_config_keys_roundtrip() {
        let text = "\
n_sites = 30
radius = 0.3
capacity_min = 10
capacity_max = 40
regrow_rate = 40
G = 100
T = 10
point_rate = 0.05
path_rate = 0.01
tau = 0.2
harvest_rate = 0.03
c_move = 0.2
metabolic = 1.5
breed_threshold = 80
child_endowment = 40
initial_energy = 60
N0 = 25
max_days = 500
age_split = 30
mode = lamarck
runs = 4
base_seed = 7
";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.n_sites, 30);
        assert_eq!(cfg.genome_length, 100);
        assert_eq!(cfg.day_length, 10);
        assert_eq!(cfg.initial_population, 25);
        assert_eq!(cfg.mode, Mode::Lamarck);
        assert_eq!(cfg.runs, 4);
        assert_eq!(cfg.base_seed, 7);
    }

    #[test]
    fn default_config_is_valid() {
        Config::default().validate().unwrap();
    }
}
