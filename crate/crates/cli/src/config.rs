//! Run configuration: one TOML file plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eim: f64,
    pub greedy: f64,
    /// Relative energy left out by the port POD.
    pub pod: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eim: 1e-7,
            greedy: 1e-5,
            pod: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sizes {
    pub eim_train: usize,
    pub train: usize,
    pub port_snapshots: usize,
    pub eim_test: usize,
    pub test: usize,
    pub eim_max_terms: usize,
    pub greedy_max: usize,
    /// Upper bound on retained port modes (0: no bound).
    pub port_modes_max: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Self {
            eim_train: 250,
            train: 250,
            port_snapshots: 25,
            eim_test: 100,
            test: 30,
            eim_max_terms: 100,
            greedy_max: 100,
            port_modes_max: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub ports: u64,
    pub eim: u64,
    pub bubbles: u64,
    pub test: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            ports: 1,
            eim: 11,
            bubbles: 0,
            test: 1234,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model file; relative paths are resolved against the config file.
    pub model: PathBuf,
    pub output: PathBuf,
    pub memory_budget: usize,
    /// Store bubble and lifting vectors so fields can be reconstructed.
    pub store_bases: bool,
    pub tolerances: Tolerances,
    pub sizes: Sizes,
    pub seeds: Seeds,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: PathBuf::from("model.toml"),
            output: PathBuf::from("out"),
            memory_budget: 1 << 30,
            store_bases: true,
            tolerances: Tolerances::default(),
            sizes: Sizes::default(),
            seeds: Seeds::default(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("override `{spec}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| usage(format!("`{p}` in `{key}` is not a section")))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Loads a config file; relative model and output paths are resolved
    /// against its directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, overrides).map_err(|e| e.in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.model.is_relative() {
            cfg.model = base.join(&cfg.model);
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("eim", t.eim), ("greedy", t.greedy), ("pod", t.pod)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("tolerances.{name} must be a finite positive number")));
            }
        }
        let s = &self.sizes;
        for (name, v) in [
            ("eim_train", s.eim_train),
            ("train", s.train),
            ("port_snapshots", s.port_snapshots),
            ("eim_test", s.eim_test),
            ("test", s.test),
            ("eim_max_terms", s.eim_max_terms),
            ("greedy_max", s.greedy_max),
        ] {
            if v == 0 {
                return Err(usage(format!("sizes.{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Canonical text of the settings that determine the trained ROM.
    pub fn training_key(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            store_bases: bool,
            tolerances: &'a Tolerances,
            sizes: &'a Sizes,
            seeds: &'a Seeds,
        }
        toml::to_string(&Key {
            store_bases: self.store_bases,
            tolerances: &self.tolerances,
            sizes: &self.sizes,
            seeds: &self.seeds,
        })
        .expect("config serializes")
    }
}
