//! Sweep configuration, read from TOML.
//!
//! ```toml
//! hosts = ["images/airplane.png"]
//! watermarks = ["marks/qr64.png"]
//! seeds = [0, 1, 2]
//! output_dir = "out"
//!
//! [[configs]]          # omit for a single all-defaults config
//! alpha = 25.0         # every field optional
//! level = 2
//! wavelet = "db3"
//! threshold = 128
//!
//! [[attacks]]
//! kind = "gaussian"
//! levels = [0.5, 5.0, 10.0]
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::{Attack, AttackSpec};
use crate::error::{Error, Result};
use crate::pipeline::PartialConfig;
use crate::wavelet::Family;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub alpha: Option<f64>,
    pub level: Option<usize>,
    pub wavelet: Option<Family>,
    pub threshold: Option<u8>,
}

impl ConfigEntry {
    pub fn partial(&self) -> PartialConfig {
        PartialConfig {
            alpha: self.alpha,
            level: self.level,
            wavelet: self.wavelet,
            threshold: self.threshold,
        }
    }
}

/// One attack kind at several severities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackGrid {
    pub kind: String,
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub hosts: Vec<PathBuf>,
    #[serde(default)]
    pub watermarks: Vec<PathBuf>,
    #[serde(default)]
    pub configs: Vec<ConfigEntry>,
    #[serde(default)]
    pub attacks: Vec<AttackGrid>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            hosts: Vec::new(),
            watermarks: Vec::new(),
            configs: Vec::new(),
            attacks: Vec::new(),
            seeds: default_seeds(),
            output_dir: None,
        }
    }
}

/// Report identifier for an input file: its stem.
pub(crate) fn id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("sweep config: {e}")))
    }

    /// Parse a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.hosts.iter_mut().for_each(fix);
        cfg.watermarks.iter_mut().for_each(fix);
        if let Some(out) = cfg.output_dir.as_mut() {
            fix(out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        self.attack_specs().map(|_| ())
    }

    pub(crate) fn effective_configs(&self) -> Vec<ConfigEntry> {
        if self.configs.is_empty() {
            vec![ConfigEntry::default()]
        } else {
            self.configs.clone()
        }
    }

    /// Every attack cell crossed with every seed, grid order then seed order.
    pub fn attack_specs(&self) -> Result<Vec<AttackSpec>> {
        let mut specs = Vec::new();
        for grid in &self.attacks {
            for &level in &grid.levels {
                let attack = Attack::from_kind(&grid.kind.to_ascii_lowercase(), level)?;
                for &seed in &self.seeds {
                    specs.push(AttackSpec::new(attack, seed)?);
                }
            }
        }
        Ok(specs)
    }

    pub fn attack_cells(&self) -> usize {
        self.attacks.iter().map(|g| g.levels.len()).sum()
    }

    /// `|hosts| * |watermarks| * |configs| * (|cells| * |seeds| + 1)`.
    pub fn expected_rows(&self) -> usize {
        self.hosts.len()
            * self.watermarks.len()
            * self.effective_configs().len()
            * (self.attack_cells() * self.seeds.len() + 1)
    }

    pub fn expected_base_rows(&self) -> usize {
        self.hosts.len() * self.watermarks.len() * self.effective_configs().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let cfg = SweepConfig::from_toml_str(
            r#"
            hosts = ["a.png", "b.png"]
            watermarks = ["qr.png"]
            seeds = [0, 1, 2]

            [[configs]]
            alpha = 25.0
            level = 2
            wavelet = "db3"

            [[attacks]]
            kind = "gaussian"
            levels = [0.5, 5.0, 10.0]

            [[attacks]]
            kind = "jpeg"
            levels = [70, 30]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.attack_cells(), 5);
        assert_eq!(cfg.attack_specs().unwrap().len(), 15);
        assert_eq!(cfg.expected_rows(), 2 * (5 * 3 + 1));
        assert_eq!(cfg.configs[0].wavelet.unwrap().order(), 3);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = SweepConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.expected_rows(), 0);
        assert!(SweepConfig::from_toml_str("bogus = 1").is_err());
        let bad =
            SweepConfig::from_toml_str("[[attacks]]\nkind = \"median\"\nlevels = [4]").unwrap();
        assert!(bad.validate().is_err());
        let bad = SweepConfig::from_toml_str("[[configs]]\nwavelet = \"sym4\"");
        assert!(bad.is_err());
    }
}
