//! Run configuration, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintConfig, ConstraintFlags};
use crate::error::{Error, Result};
use crate::geometry::VpConfig;
use crate::linegraph::GraphConfig;
use crate::milp::ModelParams;

/// Environment variable naming a default configuration file.
pub const CONFIG_ENV: &str = "LINELIFT_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub graph: GraphConfig,
    pub constraints: ConstraintFlags,
    /// Pixel gating for planarity pairs; unset means no gating.
    pub planarity_max_gap_px: Option<f64>,
    pub solver: ModelParams,
    pub vp: VpConfig,
    /// Seed for vanishing point RANSAC.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            graph: GraphConfig::default(),
            constraints: ConstraintFlags::ALL,
            planarity_max_gap_px: None,
            solver: ModelParams::default(),
            vp: VpConfig::default(),
            seed: 0,
        }
    }
}

impl Config {
    pub fn constraint_config(&self) -> ConstraintConfig {
        ConstraintConfig {
            flags: self.constraints,
            mu1: self.solver.mu1,
            mu2: self.solver.mu2,
            planarity_max_gap_px: self.planarity_max_gap_px,
            corner_radius_px: self.graph.junction_radius_px,
        }
    }

    pub fn with_flags(mut self, flags: ConstraintFlags) -> Self {
        self.constraints = flags;
        self
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let de = toml::Deserializer::new(s);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.into_inner().message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Loads the file named by [`CONFIG_ENV`], or the defaults when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = Config::default();
        c.solver.mu2 = 4.0;
        c.constraints.planarity = false;
        let back = Config::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = Config::from_toml_str("[solver]\ntime_budget = 5.0\n").unwrap();
        assert_eq!(c.solver.time_budget, 5.0);
        assert_eq!(c.graph, GraphConfig::default());
    }

    #[test]
    fn unknown_key_reports_path() {
        match Config::from_toml_str("[solver]\nbudget = 5.0\n") {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "solver.budget"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
