//! Run configuration (JSON) and content hashing for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::EnvironmentParams;
use crate::error::{Error, Result};
use crate::fit::InterceptVariant;
use crate::solver::SolverSettings;
use crate::sweep::{Axis, CasePreset, SweepSpec};

pub const CONFIG_SCHEMA: &str = "uwacap.config/1";

/// SHA-256 of the canonical JSON encoding of `value`, hex encoded.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub case: Option<CasePreset>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Overrides the preset distance axis.
    #[serde(default)]
    pub l_axis: Option<Axis>,
    /// Overrides the preset capacity axis.
    #[serde(default)]
    pub c_axis: Option<Axis>,
}

fn default_points() -> usize {
    40
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            case: Some(CasePreset::Case1),
            points: default_points(),
            l_axis: None,
            c_axis: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub intercept_variant: InterceptVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub env: EnvironmentParams,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvironmentParams::default(),
            solver: SolverSettings::default(),
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.env.validate().map_err(wrap)?;
        self.solver.validate().map_err(wrap)?;
        self.sweep_spec().map(|_| ()).map_err(wrap)
    }

    pub fn hash(&self) -> String {
        content_hash(self)
    }

    /// The sweep described by the `sweep` section.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let preset = self.sweep.case;
        let (l_axis, c_axis) = match (preset, self.sweep.l_axis, self.sweep.c_axis) {
            (_, Some(l), Some(c)) => (l, c),
            (Some(p), l, c) => {
                let (pl, pc) = p.axes(self.sweep.points);
                (l.unwrap_or(pl), c.unwrap_or(pc))
            }
            (None, _, _) => {
                return Err(Error::Config(
                    "sweep needs a case preset or both l_axis and c_axis".into(),
                ))
            }
        };
        let label = match (preset, self.sweep.l_axis.or(self.sweep.c_axis)) {
            (Some(p), None) => p.label().to_string(),
            (Some(p), Some(_)) => format!("{}-custom", p.label()),
            (None, _) => "custom".to_string(),
        };
        SweepSpec::new(l_axis.values()?, c_axis.values()?, self.env, label)
    }
}
