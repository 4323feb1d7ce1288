//! Run configuration and the experiment presets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Theorem;
use crate::dynamics::{PhysicalParams, Profile, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{Discretization, DomainKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// x extent; the truncation length on the half-strip.
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub weight_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub amplitude: f64,
    pub profile: Profile,
}

/// Everything a run needs. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Theorem whose envelope `decay` checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Theorem>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub physics: PhysicalParams,
    pub solver: SolverConfig,
    pub initial: InitialConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.discretization().map(|_| ())
    }

    pub fn discretization(&self) -> Result<Discretization> {
        let d = &self.domain;
        Discretization::new(
            d.kind,
            d.length,
            d.width,
            self.grid.nx,
            self.grid.n_modes,
            d.weight_k,
            self.solver.dealias,
        )
    }

    pub fn preset(id: &str) -> Result<Self> {
        PRESETS.iter().find(|p| p.id == id).map(Preset::config).ok_or_else(|| {
            let ids: Vec<&str> = PRESETS.iter().map(|p| p.id).collect();
            Error::Config(format!("unknown preset `{id}` (known: {})", ids.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetProfile {
    RectPoly { mode: usize },
    StripExp { sigma: f64, mode: usize },
}

/// One row of the preset table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub id: &'static str,
    pub theorem: Option<Theorem>,
    pub kind: DomainKind,
    pub length: f64,
    pub width: f64,
    pub weight_k: f64,
    pub gamma: f64,
    pub nx: usize,
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub profile: PresetProfile,
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        id: "thm61",
        theorem: Some(Theorem::RectanglePositiveGamma),
        kind: DomainKind::Rectangle,
        length: PI,
        width: PI,
        weight_k: 0.0,
        gamma: 1.0,
        nx: 128,
        n_modes: 8,
        dt: 1e-3,
        t_end: 2.0,
        amplitude: 1.0,
        profile: PresetProfile::RectPoly { mode: 1 },
    },
    Preset {
        id: "thm62",
        theorem: Some(Theorem::RectangleNonpositiveGamma),
        kind: DomainKind::Rectangle,
        length: PI,
        width: PI,
        weight_k: 0.0,
        gamma: -1.0,
        nx: 128,
        n_modes: 8,
        dt: 1e-3,
        t_end: 1.0,
        amplitude: 1.0,
        profile: PresetProfile::RectPoly { mode: 1 },
    },
    Preset {
        id: "thm63",
        theorem: Some(Theorem::StripPositiveGamma),
        kind: DomainKind::HalfStrip,
        length: 20.0 * PI,
        width: PI / 2.0,
        weight_k: 0.25,
        gamma: 0.125,
        nx: 512,
        n_modes: 4,
        dt: 1e-3,
        t_end: 1.0,
        amplitude: 1.0,
        profile: PresetProfile::StripExp { sigma: 1.0, mode: 1 },
    },
    Preset {
        id: "thm64",
        theorem: Some(Theorem::StripNonpositiveGamma),
        kind: DomainKind::HalfStrip,
        length: 20.0 * PI,
        width: PI / 2.0,
        weight_k: 0.25,
        gamma: -1.0,
        nx: 512,
        n_modes: 4,
        dt: 1e-3,
        t_end: 1.0,
        amplitude: 1.0,
        profile: PresetProfile::StripExp { sigma: 1.0, mode: 1 },
    },
    Preset {
        id: "unstable",
        theorem: None,
        kind: DomainKind::Rectangle,
        length: PI,
        width: PI,
        weight_k: 0.0,
        gamma: 50.0,
        nx: 128,
        n_modes: 8,
        dt: 1e-3,
        t_end: 5.0,
        amplitude: 0.01,
        profile: PresetProfile::RectPoly { mode: 1 },
    },
];

impl Preset {
    pub fn config(&self) -> RunConfig {
        let profile = match self.profile {
            PresetProfile::RectPoly { mode } => Profile::rect_poly(mode),
            PresetProfile::StripExp { sigma, mode } => Profile::StripExp { sigma, mode },
        };
        RunConfig {
            preset: Some(self.id.to_string()),
            theorem: self.theorem,
            seed: 0,
            output_dir: None,
            domain: DomainConfig {
                kind: self.kind,
                length: self.length,
                width: self.width,
                weight_k: self.weight_k,
            },
            grid: GridConfig {
                nx: self.nx,
                n_modes: self.n_modes,
            },
            physics: PhysicalParams::new(self.gamma),
            solver: SolverConfig::new(self.dt, self.t_end),
            initial: InitialConfig {
                amplitude: self.amplitude,
                profile,
            },
        }
    }
}
