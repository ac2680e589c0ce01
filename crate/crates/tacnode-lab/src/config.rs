//! The TOML run document. Unknown keys are rejected so that a typo cannot
//! silently fall back to a default.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tacnode_core::tacnode_kernel::DtacKernel;
use tacnode_core::theta_integrals::KernelParams;
use tacnode_tiling::geometry::{HexagonWithCuts, ScalingParams};
use tacnode_tiling::tiling_sim::ComparisonConfig;

use crate::error::{LabError, Result};
use crate::suites::{ConvergenceSettings, ALL_SUITES};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default)]
    pub seed: u64,
    pub params: Option<ParamsSection>,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub volume: VolumeSection,
    #[serde(default)]
    pub verify: VerifySection,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub r: usize,
    pub rho: i32,
    #[serde(default)]
    pub beta: f64,
}

/// Cartesian grid of kernel arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default)]
    pub tau1: Vec<i32>,
    #[serde(default)]
    pub theta1: Vec<f64>,
    #[serde(default)]
    pub tau2: Vec<i32>,
    #[serde(default)]
    pub theta2: Vec<f64>,
    /// Largest accepted |series - contour|.
    #[serde(default = "default_kernel_tol")]
    pub tolerance: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { tau1: vec![], theta1: vec![], tau2: vec![], theta2: vec![], tolerance: default_kernel_tol() }
    }
}

fn default_kernel_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityPoint {
    pub tau1: i32,
    pub x: Vec<f64>,
    /// Omitted for one-level densities.
    pub tau2: Option<i32>,
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    #[serde(default)]
    pub points: Vec<DensityPoint>,
    /// Levels whose one-point density is integrated over the line.
    #[serde(default)]
    pub normalize: Vec<i32>,
    /// Largest accepted relative disagreement between the three routes.
    #[serde(default = "default_density_tol")]
    pub tolerance: f64,
    #[serde(default = "default_mass_tol")]
    pub mass_tolerance: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self { points: vec![], normalize: vec![], tolerance: default_density_tol(), mass_tolerance: default_mass_tol() }
    }
}

fn default_density_tol() -> f64 {
    1e-6
}

fn default_mass_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeInstance {
    pub tau1: i32,
    pub x: Vec<f64>,
    pub tau2: i32,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSection {
    #[serde(default)]
    pub instances: Vec<VolumeInstance>,
    /// Monte Carlo samples per instance.
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Relative tolerance against nested quadrature.
    #[serde(default = "default_volume_tol")]
    pub tolerance: f64,
}

impl Default for VolumeSection {
    fn default() -> Self {
        Self { instances: vec![], samples: default_samples(), tolerance: default_volume_tol() }
    }
}

fn default_samples() -> u64 {
    200_000
}

fn default_volume_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Per-suite tolerance overrides keyed by suite name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub convergence: ConvergenceSettings,
}

/// Either a scaled geometry compared against the limiting densities, or an
/// explicit region that is only sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub scaling: Option<ScalingParams>,
    pub region: Option<HexagonWithCuts>,
    pub chain: ComparisonConfig,
    /// Independent chains, seeded seed, seed + 1, ...
    #[serde(default = "default_chains")]
    pub chains: u64,
}

fn default_chains() -> u64 {
    1
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| key_at(text, s.start)).unwrap_or_else(|| "document".into());
            LabError::config(field, e.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Ok((Self::from_toml(&text)?, text))
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = &self.params {
            KernelParams::new(p.r, p.rho, p.beta).map_err(|e| LabError::config("params", e.to_string()))?;
        }
        positive("kernel.tolerance", self.kernel.tolerance)?;
        positive("density.tolerance", self.density.tolerance)?;
        positive("density.mass_tolerance", self.density.mass_tolerance)?;
        positive("volume.tolerance", self.volume.tolerance)?;
        for (i, p) in self.density.points.iter().enumerate() {
            if p.tau2.is_some() != p.y.is_some() {
                return Err(LabError::config(format!("density.points[{i}]"), "tau2 and y go together"));
            }
        }
        for (name, &tol) in &self.verify.tolerances {
            if !ALL_SUITES.contains(&name.as_str()) {
                return Err(LabError::config(
                    format!("verify.tolerances.{name}"),
                    format!("unknown suite; expected one of {}", ALL_SUITES.join(", ")),
                ));
            }
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(LabError::config(format!("verify.tolerances.{name}"), "must be a non-negative number"));
            }
        }
        self.verify.convergence.validate()?;
        if let Some(s) = &self.simulate {
            match (&s.scaling, &s.region) {
                (Some(sp), None) => {
                    sp.validate().map_err(|e| LabError::config("simulate.scaling", e.to_string()))?;
                }
                (None, Some(_)) => {}
                _ => return Err(LabError::config("simulate", "give exactly one of scaling or region")),
            }
            if s.chains == 0 {
                return Err(LabError::config("simulate.chains", "need at least one chain"));
            }
            if s.chain.thin == 0 {
                return Err(LabError::config("simulate.chain.thin", "must be positive"));
            }
            positive("simulate.chain.bin_width", s.chain.bin_width)?;
            positive("simulate.chain.theta_max", s.chain.theta_max)?;
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<DtacKernel> {
        let p = self.params.ok_or_else(|| LabError::config("params", "section is required for this command"))?;
        let kp = KernelParams::new(p.r, p.rho, p.beta).map_err(|e| LabError::config("params", e.to_string()))?;
        DtacKernel::new(kp).map_err(|e| LabError::config("params", e.to_string()))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, format!("must be a positive number, got {v}")))
    }
}

/// Dotted key path of the table entry enclosing byte offset `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if offset > pos {
            break;
        }
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "document".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
