//! Experiment configuration.
//!
//! TOML with the sections below; every key is optional and defaults to the
//! desk experiment. Unknown keys are rejected with their dotted path.
//!
//! ```toml
//! output_dir = "out"
//! [grid]       # N, L
//! [physics]    # nu, T, dt
//! [data]       # R0, seed, amplitude, oversample, smoothing
//! [sweep]      # R_list, a_targets
//! [galerkin]   # l_max, n_max, dt_ode, [galerkin.quadrature] inner, shell, angular, seed
//! [tolerances] # div_tol, bog_tol, mode_tol
//! [constants]  # C, Ca
//! ```

use crate::ballquad::BallRuleSpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 48, l: 32.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub nu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { nu: 1.0, t: 0.5, dt: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    #[serde(rename = "R0")]
    pub r0: f64,
    pub seed: u64,
    pub amplitude: f64,
    pub oversample: usize,
    pub smoothing: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { r0: 2.0, seed: 7, amplitude: 1000.0, oversample: 2, smoothing: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    #[serde(rename = "R_list")]
    pub r_list: Vec<f64>,
    pub a_targets: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { r_list: vec![4.0, 6.0, 8.0, 10.0], a_targets: vec![1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GalerkinConfig {
    pub l_max: usize,
    pub n_max: usize,
    pub dt_ode: f64,
    pub quadrature: BallRuleSpec,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        GalerkinConfig { l_max: 5, n_max: 4, dt_ode: 0.01, quadrature: BallRuleSpec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub div_tol: f64,
    pub bog_tol: f64,
    pub mode_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { div_tol: 2e-3, bog_tol: 1e-3, mode_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Ca")]
    pub ca: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { c: 1.0, ca: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub data: DataConfig,
    pub sweep: SweepConfig,
    pub galerkin: GalerkinConfig,
    pub tolerances: Tolerances,
    pub constants: ConstantsConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            data: DataConfig::default(),
            sweep: SweepConfig::default(),
            galerkin: GalerkinConfig::default(),
            tolerances: Tolerances::default(),
            constants: ConstantsConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("", e.to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error("", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, path: &str| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(config_error(path, format!("must be positive, got {v}"))) };
        GridSpec::new(self.grid.n, self.grid.l).map_err(|e| config_error("grid", e.to_string()))?;
        pos(self.physics.nu, "physics.nu")?;
        pos(self.physics.t, "physics.T")?;
        pos(self.physics.dt, "physics.dt")?;
        pos(self.data.r0, "data.R0")?;
        pos(self.data.amplitude, "data.amplitude")?;
        pos(self.data.smoothing, "data.smoothing")?;
        if self.data.oversample == 0 {
            return Err(config_error("data.oversample", "must be at least 1"));
        }
        if self.sweep.r_list.is_empty() {
            return Err(config_error("sweep.R_list", "empty"));
        }
        for (i, &r) in self.sweep.r_list.iter().enumerate() {
            let r_max = self.grid.l / 2.0 - 1.0;
            if !(r >= self.data.r0 + 1.0 && r <= r_max) {
                return Err(config_error(
                    &format!("sweep.R_list[{i}]"),
                    format!("R = {r} outside [R0 + 1, L/2 - 1] = [{}, {r_max}]", self.data.r0 + 1.0),
                ));
            }
        }
        for (i, &a) in self.sweep.a_targets.iter().enumerate() {
            if !(a > 0.0 && a < 1.5) {
                return Err(config_error(&format!("sweep.a_targets[{i}]"), format!("a = {a} outside (0, 3/2)")));
            }
        }
        if self.galerkin.l_max == 0 || self.galerkin.n_max == 0 {
            return Err(config_error("galerkin", "l_max and n_max must be at least 1"));
        }
        pos(self.galerkin.dt_ode, "galerkin.dt_ode")?;
        let q = &self.galerkin.quadrature;
        if q.inner == 0 || q.angular == 0 || q.shell.contains(&0) {
            return Err(config_error("galerkin.quadrature", "node counts must be positive"));
        }
        pos(self.tolerances.div_tol, "tolerances.div_tol")?;
        pos(self.tolerances.bog_tol, "tolerances.bog_tol")?;
        pos(self.tolerances.mode_tol, "tolerances.mode_tol")?;
        if !(self.constants.c >= 1.0) {
            return Err(config_error("constants.C", "must be at least 1"));
        }
        pos(self.constants.ca, "constants.Ca")?;
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.grid.n, self.grid.l).expect("validated")
    }

    /// SHA-256 of the canonical JSON form; equal configs hash equal however
    /// they were written.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("serializable");
        let bytes = serde_json::to_vec(&v).expect("serializable");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable")
    }
}
