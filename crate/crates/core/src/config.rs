//! JSON run configuration for the command-line front end.

use crate::potential::{Potential, Shape};
use crate::quad::QuadSpec;
use crate::testfn::Psi;
use crate::vec3::Vec3;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Where study outputs go: `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Defaults to the study kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths { dir: default_dir(), stem: None }
    }
}

fn default_dir() -> String {
    ".".into()
}

fn default_psi() -> String {
    "gaussian".into()
}

fn default_v1_grid() -> Vec<Vec3> {
    let d = 1.0 / 3f64.sqrt();
    vec![Vec3::default(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(d, d, d)]
}

fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
}

fn default_kappa() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

fn default_rho_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.5, 0.7]
}

fn default_v_rel() -> f64 {
    3.0
}

fn default_rho_max() -> f64 {
    1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    pub f: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default)]
    pub quad: QuadSpec,
    /// Overrides `quad.rng_seed` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_psi")]
    pub psi: String,
    #[serde(default = "default_v1_grid")]
    pub v1_grid: Vec<Vec3>,
    #[serde(default = "default_eps")]
    pub eps_schedule: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa_schedule: Vec<f64>,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    /// Relative speed used by the angle-bound study.
    #[serde(default = "default_v_rel")]
    pub v_rel: f64,
    /// Impact-parameter cutoff of the non-cutoff operator.
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Parses and validates a JSON configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.potential()?;
        self.quad.validate()?;
        self.psi()?.validate()?;
        for (key, list) in [("eps_schedule", &self.eps_schedule), ("kappa_schedule", &self.kappa_schedule), ("rho_grid", &self.rho_grid)] {
            if list.is_empty() || !list.iter().all(|&x| x > 0.0 && x.is_finite()) {
                return Err(Error::config(format!("{key} must be a non-empty list of positive numbers")));
            }
        }
        if self.v1_grid.is_empty() || !self.v1_grid.iter().all(|v| v.0.iter().all(|x| x.is_finite())) {
            return Err(Error::config("v1_grid must be a non-empty list of finite [x, y, z]"));
        }
        if !(self.v_rel > 0.0 && self.v_rel.is_finite()) {
            return Err(Error::config("v_rel must be > 0"));
        }
        if !(self.rho_max >= 10.0 && self.rho_max.is_finite()) {
            return Err(Error::config("rho_max must be ≥ 10"));
        }
        if self.output.dir.is_empty() {
            return Err(Error::config("output.dir must not be empty"));
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        match self.range {
            Some(r) => Potential::with_range(self.s, self.f.clone(), r),
            None => Potential::new(self.s, self.f.clone()),
        }
    }

    pub fn psi(&self) -> Result<Psi> {
        Psi::by_name(&self.psi)
    }

    /// Quadrature settings with the top-level seed applied.
    pub fn quad_spec(&self) -> QuadSpec {
        QuadSpec { rng_seed: self.seed.unwrap_or(self.quad.rng_seed), ..self.quad.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact serialization, with every default filled in.
    pub fn sha256(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
