//! Run configuration, read from a single JSON object.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use spectra_asym::{ProblemSpecF64, ShootingConfigF64, C64};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemCfg,
    #[serde(default)]
    pub asym: AsymCfg,
    #[serde(default)]
    pub shoot: ShootCfg,
    #[serde(default)]
    pub invert: InvertCfg,
    #[serde(default)]
    pub verify: VerifyCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemCfg {
    pub m: usize,
    pub ell: usize,
    /// `[re, im]` pairs for a_1..a_(m-1); empty means the zero vector.
    #[serde(default)]
    pub a: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymCfg {
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for AsymCfg {
    fn default() -> Self {
        Self { n_min: 0, n_max: 20 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootCfg {
    pub enabled: bool,
    pub radius_factor: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub renorm_threshold: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_steps: Option<usize>,
}

impl Default for ShootCfg {
    fn default() -> Self {
        Self {
            enabled: true,
            radius_factor: None,
            rtol: None,
            atol: None,
            newton_tol: None,
            max_iter: None,
            renorm_threshold: None,
            residual_tol: None,
            max_steps: None,
        }
    }
}

impl ShootCfg {
    pub fn config(&self) -> ShootingConfigF64 {
        let d = ShootingConfigF64::default();
        ShootingConfigF64 {
            radius_factor: self.radius_factor.unwrap_or(d.radius_factor),
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            renorm_threshold: self.renorm_threshold.unwrap_or(d.renorm_threshold),
            residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Generated from the asymptotic expansion of `problem`.
    Asym,
    /// Generated by shooting on `problem`.
    Shoot,
    /// Read from `eigs_csv` (columns `n,re,im`).
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvertCfg {
    pub known: BTreeMap<usize, [f64; 2]>,
    pub j_max: Option<usize>,
    pub n_min: usize,
    pub fit_order: Option<usize>,
    pub weighted: bool,
    pub data: DataSource,
    pub data_n_min: usize,
    pub data_n_max: usize,
    pub eigs_csv: Option<PathBuf>,
}

impl Default for InvertCfg {
    fn default() -> Self {
        Self {
            known: BTreeMap::new(),
            j_max: None,
            n_min: 10,
            fit_order: None,
            weighted: false,
            data: DataSource::Asym,
            data_n_min: 20,
            data_n_max: 60,
            eigs_csv: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub k_oracle: f64,
    pub series: f64,
    pub closed_forms: f64,
    pub symmetry: f64,
    pub quantization: f64,
    pub counting_band: f64,
    pub reality: f64,
    pub pairing: f64,
    pub asym_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            k_oracle: 1e-8,
            series: 1e-12,
            closed_forms: 1e-12,
            symmetry: 1e-12,
            quantization: 1e-9,
            counting_band: 2.0,
            reality: 1e-8,
            pairing: 1e-8,
            asym_gap: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyCfg {
    pub tolerances: Tolerances,
    /// Index range of the shooting checks.
    pub n_min: usize,
    pub n_max: usize,
    pub shoot: bool,
    /// Test mode: flip the sign of d_2 on one side of the closed-form check.
    pub inject_d2_sign_flip: bool,
}

impl Default for VerifyCfg {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), n_min: 5, n_max: 15, shoot: true, inject_d2_sign_flip: false }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("field `{path}`: {}", e.into_inner())
        })?;
        cfg.spec()?;
        cfg.shoot.config().validate()?;
        if cfg.asym.n_max < cfg.asym.n_min {
            bail!("field `asym`: n_max < n_min");
        }
        if cfg.verify.n_max <= cfg.verify.n_min {
            bail!("field `verify`: n_max must exceed n_min");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("config {}", path.display()))?;
        if let (Some(csv), Some(dir)) = (&cfg.invert.eigs_csv, path.parent()) {
            if csv.is_relative() {
                cfg.invert.eigs_csv = Some(dir.join(csv));
            }
        }
        Ok(cfg)
    }

    /// Whether `problem.a` was given explicitly.
    pub fn has_coefficients(&self) -> bool {
        !self.problem.a.is_empty()
    }

    pub fn spec(&self) -> Result<ProblemSpecF64> {
        let p = &self.problem;
        let spec = if p.a.is_empty() {
            ProblemSpecF64::zero(p.m, p.ell)
        } else {
            ProblemSpecF64::new(p.m, p.ell, p.a.iter().map(|&[re, im]| C64::new(re, im)).collect())
        };
        spec.context("field `problem`")
    }
}
