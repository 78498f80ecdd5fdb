use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Doubling,
    PerturbedDoubling,
    CatMap,
    PerturbedCat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilyName,
    /// Perturbation parameter of the perturbed families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<MapModel<f64>> {
        let s = || {
            self.s.ok_or_else(|| Error::Config { field: "model.s".into(), message: "required for this family".into() })
        };
        match self.family {
            FamilyName::Doubling => Ok(MapModel::doubling()),
            FamilyName::CatMap => Ok(MapModel::cat_map()),
            FamilyName::PerturbedDoubling => MapModel::perturbed_doubling(s()?),
            FamilyName::PerturbedCat => MapModel::perturbed_cat(s()?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlissPolicy {
    /// `ς′ = √ς`.
    Midpoint,
    /// `ς′` taken from `varsigma_prime`.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlissConfig {
    pub policy: PlissPolicy,
    pub varsigma_prime: Option<f64>,
    /// Number of orbit sequences spot-checked.
    pub sequences: usize,
    pub length: usize,
}

impl Default for PlissConfig {
    fn default() -> Self {
        PlissConfig { policy: PlissPolicy::Midpoint, varsigma_prime: None, sequences: 16, length: 240 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptedConfig {
    pub horizon: usize,
    pub grid: usize,
}

impl Default for AdaptedConfig {
    fn default() -> Self {
        AdaptedConfig { horizon: 8, grid: 1 << 14 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowingConfig {
    pub trials: usize,
    pub alphas: Vec<f64>,
    pub max_period: usize,
}

impl Default for ShadowingConfig {
    fn default() -> Self {
        ShadowingConfig { trials: 100, alphas: vec![1e-4, 1e-3, 1e-2], max_period: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugacyConfig {
    pub resolution: usize,
    pub holder_pairs: usize,
    /// Longest period of the orbits given to the eigenvalue check.
    pub eigen_max_period: usize,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        ConjugacyConfig { resolution: 1 << 12, holder_pairs: 400, eigen_max_period: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplittingConfig {
    /// Periodic orbits up to this period form the sample set.
    pub max_period: usize,
    pub domination_iterate: usize,
    pub cone_width: f64,
    pub cone_steps: usize,
    pub modulus_bins: usize,
    pub n_check: usize,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        SplittingConfig {
            max_period: 5,
            domination_iterate: 1,
            cone_width: 0.5,
            cone_steps: 50,
            modulus_bins: 12,
            n_check: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report_dir: Option<PathBuf>,
    pub name: Option<String>,
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub max_period: usize,
    pub model: ModelSpec,
    #[serde(default)]
    pub pliss: PlissConfig,
    #[serde(default)]
    pub adapted_metric: AdaptedConfig,
    #[serde(default)]
    pub shadowing: ShadowingConfig,
    /// Circle models only; the stage is skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugacy: Option<ConjugacyConfig>,
    #[serde(default)]
    pub splitting: SplittingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config { field: field.into(), message: "must be positive".into() });
    }
    Ok(())
}

impl RunConfig {
    /// Config with defaults for the given model.
    pub fn new(model: ModelSpec, max_period: usize, seed: u64) -> Self {
        RunConfig {
            seed,
            max_period,
            model,
            pliss: PlissConfig::default(),
            adapted_metric: AdaptedConfig::default(),
            shadowing: ShadowingConfig::default(),
            conjugacy: None,
            splitting: SplittingConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default();
            Error::Config { field, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("max_period", self.max_period)?;
        positive("pliss.sequences", self.pliss.sequences)?;
        positive("pliss.length", self.pliss.length)?;
        positive("adapted_metric.horizon", self.adapted_metric.horizon)?;
        positive("adapted_metric.grid", self.adapted_metric.grid)?;
        positive("shadowing.trials", self.shadowing.trials)?;
        positive("shadowing.max_period", self.shadowing.max_period)?;
        positive("splitting.max_period", self.splitting.max_period)?;
        positive("splitting.domination_iterate", self.splitting.domination_iterate)?;
        positive("splitting.cone_steps", self.splitting.cone_steps)?;
        positive("splitting.modulus_bins", self.splitting.modulus_bins)?;
        positive("splitting.n_check", self.splitting.n_check)?;
        if self.shadowing.alphas.is_empty() || self.shadowing.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config { field: "shadowing.alphas".into(), message: "need finite non-negative values".into() });
        }
        if !(self.splitting.cone_width > 0.0 && self.splitting.cone_width < 1.0) {
            return Err(Error::Config { field: "splitting.cone_width".into(), message: "must lie in (0, 1)".into() });
        }
        if self.pliss.policy == PlissPolicy::Fixed {
            match self.pliss.varsigma_prime {
                Some(v) if v > 0.0 && v < 1.0 => {}
                _ => {
                    return Err(Error::Config {
                        field: "pliss.varsigma_prime".into(),
                        message: "fixed policy needs a value in (0, 1)".into(),
                    })
                }
            }
        }
        if let Some(c) = &self.conjugacy {
            positive("conjugacy.resolution", c.resolution)?;
            positive("conjugacy.eigen_max_period", c.eigen_max_period)?;
            if c.holder_pairs < 100 {
                return Err(Error::Config { field: "conjugacy.holder_pairs".into(), message: "must be at least 100".into() });
            }
        }
        let model = self.model.build().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config { field: "model".into(), message: other.to_string() },
        })?;
        if self.conjugacy.is_some() && model.dimension() != 1 {
            return Err(Error::Config { field: "conjugacy".into(), message: "only available for circle models".into() });
        }
        Ok(())
    }
}

/// Reads and validates a TOML config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml_str("seed = 1\nmax_period = 6\n[model]\nfamily = \"doubling\"\n").unwrap();
        assert_eq!(c.shadowing.trials, 100);
        assert!(c.conjugacy.is_none());
    }

    #[test]
    fn seed_is_required() {
        let e = RunConfig::from_toml_str("max_period = 6\n[model]\nfamily = \"doubling\"\n").unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn zero_max_period_is_named() {
        let e = RunConfig::from_toml_str("seed = 1\nmax_period = 0\n[model]\nfamily = \"doubling\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "max_period"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::from_toml_str("seed = 1\nmax_period = 3\nbogus = 2\n[model]\nfamily = \"doubling\"\n");
        assert!(e.is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::new(ModelSpec { family: FamilyName::PerturbedCat, s: Some(0.3) }, 5, 9);
        c.splitting.cone_width = 0.4;
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_parameter() {
        let e = RunConfig::from_toml_str("seed = 1\nmax_period = 3\n[model]\nfamily = \"perturbed_cat\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "model.s"));
    }
}
