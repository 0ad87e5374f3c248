//! The run configuration file: input locations, analysis options and the
//! cost model, as one TOML document. Every constant has a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::model::{AnalysisConfig, CostModel};

/// Locations of the four input tables. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    #[serde(default = "InputPaths::default_taxonomy")]
    pub taxonomy: PathBuf,
    #[serde(default = "InputPaths::default_researchers")]
    pub researchers: PathBuf,
    #[serde(default = "InputPaths::default_publications")]
    pub publications: PathBuf,
    #[serde(default = "InputPaths::default_authorships")]
    pub authorships: PathBuf,
}

impl InputPaths {
    fn default_taxonomy() -> PathBuf {
        "taxonomy.csv".into()
    }
    fn default_researchers() -> PathBuf {
        "researchers.csv".into()
    }
    fn default_publications() -> PathBuf {
        "publications.csv".into()
    }
    fn default_authorships() -> PathBuf {
        "authorships.csv".into()
    }

    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self::default().rebased(dir)
    }

    pub fn rebased(&self, base: &Path) -> Self {
        let join = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        Self {
            taxonomy: join(&self.taxonomy),
            researchers: join(&self.researchers),
            publications: join(&self.publications),
            authorships: join(&self.authorships),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Path)> {
        [
            ("taxonomy", self.taxonomy.as_path()),
            ("researchers", self.researchers.as_path()),
            ("publications", self.publications.as_path()),
            ("authorships", self.authorships.as_path()),
        ]
        .into_iter()
    }
}

impl Default for InputPaths {
    fn default() -> Self {
        Self {
            taxonomy: Self::default_taxonomy(),
            researchers: Self::default_researchers(),
            publications: Self::default_publications(),
            authorships: Self::default_authorships(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub inputs: InputPaths,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub cost: CostModel,
}

impl Config {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file; input paths come back resolved.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text, path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.inputs = config.inputs.rebased(base);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.analysis.validate()?;
        self.cost.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Digest of the analysis options and cost model. Input locations are
    /// excluded so that moving the data does not change the hash.
    pub fn digest(&self) -> String {
        let canonical =
            serde_json::to_vec(&(&self.analysis, &self.cost)).expect("config serializes to JSON");
        hex::encode(Sha256::digest(canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Percentile, Rank, RescaleFallback};

    #[test]
    fn empty_document_yields_defaults() {
        let c = Config::from_toml_str("", Path::new("x.toml")).unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.cost.capital, 42693.0);
        assert_eq!(c.analysis.ts_fence_multiplier, 1.5);
        assert_eq!(c.analysis.min_years, 3);
    }

    #[test]
    fn overrides_and_integer_percentiles() {
        let text = r#"
[analysis]
hca_percentiles = [1, 5, 10]
rescale_fallback = "national_only"

[cost.salary]
assistant = 1000
associate = 2000
full = 3000
"#;
        let c = Config::from_toml_str(text, Path::new("x.toml")).unwrap();
        assert_eq!(
            c.analysis.hca_percentiles,
            vec![Percentile(1.0), Percentile(5.0), Percentile(10.0)]
        );
        assert_eq!(c.analysis.rescale_fallback, RescaleFallback::NationalOnly);
        assert_eq!(c.cost.salary[&Rank::Full], 3000.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(
            Config::from_toml_str("[analysis]\nbogus = 1", Path::new("x")),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            Config::from_toml_str("[cost]\ncapital = -5", Path::new("x")),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            Config::from_toml_str("[cost.salary]\nprofessor = 5", Path::new("x")),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn roundtrip_and_stable_digest() {
        let c = Config::default();
        let back = Config::from_toml_str(&c.to_toml_string(), Path::new("x")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        let mut other = c.clone();
        other.cost.capital += 1.0;
        assert_ne!(other.digest(), c.digest());
    }
}
