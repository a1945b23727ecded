use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sha256_hex;
use crate::ela::FeatureSampling;
use crate::engine::{Category, EngineConfig, Polarity, Target, TargetSpec};
use crate::error::{Error, Result};
use crate::generator::RemoteConfig;
use crate::models::{BoostParams, Property, SeparabilityConfig};
use crate::stats::TsneConfig;

/// A campaign, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub name: String,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub features: FeatureSampling,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub separability: SeparabilityConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub embed: EmbedConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub functions: Vec<usize>,
    /// Instances `1..=instances` of every function.
    pub instances: usize,
    pub dims: Vec<usize>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            functions: (1..=24).collect(),
            instances: 5,
            dims: vec![2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub properties: Vec<Property>,
    pub boost: BoostParams,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            properties: Property::LEARNED.to_vec(),
            boost: BoostParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Offline,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Group labels such as `multimodality`, `multimodality+separability` or
    /// `not_basin_size_homogeneity+multimodality`. Empty means every group.
    pub groups: Vec<String>,
    pub problems_per_group: usize,
    /// Engine runs per group before giving up on the quota.
    pub max_runs_per_group: usize,
    pub retention_threshold: f64,
    pub generator: GeneratorKind,
    pub remote: RemoteConfig,
    pub engine: EngineConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            groups: Vec::new(),
            problems_per_group: 55,
            max_runs_per_group: 200,
            retention_threshold: 0.5,
            generator: GeneratorKind::Offline,
            remote: RemoteConfig::default(),
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub resolution: usize,
    pub contrast_samples: usize,
    /// Library to verify; defaults to the campaign's `library.jsonl`.
    pub library: Option<PathBuf>,
    /// Also verify BBOB corpus instances (at d = 2) as a reference group.
    pub include_bbob: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            resolution: crate::basin::DEFAULT_RESOLUTION,
            contrast_samples: crate::basin::CONTRAST_SAMPLES,
            library: None,
            include_bbob: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub tsne: TsneConfig,
    pub include_generated: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            tsne: TsneConfig::default(),
            include_generated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub thresholds: Vec<f64>,
    pub histogram_bins: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.5, 0.9, 0.99],
            histogram_bins: 10,
        }
    }
}

impl CampaignConfig {
    /// Reads and validates a config file; `output_dir` becomes absolute.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text, seed_override)?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        if let Some(s) = seed_override {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.corpus.functions.is_empty() || self.corpus.instances == 0 {
            return bad("corpus needs at least one function and one instance".into());
        }
        if let Some(f) = self.corpus.functions.iter().find(|f| !(1..=24).contains(*f)) {
            return bad(format!("BBOB function id {f} outside 1..=24"));
        }
        if self.corpus.dims.is_empty() || self.corpus.dims.iter().any(|&d| d < 2) {
            return bad("corpus dims must be non-empty and each at least 2".into());
        }
        if self.features.per_dim == 0 || self.features.repetitions == 0 {
            return bad("features.per_dim and features.repetitions must be positive".into());
        }
        if self.models.properties.contains(&Property::Separability) {
            return bad("separability is scored analytically and cannot be learned".into());
        }
        let g = &self.generation;
        if !(0.0..1.0).contains(&g.retention_threshold) {
            return bad(format!("retention_threshold {} outside [0, 1)", g.retention_threshold));
        }
        if g.problems_per_group == 0 || g.max_runs_per_group == 0 {
            return bad("problems_per_group and max_runs_per_group must be positive".into());
        }
        g.engine.validate()?;
        for spec in self.groups()? {
            for t in &spec.targets {
                if t.property != Property::Separability && !self.models.properties.contains(&t.property) {
                    return bad(format!("group {} needs a model for {}", spec.label(), t.property));
                }
            }
        }
        if self.verify.resolution < 3 {
            return bad("verify.resolution must be at least 3".into());
        }
        if self.report.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad("report thresholds must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Target groups, in config order (or the full enumeration).
    pub fn groups(&self) -> Result<Vec<TargetSpec>> {
        if self.generation.groups.is_empty() {
            return Ok(TargetSpec::all_groups());
        }
        self.generation.groups.iter().map(|l| parse_group(l)).collect()
    }

    /// SHA-256 of the resolved config (output directory excluded so a moved
    /// campaign keeps its identity).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        sha256_hex(&json)
    }
}

/// Parses a group label produced by [`TargetSpec::label`].
pub fn parse_group(label: &str) -> Result<TargetSpec> {
    let targets = label
        .split('+')
        .map(|part| {
            let (polarity, name) = match part.strip_prefix("not_") {
                Some(rest) => (Polarity::Absent, rest),
                None => (Polarity::Present, part),
            };
            let property: Property = name
                .parse()
                .map_err(|_| Error::Config(format!("unknown property `{name}` in group `{label}`")))?;
            Ok(Target { property, polarity })
        })
        .collect::<Result<Vec<_>>>()?;
    let category = match (targets.len(), targets.iter().any(|t| t.polarity == Polarity::Absent)) {
        (1, false) => Category::Single,
        (2, false) => Category::Pair,
        (2, true) => Category::NotCombo,
        _ => return Err(Error::Config(format!("unsupported group `{label}`"))),
    };
    let spec = TargetSpec { targets, category };
    spec.validate()
        .map_err(|e| Error::Config(format!("group `{label}`: {e}")))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"t\"\noutput_dir = \"out\"\n";

    #[test]
    fn defaults_fill_a_minimal_config() {
        let c = CampaignConfig::from_toml(MINIMAL, None).unwrap();
        assert_eq!(c.generation.problems_per_group, 55);
        assert_eq!(c.generation.retention_threshold, 0.5);
        assert_eq!(c.groups().unwrap().len(), 23);
        assert_eq!(c.report.thresholds, vec![0.5, 0.9, 0.99]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}[generation]\nquota = 3\n");
        assert!(matches!(CampaignConfig::from_toml(&text, None), Err(Error::Config(_))));
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = CampaignConfig::from_toml(MINIMAL, None).unwrap();
        let b = CampaignConfig::from_toml(MINIMAL, Some(7)).unwrap();
        assert_eq!(b.seed, 7);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), CampaignConfig::from_toml(MINIMAL, None).unwrap().hash());
    }

    #[test]
    fn group_labels_round_trip() {
        for spec in TargetSpec::all_groups() {
            assert_eq!(parse_group(&spec.label()).unwrap(), spec);
        }
        assert!(parse_group("multimodality+multimodality").is_err());
        assert!(parse_group("not_multimodality+separability").is_err());
        assert!(parse_group("bumpiness").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for extra in [
            "[corpus]\nfunctions = [25]\n",
            "[generation]\nretention_threshold = 1.5\n",
            "[generation.engine]\nmu = 4\nlambda = 2\n",
            "[models]\nproperties = [\"separability\"]\n",
        ] {
            let text = format!("{MINIMAL}{extra}");
            assert!(
                matches!(CampaignConfig::from_toml(&text, None), Err(Error::Config(_))),
                "{extra}"
            );
        }
    }
}
