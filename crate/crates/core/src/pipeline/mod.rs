//! Campaign orchestration behind the CLI: `train`, `generate`, `verify`,
//! `embed` and `report`.
//!
//! A campaign is a directory. Every command reads the artifacts of earlier
//! commands from it, writes its own outputs next to them and records a
//! manifest with the config hash, the seed and the SHA-256 of each file.

mod config;
mod embed;
mod generate;
mod report;
mod train;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bbob;
use crate::ela::{FeatureMeta, FeatureVector, SCHEMA_VERSION};
use crate::engine::{Category, TargetSpec};
use crate::error::{Error, Result};
use crate::expr::{parse, GRAMMAR_VERSION};
use crate::function::ObjectiveFunction;
use crate::generator::{GENOME_DIM, PROMPT_VERSION};
use crate::models::Property;

pub use config::{
    parse_group, CampaignConfig, CorpusConfig, EmbedConfig, GenerationConfig, GeneratorKind, ModelsConfig,
    ReportConfig, VerifyConfig,
};
pub use embed::{cmd_embed, embedding_group, EmbedSummary, EMBED_GROUPS};
pub use generate::{cmd_generate, GenerateSummary, GroupOutcome, CANDIDATES_FILE, GENERATED_TABLE, LIBRARY_FILE};
pub use report::{cmd_report, histogram, success_rate, GroupReport, Histogram, ReportSummary, SweepLevel, SUCCESS_LEVEL};
pub use train::{cmd_train, load_scorer, TrainSummary, CORPUS_TABLE, SCALER_FILE};
pub use verify::{cmd_verify, group_tests, verify_record, GroupTest, VerificationRow, VerifySummary};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable 64-bit tag of a string, for seed derivation.
pub(crate) fn string_tag(s: &str) -> u64 {
    let d = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// SHA-256 of the JSON form of `value`.
pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("value serializes"))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Files written by a command, with their hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    /// Hash of the config sections this command depends on; a rerun with the
    /// same value and intact files is skipped.
    pub inputs_hash: String,
    pub seed: u64,
    pub ela_schema: String,
    pub grammar_version: String,
    pub prompt_version: String,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub(crate) fn new(command: &str, config: &CampaignConfig, inputs_hash: String) -> Self {
        Self {
            command: command.into(),
            config_hash: config.hash(),
            inputs_hash,
            seed: config.seed,
            ela_schema: SCHEMA_VERSION.into(),
            grammar_version: GRAMMAR_VERSION.into(),
            prompt_version: PROMPT_VERSION.into(),
            files: BTreeMap::new(),
        }
    }

    /// Writes `bytes` under `root/rel` and records its hash.
    pub(crate) fn write(&mut self, root: &Path, rel: &str, bytes: &[u8]) -> Result<()> {
        write_file(&root.join(rel), bytes)?;
        self.files.insert(rel.into(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file that was written by other means.
    pub(crate) fn record(&mut self, root: &Path, rel: &str) -> Result<()> {
        let path = root.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.files.insert(rel.into(), sha256_hex(&bytes));
        Ok(())
    }

    pub(crate) fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(format!("{}_manifest.json", self.command));
        write_file(&path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn load(root: &Path, command: &str) -> Result<Self> {
        let text = read_file(&root.join(format!("{command}_manifest.json")))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The previous manifest of `command` when it is intact and was built
    /// from the same inputs.
    pub(crate) fn reusable(root: &Path, command: &str, inputs_hash: &str) -> Option<Self> {
        let m = Self::load(root, command).ok()?;
        (m.inputs_hash == inputs_hash && m.is_intact(root)).then_some(m)
    }

    /// True when every recorded file still exists with the recorded hash.
    pub(crate) fn is_intact(&self, root: &Path) -> bool {
        self.files.iter().all(|(rel, hash)| {
            std::fs::read(root.join(rel)).is_ok_and(|b| &sha256_hex(&b) == hash)
        })
    }
}

/// Where a problem comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSource {
    Expr { expr: String },
    Bbob { function_id: usize, instance_id: usize },
}

impl ProblemSource {
    pub fn objective(&self, dim: usize) -> Result<ObjectiveFunction> {
        match self {
            ProblemSource::Expr { expr } => Ok(parse(expr, GENOME_DIM)?.to_objective(dim)?),
            ProblemSource::Bbob {
                function_id,
                instance_id,
            } => Ok(bbob::instantiate(*function_id, *instance_id, dim)?.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
    pub prompt_version: String,
    pub grammar_version: String,
    pub config_hash: String,
    pub run: usize,
    pub generation: usize,
    pub lineage: u64,
}

/// One generated (or reference) problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    pub group: String,
    pub category: Option<Category>,
    pub targets: Option<TargetSpec>,
    pub source: ProblemSource,
    pub dims: Vec<usize>,
    pub scores: BTreeMap<Property, f64>,
    pub raw_fitness: Option<f64>,
    pub shared_fitness: Option<f64>,
    pub retained: bool,
    pub provenance: Option<Provenance>,
    /// Filled in by `verify`.
    #[serde(default)]
    pub verification: Option<VerificationMetrics>,
}

/// Basin and separability metrics of one problem at d = 2. A metric that
/// could not be computed is `None` with the reason in `exclusions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationMetrics {
    pub resolution: usize,
    pub basin_count: usize,
    pub contrast: Option<f64>,
    pub size_ratio: Option<f64>,
    pub separability_p: f64,
    pub exclusions: BTreeMap<String, String>,
}

impl ProblemRecord {
    /// Combined fitness and every targeted (polarity-oriented) score exceed
    /// `threshold`.
    pub fn passes(&self, threshold: f64) -> bool {
        let Some(spec) = &self.targets else {
            return false;
        };
        self.raw_fitness.is_some_and(|f| f > threshold)
            && spec.targets.iter().all(|t| {
                self.scores
                    .get(&t.property)
                    .is_some_and(|s| t.oriented(*s) > threshold)
            })
    }

    pub fn bbob(function_id: usize, instance_id: usize, dims: Vec<usize>) -> Self {
        Self {
            id: format!("bbob-f{function_id}-i{instance_id}"),
            group: "bbob".into(),
            category: None,
            targets: None,
            source: ProblemSource::Bbob {
                function_id,
                instance_id,
            },
            dims,
            scores: BTreeMap::new(),
            raw_fitness: None,
            shared_fitness: None,
            retained: false,
            provenance: None,
            verification: None,
        }
    }
}

pub(crate) fn write_jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_file(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Writes a library, refusing records flagged retained that do not pass.
pub(crate) fn library_bytes(records: &[ProblemRecord], threshold: f64) -> Result<Vec<u8>> {
    if let Some(bad) = records.iter().find(|r| r.retained && !r.passes(threshold)) {
        return Err(Error::InvalidArgument(format!(
            "record {} is flagged retained but does not pass threshold {threshold}",
            bad.id
        )));
    }
    write_jsonl(records)
}

/// A row of a feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub source: String,
    pub group: String,
    pub features: FeatureVector,
}

const FIXED_COLUMNS: [&str; 4] = ["id", "source", "group", "schema_version"];

pub(crate) fn feature_table_bytes(rows: &[FeatureRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names = rows.first().map(|r| r.features.names.clone()).unwrap_or_default();
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in rows {
        if r.features.names != names {
            return Err(Error::SchemaMismatch(format!("row {} has a different schema", r.id)));
        }
        let mut rec = vec![
            r.id.clone(),
            r.source.clone(),
            r.group.clone(),
            r.features.meta.schema_version.clone(),
        ];
        rec.extend(r.features.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Serde(e.to_string()))
}

pub(crate) fn read_feature_table(path: &Path, meta: &FeatureMeta) -> Result<Vec<FeatureRow>> {
    let text = read_file(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(Error::SchemaMismatch(format!("{} is not a feature table", path.display())));
    }
    let names: Vec<String> = header[FIXED_COLUMNS.len()..].to_vec();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if &rec[3] != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "{} uses feature schema {}, expected {SCHEMA_VERSION}",
                path.display(),
                &rec[3]
            )));
        }
        let values = rec
            .iter()
            .skip(FIXED_COLUMNS.len())
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            id: rec[0].to_string(),
            source: rec[1].to_string(),
            group: rec[2].to_string(),
            features: FeatureVector {
                names: names.clone(),
                values,
                meta: meta.clone(),
            },
        });
    }
    Ok(rows)
}

pub(crate) fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}
