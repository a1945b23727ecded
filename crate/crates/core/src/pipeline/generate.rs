use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::train::load_scorer;
use super::{
    feature_table_bytes, hash_json, library_bytes, read_file, read_jsonl, string_tag, write_jsonl,
    CampaignConfig, FeatureRow, GeneratorKind, Manifest, ProblemRecord, ProblemSource, Provenance,
};
use crate::engine::{AuditLog, AuditRecord, Engine, ProposalSource, TargetSpec};
use crate::error::{Error, Result};
use crate::expr::{parse, GRAMMAR_VERSION};
use crate::generator::{Generator, OfflineGenerator, RemoteGenerator, GENOME_DIM, PROMPT_VERSION};
use crate::rng::derive_seed;

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const LIBRARY_FILE: &str = "library.jsonl";
pub const GENERATED_TABLE: &str = "features/generated.csv";
const SUMMARY_FILE: &str = "generate_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub group: String,
    pub runs: usize,
    pub candidates: usize,
    pub retained: usize,
    pub quota_met: bool,
    pub proposals: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub groups: Vec<GroupOutcome>,
    #[serde(default)]
    pub reused: bool,
}

fn inputs_hash(cfg: &CampaignConfig, train: &Manifest) -> String {
    hash_json(&json!({
        "seed": cfg.seed,
        "separability": cfg.separability,
        "generation": cfg.generation,
        "train": train.files,
    }))
}

pub(crate) fn audit_path(group: &str, run: usize) -> String {
    format!("audit/{group}/run_{run}.jsonl")
}

/// Highest raw fitness, ties broken by the lowest lineage.
fn best_of_run(records: &[AuditRecord]) -> Option<&AuditRecord> {
    records
        .iter()
        .filter(|r| r.raw_fitness.is_some())
        .min_by(|a, b| {
            b.raw_fitness
                .unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&a.raw_fitness.unwrap_or(f64::NEG_INFINITY))
                .then(a.lineage.cmp(&b.lineage))
        })
}

fn make_generator(cfg: &CampaignConfig, debug_llm: bool) -> Box<dyn Generator> {
    match cfg.generation.generator {
        GeneratorKind::Offline => Box::new(OfflineGenerator::default()),
        GeneratorKind::Remote => Box::new(RemoteGenerator::from_env(cfg.generation.remote.clone(), debug_llm)),
    }
}

/// Runs the engine per target group until the group's quota of retained
/// problems is met or its run budget is spent.
pub fn cmd_generate(cfg: &CampaignConfig, debug_llm: bool) -> Result<GenerateSummary> {
    let root = cfg.output_dir.as_path();
    let train = Manifest::load(root, "train")?;
    let inputs = inputs_hash(cfg, &train);
    if Manifest::reusable(root, "generate", &inputs).is_some() {
        let mut s: GenerateSummary = serde_json::from_str(&read_file(&root.join(SUMMARY_FILE))?)?;
        log::info!("generate: inputs unchanged, reusing {}", root.display());
        s.reused = true;
        return Ok(s);
    }
    let scorer = load_scorer(cfg)?;
    let generator = make_generator(cfg, debug_llm);
    let gen = &cfg.generation;
    let threshold = gen.retention_threshold;
    let mut manifest = Manifest::new("generate", cfg, inputs);
    let mut candidates: Vec<ProblemRecord> = Vec::new();
    let mut outcomes = Vec::new();
    let mut upstream_down = Vec::new();

    for spec in cfg.groups()? {
        let label = spec.label();
        let mut outcome = GroupOutcome {
            group: label.clone(),
            runs: 0,
            candidates: 0,
            retained: 0,
            quota_met: false,
            proposals: 0,
            fallbacks: 0,
        };
        for run in 0..gen.max_runs_per_group {
            if outcome.retained >= gen.problems_per_group {
                break;
            }
            let rel = audit_path(&label, run);
            let path = root.join(&rel);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut engine_cfg = gen.engine.clone();
            engine_cfg.seed = derive_seed(cfg.seed, &[string_tag(&label), run as u64]);
            {
                let audit = AuditLog::create(&path)?;
                Engine {
                    config: engine_cfg.clone(),
                    spec: spec.clone(),
                    scorer: &scorer,
                    generator: generator.as_ref(),
                    audit: Some(&audit),
                }
                .run()?;
            }
            manifest.record(root, &rel)?;
            outcome.runs += 1;
            let records: Vec<AuditRecord> = read_jsonl(&path)?;
            outcome.proposals += records.len();
            outcome.fallbacks += records.iter().filter(|r| r.source == ProposalSource::Fallback).count();
            let Some(best) = best_of_run(&records) else {
                log::warn!("{label} run {run}: no candidate could be scored");
                continue;
            };
            let record = problem_record(cfg, &spec, best, run, engine_cfg.seed, &generator.name());
            outcome.candidates += 1;
            if record.retained {
                outcome.retained += 1;
            }
            log::info!(
                "{label} run {run}: best F = {:.3}, retained {}/{}",
                best.raw_fitness.unwrap_or(f64::NAN),
                outcome.retained,
                gen.problems_per_group
            );
            candidates.push(record);
        }
        outcome.quota_met = outcome.retained >= gen.problems_per_group;
        if !outcome.quota_met {
            log::warn!(
                "{label}: quota not met ({} of {} after {} runs)",
                outcome.retained,
                gen.problems_per_group,
                outcome.runs
            );
        }
        if gen.generator == GeneratorKind::Remote && outcome.proposals > 0 && outcome.fallbacks == outcome.proposals {
            upstream_down.push(label.clone());
        }
        outcomes.push(outcome);
    }

    let library: Vec<ProblemRecord> = candidates.iter().filter(|r| r.retained).cloned().collect();
    manifest.write(root, CANDIDATES_FILE, &write_jsonl(&candidates)?)?;
    manifest.write(root, LIBRARY_FILE, &library_bytes(&library, threshold)?)?;
    let rows = generated_features(&scorer, &library)?;
    manifest.write(root, GENERATED_TABLE, &feature_table_bytes(&rows)?)?;
    let summary = GenerateSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        generator: generator.name(),
        groups: outcomes,
        reused: false,
    };
    manifest.write(root, SUMMARY_FILE, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    manifest.save(root)?;
    if !upstream_down.is_empty() {
        return Err(Error::Upstream(format!(
            "every proposal fell back locally for {}",
            upstream_down.join(", ")
        )));
    }
    Ok(summary)
}

fn problem_record(
    cfg: &CampaignConfig,
    spec: &TargetSpec,
    best: &AuditRecord,
    run: usize,
    run_seed: u64,
    generator: &str,
) -> ProblemRecord {
    let label = spec.label();
    let mut record = ProblemRecord {
        id: format!("{label}/run{run}/l{}", best.lineage),
        group: label,
        category: Some(spec.category),
        targets: Some(spec.clone()),
        source: ProblemSource::Expr {
            expr: best.expr.clone(),
        },
        dims: cfg.corpus.dims.clone(),
        scores: best.scores.clone(),
        raw_fitness: best.raw_fitness,
        shared_fitness: best.shared_fitness,
        retained: false,
        provenance: Some(Provenance {
            seed: run_seed,
            generator: generator.to_string(),
            prompt_version: PROMPT_VERSION.into(),
            grammar_version: GRAMMAR_VERSION.into(),
            config_hash: cfg.hash(),
            run,
            generation: best.generation,
            lineage: best.lineage,
        }),
        verification: None,
    };
    record.retained = record.passes(cfg.generation.retention_threshold);
    record
}

/// Raw features of library problems, for the joint embedding.
fn generated_features(
    scorer: &crate::engine::Scorer,
    library: &[ProblemRecord],
) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for r in library {
        let ProblemSource::Expr { expr } = &r.source else {
            continue;
        };
        let tree = parse(expr, GENOME_DIM)?;
        match scorer.features(&tree) {
            Ok(features) => rows.push(FeatureRow {
                id: r.id.clone(),
                source: "generated".into(),
                group: r.group.clone(),
                features,
            }),
            Err(e) => log::warn!("{}: features unavailable: {e}", r.id),
        }
    }
    Ok(rows)
}

/// Every audit record of the campaign, keyed by group.
pub(crate) fn audit_records(cfg: &CampaignConfig) -> Result<BTreeMap<String, Vec<AuditRecord>>> {
    let summary: GenerateSummary = serde_json::from_str(&read_file(&cfg.output_dir.join(SUMMARY_FILE))?)?;
    let mut out = BTreeMap::new();
    for g in &summary.groups {
        let mut all = Vec::new();
        for run in 0..g.runs {
            all.extend(read_jsonl::<AuditRecord>(&cfg.output_dir.join(audit_path(&g.group, run)))?);
        }
        out.insert(g.group.clone(), all);
    }
    Ok(out)
}

pub(crate) fn load_summary(cfg: &CampaignConfig) -> Result<GenerateSummary> {
    Ok(serde_json::from_str(&read_file(&cfg.output_dir.join(SUMMARY_FILE))?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ProposalSource;

    fn rec(lineage: u64, f: Option<f64>) -> AuditRecord {
        AuditRecord {
            generation: 0,
            lineage,
            parent: None,
            expr: "x1".into(),
            source: ProposalSource::Generator,
            scores: BTreeMap::new(),
            raw_fitness: f,
            shared_fitness: f,
            sigma_share: 1.0,
            sigma_pool: "offspring".into(),
            failure: None,
            selected: false,
        }
    }

    #[test]
    fn best_of_run_prefers_fitness_then_lineage() {
        let rs = vec![rec(3, Some(0.7)), rec(1, None), rec(5, Some(0.9)), rec(2, Some(0.9))];
        assert_eq!(best_of_run(&rs).unwrap().lineage, 2);
        assert!(best_of_run(&[rec(1, None)]).is_none());
    }
}
