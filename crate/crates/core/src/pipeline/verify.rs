use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::generate::LIBRARY_FILE;
use super::{hash_json, read_jsonl, resolve, string_tag, write_jsonl, CampaignConfig, Manifest, ProblemRecord, VerificationMetrics};
use crate::basin::{assign_basins, basin_size_ratio, optima_contrast};
use crate::error::{Error, Result};
use crate::models::separability_score;
use crate::rng::derive_seed;
use crate::stats::mann_whitney_u;

const VERIFY_DIM: usize = 2;
pub const METRICS: [&str; 3] = ["basin_count", "contrast", "size_ratio"];

/// One line of `verify/report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub id: String,
    pub group: String,
    pub basin_count: usize,
    pub contrast: Option<f64>,
    pub size_ratio: Option<f64>,
    pub separability_p: f64,
    pub exclusions: String,
}

/// Two-sided Mann-Whitney test of one metric between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTest {
    pub metric: String,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u: Option<f64>,
    pub p: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub config_hash: String,
    pub seed: u64,
    pub resolution: usize,
    pub library: String,
    pub rows: Vec<VerificationRow>,
    pub reference: Vec<VerificationRow>,
    pub tests: Vec<GroupTest>,
}

/// Basin metrics and separability of `record` at d = 2.
pub fn verify_record(record: &ProblemRecord, resolution: usize, contrast_samples: usize, cfg: &CampaignConfig) -> Result<VerificationMetrics> {
    let f = record.source.objective(VERIFY_DIM)?;
    let map = assign_basins(&f, resolution)?;
    let mut exclusions = BTreeMap::new();
    let seed = derive_seed(cfg.seed, &[string_tag(&record.id)]);
    let contrast = match optima_contrast(&map, &f, contrast_samples, seed) {
        Ok(c) => Some(c),
        Err(e) => {
            exclusions.insert("contrast".to_string(), e.to_string());
            None
        }
    };
    let size_ratio = match basin_size_ratio(&map) {
        Ok(r) => Some(r),
        Err(e) => {
            exclusions.insert("size_ratio".to_string(), e.to_string());
            None
        }
    };
    Ok(VerificationMetrics {
        resolution,
        basin_count: map.count(),
        contrast,
        size_ratio,
        separability_p: separability_score(&f, &cfg.separability).p,
        exclusions,
    })
}

fn row(r: &ProblemRecord, m: &VerificationMetrics) -> VerificationRow {
    VerificationRow {
        id: r.id.clone(),
        group: r.group.clone(),
        basin_count: m.basin_count,
        contrast: m.contrast,
        size_ratio: m.size_ratio,
        separability_p: m.separability_p,
        exclusions: m
            .exclusions
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn metric(r: &VerificationRow, name: &str) -> Option<f64> {
    match name {
        "basin_count" => Some(r.basin_count as f64),
        "contrast" => r.contrast,
        "size_ratio" => r.size_ratio,
        _ => None,
    }
}

/// Pairwise tests of every metric between every two groups.
pub fn group_tests(rows: &[VerificationRow]) -> Vec<GroupTest> {
    let mut groups: BTreeMap<&str, Vec<&VerificationRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.group.as_str()).or_default().push(r);
    }
    let names: Vec<&str> = groups.keys().copied().collect();
    let mut out = Vec::new();
    for name in METRICS {
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let va: Vec<f64> = groups[a].iter().filter_map(|r| metric(r, name)).collect();
                let vb: Vec<f64> = groups[b].iter().filter_map(|r| metric(r, name)).collect();
                let (u, p, note) = match mann_whitney_u(&va, &vb) {
                    Ok(t) => (Some(t.u), Some(t.p), format!("{:?}", t.method).to_lowercase()),
                    Err(e) => (None, None, e.to_string()),
                };
                out.push(GroupTest {
                    metric: name.into(),
                    group_a: a.to_string(),
                    group_b: b.to_string(),
                    n_a: va.len(),
                    n_b: vb.len(),
                    u,
                    p,
                    note,
                });
            }
        }
    }
    out
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Serde(e.to_string()))
}

fn library_path(cfg: &CampaignConfig) -> PathBuf {
    match &cfg.verify.library {
        Some(p) => resolve(&cfg.output_dir, p),
        None => cfg.output_dir.join(LIBRARY_FILE),
    }
}

/// Verifies every library record (and, optionally, the BBOB corpus as a
/// reference group) at d = 2.
pub fn cmd_verify(cfg: &CampaignConfig) -> Result<VerifySummary> {
    let root = cfg.output_dir.as_path();
    let path = library_path(cfg);
    let library: Vec<ProblemRecord> = read_jsonl(&path)?;
    if library.is_empty() {
        return Err(Error::InvalidArgument(format!("library {} is empty", path.display())));
    }
    let reference: Vec<ProblemRecord> = if cfg.verify.include_bbob {
        cfg.corpus
            .functions
            .iter()
            .flat_map(|&f| (1..=cfg.corpus.instances).map(move |i| ProblemRecord::bbob(f, i, vec![VERIFY_DIM])))
            .collect()
    } else {
        Vec::new()
    };
    let (res, n) = (cfg.verify.resolution, cfg.verify.contrast_samples);
    let verify_all = |records: &[ProblemRecord]| -> Result<Vec<ProblemRecord>> {
        records
            .par_iter()
            .map(|r| {
                let mut r = r.clone();
                r.verification = Some(verify_record(&r, res, n, cfg)?);
                Ok(r)
            })
            .collect()
    };
    log::info!("verify: {} library records, {} reference instances at r = {res}", library.len(), reference.len());
    let library = verify_all(&library)?;
    let reference = verify_all(&reference)?;
    let rows_of = |rs: &[ProblemRecord]| -> Vec<VerificationRow> {
        rs.iter()
            .map(|r| row(r, r.verification.as_ref().expect("verified")))
            .collect()
    };
    let rows = rows_of(&library);
    let ref_rows = rows_of(&reference);
    let all: Vec<VerificationRow> = rows.iter().chain(&ref_rows).cloned().collect();
    let tests = group_tests(&all);

    let mut manifest = Manifest::new(
        "verify",
        cfg,
        hash_json(&json!({ "seed": cfg.seed, "verify": cfg.verify, "separability": cfg.separability })),
    );
    manifest.write(root, "verify/report.csv", &csv_bytes(&rows)?)?;
    if !ref_rows.is_empty() {
        manifest.write(root, "verify/reference.csv", &csv_bytes(&ref_rows)?)?;
    }
    manifest.write(root, "verify/group_tests.csv", &csv_bytes(&tests)?)?;
    manifest.write(root, "verify/library.jsonl", &write_jsonl(&library)?)?;
    let summary = VerifySummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        resolution: res,
        library: path.display().to_string(),
        rows,
        reference: ref_rows,
        tests,
    };
    manifest.write(root, "verify/report.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    manifest.save(root)?;
    Ok(summary)
}
