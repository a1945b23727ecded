use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    adaptive_sigma, compose_feedback, raw_fitness, select_comma, shared_fitness, Failure,
    Individual, ProposalSource, Scorer, TargetSpec, WORST,
};
use crate::ela::Standardized;
use crate::error::{Error, Result};
use crate::expr::{mutate_expr, parse, random_tree, MutationStrength};
use crate::generator::{build_prompt, Generator, PromptParts, ProposalRequest, GENOME_DIM};
use crate::models::Property;
use crate::rng::{derive_seed, seed_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub mu: usize,
    pub lambda: usize,
    pub max_generations: usize,
    pub seed: u64,
    pub sharing: bool,
    /// Stop once a parent reaches this raw fitness.
    pub target_fitness: Option<f64>,
    pub max_tokens: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mu: 8,
            lambda: 16,
            max_generations: 20,
            seed: 0,
            sharing: true,
            target_fitness: None,
            max_tokens: 1024,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 || self.lambda < self.mu {
            return Err(Error::Config(format!(
                "need lambda >= mu >= 1, got mu = {} and lambda = {}",
                self.mu, self.lambda
            )));
        }
        Ok(())
    }
}

/// One JSON line per individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub generation: usize,
    pub lineage: u64,
    pub parent: Option<u64>,
    pub expr: String,
    pub source: ProposalSource,
    pub scores: BTreeMap<Property, f64>,
    pub raw_fitness: Option<f64>,
    pub shared_fitness: Option<f64>,
    pub sigma_share: f64,
    pub sigma_pool: String,
    pub failure: Option<Failure>,
    pub selected: bool,
}

/// Append-only JSON-lines log; writes are serialized.
pub struct AuditLog {
    sink: Mutex<Box<dyn Write + Send>>,
    written: Mutex<usize>,
}

impl AuditLog {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_writer(Box::new(BufWriter::new(f))))
    }

    pub fn from_writer(sink: Box<dyn Write + Send>) -> Self {
        Self {
            sink: Mutex::new(sink),
            written: Mutex::new(0),
        }
    }

    pub fn append(&self, records: &[AuditRecord]) -> Result<()> {
        let mut sink = self.sink.lock().expect("audit log poisoned");
        for r in records {
            serde_json::to_writer(&mut *sink, r)?;
            sink.write_all(b"\n").map_err(|e| Error::io("audit log", e))?;
        }
        sink.flush().map_err(|e| Error::io("audit log", e))?;
        *self.written.lock().expect("audit log poisoned") += records.len();
        Ok(())
    }

    pub fn len(&self) -> usize {
        *self.written.lock().expect("audit log poisoned")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub sigma_share: f64,
    pub best_raw: f64,
    pub mean_raw: f64,
    pub failures: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    /// Index of the last completed generation.
    pub generation: usize,
    pub parents: Vec<Individual>,
    pub offspring: Vec<Individual>,
    pub next_lineage: u64,
    pub history: Vec<GenerationSummary>,
}

pub struct Engine<'a> {
    pub config: EngineConfig,
    pub spec: TargetSpec,
    pub scorer: &'a Scorer,
    pub generator: &'a dyn Generator,
    pub audit: Option<&'a AuditLog>,
}

struct Proposal {
    expr: String,
    parent: Option<u64>,
    source: ProposalSource,
}

impl Engine<'_> {
    /// Generation 0: `lambda` independent proposals, then selection.
    pub fn initialize(&self) -> Result<EngineState> {
        self.config.validate()?;
        self.spec.validate()?;
        let state = EngineState {
            generation: 0,
            parents: Vec::new(),
            offspring: Vec::new(),
            next_lineage: 1,
            history: Vec::new(),
        };
        self.step(state, 0)
    }

    pub fn run_generation(&self, state: EngineState) -> Result<EngineState> {
        if state.parents.is_empty() {
            return Err(Error::InvalidArgument("engine state has no parents".into()));
        }
        let g = state.generation + 1;
        self.step(state, g)
    }

    /// Initializes and runs until `max_generations` or the target fitness.
    pub fn run(&self) -> Result<EngineState> {
        let mut state = self.initialize()?;
        while state.generation < self.config.max_generations {
            if self.target_reached(&state) {
                break;
            }
            state = self.run_generation(state)?;
        }
        Ok(state)
    }

    fn target_reached(&self, state: &EngineState) -> bool {
        self.config
            .target_fitness
            .is_some_and(|t| state.parents.iter().any(|p| p.raw_fitness >= t))
    }

    fn fallback_expr(&self, parent: Option<&str>, seed: u64) -> String {
        let mut rng = seed_rng(seed);
        let tree = parent.and_then(|p| parse(p, GENOME_DIM).ok());
        match tree {
            Some(t) => {
                let strength = if rng.random::<bool>() {
                    MutationStrength::Subtree
                } else {
                    MutationStrength::Point
                };
                mutate_expr(&t, seed, strength).to_canonical_text()
            }
            None => random_tree(&mut rng, GENOME_DIM, 4).to_canonical_text(),
        }
    }

    fn propose(&self, parents: &[Individual], generation: usize, slot: usize) -> Proposal {
        let seed = self.config.seed;
        let parent = (!parents.is_empty()).then(|| {
            let mut rng = seed_rng(derive_seed(seed, &[generation as u64, slot as u64, 1]));
            &parents[rng.random_range(0..parents.len())]
        });
        let targets = self.spec.descriptions();
        let feedback = parent.map(|p| compose_feedback(p, &self.spec));
        let request = ProposalRequest {
            prompt: build_prompt(&PromptParts {
                targets: &targets,
                parent: parent.map(|p| p.expr.as_str()),
                feedback: feedback.as_deref(),
            }),
            parent: parent.map(|p| p.expr.clone()),
            dims: self.scorer.dims.clone(),
            max_tokens: self.config.max_tokens,
            seed: derive_seed(seed, &[generation as u64, slot as u64, 2]),
        };
        let proposed = match self.generator.propose(&request) {
            Ok(r) => match r.tree() {
                Some(t) => Some(t.to_canonical_text()),
                None => {
                    log::warn!("slot {slot}: no usable expression ({:?})", r.status);
                    None
                }
            },
            Err(e) => {
                log::warn!("slot {slot}: generator failed: {e}");
                None
            }
        };
        let (expr, source) = match proposed {
            Some(e) => (e, ProposalSource::Generator),
            None => (
                self.fallback_expr(
                    parent.map(|p| p.expr.as_str()),
                    derive_seed(seed, &[generation as u64, slot as u64, 3]),
                ),
                ProposalSource::Fallback,
            ),
        };
        Proposal {
            expr,
            parent: parent.map(|p| p.lineage),
            source,
        }
    }

    fn step(&self, state: EngineState, generation: usize) -> Result<EngineState> {
        let lambda = self.config.lambda;
        let cap = self.generator.max_in_flight().clamp(1, lambda);
        let parents = &state.parents;
        let mut proposals = Vec::with_capacity(lambda);
        for chunk in (0..lambda).collect::<Vec<_>>().chunks(cap) {
            let batch: Vec<Proposal> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&slot| s.spawn(move || self.propose(parents, generation, slot)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("proposal thread panicked"))
                    .collect()
            });
            proposals.extend(batch);
        }

        let mut offspring: Vec<Individual> = proposals
            .into_par_iter()
            .enumerate()
            .map(|(slot, p)| self.score(p, generation, state.next_lineage + slot as u64))
            .collect();

        let feats: Vec<Option<&Standardized>> = offspring.iter().map(|i| i.features.as_ref()).collect();
        let present: Vec<&Standardized> = feats.iter().flatten().copied().collect();
        let sigma = adaptive_sigma(&present)?;
        let fitness: Vec<f64> = offspring.iter().map(|i| i.raw_fitness).collect();
        let shared = if self.config.sharing {
            shared_fitness(&fitness, &feats, sigma)?
        } else {
            fitness
        };
        for (ind, s) in offspring.iter_mut().zip(shared) {
            ind.shared_fitness = s;
        }

        let parents = select_comma(&offspring, self.config.mu)?;
        if let Some(log) = self.audit {
            let chosen: Vec<u64> = parents.iter().map(|p| p.lineage).collect();
            let records: Vec<AuditRecord> = offspring
                .iter()
                .map(|i| AuditRecord {
                    generation,
                    lineage: i.lineage,
                    parent: i.parent,
                    expr: i.expr.clone(),
                    source: i.source,
                    scores: i.scores.clone(),
                    raw_fitness: i.is_scored().then_some(i.raw_fitness),
                    shared_fitness: i.is_scored().then_some(i.shared_fitness),
                    sigma_share: sigma,
                    sigma_pool: "offspring".into(),
                    failure: i.failure.clone(),
                    selected: chosen.contains(&i.lineage),
                })
                .collect();
            log.append(&records)?;
        }

        let scored: Vec<f64> = offspring.iter().filter(|i| i.is_scored()).map(|i| i.raw_fitness).collect();
        let mut history = state.history;
        history.push(GenerationSummary {
            generation,
            sigma_share: sigma,
            best_raw: scored.iter().copied().fold(WORST, f64::max),
            mean_raw: if scored.is_empty() {
                WORST
            } else {
                scored.iter().sum::<f64>() / scored.len() as f64
            },
            failures: offspring.len() - scored.len(),
            fallbacks: offspring.iter().filter(|i| i.source == ProposalSource::Fallback).count(),
        });
        Ok(EngineState {
            generation,
            parents,
            next_lineage: state.next_lineage + lambda as u64,
            offspring,
            history,
        })
    }

    fn score(&self, p: Proposal, generation: usize, lineage: u64) -> Individual {
        let mut ind = Individual {
            lineage,
            parent: p.parent,
            generation,
            expr: p.expr,
            source: p.source,
            features: None,
            scores: BTreeMap::new(),
            separability: None,
            raw_fitness: WORST,
            shared_fitness: WORST,
            failure: None,
        };
        let tree = match parse(&ind.expr, GENOME_DIM) {
            Ok(t) => t,
            Err(e) => {
                ind.failure = Some(Failure {
                    stage: "parse".into(),
                    message: e.to_string(),
                });
                return ind;
            }
        };
        match self.scorer.evaluate(&tree, &self.spec) {
            Ok(ev) => {
                let per_target: Vec<_> = self
                    .spec
                    .targets
                    .iter()
                    .map(|t| (*t, ev.scores[&t.property]))
                    .collect();
                ind.raw_fitness = raw_fitness(&per_target).expect("spec has targets");
                ind.shared_fitness = ind.raw_fitness;
                ind.features = Some(ev.features);
                ind.scores = ev.scores;
                ind.separability = ev.separability;
            }
            Err(f) => ind.failure = Some(f),
        }
        ind
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbob;
    use crate::ela::{features_across_dims, fit_scaler, FeatureSampling};
    use crate::generator::OfflineGenerator;
    use crate::models::{
        binarize_labels, train_property_model, BoostParams, PropertyLabelTable, SeparabilityConfig,
    };
    use proptest::prelude::*;
    use std::sync::{Arc, OnceLock};

    fn toy_scorer() -> &'static Scorer {
        static SCORER: OnceLock<Scorer> = OnceLock::new();
        SCORER.get_or_init(|| {
            let sampling = FeatureSampling {
                per_dim: 25,
                repetitions: 1,
            };
            let fids: Vec<usize> = (1..=24).collect();
            let raw: Vec<_> = fids
                .iter()
                .map(|&fid| {
                    features_across_dims(&[2], sampling, 3, |d| Ok(bbob::instantiate(fid, 1, d)?.0))
                        .unwrap()
                })
                .collect();
            let scaler = fit_scaler(&raw).unwrap();
            let rows: Vec<_> = raw.iter().map(|v| scaler.standardize(v).unwrap()).collect();
            let labels = binarize_labels(&PropertyLabelTable::bundled(), "multimodality").unwrap();
            let y: Vec<f64> = fids.iter().map(|f| labels.labels[f] as f64).collect();
            let params = BoostParams {
                n_trees: 10,
                ..Default::default()
            };
            let model = train_property_model(Property::Multimodality, &rows, &y, &params, 0).unwrap();
            Scorer {
                scaler,
                models: [(Property::Multimodality, model)].into_iter().collect(),
                dims: vec![2],
                sampling,
                separability: SeparabilityConfig {
                    samples: 8,
                    ..Default::default()
                },
                feature_seed: 3,
            }
        })
    }

    /// Collects audit lines in memory.
    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }

        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    fn run(seed: u64, sharing: bool, generations: usize) -> (EngineState, String) {
        let buf = Shared::default();
        let log = AuditLog::from_writer(Box::new(buf.clone()));
        let generator = OfflineGenerator::default();
        let engine = Engine {
            config: EngineConfig {
                seed,
                sharing,
                max_generations: generations,
                ..Default::default()
            },
            spec: TargetSpec::single(Property::Multimodality),
            scorer: toy_scorer(),
            generator: &generator,
            audit: Some(&log),
        };
        let state = engine.run().unwrap();
        assert_eq!(log.len(), 16 * (generations + 1));
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        (state, text)
    }

    #[test]
    fn population_sizes_and_audit_growth() {
        let (state, log) = run(1, true, 2);
        assert_eq!(state.generation, 2);
        assert_eq!(state.parents.len(), 8);
        assert_eq!(state.offspring.len(), 16);
        assert_eq!(state.history.len(), 3);
        assert!(state.history.iter().all(|h| h.failures < 8), "{:?}", state.history);
        assert_eq!(log.lines().count(), 48);
        // Comma selection: every parent comes from the last offspring pool.
        assert!(state.parents.iter().all(|p| p.generation == 2));
        for ind in &state.offspring {
            assert!(ind.shared_fitness <= ind.raw_fitness);
            if ind.is_scored() {
                assert!((0.0..=1.0).contains(&ind.raw_fitness));
            }
        }
        let first: AuditRecord = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        assert_eq!(first.generation, 0);
        assert_eq!(first.sigma_pool, "offspring");
    }

    #[test]
    fn without_sharing_shared_equals_raw() {
        let (state, _) = run(2, false, 1);
        for ind in &state.offspring {
            assert_eq!(ind.shared_fitness, ind.raw_fitness);
        }
    }

    #[test]
    fn separability_targets_are_scored_analytically() {
        let generator = OfflineGenerator::default();
        let engine = Engine {
            config: EngineConfig {
                max_generations: 0,
                ..Default::default()
            },
            spec: TargetSpec::pair(Property::Multimodality, Property::Separability).unwrap(),
            scorer: toy_scorer(),
            generator: &generator,
            audit: None,
        };
        let state = engine.run().unwrap();
        let scored: Vec<&Individual> = state.offspring.iter().filter(|i| i.is_scored()).collect();
        assert!(!scored.is_empty(), "{:?}", state.offspring.iter().map(|i| &i.failure).collect::<Vec<_>>());
        for ind in scored {
            assert!(ind.separability.is_some());
            let mean = (ind.scores[&Property::Multimodality] + ind.scores[&Property::Separability]) / 2.0;
            assert!((ind.raw_fitness - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let generator = OfflineGenerator::default();
        let engine = Engine {
            config: EngineConfig {
                mu: 10,
                lambda: 4,
                ..Default::default()
            },
            spec: TargetSpec::single(Property::Multimodality),
            scorer: toy_scorer(),
            generator: &generator,
            audit: None,
        };
        assert!(matches!(engine.run(), Err(Error::Config(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4))]

        #[test]
        fn runs_are_reproducible(seed in any::<u64>()) {
            let (a, log_a) = run(seed, true, 1);
            let (b, log_b) = run(seed, true, 1);
            prop_assert_eq!(a, b);
            prop_assert_eq!(log_a, log_b);
        }
    }
}
