use rand::Rng;

use super::{Generator, GeneratorError, ProposalRequest, ProposalResponse, GENOME_DIM};
use crate::expr::{mutate_expr, parse, random_tree, MutationStrength};
use crate::rng::{derive_seed, seed_rng};

/// Proposes mutations of the parent, or random trees when there is none.
#[derive(Debug, Clone)]
pub struct OfflineGenerator {
    /// Probability of a subtree (rather than point) mutation.
    pub subtree_rate: f64,
    /// Depth of fresh random trees.
    pub initial_depth: usize,
}

impl Default for OfflineGenerator {
    fn default() -> Self {
        Self {
            subtree_rate: 0.5,
            initial_depth: 4,
        }
    }
}

const ATTEMPTS: u64 = 16;

impl Generator for OfflineGenerator {
    fn propose(&self, request: &ProposalRequest) -> Result<ProposalResponse, GeneratorError> {
        let mut rng = seed_rng(request.seed);
        let text = match &request.parent {
            None => random_tree(&mut rng, GENOME_DIM, self.initial_depth).to_canonical_text(),
            Some(parent) => {
                let tree = parse(parent, GENOME_DIM)
                    .map_err(|e| GeneratorError::Malformed(format!("parent expression: {e}")))?;
                let original = tree.to_canonical_text();
                let mut out = original.clone();
                for attempt in 0..ATTEMPTS {
                    let strength = if rng.random::<f64>() < self.subtree_rate {
                        MutationStrength::Subtree
                    } else {
                        MutationStrength::Point
                    };
                    let child = mutate_expr(&tree, derive_seed(request.seed, &[attempt]), strength);
                    out = child.to_canonical_text();
                    if out != original {
                        break;
                    }
                }
                out
            }
        };
        Ok(ProposalResponse::from_raw(format!("<expr>{text}</expr>")))
    }

    fn name(&self) -> String {
        "offline".into()
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ExtractionStatus;

    fn request(parent: Option<&str>, seed: u64) -> ProposalRequest {
        ProposalRequest {
            prompt: String::new(),
            parent: parent.map(str::to_string),
            dims: vec![2, 5, 10],
            max_tokens: 0,
            seed,
        }
    }

    #[test]
    fn mutates_parent() {
        let g = OfflineGenerator::default();
        for seed in 0..50 {
            let r = g.propose(&request(Some("x1+x2"), seed)).unwrap();
            assert_eq!(r.status, ExtractionStatus::Ok);
            let text = r.expr.unwrap();
            assert!(parse(&text, 2).is_ok());
            assert_ne!(text, "(x1 + x2)");
        }
        let a = g.propose(&request(Some("x1+x2"), 4)).unwrap();
        let b = g.propose(&request(Some("x1+x2"), 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_proposals_are_valid() {
        let g = OfflineGenerator::default();
        for seed in 0..50 {
            let r = g.propose(&request(None, seed)).unwrap();
            assert!(r.tree().is_some());
        }
        assert!(g.propose(&request(Some("x1 +"), 0)).is_err());
    }
}
