use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BinaryOp, ExprTree, Limits, Node, UnaryOp};
use crate::rng::{seed_rng, Rng};

const MAX_ATTEMPTS: usize = 100;
const SUBTREE_DEPTH: usize = 4;
const CONSTANT_SIGMA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationStrength {
    /// Change one node: swap an operator or variable, or scale a constant.
    Point,
    /// Replace a uniformly chosen subtree with a fresh random tree.
    Subtree,
}

fn random_constant(rng: &mut Rng) -> f64 {
    (rng.random_range(-5.0..=5.0f64) * 100.0).round() / 100.0
}

fn random_leaf(rng: &mut Rng, dim: usize) -> Node {
    if rng.random_bool(0.65) {
        Node::Var(rng.random_range(0..dim))
    } else {
        Node::Const(random_constant(rng))
    }
}

fn grow(rng: &mut Rng, dim: usize, depth: usize) -> Node {
    if depth <= 1 || rng.random_bool(0.3) {
        return random_leaf(rng, dim);
    }
    if rng.random_bool(0.35) {
        let op = UnaryOp::ALL[rng.random_range(0..UnaryOp::ALL.len())];
        Node::Unary(op, Box::new(grow(rng, dim, depth - 1)))
    } else {
        let op = BinaryOp::ALL[rng.random_range(0..BinaryOp::ALL.len())];
        let a = grow(rng, dim, depth - 1);
        let b = grow(rng, dim, depth - 1);
        Node::Binary(op, Box::new(a), Box::new(b))
    }
}

fn has_var(node: &Node) -> bool {
    match node {
        Node::Const(_) => false,
        Node::Var(_) => true,
        Node::Unary(_, a) => has_var(a),
        Node::Binary(_, a, b) => has_var(a) || has_var(b),
    }
}

/// A random tree of depth at most `max_depth` (clamped to the default depth
/// limit) that references at least one variable.
pub fn random_tree(rng: &mut Rng, dim: usize, max_depth: usize) -> ExprTree {
    let limits = Limits::default();
    let depth = max_depth.clamp(1, limits.max_depth);
    let mut root = grow(rng, dim, depth);
    for _ in 0..MAX_ATTEMPTS {
        if has_var(&root) && root.size() <= limits.max_nodes {
            break;
        }
        root = grow(rng, dim, depth);
    }
    if !has_var(&root) || root.size() > limits.max_nodes {
        root = Node::Var(rng.random_range(0..dim));
    }
    ExprTree::new(root, dim, limits).expect("generated tree respects limits")
}

fn point_mutation(rng: &mut Rng, node: &mut Node, dim: usize) -> bool {
    match node {
        Node::Const(v) => {
            let scaled = if *v == 0.0 {
                Normal::new(0.0, 1.0).unwrap().sample(rng)
            } else {
                let factor = Normal::new(1.0, CONSTANT_SIGMA).unwrap().sample(rng);
                *v * factor
            };
            if scaled.is_finite() && scaled != *v {
                *v = scaled;
                true
            } else {
                false
            }
        }
        Node::Var(i) => {
            if dim > 1 {
                let mut j = rng.random_range(0..dim - 1);
                if j >= *i {
                    j += 1;
                }
                *i = j;
            } else {
                *node = Node::Const(random_constant(rng));
            }
            true
        }
        Node::Unary(op, _) => {
            let choices: Vec<_> = UnaryOp::ALL.into_iter().filter(|o| o != op).collect();
            *op = choices[rng.random_range(0..choices.len())];
            true
        }
        Node::Binary(op, _, _) => {
            let choices: Vec<_> = BinaryOp::ALL.into_iter().filter(|o| o != op).collect();
            *op = choices[rng.random_range(0..choices.len())];
            true
        }
    }
}

/// Seeded mutation of `tree`. The result always satisfies the default depth and
/// size limits; when 100 attempts fail to produce a valid, changed tree the
/// input is returned unchanged.
pub fn mutate_expr(tree: &ExprTree, seed: u64, strength: MutationStrength) -> ExprTree {
    let mut rng = seed_rng(seed);
    let limits = Limits::default();
    let dim = tree.dim();
    for _ in 0..MAX_ATTEMPTS {
        let mut root = tree.root().clone();
        let index = rng.random_range(0..root.size());
        let target = root.nth_mut(index).expect("index within tree size");
        let changed = match strength {
            MutationStrength::Point => point_mutation(&mut rng, target, dim),
            MutationStrength::Subtree => {
                let depth = rng.random_range(1..=SUBTREE_DEPTH);
                *target = grow(&mut rng, dim, depth);
                true
            }
        };
        if !changed || root == *tree.root() {
            continue;
        }
        if let Ok(t) = ExprTree::new(root, dim, limits) {
            return t;
        }
    }
    tree.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    /// Labels of the preorder node sequence; `None` if the shapes differ.
    fn node_diff(a: &ExprTree, b: &ExprTree) -> Option<usize> {
        let (mut va, mut vb) = (Vec::new(), Vec::new());
        a.root().visit(&mut va);
        b.root().visit(&mut vb);
        if va.len() != vb.len() {
            return None;
        }
        let label = |n: &Node| match n {
            Node::Const(v) => format!("c{v}"),
            Node::Var(i) => format!("v{i}"),
            Node::Unary(op, _) => format!("u{op:?}"),
            Node::Binary(op, _, _) => format!("b{op:?}"),
        };
        let arity = |n: &Node| match n {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Unary(..) => 1,
            Node::Binary(..) => 2,
        };
        if va.iter().zip(&vb).any(|(x, y)| arity(x) != arity(y)) {
            return None;
        }
        Some(va.iter().zip(&vb).filter(|(x, y)| label(x) != label(y)).count())
    }

    #[test]
    fn point_mutation_changes_exactly_one_node() {
        let parent = parse("x1+x2", 2).unwrap();
        for seed in 0..50 {
            let child = mutate_expr(&parent, seed, MutationStrength::Point);
            assert_eq!(node_diff(&parent, &child), Some(1), "seed {seed}: {child}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let parent = parse("sin(x1) * x2 + 3", 2).unwrap();
        for strength in [MutationStrength::Point, MutationStrength::Subtree] {
            assert_eq!(
                mutate_expr(&parent, 9, strength),
                mutate_expr(&parent, 9, strength)
            );
        }
    }

    #[test]
    fn single_node_tree_stays_valid() {
        let parent = parse("x1", 1).unwrap();
        for seed in 0..100 {
            for strength in [MutationStrength::Point, MutationStrength::Subtree] {
                let child = mutate_expr(&parent, seed, strength);
                assert!(child.depth() <= 20 && child.size() <= 500);
            }
        }
    }

    #[test]
    fn near_limit_tree_mutation_respects_depth() {
        let deep = format!("{}x1{}", "sin(".repeat(19), ")".repeat(19));
        let tree = parse(&deep, 1).unwrap();
        for seed in 0..20 {
            let child = mutate_expr(&tree, seed, MutationStrength::Subtree);
            assert!(child.depth() <= 20);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn repeated_mutation_respects_limits(seed in any::<u64>()) {
            let mut rng = seed_rng(seed);
            let mut tree = random_tree(&mut rng, 3, 6);
            for step in 0..1000u64 {
                let strength = if step % 2 == 0 { MutationStrength::Subtree } else { MutationStrength::Point };
                tree = mutate_expr(&tree, seed.wrapping_add(step), strength);
                prop_assert!(tree.depth() <= 20);
                prop_assert!(tree.size() <= 500);
            }
        }
    }
}
