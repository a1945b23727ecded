//! The expression language in which candidate problems are written.
//!
//! Grammar (version [`GRAMMAR_VERSION`]):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?            right-associative
//! primary := NUMBER | VAR | FUNC "(" expr ")" | ("min" | "max") "(" expr "," expr ")"
//!          | "(" expr ")"
//! NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! VAR     := "x" digits                     x1 .. xd, 1-based
//! FUNC    := neg | sin | cos | tanh | exp | abs | sqrt | log | floor
//! ```
//!
//! A minus sign directly in front of a numeric literal that is not followed by
//! `^` yields a negative constant, so `-3^2` is `-(3^2)` while `(-3)` is the
//! constant `-3`.
//!
//! Evaluation is total. Division by `|b| < 1e-12` divides by `sign(b) * 1e-12`,
//! `log` and `sqrt` replace arguments below `1e-12` by `1e-12`, `exp` clamps its
//! argument to `[-700, 700]`, and `a ^ b` with `a < 0` and non-integer `b`
//! evaluates `|a| ^ b`. Any intermediate result that still overflows is clamped
//! to `±1e300`; a NaN becomes 0.

mod eval;
mod mutate;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function::{Domain, ObjectiveFunction};

pub use mutate::{mutate_expr, random_tree, MutationStrength};
pub use parse::{parse, parse_with_limits};

pub const GRAMMAR_VERSION: &str = "lf-dsl/1";

pub const DEFAULT_MAX_DEPTH: usize = 20;
pub const DEFAULT_MAX_NODES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier '{name}' at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("variable x{index} exceeds declared dimension {dim}")]
    VariableIndex { index: usize, dim: usize },
    #[error("{what} {value} exceeds limit {limit}")]
    LimitExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tanh,
    Exp,
    Abs,
    Sqrt,
    Log,
    Floor,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 9] = [
        UnaryOp::Neg,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tanh,
        UnaryOp::Exp,
        UnaryOp::Abs,
        UnaryOp::Sqrt,
        UnaryOp::Log,
        UnaryOp::Floor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Exp => "exp",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Log => "log",
            UnaryOp::Floor => "floor",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 7] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
        BinaryOp::Min,
        BinaryOp::Max,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
        }
    }

    fn is_function(self) -> bool {
        matches!(self, BinaryOp::Min | BinaryOp::Max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based variable index.
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Unary(_, a) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Preorder walk.
    pub fn visit<'a>(&'a self, out: &mut Vec<&'a Node>) {
        out.push(self);
        match self {
            Node::Const(_) | Node::Var(_) => {}
            Node::Unary(_, a) => a.visit(out),
            Node::Binary(_, a, b) => {
                a.visit(out);
                b.visit(out);
            }
        }
    }

    /// Mutable reference to the `index`-th node in preorder.
    pub(crate) fn nth_mut(&mut self, index: usize) -> Option<&mut Node> {
        fn go<'a>(node: &'a mut Node, remaining: &mut usize) -> Option<&'a mut Node> {
            if *remaining == 0 {
                return Some(node);
            }
            *remaining -= 1;
            match node {
                Node::Const(_) | Node::Var(_) => None,
                Node::Unary(_, a) => go(a, remaining),
                Node::Binary(_, a, b) => {
                    let left_size = a.size();
                    if *remaining < left_size {
                        go(a, remaining)
                    } else {
                        *remaining -= left_size;
                        go(b, remaining)
                    }
                }
            }
        }
        let mut remaining = index;
        go(self, &mut remaining)
    }
}

/// Parsed syntax tree with its declared variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    root: Node,
    dim: usize,
}

impl ExprTree {
    /// Validates a tree against the declared dimension and `limits`.
    pub fn new(root: Node, dim: usize, limits: Limits) -> Result<Self, ExprError> {
        if dim == 0 {
            return Err(ExprError::InvalidDimension(dim));
        }
        if let Some(i) = root.max_var() {
            if i >= dim {
                return Err(ExprError::VariableIndex { index: i + 1, dim });
            }
        }
        let depth = root.depth();
        if depth > limits.max_depth {
            return Err(ExprError::LimitExceeded {
                what: "depth",
                value: depth,
                limit: limits.max_depth,
            });
        }
        let size = root.size();
        if size > limits.max_nodes {
            return Err(ExprError::LimitExceeded {
                what: "node count",
                value: size,
                limit: limits.max_nodes,
            });
        }
        Ok(Self { root, dim })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Evaluates the tree at `x`, which must have exactly `dim()` coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        eval::eval_node(&self.root, x)
    }

    /// Evaluates the tree in a space of dimension `x.len() >= dim()`: the mean of
    /// the tree over all `x.len() - dim() + 1` sliding windows of consecutive
    /// coordinates. At `x.len() == dim()` this is exactly [`ExprTree::eval`].
    pub fn eval_lifted(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.dim, "point has too few coordinates");
        let windows = x.len() - self.dim + 1;
        if windows == 1 {
            return eval::eval_node(&self.root, x);
        }
        let sum: f64 = x
            .windows(self.dim)
            .map(|w| eval::eval_node(&self.root, w))
            .sum();
        eval::guard(sum / windows as f64)
    }

    /// The lifted function on `[-5, 5]^dim`.
    pub fn to_objective(&self, dim: usize) -> Result<ObjectiveFunction, ExprError> {
        if dim < self.dim {
            return Err(ExprError::InvalidDimension(dim));
        }
        let tree = self.clone();
        Ok(ObjectiveFunction::new(
            format!("expr:{}", self.to_canonical_text()),
            Domain::standard(dim),
            move |x| tree.eval_lifted(x),
        ))
    }

    pub fn to_canonical_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(v) => {
            if v.is_sign_negative() {
                write!(f, "(-{})", format_number(*v))
            } else {
                write!(f, "{}", format_number(*v))
            }
        }
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) if op.is_function() => {
            write!(f, "{}(", op.symbol())?;
            write_node(a, f)?;
            write!(f, ", ")?;
            write_node(b, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, f)?;
            write!(f, ")")
        }
    }
}

/// Wire record exchanged between the generator and the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub dim: usize,
    pub expr: String,
}

impl Candidate {
    pub fn parse(&self) -> Result<ExprTree, ExprError> {
        parse(&self.expr, self.dim)
    }
}
