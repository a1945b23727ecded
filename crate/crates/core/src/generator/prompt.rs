//! Prompt template for remote generators.

use crate::expr::{BinaryOp, UnaryOp, GRAMMAR_VERSION};

pub const PROMPT_VERSION: &str = "lf-prompt/1";

pub const SYSTEM_PROMPT: &str = "You design continuous single-objective minimization problems \
for benchmarking optimization algorithms. You answer with one mathematical expression in the \
requested syntax.";

/// Inputs that vary between prompts.
#[derive(Debug, Clone, Default)]
pub struct PromptParts<'a> {
    /// One line per target property, already phrased with its polarity.
    pub targets: &'a [String],
    pub parent: Option<&'a str>,
    pub feedback: Option<&'a str>,
}

pub fn grammar_reference() -> String {
    let unary: Vec<&str> = UnaryOp::ALL.iter().map(|o| o.name()).collect();
    let binary: Vec<&str> = BinaryOp::ALL.iter().map(|o| o.symbol()).collect();
    format!(
        "Expression syntax ({GRAMMAR_VERSION}):\n\
         - variables x1 and x2, each ranging over [-5, 5]; x1 and x2 stand for every pair of \
         neighbouring coordinates when the problem is evaluated in higher dimensions\n\
         - decimal constants such as 3, -0.5 or 1e-3\n\
         - functions: {}\n\
         - operators: {} (min and max are written min(a, b) and max(a, b))\n\
         - parentheses for grouping; ^ is right-associative\n\
         Division by values near zero, log and sqrt of non-positive values and huge exponents \
         are clamped, so every expression is defined everywhere.",
        unary.join(", "),
        binary.join(" ")
    )
}

pub fn build_prompt(parts: &PromptParts<'_>) -> String {
    let mut p = String::new();
    p.push_str("Design a minimization problem with the following landscape properties:\n");
    for t in parts.targets {
        p.push_str("- ");
        p.push_str(t);
        p.push('\n');
    }
    p.push('\n');
    p.push_str(&grammar_reference());
    p.push_str("\n\n");
    match parts.parent {
        Some(parent) => {
            p.push_str("Improve on this current problem:\n");
            p.push_str(parent);
            p.push('\n');
            if let Some(fb) = parts.feedback {
                p.push_str("\nFeedback on the current problem:\n");
                p.push_str(fb);
                p.push('\n');
            }
            p.push_str(
                "\nChange the expression so that it scores better on the targeted properties \
                 while staying different from problems that were already found.\n",
            );
        }
        None => p.push_str("Propose a new problem from scratch.\n"),
    }
    p.push_str("\nReply with the expression enclosed in <expr> and </expr>, for example <expr>x1^2 + sin(3*x2)</expr>.");
    p
}
