//! Generation of continuous single-objective optimization problems with
//! controllable high-level landscape properties.
//!
//! Candidate problems are expressions in a small DSL ([`expr`]). They are scored
//! by property models trained on exploratory landscape analysis features of the
//! BBOB suite ([`ela`], [`models`], [`bbob`]), evolved with a (μ,λ) loop that
//! shares fitness in ELA space ([`engine`], [`generator`]), and verified with a
//! grid-based basin-of-attraction analysis ([`basin`]) plus statistical reports
//! ([`stats`]). [`pipeline`] ties everything together behind the CLI.

pub mod basin;
pub mod bbob;
pub mod ela;
pub mod engine;
pub mod error;
pub mod expr;
pub mod function;
pub mod generator;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use function::{Domain, ObjectiveFunction, SampleSet};
