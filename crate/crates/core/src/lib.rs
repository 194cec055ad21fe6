//! Exact SHAP values and SHAP interaction values for explicit model
//! functions, and the decomposition of pairwise feature relationships into
//! synergy, redundancy and independence.
//!
//! Pipeline: parse a model ([`expr`]), load or generate observations
//! ([`dataset`]), explain every observation by full coalition enumeration
//! ([`shapley`]) and decompose the resulting SHAP vectors ([`sri`]).

pub mod cli;
pub mod dataset;
pub mod expr;
pub mod reference;
pub mod shapley;
pub mod sri;

pub use dataset::{BackgroundSet, Dataset, RngSeed};
pub use expr::{parse_model, ModelExpr};
pub use shapley::{explain_dataset, Explanation, InteractionTensor, ShapConfig, ShapMatrix};
pub use sri::{decompose_all, SampleVector, SriResult};
