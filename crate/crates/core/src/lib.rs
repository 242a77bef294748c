//! Multiple-choice science question answering.
//!
//! Four local solvers (BM25 retrieval, n-gram PMI, term-pivot cohesion and
//! tuple support graphs) plus any number of out-of-process scorers are
//! combined by a logistic ensemble. Around them sit dataset tooling, an
//! evaluation harness (answer-only, adversarial, paired and support
//! analyses) and generators for negation, conjunction and counting probes.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod external;
pub mod fixtures;
pub mod index;
pub mod pipeline;
pub mod probe;
pub mod solver;
pub mod text;
pub mod tuple;

pub use dataset::{AnswerOption, Dataset, Partition, Question};
pub use ensemble::EnsembleModel;
pub use error::{Error, Result};
pub use eval::{evaluate, AnswerSystem, EvalReport};
pub use index::{Bm25Params, SentenceIndex};
pub use pipeline::{Knowledge, System};
pub use solver::{Solver, SolverPrediction};
