//! Statistical solvers. Each maps a question to one confidence per option.

mod acme;
mod ir;
mod pmi;
mod prediction;

pub use acme::{cosine, load_term_bank, parse_term_bank, AcmeSolver, TermAssociations};
pub use ir::IrSolver;
pub use pmi::{extract_ngrams, pmi_from_counts, NGramStats, PmiSolver, Smoothing, DEFAULT_EPSILON, DEFAULT_WINDOW};
pub use prediction::{argmax_label, Solver, SolverPrediction};
