//! Support-graph reasoning over extracted subject-predicate-object tuples.

mod candidates;
mod extract;
mod graph;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use candidates::{
    build_candidates, similarity, terms_of, AlignmentEdge, Side, SupportCandidate, TermRef, TupleStore, DEFAULT_THETA,
    EXACT_MATCH, STEM_MATCH,
};
pub use extract::{extract_sentence, extract_tuples, is_verb, read_tuples, write_tuples, Field, Tuple};
pub use graph::{optimize_support_graph, validate_support_graph, GraphConfig, SelectedEdge, SupportGraph};

use crate::dataset::Question;
use crate::solver::{Solver, SolverPrediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TupleConfig {
    /// Candidates retrieved per option.
    pub candidates: usize,
    /// Minimum alignment weight for an edge.
    pub theta: f64,
    pub graph: GraphConfig,
}

impl Default for TupleConfig {
    fn default() -> Self {
        Self { candidates: 20, theta: DEFAULT_THETA, graph: GraphConfig::default() }
    }
}

/// Scores each option by the objective of its best support graph.
pub struct TupleSolver {
    store: Arc<TupleStore>,
    config: TupleConfig,
}

impl TupleSolver {
    pub fn new(store: Arc<TupleStore>, config: TupleConfig) -> Self {
        Self { store, config }
    }

    pub fn support_graph(&self, q: &Question, option: usize) -> (Vec<SupportCandidate>, SupportGraph) {
        let cands = build_candidates(q, &q.options[option], &self.store, self.config.candidates, self.config.theta);
        let graph = optimize_support_graph(&cands, self.config.graph);
        (cands, graph)
    }
}

impl Solver for TupleSolver {
    fn name(&self) -> &str {
        "tuple"
    }

    fn solve(&self, q: &Question) -> SolverPrediction {
        let confidences = (0..q.arity()).map(|i| self.support_graph(q, i).1.objective).collect();
        SolverPrediction::new(self.name(), q, confidences)
    }
}
