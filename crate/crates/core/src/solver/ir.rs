use std::sync::Arc;

use crate::dataset::Question;
use crate::index::SentenceIndex;

use super::prediction::{Solver, SolverPrediction};

/// Scores each option by the BM25 score of the best sentence retrieved for
/// the query `stem + " " + option`.
pub struct IrSolver {
    index: Arc<SentenceIndex>,
}

impl IrSolver {
    pub fn new(index: Arc<SentenceIndex>) -> Self {
        Self { index }
    }
}

impl Solver for IrSolver {
    fn name(&self) -> &str {
        "ir"
    }

    fn solve(&self, q: &Question) -> SolverPrediction {
        let mut confidences = Vec::with_capacity(q.arity());
        let mut evidence = Vec::with_capacity(q.arity());
        for opt in &q.options {
            let query = format!("{} {}", q.stem, opt.text);
            let top = self.index.retrieve(&query, 1).expect("k = 1 is valid").into_iter().next();
            confidences.push(top.as_ref().map_or(0.0, |h| h.score));
            evidence.push(top.map(|h| h.text));
        }
        let no_support = evidence.iter().all(Option::is_none);
        let mut pred = SolverPrediction::new(self.name(), q, confidences);
        pred.evidence = evidence;
        if no_support {
            pred = pred.with_flag("no-support");
        }
        pred
    }
}
