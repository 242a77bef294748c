//! Knowledge stores, solver assembly and the answering system.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Question};
use crate::ensemble::{combine, train_ensemble, EnsembleConfig, EnsembleModel};
use crate::error::{Error, Result};
use crate::eval::{AnswerSystem, SystemOutput};
use crate::index::{Bm25Params, SentenceIndex};
use crate::solver::{
    AcmeSolver, IrSolver, NGramStats, PmiSolver, Smoothing, Solver, SolverPrediction, TermAssociations,
};
use crate::tuple::{extract_tuples, GraphConfig, TupleConfig, TupleSolver, TupleStore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverToggles {
    pub ir: bool,
    pub pmi: bool,
    pub acme: bool,
    pub tuple: bool,
}

impl Default for SolverToggles {
    fn default() -> Self {
        Self { ir: true, pmi: true, acme: true, tuple: true }
    }
}

impl SolverToggles {
    pub fn only_ir() -> Self {
        Self { ir: true, pmi: false, acme: false, tuple: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub k1: f64,
    pub b: f64,
    pub window: usize,
    /// Pseudo-count on PMI pair counts; 0 disables smoothing.
    pub epsilon: f64,
    /// Retrieval depth for evidence and failure analysis.
    pub retrieval_k: usize,
    pub tuple_candidates: usize,
    pub theta: f64,
    pub max_tuples: usize,
    pub tuple_penalty: f64,
    pub exact_cap: usize,
    pub beam_width: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        let t = TupleConfig::default();
        Self {
            k1: 1.2,
            b: 0.75,
            window: crate::solver::DEFAULT_WINDOW,
            epsilon: crate::solver::DEFAULT_EPSILON,
            retrieval_k: 20,
            tuple_candidates: t.candidates,
            theta: t.theta,
            max_tuples: t.graph.max_tuples,
            tuple_penalty: t.graph.penalty,
            exact_cap: t.graph.exact_cap,
            beam_width: t.graph.beam_width,
        }
    }
}

impl SolverParams {
    pub fn bm25(&self) -> Bm25Params {
        Bm25Params { k1: self.k1, b: self.b }
    }

    pub fn smoothing(&self) -> Smoothing {
        if self.epsilon > 0.0 {
            Smoothing::AddEpsilon { epsilon: self.epsilon }
        } else {
            Smoothing::None
        }
    }

    pub fn tuple(&self) -> TupleConfig {
        TupleConfig {
            candidates: self.tuple_candidates,
            theta: self.theta,
            graph: GraphConfig {
                max_tuples: self.max_tuples,
                penalty: self.tuple_penalty,
                exact_cap: self.exact_cap,
                beam_width: self.beam_width,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bm25().validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.window < 2 {
            return bad("window must be >= 2");
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return bad("epsilon must be >= 0");
        }
        if self.retrieval_k == 0 {
            return bad("retrieval_k must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if self.max_tuples == 0 || self.beam_width == 0 {
            return bad("max_tuples and beam_width must be >= 1");
        }
        if self.tuple_penalty.is_nan() || self.tuple_penalty < 0.0 {
            return bad("tuple_penalty must be >= 0");
        }
        Ok(())
    }
}

/// Everything the local solvers read, built once from a corpus.
#[derive(Clone)]
pub struct Knowledge {
    pub index: Arc<SentenceIndex>,
    pub stats: Option<Arc<NGramStats>>,
    pub assoc: Option<Arc<TermAssociations>>,
    pub tuples: Option<Arc<TupleStore>>,
    pub params: SolverParams,
}

impl Knowledge {
    /// Build the stores the enabled solvers need. The index is always built
    /// since external solvers and reports retrieve from it.
    pub fn build(
        corpus: &[String],
        term_bank: &[String],
        params: SolverParams,
        enabled: SolverToggles,
    ) -> Result<Self> {
        params.validate()?;
        let index = SentenceIndex::build(corpus, params.bm25());
        Self::with_index(index, corpus, term_bank, params, enabled)
    }

    /// As [`Knowledge::build`] but reusing a loaded index snapshot.
    pub fn with_index(
        index: SentenceIndex,
        corpus: &[String],
        term_bank: &[String],
        params: SolverParams,
        enabled: SolverToggles,
    ) -> Result<Self> {
        let stats = if enabled.pmi {
            Some(Arc::new(NGramStats::build(corpus, params.window)?.with_smoothing(params.smoothing())))
        } else {
            None
        };
        let assoc = if enabled.acme {
            Some(Arc::new(TermAssociations::build(corpus, term_bank, params.window)?))
        } else {
            None
        };
        let tuples = if enabled.tuple { Some(Arc::new(TupleStore::new(extract_tuples(corpus)))) } else { None };
        Ok(Self { index: Arc::new(index), stats, assoc, tuples, params })
    }

    /// One solver per enabled store, in the order ir, pmi, acme, tuple.
    pub fn solvers(&self, enabled: SolverToggles) -> Vec<Box<dyn Solver>> {
        let mut out: Vec<Box<dyn Solver>> = Vec::new();
        if enabled.ir {
            out.push(Box::new(IrSolver::new(self.index.clone())));
        }
        if let (true, Some(s)) = (enabled.pmi, &self.stats) {
            out.push(Box::new(PmiSolver::new(s.clone())));
        }
        if let (true, Some(a)) = (enabled.acme, &self.assoc) {
            out.push(Box::new(AcmeSolver::new(a.clone())));
        }
        if let (true, Some(t)) = (enabled.tuple, &self.tuples) {
            out.push(Box::new(TupleSolver::new(t.clone(), self.params.tuple())));
        }
        out
    }
}

/// A set of solvers and, once trained, the model combining them. Without a
/// model the first solver answers alone.
pub struct System {
    solvers: Vec<Box<dyn Solver>>,
    model: Option<EnsembleModel>,
}

impl System {
    pub fn new(solvers: Vec<Box<dyn Solver>>) -> Result<Self> {
        if solvers.is_empty() {
            return Err(Error::Config("no solvers enabled".into()));
        }
        let mut names: Vec<&str> = solvers.iter().map(|s| s.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate solver names in {names:?}")));
        }
        Ok(Self { solvers, model: None })
    }

    pub fn single(solver: Box<dyn Solver>) -> Self {
        Self { solvers: vec![solver], model: None }
    }

    pub fn solver_names(&self) -> Vec<&str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn model(&self) -> Option<&EnsembleModel> {
        self.model.as_ref()
    }

    pub fn with_model(mut self, model: EnsembleModel) -> Result<Self> {
        let mut names = self.solver_names();
        names.sort_unstable();
        let expected: Vec<&str> = model.solvers.keys().map(String::as_str).collect();
        if names != expected {
            return Err(Error::Ensemble(format!("model covers {expected:?} but the system runs {names:?}")));
        }
        self.model = Some(model);
        Ok(self)
    }

    pub fn predict(&self, q: &Question) -> Vec<SolverPrediction> {
        self.solvers.iter().map(|s| s.solve(q)).collect()
    }

    /// Every solver's predictions on every question, in dataset order.
    pub fn predict_all(&self, ds: &Dataset) -> Vec<Vec<SolverPrediction>> {
        ds.questions.par_iter().map(|q| self.predict(q)).collect()
    }

    /// Fit and install an ensemble on `train`.
    pub fn train(&mut self, train: &Dataset, cfg: EnsembleConfig) -> Result<&EnsembleModel> {
        let preds = self.predict_all(train);
        let model = train_ensemble(&train.questions, &preds, cfg)?;
        Ok(self.model.insert(model))
    }
}

impl AnswerSystem for System {
    fn answer(&self, q: &Question) -> SystemOutput {
        let predictions = self.predict(q);
        let (scores, chosen) = match &self.model {
            Some(model) => combine(model, q, &predictions).expect("solver set checked when the model was installed"),
            None => (predictions[0].confidences.clone(), predictions[0].chosen.clone()),
        };
        SystemOutput { chosen, scores, predictions }
    }
}
