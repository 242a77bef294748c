//! Learned combination of solver confidences.
//!
//! Each solver's raw confidences are z-normalized with statistics taken over
//! every option of every training question, then a binary logistic model
//! (is this option correct?) is fit over the z-scores by Newton's method
//! with a small ridge term. The combined score of an option is
//! `Σ_s w_s · z_s`; the highest score wins, ties to the lowest label.
//!
//! Abstaining predictions contribute a z-score of 0, so an absent solver
//! neither helps nor hurts an option.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Question;
use crate::error::{Error, Result};
use crate::solver::{argmax_label, SolverPrediction};

const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverWeight {
    pub weight: f64,
    pub mean: f64,
    /// Zero marks a degenerate solver (constant on train); its weight is 0.
    pub std: f64,
}

impl SolverWeight {
    pub fn is_degenerate(&self) -> bool {
        self.std <= MIN_STD
    }

    pub fn z(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Ridge penalty on the weights (not the intercept).
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { l2: 1.0, max_iter: 100, tolerance: 1e-10 }
    }
}

/// Serialized as `{solver: {weight, mean, std}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnsembleModel {
    pub solvers: BTreeMap<String, SolverWeight>,
}

impl EnsembleModel {
    pub fn new(solvers: BTreeMap<String, SolverWeight>) -> Result<Self> {
        if solvers.is_empty() {
            return Err(Error::Ensemble("model has no solvers".into()));
        }
        if let Some((name, _)) =
            solvers.iter().find(|(_, w)| !w.weight.is_finite() || !w.mean.is_finite() || !w.std.is_finite())
        {
            return Err(Error::Ensemble(format!("non-finite parameters for solver `{name}`")));
        }
        Ok(Self { solvers })
    }

    /// Weights with identity normalization, for hand-built combinations.
    pub fn from_weights<'a>(weights: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        Self::new(
            weights
                .into_iter()
                .map(|(name, weight)| (name.to_string(), SolverWeight { weight, mean: 0.0, std: 1.0 }))
                .collect(),
        )
    }

    pub fn weight(&self, solver: &str) -> Option<f64> {
        self.solvers.get(solver).map(|w| w.weight)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let model: EnsembleModel = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Snapshot { path: path.to_path_buf(), message: e.to_string() })?;
        Self::new(model.solvers)
    }
}

fn z_row<'a>(w: &'a SolverWeight, p: &'a SolverPrediction) -> impl Iterator<Item = f64> + 'a {
    let valid = p.is_valid();
    p.confidences.iter().map(move |&c| if valid { w.z(c) } else { 0.0 })
}

/// Per-option combined scores and the chosen label.
pub fn combine(model: &EnsembleModel, q: &Question, preds: &[SolverPrediction]) -> Result<(Vec<f64>, String)> {
    let mut seen: Vec<&str> = preds.iter().map(|p| p.solver.as_str()).collect();
    seen.sort_unstable();
    let expected: Vec<&str> = model.solvers.keys().map(String::as_str).collect();
    if seen != expected {
        return Err(Error::Ensemble(format!("solver set {seen:?} does not match model {expected:?}")));
    }
    let mut scores = vec![0.0; q.arity()];
    for p in preds {
        if p.confidences.len() != q.arity() {
            return Err(Error::Ensemble(format!("{} gave {} confidences for {}", p.solver, p.confidences.len(), q.id)));
        }
        let w = &model.solvers[&p.solver];
        if w.weight == 0.0 {
            continue;
        }
        for (s, z) in scores.iter_mut().zip(z_row(w, p)) {
            *s += w.weight * z;
        }
    }
    let chosen = argmax_label(q, &scores).to_string();
    Ok((scores, chosen))
}

/// Fit a model from `preds[i]`, the predictions of every solver on
/// `questions[i]`. Every question must carry the same solver set.
pub fn train_ensemble(
    questions: &[Question],
    preds: &[Vec<SolverPrediction>],
    cfg: EnsembleConfig,
) -> Result<EnsembleModel> {
    if questions.is_empty() {
        return Err(Error::Ensemble("empty training set".into()));
    }
    if questions.len() != preds.len() {
        return Err(Error::Ensemble(format!("{} questions but {} prediction sets", questions.len(), preds.len())));
    }
    let names: Vec<String> = preds[0].iter().map(|p| p.solver.clone()).collect();
    if names.is_empty() {
        return Err(Error::Ensemble("no solvers".into()));
    }
    for (q, ps) in questions.iter().zip(preds) {
        let these: Vec<&str> = ps.iter().map(|p| p.solver.as_str()).collect();
        if these != names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Ensemble(format!("question {} has solvers {these:?}, expected {names:?}", q.id)));
        }
        if let Some(p) = ps.iter().find(|p| p.confidences.len() != q.arity()) {
            return Err(Error::Ensemble(format!("{} gave {} confidences for {}", p.solver, p.confidences.len(), q.id)));
        }
    }

    // Normalization over valid predictions only; abstentions are imputed later.
    let mut stats: Vec<SolverWeight> = (0..names.len())
        .map(|s| {
            let xs: Vec<f64> =
                preds.iter().filter(|ps| ps[s].is_valid()).flat_map(|ps| ps[s].confidences.iter().copied()).collect();
            if xs.is_empty() {
                return SolverWeight { weight: 0.0, mean: 0.0, std: 0.0 };
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            SolverWeight { weight: 0.0, mean, std: if std > MIN_STD { std } else { 0.0 } }
        })
        .collect();

    let active: Vec<usize> = (0..names.len()).filter(|&s| !stats[s].is_degenerate()).collect();
    if !active.is_empty() {
        let rows: usize = questions.iter().map(Question::arity).sum();
        let d = active.len() + 1;
        let mut x = DMatrix::<f64>::zeros(rows, d);
        let mut y = DVector::<f64>::zeros(rows);
        let mut r = 0;
        for (q, ps) in questions.iter().zip(preds) {
            let gold = q.correct_index();
            let zs: Vec<Vec<f64>> = active.iter().map(|&s| z_row(&stats[s], &ps[s]).collect()).collect();
            for i in 0..q.arity() {
                for (j, z) in zs.iter().enumerate() {
                    x[(r, j)] = z[i];
                }
                x[(r, d - 1)] = 1.0;
                y[r] = f64::from(i == gold);
                r += 1;
            }
        }
        let beta = fit_logistic(&x, &y, cfg)?;
        for (j, &s) in active.iter().enumerate() {
            stats[s].weight = beta[j];
        }
    }
    EnsembleModel::new(names.into_iter().zip(stats).collect())
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Ridge-penalized logistic regression by Newton iterations; the last
/// column of `x` is the unpenalized intercept.
fn fit_logistic(x: &DMatrix<f64>, y: &DVector<f64>, cfg: EnsembleConfig) -> Result<DVector<f64>> {
    let d = x.ncols();
    let mut penalty = DMatrix::<f64>::identity(d, d) * cfg.l2;
    penalty[(d - 1, d - 1)] = 0.0;
    let mut beta = DVector::<f64>::zeros(d);
    for _ in 0..cfg.max_iter {
        let eta = x * &beta;
        let p = eta.map(sigmoid);
        let grad = x.transpose() * (&p - y) + &penalty * &beta;
        let w = p.map(|pi| (pi * (1.0 - pi)).max(1e-12));
        let mut xw = x.clone();
        for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        // Tiny jitter keeps the intercept block invertible when every row is
        // saturated.
        let hessian = x.transpose() * xw + &penalty + DMatrix::<f64>::identity(d, d) * 1e-9;
        let step = hessian.cholesky().ok_or_else(|| Error::Ensemble("singular Hessian".into()))?.solve(&grad);
        beta -= &step;
        if step.amax() < cfg.tolerance {
            break;
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Ensemble("weights diverged".into()));
    }
    Ok(beta)
}
