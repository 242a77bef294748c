use serde::{Deserialize, Serialize};

use crate::dataset::Question;

/// One solver's verdict on one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverPrediction {
    pub solver: String,
    /// Aligned with the question's option order.
    pub confidences: Vec<f64>,
    pub chosen: String,
    /// Per-option evidence sentence, when the solver retrieves text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<Option<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// Why the solver abstained. Abstaining predictions are imputed as
    /// all-zero confidences by the ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstained: Option<String>,
}

impl SolverPrediction {
    pub fn new(solver: impl Into<String>, q: &Question, confidences: Vec<f64>) -> Self {
        assert_eq!(confidences.len(), q.arity(), "one confidence per option");
        let chosen = argmax_label(q, &confidences).to_string();
        Self { solver: solver.into(), confidences, chosen, evidence: Vec::new(), flags: Vec::new(), abstained: None }
    }

    pub fn abstain(solver: impl Into<String>, q: &Question, reason: impl Into<String>) -> Self {
        let mut p = Self::new(solver, q, vec![0.0; q.arity()]);
        p.abstained = Some(reason.into());
        p
    }

    pub fn is_valid(&self) -> bool {
        self.abstained.is_none()
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }
}

/// Label of the highest score; ties go to the lowest label.
pub fn argmax_label<'q>(q: &'q Question, scores: &[f64]) -> &'q str {
    let mut best: Option<(f64, &str)> = None;
    for (opt, &s) in q.options.iter().zip(scores) {
        best = match best {
            None => Some((s, &opt.label)),
            Some((bs, bl)) if s > bs || (s == bs && opt.label.as_str() < bl) => Some((s, &opt.label)),
            keep => keep,
        };
    }
    best.map(|(_, l)| l).unwrap_or("")
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, q: &Question) -> SolverPrediction;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AnswerOption, Partition};

    fn q(labels: &[&str]) -> Question {
        Question {
            id: "q".into(),
            stem: String::new(),
            options: labels.iter().map(|l| AnswerOption::new(*l, "x")).collect(),
            answer_key: labels[0].into(),
            source: None,
            partition: Partition::Test,
            augmented: false,
            pair_id: None,
        }
    }

    #[test]
    fn ties_go_to_lowest_label() {
        let q4 = q(&["A", "B", "C", "D"]);
        assert_eq!(argmax_label(&q4, &[0.0, 0.0, 0.0, 0.0]), "A");
        assert_eq!(argmax_label(&q4, &[0.1, 0.5, 0.5, 0.2]), "B");
        // Label order, not position, decides.
        let shuffled = q(&["C", "A", "B"]);
        assert_eq!(argmax_label(&shuffled, &[1.0, 1.0, 0.0]), "A");
    }

    #[test]
    fn abstention_is_all_zero() {
        let p = SolverPrediction::abstain("ext", &q(&["A", "B", "C"]), "timeout");
        assert_eq!(p.confidences, vec![0.0; 3]);
        assert!(!p.is_valid());
    }
}
