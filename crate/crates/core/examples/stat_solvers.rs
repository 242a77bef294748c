// The three statistical solvers on one question: retrieval, n-gram PMI and
// term-pivot cohesion.

use std::sync::Arc;

use sciqa::dataset::letter_label;
use sciqa::fixtures::term_bank;
use sciqa::solver::{AcmeSolver, IrSolver, NGramStats, PmiSolver, Smoothing, TermAssociations, DEFAULT_WINDOW};
use sciqa::{AnswerOption, Bm25Params, Partition, Question, SentenceIndex, Solver};

const CORPUS: &[&str] = &[
    "When a solid is melted its particles move more rapidly.",
    "Heating a substance makes its particles move faster.",
    "Iron is a metal that melts at a high temperature.",
    "The mass of a substance does not change when it melts.",
    "Particles in a gas move more rapidly than particles in a solid.",
    "Plants use energy from sunlight to make food.",
];

pub fn run_example() -> anyhow::Result<()> {
    let q = Question {
        id: "iron".into(),
        stem: "How are the particles in a block of iron affected when the block is melted?".into(),
        options: [
            "The particles gain mass.",
            "The particles contain less energy.",
            "The particles move more rapidly.",
            "The particles increase in volume.",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| AnswerOption::new(letter_label(i), *t))
        .collect(),
        answer_key: "C".into(),
        source: None,
        partition: Partition::Test,
        augmented: false,
        pair_id: None,
    };

    let index = Arc::new(SentenceIndex::build(CORPUS, Bm25Params::default()));
    let stats = NGramStats::build(CORPUS, DEFAULT_WINDOW)?;
    println!("pmi(particles, move more rapidly) = {:.3}", stats.pmi("particles", "move more rapidly")?);
    let raw = stats.clone().with_smoothing(Smoothing::None);
    println!("unsmoothed pmi(iron, sunlight) = {}", raw.pmi("iron", "sunlight")?);

    let assoc = TermAssociations::build(CORPUS, &term_bank(), DEFAULT_WINDOW)?;
    let solvers: Vec<Box<dyn Solver>> = vec![
        Box::new(IrSolver::new(index)),
        Box::new(PmiSolver::new(Arc::new(stats))),
        Box::new(AcmeSolver::new(Arc::new(assoc))),
    ];
    for s in &solvers {
        let p = s.solve(&q);
        let conf: Vec<String> = p.confidences.iter().map(|c| format!("{c:.3}")).collect();
        println!("{:>5} -> {}  [{}]", p.solver, p.chosen, conf.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
