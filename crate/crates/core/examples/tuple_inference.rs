// Extract subject–verb–object tuples and explain an answer with the
// support graph that connects the question to it.

use std::sync::Arc;

use sciqa::dataset::letter_label;
use sciqa::tuple::{extract_tuples, TupleConfig, TupleSolver, TupleStore};
use sciqa::{AnswerOption, Partition, Question, Solver};

const CORPUS: &[&str] = &[
    "Green plants produce oxygen during photosynthesis.",
    "Plants absorb carbon dioxide from the air.",
    "Animals release carbon dioxide during respiration.",
    "The sun provides energy for photosynthesis.",
    "Magnets attract iron nails.",
];

pub fn run_example() -> anyhow::Result<()> {
    let tuples = extract_tuples(CORPUS);
    for t in &tuples {
        println!("{}", t.to_tsv());
    }

    let q = Question {
        id: "plants".into(),
        stem: "Which gas do green plants produce during photosynthesis?".into(),
        options: ["nitrogen", "oxygen", "helium", "argon"]
            .iter()
            .enumerate()
            .map(|(i, t)| AnswerOption::new(letter_label(i), *t))
            .collect(),
        answer_key: "B".into(),
        source: None,
        partition: Partition::Test,
        augmented: false,
        pair_id: None,
    };

    let solver = TupleSolver::new(Arc::new(TupleStore::new(tuples)), TupleConfig::default());
    let p = solver.solve(&q);
    println!("chose {} with confidences {:?}", p.chosen, p.confidences);

    let best = q.option_index(&p.chosen).expect("chosen label exists");
    let (cands, graph) = solver.support_graph(&q, best);
    println!("objective {:.3}", graph.objective);
    for e in &graph.edges {
        let t = &cands[e.candidate].tuple;
        println!(
            "  {:?} term {} -> {:?} of ({}) weight {}",
            e.edge.term.side,
            e.edge.term.index,
            e.edge.field,
            t.to_tsv(),
            e.edge.weight
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
