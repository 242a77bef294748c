// Generate negation, conjunction and counting probes, check every key
// against the text-only oracle, and see how far retrieval gets on them.

use std::sync::Arc;

use sciqa::eval::evaluate;
use sciqa::probe::{generate, probe_oracle, ProbeKind, ProbeSpec};
use sciqa::solver::IrSolver;
use sciqa::{Bm25Params, SentenceIndex, System};

pub fn run_example() -> anyhow::Result<()> {
    let specs = [
        ProbeSpec::new(ProbeKind::Negation, 200, 11),
        ProbeSpec::new(ProbeKind::Conjunction, 200, 11).conjuncts(3, true),
        ProbeSpec::new(ProbeKind::Counting, 200, 11),
    ];
    for spec in &specs {
        let ds = generate(spec)?;
        let q = &ds.questions[0];
        println!("{}: {}", spec.kind, q.stem);
        for o in &q.options {
            println!("    ({}) {}", o.label, o.text);
        }
        for q in &ds.questions {
            anyhow::ensure!(probe_oracle(q, spec.kind)? == q.answer_key, "oracle disagrees on {}", q.id);
        }

        // The context is in the stem, so index the stems themselves.
        let index = SentenceIndex::build(ds.questions.iter().map(|q| q.stem.as_str()), Bm25Params::default());
        let ir = System::single(Box::new(IrSolver::new(Arc::new(index))));
        println!("  retrieval accuracy {:.3}\n", evaluate(&ir, &ds).accuracy);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
