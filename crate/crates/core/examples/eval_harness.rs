// Baselines, answer-only, adversarial distractors, paired questions and the
// corpus-support breakdown of failures.

use sciqa::dataset::mask_stems;
use sciqa::eval::{
    adversarial_augment, evaluate, harvest_pool, paired_eval, support_report, OracleSystem, RandomSystem,
};
use sciqa::fixtures::{planted, PlantedSpec};
use sciqa::solver::IrSolver;
use sciqa::{Dataset, Partition, System};

pub fn run_example() -> anyhow::Result<()> {
    let fx = planted(PlantedSpec { decoy_rate: 0.1, ..PlantedSpec::default() });
    let ds = fx.dataset.partition(Partition::Test);
    let index = std::sync::Arc::new(sciqa::SentenceIndex::build(&fx.corpus, Default::default()));
    let ir = System::single(Box::new(IrSolver::new(index.clone())));

    println!("oracle  {:.3}", evaluate(&OracleSystem, &ds).accuracy);
    println!("random  {:.3}", evaluate(&RandomSystem { seed: 1 }, &ds).accuracy);
    println!("ir      {:.3}", evaluate(&ir, &ds).accuracy);
    println!("ir, answer only {:.3}", evaluate(&ir, &mask_stems(&ds)).accuracy);

    // Grow every question to eight options with the distractors the solver
    // finds most attractive.
    let questions = ds.questions.iter().map(|q| adversarial_augment(&ir, q, &harvest_pool(&ds, &q.id), 8).0).collect();
    let adv = Dataset::new("adversarial", questions)?;
    let adv_report = evaluate(&ir, &adv);
    println!("ir, adversarial 8-way {:.3}", adv_report.accuracy);

    // Pairs share a stem and options but differ in the key; only a system
    // that reads the stem can get both.
    let pairs: Vec<_> = ds.questions.chunks(4).map(|b| (b[0].clone(), b[1].clone())).collect();
    let paired = paired_eval(&ir, &pairs)?;
    println!("pairs both right {}/{}", paired.both_right, paired.pairs);

    // The misses, bucketed by whether retrieval even surfaced text for the
    // correct option. Here it did: the decoy simply outscored it.
    print!("{}", support_report(&adv_report, &index, 0.5, 20)?.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
