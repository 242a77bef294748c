// Train the logistic ensemble over the four local solvers on a planted
// corpus and compare it with each solver alone.

use sciqa::ensemble::EnsembleConfig;
use sciqa::eval::evaluate;
use sciqa::fixtures::{planted, term_bank, PlantedSpec};
use sciqa::pipeline::{SolverParams, SolverToggles};
use sciqa::{Knowledge, Partition, System};

pub fn run_example() -> anyhow::Result<()> {
    let fx = planted(PlantedSpec { blocks: 20, train_blocks: 10, ..PlantedSpec::default() });
    let (train, test) = (fx.dataset.partition(Partition::Train), fx.dataset.partition(Partition::Test));

    let knowledge = Knowledge::build(&fx.corpus, &term_bank(), SolverParams::default(), SolverToggles::default())?;
    let mut system = System::new(knowledge.solvers(SolverToggles::default()))?;
    println!("solvers: {:?}", system.solver_names());

    let model = system.train(&train, EnsembleConfig::default())?.clone();
    for (name, w) in &model.solvers {
        println!("{name:>6}  w {:+.3}  mean {:.3}  std {:.3}", w.weight, w.mean, w.std);
    }

    let report = evaluate(&system, &test);
    for (name, tally) in report.solver_accuracy() {
        println!("{name:>6} alone  {:.3}", tally.accuracy());
    }
    println!("ensemble     {:.3} on {} questions", report.accuracy, report.n);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.json");
    model.save(&path)?;
    println!("{}", std::fs::read_to_string(&path)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
