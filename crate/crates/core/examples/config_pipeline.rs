// The batch flow the binary runs, driven from a TOML config: index the
// corpus, train the ensemble, evaluate with a gate.

use std::fs;

use sciqa::commands::{cmd_eval, cmd_index, cmd_train};
use sciqa::config::RunConfig;
use sciqa::dataset::write_dataset;
use sciqa::fixtures::{planted, PlantedSpec};

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let fx = planted(PlantedSpec { blocks: 12, train_blocks: 6, ..PlantedSpec::default() });
    fs::write(dir.path().join("corpus.txt"), fx.corpus.join("\n"))?;
    write_dataset(&fx.dataset, dir.path().join("minerals.jsonl"))?;
    let test = fx.dataset.partition(sciqa::Partition::Test);
    write_dataset(&test, dir.path().join("test.jsonl"))?;

    fs::write(
        dir.path().join("run.toml"),
        r#"
corpus = "corpus.txt"
index = "out/index.json"
datasets = ["minerals.jsonl"]
model = "out/model.json"

[solvers]
tuple = false

[params]
retrieval_k = 10
"#,
    )?;
    let cfg = RunConfig::load(dir.path().join("run.toml"))?;

    let summary = cmd_index(&cfg.corpus, cfg.index.as_ref().expect("set above"), cfg.params.bm25())?;
    println!("index: {} sentences", summary.sentences);
    let (path, model) = cmd_train(&cfg)?;
    println!("model: {} solvers -> {}", model.solvers.len(), path.display());

    let outcome = cmd_eval(&cfg, &dir.path().join("test.jsonl"), false, Some(0.9), false)?;
    print!("{}", outcome.report.to_text());
    println!("gate passed: {}", outcome.passed_gate);
    for f in &outcome.files {
        println!("wrote {}", f.file_name().and_then(|n| n.to_str()).unwrap_or("?"));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
