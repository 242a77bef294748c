// Load, validate, partition and rewrite a question file.

use sciqa::dataset::{expected_random_score, load_dataset, mask_stems, write_dataset};
use sciqa::{AnswerOption, Dataset, Partition, Question};

fn question(id: &str, stem: &str, options: &[&str], key: &str, part: Partition) -> Question {
    Question {
        id: id.into(),
        stem: stem.into(),
        options: options
            .iter()
            .enumerate()
            .map(|(i, t)| AnswerOption::new(sciqa::dataset::letter_label(i), *t))
            .collect(),
        answer_key: key.into(),
        source: None,
        partition: part,
        augmented: false,
        pair_id: None,
    }
}

pub fn run_example() -> anyhow::Result<()> {
    let ds = Dataset::new(
        "demo",
        vec![
            question(
                "q1",
                "Which gas do plants absorb?",
                &["oxygen", "carbon dioxide", "helium", "neon"],
                "B",
                Partition::Train,
            ),
            question("q2", "What melts ice fastest?", &["salt", "sand", "shade"], "A", Partition::Test),
            question("q3", "Which is a mammal?", &["trout", "whale", "frog", "newt", "crab"], "B", Partition::Test),
        ],
    )?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("demo.jsonl");
    write_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, ds);

    println!("partitions: {:?}", back.partition_counts());
    println!("arities: {:?}", back.arity_histogram());
    // 1/4, 1/3 and 1/5 averaged.
    println!("random baseline: {:.4}", expected_random_score(&back)?);

    let blind = mask_stems(&back);
    assert!(blind.questions.iter().all(|q| q.stem.is_empty()));

    // Fewer than three options is a validation error naming the line.
    std::fs::write(&path, r#"{"id":"x","stem":"?","options":[{"label":"A","text":"a"}],"answerKey":"A"}"#)?;
    match load_dataset(&path) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => anyhow::bail!("a 1-way question loaded"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
