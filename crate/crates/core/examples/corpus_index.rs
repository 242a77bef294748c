// BM25 over the bundled science sentences, with a snapshot round trip.

use sciqa::fixtures::science_facts;
use sciqa::{Bm25Params, SentenceIndex};

pub fn run_example() -> anyhow::Result<()> {
    let index = SentenceIndex::build(science_facts(), Bm25Params::default());
    println!("{} sentences, {} terms, avg length {:.2}", index.len(), index.vocabulary_size(), index.avg_len());

    for hit in index.retrieve("why do metals conduct heat", 3)? {
        println!("{:>4} {:7.3}  {}", hit.sid, hit.score, hit.text);
    }

    let dir = tempfile::tempdir()?;
    let snap = dir.path().join("index.json");
    index.save(&snap)?;
    let loaded = SentenceIndex::load(&snap)?;
    assert_eq!(loaded.retrieve("photosynthesis", 5)?, index.retrieve("photosynthesis", 5)?);

    // k = 0 is a usage error, not an empty result.
    assert!(index.retrieve("anything", 0).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
