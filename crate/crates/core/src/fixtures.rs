//! Bundled data and generated test fixtures.
//!
//! The planted fixture asks which mineral a specimen contains and plants one
//! support sentence per question ("Specimen K17 contains malachite.") in a
//! background corpus that never mentions minerals. Questions come in blocks
//! of four sharing one option list, each option correct exactly once, so
//! any scorer that looks only at option text gets exactly one question per
//! block right.
//!
//! Optional decoys add a second, false sentence for some specimens that names
//! a rarely seen mineral. The decoy mineral is an option elsewhere in the
//! dataset, so adversarial augmentation can find it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{letter_label, AnswerOption, Dataset, Partition, Question, Source};
use crate::solver::parse_term_bank;

pub const SCIENCE_FACTS: &str = include_str!("../data/science_facts.txt");
pub const TERM_BANK: &str = include_str!("../data/term_bank.txt");

/// Answer words that appear in many blocks.
pub const COMMON_MINERALS: &[&str] = &[
    "malachite",
    "azurite",
    "pyrite",
    "galena",
    "sphalerite",
    "magnetite",
    "hematite",
    "cinnabar",
    "fluorite",
    "calcite",
    "dolomite",
    "halite",
    "orthoclase",
    "albite",
    "biotite",
    "muscovite",
    "talc",
    "kaolinite",
    "olivine",
    "augite",
    "hornblende",
    "garnet",
    "tourmaline",
    "beryl",
    "topaz",
    "corundum",
    "zircon",
    "rutile",
    "ilmenite",
    "chromite",
    "cassiterite",
    "barite",
    "anhydrite",
    "apatite",
    "epidote",
    "kyanite",
    "staurolite",
    "diopside",
    "serpentine",
    "siderite",
];

/// Answer words used in a single block; decoys draw from these.
pub const RARE_MINERALS: &[&str] = &[
    "wolframite",
    "scheelite",
    "celestine",
    "monazite",
    "sillimanite",
    "andalusite",
    "cordierite",
    "wollastonite",
    "enstatite",
    "chrysotile",
    "vermiculite",
    "smithsonite",
    "cerussite",
    "anglesite",
    "rhodochrosite",
    "magnesite",
    "aragonite",
    "witherite",
    "strontianite",
    "stibnite",
    "realgar",
    "orpiment",
    "molybdenite",
    "chalcopyrite",
];

pub fn science_facts() -> Vec<String> {
    SCIENCE_FACTS.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
}

pub fn term_bank() -> Vec<String> {
    parse_term_bank(TERM_BANK)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    /// Blocks of four questions.
    pub blocks: usize,
    /// Leading blocks assigned to train; the rest are test.
    pub train_blocks: usize,
    /// Fraction of questions that get a decoy sentence.
    pub decoy_rate: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self { blocks: 50, train_blocks: 25, decoy_rate: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFixture {
    pub dataset: Dataset,
    /// Background facts, then support sentences, then decoys.
    pub corpus: Vec<String>,
    /// Support sentence per question, in dataset order.
    pub support: Vec<String>,
    /// (question id, decoy mineral, decoy sentence).
    pub decoys: Vec<(String, String, String)>,
}

fn specimen(i: usize) -> String {
    format!("K{}", i + 1)
}

pub fn planted(spec: PlantedSpec) -> PlantedFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let slots = spec.blocks * 4;
    let rare_used = RARE_MINERALS.len().min(spec.blocks);
    let mut remaining: Vec<(&str, usize)> = RARE_MINERALS[..rare_used].iter().map(|&m| (m, 1)).collect();
    let common_slots = slots - rare_used;
    for (j, &m) in COMMON_MINERALS.iter().enumerate() {
        let share = common_slots / COMMON_MINERALS.len() + usize::from(j < common_slots % COMMON_MINERALS.len());
        remaining.push((m, share));
    }

    // Fill blocks with the four most-needed distinct minerals; random
    // tie-breaks keep blocks varied.
    let mut blocks: Vec<Vec<&str>> = Vec::with_capacity(spec.blocks);
    for _ in 0..spec.blocks {
        let mut order: Vec<(usize, u64, usize)> = remaining
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c > 0)
            .map(|(k, (_, c))| (*c, rng.gen::<u64>(), k))
            .collect();
        order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut block: Vec<&str> = order.iter().take(4).map(|&(_, _, k)| remaining[k].0).collect();
        for &(_, _, k) in order.iter().take(4) {
            remaining[k].1 -= 1;
        }
        block.shuffle(&mut rng);
        blocks.push(block);
    }

    let mut questions = Vec::with_capacity(slots);
    let mut support = Vec::with_capacity(slots);
    for (b, block) in blocks.iter().enumerate() {
        for r in 0..4 {
            let i = b * 4 + r;
            let code = specimen(i);
            questions.push(Question {
                id: format!("planted-{i:03}"),
                stem: format!("Which mineral does specimen {code} contain?"),
                options: block.iter().enumerate().map(|(j, m)| AnswerOption::new(letter_label(j), *m)).collect(),
                answer_key: letter_label(r).to_string(),
                source: Some(Source { exam: "planted".into(), grade: None, year: None }),
                partition: if b < spec.train_blocks { Partition::Train } else { Partition::Test },
                augmented: false,
                pair_id: None,
            });
            support.push(format!("Specimen {code} contains {}.", block[r]));
        }
    }

    let mut decoys = Vec::new();
    let wanted = (spec.decoy_rate * slots as f64).round() as usize;
    if wanted > 0 {
        let mut eligible: Vec<usize> =
            (0..slots).filter(|&i| COMMON_MINERALS.contains(&questions[i].correct_option().text.as_str())).collect();
        eligible.shuffle(&mut rng);
        let mut pool: Vec<&str> = RARE_MINERALS[..rare_used].to_vec();
        pool.shuffle(&mut rng);
        for i in eligible {
            if decoys.len() == wanted {
                break;
            }
            let q = &questions[i];
            let Some(pos) = pool.iter().position(|m| q.options.iter().all(|o| o.text != *m)) else { continue };
            let mineral = pool.remove(pos);
            decoys.push((q.id.clone(), mineral.to_string(), format!("Specimen {} contains {mineral}.", specimen(i))));
        }
    }

    let mut corpus = science_facts();
    corpus.extend(support.iter().cloned());
    corpus.extend(decoys.iter().map(|d| d.2.clone()));
    let dataset = Dataset::new("planted", questions).expect("generated ids are unique");
    PlantedFixture { dataset, corpus, support, decoys }
}
