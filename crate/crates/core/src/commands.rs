//! The batch commands behind the `sciqa` binary. Each writes its artifacts
//! and returns a summary; the binary only parses flags and maps errors to
//! exit codes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::dataset::{load_dataset, load_pairs, mask_stems, write_dataset, Dataset, Partition};
use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::eval::{
    adversarial_augment, evaluate, harvest_pool, paired_eval, support_report, EvalReport, PairedReport, SupportReport,
};
use crate::index::{Bm25Params, SentenceIndex};
use crate::pipeline::System;
use crate::probe::{generate, ProbeSpec};

/// True for errors caused by bad input rather than a failure while running.
pub fn is_validation_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Validation { .. }
            | Error::Snapshot { .. }
            | Error::Dataset(_)
            | Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::Unparseable(_)
    )
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn stem_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").trim_end_matches(".jsonl").to_string()
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_records(report: &EvalReport, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in &report.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub sentences: usize,
    pub vocabulary: usize,
    pub path: PathBuf,
}

pub fn cmd_index(corpus: &Path, out: &Path, params: Bm25Params) -> Result<IndexSummary> {
    params.validate()?;
    require(corpus)?;
    let index = SentenceIndex::from_file(corpus, params)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    index.save(out)?;
    Ok(IndexSummary { sentences: index.len(), vocabulary: index.vocabulary_size(), path: out.to_path_buf() })
}

/// Missing inputs are usage errors, not runtime failures.
fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{} does not exist", path.display())))
    }
}

fn load_for_run(path: &Path, answer_only: bool) -> Result<Dataset> {
    require(path)?;
    let ds = load_dataset(path)?;
    Ok(if answer_only { mask_stems(&ds) } else { ds })
}

fn build_system(cfg: &RunConfig) -> Result<System> {
    cfg.validate()?;
    let knowledge = cfg.knowledge()?;
    cfg.system(&knowledge)
}

/// Per-question records (stem, options, chosen, scores, every solver's
/// confidences) as JSON lines.
pub fn cmd_solve(cfg: &RunConfig, dataset: &Path, answer_only: bool, out: Option<&Path>) -> Result<PathBuf> {
    let system = build_system(cfg)?;
    let ds = load_for_run(dataset, answer_only)?;
    let report = with_workers(cfg.workers, || evaluate(&system, &ds))?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            fs::create_dir_all(&cfg.output_dir)?;
            cfg.output_dir.join(format!("{}.predictions.jsonl", stem_name(dataset)))
        }
    };
    write_records(&report, &path)?;
    Ok(path)
}

fn train_set(cfg: &RunConfig) -> Result<Dataset> {
    let mut parts = Vec::new();
    for p in &cfg.datasets {
        parts.push(load_dataset(p)?.partition(Partition::Train));
    }
    let train = Dataset::union("train", &parts);
    if train.is_empty() {
        return Err(Error::Config("no train-partition questions in the configured datasets".into()));
    }
    Ok(train)
}

/// Fit the ensemble on the train partition of every configured dataset.
/// With `ensemble.retrain_augmented`, refit on the union of the originals
/// and their adversarial 8-way versions.
pub fn cmd_train(cfg: &RunConfig) -> Result<(PathBuf, EnsembleModel)> {
    let mut system = build_system(cfg)?;
    let train = train_set(cfg)?;
    with_workers(cfg.workers, || system.train(&train, cfg.ensemble.config()).map(|_| ()))??;
    if cfg.ensemble.retrain_augmented {
        let augmented = with_workers(cfg.workers, || augment_all(&system, &train, None, 8))?;
        let mut renamed = augmented.questions;
        renamed.iter_mut().for_each(|q| q.id = format!("{}#adv", q.id));
        let both = Dataset::union("train+adversarial", &[train.clone(), Dataset::new("adv", renamed)?]);
        with_workers(cfg.workers, || system.train(&both, cfg.ensemble.config()).map(|_| ()))??;
    }
    let model = system.model().expect("trained above").clone();
    let path = cfg.model_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    model.save(&path)?;
    Ok((path, model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub support: Option<SupportReport>,
    pub passed_gate: bool,
    pub files: Vec<PathBuf>,
}

/// Evaluate a dataset file and write `<name>.eval.{txt,json}` and
/// `<name>.predictions.jsonl` (plus `<name>.support.{txt,json}` on request)
/// to the output directory.
pub fn cmd_eval(
    cfg: &RunConfig,
    dataset: &Path,
    answer_only: bool,
    min_accuracy: Option<f64>,
    support: bool,
) -> Result<EvalOutcome> {
    if let Some(m) = min_accuracy {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::InvalidArgument(format!("--min-accuracy must lie in [0, 1], got {m}")));
        }
    }
    let knowledge = {
        cfg.validate()?;
        cfg.knowledge()?
    };
    let system = cfg.system(&knowledge)?;
    let ds = load_for_run(dataset, answer_only)?;
    let report = with_workers(cfg.workers, || evaluate(&system, &ds))?;
    fs::create_dir_all(&cfg.output_dir)?;
    let name = format!("{}{}", stem_name(dataset), if answer_only { ".answer-only" } else { "" });
    let file = |suffix: &str| cfg.output_dir.join(format!("{name}.{suffix}"));
    let mut files = vec![file("eval.txt"), file("eval.json"), file("predictions.jsonl")];
    fs::write(&files[0], report.to_text())?;
    write_json(&report, &files[1])?;
    write_records(&report, &files[2])?;
    let support = if support {
        let s = support_report(&report, &knowledge.index, 0.5, cfg.params.retrieval_k)?;
        let (txt, json) = (file("support.txt"), file("support.json"));
        fs::write(&txt, s.to_text())?;
        write_json(&s, &json)?;
        files.extend([txt, json]);
        Some(s)
    } else {
        None
    };
    let passed_gate = min_accuracy.is_none_or(|m| report.accuracy >= m);
    Ok(EvalOutcome { report, support, passed_gate, files })
}

pub fn cmd_probe(spec: &ProbeSpec, out: &Path) -> Result<Dataset> {
    let ds = generate(spec)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_dataset(&ds, out)?;
    Ok(ds)
}

fn augment_all(system: &System, ds: &Dataset, pool: Option<&[String]>, target_arity: usize) -> Dataset {
    use rayon::prelude::*;
    let questions = ds
        .questions
        .par_iter()
        .map(|q| {
            let harvested;
            let pool = match pool {
                Some(p) => p,
                None => {
                    harvested = harvest_pool(ds, &q.id);
                    &harvested[..]
                }
            };
            let (aug, flags) = adversarial_augment(system, q, pool, target_arity);
            for f in flags {
                log::warn!("{}: {f}", q.id);
            }
            aug
        })
        .collect();
    Dataset { name: format!("{}-adversarial", ds.name), questions }
}

/// Augment every question of `dataset` to `target_arity` options against the
/// configured system. The pool is a file of option texts, one per line, or
/// by default the options of the dataset's other questions.
pub fn cmd_adversarial(
    cfg: &RunConfig,
    dataset: &Path,
    pool: Option<&Path>,
    target_arity: usize,
    out: &Path,
) -> Result<Dataset> {
    if !(crate::dataset::MIN_ARITY..=crate::dataset::MAX_ARITY).contains(&target_arity) {
        return Err(Error::InvalidArgument(format!("target arity must be 3..=8, got {target_arity}")));
    }
    require(dataset)?;
    let system = build_system(cfg)?;
    let ds = load_dataset(dataset)?;
    let pool: Option<Vec<String>> = match pool {
        Some(p) => {
            require(p)?;
            let text = fs::read_to_string(p)?;
            Some(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
        }
        None => None,
    };
    let augmented = with_workers(cfg.workers, || augment_all(&system, &ds, pool.as_deref(), target_arity))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_dataset(&augmented, out)?;
    Ok(augmented)
}

/// Both-right fraction over an (original, flipped) pair file.
pub fn cmd_paired(cfg: &RunConfig, pairs: &Path) -> Result<PairedReport> {
    require(pairs)?;
    let system = build_system(cfg)?;
    let pairs = load_pairs(pairs)?;
    with_workers(cfg.workers, || paired_eval(&system, &pairs))?
}
