//! Run configuration, read from TOML.
//!
//! ```toml
//! corpus = "corpus.txt"
//! term_bank = "terms.txt"       # optional; bundled bank otherwise
//! datasets = ["train.jsonl", "test.jsonl"]
//! output_dir = "out"
//! seed = 7
//!
//! [solvers]
//! tuple = false
//!
//! [params]
//! k1 = 1.2
//!
//! [[external]]
//! name = "lm"
//! command = ["python3", "score.py"]
//! ```
//!
//! Unknown keys are rejected. Relative paths resolve against the config
//! file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleConfig, EnsembleModel};
use crate::error::{Error, Result};
use crate::external::{
    Endpoint, ExternalSolver, HttpEndpoint, SubprocessEndpoint, DEFAULT_CONTEXT_CAP, DEFAULT_CONTEXT_K,
};
use crate::fixtures;
use crate::index::SentenceIndex;
use crate::pipeline::{Knowledge, SolverParams, SolverToggles, System};
use crate::solver::{load_term_bank, Solver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    pub name: String,
    /// Child process speaking the line protocol.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// Base URL of an HTTP scorer (`POST {url}/score`).
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_pool")]
    pub pool: usize,
    #[serde(default = "default_context_k")]
    pub context_k: usize,
    #[serde(default = "default_context_cap")]
    pub context_cap: usize,
}

fn default_timeout_ms() -> u64 {
    5000
}
fn default_pool() -> usize {
    1
}
fn default_context_k() -> usize {
    DEFAULT_CONTEXT_K
}
fn default_context_cap() -> usize {
    DEFAULT_CONTEXT_CAP
}

impl ExternalConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub l2: f64,
    /// Refit the ensemble on adversarially augmented training questions.
    pub retrain_augmented: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { l2: EnsembleConfig::default().l2, retrain_augmented: false }
    }
}

impl EnsembleSection {
    pub fn config(&self) -> EnsembleConfig {
        EnsembleConfig { l2: self.l2, ..EnsembleConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub term_bank: Option<PathBuf>,
    /// Prebuilt index snapshot; built from the corpus when absent.
    #[serde(default)]
    pub index: Option<PathBuf>,
    #[serde(default)]
    pub datasets: Vec<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Ensemble model to load (solve/eval) or write (train).
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub solvers: SolverToggles,
    #[serde(default)]
    pub params: SolverParams,
    #[serde(default)]
    pub external: Vec<ExternalConfig>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// A config for `corpus` with every default.
    pub fn for_corpus(corpus: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            term_bank: None,
            index: None,
            datasets: Vec::new(),
            output_dir: default_output_dir(),
            model: None,
            seed: 0,
            workers: None,
            solvers: SolverToggles::default(),
            params: SolverParams::default(),
            external: Vec::new(),
            ensemble: EnsembleSection::default(),
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output_dir);
        self.datasets.iter_mut().for_each(fix);
        for p in [&mut self.term_bank, &mut self.index, &mut self.model].into_iter().flatten() {
            fix(p);
        }
    }

    /// Check every input path exists and every value is in range. The model
    /// path is an output for training, so it is not checked here.
    pub fn validate(&self) -> Result<()> {
        let missing = |p: &Path| Err(Error::Config(format!("{} does not exist", p.display())));
        for p in [Some(&self.corpus), self.term_bank.as_ref(), self.index.as_ref()].into_iter().flatten() {
            if !p.exists() {
                return missing(p);
            }
        }
        for p in &self.datasets {
            if !p.exists() {
                return missing(p);
            }
        }
        self.params.validate()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.ensemble.l2.is_nan() || self.ensemble.l2 < 0.0 {
            return Err(Error::Config("ensemble.l2 must be >= 0".into()));
        }
        for ext in &self.external {
            match (&ext.command, &ext.url) {
                (Some(c), None) if !c.is_empty() => {}
                (None, Some(_)) => {}
                _ => return Err(Error::Config(format!("external `{}` needs exactly one of command or url", ext.name))),
            }
            if ext.timeout_ms == 0 || ext.pool == 0 {
                return Err(Error::Config(format!("external `{}`: timeout_ms and pool must be >= 1", ext.name)));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn corpus_lines(&self) -> Result<Vec<String>> {
        Ok(fs::read_to_string(&self.corpus)?.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect())
    }

    pub fn term_bank_terms(&self) -> Result<Vec<String>> {
        match &self.term_bank {
            Some(p) => load_term_bank(p),
            None => Ok(fixtures::term_bank()),
        }
    }

    /// Load or build every store the enabled local solvers read.
    pub fn knowledge(&self) -> Result<Knowledge> {
        let corpus = self.corpus_lines()?;
        let bank = self.term_bank_terms()?;
        match &self.index {
            Some(p) => Knowledge::with_index(SentenceIndex::load(p)?, &corpus, &bank, self.params, self.solvers),
            None => Knowledge::build(&corpus, &bank, self.params, self.solvers),
        }
    }

    /// Local solvers followed by the configured external ones.
    pub fn solvers(&self, knowledge: &Knowledge) -> Result<Vec<Box<dyn Solver>>> {
        let mut out = knowledge.solvers(self.solvers);
        for ext in &self.external {
            let endpoint: Box<dyn Endpoint> = match (&ext.command, &ext.url) {
                (Some(cmd), _) => Box::new(SubprocessEndpoint::new(cmd, ext.timeout(), ext.pool)?),
                (None, Some(url)) => Box::new(HttpEndpoint::new(url, ext.timeout())),
                (None, None) => return Err(Error::Config(format!("external `{}` has no endpoint", ext.name))),
            };
            out.push(Box::new(
                ExternalSolver::new(&ext.name, endpoint, knowledge.index.clone())
                    .with_context(ext.context_k, ext.context_cap),
            ));
        }
        Ok(out)
    }

    /// The configured system, with the ensemble model attached when `model`
    /// names an existing file.
    pub fn system(&self, knowledge: &Knowledge) -> Result<System> {
        let system = System::new(self.solvers(knowledge)?)?;
        match &self.model {
            Some(p) if p.exists() => system.with_model(EnsembleModel::load(p)?),
            _ => Ok(system),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.output_dir.join("model.json"))
    }
}
