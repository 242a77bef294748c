use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use sciqa::commands::{self, is_validation_error};
use sciqa::config::RunConfig;
use sciqa::external::{serve_stub_http, StubScorer};
use sciqa::index::Bm25Params;
use sciqa::probe::{ProbeKind, ProbeSpec};

/// Multiple-choice science QA: index, solve, train, evaluate, probe.
#[derive(Parser)]
#[command(name = "sciqa", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Blank every stem before answering.
    #[arg(long, global = true)]
    answer_only: bool,
    /// Exit 1 when eval accuracy falls below this fraction.
    #[arg(long, global = true)]
    min_accuracy: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a BM25 snapshot of a sentence corpus.
    Index {
        /// Corpus file (defaults to the config's corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.2)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
    },
    /// Write per-question predictions for a dataset.
    Solve {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the ensemble on the train partition.
    Train,
    /// Score a dataset and write reports.
    Eval {
        dataset: PathBuf,
        /// Also classify failures by corpus support.
        #[arg(long)]
        support: bool,
    },
    /// Generate a probe dataset.
    Probe {
        #[arg(long)]
        kind: ProbeKind,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Conjuncts per conjunction query.
        #[arg(long, default_value_t = 2)]
        conjuncts: usize,
        /// Negate the last conjunct.
        #[arg(long)]
        negated: bool,
    },
    /// Add adversarial distractors to every question.
    Adversarial {
        dataset: PathBuf,
        /// Candidate texts, one per line (default: other questions' options).
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        arity: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Both-right rate over original/flipped pairs.
    Paired { pairs: PathBuf },
    /// Run the reference scorer on stdio, or over HTTP with --http.
    Stub {
        #[arg(long)]
        http: Option<String>,
    },
}

fn load_config(cli: &Cli) -> sciqa::Result<RunConfig> {
    let path = cli.config.as_deref().ok_or_else(|| sciqa::Error::Config("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg)
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.cmd {
        Cmd::Index { corpus, out, k1, b } => {
            let corpus = match corpus {
                Some(c) => c.clone(),
                None => load_config(&cli)?.corpus,
            };
            let s = commands::cmd_index(&corpus, out, Bm25Params { k1: *k1, b: *b })?;
            println!("indexed {} sentences, {} terms -> {}", s.sentences, s.vocabulary, show(&s.path));
        }
        Cmd::Solve { dataset, out } => {
            let cfg = load_config(&cli)?;
            let path = commands::cmd_solve(&cfg, dataset, cli.answer_only, out.as_deref())?;
            println!("{}", show(&path));
        }
        Cmd::Train => {
            let cfg = load_config(&cli)?;
            let (path, model) = commands::cmd_train(&cfg)?;
            for (name, w) in &model.solvers {
                println!("{name:>10}  weight {:+.4}  mean {:.4}  std {:.4}", w.weight, w.mean, w.std);
            }
            println!("model -> {}", show(&path));
        }
        Cmd::Eval { dataset, support } => {
            let cfg = load_config(&cli)?;
            let out = commands::cmd_eval(&cfg, dataset, cli.answer_only, cli.min_accuracy, *support)?;
            print!("{}", out.report.to_text());
            if let Some(s) = &out.support {
                print!("{}", s.to_text());
            }
            if !out.passed_gate {
                eprintln!(
                    "accuracy {:.4} is below --min-accuracy {:.4}",
                    out.report.accuracy,
                    cli.min_accuracy.unwrap_or_default()
                );
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Probe { kind, n, out, conjuncts, negated } => {
            let seed = match (cli.seed, &cli.config) {
                (Some(s), _) => s,
                (None, Some(_)) => load_config(&cli)?.seed,
                (None, None) => 0,
            };
            let spec = ProbeSpec::new(*kind, *n, seed).conjuncts(*conjuncts, *negated);
            let ds = commands::cmd_probe(&spec, out)?;
            println!("{} {kind} probes -> {}", ds.len(), show(out));
        }
        Cmd::Adversarial { dataset, pool, arity, out } => {
            let cfg = load_config(&cli)?;
            let ds = commands::cmd_adversarial(&cfg, dataset, pool.as_deref(), *arity, out)?;
            println!("{} questions -> {}", ds.len(), show(out));
        }
        Cmd::Paired { pairs } => {
            let cfg = load_config(&cli)?;
            let r = commands::cmd_paired(&cfg, pairs)?;
            println!(
                "pairs {}  both right {} ({:.4})  original {:.4}  flipped {:.4}",
                r.pairs, r.both_right, r.fraction, r.original_accuracy, r.flipped_accuracy
            );
        }
        Cmd::Stub { http } => match http {
            None => {
                let stdin = std::io::stdin();
                StubScorer.serve(stdin.lock(), std::io::stdout()).context("stub")?;
            }
            Some(addr) => {
                let server = tiny_http::Server::http(addr).map_err(|e| anyhow!("bind {addr}: {e}"))?;
                eprintln!("listening on {}", server.server_addr());
                serve_stub_http(server, None);
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<sciqa::Error>() {
                Some(inner) if is_validation_error(inner) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
