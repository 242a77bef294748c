// Acceptance run: one PASS/FAIL line per criterion.
//
// Criteria that cannot be met in this environment (public data not present,
// or results that need fine-tuned language models) print FAIL with the
// reason but do not fail the run; every other FAIL exits non-zero.
//
// The dataset-fidelity check runs when SCIQA_ARC_DIR points at a directory
// holding `{Regents-4th,Regents-8th,Regents-12th,ARC-Easy,ARC-Challenge}-{Train,Dev,Test}.jsonl`.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sciqa::commands::{cmd_eval, cmd_train};
use sciqa::config::{ExternalConfig, RunConfig};
use sciqa::dataset::{expected_random_score, load_dataset, mask_stems, write_dataset};
use sciqa::ensemble::EnsembleConfig;
use sciqa::eval::{
    adversarial_augment, evaluate, harvest_pool, paired_eval, AnswerSystem, OracleSystem, RandomSystem, SystemOutput,
};
use sciqa::external::{parse_response, Endpoint, ExternalRequest, ExternalSolver, StubScorer, SubprocessEndpoint};
use sciqa::fixtures::{planted, term_bank, PlantedSpec};
use sciqa::pipeline::{SolverParams, SolverToggles};
use sciqa::probe::{generate, probe_oracle, ProbeKind, ProbeSpec};
use sciqa::solver::{IrSolver, NGramStats, Smoothing};
use sciqa::tuple::{optimize_support_graph, validate_support_graph, GraphConfig};
use sciqa::{Bm25Params, Dataset, Knowledge, Partition, Question, SentenceIndex, Solver, System};

struct Outcome {
    pass: bool,
    /// False when the criterion cannot be met here whatever the code does.
    attainable: bool,
    detail: String,
}

fn pass_if(pass: bool, detail: String) -> Outcome {
    Outcome { pass, attainable: true, detail }
}

fn unattainable(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, attainable: false, detail: detail.into() }
}

// ------------------------------------------------------------------- 1

const TABLE: &[(&str, [usize; 3])] = &[
    ("Regents-4th", [127, 20, 109]),
    ("Regents-8th", [125, 25, 119]),
    ("Regents-12th", [665, 282, 632]),
    ("ARC-Easy", [2251, 570, 2376]),
    ("ARC-Challenge", [1119, 299, 1172]),
];

fn dataset_fidelity() -> Outcome {
    // Whatever split of the 39 non-4-way questions into 3- and 5-way, the
    // expected random score stays inside the stated tolerance.
    let total: f64 = 9366.0;
    let lo: f64 = (9327.0 * 0.25 + 39.0 / 5.0) / total;
    let hi: f64 = (9327.0 * 0.25 + 39.0 / 3.0) / total;
    let arithmetic = (lo - 0.2502).abs() <= 0.0005 && (hi - 0.2502).abs() <= 0.0005;

    let Some(dir) = std::env::var_os("SCIQA_ARC_DIR") else {
        return unattainable(format!(
            "public question files not available (set SCIQA_ARC_DIR); published counts are self-consistent: \
             random score spans [{lo:.4}, {hi:.4}] over all 3/5-way splits ({})",
            if arithmetic { "within 0.2502 +/- 0.0005" } else { "OUTSIDE tolerance" }
        ));
    };
    let start = Instant::now();
    let dir = Path::new(&dir);
    let mut problems = Vec::new();
    let mut regents_arc: Vec<Dataset> = Vec::new();
    for (name, want) in TABLE {
        for (part, &n) in ["Train", "Dev", "Test"].iter().zip(want) {
            let path = dir.join(format!("{name}-{part}.jsonl"));
            match load_dataset(&path) {
                Ok(ds) => {
                    if ds.len() != n {
                        problems.push(format!("{name} {part}: {} != {n}", ds.len()));
                    }
                    if !name.starts_with("Regents-4") && !name.starts_with("Regents-8") {
                        regents_arc.push(ds);
                    }
                }
                Err(e) => problems.push(format!("{}: {e}", path.display())),
            }
        }
    }
    let all = Dataset::union("all", &regents_arc);
    if all.len() != 9366 {
        problems.push(format!("total {} != 9366", all.len()));
    }
    let score = expected_random_score(&all).unwrap_or(f64::NAN);
    if (score - 0.2502).abs() > 0.0005 {
        problems.push(format!("random score {score:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        problems.push(format!("took {secs:.1}s"));
    }
    pass_if(problems.is_empty(), format!("{} questions, random {score:.4}, {secs:.1}s {problems:?}", all.len()))
}

// ------------------------------------------------------------------- 2

fn pmi_oracle() -> Outcome {
    let start = Instant::now();
    let failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let size = 2 + (seed as usize % 10);
            let corpus = common::random_corpus(seed, size, 500);
            let stats = NGramStats::build(&corpus, size).unwrap().with_smoothing(Smoothing::None);
            let windows = common::all_windows(&corpus, size);
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut bad = Vec::new();
            if stats.window_count() != windows.len() as u64 {
                bad.push(format!("seed {seed}: {} windows vs {}", stats.window_count(), windows.len()));
            }
            if windows.is_empty() {
                return bad;
            }
            for _ in 0..50 {
                let wx = rng.gen_range(0..windows.len());
                let x = common::sample_gram(&mut rng, &windows[wx]);
                let wy = rng.gen_range(0..windows.len());
                let y = common::sample_gram(&mut rng, &windows[wy]);
                let want = common::pmi_by_counting(&windows, &x, &y);
                let got = stats.pmi(&x, &y).unwrap();
                let same = if want.is_infinite() { got == want } else { (got - want).abs() <= 1e-9 };
                if !same {
                    bad.push(format!("seed {seed}: pmi({x}, {y}) = {got} vs {want}"));
                }
            }
            bad
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    pass_if(
        failures.is_empty() && secs < 30.0,
        format!("100 corpora x 50 pairs, tol 1e-9, {secs:.1}s{}", first(&failures)),
    )
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!("; first mismatch: {s} ({} total)", v.len())).unwrap_or_default()
}

// ------------------------------------------------------------------- 3

fn support_graph_exactness() -> Outcome {
    let start = Instant::now();
    let run = |dyadic: bool| -> Vec<String> {
        (0..1000u64)
            .into_par_iter()
            .filter_map(|seed| {
                let inst = common::random_graph_instance(seed, 12, dyadic);
                let cfg = GraphConfig { max_tuples: inst.max_tuples, penalty: inst.penalty, ..GraphConfig::default() };
                let graph = optimize_support_graph(&inst.cands, cfg);
                if let Err(e) = validate_support_graph(&graph, &inst.cands, cfg) {
                    return Some(format!("seed {seed}: invalid graph: {e}"));
                }
                let want = common::brute_force_objective(&inst);
                let ok = if dyadic { graph.objective == want } else { (graph.objective - want).abs() <= 1e-9 };
                (!ok).then(|| format!("seed {seed}: {} vs brute force {want}", graph.objective))
            })
            .collect()
    };
    let mut failures = run(true);
    failures.extend(run(false));
    let secs = start.elapsed().as_secs_f64();
    pass_if(
        failures.is_empty() && secs < 120.0,
        format!(
            "1000 exact-arithmetic instances (==) + 1000 default-weight instances (1e-9), all validated, {secs:.1}s{}",
            first(&failures)
        ),
    )
}

// ------------------------------------------------------------------- 4-6

struct Planted {
    dataset: Dataset,
    knowledge: Knowledge,
}

fn planted_setup(decoy_rate: f64) -> Planted {
    let fx = planted(PlantedSpec { decoy_rate, ..PlantedSpec::default() });
    let knowledge =
        Knowledge::build(&fx.corpus, &term_bank(), SolverParams::default(), SolverToggles::default()).unwrap();
    Planted { dataset: fx.dataset, knowledge }
}

fn trained(p: &Planted) -> System {
    let mut system = System::new(p.knowledge.solvers(SolverToggles::default())).unwrap();
    system.train(&p.dataset.partition(Partition::Train), EnsembleConfig::default()).unwrap();
    system
}

fn planted_end_to_end(p: &Planted) -> Outcome {
    let test = p.dataset.partition(Partition::Test);
    let ir = System::single(Box::new(IrSolver::new(p.knowledge.index.clone())));
    let ir_all = evaluate(&ir, &p.dataset).accuracy;
    let system = trained(p);
    let report = evaluate(&system, &test);
    let per_solver = report.solver_accuracy();
    let (best_name, best) = per_solver
        .iter()
        .map(|(n, t)| (n.clone(), t.accuracy()))
        .fold((String::new(), f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let singles: Vec<String> = per_solver.iter().map(|(n, t)| format!("{n} {:.3}", t.accuracy())).collect();
    pass_if(
        ir_all >= 0.95 && report.accuracy >= best - 0.01,
        format!(
            "{} questions; IR alone {ir_all:.3} (>= 0.95); held-out ensemble {:.3} vs best single {best_name} {best:.3} - 0.01 [{}]",
            p.dataset.len(),
            report.accuracy,
            singles.join(", ")
        ),
    )
}

fn answer_only(p: &Planted) -> Outcome {
    let blind = mask_stems(&p.dataset);
    let mut lines = Vec::new();
    let mut ok = true;
    for solver in p.knowledge.solvers(SolverToggles::default()) {
        let name = solver.name().to_string();
        let acc = evaluate(&System::single(solver), &blind).accuracy;
        ok &= (acc - 0.25).abs() <= 0.05;
        lines.push(format!("{name} {acc:.3}"));
    }
    let acc = evaluate(&trained(p), &blind).accuracy;
    ok &= (acc - 0.25).abs() <= 0.05;
    lines.push(format!("ensemble {acc:.3}"));
    pass_if(ok, format!("stems masked, within 0.25 +/- 0.05: {}", lines.join(", ")))
}

fn adversarial(p: &Planted) -> Outcome {
    let system = trained(p);
    let test = p.dataset.partition(Partition::Test);
    let before = evaluate(&system, &test);

    // Does any single pool text fool the system on a question it gets right?
    let fooling = test.questions.par_iter().zip(&before.records).filter(|(_, r)| r.correct).any(|(q, _)| {
        harvest_pool(&p.dataset, &q.id).iter().any(|text| {
            if q.options.iter().any(|o| o.text.eq_ignore_ascii_case(text)) {
                return false;
            }
            let mut q5 = q.clone();
            q5.options.push(sciqa::AnswerOption::new(sciqa::dataset::letter_label(q.arity()), text.as_str()));
            system.answer(&q5).chosen != q.answer_key
        })
    });

    let augmented: Vec<Question> = test
        .questions
        .par_iter()
        .map(|q| adversarial_augment(&system, q, &harvest_pool(&p.dataset, &q.id), 8).0)
        .collect();
    let preserved = test
        .questions
        .iter()
        .zip(&augmented)
        .all(|(q, a)| a.answer_key == q.answer_key && a.options[..q.arity()] == q.options[..] && a.arity() == 8);
    let after = evaluate(&system, &Dataset::new("adversarial", augmented).unwrap());
    let ok = preserved && after.accuracy <= before.accuracy && (!fooling || after.accuracy < before.accuracy);
    pass_if(
        ok,
        format!(
            "ensemble {:.3} -> {:.3} on {} 8-way questions; fooling distractor exists: {fooling}; keys and original options preserved: {preserved}",
            before.accuracy,
            after.accuracy,
            test.len()
        ),
    )
}

// ------------------------------------------------------------------- 7

fn probes() -> Outcome {
    let mut problems = Vec::new();
    let mut checked = 0;
    for kind in ProbeKind::ALL {
        for seed in 0..10u64 {
            let k = 2 + seed as usize % 4;
            let spec = ProbeSpec::new(kind, 1000, seed).conjuncts(k, seed % 3 == 2);
            let ds = generate(&spec).unwrap();
            for q in &ds.questions {
                checked += 1;
                match probe_oracle(q, kind) {
                    Ok(key) if key == q.answer_key => {}
                    other => problems.push(format!("{}: oracle {other:?} vs {}", q.id, q.answer_key)),
                }
                if kind == ProbeKind::Conjunction {
                    let opts: Vec<&str> = q.options.iter().map(|o| o.text.as_str()).collect();
                    let hits = common::conjunction_answer(&q.stem, &opts);
                    if hits.len() != 1 || q.options[hits[0]].label != q.answer_key {
                        problems.push(format!("{}: brute force {hits:?}", q.id));
                    }
                }
            }
        }
    }
    let mut balance = Vec::new();
    for kind in ProbeKind::ALL {
        let ds = generate(&ProbeSpec::new(kind, 10_000, 42)).unwrap();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for q in &ds.questions {
            *counts.entry(q.answer_key.as_str()).or_default() += 1;
        }
        let fracs: Vec<f64> = counts.values().map(|&c| c as f64 / ds.len() as f64).collect();
        if counts.len() != 4 || fracs.iter().any(|f| (f - 0.25).abs() > 0.02) {
            problems.push(format!("{kind} balance {counts:?}"));
        }
        balance.push(format!("{kind} {}", fracs.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join("/")));
    }

    let names = ["Alan", "Bob", "Charlie", "David"];
    let printed = [
        (ProbeKind::Negation, "Alan is small. Alan is tall. Bob is big. Bob is tall. Charlie is big. Charlie is tall. David is small. David is short. Which of the following is not tall?"),
        (ProbeKind::Conjunction, "Alan is red. Alan is big. Bob is blue. Bob is small. Charlie is blue. Charlie is big. David is red. David is small. Which of the following is big and blue?"),
        (ProbeKind::Conjunction, "Alan is red. Alan is big. Alan is light. Alan is old. Alan is tall. Bob is red. Bob is small. Bob is heavy. Bob is old. Bob is tall. Charlie is blue. Charlie is big. Charlie is light. Charlie is old. Charlie is tall. David is red. David is small. David is heavy. David is young. David is tall. Which of the following is old and red and light and big and not short?"),
    ];
    let keys: Vec<String> = printed
        .iter()
        .map(|(kind, stem)| probe_oracle(&common::question("printed", stem, &names, "A"), *kind).unwrap_or_default())
        .collect();
    let five_brute: Vec<&str> =
        common::conjunction_answer(printed[2].1, &names).into_iter().map(sciqa::dataset::letter_label).collect();
    if keys != ["D", "C", "A"] || five_brute != ["A"] {
        problems.push(format!("printed items {keys:?}, five-conjunct brute force {five_brute:?}"));
    }
    pass_if(
        problems.is_empty(),
        format!(
            "{checked} generated keys re-derived (3 kinds x 10 seeds); balance over 10k: {}; printed items {} (brute force {}){}",
            balance.join(", "),
            keys.join(""),
            five_brute.join(""),
            first(&problems)
        ),
    )
}

// ------------------------------------------------------------------- 8

fn paired_laws() -> Outcome {
    let pairs: Vec<(Question, Question)> = (0..10_000)
        .map(|i| {
            let stem = format!("Which way does comparison {i} go?");
            let a = common::question(&format!("p{i}-a"), &stem, &["more", "less"], "A");
            let b = common::question(&format!("p{i}-b"), &stem, &["more", "less"], "B");
            (a, b)
        })
        .collect();
    let oracle = paired_eval(&OracleSystem, &pairs).unwrap().fraction;
    let insensitive = |q: &Question| SystemOutput::choice(q, "A");
    let flat = paired_eval(&insensitive, &pairs).unwrap().fraction;
    let random = paired_eval(&RandomSystem { seed: 2024 }, &pairs).unwrap().fraction;
    pass_if(
        oracle == 1.0 && flat == 0.0 && (random - 0.25).abs() <= 0.04,
        format!("oracle {oracle:.3} (1.0), flip-insensitive {flat:.3} (0.0), random over 10k 2-way pairs {random:.4} (0.25 +/- 0.04)"),
    )
}

// ------------------------------------------------------------------- 9

fn stub_command() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_sciqa").to_string(), "stub".to_string()]
}

fn external_protocol() -> Outcome {
    let mut problems = Vec::new();
    let fx = planted(PlantedSpec { blocks: 6, train_blocks: 3, ..PlantedSpec::default() });
    let index = Arc::new(SentenceIndex::build(&fx.corpus, Bm25Params::default()));

    // id echo and arity, in process and through the binary.
    let sub = SubprocessEndpoint::new(&stub_command(), Duration::from_secs(10), 2).unwrap();
    for q in &fx.dataset.questions {
        let req = ExternalRequest::new(q, vec![fx.support[0].clone()]);
        let local = StubScorer.score(&req);
        let remote = sub.score(&req);
        match (&local, &remote) {
            (Ok(l), Ok(r)) if l == r && r.id == q.id && r.confidences.len() == q.arity() => {}
            _ => problems.push(format!("{}: local {local:?} remote {remote:?}", q.id)),
        }
    }

    // Response validation.
    let q = &fx.dataset.questions[0];
    let req = ExternalRequest::new(q, Vec::new());
    let cases = [
        (r#"{"id":"other","confidences":[0,0,0,0]}"#, "id-mismatch"),
        (&format!(r#"{{"id":"{}","confidences":[0.1,0.2]}}"#, q.id)[..], "arity-mismatch"),
        (&format!(r#"{{"id":"{}","confidences":[0.1,null,0.2,0.3]}}"#, q.id)[..], "malformed"),
        ("not json", "malformed"),
    ];
    for (line, want) in cases {
        match parse_response(line, &req) {
            Err(e) if e.kind() == want => {}
            other => problems.push(format!("{line}: {other:?}, wanted {want}")),
        }
    }

    // Abstention on misbehaving scorers.
    let sh = |script: &str| vec!["sh".to_string(), "-c".to_string(), script.to_string()];
    let bad = [
        (sh("sleep 5"), "timeout"),
        (sh("while read l; do echo garbage; done"), "malformed"),
        (sh("while read l; do echo '{\"id\":\"nope\",\"confidences\":[1,1,1,1]}'; done"), "id-mismatch"),
        (sh("exit 0"), "unreachable"),
    ];
    for (cmd, want) in bad {
        let ep = SubprocessEndpoint::new(&cmd, Duration::from_millis(500), 1).unwrap();
        let p = ExternalSolver::new("bad", Box::new(ep), index.clone()).solve(q);
        let reason = p.abstained.clone().unwrap_or_default();
        if !reason.starts_with(want) || p.confidences.iter().any(|&c| c != 0.0) {
            problems.push(format!("{want}: abstained {:?}, confidences {:?}", p.abstained, p.confidences));
        }
    }

    // End to end through the batch commands with the stub as a fifth solver.
    let e2e = (|| -> anyhow::Result<String> {
        let dir = tempfile::tempdir()?;
        std::fs::write(dir.path().join("corpus.txt"), fx.corpus.join("\n"))?;
        let data = dir.path().join("planted.jsonl");
        write_dataset(&fx.dataset, &data)?;
        let mut cfg = RunConfig::for_corpus(dir.path().join("corpus.txt"));
        cfg.datasets = vec![data.clone()];
        cfg.output_dir = dir.path().join("out");
        cfg.external.push(ExternalConfig {
            name: "stub".into(),
            command: Some(stub_command()),
            url: None,
            timeout_ms: 10_000,
            pool: 2,
            context_k: 5,
            context_cap: 64,
        });
        let (model_path, model) = cmd_train(&cfg)?;
        anyhow::ensure!(model.solvers.contains_key("stub"), "stub missing from model");
        cfg.model = Some(model_path);
        let out = cmd_eval(&cfg, &data, false, None, false)?;
        let stub_answers = out
            .report
            .records
            .iter()
            .filter(|r| r.predictions.iter().any(|p| p.solver == "stub" && p.abstained.is_none()))
            .count();
        anyhow::ensure!(stub_answers == out.report.n, "stub answered {stub_answers}/{}", out.report.n);
        Ok(format!(
            "end-to-end {} questions, accuracy {:.3}, stub weight {:+.3}",
            out.report.n, out.report.accuracy, model.solvers["stub"].weight
        ))
    })();
    let e2e = match e2e {
        Ok(s) => s,
        Err(e) => {
            problems.push(format!("end-to-end: {e:#}"));
            String::new()
        }
    };
    pass_if(
        problems.is_empty(),
        format!(
            "{} questions echoed by in-process and subprocess stubs; 4 validation cases; timeout/malformed/id/unreachable abstain; {e2e}{}",
            fx.dataset.len(),
            first(&problems)
        ),
    )
}

// ------------------------------------------------------------------- 10

fn not_reproducible() -> Outcome {
    unattainable(
        "not reproducible at desk scale: the language-model accuracies (91.6% grade 8, 83%+ grade 12), \
         answer-only 35%/38%, probe scores 94/98/95/94/80/75/67.1/66.5/6% and the 13/57/27/3% manual \
         failure split need fine-tuned language models or human judgment; criteria 1-9 stand in for them",
    )
}

#[derive(Default)]
struct Fixtures {
    plain: Option<Planted>,
    decoys: Option<Planted>,
}

impl Fixtures {
    fn plain(&mut self) -> &Planted {
        self.plain.get_or_insert_with(|| planted_setup(0.0))
    }
    fn decoys(&mut self) -> &Planted {
        self.decoys.get_or_insert_with(|| planted_setup(0.1))
    }
}

type Check = (&'static str, fn(&mut Fixtures) -> Outcome);

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // `cargo test -- --list` and friends: nothing to enumerate.
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let filter = args.iter().skip(1).find(|a| !a.starts_with('-')).cloned();

    let checks: [Check; 10] = [
        ("1 dataset fidelity", |_| dataset_fidelity()),
        ("2 pmi oracle equivalence", |_| pmi_oracle()),
        ("3 support-graph exactness", |_| support_graph_exactness()),
        ("4 planted end-to-end", |f| planted_end_to_end(f.plain())),
        ("5 answer-only ablation", |f| answer_only(f.plain())),
        ("6 adversarial property", |f| adversarial(f.decoys())),
        ("7 probe soundness", |_| probes()),
        ("8 paired-eval laws", |_| paired_laws()),
        ("9 external-solver protocol", |_| external_protocol()),
        ("10 headline results", |_| not_reproducible()),
    ];
    let mut fixtures = Fixtures::default();
    let mut hard_failures = 0;
    for (name, check) in checks {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check(&mut fixtures);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.attainable { "" } else { " [unattainable here]" };
        println!("criterion {name}: {verdict}{note} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass && o.attainable {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} attainable criteria failed");
        std::process::exit(1);
    }
}
