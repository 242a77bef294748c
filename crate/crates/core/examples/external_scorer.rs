// Wire an out-of-process scorer in as a solver. The reference stub is
// served over HTTP on a loopback port; a subprocess endpoint speaks the
// same JSON lines over stdin/stdout.

use std::sync::Arc;
use std::time::Duration;

use sciqa::dataset::letter_label;
use sciqa::external::{serve_stub_http, ExternalRequest, ExternalSolver, HttpEndpoint, StubScorer};
use sciqa::{AnswerOption, Bm25Params, Partition, Question, SentenceIndex, Solver};

pub fn run_example() -> anyhow::Result<()> {
    let q = Question {
        id: "rust".into(),
        stem: "Which metal rusts when left in wet air?".into(),
        options: ["gold", "iron", "platinum"]
            .iter()
            .enumerate()
            .map(|(i, t)| AnswerOption::new(letter_label(i), *t))
            .collect(),
        answer_key: "B".into(),
        source: None,
        partition: Partition::Test,
        augmented: false,
        pair_id: None,
    };
    let index = Arc::new(SentenceIndex::build(
        ["Iron rusts in wet air.", "Gold does not react with air.", "Platinum is a precious metal."],
        Bm25Params::default(),
    ));

    // What goes over the wire.
    let req = ExternalRequest::new(&q, vec!["Iron rusts in wet air.".into()]);
    println!("> {}", serde_json::to_string(&req)?);
    println!("< {}", StubScorer.respond_line(&serde_json::to_string(&req)?));

    let server = tiny_http::Server::http("127.0.0.1:0").map_err(|e| anyhow::anyhow!("{e}"))?;
    let url = format!("http://{}", server.server_addr());
    let handle = std::thread::spawn(move || serve_stub_http(server, Some(1)));

    let solver = ExternalSolver::new("stub", Box::new(HttpEndpoint::new(&url, Duration::from_secs(5))), index.clone());
    let p = solver.solve(&q);
    println!("stub over http chose {} {:?}", p.chosen, p.confidences);
    handle.join().expect("server thread");

    // A dead endpoint abstains instead of failing the run.
    let dead = ExternalSolver::new("dead", Box::new(HttpEndpoint::new(&url, Duration::from_millis(200))), index);
    let p = dead.solve(&q);
    println!("dead endpoint: abstained = {:?}", p.abstained);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
