//! Out-of-process solvers.
//!
//! A scorer receives one JSON object per line,
//! `{"id":..,"stem":..,"options":[{"label":..,"text":..}],"context":[..]}`,
//! and answers with one line `{"id":..,"confidences":[..]}`. The same bodies
//! travel over a child process's stdin/stdout or as `POST /score`.
//!
//! Any failure (timeout, bad JSON, wrong id or arity, non-finite values)
//! turns into an abstaining [`SolverPrediction`] so the ensemble can carry on.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AnswerOption, Question};
use crate::index::SentenceIndex;
use crate::solver::{Solver, SolverPrediction};
use crate::text::stemmed_content_words;

pub const DEFAULT_CONTEXT_K: usize = 5;
pub const DEFAULT_CONTEXT_CAP: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExternalError {
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response id `{got}` does not match request id `{expected}`")]
    IdMismatch { expected: String, got: String },
    #[error("expected {expected} confidences, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("non-finite confidence at position {0}")]
    NonFinite(usize),
    #[error("context of {got} sentences exceeds cap {cap}")]
    ContextTooLarge { cap: usize, got: usize },
}

impl ExternalError {
    /// Short machine-readable tag recorded on abstentions.
    pub fn kind(&self) -> &'static str {
        match self {
            ExternalError::Timeout(_) => "timeout",
            ExternalError::Unreachable(_) => "unreachable",
            ExternalError::Malformed(_) => "malformed",
            ExternalError::IdMismatch { .. } => "id-mismatch",
            ExternalError::ArityMismatch { .. } => "arity-mismatch",
            ExternalError::NonFinite(_) => "non-finite",
            ExternalError::ContextTooLarge { .. } => "context-too-large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRequest {
    pub id: String,
    pub stem: String,
    pub options: Vec<AnswerOption>,
    pub context: Vec<String>,
}

impl ExternalRequest {
    pub fn new(q: &Question, context: Vec<String>) -> Self {
        Self { id: q.id.clone(), stem: q.stem.clone(), options: q.options.clone(), context }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalResponse {
    pub id: String,
    pub confidences: Vec<f64>,
}

impl ExternalResponse {
    pub fn check(&self, req: &ExternalRequest) -> Result<(), ExternalError> {
        if self.id != req.id {
            return Err(ExternalError::IdMismatch { expected: req.id.clone(), got: self.id.clone() });
        }
        if self.confidences.len() != req.options.len() {
            return Err(ExternalError::ArityMismatch { expected: req.options.len(), got: self.confidences.len() });
        }
        if let Some(i) = self.confidences.iter().position(|c| !c.is_finite()) {
            return Err(ExternalError::NonFinite(i));
        }
        Ok(())
    }
}

/// Parse and validate one response line against its request.
pub fn parse_response(line: &str, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError> {
    let resp: ExternalResponse =
        serde_json::from_str(line.trim()).map_err(|e| ExternalError::Malformed(e.to_string()))?;
    resp.check(req)?;
    Ok(resp)
}

pub trait Endpoint: Send + Sync {
    fn score(&self, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError>;
}

/// Deterministic lexical-overlap scorer used as a stand-in for a language
/// model. Option `i` scores the best, over context sentences, of the mean of
/// two coverages: the share of the option's stemmed content words present in
/// the sentence and the share of the stem's.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubScorer;

impl StubScorer {
    pub fn respond(&self, req: &ExternalRequest) -> ExternalResponse {
        let sentences: Vec<Vec<String>> = req.context.iter().map(|s| stemmed_content_words(s)).collect();
        let stem_words = stemmed_content_words(&req.stem);
        let coverage = |words: &[String], sent: &[String]| {
            if words.is_empty() {
                0.0
            } else {
                words.iter().filter(|w| sent.contains(w)).count() as f64 / words.len() as f64
            }
        };
        let confidences = req
            .options
            .iter()
            .map(|o| {
                let opt_words = stemmed_content_words(&o.text);
                sentences.iter().map(|s| (coverage(&opt_words, s) + coverage(&stem_words, s)) / 2.0).fold(0.0, f64::max)
            })
            .collect();
        ExternalResponse { id: req.id.clone(), confidences }
    }

    /// Answer one request line. Unparseable input yields an error line that
    /// a client will reject as malformed.
    pub fn respond_line(&self, line: &str) -> String {
        match serde_json::from_str::<ExternalRequest>(line) {
            Ok(req) => serde_json::to_string(&self.respond(&req)).expect("response serializes"),
            Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
        }
    }

    /// Serve newline-delimited requests until EOF.
    pub fn serve<R: BufRead, W: Write>(&self, input: R, mut output: W) -> std::io::Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(output, "{}", self.respond_line(&line))?;
            output.flush()?;
        }
        Ok(())
    }
}

impl Endpoint for StubScorer {
    fn score(&self, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError> {
        let resp = self.respond(req);
        resp.check(req)?;
        Ok(resp)
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(program: &str, args: &[String]) -> Result<Self, ExternalError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ExternalError::Unreachable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines: rx })
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Child processes speaking the line protocol on stdin/stdout. Each process
/// has at most one request in flight; a process that times out or breaks
/// the protocol is killed and respawned on next use.
pub struct SubprocessEndpoint {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    workers: Vec<Mutex<Option<Worker>>>,
}

impl SubprocessEndpoint {
    pub fn new(command: &[String], timeout: Duration, pool_size: usize) -> Result<Self, ExternalError> {
        let (program, args) =
            command.split_first().ok_or_else(|| ExternalError::Unreachable("empty command".into()))?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
            timeout,
            workers: (0..pool_size.max(1)).map(|_| Mutex::new(None)).collect(),
        })
    }

    fn exchange(&self, slot: &mut Option<Worker>, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError> {
        if slot.is_none() {
            *slot = Some(Worker::spawn(&self.program, &self.args)?);
        }
        let worker = slot.as_mut().expect("spawned above");
        let mut body = serde_json::to_string(req).expect("request serializes");
        body.push('\n');
        worker
            .stdin
            .write_all(body.as_bytes())
            .and_then(|_| worker.stdin.flush())
            .map_err(|e| ExternalError::Unreachable(e.to_string()))?;
        match worker.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => parse_response(&line, req),
            Ok(Err(e)) => Err(ExternalError::Unreachable(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(ExternalError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ExternalError::Unreachable("process exited".into())),
        }
    }
}

impl Endpoint for SubprocessEndpoint {
    fn score(&self, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError> {
        let mut guard = self.workers.iter().find_map(|w| w.try_lock().ok()).unwrap_or_else(|| {
            let i = req.id.bytes().map(usize::from).sum::<usize>() % self.workers.len();
            self.workers[i].lock().unwrap_or_else(|p| p.into_inner())
        });
        let result = self.exchange(&mut guard, req);
        if result.is_err() {
            // Never reuse a process whose stream may be out of step.
            *guard = None;
        }
        result
    }
}

/// `POST {base_url}/score` with the request body; the response body is one
/// response object.
pub struct HttpEndpoint {
    url: String,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self { url: format!("{}/score", base_url.trim_end_matches('/')), agent }
    }
}

impl Endpoint for HttpEndpoint {
    fn score(&self, req: &ExternalRequest) -> Result<ExternalResponse, ExternalError> {
        let body = serde_json::to_string(req).expect("request serializes");
        let resp = self.agent.post(&self.url).set("Content-Type", "application/json").send_string(&body).map_err(
            |e| match e {
                ureq::Error::Transport(t) if t.to_string().contains("timed out") => {
                    ExternalError::Timeout(Duration::ZERO)
                }
                other => ExternalError::Unreachable(other.to_string()),
            },
        )?;
        let text = resp.into_string().map_err(|e| ExternalError::Malformed(e.to_string()))?;
        parse_response(&text, req)
    }
}

/// Serve the stub over HTTP until `max_requests` have been answered (or
/// forever when `None`).
pub fn serve_stub_http(server: tiny_http::Server, max_requests: Option<usize>) {
    let stub = StubScorer;
    for (n, mut request) in server.incoming_requests().enumerate() {
        let mut body = String::new();
        let reply = if request.url() != "/score" || *request.method() != tiny_http::Method::Post {
            tiny_http::Response::from_string("not found").with_status_code(404)
        } else if request.as_reader().read_to_string(&mut body).is_err() {
            tiny_http::Response::from_string("bad body").with_status_code(400)
        } else {
            tiny_http::Response::from_string(stub.respond_line(&body))
        };
        let _ = request.respond(reply);
        if max_requests.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
}

/// Union of the top `per_option_k` hits for every `stem + option` query,
/// first occurrence kept, in query order.
pub fn gather_context(index: &SentenceIndex, q: &Question, per_option_k: usize) -> Vec<String> {
    if per_option_k == 0 {
        return Vec::new();
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for opt in &q.options {
        let query = format!("{} {}", q.stem, opt.text);
        for hit in index.retrieve(&query, per_option_k).expect("k >= 1") {
            if seen.insert(hit.sid) {
                out.push(hit.text);
            }
        }
    }
    out
}

/// One round trip, validated and wrapped as a prediction.
pub fn score_external(
    endpoint: &dyn Endpoint,
    name: &str,
    q: &Question,
    context: Vec<String>,
    context_cap: usize,
) -> Result<SolverPrediction, ExternalError> {
    if context.len() > context_cap {
        return Err(ExternalError::ContextTooLarge { cap: context_cap, got: context.len() });
    }
    let req = ExternalRequest::new(q, context);
    let resp = endpoint.score(&req)?;
    Ok(SolverPrediction::new(name, q, resp.confidences))
}

/// Adapts an [`Endpoint`] to the [`Solver`] interface, retrieving context
/// from a shared index and abstaining on any protocol error.
pub struct ExternalSolver {
    name: String,
    endpoint: Box<dyn Endpoint>,
    index: Arc<SentenceIndex>,
    per_option_k: usize,
    context_cap: usize,
}

impl ExternalSolver {
    pub fn new(name: impl Into<String>, endpoint: Box<dyn Endpoint>, index: Arc<SentenceIndex>) -> Self {
        Self { name: name.into(), endpoint, index, per_option_k: DEFAULT_CONTEXT_K, context_cap: DEFAULT_CONTEXT_CAP }
    }

    pub fn with_context(mut self, per_option_k: usize, cap: usize) -> Self {
        self.per_option_k = per_option_k;
        self.context_cap = cap;
        self
    }
}

impl Solver for ExternalSolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, q: &Question) -> SolverPrediction {
        let mut context = gather_context(&self.index, q, self.per_option_k);
        context.truncate(self.context_cap);
        match score_external(self.endpoint.as_ref(), &self.name, q, context, self.context_cap) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("{} abstains on {}: {e}", self.name, q.id);
                SolverPrediction::abstain(&self.name, q, e.kind()).with_flag(e.to_string())
            }
        }
    }
}
