//! In-process OpenAI-compatible HTTP server for offline tests.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

#[derive(Debug, Clone)]
pub struct MockRequest {
    /// Path after the host, e.g. `/v1/chat/completions`.
    pub path: String,
    pub body: Value,
    /// Zero-based arrival order across the server's lifetime.
    pub sequence: usize,
}

impl MockRequest {
    /// Text of the last chat message, or the first embeddings input.
    pub fn prompt(&self) -> &str {
        self.body
            .pointer("/messages")
            .and_then(Value::as_array)
            .and_then(|m| m.last())
            .and_then(|m| m.get("content"))
            .or_else(|| self.body.pointer("/input/0"))
            .and_then(Value::as_str)
            .unwrap_or_default()
    }

    pub fn seed(&self) -> Option<u64> {
        self.body.get("seed").and_then(Value::as_u64)
    }

    pub fn temperature(&self) -> Option<f64> {
        self.body.get("temperature").and_then(Value::as_f64)
    }
}

#[derive(Debug, Clone)]
pub struct MockReply {
    pub status: u16,
    pub body: Value,
    pub delay: Duration,
}

impl MockReply {
    pub fn ok(body: Value) -> Self {
        MockReply {
            status: 200,
            body,
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        MockReply {
            status,
            body: json!({ "error": { "message": "mock failure" } }),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// Chat completion whose tokens carry the given log-probabilities.
pub fn chat_reply(content: &str, logprobs: Option<&[f64]>) -> Value {
    let mut choice = json!({
        "index": 0,
        "message": { "role": "assistant", "content": content },
        "finish_reason": "stop",
    });
    if let Some(lps) = logprobs {
        let tokens: Vec<Value> = lps
            .iter()
            .enumerate()
            .map(|(i, lp)| json!({ "token": format!("t{i}"), "logprob": lp, "top_logprobs": [] }))
            .collect();
        choice["logprobs"] = json!({ "content": tokens });
    }
    json!({ "object": "chat.completion", "choices": [choice] })
}

/// One-token completion whose first token has the given (token, probability)
/// alternatives.
pub fn yes_no_reply(alternatives: &[(&str, f64)]) -> Value {
    let top: Vec<Value> = alternatives
        .iter()
        .map(|(t, p)| json!({ "token": t, "logprob": p.ln() }))
        .collect();
    let first = alternatives.first().copied().unwrap_or(("Yes", 1.0));
    json!({
        "object": "chat.completion",
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": first.0 },
            "finish_reason": "length",
            "logprobs": { "content": [{
                "token": first.0,
                "logprob": first.1.ln(),
                "top_logprobs": top,
            }] },
        }],
    })
}

pub fn embedding_reply(vector: &[f64]) -> Value {
    json!({ "object": "list", "data": [{ "index": 0, "embedding": vector }] })
}

#[derive(Default)]
struct Stats {
    requests: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

type Handler = dyn Fn(&MockRequest) -> MockReply + Send + Sync;

pub struct MockServer {
    server: Arc<Server>,
    url: String,
    stats: Arc<Stats>,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port. Each request is answered on its own
    /// thread so concurrency is observable.
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&MockRequest) -> MockReply + Send + Sync + 'static,
    {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("mock server has no IP address"))?;
        let stats = Arc::new(Stats::default());
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let worker = {
            let server = Arc::clone(&server);
            let stats = Arc::clone(&stats);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let handler = Arc::clone(&handler);
                    let stats = Arc::clone(&stats);
                    std::thread::spawn(move || {
                        let sequence = stats.requests.fetch_add(1, Ordering::SeqCst);
                        let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                        stats.peak.fetch_max(now, Ordering::SeqCst);
                        let mut raw = String::new();
                        let _ = request.as_reader().read_to_string(&mut raw);
                        let req = MockRequest {
                            path: request.url().to_string(),
                            body: serde_json::from_str(&raw).unwrap_or(Value::Null),
                            sequence,
                        };
                        let reply = handler(&req);
                        std::thread::sleep(reply.delay);
                        let header = Header::from_bytes("Content-Type", "application/json")
                            .expect("static header is valid");
                        let response = Response::from_string(reply.body.to_string())
                            .with_status_code(reply.status)
                            .with_header(header);
                        stats.in_flight.fetch_sub(1, Ordering::SeqCst);
                        let _ = request.respond(response);
                    });
                }
            })
        };
        Ok(MockServer {
            server,
            url: format!("http://127.0.0.1:{port}/v1"),
            stats,
            stop,
            worker: Some(worker),
        })
    }

    /// Base URL including the `/v1` prefix.
    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn requests(&self) -> usize {
        self.stats.requests.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.stats.peak.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}
