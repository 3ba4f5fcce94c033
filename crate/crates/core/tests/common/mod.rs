#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::thread::JoinHandle;

use becpro::toy::fixture::planted_bias_fixture;
use becpro::toy::train;
use becpro::{MlmScorer, Tokenizer, ToyMlm, ToyMlmConfig};
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

/// A toy model trained once on the planted fixture.
pub fn planted_toy() -> &'static ToyMlm {
    static MODEL: OnceLock<ToyMlm> = OnceLock::new();
    MODEL.get_or_init(|| {
        let fixture = planted_bias_fixture(1.0, 42);
        train(&fixture.training_corpus, ToyMlmConfig { epochs: 3, ..ToyMlmConfig::default() }).unwrap().0
    })
}

#[derive(Clone, Default)]
pub struct MockOptions {
    pub supports_finetune: bool,
    /// Endpoint answered with an error envelope carrying this code.
    pub fail: Option<(&'static str, &'static str)>,
    pub truncate_distribution: bool,
    pub protocol: Option<&'static str>,
    /// Endpoint answered with a plain-text 500.
    pub garbage: Option<&'static str>,
}

/// An HTTP service speaking the bridge protocol, backed by a toy model.
pub struct MockBridge {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub vocab_requests: Arc<AtomicUsize>,
    server: Arc<Server>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for MockBridge {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn ok(protocol: &str, result: Value) -> (u16, Value) {
    (200, json!({"protocol": protocol, "status": "ok", "result": result}))
}

fn err(protocol: &str, status: u16, code: &str, message: String) -> (u16, Value) {
    (status, json!({"protocol": protocol, "status": "error", "error": {"code": code, "message": message}}))
}

fn handle(model: &ToyMlm, opts: &MockOptions, endpoint: &str, body: &Value) -> (u16, Value) {
    let protocol = opts.protocol.unwrap_or(becpro::bridge::PROTOCOL);
    if let Some((ep, code)) = opts.fail {
        if ep == endpoint {
            return err(protocol, 503, code, format!("{endpoint} is failing on purpose"));
        }
    }
    let ids = || -> Vec<u32> { serde_json::from_value(body["ids"].clone()).unwrap_or_default() };
    let att = || -> Vec<u8> { serde_json::from_value(body["attention"].clone()).unwrap_or_default() };
    let pos = || body["position"].as_u64().unwrap_or(0) as usize;
    match endpoint {
        "health" => ok(
            protocol,
            json!({
                "model": "toy-mock",
                "revision": "r1",
                "vocab_size": model.vocab_size(),
                "special_tokens": model.special_tokens(),
                "max_length": 64,
                "supports_finetune": opts.supports_finetune,
            }),
        ),
        "tokenize" => match model.tokenize(body["text"].as_str().unwrap_or_default()) {
            Ok(e) => ok(protocol, json!({"ids": e.ids, "tokens": e.tokens, "word_ids": e.word_ids})),
            Err(e) => err(protocol, 400, "tokenize", e.to_string()),
        },
        "vocab" => ok(protocol, json!({"index": model.vocab_index(body["token"].as_str().unwrap_or_default())})),
        "prob" => {
            let token = body["token_index"].as_u64().unwrap_or(0) as u32;
            match model.probability(&ids(), &att(), pos(), token) {
                Ok(p) => ok(protocol, json!({"probability": p})),
                Err(e) => err(protocol, 400, "prob", e.to_string()),
            }
        }
        "distribution" => match model.distribution(&ids(), &att(), pos()) {
            Ok(mut d) => {
                if opts.truncate_distribution {
                    d.pop();
                }
                ok(protocol, json!({"probabilities": d}))
            }
            Err(e) => err(protocol, 400, "distribution", e.to_string()),
        },
        "finetune" => match body["action"].as_str() {
            Some("start") => ok(protocol, json!({"job": format!("job-{}", body["sentences"].as_array().map_or(0, Vec::len))})),
            Some("status") => ok(
                protocol,
                json!({"job": body["job"], "state": "done", "steps_done": 6, "total_steps": 6, "checkpoint": "ckpt-post"}),
            ),
            _ => err(protocol, 400, "bad-action", "unknown action".into()),
        },
        other => err(protocol, 404, "not-found", format!("no endpoint {other}")),
    }
}

pub fn spawn(model: &'static ToyMlm, opts: MockOptions) -> MockBridge {
    let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock bridge"));
    let url = format!("http://{}", server.server_addr().to_ip().expect("ip listener"));
    let requests = Arc::new(AtomicUsize::new(0));
    let vocab_requests = Arc::new(AtomicUsize::new(0));
    let (srv, req_count, vocab_count) = (server.clone(), requests.clone(), vocab_requests.clone());
    let thread = std::thread::spawn(move || {
        for mut request in srv.incoming_requests() {
            req_count.fetch_add(1, Ordering::SeqCst);
            let endpoint = request.url().trim_start_matches("/v1/").to_string();
            if endpoint == "vocab" {
                vocab_count.fetch_add(1, Ordering::SeqCst);
            }
            if opts.garbage == Some(endpoint.as_str()) {
                let _ = request.respond(Response::from_string("internal failure").with_status_code(500));
                continue;
            }
            let mut text = String::new();
            let _ = request.as_reader().read_to_string(&mut text);
            let body: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
            let (status, reply) = if endpoint != "health" && body["protocol"] != becpro::bridge::PROTOCOL {
                err(becpro::bridge::PROTOCOL, 400, "protocol", "request lacks the protocol field".into())
            } else {
                handle(model, &opts, &endpoint, &body)
            };
            let header = Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = request.respond(Response::from_string(reply.to_string()).with_status_code(status).with_header(header));
        }
    });
    MockBridge { url, requests, vocab_requests, server, thread: Some(thread) }
}
