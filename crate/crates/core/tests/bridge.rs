mod common;

use std::sync::atomic::Ordering;
use std::time::Duration;

use becpro::bridge::{BridgeClient, JobState};
use becpro::mlm::{check_scorer, score_corpus, ScoreOptions, DEFAULT_PROBES};
use becpro::toy::fixture::planted_bias_fixture;
use becpro::{MlmError, MlmScorer, ModelState, Tokenizer};
use common::{planted_toy, spawn, MockOptions};

fn client(url: &str) -> BridgeClient {
    BridgeClient::connect_with_timeout(url, Duration::from_secs(10)).expect("connect")
}

#[test]
fn health_is_read_on_connect() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let c = client(&mock.url);
    assert_eq!(c.health().model, "toy-mock");
    assert_eq!(c.health().vocab_size, planted_toy().vocab_size());
    assert_eq!(c.special_tokens(), planted_toy().special_tokens());
    assert!(c.describe().contains("toy-mock@r1"));
}

#[test]
fn bridge_passes_conformance() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let report = check_scorer(&client(&mock.url), &DEFAULT_PROBES).unwrap();
    assert_eq!(report.probes, DEFAULT_PROBES.len());
}

#[test]
fn bridge_scores_equal_in_process_scores() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let c = client(&mock.url);
    let fixture = planted_bias_fixture(1.0, 42);
    let instances: Vec<_> = fixture.instances(planted_toy()).unwrap().into_iter().step_by(7).collect();
    let local = score_corpus(planted_toy(), &instances, ModelState::Pre, ScoreOptions::default()).unwrap();
    let remote = score_corpus(&c, &instances, ModelState::Pre, ScoreOptions { batch_size: 8 }).unwrap();
    assert_eq!(local, remote);
}

#[test]
fn tokenize_matches_local_tokenizer() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let c = client(&mock.url);
    let text = "my [MASK] is a nurse.";
    assert_eq!(c.tokenize(text).unwrap(), planted_toy().tokenize(text).unwrap());
    assert_eq!(c.encode(text).unwrap(), planted_toy().encode(text).unwrap());
}

#[test]
fn vocabulary_lookups_are_cached() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let c = client(&mock.url);
    let expected = planted_toy().vocab_index("nurse");
    assert_eq!(c.vocab_index("nurse"), expected);
    assert_eq!(c.vocab_index("nurse"), expected);
    assert_eq!(c.vocab_index("zeppelin"), None);
    assert_eq!(mock.vocab_requests.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_service_is_backend_unavailable() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let e = BridgeClient::connect_with_timeout(&format!("http://127.0.0.1:{port}"), Duration::from_secs(2)).unwrap_err();
    assert!(matches!(e, MlmError::BackendUnavailable(_)), "{e}");
    assert!(e.is_backend());
}

#[test]
fn service_dropping_mid_run_is_backend_unavailable() {
    let mock = spawn(planted_toy(), MockOptions::default());
    let c = client(&mock.url);
    drop(mock);
    let e = c.tokenize("she is a nurse.").unwrap_err();
    assert!(matches!(e, MlmError::BackendUnavailable(_)), "{e}");
}

#[test]
fn error_envelopes_become_backend_errors() {
    let mock = spawn(planted_toy(), MockOptions { fail: Some(("prob", "oom")), ..Default::default() });
    let c = client(&mock.url);
    let enc = c.encode("[MASK] is a nurse.").unwrap();
    let e = c.probability(&enc.ids, &vec![1; enc.len()], 1, 5).unwrap_err();
    match e {
        MlmError::Backend { code, message } => {
            assert_eq!(code, "oom");
            assert!(message.contains("on purpose"));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn scoring_failures_are_reported_per_instance() {
    let mock = spawn(planted_toy(), MockOptions { fail: Some(("prob", "overloaded")), ..Default::default() });
    let c = client(&mock.url);
    let instances: Vec<_> = planted_bias_fixture(1.0, 42).instances(planted_toy()).unwrap().into_iter().take(3).collect();
    let scored = becpro::mlm::score_corpus_partial(&c, &instances, ModelState::Pre, ScoreOptions::default());
    assert!(scored.records.is_empty());
    assert_eq!(scored.failures.len(), 3);
    assert!(scored.failures.iter().all(|(_, e)| e.is_backend()));
    let e = score_corpus(&c, &instances, ModelState::Pre, ScoreOptions::default()).unwrap_err();
    assert!(matches!(&e, MlmError::Instance { id, .. } if id == &instances[0].id), "{e}");
}

#[test]
fn short_distribution_is_rejected() {
    let mock = spawn(planted_toy(), MockOptions { truncate_distribution: true, ..Default::default() });
    let c = client(&mock.url);
    let enc = c.encode("[MASK] is a nurse.").unwrap();
    let e = c.distribution(&enc.ids, &vec![1; enc.len()], 1).unwrap_err();
    assert!(matches!(e, MlmError::Backend { ref code, .. } if code == "malformed-result"), "{e}");
    assert!(check_scorer(&c, &DEFAULT_PROBES).is_err());
}

#[test]
fn protocol_mismatch_is_rejected() {
    let mock = spawn(planted_toy(), MockOptions { protocol: Some("becpro-bridge/0"), ..Default::default() });
    let e = BridgeClient::connect_with_timeout(&mock.url, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(e, MlmError::Backend { ref code, .. } if code == "protocol"), "{e}");
}

#[test]
fn non_json_reply_is_a_backend_error() {
    let mock = spawn(planted_toy(), MockOptions { garbage: Some("tokenize"), ..Default::default() });
    let e = client(&mock.url).tokenize("x").unwrap_err();
    assert!(matches!(e, MlmError::Backend { ref code, .. } if code == "http-500"), "{e}");
}

#[test]
fn finetune_job_round_trip() {
    let mock = spawn(planted_toy(), MockOptions { supports_finetune: true, ..Default::default() });
    let c = client(&mock.url);
    assert!(c.health().supports_finetune);
    let job = c.finetune_start(&["she is a nurse.".to_string(), "he is a nurse.".to_string()], &becpro::FinetuneConfig::default()).unwrap();
    assert_eq!(job, "job-2");
    let status = c.finetune_status(&job).unwrap();
    assert_eq!(status.state, JobState::Done);
    assert_eq!(status.checkpoint.as_deref(), Some("ckpt-post"));
}
