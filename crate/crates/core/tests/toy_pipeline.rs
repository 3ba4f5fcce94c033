mod common;

use becpro::cds::{parse_gap, split_sentences, write_gap, write_gap_corpus};
use becpro::corpus::{read_corpus, remask, write_corpus};
use becpro::mlm::{check_scorer, read_records, score_corpus, write_records, ScoreOptions, DEFAULT_PROBES};
use becpro::pipeline::mitigation_sentences;
use becpro::toy::fixture::planted_bias_fixture;
use becpro::{GenderPairLexicon, ModelState, NamePairList, ToyMlm};
use common::planted_toy;

#[test]
fn toy_model_passes_conformance() {
    let report = check_scorer(planted_toy(), &DEFAULT_PROBES).unwrap();
    assert_eq!(report.probes, 4);
    assert!(report.max_normalization_error < 1e-9);
    assert!(report.max_padding_delta < 1e-9);
}

#[test]
fn reloaded_checkpoint_scores_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    planted_toy().save(&path).unwrap();
    let loaded = ToyMlm::load(&path).unwrap();
    let instances = planted_bias_fixture(1.0, 42).instances(planted_toy()).unwrap();
    let a = score_corpus(planted_toy(), &instances, ModelState::Pre, ScoreOptions::default()).unwrap();
    let b = score_corpus(&loaded, &instances, ModelState::Pre, ScoreOptions { batch_size: 3 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), instances.len());
}

#[test]
fn corpus_and_records_survive_files() {
    let instances = planted_bias_fixture(1.0, 42).instances(planted_toy()).unwrap();
    let mut buf = Vec::new();
    write_corpus(&mut buf, &instances).unwrap();
    let back = read_corpus(buf.as_slice()).unwrap();
    assert_eq!(back, instances);
    assert_eq!(remask(&back, planted_toy()).unwrap(), instances);

    let records = score_corpus(planted_toy(), &back, ModelState::Pre, ScoreOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    assert_eq!(read_records(buf.as_slice()).unwrap(), records);
}

#[test]
fn planted_signs_hold_before_mitigation() {
    let fixture = planted_bias_fixture(1.0, 42);
    let instances = fixture.instances(planted_toy()).unwrap();
    let records = score_corpus(planted_toy(), &instances, ModelState::Pre, ScoreOptions::default()).unwrap();
    for exp in fixture.expected.iter().filter(|e| e.sign != 0) {
        let scores: Vec<f64> = records
            .iter()
            .filter(|r| r.profession == exp.profession && r.gender == exp.gender)
            .map(|r| r.score)
            .collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        assert_eq!(mean.signum() as i8, exp.sign, "{} {}: {mean}", exp.profession, exp.gender);
    }
}

#[test]
fn fixture_gap_file_feeds_substitution() {
    let corpus = planted_bias_fixture(1.0, 42).gap_corpus(200, 42);
    let mut buf = Vec::new();
    write_gap_corpus(&mut buf, &corpus).unwrap();
    let parsed = parse_gap(buf.as_slice()).unwrap();
    assert_eq!(parsed, corpus);

    let lexicon = GenderPairLexicon::default_english();
    let outcomes = becpro::cds::substitute_corpus(
        &parsed.documents,
        &lexicon,
        &NamePairList::default_english(),
        0.5,
        42,
        &Default::default(),
    )
    .unwrap();
    assert_eq!(outcomes.len(), 200);
    let flipped = outcomes.iter().filter(|o| o.flipped).count();
    assert!((70..=130).contains(&flipped), "{flipped}");
    for (o, d) in outcomes.iter().zip(&parsed.documents) {
        assert_eq!(o.document.id, d.id);
        assert_eq!(o.document.metadata, d.metadata);
        assert_eq!(o.flipped, o.document.text != d.text);
    }
    let sentences = mitigation_sentences(&outcomes);
    let expected: usize = outcomes.iter().map(|o| split_sentences(&o.document.text).sentences.len()).sum();
    assert_eq!(sentences.len(), expected);

    let mut out = Vec::new();
    write_gap(&mut out, &parsed, &outcomes).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("ID\tText\tURL\tflipped\n"));
    assert_eq!(text.lines().count(), 201);
}
