use becpro::corpus::{build_corpus, default_persons, default_professions, expand_templates, templates};
use becpro::{Language, WordPieceTokenizer};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_corpus(c: &mut Criterion) {
    let persons = default_persons();
    let professions = default_professions();
    for (lang, label) in [(Language::English, "en"), (Language::German, "de")] {
        let expanded = expand_templates(&templates(lang), &persons, &professions, lang).unwrap();
        let texts: Vec<&str> = expanded.iter().map(|i| i.sentence.as_str()).collect();
        let tokenizer = WordPieceTokenizer::from_texts(&texts, lang == Language::English, usize::MAX).unwrap();
        c.bench_function(&format!("expand_templates/{label}"), |b| {
            b.iter(|| expand_templates(&templates(lang), black_box(&persons), &professions, lang).unwrap())
        });
        c.bench_function(&format!("build_corpus/{label}"), |b| {
            b.iter(|| build_corpus(black_box(&persons), &professions, lang, &tokenizer).unwrap())
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_corpus
}
criterion_main!(benches);
