//! One test per acceptance criterion. Each prints a single
//! `ACCEPTANCE <name>: PASS|FAIL <detail>` line before asserting.

use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use becpro::cds::{
    audit_balance, flip_text, substitute_corpus, GapDocument, GenderPairLexicon, LexiconPair, NamePairList,
    SubstituteOptions,
};
use becpro::corpus::{
    build_corpus, default_persons, default_professions, expand_templates, templates, PersonWord,
};
use becpro::finetune::{mask_inputs, MaskAction};
use becpro::mlm::tokenizer::{pre_tokenize, RESERVED};
use becpro::mlm::{association, write_records, AssociationRecord};
use becpro::pipeline::{run_planted_mitigation, PlantedRun, PlantedRunConfig};
use becpro::stats::{
    effect_size_r, wilcoxon_differences, Alternative, WilcoxonMode, WilcoxonOptions,
};
use becpro::{Gender, Language, MlmMaskingPolicy, ProfessionGroup, WordPieceTokenizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("ACCEPTANCE {name}: {} {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
}

#[test]
fn corpus_combinatorics() {
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for language in [Language::English, Language::German] {
        let started = Instant::now();
        let expanded =
            expand_templates(&templates(language), &default_persons(), &default_professions(), language).unwrap();
        let sentences: Vec<&str> = expanded.iter().map(|i| i.sentence.as_str()).collect();
        let tok = WordPieceTokenizer::from_texts(&sentences, language == Language::English, usize::MAX).unwrap();
        let corpus = build_corpus(&default_persons(), &default_professions(), language, &tok).unwrap();
        let elapsed = started.elapsed();

        let per_group = |g: ProfessionGroup| corpus.iter().filter(|i| i.group == g).count();
        let per_cell = |g: ProfessionGroup, s: Gender| corpus.iter().filter(|i| i.group == g && i.gender == s).count();
        let four_variants = corpus.iter().all(|i| {
            let v = i.variants.as_ref();
            !i.sentence.is_empty()
                && v.is_some_and(|v| !v.target_masked.is_empty() && !v.attribute_masked.is_empty() && !v.both_masked.is_empty())
        });
        let ids: HashSet<&str> = corpus.iter().map(|i| i.id.as_str()).collect();
        let ok = corpus.len() == 5400
            && ids.len() == 5400
            && ProfessionGroup::ALL.iter().all(|&g| per_group(g) == 1800)
            && ProfessionGroup::ALL.iter().all(|&g| Gender::ALL.iter().all(|&s| per_cell(g, s) == 900))
            && four_variants
            && elapsed < Duration::from_secs(5);
        if !ok {
            failures.push(language);
        }
        details.push(format!("{language}: {} instances in {:.3}s", corpus.len(), elapsed.as_secs_f64()));
    }
    report("corpus_combinatorics", failures.is_empty(), details.join("; "));
    assert!(failures.is_empty(), "{failures:?}");
}

/// Splits every profession word longer than six characters into two pieces.
fn subword_tokenizer(sentences: &[String], professions: &[&str]) -> (WordPieceTokenizer, HashSet<String>) {
    let split: HashSet<String> = professions
        .iter()
        .flat_map(|p| pre_tokenize(p, &[]).into_iter().map(|t| t.text.to_lowercase()).collect::<Vec<_>>())
        .filter(|w| w.chars().count() > 6)
        .collect();
    let mut vocab: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let mut seen: HashSet<String> = vocab.iter().cloned().collect();
    for s in sentences {
        for t in pre_tokenize(s, &[]) {
            let w = t.text.to_lowercase();
            let pieces = if split.contains(&w) {
                let head: String = w.chars().take(4).collect();
                let tail: String = w.chars().skip(4).collect();
                vec![head, format!("##{tail}")]
            } else {
                vec![w]
            };
            for p in pieces {
                if seen.insert(p.clone()) {
                    vocab.push(p);
                }
            }
        }
    }
    (WordPieceTokenizer::new(vocab, true).unwrap(), split)
}

#[test]
fn masking_fidelity() {
    let persons: Vec<PersonWord> = default_persons().into_iter().filter(|p| p.surface_en == "she" || p.surface_en == "he").collect();
    assert_eq!(persons.len(), 2);
    let professions: Vec<_> = default_professions().into_iter().take(5).collect();
    let instances = expand_templates(&templates(Language::English), &persons, &professions, Language::English).unwrap();
    assert_eq!(instances.len(), 50);
    let sentences: Vec<String> = instances.iter().map(|i| i.sentence.clone()).collect();
    let names: Vec<&str> = professions.iter().map(|p| p.short_en.as_str()).collect();
    let (tok, split) = subword_tokenizer(&sentences, &names);

    let mut errors = Vec::new();
    let mut multi = 0;
    for inst in instances {
        let inst = becpro::corpus::apply_masking(inst, &tok).unwrap();
        let v = inst.variants.as_ref().unwrap();
        let profession = &inst.sentence[inst.attribute_span.clone()];
        let target = &inst.sentence[inst.target_span.clone()];
        let expected: usize = pre_tokenize(profession, &[])
            .iter()
            .map(|t| if split.contains(&t.text.to_lowercase()) { 2 } else { 1 })
            .sum();
        if expected > 1 {
            multi += 1;
        }
        let count = |s: &str| s.matches("[MASK]").count();
        if count(&v.attribute_masked) != expected || count(&v.target_masked) != 1 || count(&v.both_masked) != expected + 1 {
            errors.push(format!("{}: {} masks for {profession:?}, expected {expected}", inst.id, count(&v.attribute_masked)));
        }
        let run = vec!["[MASK]"; expected].join(" ");
        let unmask_a = v.attribute_masked.replacen(&run, profession, 1);
        let unmask_t = v.target_masked.replacen("[MASK]", target, 1);
        let unmask_ta = v.both_masked.replacen("[MASK]", target, 1).replacen(&run, profession, 1);
        for (label, text) in [("A", unmask_a), ("T", unmask_t), ("T+A", unmask_ta)] {
            if text != inst.sentence {
                errors.push(format!("{} {label}: {text:?} != {:?}", inst.id, inst.sentence));
            }
        }
    }
    let pass = errors.is_empty() && multi > 0;
    report("masking_fidelity", pass, format!("50 sentences, {multi} with multi-piece professions, {} errors", errors.len()));
    assert!(pass, "{errors:#?}");
}

#[test]
fn association_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let log_uniform = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-10.0..0.0));
    let mut worst_anti = 0f64;
    let mut worst_scale = 0f64;
    let mut zero_violations = 0;
    for _ in 0..10_000 {
        let (a, b) = (log_uniform(&mut rng), log_uniform(&mut rng));
        let c = rng.gen_range(1e-3..1.0);
        let s = association(a, b).unwrap();
        worst_anti = worst_anti.max((s + association(b, a).unwrap()).abs());
        worst_scale = worst_scale.max((association(c * a, c * b).unwrap() - s).abs());
        if association(a, a).unwrap() != 0.0 || (a != b && s == 0.0) {
            zero_violations += 1;
        }
    }
    let pass = worst_anti <= 1e-12 && worst_scale <= 1e-12 && zero_violations == 0;
    report(
        "association_algebra",
        pass,
        format!("10000 pairs, max antisymmetry error {worst_anti:.2e}, max scale error {worst_scale:.2e}, zero violations {zero_violations}"),
    );
    assert!(pass);
}

fn options(mode: WilcoxonMode) -> WilcoxonOptions {
    WilcoxonOptions { mode, alternative: Alternative::TwoSided, ..Default::default() }
}

/// Two-sided p by listing all 2^n sign assignments of the ranks 1..=n.
fn enumeration_p(d: &[f64]) -> f64 {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut rank = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    let observed: u32 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let w: u32 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i as u32 + 1).sum();
        le += u64::from(w <= observed);
        ge += u64::from(w >= observed);
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

#[test]
fn wilcoxon_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_approx = (0f64, 0usize);
    let mut worst_exact = 0f64;
    let mut exact_checked = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = wilcoxon_differences(&d, options(WilcoxonMode::Exact)).unwrap();
        let approx = wilcoxon_differences(&d, options(WilcoxonMode::Approximate)).unwrap();
        let gap = (exact.p - approx.p).abs();
        if gap > worst_approx.0 {
            worst_approx = (gap, n);
        }
        if n <= 10 {
            worst_exact = worst_exact.max((exact.p - enumeration_p(&d)).abs());
            exact_checked += 1;
        }
    }
    let elapsed = started.elapsed();
    let exact_ok = worst_exact <= 1e-9;
    let approx_ok = worst_approx.0 <= 0.02;
    let time_ok = elapsed < Duration::from_secs(60);
    report(
        "wilcoxon_oracle_equivalence",
        exact_ok && approx_ok && time_ok,
        format!(
            "exact vs enumeration max |dp| {worst_exact:.2e} over {exact_checked} samples; \
             normal vs exact max |dp| {:.4} (n = {}), tolerance 0.02; {:.2}s",
            worst_approx.0,
            worst_approx.1,
            elapsed.as_secs_f64()
        ),
    );
    assert!(exact_ok, "exact p disagrees with enumeration by {worst_exact}");
    assert!(time_ok);
    assert!(approx_ok, "normal approximation is {:.4} from the exact p at n = {}", worst_approx.0, worst_approx.1);
}

#[test]
fn effect_size() {
    let triples = [(1.96, 4, 0.98), (-3.0, 9, -1.0), (2.0, 16, 0.5), (0.0, 10, 0.0), (5.0, 25, 1.0), (-1.5, 100, -0.15)];
    let worst = triples.iter().map(|&(z, n, r)| (effect_size_r(z, n).unwrap() - r).abs()).fold(0.0, f64::max);
    let pass = worst <= 1e-12 && effect_size_r(1.0, 0).is_err();
    report("effect_size", pass, format!("{} triples, max error {worst:.2e}", triples.len()));
    assert!(pass);
}

fn discriminator_free_lexicon() -> GenderPairLexicon {
    let pairs: Vec<LexiconPair> =
        GenderPairLexicon::default_english().pairs().iter().filter(|p| p.discriminator.is_none()).cloned().collect();
    let lexicon = GenderPairLexicon::from_pairs(pairs).unwrap();
    assert!(lexicon.is_discriminator_free());
    lexicon
}

fn skewed_documents(lexicon: &GenderPairLexicon, names: &NamePairList, count: usize, seed: u64) -> Vec<GapDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = lexicon.pairs();
    let name_pairs = names.pairs();
    (0..count)
        .map(|d| {
            let male = rng.gen_bool(0.8);
            let mut words = Vec::new();
            for _ in 0..rng.gen_range(3..=6) {
                let p = &pairs[rng.gen_range(0..pairs.len())];
                let w = if male { &p.male } else { &p.female };
                words.push(match rng.gen_range(0..3) {
                    0 => w.clone(),
                    1 => w.to_uppercase(),
                    _ => {
                        let mut c = w.chars();
                        c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
                    }
                });
            }
            let (f, m) = &name_pairs[rng.gen_range(0..name_pairs.len())];
            let name = if male { m } else { f };
            GapDocument {
                id: format!("skewed-{d:04}"),
                text: format!("{name} wrote that the {} met, then {}; later {}.", words[0], words[1..].join(" and "), name),
                metadata: vec![],
            }
        })
        .collect()
}

#[test]
fn cds_involution_and_balance() {
    let lexicon = discriminator_free_lexicon();
    let names = NamePairList::default_english();
    let options = SubstituteOptions { resolver: None, strict: true, ..SubstituteOptions::default() };
    let docs = skewed_documents(&lexicon, &names, 1000, 7);
    let mut broken = Vec::new();
    for doc in &docs {
        let (once, _) = flip_text(&doc.id, &doc.text, &lexicon, &names, &options).unwrap();
        let (twice, _) = flip_text(&doc.id, &once, &lexicon, &names, &options).unwrap();
        if twice != doc.text || once == doc.text {
            broken.push((doc.text.clone(), once, twice));
        }
    }

    let before = audit_balance(docs.iter().map(|d| d.text.as_str()), &lexicon);
    let flipped = substitute_corpus(&docs, &lexicon, &names, 0.5, 42, &options).unwrap();
    let after = audit_balance(flipped.iter().map(|o| o.document.text.as_str()), &lexicon);
    let ratio = after.ratio.unwrap();
    let pass = broken.is_empty() && (0.9..=1.1).contains(&ratio);
    report(
        "cds_involution_and_balance",
        pass,
        format!(
            "{} docs, {} double-flip mismatches; female/male {:.3} -> {ratio:.3} ({} of 1000 flipped)",
            docs.len(),
            broken.len(),
            before.ratio.unwrap(),
            flipped.iter().filter(|o| o.flipped).count()
        ),
    );
    assert!(broken.is_empty(), "{:?}", broken.first());
    assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mlm_masking_proportions() {
    let tok = WordPieceTokenizer::new(
        RESERVED.iter().map(|s| s.to_string()).chain((0..995).map(|i| format!("w{i}"))).collect(),
        true,
    )
    .unwrap();
    let special = tok.special_tokens();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut data_rng = ChaCha8Rng::seed_from_u64(1);
    let policy = MlmMaskingPolicy::default();
    let (mut eligible, mut selected, mut masked, mut randomized, mut kept) = (0usize, 0usize, 0usize, 0usize, 0usize);
    while eligible < 100_000 {
        let mut ids = vec![special.cls.unwrap()];
        ids.extend((0..126).map(|_| data_rng.gen_range(5..1000u32)));
        ids.push(special.sep.unwrap());
        let len = 100 + data_rng.gen_range(0..28);
        let mut att = vec![1u8; len];
        att.resize(ids.len(), 0);
        ids[len - 1] = special.sep.unwrap();
        for id in &mut ids[len..] {
            *id = special.pad;
        }
        let seq = mask_inputs(&ids, &att, &special, tok.vocab_size(), &policy, &mut rng).unwrap();
        eligible += len - 2;
        for a in &seq.actions {
            match a {
                MaskAction::Unselected => {}
                MaskAction::Masked => masked += 1,
                MaskAction::Randomized => randomized += 1,
                MaskAction::Kept => kept += 1,
            }
        }
        selected += seq.actions.iter().filter(|a| **a != MaskAction::Unselected).count();
    }
    let frac = |a: usize, b: usize| a as f64 / b as f64;
    let sel = frac(selected, eligible);
    let (m, r, k) = (frac(masked, selected), frac(randomized, selected), frac(kept, selected));
    let pass = (sel - 0.15).abs() <= 0.01 && (m - 0.8).abs() <= 0.02 && (r - 0.1).abs() <= 0.02 && (k - 0.1).abs() <= 0.02;
    report(
        "mlm_masking_proportions",
        pass,
        format!("{eligible} eligible tokens: selected {sel:.4}; mask/random/keep {m:.4}/{r:.4}/{k:.4}"),
    );
    assert!(pass);
}

fn planted_run() -> &'static (PlantedRun, Duration) {
    static RUN: OnceLock<(PlantedRun, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let run = run_planted_mitigation(&PlantedRunConfig::default()).unwrap();
        (run, started.elapsed())
    })
}

fn cell_mean(records: &[AssociationRecord], group: ProfessionGroup, gender: Gender) -> f64 {
    let scores: Vec<f64> = records.iter().filter(|r| r.group == group && r.gender == gender).map(|r| r.score).collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

#[test]
fn end_to_end_mitigation() {
    let config = PlantedRunConfig::default();
    assert_eq!((config.strength, config.seed), (1.0, 42));
    assert_eq!((config.finetune.epochs, config.finetune.batch_size), (3, 1));
    assert_eq!((config.finetune.learning_rate, config.finetune.seed), (5e-5, 42));

    let (run, elapsed) = planted_run();
    let (f, m) = (ProfessionGroup::FemaleDominated, ProfessionGroup::MaleDominated);
    let pro = [cell_mean(&run.pre_records, f, Gender::Female), cell_mean(&run.pre_records, m, Gender::Male)];
    let anti = [cell_mean(&run.pre_records, m, Gender::Female), cell_mean(&run.pre_records, f, Gender::Male)];
    let signs = pro.iter().all(|v| *v > 0.0) && anti.iter().all(|v| *v < 0.0);
    let shrink = run.gap_shrink();
    let pass = signs && shrink >= 0.3 && *elapsed < Duration::from_secs(300);
    report(
        "end_to_end_mitigation",
        pass,
        format!(
            "pro-typical {:.3}/{:.3}, anti-typical {:.3}/{:.3}; gap {:.4} -> {:.4} ({:.1}% smaller); {} steps; {:.1}s",
            pro[0],
            pro[1],
            anti[0],
            anti[1],
            run.gap_pre,
            run.gap_post,
            100.0 * shrink,
            run.log.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(signs, "pro {pro:?} anti {anti:?}");
    assert!(shrink >= 0.3, "gap shrink {shrink}");
    assert!(*elapsed < Duration::from_secs(300));
}

fn records_bytes(records: &[AssociationRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).unwrap();
    buf
}

#[test]
fn determinism() {
    let (first, _) = planted_run();
    let second = run_planted_mitigation(&PlantedRunConfig::default()).unwrap();
    let same = [
        ("pre records", records_bytes(&first.pre_records) == records_bytes(&second.pre_records)),
        ("post records", records_bytes(&first.post_records) == records_bytes(&second.post_records)),
        ("pre checkpoint", first.pre_model.to_checkpoint_bytes().unwrap() == second.pre_model.to_checkpoint_bytes().unwrap()),
        ("post checkpoint", first.post_model.to_checkpoint_bytes().unwrap() == second.post_model.to_checkpoint_bytes().unwrap()),
        ("training log", first.log == second.log),
    ];
    let differing: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(n, _)| *n).collect();
    report(
        "determinism",
        differing.is_empty(),
        if differing.is_empty() { "records, checkpoints and logs byte-identical".into() } else { format!("differ: {differing:?}") },
    );
    assert!(differing.is_empty());
}
