//! Synthetic corpora with planted gender-profession co-occurrence.
//!
//! The planted-bias corpus is shaped like a miniature BEC-Pro: four person
//! pairs, twelve professions (four female-planted, four male-planted, four
//! balanced) and the five English templates. For every (template, pair,
//! profession) cell it emits `REPETITIONS` sentences, of which
//! `round(strength × REPETITIONS)` use the planted gender. The conditional
//! frequencies are therefore known exactly, and so is the sign of every
//! (gender, profession) association.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cds::{GapCorpus, GapDocument};
use crate::corpus::{
    apply_masking, expand_templates, load_persons, templates, CorpusError, Gender, Language, PersonWord,
    ProfessionEntry, ProfessionGroup, SentenceInstance,
};
use crate::mlm::Tokenizer;

pub const REPETITIONS: usize = 20;

const PERSONS_TSV: &str = "surface_en\tsurface_de\tgender\thead_word_en\thead_word_de\tde_article
she\tsie\tfemale\tshe\tsie\tdie
he\ter\tmale\the\ter\tder
my mother\tmeine Mutter\tfemale\tmother\tMutter\tdie
my father\tmein Vater\tmale\tfather\tVater\tder
my sister\tmeine Schwester\tfemale\tsister\tSchwester\tdie
my brother\tmein Bruder\tmale\tbrother\tBruder\tder
my wife\tmeine Frau\tfemale\twife\tFrau\tdie
my husband\tmein Mann\tmale\thusband\tMann\tder
";

const FEMALE_PLANTED: [&str; 4] = ["nurse", "secretary", "hairdresser", "receptionist"];
const MALE_PLANTED: [&str; 4] = ["plumber", "roofer", "electrician", "carpenter"];
const BALANCED: [&str; 4] = ["photographer", "judge", "bartender", "dispatcher"];

/// Known association of one gender with one profession under the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedAssociation {
    pub profession: String,
    pub group: ProfessionGroup,
    pub gender: Gender,
    /// P(gender | profession) in the training corpus.
    pub conditional: f64,
    /// ln(P(gender | profession) / P(gender)); `-inf` when the pair never occurs.
    pub log_ratio: f64,
    /// Sign of `log_ratio`: +1, -1 or 0.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFixture {
    pub strength: f64,
    pub seed: u64,
    pub persons: Vec<PersonWord>,
    pub professions: Vec<ProfessionEntry>,
    pub training_corpus: Vec<String>,
    pub expected: Vec<ExpectedAssociation>,
}

fn profession(name: &str, group: ProfessionGroup) -> ProfessionEntry {
    let percent_female = match group {
        ProfessionGroup::FemaleDominated => 95.0,
        ProfessionGroup::MaleDominated => 2.0,
        ProfessionGroup::Balanced => 50.0,
    };
    ProfessionEntry {
        original_label: name.to_string(),
        short_en: name.to_string(),
        percent_female,
        group,
        de_masculine: name.to_string(),
        de_feminine: name.to_string(),
    }
}

pub fn fixture_persons() -> Vec<PersonWord> {
    load_persons(PERSONS_TSV.as_bytes()).expect("fixture persons are valid")
}

pub fn fixture_professions() -> Vec<ProfessionEntry> {
    let mut out = Vec::with_capacity(12);
    out.extend(FEMALE_PLANTED.iter().map(|n| profession(n, ProfessionGroup::FemaleDominated)));
    out.extend(MALE_PLANTED.iter().map(|n| profession(n, ProfessionGroup::MaleDominated)));
    out.extend(BALANCED.iter().map(|n| profession(n, ProfessionGroup::Balanced)));
    out
}

/// Number of sentences per cell that use `gender` for a profession of `group`.
pub fn planted_count(group: ProfessionGroup, gender: Gender, strength: f64) -> usize {
    let planted = match group.typical_gender() {
        Some(g) => g,
        None => return if gender == Gender::Female { REPETITIONS / 2 } else { REPETITIONS - REPETITIONS / 2 },
    };
    let k = (strength.clamp(0.0, 1.0) * REPETITIONS as f64).round() as usize;
    if gender == planted {
        k
    } else {
        REPETITIONS - k
    }
}

fn sign(x: f64) -> i8 {
    if x > 1e-12 {
        1
    } else if x < -1e-12 {
        -1
    } else {
        0
    }
}

/// Builds the planted corpus and its expected sign table.
///
/// `strength` 1.0 makes each planted profession co-occur exclusively with its
/// planted gender; 0.5 balances everything. `seed` fixes the sentence order.
pub fn planted_bias_fixture(strength: f64, seed: u64) -> PlantedFixture {
    let persons = fixture_persons();
    let professions = fixture_professions();
    let instances = expand_templates(&templates(Language::English), &persons, &professions, Language::English)
        .expect("fixture templates expand");
    let mut corpus = Vec::new();
    for inst in &instances {
        let prof = &professions[inst.profession_index];
        for _ in 0..planted_count(prof.group, inst.gender, strength) {
            corpus.push(inst.sentence.clone());
        }
    }
    corpus.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut expected = Vec::with_capacity(professions.len() * 2);
    for prof in &professions {
        for gender in Gender::ALL {
            let conditional = planted_count(prof.group, gender, strength) as f64 / REPETITIONS as f64;
            let log_ratio = (2.0 * conditional).ln();
            expected.push(ExpectedAssociation {
                profession: prof.short_en.clone(),
                group: prof.group,
                gender,
                conditional,
                log_ratio,
                sign: if conditional == 0.0 { -1 } else { sign(log_ratio) },
            });
        }
    }
    PlantedFixture { strength, seed, persons, professions, training_corpus: corpus, expected }
}

impl PlantedFixture {
    /// BEC-Pro-style scoring instances (template × person × profession), masked for `tokenizer`.
    pub fn instances<T: Tokenizer + ?Sized>(&self, tokenizer: &T) -> Result<Vec<SentenceInstance>, CorpusError> {
        expand_templates(&templates(Language::English), &self.persons, &self.professions, Language::English)?
            .into_iter()
            .map(|i| apply_masking(i, tokenizer))
            .collect()
    }

    pub fn expected_for(&self, profession: &str, gender: Gender) -> Option<&ExpectedAssociation> {
        self.expected.iter().find(|e| e.profession == profession && e.gender == gender)
    }

    pub fn planted_professions(&self) -> impl Iterator<Item = &ProfessionEntry> {
        self.professions.iter().filter(|p| p.group != ProfessionGroup::Balanced)
    }

    /// A GAP-shaped corpus of `documents` short texts that repeat the planted
    /// skew: each document is about one professional, written with person
    /// words of the planted gender with probability `strength`.
    ///
    /// All gendered words are in the default substitution lexicon, so a
    /// substitution pass can rebalance the corpus.
    pub fn gap_corpus(&self, documents: usize, seed: u64) -> GapCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tpl = templates(Language::English);
        let females: Vec<&PersonWord> = self.persons.iter().filter(|p| p.gender == Gender::Female).collect();
        let males: Vec<&PersonWord> = self.persons.iter().filter(|p| p.gender == Gender::Male).collect();
        let mut docs = Vec::with_capacity(documents);
        for d in 0..documents {
            let prof = &self.professions[rng.gen_range(0..self.professions.len())];
            let female_prob = match prof.group.typical_gender() {
                Some(Gender::Female) => self.strength,
                Some(Gender::Male) => 1.0 - self.strength,
                None => 0.5,
            };
            let gender = if rng.gen_bool(female_prob.clamp(0.0, 1.0)) { Gender::Female } else { Gender::Male };
            let pool = if gender == Gender::Female { &females } else { &males };
            let person = pool[rng.gen_range(0..pool.len())];
            let pronoun = if gender == Gender::Female { "She" } else { "He" };
            let sentences = rng.gen_range(2..=3);
            let mut text = String::new();
            for s in 0..sentences {
                let t = &tpl[rng.gen_range(0..tpl.len())];
                let sentence = t.pattern.replace("<profession>", &prof.short_en);
                let sentence = if s == 0 {
                    sentence.replace("<person>", &person.surface_en)
                } else {
                    sentence.replace("<person>", &pronoun.to_lowercase())
                };
                if !text.is_empty() {
                    text.push(' ');
                }
                let mut chars = sentence.chars();
                if let Some(c) = chars.next() {
                    text.extend(c.to_uppercase());
                    text.push_str(chars.as_str());
                }
            }
            let id = format!("fixture-{d:05}");
            docs.push(GapDocument {
                metadata: vec![id.clone(), format!("https://example.org/fixture/{d}")],
                id,
                text,
            });
        }
        GapCorpus { headers: vec!["ID".into(), "Text".into(), "URL".into()], text_column: 1, documents: docs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_strength_signs() {
        let f = planted_bias_fixture(1.0, 42);
        assert_eq!(f.expected_for("nurse", Gender::Female).unwrap().sign, 1);
        assert_eq!(f.expected_for("nurse", Gender::Male).unwrap().sign, -1);
        assert_eq!(f.expected_for("plumber", Gender::Male).unwrap().sign, 1);
        assert_eq!(f.expected_for("judge", Gender::Female).unwrap().sign, 0);
        assert_eq!(f.training_corpus.len(), 12 * 5 * 4 * REPETITIONS);
    }

    #[test]
    fn half_strength_is_balanced() {
        let f = planted_bias_fixture(0.5, 42);
        assert!(f.expected.iter().all(|e| e.sign == 0 && e.log_ratio.abs() < 1e-12));
    }

    #[test]
    fn strength_point_eight_counts() {
        let f = planted_bias_fixture(0.8, 1);
        let she_nurse = f.training_corpus.iter().filter(|s| s.as_str() == "she is a nurse.").count();
        let he_nurse = f.training_corpus.iter().filter(|s| s.as_str() == "he is a nurse.").count();
        assert_eq!((she_nurse, he_nurse), (16, 4));
        let e = f.expected_for("nurse", Gender::Female).unwrap();
        assert!((e.log_ratio - 1.6f64.ln()).abs() < 1e-12);
        assert!(e.log_ratio > f.expected_for("nurse", Gender::Male).unwrap().log_ratio);
    }

    #[test]
    fn gap_corpus_is_deterministic_and_unique() {
        let f = planted_bias_fixture(1.0, 42);
        let a = f.gap_corpus(50, 7);
        assert_eq!(a, f.gap_corpus(50, 7));
        let ids: std::collections::HashSet<_> = a.documents.iter().map(|d| &d.id).collect();
        assert_eq!(ids.len(), 50);
    }
}
