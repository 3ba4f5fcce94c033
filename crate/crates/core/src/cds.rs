//! Counterfactual data substitution over GAP-style corpora.
//!
//! A flipped document has every gendered lexicon word replaced by its
//! counterpart and every listed first name exchanged for its paired name.
//! Documents are flipped independently; each draws from its own random stream
//! derived from the run seed and the document id, so results do not depend on
//! processing order.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_LEXICON: &str = include_str!("../data/gender_pairs.tsv");
pub const DEFAULT_NAMES: &str = include_str!("../data/name_pairs.tsv");
pub const DEFAULT_SWAP_PROBABILITY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CdsError {
    #[error("line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("{word:?} maps to both {first:?} and {second:?}")]
    ConflictingMapping { word: String, first: String, second: String },
    #[error("corpus header has no Text column")]
    MissingTextColumn,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("document id {0:?} occurs more than once")]
    DuplicateId(String),
    #[error("document {doc}: {word:?} at byte {offset} needs a discriminator ({options}) and none was resolved")]
    AmbiguousTokenUnresolved { doc: String, word: String, offset: usize, options: String },
    #[error("swap probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconPair {
    pub female: String,
    pub male: String,
    pub discriminator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Mapping {
    Unique(String),
    Ambiguous(Vec<(String, String)>),
}

/// Bidirectional gendered word pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderPairLexicon {
    pairs: Vec<LexiconPair>,
    forward: HashMap<String, (Side, Mapping)>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim_end_matches('\r');
        (!l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .then(|| (i + 1, l.split('\t').map(str::trim).collect()))
    })
}

/// Replacement words keyed by optional part-of-speech discriminator.
type DiscriminatedTargets = Vec<(Option<String>, String)>;

impl GenderPairLexicon {
    /// Parses `female <TAB> male [<TAB> discriminator]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CdsError> {
        let mut pairs = Vec::new();
        for (line, fields) in data_lines(text) {
            if !(2..=3).contains(&fields.len()) || fields[..2].iter().any(|f| f.is_empty()) {
                return Err(CdsError::MalformedLexicon { line, reason: "expected 2 or 3 tab-separated fields".into() });
            }
            pairs.push(LexiconPair {
                female: fields[0].to_lowercase(),
                male: fields[1].to_lowercase(),
                discriminator: fields.get(2).filter(|d| !d.is_empty()).map(|d| d.to_lowercase()),
            });
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs(pairs: Vec<LexiconPair>) -> Result<Self, CdsError> {
        let mut entries: HashMap<String, (Side, DiscriminatedTargets)> = HashMap::new();
        for p in &pairs {
            for (word, side, target) in [(&p.female, Side::Female, &p.male), (&p.male, Side::Male, &p.female)] {
                let entry = entries.entry(word.clone()).or_insert_with(|| (side, Vec::new()));
                if entry.0 != side {
                    return Err(CdsError::ConflictingMapping {
                        word: word.clone(),
                        first: format!("{:?} side", entry.0),
                        second: format!("{side:?} side"),
                    });
                }
                if !entry.1.iter().any(|(_, t)| t == target) {
                    entry.1.push((p.discriminator.clone(), target.clone()));
                }
            }
        }
        let mut forward = HashMap::with_capacity(entries.len());
        for (word, (side, targets)) in entries {
            let mapping = if targets.len() == 1 {
                Mapping::Unique(targets[0].1.clone())
            } else {
                let mut options: Vec<(String, String)> = Vec::with_capacity(targets.len());
                for (disc, target) in &targets {
                    let Some(disc) = disc else {
                        return Err(CdsError::ConflictingMapping {
                            word: word.clone(),
                            first: targets[0].1.clone(),
                            second: targets[1].1.clone(),
                        });
                    };
                    if let Some((_, prev)) = options.iter().find(|(d, _)| d == disc) {
                        return Err(CdsError::ConflictingMapping {
                            word: word.clone(),
                            first: prev.clone(),
                            second: target.clone(),
                        });
                    }
                    options.push((disc.clone(), target.clone()));
                }
                options.sort();
                Mapping::Ambiguous(options)
            };
            forward.insert(word, (side, mapping));
        }
        Ok(Self { pairs, forward })
    }

    pub fn default_english() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CdsError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn pairs(&self) -> &[LexiconPair] {
        &self.pairs
    }

    pub fn side(&self, word: &str) -> Option<Side> {
        self.forward.get(&word.to_lowercase()).map(|(s, _)| *s)
    }

    /// True when no word needs a discriminator to pick its counterpart.
    pub fn is_discriminator_free(&self) -> bool {
        self.forward.values().all(|(_, m)| matches!(m, Mapping::Unique(_)))
    }
}

/// Bidirectional first-name pairs, lower-cased on load.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NamePairList {
    pairs: Vec<(String, String)>,
    map: HashMap<String, String>,
}

impl NamePairList {
    pub fn parse(text: &str) -> Result<Self, CdsError> {
        let mut pairs = Vec::new();
        for (line, fields) in data_lines(text) {
            if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
                return Err(CdsError::MalformedLexicon { line, reason: "expected 2 tab-separated names".into() });
            }
            pairs.push((fields[0].to_lowercase(), fields[1].to_lowercase()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self, CdsError> {
        let mut map = HashMap::with_capacity(pairs.len() * 2);
        for (a, b) in &pairs {
            for (from, to) in [(a, b), (b, a)] {
                if let Some(prev) = map.insert(from.clone(), to.clone()) {
                    if &prev != to {
                        return Err(CdsError::ConflictingMapping { word: from.clone(), first: prev, second: to.clone() });
                    }
                }
            }
        }
        Ok(Self { pairs, map })
    }

    pub fn default_english() -> Self {
        Self::parse(DEFAULT_NAMES).expect("shipped name list is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CdsError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn counterpart(&self, name: &str) -> Option<&str> {
        self.map.get(&name.to_lowercase()).map(String::as_str)
    }
}

/// A word token with its byte range in the document text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordToken<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+").expect("valid regex"))
}

/// Maximal runs of letters and digits; everything else separates words.
pub fn word_tokens(text: &str) -> Vec<WordToken<'_>> {
    word_regex().find_iter(text).map(|m| WordToken { text: m.as_str(), start: m.start(), end: m.end() }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CasePattern {
    Lower,
    Title,
    Upper,
}

fn case_pattern(word: &str) -> CasePattern {
    let mut chars = word.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        CasePattern::Upper
    } else if first_upper {
        CasePattern::Title
    } else {
        CasePattern::Lower
    }
}

fn apply_case(word: &str, pattern: CasePattern) -> String {
    match pattern {
        CasePattern::Lower => word.to_lowercase(),
        CasePattern::Upper => word.to_uppercase(),
        CasePattern::Title => {
            let mut chars = word.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        }
    }
}

/// Picks a discriminator for an ambiguous word from its surroundings.
pub trait DiscriminatorResolver: Send + Sync {
    /// `index` is the position of the ambiguous word in `tokens`; `options`
    /// lists the discriminators the lexicon knows for it.
    fn resolve(&self, text: &str, tokens: &[WordToken<'_>], index: usize, options: &[&str]) -> Option<String>;
}

const CLOSED_CLASS: &[&str] = &[
    "a", "about", "after", "again", "against", "all", "also", "an", "and", "any", "are", "as", "at", "back",
    "be", "because", "been", "before", "being", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "down", "during", "each", "either", "even", "ever", "for", "from", "had", "has", "have", "he",
    "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it",
    "its", "just", "later", "me", "more", "most", "my", "neither", "never", "no", "nor", "not", "now", "of",
    "off", "on", "once", "only", "or", "our", "out", "over", "she", "should", "since", "so", "some", "soon",
    "still", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those",
    "though", "through", "to", "together", "too", "under", "until", "up", "upon", "very", "was", "we",
    "were", "what", "when", "where", "whether", "which", "while", "who", "whom", "why", "will", "with",
    "would", "yet", "you", "your",
];

/// Default rule for "her": possessive before a noun-like word, object
/// before punctuation, the end of the text or a closed-class word.
///
/// A capitalised word in mid-sentence position is not decided (it may be a
/// name starting a new clause or a proper noun being possessed).
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicResolver;

impl DiscriminatorResolver for HeuristicResolver {
    fn resolve(&self, text: &str, tokens: &[WordToken<'_>], index: usize, options: &[&str]) -> Option<String> {
        let pick = |d: &str| options.contains(&d).then(|| d.to_string());
        let here = tokens[index];
        let Some(next) = tokens.get(index + 1) else {
            return pick("obj");
        };
        let gap = &text[here.end..next.start];
        if gap.chars().any(|c| !c.is_whitespace()) {
            return pick("obj");
        }
        let lower = next.text.to_lowercase();
        if CLOSED_CLASS.contains(&lower.as_str()) {
            return pick("obj");
        }
        if next.text.chars().next().is_some_and(char::is_uppercase) {
            return None;
        }
        pick("poss")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapDocument {
    pub id: String,
    pub text: String,
    /// Every other column of the source row, in header order.
    pub metadata: Vec<String>,
}

/// A parsed GAP-style table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapCorpus {
    pub headers: Vec<String>,
    pub text_column: usize,
    pub documents: Vec<GapDocument>,
}

/// Parses a tab-separated table with a header row and a `Text` column.
///
/// The `ID` column supplies document ids when present; otherwise rows are
/// numbered `row-1`, `row-2`, ...
pub fn parse_gap<R: Read>(source: R) -> Result<GapCorpus, CdsError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').flexible(true).from_reader(source);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let text_column = headers.iter().position(|h| h == "Text").ok_or(CdsError::MissingTextColumn)?;
    let id_column = headers.iter().position(|h| h == "ID");
    let mut documents = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        if row.len() != headers.len() {
            return Err(CdsError::MalformedRow {
                row: i + 1,
                reason: format!("{} fields, header has {}", row.len(), headers.len()),
            });
        }
        let id = match id_column {
            Some(c) => row[c].to_string(),
            None => format!("row-{}", i + 1),
        };
        if !seen.insert(id.clone()) {
            return Err(CdsError::DuplicateId(id));
        }
        let metadata = row.iter().enumerate().filter(|(c, _)| *c != text_column).map(|(_, f)| f.to_string()).collect();
        documents.push(GapDocument { id, text: row[text_column].to_string(), metadata });
    }
    Ok(GapCorpus { headers, text_column, documents })
}

pub fn read_gap_path(path: &Path) -> Result<GapCorpus, CdsError> {
    parse_gap(std::fs::File::open(path)?)
}

fn write_rows<'a, W, I>(out: W, corpus: &GapCorpus, extra: Option<&str>, rows: I) -> Result<(), CdsError>
where
    W: Write,
    I: IntoIterator<Item = (&'a GapDocument, Option<bool>)>,
{
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    let mut header = corpus.headers.clone();
    header.extend(extra.map(str::to_string));
    wtr.write_record(&header)?;
    for (doc, flag) in rows {
        let mut meta = doc.metadata.iter();
        let mut row: Vec<&str> = Vec::with_capacity(header.len());
        for c in 0..corpus.headers.len() {
            if c == corpus.text_column {
                row.push(&doc.text);
            } else {
                row.push(meta.next().map(String::as_str).unwrap_or(""));
            }
        }
        if let Some(f) = flag {
            row.push(if f { "true" } else { "false" });
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the table back with the same columns, the Text column holding the
/// (possibly substituted) text and a `flipped` column appended.
pub fn write_gap<W: Write>(out: W, corpus: &GapCorpus, outcomes: &[SubstitutionOutcome]) -> Result<(), CdsError> {
    write_rows(out, corpus, Some("flipped"), outcomes.iter().map(|o| (&o.document, Some(o.flipped))))
}

/// Writes `corpus` unchanged in the format [`parse_gap`] reads.
pub fn write_gap_corpus<W: Write>(out: W, corpus: &GapCorpus) -> Result<(), CdsError> {
    write_rows(out, corpus, None, corpus.documents.iter().map(|d| (d, None)))
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.", "Mt.", "Gen.", "Col.", "Lt.", "Sgt.", "Capt.",
    "Rev.", "Gov.", "Sen.", "Rep.", "vs.", "etc.", "e.g.", "i.e.", "Inc.", "Ltd.", "Co.", "Corp.", "No.", "Jan.",
    "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "U.S.", "U.K.", "A.",
    "B.", "C.", "D.", "E.", "F.", "G.", "H.", "I.", "J.", "K.", "L.", "M.", "N.", "O.", "P.", "Q.", "R.", "S.",
    "T.", "U.", "V.", "W.", "X.", "Y.", "Z.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Sentences of `text` and the separators around them.
///
/// `separators` has one more entry than `sentences`: the text before the
/// first sentence, between consecutive sentences, and after the last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSplit<'a> {
    pub sentences: Vec<&'a str>,
    pub separators: Vec<&'a str>,
}

impl SentenceSplit<'_> {
    /// Reassembles the original text.
    pub fn join(&self) -> String {
        let mut out = String::from(self.separators[0]);
        for (s, sep) in self.sentences.iter().zip(&self.separators[1..]) {
            out.push_str(s);
            out.push_str(sep);
        }
        out
    }
}

/// Splits at `.`, `?` or `!` (plus closing quotes or brackets) followed by
/// whitespace or the end of text, unless the word ending in `.` is listed in
/// `abbreviations`.
pub fn split_sentences_with<'a>(text: &'a str, abbreviations: &[&str]) -> SentenceSplit<'a> {
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if start.is_none() && !c.is_whitespace() {
            start = Some(pos);
        }
        if let (Some(s), '.' | '?' | '!') = (start, c) {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!') {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
            let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
            let word_start = text[s..pos].rfind(char::is_whitespace).map_or(s, |w| s + w + 1);
            let word = &text[word_start..pos + c.len_utf8()];
            let guarded = c == '.' && j == i + 1 && abbreviations.contains(&word);
            if at_boundary && !guarded {
                ranges.push((s, end));
                start = None;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        ranges.push((s, end));
    }
    let mut sentences = Vec::with_capacity(ranges.len());
    let mut separators = Vec::with_capacity(ranges.len() + 1);
    let mut cursor = 0;
    for (s, e) in ranges {
        separators.push(&text[cursor..s]);
        sentences.push(&text[s..e]);
        cursor = e;
    }
    separators.push(&text[cursor..]);
    SentenceSplit { sentences, separators }
}

pub fn split_sentences(text: &str) -> SentenceSplit<'_> {
    split_sentences_with(text, DEFAULT_ABBREVIATIONS)
}

/// An ambiguous word the resolver could not decide; the default mapping was used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolverMiss {
    pub doc: String,
    pub word: String,
    pub offset: usize,
    pub chosen: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionOutcome {
    pub document: GapDocument,
    pub flipped: bool,
    pub misses: Vec<ResolverMiss>,
}

pub struct SubstituteOptions<'a> {
    pub resolver: Option<&'a dyn DiscriminatorResolver>,
    /// Unresolved ambiguous words are errors instead of falling back to `default_discriminator`.
    pub strict: bool,
    pub default_discriminator: String,
}

impl Default for SubstituteOptions<'_> {
    fn default() -> Self {
        static HEURISTIC: HeuristicResolver = HeuristicResolver;
        Self { resolver: Some(&HEURISTIC), strict: false, default_discriminator: "poss".into() }
    }
}

/// Random stream for one document: ChaCha8 keyed by SHA-256 of the seed and id.
pub fn document_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Replaces every lexicon word and listed name in `text`.
pub fn flip_text(
    doc_id: &str,
    text: &str,
    lexicon: &GenderPairLexicon,
    names: &NamePairList,
    options: &SubstituteOptions<'_>,
) -> Result<(String, Vec<ResolverMiss>), CdsError> {
    let tokens = word_tokens(text);
    let mut out = String::with_capacity(text.len());
    let mut misses = Vec::new();
    let mut cursor = 0;
    for (i, tok) in tokens.iter().enumerate() {
        let lower = tok.text.to_lowercase();
        let replacement: Option<String> = match lexicon.forward.get(&lower) {
            Some((_, Mapping::Unique(t))) => Some(t.clone()),
            Some((_, Mapping::Ambiguous(opts))) => {
                let discs: Vec<&str> = opts.iter().map(|(d, _)| d.as_str()).collect();
                let resolved = options.resolver.and_then(|r| r.resolve(text, &tokens, i, &discs));
                let disc = match resolved {
                    Some(d) => d,
                    None if options.strict || options.resolver.is_none() => {
                        return Err(CdsError::AmbiguousTokenUnresolved {
                            doc: doc_id.to_string(),
                            word: tok.text.to_string(),
                            offset: tok.start,
                            options: discs.join("/"),
                        });
                    }
                    None => {
                        let chosen = if discs.contains(&options.default_discriminator.as_str()) {
                            options.default_discriminator.clone()
                        } else {
                            discs[0].to_string()
                        };
                        log::info!("{doc_id}: unresolved {:?} at byte {} mapped as {chosen}", tok.text, tok.start);
                        misses.push(ResolverMiss {
                            doc: doc_id.to_string(),
                            word: tok.text.to_string(),
                            offset: tok.start,
                            chosen: chosen.clone(),
                        });
                        chosen
                    }
                };
                opts.iter().find(|(d, _)| *d == disc).map(|(_, t)| t.clone())
            }
            None => names.counterpart(&lower).map(str::to_string),
        };
        if let Some(r) = replacement {
            out.push_str(&text[cursor..tok.start]);
            out.push_str(&apply_case(&r, case_pattern(tok.text)));
            cursor = tok.end;
        }
    }
    out.push_str(&text[cursor..]);
    Ok((out, misses))
}

/// Flips `document` with probability `swap_probability`.
pub fn substitute<R: Rng + ?Sized>(
    document: &GapDocument,
    lexicon: &GenderPairLexicon,
    names: &NamePairList,
    swap_probability: f64,
    rng: &mut R,
    options: &SubstituteOptions<'_>,
) -> Result<SubstitutionOutcome, CdsError> {
    if !(0.0..=1.0).contains(&swap_probability) {
        return Err(CdsError::InvalidProbability(swap_probability));
    }
    if !rng.gen_bool(swap_probability) {
        return Ok(SubstitutionOutcome { document: document.clone(), flipped: false, misses: Vec::new() });
    }
    let (text, misses) = flip_text(&document.id, &document.text, lexicon, names, options)?;
    Ok(SubstitutionOutcome { document: GapDocument { text, ..document.clone() }, flipped: true, misses })
}

/// Substitutes every document in parallel, preserving order.
pub fn substitute_corpus(
    documents: &[GapDocument],
    lexicon: &GenderPairLexicon,
    names: &NamePairList,
    swap_probability: f64,
    seed: u64,
    options: &SubstituteOptions<'_>,
) -> Result<Vec<SubstitutionOutcome>, CdsError> {
    documents
        .par_iter()
        .map(|d| substitute(d, lexicon, names, swap_probability, &mut document_rng(seed, &d.id), options))
        .collect()
}

/// Lexicon-word token counts on each side of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceAudit {
    pub female: u64,
    pub male: u64,
    pub per_word: BTreeMap<String, u64>,
    /// `female / male`; `None` when both counts are zero.
    pub ratio: Option<f64>,
}

pub fn audit_balance<'a, I: IntoIterator<Item = &'a str>>(texts: I, lexicon: &GenderPairLexicon) -> BalanceAudit {
    let mut audit = BalanceAudit { female: 0, male: 0, per_word: BTreeMap::new(), ratio: None };
    for text in texts {
        for tok in word_tokens(text) {
            let lower = tok.text.to_lowercase();
            if let Some((side, _)) = lexicon.forward.get(&lower) {
                match side {
                    Side::Female => audit.female += 1,
                    Side::Male => audit.male += 1,
                }
                *audit.per_word.entry(lower).or_default() += 1;
            }
        }
    }
    if audit.female + audit.male > 0 {
        audit.ratio = Some(audit.female as f64 / audit.male as f64);
    }
    audit
}
