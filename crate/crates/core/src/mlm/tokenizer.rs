//! Whitespace/punctuation pre-tokenization and greedy longest-match WordPiece.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MlmError;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

/// Tokens reserved at the start of every vocabulary built here, in id order.
pub const RESERVED: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// Ids and surface strings of the special tokens a scorer understands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub pad: u32,
    pub unk: u32,
    pub cls: Option<u32>,
    pub sep: Option<u32>,
    pub mask: u32,
    pub mask_text: String,
}

impl SpecialTokens {
    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad || id == self.mask || id == self.unk || Some(id) == self.cls || Some(id) == self.sep
    }
}

/// Token ids plus their surface strings and the pre-token ("word") each came from.
///
/// `word_ids` is `None` for special tokens added around the sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub tokens: Vec<String>,
    pub word_ids: Vec<Option<usize>>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Positions whose id equals `id`.
    pub fn positions_of(&self, id: u32) -> Vec<usize> {
        self.ids.iter().enumerate().filter(|(_, &t)| t == id).map(|(i, _)| i).collect()
    }
}

/// A pre-token with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreToken<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// Splits on whitespace and isolates every punctuation character, keeping the
/// literal `never_split` strings (e.g. `[MASK]`) whole.
pub fn pre_tokenize<'a>(text: &'a str, never_split: &[&str]) -> Vec<PreToken<'a>> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if let Some(special) = never_split.iter().find(|s| text[i..].starts_with(**s)) {
            if let Some(ws) = word_start.take() {
                out.push(PreToken { text: &text[ws..i], start: ws, end: i });
            }
            let end = i + special.len();
            out.push(PreToken { text: &text[i..end], start: i, end });
            while iter.peek().is_some_and(|(j, _)| *j < end) {
                iter.next();
            }
            continue;
        }
        if c.is_whitespace() {
            if let Some(ws) = word_start.take() {
                out.push(PreToken { text: &text[ws..i], start: ws, end: i });
            }
        } else if is_punct(c) {
            if let Some(ws) = word_start.take() {
                out.push(PreToken { text: &text[ws..i], start: ws, end: i });
            }
            let end = i + c.len_utf8();
            out.push(PreToken { text: &text[i..end], start: i, end });
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(ws) = word_start {
        out.push(PreToken { text: &text[ws..], start: ws, end: text.len() });
    }
    out
}

/// Greedy longest-match-first WordPiece over a fixed vocabulary.
///
/// A vocabulary without `##` continuation pieces behaves as a whole-word
/// tokenizer: every known word is one token, everything else is `[UNK]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPieceTokenizer {
    vocab: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    lowercase: bool,
    #[serde(default = "default_true")]
    add_special_tokens: bool,
    #[serde(skip, default = "default_max_chars")]
    max_chars_per_word: usize,
}

fn default_true() -> bool {
    true
}

fn default_max_chars() -> usize {
    100
}

impl WordPieceTokenizer {
    /// `vocab` must start with the [`RESERVED`] tokens.
    pub fn new(vocab: Vec<String>, lowercase: bool) -> Result<Self, MlmError> {
        for (i, r) in RESERVED.iter().enumerate() {
            if vocab.get(i).map(String::as_str) != Some(*r) {
                return Err(MlmError::InvalidVocabulary(format!("expected {r} at id {i}")));
            }
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if index.insert(tok.clone(), i as u32).is_some() {
                return Err(MlmError::InvalidVocabulary(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Self { vocab, index, lowercase, add_special_tokens: true, max_chars_per_word: 100 })
    }

    /// Whole-word vocabulary from the pre-tokens of `texts`, most frequent first
    /// (ties broken lexicographically), capped at `max_size` entries including
    /// the reserved tokens.
    pub fn from_texts<S: AsRef<str>>(texts: &[S], lowercase: bool, max_size: usize) -> Result<Self, MlmError> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for pt in pre_tokenize(t.as_ref(), &RESERVED) {
                if RESERVED.contains(&pt.text) {
                    continue;
                }
                let w = if lowercase { pt.text.to_lowercase() } else { pt.text.to_string() };
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = counts.into_iter().collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let room = max_size.saturating_sub(RESERVED.len());
        let mut vocab: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        vocab.extend(words.into_iter().take(room).map(|(w, _)| w));
        Self::new(vocab, lowercase)
    }

    /// Disables the `[CLS]`/`[SEP]` wrapping done by `encode`.
    pub fn without_special_tokens(mut self) -> Self {
        self.add_special_tokens = false;
        self
    }

    /// Adds tokens not yet in the vocabulary, preserving existing ids.
    pub fn with_extra_tokens<S: AsRef<str>>(mut self, extra: &[S]) -> Self {
        for t in extra {
            let t = t.as_ref();
            if !self.index.contains_key(t) {
                self.index.insert(t.to_string(), self.vocab.len() as u32);
                self.vocab.push(t.to_string());
            }
        }
        self
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    #[cfg(test)]
    pub(crate) fn vocab_mut_for_tests(&mut self, keep: usize) {
        self.vocab.truncate(keep);
        self.rebuild_index();
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token_text(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn special_tokens(&self) -> SpecialTokens {
        if self.add_special_tokens {
            SpecialTokens { pad: 0, unk: 1, cls: Some(2), sep: Some(3), mask: 4, mask_text: MASK.to_string() }
        } else {
            SpecialTokens { pad: 0, unk: 1, cls: None, sep: None, mask: 4, mask_text: MASK.to_string() }
        }
    }

    fn word_pieces(&self, word: &str) -> Vec<u32> {
        if word.chars().count() > self.max_chars_per_word {
            return vec![1];
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < word.len() {
            let mut end = word.len();
            let mut found = None;
            while start < end {
                let piece = if start == 0 { word[start..end].to_string() } else { format!("##{}", &word[start..end]) };
                if let Some(&id) = self.index.get(&piece) {
                    found = Some(id);
                    break;
                }
                // step back one char
                end = word[..end].char_indices().last().map(|(i, _)| i).unwrap_or(start);
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => return vec![1],
            }
        }
        pieces
    }

    /// Sub-tokens of `text` without `[CLS]`/`[SEP]`.
    pub fn tokenize(&self, text: &str) -> Encoding {
        let mut enc = Encoding::default();
        for (w, pt) in pre_tokenize(text, &RESERVED).into_iter().enumerate() {
            let ids = if RESERVED.contains(&pt.text) {
                vec![self.index[pt.text]]
            } else if self.lowercase {
                self.word_pieces(&pt.text.to_lowercase())
            } else {
                self.word_pieces(pt.text)
            };
            for id in ids {
                enc.ids.push(id);
                enc.tokens.push(self.vocab[id as usize].clone());
                enc.word_ids.push(Some(w));
            }
        }
        enc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(extra: &[&str]) -> Vec<String> {
        RESERVED.iter().chain(extra.iter()).map(|s| s.to_string()).collect()
    }

    #[test]
    fn pre_tokenize_splits_punctuation_and_keeps_mask() {
        let toks: Vec<_> = pre_tokenize("My [MASK], the fire-fighter.", &RESERVED).into_iter().map(|t| t.text).collect();
        assert_eq!(toks, ["My", "[MASK]", ",", "the", "fire", "-", "fighter", "."]);
    }

    #[test]
    fn pre_token_offsets_index_the_source() {
        let text = "Meine Mutter, die Feuerwehrfrau.";
        for t in pre_tokenize(text, &RESERVED) {
            assert_eq!(&text[t.start..t.end], t.text);
        }
    }

    #[test]
    fn wordpiece_splits_designated_words() {
        let tok = WordPieceTokenizer::new(vocab(&["medical", "records", "techn", "##ician", "."]), true).unwrap();
        let enc = tok.tokenize("Medical records technician.");
        assert_eq!(enc.tokens, ["medical", "records", "techn", "##ician", "."]);
        assert_eq!(enc.word_ids, [Some(0), Some(1), Some(2), Some(2), Some(3)]);
    }

    #[test]
    fn unknown_word_is_unk() {
        let tok = WordPieceTokenizer::new(vocab(&["nurse"]), true).unwrap();
        assert_eq!(tok.tokenize("plumber").ids, [1]);
    }

    #[test]
    fn mask_survives_lowercasing() {
        let tok = WordPieceTokenizer::new(vocab(&["is"]), true).unwrap();
        assert_eq!(tok.tokenize("[MASK] is").ids, [4, 5]);
    }

    #[test]
    fn vocab_must_start_with_reserved() {
        assert!(WordPieceTokenizer::new(vec!["a".into()], true).is_err());
    }

    #[test]
    fn from_texts_orders_by_frequency() {
        let tok = WordPieceTokenizer::from_texts(&["b a a", "c a b"], true, 100).unwrap();
        assert_eq!(&tok.vocab()[5..], ["a", "b", "c"]);
        let capped = WordPieceTokenizer::from_texts(&["b a a", "c a b"], true, 6).unwrap();
        assert_eq!(&capped.vocab()[5..], ["a"]);
    }
}
