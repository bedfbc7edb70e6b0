//! Tweet normalization, tokenization and n-gram extraction.
//!
//! Normalization lowercases, deletes commas and applies an [`AsciiPolicy`].
//! The tokenizer then works on the normalized string:
//!
//! 1. split on Unicode whitespace;
//! 2. split leading and trailing runs of punctuation/symbol characters
//!    (general categories `P*` and `S*`) off each chunk as their own tokens;
//! 3. split contractions at an inner apostrophe, the apostrophe staying with
//!    the suffix (`don't` → `don`, `'t`);
//! 4. keep `#hashtag` and `@mention` prefixes attached to their word.

use std::str::FromStr;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::Error;

/// Codepoints deleted under [`AsciiPolicy::KeepMost`]: middle dot, right and
/// left single quotation marks, bullet, horizontal ellipsis and katakana
/// middle dot.
pub const KEEP_MOST_REMOVALS: [char; 6] = [
    '\u{00B7}', '\u{2019}', '\u{2018}', '\u{2022}', '\u{2026}', '\u{30FB}',
];

/// How non-ASCII characters are treated during normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AsciiPolicy {
    /// Delete every codepoint at or above U+0080.
    StripAll,
    /// Delete only [`KEEP_MOST_REMOVALS`].
    #[default]
    KeepMost,
}

impl AsciiPolicy {
    pub fn keeps(self, c: char) -> bool {
        match self {
            AsciiPolicy::StripAll => c.is_ascii(),
            AsciiPolicy::KeepMost => !KEEP_MOST_REMOVALS.contains(&c),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AsciiPolicy::StripAll => "strip-all",
            AsciiPolicy::KeepMost => "keep-most",
        }
    }
}

impl FromStr for AsciiPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "strip-all" => Ok(AsciiPolicy::StripAll),
            "keep-most" => Ok(AsciiPolicy::KeepMost),
            other => Err(Error::InvalidArgument(format!(
                "unknown ascii policy {other:?} (expected strip-all or keep-most)"
            ))),
        }
    }
}

/// Lowercases, deletes commas, then deletes whatever `policy` rejects.
pub fn normalize(text: &str, policy: AsciiPolicy) -> String {
    text.to_lowercase()
        .chars()
        .filter(|&c| c != ',' && policy.keeps(c))
        .collect()
}

fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

// Zero-width joiner and variation selectors glue emoji sequences together.
fn is_run_char(c: char) -> bool {
    is_punct_or_symbol(c) || c == '\u{200D}' || ('\u{FE00}'..='\u{FE0F}').contains(&c)
}

/// Ordered tokens of one normalized tweet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(pub Vec<String>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    TokenSequence(tokens)
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    while start < chars.len() && is_run_char(chars[start]) {
        start += 1;
    }
    if start == chars.len() {
        out.push(chunk.to_owned());
        return;
    }
    let mut end = chars.len();
    while end > start && is_run_char(chars[end - 1]) {
        end -= 1;
    }

    // A '#' or '@' directly before the word stays attached to it.
    let mut word_start = start;
    if start > 0 && matches!(chars[start - 1], '#' | '@') {
        word_start = start - 1;
    }
    if word_start > 0 {
        out.push(chars[..word_start].iter().collect());
    }
    split_contractions(&chars[word_start..end], out);
    if end < chars.len() {
        out.push(chars[end..].iter().collect());
    }
}

fn split_contractions(word: &[char], out: &mut Vec<String>) {
    let mut piece_start = 0;
    for p in 1..word.len().saturating_sub(1) {
        if word[p] == '\'' && word[p - 1].is_alphanumeric() && word[p + 1].is_alphanumeric() {
            out.push(word[piece_start..p].iter().collect());
            piece_start = p;
        }
    }
    out.push(word[piece_start..].iter().collect());
}

/// Unigrams and bigrams of one tweet, with multiplicity. Bigrams join their
/// two tokens with a single space.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NgramBag {
    pub unigrams: Vec<String>,
    pub bigrams: Vec<String>,
}

impl NgramBag {
    pub fn len(&self) -> usize {
        self.unigrams.len() + self.bigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unigrams.is_empty()
    }

    /// All grams, unigrams first.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.unigrams
            .iter()
            .chain(&self.bigrams)
            .map(String::as_str)
    }

    /// Multiset union.
    pub fn union(mut self, other: NgramBag) -> NgramBag {
        self.unigrams.extend(other.unigrams);
        self.bigrams.extend(other.bigrams);
        self
    }
}

pub fn extract_ngrams(tokens: &TokenSequence) -> NgramBag {
    NgramBag {
        unigrams: tokens.0.clone(),
        bigrams: tokens
            .0
            .windows(2)
            .map(|w| format!("{} {}", w[0], w[1]))
            .collect(),
    }
}

/// normalize → tokenize → extract_ngrams.
pub fn text_to_ngrams(text: &str, policy: AsciiPolicy) -> NgramBag {
    extract_ngrams(&tokenize(&normalize(text, policy)))
}
