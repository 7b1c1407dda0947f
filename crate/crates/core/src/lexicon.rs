//! Bilingual lexicons mapping high-resource-language words to translations.
//!
//! Source keys are stored in canonical matching form (NFC, then lowercase,
//! then NFC again). Target strings are kept verbatim. A lexicon file is a
//! two-column UTF-8 TSV, `source<TAB>target` per line; repeated sources
//! accumulate translations in file order and identical pairs collapse.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("malformed lexicon line {0}: expected `source<TAB>target`")]
    MalformedLine(usize),
    #[error("empty field on lexicon line {0}")]
    EmptyField(usize),
    #[error("cannot sample {requested} words from a lexicon with {available} source words")]
    NotEnoughWords { requested: usize, available: usize },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Canonical matching form of a source word.
pub fn canonical(word: &str) -> String {
    let nfc: String = word.nfc().collect();
    nfc.to_lowercase().nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualLexicon {
    source_lang: String,
    target_lang: String,
    entries: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconStats {
    pub num_source_words: usize,
    pub num_distinct_target_words: usize,
    pub mean_translations_per_source: f64,
}

impl BilingualLexicon {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        Self {
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Builds a lexicon from `(source, target)` pairs, rejecting empty fields
    /// and fields containing tabs or newlines. Errors report the 1-based pair
    /// position.
    pub fn from_pairs<S: AsRef<str>, T: AsRef<str>>(
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
        pairs: impl IntoIterator<Item = (S, T)>,
    ) -> Result<Self, LexiconError> {
        let mut lex = Self::new(source_lang, target_lang);
        for (i, (s, t)) in pairs.into_iter().enumerate() {
            let (s, t) = (s.as_ref(), t.as_ref());
            if [s, t].iter().any(|f| f.contains(['\t', '\n', '\r'])) {
                return Err(LexiconError::MalformedLine(i + 1));
            }
            lex.insert(s, t, i + 1)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, source: &str, target: &str, line: usize) -> Result<(), LexiconError> {
        let source = source.trim();
        let target = target.trim();
        if source.is_empty() || target.is_empty() {
            return Err(LexiconError::EmptyField(line));
        }
        let translations = self.entries.entry(canonical(source)).or_default();
        if !translations.iter().any(|t| t == target) {
            translations.push(target.to_string());
        }
        Ok(())
    }

    pub fn parse_tsv_str(text: &str, source_lang: &str, target_lang: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::new(source_lang, target_lang);
        for (i, raw) in text.split('\n').enumerate() {
            let line_no = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(source), Some(target), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(LexiconError::MalformedLine(line_no));
            };
            lex.insert(source, target, line_no)?;
        }
        Ok(lex)
    }

    pub fn source_lang(&self) -> &str {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.target_lang
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All translations for the canonical form of `word`.
    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.entries.get(&canonical(word)).map(Vec::as_slice)
    }

    /// Lookup for a key already in canonical form.
    pub fn lookup_canonical(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    /// Canonical source keys in sorted order.
    pub fn source_words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Distinct target strings across all entries.
    pub fn target_words(&self) -> BTreeSet<&str> {
        self.entries.values().flatten().map(String::as_str).collect()
    }

    /// Largest number of whitespace-separated tokens in any source key.
    pub fn max_source_tokens(&self) -> usize {
        self.entries.keys().map(|k| k.split_whitespace().count()).max().unwrap_or(0)
    }

    pub fn stats(&self) -> LexiconStats {
        let num_source_words = self.entries.len();
        let total: usize = self.entries.values().map(Vec::len).sum();
        LexiconStats {
            num_source_words,
            num_distinct_target_words: self.target_words().len(),
            mean_translations_per_source: if num_source_words == 0 {
                0.0
            } else {
                total as f64 / num_source_words as f64
            },
        }
    }

    /// Draws `n` distinct source keys uniformly without replacement.
    pub fn sample_words<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<String>, LexiconError> {
        let available = self.entries.len();
        if n > available {
            return Err(LexiconError::NotEnoughWords { requested: n, available });
        }
        // Index sampling over the sorted key order keeps draws reproducible.
        let keys: Vec<&String> = self.entries.keys().collect();
        Ok(rand::seq::index::sample(rng, available, n)
            .into_iter()
            .map(|i| keys[i].clone())
            .collect())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (source, targets) in &self.entries {
            for target in targets {
                out.push_str(source);
                out.push('\t');
                out.push_str(target);
                out.push('\n');
            }
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<(), LexiconError> {
        let io = |source| LexiconError::IoFailure {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        out.write_all(self.to_tsv().as_bytes()).map_err(io)?;
        out.flush().map_err(io)
    }
}

pub fn parse_lexicon_tsv(path: &Path, source_lang: &str, target_lang: &str) -> Result<BilingualLexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    BilingualLexicon::parse_tsv_str(&text, source_lang, target_lang)
}
