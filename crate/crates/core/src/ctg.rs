//! Controlled-text-generation (CTG) training corpus construction.
//!
//! Each labeled instance yields exactly one prompt/completion pair: a
//! variable number of distinct word tokens is drawn from the instance text
//! and rendered with its label into a [`PromptTemplate`], and the original
//! text becomes the completion.

use std::path::Path;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{read_jsonl, write_jsonl, DataError, Dataset};
use crate::rng::stream_rng;
use crate::tokenize::{tokenize, TokenKind};

pub const DEFAULT_TEMPLATE: &str = "Generate a {label} text using the following words: {words}.\nText:";
pub const DEFAULT_WORD_SEPARATOR: &str = ", ";
pub const DEFAULT_MAX_WORDS: usize = 10;

const LABEL: &str = "{label}";
const WORDS: &str = "{words}";

#[derive(Debug, Error)]
pub enum CtgError {
    #[error("template must contain {{label}} and {{words}} exactly once each")]
    InvalidTemplate,
    #[error("max_words must be at least 1")]
    InvalidMaxWords,
    #[error("instance {0} has no word tokens")]
    InstanceHasNoWords(usize),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Label,
    Words,
}

/// A prompt with one `{label}` and one `{words}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    template: String,
    word_separator: String,
    segments: Vec<Segment>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::new(DEFAULT_TEMPLATE, DEFAULT_WORD_SEPARATOR).expect("default template is valid")
    }
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>, word_separator: impl Into<String>) -> Result<Self, CtgError> {
        let template = template.into();
        if template.matches(LABEL).count() != 1 || template.matches(WORDS).count() != 1 {
            return Err(CtgError::InvalidTemplate);
        }
        let label_at = template.find(LABEL).unwrap();
        let words_at = template.find(WORDS).unwrap();
        let (first, first_seg, second, second_seg) = if label_at < words_at {
            (label_at, Segment::Label, words_at, Segment::Words)
        } else {
            (words_at, Segment::Words, label_at, Segment::Label)
        };
        // Both placeholders are seven bytes and cannot overlap.
        let first_end = first + LABEL.len();
        let second_end = second + WORDS.len();
        let segments = vec![
            Segment::Literal(template[..first].to_string()),
            first_seg,
            Segment::Literal(template[first_end..second].to_string()),
            second_seg,
            Segment::Literal(template[second_end..].to_string()),
        ];
        Ok(Self {
            template,
            word_separator: word_separator.into(),
            segments,
        })
    }

    /// Reads a template file; one trailing newline is dropped.
    pub fn from_file(path: &Path, word_separator: &str) -> Result<Self, CtgError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let text = text.strip_suffix('\n').unwrap_or(&text);
        let text = text.strip_suffix('\r').unwrap_or(text);
        Self::new(text, word_separator)
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn word_separator(&self) -> &str {
        &self.word_separator
    }

    pub fn render<S: AsRef<str>>(&self, label: &str, words: &[S]) -> String {
        let joined = words.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(&self.word_separator);
        let mut out = String::with_capacity(self.template.len() + label.len() + joined.len());
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Label => out.push_str(label),
                Segment::Words => out.push_str(&joined),
            }
        }
        out
    }

    /// Builds a parser that recovers `(label, words)` from rendered prompts.
    pub fn parser(&self) -> PromptParser {
        let mut pattern = String::from("(?s)^");
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => pattern.push_str(&regex::escape(s)),
                Segment::Label => pattern.push_str("(?P<label>.*?)"),
                Segment::Words => pattern.push_str("(?P<words>.*?)"),
            }
        }
        pattern.push('$');
        PromptParser {
            regex: Regex::new(&pattern).expect("escaped template compiles"),
            separator: self.word_separator.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PromptParser {
    regex: Regex,
    separator: String,
}

impl PromptParser {
    pub fn parse(&self, prompt: &str) -> Option<(String, Vec<String>)> {
        let caps = self.regex.captures(prompt)?;
        let label = caps.name("label")?.as_str().to_string();
        let words = caps.name("words")?.as_str();
        let words = if words.is_empty() {
            Vec::new()
        } else if self.separator.is_empty() {
            vec![words.to_string()]
        } else {
            words.split(self.separator.as_str()).map(str::to_string).collect()
        };
        Some((label, words))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtgExample {
    pub prompt: String,
    pub completion: String,
    pub source_index: usize,
    pub sampled_words: Vec<String>,
}

/// Distinct word-kind token surfaces (case-sensitive) in first-seen order.
pub fn distinct_words(text: &str) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for token in tokenize(text) {
        if token.kind == TokenKind::Word && !words.contains(&token.surface) {
            words.push(token.surface);
        }
    }
    words
}

/// One example per instance, in dataset order. For each instance,
/// `k ~ Uniform{1..=min(max_words, distinct words)}` words are drawn without
/// replacement from a stream derived from `(seed, index)`.
pub fn build_ctg_corpus(dataset: &Dataset, template: &PromptTemplate, max_words: usize, seed: u64) -> Result<Vec<CtgExample>, CtgError> {
    if max_words == 0 {
        return Err(CtgError::InvalidMaxWords);
    }
    dataset
        .instances()
        .iter()
        .enumerate()
        .map(|(index, inst)| {
            let words = distinct_words(&inst.text);
            if words.is_empty() {
                return Err(CtgError::InstanceHasNoWords(index));
            }
            let mut rng = stream_rng(seed, "ctg", index as u64);
            let upper = max_words.min(words.len());
            let k = rng.random_range(1..=upper);
            let sampled: Vec<String> = rand::seq::index::sample(&mut rng, words.len(), k)
                .into_iter()
                .map(|i| words[i].clone())
                .collect();
            Ok(CtgExample {
                prompt: template.render(&inst.label, &sampled),
                completion: inst.text.clone(),
                source_index: index,
                sampled_words: sampled,
            })
        })
        .collect()
}

pub fn write_ctg_corpus(corpus: &[CtgExample], path: &Path) -> Result<(), CtgError> {
    Ok(write_jsonl(path, corpus)?)
}

pub fn read_ctg_corpus(path: &Path) -> Result<Vec<CtgExample>, CtgError> {
    Ok(read_jsonl(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledInstance, Split, TaskSchema};

    fn dataset(texts: &[&str]) -> Dataset {
        let schema = TaskSchema::new("sentiment", ["negative", "neutral", "positive"]).unwrap();
        let instances = texts.iter().map(|t| LabeledInstance::new(*t, "positive")).collect();
        Dataset::new(schema, "en", Split::Train, instances).unwrap()
    }

    #[test]
    fn default_template_renders_documented_string() {
        let t = PromptTemplate::default();
        assert_eq!(
            t.render("positive", &["good", "day"]),
            "Generate a positive text using the following words: good, day.\nText:"
        );
    }

    #[test]
    fn template_validation() {
        assert!(PromptTemplate::new("{label} only", ", ").is_err());
        assert!(PromptTemplate::new("{label} {words} {words}", ", ").is_err());
        let swapped = PromptTemplate::new("Words: {words} / label: {label}", " ").unwrap();
        assert_eq!(swapped.render("neg", &["a", "b"]), "Words: a b / label: neg");
    }

    #[test]
    fn parser_inverts_render() {
        for t in [PromptTemplate::default(), PromptTemplate::new("[{words}]({label})", "|").unwrap()] {
            let rendered = t.render("neutral", &["one", "two words", "three"]);
            let (label, words) = t.parser().parse(&rendered).unwrap();
            assert_eq!(label, "neutral");
            assert_eq!(words, ["one", "two words", "three"]);
        }
        assert!(PromptTemplate::default().parser().parse("unrelated").is_none());
    }

    #[test]
    fn single_word_instance_forces_sample() {
        let corpus = build_ctg_corpus(&dataset(&["Great!"]), &PromptTemplate::default(), 10, 3).unwrap();
        assert_eq!(corpus[0].sampled_words, ["Great"]);
        assert_eq!(corpus[0].completion, "Great!");
        assert_eq!(corpus[0].source_index, 0);
    }

    #[test]
    fn empty_dataset_and_wordless_instance() {
        assert!(build_ctg_corpus(&dataset(&[]), &PromptTemplate::default(), 10, 0).unwrap().is_empty());
        let err = build_ctg_corpus(&dataset(&["fine", "2024 !!"]), &PromptTemplate::default(), 10, 0).unwrap_err();
        assert!(matches!(err, CtgError::InstanceHasNoWords(1)));
        assert!(matches!(
            build_ctg_corpus(&dataset(&["x"]), &PromptTemplate::default(), 0, 0),
            Err(CtgError::InvalidMaxWords)
        ));
    }

    #[test]
    fn sampled_words_are_distinct_and_bounded() {
        let text = "the cat saw the dog and the dog saw the cat again and again";
        let ds = dataset(&[text; 50]);
        let corpus = build_ctg_corpus(&ds, &PromptTemplate::default(), 3, 9).unwrap();
        let mut sizes = std::collections::BTreeSet::new();
        for ex in &corpus {
            let unique: std::collections::HashSet<_> = ex.sampled_words.iter().collect();
            assert_eq!(unique.len(), ex.sampled_words.len());
            assert!((1..=3).contains(&ex.sampled_words.len()));
            sizes.insert(ex.sampled_words.len());
        }
        assert_eq!(sizes.len(), 3, "k should vary over 1..=3");
    }
}
