//! Word-to-word substitution with a bilingual lexicon.
//!
//! Word and number tokens are looked up in canonical form. When a word has
//! several translations one is drawn uniformly at random, independently for
//! each occurrence; out-of-vocabulary words are kept as they are. Punctuation
//! passes through. Every instance draws from its own stream keyed by
//! `(seed, instance index)`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{read_jsonl, write_jsonl, DataError, Dataset, LabeledInstance};
use crate::exec::run_bounded;
use crate::lexicon::{canonical, BilingualLexicon};
use crate::rng::{stream_rng, SeededRng};
use crate::tokenize::{tokenize, Token, TokenKind};

const LONGEST_MATCH_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationMode {
    /// One token at a time; token count and kinds are preserved.
    #[default]
    SingleToken,
    /// Greedy left-to-right match of up to three space-separated word tokens
    /// against multi-word lexicon entries; a matched phrase becomes one token.
    LongestMatch,
}

impl std::str::FromStr for TranslationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single_token" => Ok(TranslationMode::SingleToken),
            "longest_match" => Ok(TranslationMode::LongestMatch),
            other => Err(format!("unknown translation mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateOptions {
    #[serde(default)]
    pub mode: TranslationMode,
    /// Match title/upper case of the source token when the translation is
    /// all lowercase.
    #[serde(default = "default_true")]
    pub restore_case: bool,
}

fn default_true() -> bool {
    true
}

impl Default for TranslateOptions {
    fn default() -> Self {
        Self {
            mode: TranslationMode::SingleToken,
            restore_case: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenStatus {
    Translated,
    KeptOov,
    NonWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatedToken {
    pub surface_in: String,
    pub surface_out: String,
    pub status: TokenStatus,
    pub kind: TokenKind,
    #[serde(default)]
    pub space_before: String,
    /// The lexicon translation chosen, before case restoration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatedInstance {
    pub tokens: Vec<TranslatedToken>,
    pub label: String,
    pub text_out: String,
}

impl TranslatedInstance {
    pub fn output_tokens(&self) -> Vec<Token> {
        self.tokens
            .iter()
            .map(|t| Token {
                surface: t.surface_out.clone(),
                kind: t.kind,
                space_before: t.space_before.clone(),
            })
            .collect()
    }
}

pub fn translate_instance(instance: &LabeledInstance, lexicon: &BilingualLexicon, rng: &mut SeededRng, options: TranslateOptions) -> TranslatedInstance {
    let tokens = tokenize(&instance.text);
    let window = match options.mode {
        TranslationMode::SingleToken => 1,
        TranslationMode::LongestMatch => LONGEST_MATCH_WINDOW.min(lexicon.max_source_tokens()).max(1),
    };
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let token = &tokens[i];
        if !token.kind.is_lexical() {
            out.push(TranslatedToken {
                surface_in: token.surface.clone(),
                surface_out: token.surface.clone(),
                status: TokenStatus::NonWord,
                kind: token.kind,
                space_before: token.space_before.clone(),
                target: None,
            });
            i += 1;
            continue;
        }
        let (span, translations) = longest_entry(&tokens[i..], lexicon, window);
        let surface_in = phrase_surface(&tokens[i..i + span]);
        let translated = match translations {
            Some(choices) => {
                let target = choices[rng.random_range(0..choices.len())].clone();
                let surface_out = if options.restore_case {
                    restore_case(&surface_in, &target)
                } else {
                    target.clone()
                };
                TranslatedToken {
                    surface_in,
                    surface_out,
                    status: TokenStatus::Translated,
                    kind: token.kind,
                    space_before: token.space_before.clone(),
                    target: Some(target),
                }
            }
            None => TranslatedToken {
                surface_out: surface_in.clone(),
                surface_in,
                status: TokenStatus::KeptOov,
                kind: token.kind,
                space_before: token.space_before.clone(),
                target: None,
            },
        };
        out.push(translated);
        i += span;
    }
    let text_out = out.iter().fold(String::new(), |mut s, t| {
        s.push_str(&t.space_before);
        s.push_str(&t.surface_out);
        s
    });
    TranslatedInstance {
        tokens: out,
        label: instance.label.clone(),
        text_out,
    }
}

/// Longest run of up to `window` lexical tokens, joined by whitespace, that
/// is a lexicon key. Falls back to a span of one with no match.
fn longest_entry<'a>(tokens: &[Token], lexicon: &'a BilingualLexicon, window: usize) -> (usize, Option<&'a [String]>) {
    let mut run = 1;
    while run < window && run < tokens.len() && tokens[run].kind.is_lexical() && tokens[run].preceding_space() {
        run += 1;
    }
    for span in (1..=run).rev() {
        let key = tokens[..span].iter().map(|t| canonical(&t.surface)).collect::<Vec<_>>().join(" ");
        if let Some(found) = lexicon.lookup_canonical(&key) {
            return (span, Some(found));
        }
    }
    (1, None)
}

fn phrase_surface(tokens: &[Token]) -> String {
    let mut s = tokens[0].surface.clone();
    for t in &tokens[1..] {
        s.push_str(&t.space_before);
        s.push_str(&t.surface);
    }
    s
}

fn restore_case(source: &str, target: &str) -> String {
    if target.chars().any(char::is_uppercase) || !target.chars().any(char::is_lowercase) {
        return target.to_string();
    }
    let letters: Vec<char> = source.chars().filter(|c| c.is_alphabetic()).collect();
    let all_upper = letters.len() > 1 && letters.iter().all(|c| c.is_uppercase());
    if all_upper {
        return target.to_uppercase();
    }
    let title = source.chars().next().is_some_and(char::is_uppercase);
    if title {
        let mut chars = target.chars();
        let first = chars.next().unwrap();
        return first.to_uppercase().chain(chars).collect();
    }
    target.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOutput {
    pub out: Dataset,
    pub trace: Vec<TranslatedInstance>,
}

pub fn translate_dataset(dataset: &Dataset, lexicon: &BilingualLexicon, seed: u64, options: TranslateOptions) -> TranslationOutput {
    let instances = dataset.instances();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let trace = run_bounded(0..instances.len(), workers, |i| {
        let mut rng = stream_rng(seed, "translate", i as u64);
        translate_instance(&instances[i], lexicon, &mut rng, options)
    });
    let rows = trace
        .iter()
        .map(|t| LabeledInstance::new(t.text_out.clone(), t.label.clone()))
        .collect();
    let out = Dataset::new(dataset.schema().clone(), lexicon.target_lang(), dataset.split(), rows)
        .expect("labels are carried through unchanged");
    TranslationOutput { out, trace }
}

pub fn write_trace(path: &Path, trace: &[TranslatedInstance]) -> Result<(), DataError> {
    write_jsonl(path, trace)
}

pub fn read_trace(path: &Path) -> Result<Vec<TranslatedInstance>, DataError> {
    read_jsonl(path)
}
