use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::backend::{BackendError, Completion, CompletionBackend};
use super::GenParams;
use crate::ctg::{PromptParser, PromptTemplate};
use crate::rng::stream_rng;

const MIN_TOKENS: usize = 12;
const MAX_TOKENS: usize = 30;

/// Word that a mock generation carries to signal its class. The marker
/// labeler in [`crate::filter`] reads it back.
pub fn label_marker(label: &str) -> String {
    let mut out = String::from("zz");
    for c in label.chars() {
        if c.is_alphanumeric() {
            out.push(c);
        } else {
            out.push_str(&format!("u{:x}", c as u32));
        }
    }
    out.push_str("zz");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    /// Probability that each provided word is used.
    #[serde(default = "one")]
    pub usage_fraction: f64,
    /// Probability that the embedded marker names the prompted label rather
    /// than another class.
    #[serde(default = "one")]
    pub label_fidelity: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub filler_vocab: Vec<String>,
}

fn one() -> f64 {
    1.0
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            usage_fraction: 1.0,
            label_fidelity: 1.0,
            seed: 0,
            filler_vocab: Vec::new(),
        }
    }
}

/// Deterministic stand-in for a CTG-trained model.
///
/// The prompt is parsed back into `(label, words)` with the template. Each
/// provided word is kept with probability `usage_fraction`, one label marker
/// is added, and filler draws pad the text to 12 to 30 tokens. Marker words in
/// `filler_vocab` are ignored so each text carries exactly one marker.
/// Output depends only on `(seed, request_id, prompt)`.
#[derive(Debug, Clone)]
pub struct MockBackend {
    config: MockConfig,
    labels: Vec<String>,
    parser: PromptParser,
    filler: Vec<String>,
}

impl MockBackend {
    pub fn new(config: MockConfig, template: &PromptTemplate, labels: &[String]) -> Self {
        let markers: Vec<String> = labels.iter().map(|l| label_marker(l)).collect();
        let filler = config.filler_vocab.iter().filter(|w| !markers.contains(w)).cloned().collect();
        Self {
            config,
            labels: labels.to_vec(),
            parser: template.parser(),
            filler,
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    fn marker_label<'a>(&'a self, prompted: &'a str, rng: &mut impl Rng) -> &'a str {
        let faithful = rng.random::<f64>() < self.config.label_fidelity;
        let others: Vec<&String> = self.labels.iter().filter(|l| *l != prompted).collect();
        if faithful || others.is_empty() {
            prompted
        } else {
            others[rng.random_range(0..others.len())]
        }
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, prompt: &str, _params: &GenParams, request_id: u64) -> Result<Completion, BackendError> {
        let (label, words) = self
            .parser
            .parse(prompt)
            .ok_or_else(|| BackendError::Protocol("prompt does not match the template".into()))?;
        let mut rng = stream_rng(self.config.seed, "mock-complete", request_id);

        let mut tokens: Vec<String> = words
            .into_iter()
            .filter(|_| rng.random::<f64>() < self.config.usage_fraction)
            .collect();
        let marker = label_marker(self.marker_label(&label, &mut rng));
        let target_len = rng.random_range(MIN_TOKENS..=MAX_TOKENS);
        if !self.filler.is_empty() {
            while tokens.len() + 1 < target_len {
                let i = rng.random_range(0..self.filler.len());
                tokens.push(self.filler[i].clone());
            }
        }
        tokens.shuffle(&mut rng);
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, marker);

        let mut text = tokens.join(" ");
        text.push('.');
        Ok(Completion {
            text,
            meta: BTreeMap::from([
                ("model".to_string(), "mock".to_string()),
                ("finish_reason".to_string(), "stop".to_string()),
            ]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;

    fn labels() -> Vec<String> {
        vec!["negative".into(), "neutral".into(), "positive".into()]
    }

    fn backend(usage: f64, fidelity: f64) -> MockBackend {
        let config = MockConfig {
            usage_fraction: usage,
            label_fidelity: fidelity,
            seed: 11,
            filler_vocab: vec!["the".into(), "a".into(), "of".into()],
        };
        MockBackend::new(config, &PromptTemplate::default(), &labels())
    }

    #[test]
    fn markers_are_single_word_tokens() {
        for label in ["positive", "science/technology", "Label With Space"] {
            let marker = label_marker(label);
            let toks = tokenize(&marker);
            assert_eq!(toks.len(), 1, "{marker}");
        }
        assert_ne!(label_marker("a/b"), label_marker("a b"));
    }

    #[test]
    fn marker_words_in_filler_are_dropped() {
        let config = MockConfig {
            filler_vocab: vec![label_marker("negative"), "plain".into()],
            ..MockConfig::default()
        };
        let b = MockBackend::new(config, &PromptTemplate::default(), &labels());
        let prompt = PromptTemplate::default().render("positive", &["alpha"]);
        for id in 0..20 {
            let text = b.complete(&prompt, &GenParams::default(), id).unwrap().text;
            assert!(!text.contains(&label_marker("negative")), "{text}");
        }
    }

    #[test]
    fn full_usage_includes_all_words_with_bounded_length() {
        let b = backend(1.0, 1.0);
        let prompt = PromptTemplate::default().render("positive", &["alpha", "beta", "gamma"]);
        for id in 0..50 {
            let c = b.complete(&prompt, &GenParams::default(), id).unwrap();
            let toks: Vec<String> = tokenize(&c.text).into_iter().map(|t| t.surface).collect();
            for w in ["alpha", "beta", "gamma", "zzpositivezz"] {
                assert!(toks.iter().any(|t| t == w), "{w} missing from {}", c.text);
            }
            let words = toks.len() - 1; // trailing period
            assert!((MIN_TOKENS..=MAX_TOKENS).contains(&words), "{words}");
        }
    }

    #[test]
    fn deterministic_per_request_id() {
        let b = backend(0.5, 0.5);
        let prompt = PromptTemplate::default().render("neutral", &["alpha", "beta"]);
        let a = b.complete(&prompt, &GenParams::default(), 7).unwrap();
        assert_eq!(a, b.complete(&prompt, &GenParams::default(), 7).unwrap());
        let differs = (0..20).any(|id| b.complete(&prompt, &GenParams::default(), id).unwrap() != a);
        assert!(differs);
    }

    #[test]
    fn unparseable_prompt_is_protocol_error() {
        let err = backend(1.0, 1.0).complete("hello", &GenParams::default(), 0).unwrap_err();
        assert!(matches!(err, BackendError::Protocol(_)));
    }

    #[test]
    fn zero_fidelity_never_marks_prompted_label() {
        let b = backend(1.0, 0.0);
        let prompt = PromptTemplate::default().render("neutral", &["w"]);
        for id in 0..100 {
            let text = b.complete(&prompt, &GenParams::default(), id).unwrap().text;
            assert!(!text.contains("zzneutralzz"));
        }
    }
}
