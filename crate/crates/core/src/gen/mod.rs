//! Prompt sampling, batched generation, and the word-usage checkpoint metric.

mod backend;
mod mock;

use std::collections::{BTreeMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, Completion, CompletionBackend, HttpCompletionBackend};
pub(crate) use backend::{http_agent, post_json};
pub use mock::{label_marker, MockBackend, MockConfig};

use crate::ctg::PromptTemplate;
use crate::data::{GeneratedInstance, TaskSchema};
use crate::exec::{run_with_probe, RetryPolicy};
use crate::lexicon::{canonical, BilingualLexicon, LexiconError};
use crate::tokenize::tokenize;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    NotEnoughWords(#[from] LexiconError),
    #[error("completion backend unreachable: {0}")]
    BackendUnreachable(BackendError),
    #[error("word usage rate needs at least one instance")]
    EmptyInput,
}

/// Decoding and prompting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    #[serde(default = "GenParams::default_top_p")]
    pub top_p: f64,
    #[serde(default = "GenParams::default_temperature")]
    pub temperature: f64,
    #[serde(default = "GenParams::default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "GenParams::default_n_words")]
    pub n_words: usize,
}

impl GenParams {
    fn default_top_p() -> f64 {
        0.1
    }
    fn default_temperature() -> f64 {
        1.0
    }
    fn default_max_tokens() -> u32 {
        256
    }
    fn default_n_words() -> usize {
        10
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GenError::InvalidParams(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(GenError::InvalidParams(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(GenError::InvalidParams("max_tokens must be positive".into()));
        }
        if self.n_words == 0 {
            return Err(GenError::InvalidParams("n_words must be positive".into()));
        }
        Ok(())
    }
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            top_p: Self::default_top_p(),
            temperature: Self::default_temperature(),
            max_tokens: Self::default_max_tokens(),
            n_words: Self::default_n_words(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub label: String,
    pub words: Vec<String>,
    pub rendered: String,
}

/// Samples `count` prompts: a uniform class label and `n_words` distinct
/// lexicon source words each, drawn in that order from one stream.
pub fn sample_prompt_specs<R: Rng + ?Sized>(
    lexicon: &BilingualLexicon,
    schema: &TaskSchema,
    template: &PromptTemplate,
    params: &GenParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PromptSpec>, GenError> {
    sample_prompt_specs_weighted(lexicon, schema, template, params, count, None, rng)
}

/// As [`sample_prompt_specs`], with optional per-label sampling weights in
/// schema label order.
pub fn sample_prompt_specs_weighted<R: Rng + ?Sized>(
    lexicon: &BilingualLexicon,
    schema: &TaskSchema,
    template: &PromptTemplate,
    params: &GenParams,
    count: usize,
    label_weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<Vec<PromptSpec>, GenError> {
    params.validate()?;
    if lexicon.len() < params.n_words {
        return Err(LexiconError::NotEnoughWords {
            requested: params.n_words,
            available: lexicon.len(),
        }
        .into());
    }
    let labels = schema.labels();
    let weighted = match label_weights {
        None => None,
        Some(w) if w.len() == labels.len() => Some(
            WeightedIndex::new(w).map_err(|e| GenError::InvalidParams(format!("label weights: {e}")))?,
        ),
        Some(w) => {
            return Err(GenError::InvalidParams(format!(
                "expected {} label weights, got {}",
                labels.len(),
                w.len()
            )))
        }
    };
    let keys: Vec<&str> = lexicon.source_words().collect();
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let label_idx = match &weighted {
            Some(dist) => dist.sample(rng),
            None => rng.random_range(0..labels.len()),
        };
        let label = labels[label_idx].clone();
        let words: Vec<String> = rand::seq::index::sample(rng, keys.len(), params.n_words)
            .into_iter()
            .map(|i| keys[i].to_string())
            .collect();
        let rendered = template.render(&label, &words);
        specs.push(PromptSpec { label, words, rendered });
    }
    Ok(specs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            max_in_flight: 8,
            retry: RetryPolicy::default(),
        }
    }
}

/// Outcome for one prompt, index-aligned with the specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GenerationSlot {
    Generated(GeneratedInstance),
    /// Backend answered with empty or whitespace-only text.
    Empty { request_id: u64 },
    /// Retries exhausted for this request.
    Failed { request_id: u64, error: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub requested: usize,
    pub generated: usize,
    pub empty: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationBatch {
    pub slots: Vec<GenerationSlot>,
    pub stats: GenerationStats,
}

impl GenerationBatch {
    pub fn instances(&self) -> impl Iterator<Item = &GeneratedInstance> {
        self.slots.iter().filter_map(|s| match s {
            GenerationSlot::Generated(g) => Some(g),
            _ => None,
        })
    }

    pub fn into_instances(self) -> Vec<GeneratedInstance> {
        self.slots
            .into_iter()
            .filter_map(|s| match s {
                GenerationSlot::Generated(g) => Some(g),
                _ => None,
            })
            .collect()
    }
}

/// Sends every spec to `backend` with request id = spec index. Per-item
/// failures and empty completions become tombstone slots; only a probe window
/// that fails completely aborts the batch.
pub fn generate_batch<B: CompletionBackend + ?Sized>(
    backend: &B,
    specs: &[PromptSpec],
    params: &GenParams,
    options: &BatchOptions,
) -> Result<GenerationBatch, GenError> {
    params.validate()?;
    let results = run_with_probe(specs.len(), options.max_in_flight, |i| {
        options.retry.run(|| backend.complete(&specs[i].rendered, params, i as u64))
    })
    .map_err(GenError::BackendUnreachable)?;

    let mut stats = GenerationStats {
        requested: specs.len(),
        ..Default::default()
    };
    let slots = results
        .into_iter()
        .zip(specs)
        .enumerate()
        .map(|(i, (result, spec))| {
            let request_id = i as u64;
            match result {
                Err(e) => {
                    stats.failed += 1;
                    GenerationSlot::Failed {
                        request_id,
                        error: e.to_string(),
                    }
                }
                Ok(c) if c.text.trim().is_empty() => {
                    stats.empty += 1;
                    GenerationSlot::Empty { request_id }
                }
                Ok(c) => {
                    stats.generated += 1;
                    let mut meta: BTreeMap<String, String> = c.meta;
                    meta.insert("request_id".into(), request_id.to_string());
                    GenerationSlot::Generated(GeneratedInstance {
                        text: c.text,
                        prompted_label: spec.label.clone(),
                        provided_words: spec.words.clone(),
                        backend_meta: meta,
                        relabel: None,
                    })
                }
            }
        })
        .collect();
    Ok(GenerationBatch { slots, stats })
}

/// Fraction of one instance's provided words that occur as word tokens in
/// its text, compared in canonical lexicon form.
pub fn instance_word_usage(instance: &GeneratedInstance) -> f64 {
    if instance.provided_words.is_empty() {
        return 0.0;
    }
    let present: HashSet<String> = tokenize(&instance.text)
        .into_iter()
        .filter(|t| t.kind.is_lexical())
        .map(|t| canonical(&t.surface))
        .collect();
    let used = instance
        .provided_words
        .iter()
        .filter(|w| present.contains(&canonical(w)))
        .count();
    used as f64 / instance.provided_words.len() as f64
}

/// Mean per-instance word usage; the checkpoint with the highest rate uses
/// the lexicon words best.
pub fn word_usage_rate(instances: &[GeneratedInstance]) -> Result<f64, GenError> {
    if instances.is_empty() {
        return Err(GenError::EmptyInput);
    }
    let total: f64 = instances.iter().map(instance_word_usage).sum();
    Ok(total / instances.len() as f64)
}
