//! Synthetic cipher-language worlds and the conditioning/filtering ablation.
//!
//! A world has a vocabulary of made-up lowercase words, a task vocabulary
//! (the subset that existing task data actually uses, with Zipfian
//! frequencies), a labeled corpus over the task vocabulary, and a lexicon
//! translating a fraction of the vocabulary with the cipher
//! `reverse(word) + "x"`. Source words never contain `x`, so target and
//! source vocabularies are disjoint and every translated token can be
//! decoded back.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctg::PromptTemplate;
use crate::data::{DataError, Dataset, GeneratedInstance, LabeledInstance, Split, TaskSchema};
use crate::exec::RetryPolicy;
use crate::filter::{consistency_filter, to_dataset, FilterError, FilterOptions, MarkerLabeler};
use crate::gen::{generate_batch, label_marker, instance_word_usage, sample_prompt_specs, BatchOptions, GenError, GenParams, MockBackend, MockConfig};
use crate::lexicon::BilingualLexicon;
use crate::metrics::{lexicon_utilization, translation_coverage, MetricsError};
use crate::rng::domain_rng;
use crate::tokenize::{tokenize, TokenKind};
use crate::translate::{translate_dataset, TranslateOptions};

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvw";
const VOWELS: &[u8] = b"aeiou";
const CIPHER_SUFFIX: char = 'x';

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic world configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub fn cipher(word: &str) -> String {
    let mut out: String = word.chars().rev().collect();
    out.push(CIPHER_SUFFIX);
    out
}

pub fn decipher(target: &str) -> Option<String> {
    target.strip_suffix(CIPHER_SUFFIX).map(|s| s.chars().rev().collect())
}

/// A lexicon whose translations are the cipher of each source word.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherLexicon {
    pub vocab: Vec<String>,
    pub lexicon: BilingualLexicon,
}

impl CipherLexicon {
    pub fn new(vocab: Vec<String>, source_lang: &str, target_lang: &str) -> Self {
        let lexicon = BilingualLexicon::from_pairs(source_lang, target_lang, vocab.iter().map(|w| (w.clone(), cipher(w))))
            .expect("generated vocabulary has no empty or tab-bearing words");
        Self { vocab, lexicon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub vocab_size: usize,
    pub corpus_size: usize,
    /// Fraction of the vocabulary (and of the task vocabulary) the lexicon covers.
    #[serde(default = "WorldConfig::default_coverage")]
    pub coverage_fraction: f64,
    /// Fraction of the vocabulary that appears in task data.
    #[serde(default = "WorldConfig::default_task_vocab")]
    pub task_vocab_fraction: f64,
    /// 0 gives a uniform corpus.
    #[serde(default = "WorldConfig::default_zipf")]
    pub zipf_exponent: f64,
    #[serde(default = "WorldConfig::default_min_len")]
    pub min_sentence_len: usize,
    #[serde(default = "WorldConfig::default_max_len")]
    pub max_sentence_len: usize,
    /// Put the label marker word into every corpus sentence.
    #[serde(default = "WorldConfig::default_markers")]
    pub label_markers: bool,
}

impl WorldConfig {
    fn default_coverage() -> f64 {
        0.66
    }
    fn default_task_vocab() -> f64 {
        0.6
    }
    fn default_zipf() -> f64 {
        1.0
    }
    fn default_min_len() -> usize {
        8
    }
    fn default_max_len() -> usize {
        20
    }
    fn default_markers() -> bool {
        true
    }

    pub fn new(vocab_size: usize, corpus_size: usize) -> Self {
        Self {
            vocab_size,
            corpus_size,
            coverage_fraction: Self::default_coverage(),
            task_vocab_fraction: Self::default_task_vocab(),
            zipf_exponent: Self::default_zipf(),
            min_sentence_len: Self::default_min_len(),
            max_sentence_len: Self::default_max_len(),
            label_markers: Self::default_markers(),
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.vocab_size < 20 {
            return bad("vocab_size must be at least 20");
        }
        if self.corpus_size < 1 {
            return bad("corpus_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.coverage_fraction) {
            return bad("coverage_fraction must be in [0, 1]");
        }
        if !(self.task_vocab_fraction > 0.0 && self.task_vocab_fraction <= 1.0) {
            return bad("task_vocab_fraction must be in (0, 1]");
        }
        if !(self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be >= 0");
        }
        if self.min_sentence_len == 0 || self.min_sentence_len > self.max_sentence_len {
            return bad("sentence lengths must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub seed: u64,
    pub vocab: Vec<String>,
    /// Task vocabulary in frequency-rank order.
    pub task_vocab: Vec<String>,
    pub cipher: CipherLexicon,
    pub dataset: Dataset,
}

impl SyntheticWorld {
    pub fn lexicon(&self) -> &BilingualLexicon {
        &self.cipher.lexicon
    }

    pub fn schema(&self) -> &TaskSchema {
        self.dataset.schema()
    }

    /// Word tokens of the corpus, markers excluded, with repeats. Drawing
    /// uniformly from it follows the task-data word distribution.
    pub fn corpus_word_stream(&self) -> Vec<String> {
        let markers: BTreeSet<String> = self.schema().labels().iter().map(|l| label_marker(l)).collect();
        self.dataset
            .instances()
            .iter()
            .flat_map(|i| tokenize(&i.text))
            .filter(|t| t.kind == TokenKind::Word && !markers.contains(&t.surface))
            .map(|t| t.surface)
            .collect()
    }
}

fn make_vocab(size: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut vocab = Vec::with_capacity(size);
    while vocab.len() < size {
        let syllables = rng.random_range(2..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        }
        if seen.insert(w.clone()) {
            vocab.push(w);
        }
    }
    vocab
}

pub fn build_synthetic_world(config: &WorldConfig, schema: &TaskSchema, seed: u64) -> Result<SyntheticWorld, SynthError> {
    config.validate()?;
    let mut rng = domain_rng(seed, "synth-world");
    let vocab = make_vocab(config.vocab_size, &mut rng);

    let task_len = ((config.vocab_size as f64 * config.task_vocab_fraction).round() as usize).clamp(1, config.vocab_size);
    let task_vocab: Vec<String> = vocab[..task_len].to_vec();
    let rest: Vec<String> = vocab[task_len..].to_vec();

    // Coverage is stratified over task and non-task words and independent of
    // frequency rank.
    let mut covered = Vec::new();
    for part in [&task_vocab, &rest] {
        let mut shuffled = part.clone();
        shuffled.shuffle(&mut rng);
        let k = (part.len() as f64 * config.coverage_fraction).round() as usize;
        covered.extend(shuffled.into_iter().take(k));
    }
    let cipher = CipherLexicon::new(covered, "en", "cipher");

    let weights: Vec<f64> = (1..=task_vocab.len()).map(|r| (r as f64).powf(-config.zipf_exponent)).collect();
    let zipf = WeightedIndex::new(&weights).expect("positive weights");
    let labels = schema.labels();
    let mut instances = Vec::with_capacity(config.corpus_size);
    for _ in 0..config.corpus_size {
        let label = &labels[rng.random_range(0..labels.len())];
        let len = rng.random_range(config.min_sentence_len..=config.max_sentence_len);
        let mut words: Vec<&str> = (0..len).map(|_| task_vocab[zipf.sample(&mut rng)].as_str()).collect();
        let marker = label_marker(label);
        if config.label_markers {
            let at = rng.random_range(0..=words.len());
            words.insert(at, &marker);
        }
        let mut text = words.join(" ");
        text.push('.');
        instances.push(LabeledInstance::new(text, label.clone()));
    }
    let dataset = Dataset::new(schema.clone(), "en", Split::Train, instances)?;
    Ok(SyntheticWorld {
        config: config.clone(),
        seed,
        vocab,
        task_vocab,
        cipher,
        dataset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub sizes: Vec<usize>,
    /// Prompt words come from the lexicon and the mock uses them; otherwise
    /// the mock ignores the prompt words and writes from the task-data
    /// distribution alone.
    pub conditioned: bool,
    pub filtered: bool,
    pub seed: u64,
    pub usage_fraction: f64,
    pub label_fidelity: f64,
    pub n_words: usize,
    pub max_in_flight: usize,
    pub translate: TranslateOptions,
}

impl AblationConfig {
    pub fn new(sizes: Vec<usize>, conditioned: bool, filtered: bool, seed: u64) -> Self {
        Self {
            sizes,
            conditioned,
            filtered,
            seed,
            usage_fraction: 0.9,
            label_fidelity: 0.3,
            n_words: 10,
            max_in_flight: 8,
            translate: TranslateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub size: usize,
    pub generated: usize,
    pub kept: usize,
    pub retention_rate: f64,
    pub word_usage_rate: f64,
    pub utilization_rate: f64,
    pub mean_coverage: f64,
    pub untranslated_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub conditioned: bool,
    pub filtered: bool,
    pub rows: Vec<AblationRow>,
}

/// Generates `max(sizes)` instances once and reports every size on the
/// nested prefix of that stream, so larger sizes always see a superset.
pub fn run_ablation(world: &SyntheticWorld, config: &AblationConfig) -> Result<AblationRun, SynthError> {
    let mut sizes = config.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let Some(&max_size) = sizes.last() else {
        return Err(SynthError::InvalidConfig("sizes must be non-empty".into()));
    };
    if sizes[0] == 0 {
        return Err(SynthError::InvalidConfig("sizes must be positive".into()));
    }

    let template = PromptTemplate::default();
    let params = GenParams {
        n_words: config.n_words,
        ..Default::default()
    };
    let schema = world.schema();
    let specs = sample_prompt_specs(world.lexicon(), schema, &template, &params, max_size, &mut domain_rng(config.seed, "ablation-specs"))?;
    let mock = MockBackend::new(
        MockConfig {
            usage_fraction: if config.conditioned { config.usage_fraction } else { 0.0 },
            label_fidelity: config.label_fidelity,
            seed: config.seed,
            filler_vocab: world.corpus_word_stream(),
        },
        &template,
        schema.labels(),
    );
    let batch_opts = BatchOptions {
        max_in_flight: config.max_in_flight,
        retry: RetryPolicy::immediate(1),
    };
    let generated = generate_batch(&mock, &specs, &params, &batch_opts)?.into_instances();

    let retained: Vec<GeneratedInstance> = if config.filtered {
        let opts = FilterOptions {
            max_in_flight: config.max_in_flight,
            retry: RetryPolicy::immediate(1),
        };
        consistency_filter(generated.clone(), &MarkerLabeler, schema, &opts)?.kept
    } else {
        generated.clone()
    };
    let dataset = to_dataset(&retained, schema, world.lexicon().target_lang(), Split::Generated)?;
    let trace = translate_dataset(&dataset, world.lexicon(), config.seed, config.translate).trace;

    let usage: Vec<f64> = generated.iter().map(instance_word_usage).collect();
    let below = |g: &GeneratedInstance, size: usize| g.request_id().is_some_and(|id| (id as usize) < size);
    let mut rows = Vec::with_capacity(sizes.len());
    for size in sizes {
        let gen_count = generated.iter().filter(|g| below(g, size)).count();
        let kept_count = retained.iter().filter(|g| below(g, size)).count();
        let prefix = &trace[..kept_count];
        let (mean_coverage, untranslated_rate) = match translation_coverage(prefix) {
            Ok(c) => (c.mean, c.untranslated_rate),
            Err(MetricsError::EmptyTrace) => (0.0, 0.0),
            Err(e) => return Err(e.into()),
        };
        rows.push(AblationRow {
            size,
            generated: gen_count,
            kept: kept_count,
            retention_rate: if gen_count == 0 { 0.0 } else { kept_count as f64 / gen_count as f64 },
            word_usage_rate: if gen_count == 0 { 0.0 } else { usage[..gen_count].iter().sum::<f64>() / gen_count as f64 },
            utilization_rate: lexicon_utilization(prefix, world.lexicon()).utilization_rate,
            mean_coverage,
            untranslated_rate,
        });
    }
    Ok(AblationRun {
        conditioned: config.conditioned,
        filtered: config.filtered,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub world: WorldConfig,
    pub seed: u64,
    pub lexicon_entries: usize,
    pub usage_fraction: f64,
    pub label_fidelity: f64,
    pub n_words: usize,
    pub runs: Vec<AblationRun>,
}

/// Runs all four combinations of conditioning and filtering.
pub fn run_ablation_grid(world: &SyntheticWorld, base: &AblationConfig) -> Result<AblationReport, SynthError> {
    let mut runs = Vec::with_capacity(4);
    for conditioned in [true, false] {
        for filtered in [true, false] {
            let config = AblationConfig {
                conditioned,
                filtered,
                ..base.clone()
            };
            runs.push(run_ablation(world, &config)?);
        }
    }
    Ok(AblationReport {
        world: world.config.clone(),
        seed: base.seed,
        lexicon_entries: world.lexicon().len(),
        usage_fraction: base.usage_fraction,
        label_fidelity: base.label_fidelity,
        n_words: base.n_words,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::translation_coverage;

    fn schema() -> TaskSchema {
        TaskSchema::new("sentiment", ["negative", "neutral", "positive"]).unwrap()
    }

    #[test]
    fn cipher_round_trip_and_disjointness() {
        assert_eq!(cipher("kato"), "otakx");
        assert_eq!(decipher("otakx").as_deref(), Some("kato"));
        assert_eq!(decipher("kato"), None);
        let world = build_synthetic_world(&WorldConfig::new(100, 10), &schema(), 1).unwrap();
        let sources: BTreeSet<&str> = world.vocab.iter().map(String::as_str).collect();
        for t in world.lexicon().target_words() {
            assert!(!sources.contains(t));
        }
    }

    #[test]
    fn world_is_deterministic() {
        let a = build_synthetic_world(&WorldConfig::new(100, 50), &schema(), 4).unwrap();
        let b = build_synthetic_world(&WorldConfig::new(100, 50), &schema(), 4).unwrap();
        assert_eq!(a, b);
        let c = build_synthetic_world(&WorldConfig::new(100, 50), &schema(), 5).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn config_validation() {
        assert!(build_synthetic_world(&WorldConfig::new(19, 10), &schema(), 0).is_err());
        assert!(build_synthetic_world(&WorldConfig::new(20, 0), &schema(), 0).is_err());
        let bad = WorldConfig { coverage_fraction: 1.5, ..WorldConfig::new(50, 5) };
        assert!(build_synthetic_world(&bad, &schema(), 0).is_err());
    }

    #[test]
    fn full_coverage_translates_everything() {
        let config = WorldConfig {
            coverage_fraction: 1.0,
            label_markers: false,
            ..WorldConfig::new(100, 200)
        };
        let world = build_synthetic_world(&config, &schema(), 2).unwrap();
        let trace = translate_dataset(&world.dataset, world.lexicon(), 0, TranslateOptions::default()).trace;
        assert_eq!(translation_coverage(&trace).unwrap().mean, 1.0);
    }

    #[test]
    fn sixty_six_percent_coverage_leaves_a_third_untranslated() {
        // Uniform corpus over the task vocabulary with exactly
        // round(0.66 * |task vocab|) covered words: expected OOV share is
        // 1 - 79/120 ≈ 0.342.
        let config = WorldConfig {
            coverage_fraction: 0.66,
            zipf_exponent: 0.0,
            label_markers: false,
            ..WorldConfig::new(200, 2000)
        };
        let world = build_synthetic_world(&config, &schema(), 3).unwrap();
        let covered_task = world.task_vocab.iter().filter(|w| world.lexicon().lookup(w).is_some()).count();
        assert_eq!((world.task_vocab.len(), covered_task), (120, 79));
        let trace = translate_dataset(&world.dataset, world.lexicon(), 0, TranslateOptions::default()).trace;
        let rate = translation_coverage(&trace).unwrap().untranslated_rate;
        assert!((rate - 0.34).abs() < 0.015, "{rate}");
    }

    #[test]
    fn ablation_rows_cover_requested_sizes() {
        let world = build_synthetic_world(&WorldConfig::new(100, 100), &schema(), 1).unwrap();
        let run = run_ablation(&world, &AblationConfig::new(vec![200, 50], true, true, 7)).unwrap();
        assert_eq!(run.rows.iter().map(|r| r.size).collect::<Vec<_>>(), [50, 200]);
        assert_eq!(run.rows[1].generated, 200);
        assert!(run.rows[0].kept <= run.rows[1].kept);
        assert!(run.rows[0].utilization_rate <= run.rows[1].utilization_rate);
        assert!(run_ablation(&world, &AblationConfig::new(vec![], true, true, 7)).is_err());
        let again = run_ablation(&world, &AblationConfig::new(vec![200, 50], true, true, 7)).unwrap();
        assert_eq!(run, again);
    }
}
