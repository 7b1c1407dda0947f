//! One-shot config-driven run of every stage into an artifact directory.
//!
//! Artifacts are written into a temporary sibling of `output_dir` and moved
//! into place only after every stage succeeded. No artifact carries a
//! timestamp, so two runs of the same config against deterministic backends
//! produce byte-identical directories.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::ctg::{build_ctg_corpus, write_ctg_corpus, CtgError, PromptTemplate, DEFAULT_MAX_WORDS, DEFAULT_WORD_SEPARATOR};
use crate::data::{load_dataset, save_dataset, write_generated, DataError, DataFormat, Dataset, GeneratedInstance, Split, TaskSchema};
use crate::exec::RetryPolicy;
use crate::filter::{consistency_filter, label_distill, to_dataset, FilterError, FilterOptions, FilterReport, HttpLabeler, LabelerBackend, MarkerLabeler};
use crate::gen::{
    generate_batch, sample_prompt_specs_weighted, word_usage_rate, BatchOptions, CompletionBackend, GenError, GenParams, GenerationStats, HttpCompletionBackend,
    MockBackend, MockConfig,
};
use crate::lexicon::{parse_lexicon_tsv, BilingualLexicon, LexiconError};
use crate::metrics::{lexicon_utilization, prefix_curve, translation_coverage, write_curve_csv, MetricsError, ScalingRow, UtilizationReport};
use crate::rng::domain_rng;
use crate::tokenize::{tokenize, TokenKind};
use crate::translate::{translate_dataset, write_trace, TranslateOptions};

pub const COMPLETE_URL_ENV: &str = "LEXFORGE_COMPLETE_URL";
pub const CLASSIFY_URL_ENV: &str = "LEXFORGE_CLASSIFY_URL";

pub const CTG_FILE: &str = "ctg.jsonl";
pub const GEN_FILE: &str = "gen.jsonl";
pub const KEPT_FILE: &str = "kept.jsonl";
pub const TRANSLATED_FILE: &str = "translated.csv";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    ConfigInvalid,
    BackendUnreachable,
    Data,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::ConfigInvalid => 2,
            ErrorKind::BackendUnreachable => 3,
            ErrorKind::Data => 4,
        }
    }
}

/// A stage failure. Serializes as `{"error": {"stage", "kind", "message"}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: String,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &str, kind: ErrorKind, message: impl fmt::Display) -> Self {
        Self {
            stage: stage.to_string(),
            kind,
            message: message.to_string(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new("config", ErrorKind::ConfigInvalid, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": {"stage": self.stage, "kind": self.kind, "message": self.message}})
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed ({:?}): {}", self.stage, self.kind, self.message)
    }
}

impl std::error::Error for PipelineError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Path(PathBuf),
    Inline(TaskSchema),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompletionConfig {
    Mock {
        #[serde(default = "one")]
        usage_fraction: f64,
        #[serde(default = "one")]
        label_fidelity: f64,
        /// Defaults to the word tokens of `task_data`, else the lexicon
        /// source words.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        filler_vocab: Option<Vec<String>>,
    },
    Http {
        url: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Marker,
    Http { url: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMode {
    #[default]
    Filter,
    Distill,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryConfig {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff_ms: 500,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_source_lang() -> String {
    "en".into()
}

fn default_separator() -> String {
    DEFAULT_WORD_SEPARATOR.into()
}

fn default_max_words() -> usize {
    DEFAULT_MAX_WORDS
}

fn default_in_flight() -> usize {
    8
}

/// JSON run configuration. Relative paths are resolved against the config
/// file's directory by [`PipelineConfig::from_file`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub schema: SchemaSource,
    pub lexicon: PathBuf,
    #[serde(default = "default_source_lang")]
    pub source_lang: String,
    pub target_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<PathBuf>,
    #[serde(default = "default_separator")]
    pub word_separator: String,
    /// Existing labeled data; enables `ctg.jsonl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_data: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub completion: CompletionConfig,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub gen: GenParams,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<BTreeMap<String, f64>>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryConfig,
    #[serde(default)]
    pub quality: QualityMode,
    #[serde(default)]
    pub translate: TranslateOptions,
    #[serde(default = "default_max_words")]
    pub ctg_max_words: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_sizes: Option<Vec<usize>>,
}

fn default_classifier() -> ClassifierConfig {
    ClassifierConfig::Marker
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(PipelineError::config)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json_str(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.lexicon);
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.template {
            fix(p);
        }
        if let Some(p) = &mut self.task_data {
            fix(p);
        }
        if let SchemaSource::Path(p) = &mut self.schema {
            fix(p);
        }
    }

    /// Replaces HTTP backend URLs with the environment overrides, if set.
    pub fn apply_env_overrides(&mut self) {
        if let (CompletionConfig::Http { url }, Ok(v)) = (&mut self.completion, std::env::var(COMPLETE_URL_ENV)) {
            *url = v;
        }
        if let (ClassifierConfig::Http { url }, Ok(v)) = (&mut self.classifier, std::env::var(CLASSIFY_URL_ENV)) {
            *url = v;
        }
    }

    /// Checks everything that can be checked without running a stage.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let must_exist = |what: &str, p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(PipelineError::config(format!("{what} file {} does not exist", p.display())))
            }
        };
        must_exist("lexicon", &self.lexicon)?;
        if let SchemaSource::Path(p) = &self.schema {
            must_exist("schema", p)?;
        }
        if let Some(p) = &self.template {
            must_exist("template", p)?;
        }
        if let Some(p) = &self.task_data {
            must_exist("task data", p)?;
        }
        if self.count == 0 {
            return Err(PipelineError::config("count must be at least 1"));
        }
        if self.max_in_flight == 0 {
            return Err(PipelineError::config("max_in_flight must be at least 1"));
        }
        if self.retry.attempts == 0 {
            return Err(PipelineError::config("retry.attempts must be at least 1"));
        }
        if self.ctg_max_words == 0 {
            return Err(PipelineError::config("ctg_max_words must be at least 1"));
        }
        self.gen.validate().map_err(PipelineError::config)?;
        if let CompletionConfig::Mock {
            usage_fraction,
            label_fidelity,
            ..
        } = &self.completion
        {
            for (name, v) in [("usage_fraction", usage_fraction), ("label_fidelity", label_fidelity)] {
                if !(0.0..=1.0).contains(v) {
                    return Err(PipelineError::config(format!("{name} must be in [0, 1]")));
                }
            }
        }
        if let Some(sizes) = &self.curve_sizes {
            if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PipelineError::config("curve_sizes must be positive and strictly increasing"));
            }
        }
        if self.output_dir.as_os_str().is_empty() || self.output_dir.file_name().is_none() {
            return Err(PipelineError::config("output_dir must name a directory"));
        }
        Ok(())
    }

    /// The config as recorded in the manifest: everything but `output_dir`.
    pub fn manifest_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub requested: usize,
    pub generated: usize,
    pub empty: usize,
    pub failed: usize,
    pub kept: usize,
    pub discarded: usize,
    pub label_failures: usize,
    pub translated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ctg_examples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub mean: f64,
    pub untranslated_rate: f64,
    pub untranslated_type_rate: f64,
    pub word_tokens: usize,
    pub translated_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub generation: GenerationStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_usage_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageSummary>,
    pub utilization: UtilizationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<ScalingRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub k_distribution: String,
    pub config: serde_json::Value,
    /// sha256 of every input file.
    pub inputs: BTreeMap<String, String>,
    pub counts: Counts,
    /// sha256 of every artifact except the manifest itself.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    pub report: RunReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_sha256(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::new("write", ErrorKind::Data, DataError::io(path, e)))?;
    Ok(sha256_hex(&bytes))
}

fn data_err(stage: &str) -> impl Fn(DataError) -> PipelineError + '_ {
    move |e| PipelineError::new(stage, ErrorKind::Data, e)
}

fn lexicon_err(e: LexiconError) -> PipelineError {
    match e {
        LexiconError::IoFailure { .. } => PipelineError::config(e),
        other => PipelineError::new("lexicon", ErrorKind::Data, other),
    }
}

fn ctg_err(e: CtgError) -> PipelineError {
    match e {
        CtgError::InvalidTemplate | CtgError::InvalidMaxWords => PipelineError::config(e),
        other => PipelineError::new("ctg", ErrorKind::Data, other),
    }
}

fn gen_err(e: GenError) -> PipelineError {
    match e {
        GenError::BackendUnreachable(_) => PipelineError::new("gen", ErrorKind::BackendUnreachable, e),
        GenError::InvalidParams(_) | GenError::NotEnoughWords(_) => PipelineError::config(e),
        GenError::EmptyInput => PipelineError::new("gen", ErrorKind::Data, e),
    }
}

fn filter_err(e: FilterError) -> PipelineError {
    PipelineError::new("filter", ErrorKind::BackendUnreachable, e)
}

fn metrics_err(e: MetricsError) -> PipelineError {
    PipelineError::new("metrics", ErrorKind::Data, e)
}

fn word_tokens(dataset: &Dataset) -> Vec<String> {
    dataset
        .instances()
        .iter()
        .flat_map(|i| tokenize(&i.text))
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.surface)
        .collect()
}

struct Inputs {
    schema: TaskSchema,
    lexicon: BilingualLexicon,
    template: PromptTemplate,
    task_data: Option<Dataset>,
    label_weights: Option<Vec<f64>>,
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs, PipelineError> {
    let schema = match &config.schema {
        SchemaSource::Inline(s) => s.clone(),
        SchemaSource::Path(p) => TaskSchema::load_json(p).map_err(PipelineError::config)?,
    };
    let lexicon = parse_lexicon_tsv(&config.lexicon, &config.source_lang, &config.target_lang).map_err(lexicon_err)?;
    if lexicon.len() < config.gen.n_words {
        return Err(PipelineError::config(format!(
            "lexicon has {} source words but gen.n_words is {}",
            lexicon.len(),
            config.gen.n_words
        )));
    }
    let template = match &config.template {
        Some(p) => PromptTemplate::from_file(p, &config.word_separator),
        None => PromptTemplate::new(crate::ctg::DEFAULT_TEMPLATE, config.word_separator.clone()),
    }
    .map_err(ctg_err)?;
    let label_weights = match &config.class_weights {
        None => None,
        Some(w) => {
            if let Some(unknown) = w.keys().find(|k| !schema.contains(k)) {
                return Err(PipelineError::config(format!("class_weights names unknown label {unknown:?}")));
            }
            let v: Vec<f64> = schema.labels().iter().map(|l| w.get(l).copied().unwrap_or(0.0)).collect();
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) || v.iter().sum::<f64>() <= 0.0 {
                return Err(PipelineError::config("class_weights must be non-negative with a positive sum"));
            }
            Some(v)
        }
    };
    let task_data = match &config.task_data {
        Some(p) => Some(load_dataset(p, &schema, DataFormat::from_path(p)).map_err(data_err("ctg"))?),
        None => None,
    };
    Ok(Inputs {
        schema,
        lexicon,
        template,
        task_data,
        label_weights,
    })
}

fn temp_sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    dir.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Moves `staged` to `target`, replacing any previous directory there.
fn commit_dir(staged: &Path, target: &Path) -> std::io::Result<()> {
    if target.exists() {
        let old = temp_sibling(target, "old");
        fs::rename(target, &old)?;
        fs::rename(staged, target)?;
        fs::remove_dir_all(&old)
    } else {
        fs::rename(staged, target)
    }
}

/// Validates `config`, runs every stage, and publishes the artifacts.
/// On error nothing is left at `output_dir` that was not there before.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    if let Some(parent) = config.output_dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::config(format!("cannot create {}: {e}", parent.display())))?;
    }
    let staged = temp_sibling(&config.output_dir, "tmp");
    if staged.exists() {
        fs::remove_dir_all(&staged).map_err(|e| PipelineError::new("write", ErrorKind::Data, e))?;
    }
    fs::create_dir(&staged).map_err(|e| PipelineError::config(format!("cannot create {}: {e}", staged.display())))?;
    let result = run_stages(config, &inputs, &staged).and_then(|(manifest, report)| {
        commit_dir(&staged, &config.output_dir).map_err(|e| PipelineError::new("write", ErrorKind::Data, e))?;
        Ok(PipelineOutcome {
            output_dir: config.output_dir.clone(),
            manifest,
            report,
        })
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staged);
    }
    result
}

fn run_stages(config: &PipelineConfig, inputs: &Inputs, dir: &Path) -> Result<(Manifest, RunReport), PipelineError> {
    let schema = &inputs.schema;
    let retry = RetryPolicy {
        attempts: config.retry.attempts,
        initial_backoff: std::time::Duration::from_millis(config.retry.initial_backoff_ms),
        ..RetryPolicy::default()
    };

    let mut ctg_examples = None;
    if let Some(task) = &inputs.task_data {
        let corpus = build_ctg_corpus(task, &inputs.template, config.ctg_max_words, config.seed).map_err(ctg_err)?;
        write_ctg_corpus(&corpus, &dir.join(CTG_FILE)).map_err(ctg_err)?;
        ctg_examples = Some(corpus.len());
    }

    let specs = sample_prompt_specs_weighted(
        &inputs.lexicon,
        schema,
        &inputs.template,
        &config.gen,
        config.count,
        inputs.label_weights.as_deref(),
        &mut domain_rng(config.seed, "prompts"),
    )
    .map_err(gen_err)?;
    let backend: Box<dyn CompletionBackend> = match &config.completion {
        CompletionConfig::Mock {
            usage_fraction,
            label_fidelity,
            filler_vocab,
        } => {
            let filler = match (filler_vocab, &inputs.task_data) {
                (Some(v), _) => v.clone(),
                (None, Some(task)) => word_tokens(task),
                (None, None) => inputs.lexicon.source_words().map(str::to_string).collect(),
            };
            Box::new(MockBackend::new(
                MockConfig {
                    usage_fraction: *usage_fraction,
                    label_fidelity: *label_fidelity,
                    seed: config.seed,
                    filler_vocab: filler,
                },
                &inputs.template,
                schema.labels(),
            ))
        }
        CompletionConfig::Http { url } => Box::new(HttpCompletionBackend::new(url)),
    };
    let batch = generate_batch(
        &backend,
        &specs,
        &config.gen,
        &BatchOptions {
            max_in_flight: config.max_in_flight,
            retry: retry.clone(),
        },
    )
    .map_err(gen_err)?;
    let stats = batch.stats.clone();
    let generated = batch.into_instances();
    write_generated(&dir.join(GEN_FILE), &generated).map_err(data_err("gen"))?;

    let labeler: Box<dyn LabelerBackend> = match &config.classifier {
        ClassifierConfig::Marker => Box::new(MarkerLabeler),
        ClassifierConfig::Http { url } => Box::new(HttpLabeler::new(url)),
    };
    let filter_opts = FilterOptions {
        max_in_flight: config.max_in_flight,
        retry,
    };
    let (kept, filter_report): (Vec<GeneratedInstance>, Option<FilterReport>) = match config.quality {
        QualityMode::Filter => {
            let out = consistency_filter(generated.clone(), &labeler, schema, &filter_opts).map_err(filter_err)?;
            (out.kept, Some(out.report))
        }
        QualityMode::Distill => {
            let out = label_distill(generated.clone(), &labeler, schema, &filter_opts).map_err(filter_err)?;
            (out.instances, Some(out.report))
        }
        QualityMode::None => (generated.clone(), None),
    };
    write_generated(&dir.join(KEPT_FILE), &kept).map_err(data_err("filter"))?;

    let source = to_dataset(&kept, schema, inputs.lexicon.source_lang(), Split::Generated).map_err(data_err("translate"))?;
    let translation = translate_dataset(&source, &inputs.lexicon, config.seed, config.translate);
    save_dataset(&translation.out, &dir.join(TRANSLATED_FILE), DataFormat::Csv).map_err(data_err("translate"))?;
    write_trace(&dir.join(TRACE_FILE), &translation.trace).map_err(data_err("translate"))?;

    let coverage = match translation_coverage(&translation.trace) {
        Ok(c) => Some(CoverageSummary {
            mean: c.mean,
            untranslated_rate: c.untranslated_rate,
            untranslated_type_rate: c.untranslated_type_rate,
            word_tokens: c.word_tokens,
            translated_tokens: c.translated_tokens,
        }),
        Err(MetricsError::EmptyTrace) => None,
        Err(e) => return Err(metrics_err(e)),
    };
    let curve = match &config.curve_sizes {
        Some(sizes) if !translation.trace.is_empty() => {
            let rows = prefix_curve(&translation.trace, sizes, &inputs.lexicon).map_err(metrics_err)?;
            write_curve_csv(&dir.join(CURVE_FILE), &rows).map_err(data_err("metrics"))?;
            Some(rows)
        }
        _ => None,
    };
    let report = RunReport {
        generation: stats.clone(),
        filter: filter_report.clone(),
        word_usage_rate: word_usage_rate(&generated).ok(),
        coverage,
        utilization: lexicon_utilization(&translation.trace, &inputs.lexicon),
        curve,
    };
    write_pretty(&dir.join(REPORT_FILE), &report)?;

    let counts = Counts {
        requested: stats.requested,
        generated: generated.len(),
        empty: stats.empty,
        failed: stats.failed,
        kept: kept.len(),
        discarded: filter_report.as_ref().map_or(0, |r| r.discarded),
        label_failures: filter_report.as_ref().map_or(0, |r| r.failures),
        translated: translation.out.len(),
        ctg_examples,
    };
    let mut input_hashes = BTreeMap::new();
    input_hashes.insert("lexicon".to_string(), file_sha256(&config.lexicon)?);
    if let SchemaSource::Path(p) = &config.schema {
        input_hashes.insert("schema".to_string(), file_sha256(p)?);
    }
    if let Some(p) = &config.template {
        input_hashes.insert("template".to_string(), file_sha256(p)?);
    }
    if let Some(p) = &config.task_data {
        input_hashes.insert("task_data".to_string(), file_sha256(p)?);
    }
    let mut artifacts = BTreeMap::new();
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| PipelineError::new("write", ErrorKind::Data, e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for name in names {
        artifacts.insert(name.clone(), file_sha256(&dir.join(&name))?);
    }
    let manifest = Manifest {
        tool: "lexforge".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        k_distribution: "uniform".into(),
        config: config.manifest_view(),
        inputs: input_hashes,
        counts,
        artifacts,
    };
    write_pretty(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok((manifest, report))
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| PipelineError::new("write", ErrorKind::Data, DataError::io(path, e)))
}
