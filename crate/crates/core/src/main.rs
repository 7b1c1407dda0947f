use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lexforge::ctg::{build_ctg_corpus, write_ctg_corpus, PromptTemplate, DEFAULT_MAX_WORDS, DEFAULT_TEMPLATE, DEFAULT_WORD_SEPARATOR};
use lexforge::data::{load_dataset, load_dataset_inferring_schema, read_generated, save_dataset, write_generated};
use lexforge::filter::{consistency_filter, label_distill, FilterOptions, HttpLabeler, LabelerBackend, MarkerLabeler};
use lexforge::gen::{generate_batch, GenError, sample_prompt_specs, BatchOptions, CompletionBackend, GenParams, HttpCompletionBackend, MockBackend, MockConfig};
use lexforge::lexicon::{parse_lexicon_tsv, BilingualLexicon};
use lexforge::metrics::{lexicon_utilization, prefix_curve, translation_coverage, write_curve_csv};
use lexforge::pipeline::{run_pipeline, ErrorKind, PipelineConfig, PipelineError, CLASSIFY_URL_ENV, COMPLETE_URL_ENV};
use lexforge::rng::domain_rng;
use lexforge::synth::{build_synthetic_world, run_ablation_grid, AblationConfig, WorldConfig};
use lexforge::translate::{read_trace, translate_dataset, write_trace, TranslateOptions, TranslationMode};
use lexforge::{DataFormat, Dataset, GeneratedInstance, Split, TaskSchema};

#[derive(Parser)]
#[command(name = "lexforge", version, about = "Lexicon-conditioned synthetic task data for low-resource languages")]
struct Cli {
    /// Print results as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bilingual lexicon utilities.
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Build a CTG training corpus from labeled data.
    #[command(subcommand)]
    Ctg(CtgCmd),
    /// Generate task data from lexicon-conditioned prompts.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Input-label consistency filtering.
    #[command(subcommand)]
    Filter(FilterCmd),
    /// Word-for-word lexicon translation.
    #[command(subcommand)]
    Translate(TranslateCmd),
    /// Coverage and utilization reports.
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// Synthetic cipher-world ablation.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Run every stage from one config file.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Args)]
struct LexiconArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, default_value = "en")]
    source_lang: String,
    #[arg(long, default_value = "tgt")]
    target_lang: String,
}

#[derive(Subcommand)]
enum LexiconCmd {
    Stats(LexiconArgs),
}

#[derive(Subcommand)]
enum CtgCmd {
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        /// Task schema JSON; labels are inferred from the data if absent.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_WORD_SEPARATOR)]
        word_separator: String,
        #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
        max_words: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    Run {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Completion server base URL (falls back to LEXFORGE_COMPLETE_URL).
        #[arg(long, conflicts_with = "mock")]
        backend_url: Option<String>,
        /// Use the built-in deterministic mock backend.
        #[arg(long)]
        mock: bool,
        #[arg(long, default_value_t = 1.0)]
        usage_fraction: f64,
        #[arg(long, default_value_t = 1.0)]
        label_fidelity: f64,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_WORD_SEPARATOR)]
        word_separator: String,
        #[arg(long, default_value_t = 10)]
        n_words: usize,
        #[arg(long, default_value_t = 0.1)]
        top_p: f64,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 256)]
        max_tokens: u32,
        #[arg(long, default_value_t = 8)]
        max_in_flight: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Classifier server base URL (falls back to LEXFORGE_CLASSIFY_URL).
    #[arg(long, conflicts_with = "marker")]
    backend_url: Option<String>,
    /// Use the built-in label-marker rule classifier.
    #[arg(long)]
    marker: bool,
    #[arg(long, default_value_t = 8)]
    max_in_flight: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FilterCmd {
    /// Keep instances whose classifier label equals the prompted label.
    Run(FilterArgs),
    /// Relabel every instance with the classifier label.
    Distill(FilterArgs),
}

#[derive(Subcommand)]
enum TranslateCmd {
    Run {
        /// Generated JSONL, or task data as CSV/JSONL.
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "single_token")]
        mode: TranslationMode,
        #[arg(long)]
        no_restore_case: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MetricsCmd {
    Report {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a scaling curve over trace prefixes to this CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Prefix sizes for the curve (default: powers of ten, then the full trace).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum SynthCmd {
    Run {
        #[arg(long, default_value_t = 200)]
        vocab: usize,
        #[arg(long, default_value_t = 2000)]
        corpus_size: usize,
        #[arg(long, default_value_t = 0.66)]
        coverage: f64,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
        sizes: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the world's lexicon, task data, and schema here.
        #[arg(long)]
        world_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

type CliResult = Result<Value, PipelineError>;

fn data_error(stage: &str) -> impl Fn(String) -> PipelineError + '_ {
    move |m| PipelineError::new(stage, ErrorKind::Data, m)
}

fn config_error(m: impl std::fmt::Display) -> PipelineError {
    PipelineError::config(m)
}

fn load_lexicon(a: &LexiconArgs) -> Result<BilingualLexicon, PipelineError> {
    parse_lexicon_tsv(&a.lexicon, &a.source_lang, &a.target_lang).map_err(|e| data_error("lexicon")(e.to_string()))
}

fn load_schema(path: &Path) -> Result<TaskSchema, PipelineError> {
    TaskSchema::load_json(path).map_err(config_error)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| data_error("write")(format!("{}: {e}", path.display())))
}

fn template(path: &Option<PathBuf>, sep: &str) -> Result<PromptTemplate, PipelineError> {
    match path {
        Some(p) => PromptTemplate::from_file(p, sep),
        None => PromptTemplate::new(DEFAULT_TEMPLATE, sep),
    }
    .map_err(config_error)
}

fn env_or(flag: &Option<String>, var: &str) -> Option<String> {
    flag.clone().or_else(|| std::env::var(var).ok())
}

fn lexicon_stats(a: &LexiconArgs) -> CliResult {
    let lex = load_lexicon(a)?;
    Ok(serde_json::to_value(lex.stats()).expect("serializable"))
}

fn ctg_build(
    input: &Path,
    schema: &Option<PathBuf>,
    tpl: &Option<PathBuf>,
    sep: &str,
    max_words: usize,
    seed: u64,
    out: &Path,
) -> CliResult {
    let format = DataFormat::from_path(input);
    let dataset = match schema {
        Some(s) => load_dataset(input, &load_schema(s)?, format),
        None => load_dataset_inferring_schema(input, "task", format),
    }
    .map_err(|e| data_error("ctg")(e.to_string()))?;
    let corpus = build_ctg_corpus(&dataset, &template(tpl, sep)?, max_words, seed).map_err(|e| data_error("ctg")(e.to_string()))?;
    write_ctg_corpus(&corpus, out).map_err(|e| data_error("ctg")(e.to_string()))?;
    Ok(json!({"examples": corpus.len(), "out": out}))
}

fn labels_in_order<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for l in labels {
        if !seen.iter().any(|s| s == l) {
            seen.push(l.to_string());
        }
    }
    seen
}

/// Reads generated JSONL if the rows parse as such, otherwise task data.
fn load_translation_input(input: &Path, schema: &Option<PathBuf>, language: &str) -> Result<Dataset, PipelineError> {
    let schema = schema.as_deref().map(load_schema).transpose()?;
    let format = DataFormat::from_path(input);
    if format == DataFormat::Jsonl {
        if let Ok(generated) = read_generated(input) {
            let generated: Vec<GeneratedInstance> = generated;
            let schema = match schema {
                Some(s) => s,
                None => TaskSchema::new("task", labels_in_order(generated.iter().map(|g| g.effective_label())))
                    .map_err(|e| data_error("translate")(e.to_string()))?,
            };
            return lexforge::filter::to_dataset(&generated, &schema, language, Split::Generated).map_err(|e| data_error("translate")(e.to_string()));
        }
    }
    match schema {
        Some(s) => load_dataset(input, &s, format),
        None => load_dataset_inferring_schema(input, "task", format),
    }
    .map(|d| d.with_language(language))
    .map_err(|e| data_error("translate")(e.to_string()))
}

fn default_sizes(len: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = std::iter::successors(Some(1usize), |s| s.checked_mul(10)).take_while(|s| *s < len).collect();
    if len > 0 {
        sizes.push(len);
    }
    sizes
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Lexicon(LexiconCmd::Stats(a)) => lexicon_stats(&a),
        Command::Ctg(CtgCmd::Build {
            input,
            schema,
            template: tpl,
            word_separator,
            max_words,
            seed,
            out,
        }) => ctg_build(&input, &schema, &tpl, &word_separator, max_words, seed, &out),
        Command::Gen(GenCmd::Run {
            lexicon,
            schema,
            count,
            seed,
            backend_url,
            mock,
            usage_fraction,
            label_fidelity,
            template: tpl,
            word_separator,
            n_words,
            top_p,
            temperature,
            max_tokens,
            max_in_flight,
            out,
        }) => {
            let lex = load_lexicon(&lexicon)?;
            let schema = load_schema(&schema)?;
            let tpl = template(&tpl, &word_separator)?;
            let params = GenParams {
                top_p,
                temperature,
                max_tokens,
                n_words,
            };
            let specs = sample_prompt_specs(&lex, &schema, &tpl, &params, count, &mut domain_rng(seed, "prompts")).map_err(config_error)?;
            let backend: Box<dyn CompletionBackend> = if mock {
                Box::new(MockBackend::new(
                    MockConfig {
                        usage_fraction,
                        label_fidelity,
                        seed,
                        filler_vocab: lex.source_words().map(str::to_string).collect(),
                    },
                    &tpl,
                    schema.labels(),
                ))
            } else {
                let url = env_or(&backend_url, COMPLETE_URL_ENV).ok_or_else(|| config_error("one of --backend-url or --mock is required"))?;
                Box::new(HttpCompletionBackend::new(&url))
            };
            let options = BatchOptions {
                max_in_flight,
                ..Default::default()
            };
            let batch = generate_batch(&backend, &specs, &params, &options).map_err(|e| match e {
                GenError::BackendUnreachable(_) => PipelineError::new("gen", ErrorKind::BackendUnreachable, e),
                other => config_error(other),
            })?;
            let stats = batch.stats.clone();
            write_generated(&out, &batch.into_instances()).map_err(|e| data_error("gen")(e.to_string()))?;
            Ok(serde_json::to_value(stats).expect("serializable"))
        }
        Command::Filter(cmd) => {
            let (distill, a) = match cmd {
                FilterCmd::Run(a) => (false, a),
                FilterCmd::Distill(a) => (true, a),
            };
            let schema = load_schema(&a.schema)?;
            let instances = read_generated(&a.input).map_err(|e| data_error("filter")(e.to_string()))?;
            let labeler: Box<dyn LabelerBackend> = if a.marker {
                Box::new(MarkerLabeler)
            } else {
                let url = env_or(&a.backend_url, CLASSIFY_URL_ENV).ok_or_else(|| config_error("one of --backend-url or --marker is required"))?;
                Box::new(HttpLabeler::new(&url))
            };
            let options = FilterOptions {
                max_in_flight: a.max_in_flight,
                ..Default::default()
            };
            let unreachable = |e| PipelineError::new("filter", ErrorKind::BackendUnreachable, e);
            let (out, report) = if distill {
                let o = label_distill(instances, &labeler, &schema, &options).map_err(unreachable)?;
                (o.instances, o.report)
            } else {
                let o = consistency_filter(instances, &labeler, &schema, &options).map_err(unreachable)?;
                (o.kept, o.report)
            };
            write_generated(&a.out, &out).map_err(|e| data_error("filter")(e.to_string()))?;
            if let Some(p) = &a.report {
                write_json(p, &report)?;
            }
            Ok(serde_json::to_value(report).expect("serializable"))
        }
        Command::Translate(TranslateCmd::Run {
            input,
            lexicon,
            schema,
            seed,
            mode,
            no_restore_case,
            out,
            trace,
        }) => {
            let lex = load_lexicon(&lexicon)?;
            let dataset = load_translation_input(&input, &schema, lex.source_lang())?;
            let options = TranslateOptions {
                mode,
                restore_case: !no_restore_case,
            };
            let result = translate_dataset(&dataset, &lex, seed, options);
            save_dataset(&result.out, &out, DataFormat::from_path(&out)).map_err(|e| data_error("translate")(e.to_string()))?;
            if let Some(t) = &trace {
                write_trace(t, &result.trace).map_err(|e| data_error("translate")(e.to_string()))?;
            }
            Ok(json!({"translated": result.out.len(), "language": result.out.language()}))
        }
        Command::Metrics(MetricsCmd::Report {
            trace,
            lexicon,
            out,
            curve,
            sizes,
        }) => {
            let lex = load_lexicon(&lexicon)?;
            let trace = read_trace(&trace).map_err(|e| data_error("metrics")(e.to_string()))?;
            let coverage = translation_coverage(&trace).map_err(|e| data_error("metrics")(e.to_string()))?;
            let utilization = lexicon_utilization(&trace, &lex);
            let mut report = json!({
                "instances": trace.len(),
                "mean_coverage": coverage.mean,
                "untranslated_rate": coverage.untranslated_rate,
                "untranslated_type_rate": coverage.untranslated_type_rate,
                "word_tokens": coverage.word_tokens,
                "translated_tokens": coverage.translated_tokens,
                "utilization": utilization,
            });
            if curve.is_some() || !sizes.is_empty() {
                let sizes = if sizes.is_empty() { default_sizes(trace.len()) } else { sizes };
                let rows = prefix_curve(&trace, &sizes, &lex).map_err(config_error)?;
                if let Some(c) = &curve {
                    write_curve_csv(c, &rows).map_err(|e| data_error("metrics")(e.to_string()))?;
                }
                report["curve"] = serde_json::to_value(rows).expect("serializable");
            }
            if let Some(o) = &out {
                write_json(o, &report)?;
            }
            Ok(report)
        }
        Command::Synth(SynthCmd::Run {
            vocab,
            corpus_size,
            coverage,
            sizes,
            seed,
            out,
            world_dir,
        }) => {
            let schema = TaskSchema::new("synthetic", ["negative", "neutral", "positive"]).expect("valid labels");
            let config = WorldConfig {
                coverage_fraction: coverage,
                ..WorldConfig::new(vocab, corpus_size)
            };
            let world = build_synthetic_world(&config, &schema, seed).map_err(config_error)?;
            if let Some(dir) = &world_dir {
                let io = |e: std::io::Error| data_error("synth")(e.to_string());
                std::fs::create_dir_all(dir).map_err(io)?;
                world.lexicon().write_tsv(&dir.join("lexicon.tsv")).map_err(|e| data_error("synth")(e.to_string()))?;
                save_dataset(&world.dataset, &dir.join("task.csv"), DataFormat::Csv).map_err(|e| data_error("synth")(e.to_string()))?;
                write_json(&dir.join("schema.json"), world.schema())?;
            }
            let report = run_ablation_grid(&world, &AblationConfig::new(sizes, true, true, seed)).map_err(config_error)?;
            write_json(&out, &report)?;
            Ok(serde_json::to_value(report).expect("serializable"))
        }
        Command::Pipeline(PipelineCmd::Run { config }) => {
            let mut config = PipelineConfig::from_file(&config)?;
            config.apply_env_overrides();
            let outcome = run_pipeline(&config)?;
            Ok(json!({"output_dir": outcome.output_dir, "counts": outcome.manifest.counts}))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let as_json = cli.json;
    match run(cli) {
        Ok(value) => {
            if as_json {
                println!("{}", serde_json::to_string(&value).expect("serializable"));
            } else {
                println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::to_string(&e.to_json()).expect("serializable");
            if as_json {
                println!("{body}");
            }
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
