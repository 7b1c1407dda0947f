//! Lexicon-conditioned synthetic task-data generation for low-resource languages.
//!
//! The pipeline stages, in the order the `pipeline` module runs them:
//!
//! 1. [`ctg`] builds a controlled-text-generation training corpus from
//!    existing labeled data (optional, feeds external finetuning).
//! 2. [`gen`] samples `(label, lexicon words)` prompts and drives a
//!    [`gen::CompletionBackend`] to produce task inputs.
//! 3. [`filter`] keeps only generations whose classifier label agrees with
//!    the prompted label (or relabels everything in distillation mode).
//! 4. [`translate`] substitutes words with bilingual-lexicon translations.
//! 5. [`metrics`] reports word translation coverage and lexicon utilization.
//!
//! [`synth`] builds cipher-language worlds with known ground truth so every
//! stage can be checked without a model.

pub mod ctg;
pub mod data;
pub mod exec;
pub mod filter;
pub mod gen;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tokenize;
pub mod translate;

pub use data::{DataFormat, Dataset, GeneratedInstance, LabeledInstance, Split, TaskSchema};
pub use lexicon::BilingualLexicon;
pub use tokenize::{detokenize, tokenize, Token, TokenKind};
