//! Input-label consistency filtering and the label-distillation baseline.
//!
//! Both modes send each generated text to a [`LabelerBackend`] and record
//! its argmax label in `relabel`. The filter keeps an instance only when
//! that label equals the prompted label. Distillation keeps everything and
//! makes the classifier label the effective one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, GeneratedInstance, LabeledInstance, Split, TaskSchema};
use crate::exec::{run_with_probe, RetryPolicy};
use crate::gen::{http_agent, label_marker, post_json, BackendError};
use crate::tokenize::tokenize;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("labeler unreachable: {0}")]
    LabelerUnreachable(BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    #[serde(default)]
    pub scores: Option<BTreeMap<String, f64>>,
}

/// A text classifier over a given label set.
pub trait LabelerBackend: Send + Sync {
    fn classify(&self, text: &str, labels: &[String], request_id: u64) -> Result<Classification, BackendError>;
}

impl<L: LabelerBackend + ?Sized> LabelerBackend for &L {
    fn classify(&self, text: &str, labels: &[String], request_id: u64) -> Result<Classification, BackendError> {
        (**self).classify(text, labels, request_id)
    }
}

impl<L: LabelerBackend + ?Sized> LabelerBackend for Box<L> {
    fn classify(&self, text: &str, labels: &[String], request_id: u64) -> Result<Classification, BackendError> {
        (**self).classify(text, labels, request_id)
    }
}

/// Rule classifier: the label whose [`label_marker`] appears first as a word
/// token wins; texts without a marker get the first label.
#[derive(Debug, Clone, Default)]
pub struct MarkerLabeler;

impl LabelerBackend for MarkerLabeler {
    fn classify(&self, text: &str, labels: &[String], _request_id: u64) -> Result<Classification, BackendError> {
        let first = labels
            .first()
            .ok_or_else(|| BackendError::Protocol("empty label set".into()))?;
        let markers: Vec<String> = labels.iter().map(|l| label_marker(l)).collect();
        let found = tokenize(text)
            .into_iter()
            .find_map(|t| markers.iter().position(|m| *m == t.surface));
        let label = found.map_or(first, |i| &labels[i]).clone();
        let scores = labels
            .iter()
            .map(|l| (l.clone(), if *l == label { 1.0 } else { 0.0 }))
            .collect();
        Ok(Classification {
            label,
            scores: Some(scores),
        })
    }
}

/// Always answers with one label.
#[derive(Debug, Clone)]
pub struct FixedLabeler(pub String);

impl LabelerBackend for FixedLabeler {
    fn classify(&self, _text: &str, _labels: &[String], _request_id: u64) -> Result<Classification, BackendError> {
        Ok(Classification {
            label: self.0.clone(),
            scores: None,
        })
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    text: &'a str,
    labels: &'a [String],
    request_id: u64,
}

/// Client for `POST {base}/v1/classify`.
#[derive(Debug, Clone)]
pub struct HttpLabeler {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpLabeler {
    pub fn new(base_url: &str) -> Self {
        Self {
            endpoint: format!("{}/v1/classify", base_url.trim_end_matches('/')),
            agent: http_agent(),
        }
    }
}

impl LabelerBackend for HttpLabeler {
    fn classify(&self, text: &str, labels: &[String], request_id: u64) -> Result<Classification, BackendError> {
        post_json(&self.agent, &self.endpoint, &ClassifyRequest { text, labels, request_id })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOptions {
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            max_in_flight: 8,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: usize,
    pub kept: usize,
    pub discarded: usize,
    pub failures: usize,
    pub retention_rate: f64,
    /// prompted label → classifier label → count, over classified instances.
    pub per_label_confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<GeneratedInstance>,
    pub discarded: Vec<GeneratedInstance>,
    /// Instances the labeler could not classify; never kept.
    pub failed: Vec<GeneratedInstance>,
    pub report: FilterReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillOutcome {
    pub instances: Vec<GeneratedInstance>,
    pub report: FilterReport,
}

/// Classifies every instance. Labels outside the schema count as failures.
fn classify_all(
    instances: &[GeneratedInstance],
    labeler: &(impl LabelerBackend + ?Sized),
    schema: &TaskSchema,
    options: &FilterOptions,
) -> Result<Vec<Result<String, BackendError>>, FilterError> {
    let labels = schema.labels();
    run_with_probe(instances.len(), options.max_in_flight, |i| {
        let request_id = instances[i].request_id().unwrap_or(i as u64);
        let c = options.retry.run(|| labeler.classify(&instances[i].text, labels, request_id))?;
        if schema.contains(&c.label) {
            Ok(c.label)
        } else {
            Err(BackendError::Protocol(format!("label {:?} not in request labels", c.label)))
        }
    })
    .map_err(FilterError::LabelerUnreachable)
}

fn confusion_add(report: &mut FilterReport, prompted: &str, predicted: &str) {
    *report
        .per_label_confusion
        .entry(prompted.to_string())
        .or_default()
        .entry(predicted.to_string())
        .or_default() += 1;
}

pub fn consistency_filter(
    instances: Vec<GeneratedInstance>,
    labeler: &(impl LabelerBackend + ?Sized),
    schema: &TaskSchema,
    options: &FilterOptions,
) -> Result<FilterOutcome, FilterError> {
    let predictions = classify_all(&instances, labeler, schema, options)?;
    let mut report = FilterReport {
        total: instances.len(),
        ..Default::default()
    };
    let (mut kept, mut discarded, mut failed) = (Vec::new(), Vec::new(), Vec::new());
    for (mut inst, prediction) in instances.into_iter().zip(predictions) {
        match prediction {
            Ok(label) => {
                confusion_add(&mut report, &inst.prompted_label, &label);
                let agrees = label == inst.prompted_label;
                inst.relabel = Some(label);
                if agrees {
                    kept.push(inst);
                } else {
                    discarded.push(inst);
                }
            }
            Err(e) => {
                inst.relabel = None;
                inst.backend_meta.insert("label_error".into(), e.to_string());
                failed.push(inst);
            }
        }
    }
    report.kept = kept.len();
    report.discarded = discarded.len();
    report.failures = failed.len();
    report.retention_rate = if report.total == 0 {
        0.0
    } else {
        report.kept as f64 / report.total as f64
    };
    Ok(FilterOutcome {
        kept,
        discarded,
        failed,
        report,
    })
}

/// Relabels every instance with the classifier's prediction. The prompted
/// label is left in place; the prediction becomes the effective label.
/// Instances the labeler could not classify keep their prompted label and
/// are counted as failures.
pub fn label_distill(
    instances: Vec<GeneratedInstance>,
    labeler: &(impl LabelerBackend + ?Sized),
    schema: &TaskSchema,
    options: &FilterOptions,
) -> Result<DistillOutcome, FilterError> {
    let predictions = classify_all(&instances, labeler, schema, options)?;
    let mut report = FilterReport {
        total: instances.len(),
        ..Default::default()
    };
    let instances: Vec<GeneratedInstance> = instances
        .into_iter()
        .zip(predictions)
        .map(|(mut inst, prediction)| {
            match prediction {
                Ok(label) => {
                    confusion_add(&mut report, &inst.prompted_label, &label);
                    inst.relabel = Some(label);
                }
                Err(e) => {
                    report.failures += 1;
                    inst.backend_meta.insert("label_error".into(), e.to_string());
                }
            }
            inst
        })
        .collect();
    report.kept = instances.len();
    report.retention_rate = if report.total == 0 { 0.0 } else { 1.0 };
    Ok(DistillOutcome { instances, report })
}

/// Converts instances to task data using their effective labels.
pub fn to_dataset(instances: &[GeneratedInstance], schema: &TaskSchema, language: &str, split: Split) -> Result<Dataset, DataError> {
    let rows = instances
        .iter()
        .map(|g| LabeledInstance::new(g.text.clone(), g.effective_label()))
        .collect();
    Dataset::new(schema.clone(), language, split, rows)
}
