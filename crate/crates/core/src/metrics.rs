//! Word translation coverage, lexicon utilization, and scaling curves.
//!
//! Coverage is counted over word and number tokens only; punctuation is not
//! in the denominator. An instance with no such tokens has coverage 1.0.
//! Utilization counts distinct lexicon targets that were chosen for at least
//! one translated token anywhere in a trace.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::lexicon::{canonical, BilingualLexicon};
use crate::translate::{TokenStatus, TranslatedInstance, TranslatedToken};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("scaling sizes must be strictly increasing")]
    UnorderedSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub per_instance: Vec<f64>,
    pub mean: f64,
    /// Share of word tokens left untranslated (token-weighted).
    pub untranslated_rate: f64,
    /// Share of distinct canonical word types never translated.
    pub untranslated_type_rate: f64,
    pub word_tokens: usize,
    pub translated_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub distinct_lexicon_targets: usize,
    pub targets_present: usize,
    pub utilization_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub size: usize,
    pub utilization_rate: f64,
    pub mean_coverage: f64,
}

fn is_counted(t: &TranslatedToken) -> bool {
    matches!(t.status, TokenStatus::Translated | TokenStatus::KeptOov)
}

pub fn instance_coverage(instance: &TranslatedInstance) -> f64 {
    let (translated, counted) = instance.tokens.iter().filter(|t| is_counted(t)).fold((0usize, 0usize), |(tr, n), t| {
        (tr + usize::from(t.status == TokenStatus::Translated), n + 1)
    });
    if counted == 0 {
        1.0
    } else {
        translated as f64 / counted as f64
    }
}

pub fn translation_coverage(trace: &[TranslatedInstance]) -> Result<CoverageReport, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let per_instance: Vec<f64> = trace.iter().map(instance_coverage).collect();
    let mean = per_instance.iter().sum::<f64>() / per_instance.len() as f64;

    let mut word_tokens = 0;
    let mut translated_tokens = 0;
    // canonical type → translated at least once
    let mut types: HashMap<String, bool> = HashMap::new();
    for t in trace.iter().flat_map(|i| &i.tokens).filter(|t| is_counted(t)) {
        word_tokens += 1;
        let translated = t.status == TokenStatus::Translated;
        translated_tokens += usize::from(translated);
        *types.entry(canonical(&t.surface_in)).or_insert(false) |= translated;
    }
    let untranslated_rate = if word_tokens == 0 {
        0.0
    } else {
        1.0 - translated_tokens as f64 / word_tokens as f64
    };
    let untranslated_type_rate = if types.is_empty() {
        0.0
    } else {
        types.values().filter(|t| !**t).count() as f64 / types.len() as f64
    };
    Ok(CoverageReport {
        per_instance,
        mean,
        untranslated_rate,
        untranslated_type_rate,
        word_tokens,
        translated_tokens,
    })
}

pub fn lexicon_utilization(trace: &[TranslatedInstance], lexicon: &BilingualLexicon) -> UtilizationReport {
    let targets = lexicon.target_words();
    let present: HashSet<&str> = trace
        .iter()
        .flat_map(|i| &i.tokens)
        .filter(|t| t.status == TokenStatus::Translated)
        .map(|t| t.target.as_deref().unwrap_or(&t.surface_out))
        .filter(|t| targets.contains(t))
        .collect();
    let distinct = targets.len();
    UtilizationReport {
        distinct_lexicon_targets: distinct,
        targets_present: present.len(),
        utilization_rate: if distinct == 0 {
            0.0
        } else {
            present.len() as f64 / distinct as f64
        },
    }
}

/// One row per trace, sorted by size.
pub fn scaling_curve(traces_by_size: &BTreeMap<usize, Vec<TranslatedInstance>>, lexicon: &BilingualLexicon) -> Result<Vec<ScalingRow>, MetricsError> {
    traces_by_size
        .iter()
        .map(|(&size, trace)| {
            Ok(ScalingRow {
                size,
                utilization_rate: lexicon_utilization(trace, lexicon).utilization_rate,
                mean_coverage: translation_coverage(trace)?.mean,
            })
        })
        .collect()
}

/// Scaling rows over nested prefixes of one trace. Sizes larger than the
/// trace are clamped to its length.
pub fn prefix_curve(trace: &[TranslatedInstance], sizes: &[usize], lexicon: &BilingualLexicon) -> Result<Vec<ScalingRow>, MetricsError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricsError::UnorderedSizes);
    }
    sizes
        .iter()
        .map(|&size| {
            let prefix = &trace[..size.min(trace.len())];
            Ok(ScalingRow {
                size,
                utilization_rate: lexicon_utilization(prefix, lexicon).utilization_rate,
                mean_coverage: translation_coverage(prefix)?.mean,
            })
        })
        .collect()
}

pub fn curve_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("size,utilization_rate,mean_coverage\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.size, r.utilization_rate, r.mean_coverage);
    }
    out
}

pub fn write_curve_csv(path: &Path, rows: &[ScalingRow]) -> Result<(), DataError> {
    std::fs::write(path, curve_csv(rows)).map_err(|e| DataError::io(path, e))
}
