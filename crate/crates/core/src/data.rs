//! Task schemas, labeled and generated instances, and dataset file I/O.
//!
//! Task data is read and written as CSV (`text,label` header, RFC-4180
//! quoting, `\n` line endings) or JSONL (`{"text": .., "label": ..}` per
//! line). Generated instances carry nested metadata and are JSONL only.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("unknown label {1:?} at line {0}")]
    UnknownLabel(usize, String),
    #[error("empty text at line {0}")]
    EmptyText(usize),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("label {0:?} is not in the schema")]
    LabelNotInSchema(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::IoFailure {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// The task name and its ordered class set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSchema {
    task_name: String,
    labels: Vec<String>,
}

impl TaskSchema {
    pub fn new<S: Into<String>>(task_name: impl Into<String>, labels: impl IntoIterator<Item = S>) -> Result<Self, DataError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(DataError::InvalidSchema("labels must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(DataError::InvalidSchema("labels must be non-empty strings".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(DataError::InvalidSchema(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self {
            task_name: task_name.into(),
            labels,
        })
    }

    pub fn task_name(&self) -> &str {
        &self.task_name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Case-sensitive exact membership.
    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Reads `{"task_name": .., "labels": [..]}`.
    pub fn load_json(path: &Path) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|e| DataError::io(path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| DataError::InvalidSchema(format!("{}: {e}", path.display())))
    }
}

impl<'de> Deserialize<'de> for TaskSchema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            task_name: String,
            labels: Vec<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        TaskSchema::new(raw.task_name, raw.labels).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub text: String,
    pub label: String,
}

impl LabeledInstance {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
    Generated,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Generated => "generated",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            "generated" => Ok(Split::Generated),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Labeled task data under one schema. Instance order is significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: TaskSchema,
    language: String,
    split: Split,
    instances: Vec<LabeledInstance>,
}

impl Dataset {
    pub fn new(schema: TaskSchema, language: impl Into<String>, split: Split, instances: Vec<LabeledInstance>) -> Result<Self, DataError> {
        for inst in &instances {
            if !schema.contains(&inst.label) {
                return Err(DataError::LabelNotInSchema(inst.label.clone()));
            }
        }
        Ok(Self {
            schema,
            language: language.into(),
            split,
            instances,
        })
    }

    pub fn empty(schema: TaskSchema, language: impl Into<String>, split: Split) -> Self {
        Self {
            schema,
            language: language.into(),
            split,
            instances: Vec::new(),
        }
    }

    pub fn schema(&self) -> &TaskSchema {
        &self.schema
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }
}

/// An LLM generation together with the prompt conditions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub text: String,
    pub prompted_label: String,
    pub provided_words: Vec<String>,
    #[serde(default)]
    pub backend_meta: BTreeMap<String, String>,
    #[serde(default)]
    pub relabel: Option<String>,
}

impl GeneratedInstance {
    /// The classifier label when one was assigned, else the prompted label.
    pub fn effective_label(&self) -> &str {
        self.relabel.as_deref().unwrap_or(&self.prompted_label)
    }

    /// Generation request index, when the orchestrator recorded one.
    pub fn request_id(&self) -> Option<u64> {
        self.backend_meta.get("request_id").and_then(|s| s.parse().ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// `.csv` is CSV, anything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    text: String,
    label: String,
}

/// Reads `text,label` rows in file order. The dataset gets language `und`
/// and split `train`; adjust with [`Dataset::with_language`] and
/// [`Dataset::with_split`].
pub fn load_dataset(path: &Path, schema: &TaskSchema, format: DataFormat) -> Result<Dataset, DataError> {
    let rows = read_rows(path, format)?;
    let mut instances = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.text.is_empty() {
            return Err(DataError::EmptyText(line));
        }
        if !schema.contains(&row.label) {
            return Err(DataError::UnknownLabel(line, row.label));
        }
        instances.push(LabeledInstance::new(row.text, row.label));
    }
    Ok(Dataset {
        schema: schema.clone(),
        language: "und".into(),
        split: Split::Train,
        instances,
    })
}

/// Like [`load_dataset`] but derives the class set from the labels present,
/// in order of first appearance.
pub fn load_dataset_inferring_schema(path: &Path, task_name: &str, format: DataFormat) -> Result<Dataset, DataError> {
    let rows = read_rows(path, format)?;
    let mut labels: Vec<String> = Vec::new();
    for (_, row) in &rows {
        if !labels.contains(&row.label) {
            labels.push(row.label.clone());
        }
    }
    if labels.is_empty() {
        return Err(DataError::InvalidSchema(format!("{} has no rows to infer labels from", path.display())));
    }
    let schema = TaskSchema::new(task_name, labels)?;
    load_dataset(path, &schema, format)
}

fn read_rows(path: &Path, format: DataFormat) -> Result<Vec<(usize, Row)>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    match format {
        DataFormat::Csv => read_csv_rows(BufReader::new(file), path),
        DataFormat::Jsonl => read_jsonl_rows(BufReader::new(file), path),
    }
}

fn read_csv_rows<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<(usize, Row)>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    match records.next() {
        None => return Err(DataError::MalformedRow(1)),
        Some(Err(e)) => return Err(csv_error(e, path, 1)),
        Some(Ok(header)) => {
            if header.len() != 2 || &header[0] != "text" || &header[1] != "label" {
                return Err(DataError::MalformedRow(1));
            }
        }
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, path, 0))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(DataError::MalformedRow(line));
        }
        rows.push((
            line,
            Row {
                text: record[0].to_string(),
                label: record[1].to_string(),
            },
        ));
    }
    Ok(rows)
}

fn csv_error(e: csv::Error, path: &Path, fallback_line: usize) -> DataError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        _ => DataError::MalformedRow(line),
    }
}

fn read_jsonl_rows<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(usize, Row)>, DataError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|_| DataError::MalformedRow(line_no))?;
        rows.push((line_no, row));
    }
    Ok(rows)
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        DataFormat::Csv => {
            let mut wtr = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            wtr.write_record(["text", "label"]).map_err(|e| csv_write_error(e, path))?;
            for inst in &dataset.instances {
                wtr.write_record([inst.text.as_str(), inst.label.as_str()])
                    .map_err(|e| csv_write_error(e, path))?;
            }
            wtr.flush().map_err(|e| DataError::io(path, e))?;
        }
        DataFormat::Jsonl => {
            for inst in &dataset.instances {
                write_json_line(&mut out, inst, path)?;
            }
        }
    }
    out.flush().map_err(|e| DataError::io(path, e))
}

fn csv_write_error(e: csv::Error, path: &Path) -> DataError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        other => DataError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub(crate) fn write_json_line<W: Write, T: Serialize>(out: &mut W, value: &T, path: &Path) -> Result<(), DataError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| DataError::io(path, e.into()))?;
    out.write_all(b"\n").map_err(|e| DataError::io(path, e))
}

/// Writes any serializable records as JSONL.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        write_json_line(&mut out, record, path)?;
    }
    out.flush().map_err(|e| DataError::io(path, e))
}

/// Reads JSONL records, skipping blank lines.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|_| DataError::MalformedRow(i + 1))?);
    }
    Ok(records)
}

pub fn write_generated(path: &Path, instances: &[GeneratedInstance]) -> Result<(), DataError> {
    write_jsonl(path, instances)
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedInstance>, DataError> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentiment() -> TaskSchema {
        TaskSchema::new("sentiment", ["negative", "neutral", "positive"]).unwrap()
    }

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn schema_rejects_empty_and_duplicates() {
        assert!(TaskSchema::new("t", Vec::<String>::new()).is_err());
        assert!(TaskSchema::new("t", ["a", "a"]).is_err());
        assert!(TaskSchema::new("t", ["a", ""]).is_err());
        let s = TaskSchema::new("t", ["A", "a"]).unwrap();
        assert_eq!(s.index_of("a"), Some(1));
        assert!(!s.contains("b"));
    }

    #[test]
    fn schema_json_is_validated() {
        let bad: Result<TaskSchema, _> = serde_json::from_str(r#"{"task_name":"x","labels":[]}"#);
        assert!(bad.is_err());
        let ok: TaskSchema = serde_json::from_str(r#"{"task_name":"x","labels":["p","n"]}"#).unwrap();
        assert_eq!(ok.labels(), ["p", "n"]);
    }

    #[test]
    fn header_only_csv_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "text,label\n");
        let ds = load_dataset(&path, &sentiment(), DataFormat::Csv).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn csv_keeps_file_order_and_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "text,label\n\"a, \"\"b\"\"\",positive\nplain,negative\n");
        let ds = load_dataset(&path, &sentiment(), DataFormat::Csv).unwrap();
        assert_eq!(ds.instances()[0].text, "a, \"b\"");
        assert_eq!(ds.instances()[1].label, "negative");
    }

    #[test]
    fn unknown_label_is_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.jsonl", "{\"text\":\"ok\",\"label\":\"positive\"}\n{\"text\":\"hm\",\"label\":\"happy\"}\n");
        match load_dataset(&path, &sentiment(), DataFormat::Jsonl) {
            Err(DataError::UnknownLabel(2, label)) => assert_eq!(label, "happy"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_are_case_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "text,label\nfine,Positive\n");
        assert!(matches!(load_dataset(&path, &sentiment(), DataFormat::Csv), Err(DataError::UnknownLabel(2, _))));
    }

    #[test]
    fn empty_text_and_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "text,label\n,positive\n");
        assert!(matches!(load_dataset(&path, &sentiment(), DataFormat::Csv), Err(DataError::EmptyText(2))));

        let path = write_file(&dir, "e.csv", "text,label\na,positive,extra\n");
        assert!(matches!(load_dataset(&path, &sentiment(), DataFormat::Csv), Err(DataError::MalformedRow(2))));

        let path = write_file(&dir, "f.csv", "sentence,label\na,positive\n");
        assert!(matches!(load_dataset(&path, &sentiment(), DataFormat::Csv), Err(DataError::MalformedRow(1))));

        let path = write_file(&dir, "g.jsonl", "{\"text\":\"a\"}\n");
        assert!(matches!(load_dataset(&path, &sentiment(), DataFormat::Jsonl), Err(DataError::MalformedRow(1))));
    }

    #[test]
    fn empty_dataset_saves_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        save_dataset(&Dataset::empty(sentiment(), "en", Split::Train), &path, DataFormat::Csv).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "text,label\n");
    }

    #[test]
    fn save_into_missing_directory_fails() {
        let ds = Dataset::empty(sentiment(), "en", Split::Train);
        let err = save_dataset(&ds, Path::new("/nonexistent/dir/x.csv"), DataFormat::Csv).unwrap_err();
        assert!(matches!(err, DataError::IoFailure { .. }));
    }

    #[test]
    fn inferred_schema_uses_first_appearance_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "text,label\na,b\nc,a\nd,b\n");
        let ds = load_dataset_inferring_schema(&path, "t", DataFormat::Csv).unwrap();
        assert_eq!(ds.schema().labels(), ["b", "a"]);
    }

    #[test]
    fn effective_label_prefers_relabel() {
        let mut g = GeneratedInstance {
            text: "x".into(),
            prompted_label: "positive".into(),
            provided_words: vec!["x".into()],
            backend_meta: BTreeMap::from([("request_id".to_string(), "12".to_string())]),
            relabel: None,
        };
        assert_eq!(g.effective_label(), "positive");
        assert_eq!(g.request_id(), Some(12));
        g.relabel = Some("negative".into());
        assert_eq!(g.effective_label(), "negative");
    }
}
