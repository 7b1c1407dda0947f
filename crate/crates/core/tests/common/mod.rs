#![allow(dead_code)]

pub mod strategies;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lexforge::data::{save_dataset, DataFormat, TaskSchema};
use lexforge::synth::{build_synthetic_world, SyntheticWorld, WorldConfig};

pub fn sentiment() -> TaskSchema {
    TaskSchema::new("sentiment", ["negative", "neutral", "positive"]).unwrap()
}

pub fn world(vocab: usize, corpus: usize, seed: u64) -> SyntheticWorld {
    build_synthetic_world(&WorldConfig::new(vocab, corpus), &sentiment(), seed).unwrap()
}

/// Writes `lexicon.tsv`, `task.csv`, and `schema.json` for `world` into `dir`.
pub fn write_world(world: &SyntheticWorld, dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    world.lexicon().write_tsv(&dir.join("lexicon.tsv")).unwrap();
    save_dataset(&world.dataset, &dir.join("task.csv"), DataFormat::Csv).unwrap();
    std::fs::write(dir.join("schema.json"), serde_json::to_string(world.schema()).unwrap()).unwrap();
}

/// A mock-backed pipeline config over a world written by [`write_world`].
pub fn mock_config(world_dir: &Path, output_dir: &Path, count: usize, fidelity: f64) -> serde_json::Value {
    let mut cfg = serde_json::json!({
        "seed": 42,
        "schema": world_dir.join("schema.json"),
        "lexicon": world_dir.join("lexicon.tsv"),
        "target_lang": "cipher",
        "task_data": world_dir.join("task.csv"),
        "output_dir": output_dir,
        "completion": {"kind": "mock", "usage_fraction": 0.9, "label_fidelity": fidelity},
        "count": count,
    });
    if count > 100 {
        cfg["curve_sizes"] = serde_json::json!([100, count]);
    }
    cfg
}

pub fn write_config(path: &Path, value: &serde_json::Value) -> PathBuf {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_path_buf()
}

/// Contents of every regular file under `dir`, keyed by name.
pub fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}
