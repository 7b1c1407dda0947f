mod common;

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use lexforge::ctg::PromptTemplate;
use lexforge::exec::RetryPolicy;
use lexforge::filter::{label_distill, FilterOptions, FixedLabeler};
use lexforge::gen::{generate_batch, sample_prompt_specs, word_usage_rate, BatchOptions, GenParams, MockBackend, MockConfig};
use lexforge::lexicon::{canonical, BilingualLexicon};
use lexforge::rng::domain_rng;
use lexforge::synth::{decipher, run_ablation, AblationConfig};
use lexforge::translate::{translate_dataset, TokenStatus, TranslateOptions};
use lexforge::{tokenize, GeneratedInstance, TaskSchema, TokenKind};

fn sub_lexicon(lang: usize, n: usize) -> String {
    (0..n).map(|i| format!("en{lang}_{i}\t{lang}_tr{i}\n")).collect()
}

#[test]
fn seven_sub_lexicons_total_4271_entries() {
    let sizes = [611, 610, 610, 610, 610, 610, 610];
    let total: usize = sizes
        .iter()
        .enumerate()
        .map(|(lang, &n)| BilingualLexicon::parse_tsv_str(&sub_lexicon(lang, n), "en", &format!("l{lang}")).unwrap().len())
        .sum();
    assert_eq!(total, 4271);
}

#[test]
fn seven_small_sub_lexicons_total_840_pairs() {
    let mut sources = 0;
    let mut targets = 0;
    for lang in 0..7 {
        let stats = BilingualLexicon::parse_tsv_str(&sub_lexicon(lang, 120), "en", "x").unwrap().stats();
        sources += stats.num_source_words;
        targets += stats.num_distinct_target_words;
    }
    assert_eq!((sources, targets), (840, 840));
}

#[test]
fn two_translations_of_one_word() {
    let lex = BilingualLexicon::parse_tsv_str("good\tapik\ngood\tbecik\nbad\tawon\n", "en", "ban").unwrap();
    assert_eq!(lex.lookup("good").unwrap(), ["apik", "becik"]);
    assert_eq!(lex.lookup("Good").unwrap(), ["apik", "becik"]);
    assert_eq!(lex.lookup("bad").unwrap(), ["awon"]);
    assert!(lex.lookup("ugly").is_none());
}

fn big_lexicon(n: usize) -> BilingualLexicon {
    BilingualLexicon::from_pairs("en", "x", (0..n).map(|i| (format!("word{i}"), format!("t{i}")))).unwrap()
}

#[test]
fn hundred_thousand_specs_with_ten_distinct_words() {
    let lex = big_lexicon(1000);
    let schema = common::sentiment();
    let specs = sample_prompt_specs(&lex, &schema, &PromptTemplate::default(), &GenParams::default(), 100_000, &mut domain_rng(1, "t")).unwrap();
    assert_eq!(specs.len(), 100_000);
    assert!(specs.iter().all(|s| s.words.iter().collect::<HashSet<_>>().len() == 10));
}

fn mock_batch(usage: f64, count: usize, max_in_flight: usize) -> Vec<GeneratedInstance> {
    let lex = big_lexicon(500);
    let schema = common::sentiment();
    let template = PromptTemplate::default();
    let params = GenParams::default();
    let specs = sample_prompt_specs(&lex, &schema, &template, &params, count, &mut domain_rng(9, "specs")).unwrap();
    let mock = MockBackend::new(
        MockConfig {
            usage_fraction: usage,
            label_fidelity: 1.0,
            seed: 9,
            filler_vocab: vec!["filler".into(), "noise".into()],
        },
        &template,
        schema.labels(),
    );
    let options = BatchOptions {
        max_in_flight,
        retry: RetryPolicy::immediate(1),
    };
    generate_batch(&mock, &specs, &params, &options).unwrap().into_instances()
}

fn words_of(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().filter(|t| t.kind.is_lexical()).map(|t| canonical(&t.surface)).collect()
}

#[test]
fn full_usage_mock_uses_every_word_and_zero_usage_none() {
    for g in mock_batch(1.0, 200, 4) {
        let words = words_of(&g.text);
        assert!(g.provided_words.iter().all(|w| words.contains(&canonical(w))), "{}", g.text);
    }
    for g in mock_batch(0.0, 200, 4) {
        let words = words_of(&g.text);
        assert!(g.provided_words.iter().all(|w| !words.contains(&canonical(w))), "{}", g.text);
    }
}

#[test]
fn word_usage_over_two_hundred_generations() {
    assert_eq!(word_usage_rate(&mock_batch(1.0, 200, 8)).unwrap(), 1.0);
    assert_eq!(word_usage_rate(&mock_batch(0.0, 200, 8)).unwrap(), 0.0);
    // 10000 Bernoulli(0.5) draws: sd 0.005, so the band is six sd wide.
    let half = word_usage_rate(&mock_batch(0.5, 1000, 8)).unwrap();
    assert!((0.47..=0.53).contains(&half), "{half}");
}

#[test]
fn batch_output_does_not_depend_on_concurrency() {
    let one = serde_json::to_string(&mock_batch(0.7, 300, 1)).unwrap();
    let eight = serde_json::to_string(&mock_batch(0.7, 300, 8)).unwrap();
    assert_eq!(one, eight);
}

fn any_generated(labels: Vec<String>) -> impl Strategy<Value = Vec<GeneratedInstance>> {
    proptest::collection::vec(("[a-z ]{1,20}", proptest::sample::select(labels)), 0..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (text, label))| GeneratedInstance {
                text,
                prompted_label: label,
                provided_words: vec![],
                backend_meta: [("request_id".to_string(), i.to_string())].into(),
                relabel: None,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn distillation_preserves_size_and_relabels(rows in any_generated(vec!["a".into(), "b".into(), "c".into()])) {
        let schema = TaskSchema::new("t", ["a", "b", "c"]).unwrap();
        let opts = FilterOptions { max_in_flight: 4, retry: RetryPolicy::immediate(1) };
        let out = label_distill(rows.clone(), &FixedLabeler("b".into()), &schema, &opts).unwrap();
        prop_assert_eq!(out.instances.len(), rows.len());
        prop_assert!(out.instances.iter().all(|g| g.effective_label() == "b"));
        let prompted: Vec<_> = out.instances.iter().map(|g| g.prompted_label.clone()).collect();
        let original: Vec<_> = rows.iter().map(|g| g.prompted_label.clone()).collect();
        prop_assert_eq!(prompted, original);
    }
}

#[test]
fn cipher_output_decodes_back_to_translated_tokens() {
    let world = common::world(100, 50, 21);
    let out = translate_dataset(&world.dataset, world.lexicon(), 3, TranslateOptions::default());
    assert_eq!(out.trace.len(), 50);
    let mut translated = 0;
    for inst in &out.trace {
        for t in &inst.tokens {
            match t.status {
                TokenStatus::Translated => {
                    translated += 1;
                    assert_eq!(decipher(&t.surface_out).as_deref(), Some(canonical(&t.surface_in).as_str()));
                }
                TokenStatus::KeptOov => {
                    assert_eq!(t.surface_out, t.surface_in);
                    assert!(world.lexicon().lookup(&t.surface_in).is_none());
                }
                TokenStatus::NonWord => assert_eq!(t.kind, TokenKind::Punctuation),
            }
        }
    }
    assert!(translated > 0);
}

#[test]
fn conditioning_beats_task_vocabulary_and_filter_keeps_about_thirty_percent() {
    let world = common::world(200, 2000, 5);
    let conditioned = run_ablation(&world, &AblationConfig::new(vec![1000, 10_000], true, true, 8)).unwrap();
    let plain = run_ablation(&world, &AblationConfig::new(vec![1000, 10_000], false, true, 8)).unwrap();
    for (c, p) in conditioned.rows.iter().zip(&plain.rows) {
        assert!(c.utilization_rate > p.utilization_rate, "{c:?} vs {p:?}");
    }
    // 10000 Bernoulli(0.3) draws: sd ≈ 0.0046, so [0.28, 0.32] is ±4.4 sd.
    let retention = conditioned.rows[1].retention_rate;
    assert!((0.28..=0.32).contains(&retention), "{retention}");
    for run in [&conditioned, &plain] {
        assert!(run.rows[0].utilization_rate <= run.rows[1].utilization_rate);
    }
}
