use proptest::prelude::*;

use lexforge::ctg::CtgExample;
use lexforge::data::{Dataset, LabeledInstance, Split, TaskSchema};

/// Texts stress CSV quoting: commas, quotes, newlines, CRs, leading spaces,
/// and arbitrary Unicode.
pub fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "\\PC{1,40}",
        "[a-z ,\"'\\n\\r\\t]{1,30}",
        proptest::collection::vec(prop_oneof![Just(","), Just("\""), Just("\"\""), Just("\r\n"), Just(" "), Just("é"), Just("漢字"), Just("text,label")], 1..8)
            .prop_map(|parts| parts.concat()),
    ]
}

pub fn dataset() -> impl Strategy<Value = Dataset> {
    proptest::collection::btree_set("[A-Za-z_\\-é ]{1,10}", 1..5).prop_flat_map(|labels| {
        let labels: Vec<String> = labels.into_iter().collect();
        let schema = TaskSchema::new("t", labels.clone()).unwrap();
        proptest::collection::vec((text(), proptest::sample::select(labels)), 0..12).prop_map(move |rows| {
            let instances = rows.into_iter().map(|(t, l)| LabeledInstance::new(t, l)).collect();
            Dataset::new(schema.clone(), "und", Split::Train, instances).unwrap()
        })
    })
}

pub fn ctg_example() -> impl Strategy<Value = CtgExample> {
    (text(), text(), 0usize..100_000, proptest::collection::vec("\\PC{1,8}", 0..6)).prop_map(|(prompt, completion, source_index, sampled_words)| CtgExample {
        prompt,
        completion,
        source_index,
        sampled_words,
    })
}
