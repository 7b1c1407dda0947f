use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lexforge_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    lf_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(lf_last_error_message()).to_str().unwrap().to_string() }
}

fn lexicon(tsv: &str) -> *mut LfLexicon {
    let mut lex = ptr::null_mut();
    let status = unsafe { lf_lexicon_from_tsv_str(c(tsv).as_ptr(), c("en").as_ptr(), c("xx").as_ptr(), &mut lex) };
    assert_eq!(status, LfStatus::Ok);
    lex
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(lf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn stats_lookup_and_free() {
    let lex = lexicon("dog\tmbwa\ncat\tpaka\ncat\tnyau\n");
    let mut stats = LfLexiconStats::default();
    assert_eq!(unsafe { lf_lexicon_stats(lex, &mut stats) }, LfStatus::Ok);
    assert_eq!((stats.num_source_words, stats.num_distinct_target_words), (2, 3));
    assert_eq!(stats.mean_translations_per_source, 1.5);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lf_lexicon_lookup_json(lex, c("CAT").as_ptr(), &mut out) }, LfStatus::Ok);
    assert_eq!(unsafe { take(out) }, r#"["paka","nyau"]"#);
    assert_eq!(unsafe { lf_lexicon_lookup_json(lex, c("emu").as_ptr(), &mut out) }, LfStatus::Ok);
    assert_eq!(unsafe { take(out) }, "null");
    unsafe { lf_lexicon_free(lex) };
    unsafe { lf_lexicon_free(ptr::null_mut()) };
}

#[test]
fn translate_keeps_oov_and_punctuation() {
    let lex = lexicon("the\tle\ndog\tchien\n");
    let mut out = ptr::null_mut();
    let status = unsafe { lf_translate_text(lex, c("The dog barked!").as_ptr(), 7, LF_MODE_SINGLE_TOKEN, &mut out) };
    assert_eq!(status, LfStatus::Ok);
    assert_eq!(unsafe { take(out) }, "Le chien barked!");

    let status = unsafe { lf_translate_text(lex, c("x").as_ptr(), 7, 9, &mut out) };
    assert_eq!(status, LfStatus::InvalidArgument);
    assert!(last_error().contains("mode"));
    unsafe { lf_lexicon_free(lex) };
}

#[test]
fn tokenize_json_round_trips_fields() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lf_tokenize_json(c("I'm tired, boss.").as_ptr(), &mut out) }, LfStatus::Ok);
    let tokens: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
    let surfaces: Vec<&str> = tokens.as_array().unwrap().iter().map(|t| t["surface"].as_str().unwrap()).collect();
    assert_eq!(surfaces, ["I'm", "tired", ",", "boss", "."]);
}

#[test]
fn error_codes_and_messages() {
    let mut lex = ptr::null_mut();
    let status = unsafe { lf_lexicon_from_tsv_str(c("only-one-column\n").as_ptr(), c("en").as_ptr(), c("xx").as_ptr(), &mut lex) };
    assert_eq!(status, LfStatus::Parse);
    assert!(lex.is_null());
    assert!(!last_error().is_empty());

    let status = unsafe { lf_lexicon_load(c("/nonexistent/lex.tsv").as_ptr(), c("en").as_ptr(), c("xx").as_ptr(), &mut lex) };
    assert_eq!(status, LfStatus::Io);

    let status = unsafe { lf_lexicon_load(ptr::null(), c("en").as_ptr(), c("xx").as_ptr(), &mut lex) };
    assert_eq!(status, LfStatus::NullPointer);

    let bad = [0xffu8, 0];
    let status = unsafe { lf_tokenize_json(bad.as_ptr().cast(), &mut ptr::null_mut()) };
    assert_eq!(status, LfStatus::InvalidUtf8);

    let mut stats = LfLexiconStats::default();
    assert_eq!(unsafe { lf_lexicon_stats(ptr::null(), &mut stats) }, LfStatus::NullPointer);

    // A success clears the message.
    let lex = lexicon("a\tb\n");
    assert_eq!(last_error(), "");
    unsafe { lf_lexicon_free(lex) };
}

#[test]
fn pipeline_config_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 1, "schema": {"task_name": "t", "labels": ["a", "b"]}, "lexicon": "missing.tsv",
            "target_lang": "xx", "output_dir": "out", "completion": {"kind": "mock"}, "count": 3}"#,
    )
    .unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { lf_pipeline_run(c(cfg.to_str().unwrap()).as_ptr(), &mut out) };
    assert_eq!(status, LfStatus::Config);
    let body: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
    assert_eq!(body["error"]["kind"], "config_invalid");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pipeline_runs_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let words: String = (0..30).map(|i| format!("w{i}\tt{i}\n")).collect();
    std::fs::write(dir.path().join("lex.tsv"), words).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "schema": {"task_name": "t", "labels": ["a", "b"]}, "lexicon": "lex.tsv",
            "target_lang": "xx", "output_dir": "out", "completion": {"kind": "mock"}, "count": 40}"#,
    )
    .unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { lf_pipeline_run(c(cfg.to_str().unwrap()).as_ptr(), &mut out) };
    assert_eq!(status, LfStatus::Ok, "{}", last_error());
    let body: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
    assert_eq!(body["counts"]["generated"], 40);
    assert_eq!(body["counts"]["kept"], 40);
    assert!(dir.path().join("out/manifest.json").is_file());
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/lexforge.h");
    assert!(header.is_file(), "header not generated");
    let Ok(cc) = which_cc() else {
        panic!("no C compiler on PATH");
    };
    let lib_dir = crate_dir.join("../../target/debug");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "lexforge.h"
int main(void) {
    LfLexicon *lex = NULL;
    if (lf_lexicon_from_tsv_str("dog\tmbwa\n", "en", "sw", &lex) != LF_STATUS_OK) return 1;
    char *out = NULL;
    if (lf_translate_text(lex, "Dog!", 1, LF_MODE_SINGLE_TOKEN, &out) != LF_STATUS_OK) return 2;
    int ok = strcmp(out, "Mbwa!") == 0;
    lf_string_free(out);
    lf_lexicon_free(lex);
    if (lf_lexicon_from_tsv_str("bad\n", "en", "sw", &lex) != LF_STATUS_PARSE) return 3;
    if (strlen(lf_last_error_message()) == 0) return 4;
    return ok ? 0 : 5;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(lib_dir.join("liblexforge_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).status().unwrap();
    assert_eq!(run.code(), Some(0));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
