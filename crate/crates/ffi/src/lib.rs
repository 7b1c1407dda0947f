//! C ABI over the lexforge library.
//!
//! Conventions:
//! - Every fallible function returns an [`LfStatus`]; on anything but
//!   `LF_STATUS_OK` the message is available from [`lf_last_error_message`]
//!   on the same thread.
//! - Strings handed out through `char **out` parameters are owned by the
//!   caller and must be released with [`lf_string_free`].
//! - [`LfLexicon`] is opaque; create it with [`lf_lexicon_load`] or
//!   [`lf_lexicon_from_tsv_str`] and release it with [`lf_lexicon_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lexforge::lexicon::{parse_lexicon_tsv, BilingualLexicon};
use lexforge::pipeline::{run_pipeline, ErrorKind, PipelineConfig};
use lexforge::rng::stream_rng;
use lexforge::translate::{translate_instance, TranslateOptions, TranslationMode};
use lexforge::{tokenize, LabeledInstance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Config = 6,
    BackendUnreachable = 7,
    Data = 8,
    Panic = 99,
}

/// Opaque lexicon handle.
pub struct LfLexicon {
    inner: BilingualLexicon,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LfLexiconStats {
    pub num_source_words: usize,
    pub num_distinct_target_words: usize,
    pub mean_translations_per_source: f64,
}

pub const LF_MODE_SINGLE_TOKEN: u32 = 0;
pub const LF_MODE_LONGEST_MATCH: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(LfStatus, String);

type FfiResult<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> LfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LfStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside lexforge");
            LfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Fail(LfStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LfStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn lexicon_arg<'a>(p: *const LfLexicon) -> FfiResult<&'a BilingualLexicon> {
    p.as_ref()
        .map(|l| &l.inner)
        .ok_or_else(|| Fail(LfStatus::NullPointer, "lexicon is NULL".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail(LfStatus::NullPointer, "output pointer is NULL".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| Fail(LfStatus::Data, "output contains a NUL byte".into()))?;
    put(out, c.into_raw())
}

fn lexicon_failure(e: lexforge::lexicon::LexiconError) -> Fail {
    let status = match e {
        lexforge::lexicon::LexiconError::IoFailure { .. } => LfStatus::Io,
        _ => LfStatus::Parse,
    };
    Fail(status, e.to_string())
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn lf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next lexforge call on this thread. Do not free.
#[no_mangle]
pub extern "C" fn lf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn lf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a `source<TAB>target` lexicon file.
///
/// # Safety
/// String arguments must be NULL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_load(path: *const c_char, source_lang: *const c_char, target_lang: *const c_char, out: *mut *mut LfLexicon) -> LfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let src = str_arg(source_lang, "source_lang")?;
        let tgt = str_arg(target_lang, "target_lang")?;
        let inner = parse_lexicon_tsv(Path::new(path), src, tgt).map_err(lexicon_failure)?;
        put(out, Box::into_raw(Box::new(LfLexicon { inner })))
    })
}

/// # Safety
/// String arguments must be NULL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_from_tsv_str(tsv: *const c_char, source_lang: *const c_char, target_lang: *const c_char, out: *mut *mut LfLexicon) -> LfStatus {
    guard(|| {
        let tsv = str_arg(tsv, "tsv")?;
        let src = str_arg(source_lang, "source_lang")?;
        let tgt = str_arg(target_lang, "target_lang")?;
        let inner = BilingualLexicon::parse_tsv_str(tsv, src, tgt).map_err(lexicon_failure)?;
        put(out, Box::into_raw(Box::new(LfLexicon { inner })))
    })
}

/// # Safety
/// `lexicon` must be NULL or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_free(lexicon: *mut LfLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// # Safety
/// `lexicon` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_stats(lexicon: *const LfLexicon, out: *mut LfLexiconStats) -> LfStatus {
    guard(|| {
        let s = lexicon_arg(lexicon)?.stats();
        put(
            out,
            LfLexiconStats {
                num_source_words: s.num_source_words,
                num_distinct_target_words: s.num_distinct_target_words,
                mean_translations_per_source: s.mean_translations_per_source,
            },
        )
    })
}

/// Translations of `word` as a JSON array, or `null` when absent.
///
/// # Safety
/// `lexicon` must be a live handle; `word` NULL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_lookup_json(lexicon: *const LfLexicon, word: *const c_char, out: *mut *mut c_char) -> LfStatus {
    guard(|| {
        let lex = lexicon_arg(lexicon)?;
        let word = str_arg(word, "word")?;
        put_string(out, serde_json::to_string(&lex.lookup(word)).expect("serializable"))
    })
}

/// Tokens of `text` as a JSON array of `{surface, kind, space_before}`.
///
/// # Safety
/// `text` must be NULL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lf_tokenize_json(text: *const c_char, out: *mut *mut c_char) -> LfStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        put_string(out, serde_json::to_string(&tokenize(text)).expect("serializable"))
    })
}

/// Word-for-word translation of one text. `mode` is
/// `LF_MODE_SINGLE_TOKEN` or `LF_MODE_LONGEST_MATCH`.
///
/// # Safety
/// `lexicon` must be a live handle; `text` NULL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lf_translate_text(lexicon: *const LfLexicon, text: *const c_char, seed: u64, mode: u32, out: *mut *mut c_char) -> LfStatus {
    guard(|| {
        let lex = lexicon_arg(lexicon)?;
        let text = str_arg(text, "text")?;
        let mode = match mode {
            LF_MODE_SINGLE_TOKEN => TranslationMode::SingleToken,
            LF_MODE_LONGEST_MATCH => TranslationMode::LongestMatch,
            other => return Err(Fail(LfStatus::InvalidArgument, format!("unknown translation mode {other}"))),
        };
        let options = TranslateOptions {
            mode,
            ..Default::default()
        };
        let instance = LabeledInstance::new(text, "");
        let translated = translate_instance(&instance, lex, &mut stream_rng(seed, "translate", 0), options);
        put_string(out, translated.text_out)
    })
}

/// Runs the whole pipeline from a JSON config file. On success `out`
/// receives `{"output_dir", "counts"}`; on failure it receives the
/// `{"error": {...}}` object. `out` may be NULL.
///
/// # Safety
/// `config_path` must be NULL-terminated; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lf_pipeline_run(config_path: *const c_char, out: *mut *mut c_char) -> LfStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        let result = PipelineConfig::from_file(Path::new(path)).and_then(|mut c| {
            c.apply_env_overrides();
            run_pipeline(&c)
        });
        let (body, failure) = match result {
            Ok(o) => (serde_json::json!({"output_dir": o.output_dir, "counts": o.manifest.counts}), None),
            Err(e) => {
                let status = match e.kind {
                    ErrorKind::ConfigInvalid => LfStatus::Config,
                    ErrorKind::BackendUnreachable => LfStatus::BackendUnreachable,
                    ErrorKind::Data => LfStatus::Data,
                };
                (e.to_json(), Some(Fail(status, e.to_string())))
            }
        };
        if !out.is_null() {
            put_string(out, body.to_string())?;
        }
        failure.map_or(Ok(()), Err)
    })
}
