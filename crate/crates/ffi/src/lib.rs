//! C ABI over the clipseek engine.
//!
//! Every function returns a [`ClipseekStatus`]; on failure the message is
//! available from [`clipseek_last_error_message`] on the same thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`clipseek_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use clipseek::classifier::{QueryLabel, QuoteRuleSet};
use clipseek::engine::{Engine, METHODS_FILE};
use clipseek::Error;

/// Opaque engine handle.
pub struct ClipseekEngine {
    engine: Engine,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipseekStatus {
    Ok = 0,
    /// Null pointer or non-UTF-8 string argument.
    InvalidArgument = 1,
    Validation = 2,
    UnknownMethod = 3,
    NotBound = 4,
    Unencodable = 5,
    Config = 6,
    Io = 7,
    Internal = 8,
}

pub const CLIPSEEK_LABEL_QUOTE_SPEECH: i32 = 0;
pub const CLIPSEEK_LABEL_VISUAL: i32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> ClipseekStatus {
    match e {
        Error::Validation(_) | Error::DimensionMismatch { .. } | Error::Diverged { .. } => ClipseekStatus::Validation,
        Error::UnknownMethod(_) => ClipseekStatus::UnknownMethod,
        Error::NotBound(_) => ClipseekStatus::NotBound,
        Error::Unencodable => ClipseekStatus::Unencodable,
        Error::Config(_) => ClipseekStatus::Config,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => ClipseekStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus a thread-local
/// message.
fn guard(f: impl FnOnce() -> Result<(), (ClipseekStatus, String)>) -> ClipseekStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClipseekStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ClipseekStatus::Internal
        }
    }
}

fn fail(e: Error) -> (ClipseekStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (ClipseekStatus, String)> {
    if p.is_null() {
        return Err((ClipseekStatus::InvalidArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ClipseekStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Opens an engine from a `methods.json` file or a directory containing one.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clipseek_engine_open(path: *const c_char, out: *mut *mut ClipseekEngine) -> ClipseekStatus {
    guard(|| {
        if out.is_null() {
            return Err((ClipseekStatus::InvalidArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = Path::new(arg_str(path, "path")?);
        let config = if path.is_dir() { path.join(METHODS_FILE) } else { path.to_owned() };
        if !config.exists() {
            return Err((
                ClipseekStatus::Config,
                format!("missing artifact: {}", config.display()),
            ));
        }
        let engine = Engine::open(&config).map_err(fail)?;
        *out = Box::into_raw(Box::new(ClipseekEngine { engine }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`clipseek_engine_open`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn clipseek_engine_free(engine: *mut ClipseekEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of clips in the engine's corpus, or 0 for a null handle.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn clipseek_corpus_size(engine: *const ClipseekEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.engine.corpus().len())
}

/// Runs a routed search and returns the response as JSON, the same body the
/// HTTP `/search` endpoint serves. `k = 0` selects the default of 3.
///
/// # Safety
/// Pointers must be valid; `out_json` receives a string to free with
/// [`clipseek_string_free`].
#[no_mangle]
pub unsafe extern "C" fn clipseek_search_json(
    engine: *const ClipseekEngine,
    method: *const c_char,
    query: *const c_char,
    k: u32,
    out_json: *mut *mut c_char,
) -> ClipseekStatus {
    guard(|| {
        if out_json.is_null() {
            return Err((ClipseekStatus::InvalidArgument, "out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let engine = engine
            .as_ref()
            .ok_or((ClipseekStatus::InvalidArgument, "engine is null".to_owned()))?;
        let method = arg_str(method, "method")?;
        let query = arg_str(query, "query")?;
        let k = (k > 0).then_some(k as usize);
        let resp = engine.engine.search(method, query, k).map_err(fail)?;
        let json = serde_json::to_string(&resp).map_err(|e| fail(e.into()))?;
        *out_json = out_string(json);
        Ok(())
    })
}

/// Query type under the engine's routing policy (the trained classifier if
/// bound, the quote rules otherwise).
///
/// # Safety
/// Pointers must be valid; `out_confidence` may be null.
#[no_mangle]
pub unsafe extern "C" fn clipseek_classify(
    engine: *const ClipseekEngine,
    query: *const c_char,
    out_label: *mut i32,
    out_confidence: *mut f64,
) -> ClipseekStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or((ClipseekStatus::InvalidArgument, "engine is null".to_owned()))?;
        if out_label.is_null() {
            return Err((ClipseekStatus::InvalidArgument, "out_label is null".into()));
        }
        let class = engine.engine.classify(arg_str(query, "query")?);
        *out_label = label_code(class.label);
        if !out_confidence.is_null() {
            *out_confidence = class.confidence;
        }
        Ok(())
    })
}

fn label_code(l: QueryLabel) -> i32 {
    match l {
        QueryLabel::QuoteSpeech => CLIPSEEK_LABEL_QUOTE_SPEECH,
        QueryLabel::Visual => CLIPSEEK_LABEL_VISUAL,
    }
}

/// Quote-rule label of `text`: 0 quote/speech, 1 visual, -1 on a bad
/// argument.
///
/// # Safety
/// `text` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn clipseek_rule_label(text: *const c_char) -> i32 {
    match arg_str(text, "text") {
        Ok(t) => {
            static RULES: OnceLock<QuoteRuleSet> = OnceLock::new();
            label_code(RULES.get_or_init(QuoteRuleSet::standard).label(t))
        }
        Err((_, msg)) => {
            set_error(msg);
            -1
        }
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clipseek_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn clipseek_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();

#[no_mangle]
pub extern "C" fn clipseek_version() -> *const c_char {
    VERSION.as_ptr().cast()
}
