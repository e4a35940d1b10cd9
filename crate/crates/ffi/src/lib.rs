//! C ABI over `sqlfix-core`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`SqlfixStatus`]. On failure a
//!   message is available from [`sqlfix_last_error`] on the same thread.
//! * Handles (`SqlfixLineDiff`, `SqlfixTaxonomy`) are opaque, created by a
//!   `*_new`/`*_from_*` function and released with the matching `*_free`.
//! * Strings returned through `char **` out-parameters are owned by the
//!   caller and must be released with [`sqlfix_string_free`].
//! * Input strings are NUL-terminated UTF-8.
//! * Panics never cross the boundary; they surface as
//!   `SQLFIX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sqlfix_core::dmsft::{compute_line_diff, masked_loss, sample_mask, MaskRatio};
use sqlfix_core::eval::{judge, EvalCase, Verdict};
use sqlfix_core::model::{CategoryPath, LineClass, LineDiff};
use sqlfix_core::prompt::render_bug_fix_prompt;
use sqlfix_core::sql::Dialect;
use sqlfix_core::taxonomy::Taxonomy;

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlfixStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    Panic = 5,
}

/// Line class codes used in class arrays.
#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlfixLineClass {
    Consistent = 0,
    Diff = 1,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlfixVerdict {
    Equivalent = 0,
    Different = 1,
    PredictionParseError = 2,
}

/// Masked loss split into consistent-line and diff-line parts.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SqlfixLoss {
    pub l1: f64,
    pub l2: f64,
    pub total: f64,
    pub per_token: f64,
    pub unmasked_token_count: usize,
}

/// Line diff of a correct SQL against its bug SQL.
pub struct SqlfixLineDiff {
    inner: LineDiff,
}

/// Compiled classification rules.
pub struct SqlfixTaxonomy {
    inner: Taxonomy,
}

struct Failure {
    status: SqlfixStatus,
    message: String,
}

impl Failure {
    fn new(status: SqlfixStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SqlfixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqlfixStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {what}"));
            SqlfixStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::new(SqlfixStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure::new(
            SqlfixStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn str_array(
    p: *const *const c_char,
    len: usize,
    name: &str,
) -> Result<Vec<String>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null(name));
    }
    std::slice::from_raw_parts(p, len)
        .iter()
        .enumerate()
        .map(|(i, &s)| str_arg(s, &format!("{name}[{i}]")).map(str::to_owned))
        .collect()
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s)
        .map_err(|_| Failure::new(SqlfixStatus::InvalidArgument, "result contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn class_code(c: LineClass) -> u8 {
    match c {
        LineClass::Consistent => SqlfixLineClass::Consistent as u8,
        LineClass::Diff => SqlfixLineClass::Diff as u8,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqlfix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sqlfix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Computes the line diff of `correct_sql` against `bug_sql`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_line_diff_new(
    bug_sql: *const c_char,
    correct_sql: *const c_char,
    out: *mut *mut SqlfixLineDiff,
) -> SqlfixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bug = str_arg(bug_sql, "bug_sql")?;
        let correct = str_arg(correct_sql, "correct_sql")?;
        let diff = Box::new(SqlfixLineDiff {
            inner: compute_line_diff(bug, correct),
        });
        *out = Box::into_raw(diff);
        Ok(())
    })
}

/// # Safety
/// `diff` must come from [`sqlfix_line_diff_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_line_diff_free(diff: *mut SqlfixLineDiff) {
    if !diff.is_null() {
        drop(Box::from_raw(diff));
    }
}

/// Writes the number of correct-SQL lines and how many of them are diff
/// lines. Either out-pointer may be NULL.
///
/// # Safety
/// `diff` must be a live handle; non-NULL out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_line_diff_counts(
    diff: *const SqlfixLineDiff,
    out_lines: *mut usize,
    out_diff_lines: *mut usize,
) -> SqlfixStatus {
    guard(|| {
        let d = &diff.as_ref().ok_or_else(|| null("diff"))?.inner;
        if !out_lines.is_null() {
            *out_lines = d.len();
        }
        if !out_diff_lines.is_null() {
            *out_diff_lines = d.diff_line_count();
        }
        Ok(())
    })
}

/// Writes one `SqlfixLineClass` code per line into `out`, which must hold
/// exactly the line count.
///
/// # Safety
/// `out` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_line_diff_classes(
    diff: *const SqlfixLineDiff,
    out: *mut u8,
    len: usize,
) -> SqlfixStatus {
    guard(|| {
        let d = &diff.as_ref().ok_or_else(|| null("diff"))?.inner;
        if len != d.len() {
            return Err(Failure::new(
                SqlfixStatus::InvalidArgument,
                format!("buffer holds {len} entries, diff has {} lines", d.len()),
            ));
        }
        if len > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, c) in d.classes().enumerate() {
            *out.add(i) = class_code(c);
        }
        Ok(())
    })
}

/// Samples the line mask for mask ratio `p` and `seed`, writing one weight
/// (0 or 1) per line into `out`, which must hold exactly the line count.
///
/// # Safety
/// `out` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_line_diff_mask(
    diff: *const SqlfixLineDiff,
    p: f64,
    seed: u64,
    out: *mut u8,
    len: usize,
) -> SqlfixStatus {
    guard(|| {
        let d = &diff.as_ref().ok_or_else(|| null("diff"))?.inner;
        let ratio = MaskRatio::new(p)
            .map_err(|e| Failure::new(SqlfixStatus::InvalidArgument, e.to_string()))?;
        if len != d.len() {
            return Err(Failure::new(
                SqlfixStatus::InvalidArgument,
                format!("buffer holds {len} entries, diff has {} lines", d.len()),
            ));
        }
        if len > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, w) in sample_mask(d, ratio, seed).line_mask.iter().enumerate() {
            *out.add(i) = w.weight;
        }
        Ok(())
    })
}

/// Masked loss over `n` tokens. `classes` holds `SqlfixLineClass` codes.
///
/// # Safety
/// Each array must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_masked_loss(
    logprobs: *const f64,
    weights: *const u8,
    classes: *const u8,
    n: usize,
    out: *mut SqlfixLoss,
) -> SqlfixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lps = slice_arg(logprobs, n, "logprobs")?;
        let ws = slice_arg(weights, n, "weights")?;
        let cls = slice_arg(classes, n, "classes")?
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                0 => Ok(LineClass::Consistent),
                1 => Ok(LineClass::Diff),
                other => Err(Failure::new(
                    SqlfixStatus::InvalidArgument,
                    format!("classes[{i}] = {other}; expected 0 or 1"),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let b = masked_loss(lps, ws, &cls)
            .map_err(|e| Failure::new(SqlfixStatus::InvalidArgument, e.to_string()))?;
        *out = SqlfixLoss {
            l1: b.l1,
            l2: b.l2,
            total: b.total,
            per_token: b.per_token,
            unmasked_token_count: b.unmasked_token_count,
        };
        Ok(())
    })
}

/// Compiles a taxonomy from its TOML text.
///
/// # Safety
/// `toml` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_taxonomy_from_toml(
    toml: *const c_char,
    out: *mut *mut SqlfixTaxonomy,
) -> SqlfixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(toml, "toml")?;
        let inner = Taxonomy::from_toml_str(text)
            .map_err(|e| Failure::new(SqlfixStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(SqlfixTaxonomy { inner }));
        Ok(())
    })
}

/// # Safety
/// `taxonomy` must come from [`sqlfix_taxonomy_from_toml`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_taxonomy_free(taxonomy: *mut SqlfixTaxonomy) {
    if !taxonomy.is_null() {
        drop(Box::from_raw(taxonomy));
    }
}

/// Classifies a bug and writes its path as `"level1 / level2 / level3"`.
///
/// # Safety
/// `taxonomy` must be a live handle; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_taxonomy_classify(
    taxonomy: *const SqlfixTaxonomy,
    error_message: *const c_char,
    bug_sql: *const c_char,
    out: *mut *mut c_char,
) -> SqlfixStatus {
    guard(|| {
        let t = &taxonomy.as_ref().ok_or_else(|| null("taxonomy"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let path = t.classify(
            str_arg(error_message, "error_message")?,
            str_arg(bug_sql, "bug_sql")?,
        );
        out_string(out, path.to_string())
    })
}

/// Judges `prediction` against `n` ground truths by normalized AST equality.
/// `dialect` may be NULL for the default (spark). When `out_detail` is not
/// NULL it receives the difference summary or parse error, or NULL for an
/// equivalent prediction.
///
/// # Safety
/// `ground_truths` must hold `n` NUL-terminated strings; out-pointers must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_judge(
    prediction: *const c_char,
    ground_truths: *const *const c_char,
    n: usize,
    dialect: *const c_char,
    out_verdict: *mut SqlfixVerdict,
    out_detail: *mut *mut c_char,
) -> SqlfixStatus {
    guard(|| {
        if out_verdict.is_null() {
            return Err(null("out_verdict"));
        }
        let prediction = str_arg(prediction, "prediction")?;
        let truths = str_array(ground_truths, n, "ground_truths")?;
        let dialect = if dialect.is_null() {
            Dialect::default()
        } else {
            str_arg(dialect, "dialect")?
                .parse::<Dialect>()
                .map_err(|e| Failure::new(SqlfixStatus::InvalidArgument, e))?
        };
        let case = EvalCase {
            id: String::new(),
            schema_ddl: Vec::new(),
            bug_sql: String::new(),
            error_message: String::new(),
            ground_truths: truths,
            category: CategoryPath::unclassified(),
        };
        let verdict = judge(prediction, &case, dialect).map_err(|e| {
            Failure::new(
                SqlfixStatus::ParseError,
                format!("invalid ground truth: {}", e.0),
            )
        })?;
        let (code, detail) = match verdict {
            Verdict::Equivalent => (SqlfixVerdict::Equivalent, None),
            Verdict::Different { summary } => (SqlfixVerdict::Different, Some(summary)),
            Verdict::PredictionParseError { message } => {
                (SqlfixVerdict::PredictionParseError, Some(message))
            }
        };
        *out_verdict = code;
        if !out_detail.is_null() {
            match detail {
                Some(d) => out_string(out_detail, d)?,
                None => *out_detail = ptr::null_mut(),
            }
        }
        Ok(())
    })
}

/// Renders the bug-fixing model input for one bug.
///
/// # Safety
/// `schema_ddl` must hold `n_schema` NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqlfix_render_fix_prompt(
    schema_ddl: *const *const c_char,
    n_schema: usize,
    bug_sql: *const c_char,
    error_message: *const c_char,
    out: *mut *mut c_char,
) -> SqlfixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ddl = str_array(schema_ddl, n_schema, "schema_ddl")?;
        let prompt = render_bug_fix_prompt(
            &ddl,
            str_arg(bug_sql, "bug_sql")?,
            str_arg(error_message, "error_message")?,
        );
        out_string(out, prompt)
    })
}
