//! C ABI for the lexdur core.
//!
//! Every entry point returns a [`LexdurStatus`]; results go through out
//! pointers. On failure, [`lexdur_last_error`] describes the most recent
//! error on the calling thread. Objects are opaque handles released with
//! their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexdur::corpus::{parse_embeddings, EmbeddingTable};
use lexdur::ml::{fit_forest, ForestModel, ForestParams};
use lexdur::semrel::{self, ContextWindow, WindowOptions};
use lexdur::stats::{self, assemble_design, fit_lmm_reml, FixedInput, LmmFit, ModelFormula};
use lexdur::Error;

/// Result of every call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexdurStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    Empty = 6,
    Invalid = 7,
    UnknownFeature = 8,
    Formula = 9,
    Unsupported = 10,
    Numerical = 11,
    Convergence = 12,
    NotComparable = 13,
    Config = 14,
    Undefined = 15,
    Panic = 99,
}

impl LexdurStatus {
    fn of(e: &Error) -> Self {
        match e.code() {
            "E_IO" => LexdurStatus::Io,
            "E_PARSE" => LexdurStatus::Parse,
            "E_SCHEMA" => LexdurStatus::Schema,
            "E_EMPTY" => LexdurStatus::Empty,
            "E_UNKNOWN_FEATURE" => LexdurStatus::UnknownFeature,
            "E_FORMULA" => LexdurStatus::Formula,
            "E_UNSUPPORTED" => LexdurStatus::Unsupported,
            "E_NUMERICAL" => LexdurStatus::Numerical,
            "E_CONVERGENCE" => LexdurStatus::Convergence,
            "E_NOT_COMPARABLE" => LexdurStatus::NotComparable,
            "E_CONFIG" => LexdurStatus::Config,
            _ => LexdurStatus::Invalid,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(LexdurStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(LexdurStatus::of(&e), format!("{}: {e}", e.code()))
    }
}

fn null(what: &str) -> Fail {
    Fail(LexdurStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> LexdurStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LexdurStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LexdurStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LexdurStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn rows(x: &[f64], n_rows: usize, n_cols: usize) -> Result<Vec<Vec<f64>>, Fail> {
    if n_rows.checked_mul(n_cols) != Some(x.len()) {
        return Err(Fail(LexdurStatus::Invalid, "matrix size mismatch".into()));
    }
    Ok(x.chunks(n_cols.max(1)).take(n_rows).map(<[f64]>::to_vec).collect())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lexdur_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lexdur_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Proximity weight of a context pair at distances `d_i` and `d_j` from the target.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn lexdur_pair_weight(d_i: u32, d_j: u32, out: *mut f64) -> LexdurStatus {
    guard(|| unsafe { put(out, semrel::pair_weight(d_i, d_j), "out") })
}

/// The same weight as an exact reduced fraction.
///
/// # Safety
/// `numer` and `denom` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_pair_weight_exact(d_i: u32, d_j: u32, numer: *mut u32, denom: *mut u32) -> LexdurStatus {
    guard(|| unsafe {
        let w = semrel::pair_weight_exact(d_i, d_j);
        put(numer, *w.numer(), "numer")?;
        put(denom, *w.denom(), "denom")
    })
}

/// Cosine similarity of two vectors of length `len`.
///
/// # Safety
/// `u` and `v` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_cosine(u: *const f64, v: *const f64, len: usize, out: *mut f64) -> LexdurStatus {
    guard(|| unsafe {
        let c = semrel::cosine_similarity(slice(u, len, "u")?, slice(v, len, "v")?)?;
        put(out, c, "out")
    })
}

/// Pearson correlation. Returns `Undefined` when either input is constant.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> LexdurStatus {
    guard(|| unsafe {
        match stats::pearson(slice(x, n, "x")?, slice(y, n, "y")?)? {
            Some(r) => put(out, r, "out"),
            None => Err(Fail(LexdurStatus::Undefined, "correlation undefined for a constant column".into())),
        }
    })
}

/// Opaque word-embedding table.
pub struct LexdurEmbeddings(EmbeddingTable);

/// Loads a whitespace-separated embedding file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_embeddings_load(path: *const c_char, out: *mut *mut LexdurEmbeddings) -> LexdurStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = Path::new(text(path, "path")?);
        let file = File::open(path).map_err(|e| Fail(LexdurStatus::Io, format!("E_IO: {}: {e}", path.display())))?;
        let table = parse_embeddings(BufReader::new(file), None)?;
        *out = Box::into_raw(Box::new(LexdurEmbeddings(table)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`lexdur_embeddings_load`] and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lexdur_embeddings_free(handle: *mut LexdurEmbeddings) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live embeddings handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_embeddings_dimension(handle: *const LexdurEmbeddings, out: *mut usize) -> LexdurStatus {
    guard(|| unsafe {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        put(out, h.0.dimension(), "out")
    })
}

/// Semantic relevance of `target` given its preceding words (nearest last),
/// using at most `window` of them.
///
/// # Safety
/// `context` must point to `n_context` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn lexdur_semantic_relevance(
    handle: *const LexdurEmbeddings,
    target: *const c_char,
    context: *const *const c_char,
    n_context: usize,
    window: usize,
    out: *mut f64,
) -> LexdurStatus {
    guard(|| unsafe {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let target = text(target, "target")?;
        let words = slice(context, n_context, "context")?
            .iter()
            .map(|&p| text(p, "context word"))
            .collect::<Result<Vec<_>, _>>()?;
        let opts = WindowOptions {
            size: window,
            ..WindowOptions::default()
        };
        let w = ContextWindow::new(target, &words, window);
        put(out, semrel::semantic_relevance(&w, &h.0, &opts).score, "out")
    })
}

/// Opaque random-forest classifier.
pub struct LexdurForest(ForestModel);

/// Fits a forest on a row-major `n_rows × n_cols` matrix with labels in
/// `0..n_classes`. `max_depth` 0 means unlimited.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` labels; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_forest_fit(
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const usize,
    n_classes: usize,
    n_estimators: usize,
    max_depth: usize,
    seed: u64,
    out: *mut *mut LexdurForest,
) -> LexdurStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let x = rows(slice(x, n_rows * n_cols, "x")?, n_rows, n_cols)?;
        let y = slice(y, n_rows, "y")?;
        let params = ForestParams {
            n_estimators,
            max_depth: (max_depth > 0).then_some(max_depth),
            ..ForestParams::default()
        };
        let model = fit_forest(&x, y, n_classes, &params, seed)?;
        *out = Box::into_raw(Box::new(LexdurForest(model)));
        Ok(())
    })
}

/// Predicts a class per row into `out` (`n_rows` entries).
///
/// # Safety
/// `handle` must be live; `x` must hold `n_rows * n_cols` doubles and `out`
/// room for `n_rows` labels.
#[no_mangle]
pub unsafe extern "C" fn lexdur_forest_predict(
    handle: *const LexdurForest,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut usize,
) -> LexdurStatus {
    guard(|| unsafe {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if n_cols != h.0.n_features {
            return Err(Fail(
                LexdurStatus::Invalid,
                format!("expected {} columns, got {n_cols}", h.0.n_features),
            ));
        }
        let x = rows(slice(x, n_rows * n_cols, "x")?, n_rows, n_cols)?;
        if n_rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, c) in h.0.predict(&x).into_iter().enumerate() {
            out.add(i).write(c);
        }
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`lexdur_forest_fit`].
#[no_mangle]
pub unsafe extern "C" fn lexdur_forest_free(handle: *mut LexdurForest) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Opaque linear mixed model fit.
pub struct LexdurLmm(LmmFit);

/// REML fit of `y ~ 1 + x1 + … + xp + (1|group)` with `x` row-major
/// `n × p` (no intercept column) and integer group codes.
///
/// # Safety
/// `y` and `group` must hold `n` values, `x` `n * p`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexdur_lmm_fit(
    y: *const f64,
    n: usize,
    x: *const f64,
    p: usize,
    group: *const u32,
    out: *mut *mut LexdurLmm,
) -> LexdurStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let y = slice(y, n, "y")?;
        let x = slice(x, n * p, "x")?;
        let g: Vec<String> = slice(group, n, "group")?.iter().map(|v| v.to_string()).collect();
        let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        let cols: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| x[i * p + j]).collect()).collect();
        let fixed: Vec<FixedInput<'_>> = names
            .iter()
            .zip(&cols)
            .map(|(name, c)| FixedInput::Numeric(name, c))
            .collect();
        let formula = ModelFormula {
            response: "y".into(),
            fixed: names.clone(),
            smooth: vec![],
            random: vec!["group".into()],
        };
        let design = assemble_design(formula, y, &fixed, &[], &[("group", &g)])?;
        *out = Box::into_raw(Box::new(LexdurLmm(fit_lmm_reml(&design)?)));
        Ok(())
    })
}

/// Residual variance, group variance, AIC and the fixed effects (intercept
/// first, `p + 1` values written to `beta` when it is non-null).
///
/// # Safety
/// `handle` must be live; non-null outputs must be writable, `beta` for
/// `p + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn lexdur_lmm_summary(
    handle: *const LexdurLmm,
    sigma2_e: *mut f64,
    sigma2_group: *mut f64,
    aic: *mut f64,
    beta: *mut f64,
) -> LexdurStatus {
    guard(|| unsafe {
        let h = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        put(sigma2_e, h.sigma2_e, "sigma2_e")?;
        put(sigma2_group, h.variance_components[0].variance, "sigma2_group")?;
        put(aic, h.aic, "aic")?;
        if !beta.is_null() {
            for (i, b) in h.beta.iter().enumerate() {
                beta.add(i).write(*b);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`lexdur_lmm_fit`].
#[no_mangle]
pub unsafe extern "C" fn lexdur_lmm_free(handle: *mut LexdurLmm) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
