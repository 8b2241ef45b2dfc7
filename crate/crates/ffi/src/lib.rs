//! C ABI over the forecasting core.
//!
//! Every function returns an [`OtsStatus`]. On failure the message is kept
//! per thread and can be copied out with [`ots_last_error_message`]. Objects
//! are opaque handles released by their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ordinal_ts::eval::{nemenyi_cd, reconstruct, SignificanceConfig};
use ordinal_ts::influence::{influence_bounds, ClassificationInstance, RegressionInstance};
use ordinal_ts::loss::{ce, oce, oce_grad_logits, LogBase};
use ordinal_ts::model::{forward, load_checkpoint, ModelParams};
use ordinal_ts::numerics::{kron, Matrix};
use ordinal_ts::targetdist::{encode, make_bins, BinScheme, Family, TargetDistSpec};
use ordinal_ts::{Error, ProbVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidDimension = 2,
    InvalidParameter = 3,
    InvalidInput = 4,
    SingularMatrix = 5,
    InsufficientData = 6,
    OutOfSupport = 7,
    DegenerateDistribution = 8,
    Precondition = 9,
    Io = 10,
    Parse = 11,
    Config = 12,
    Invariant = 13,
    Panic = 14,
}

impl From<&Error> for OtsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDimension(_) => OtsStatus::InvalidDimension,
            Error::InvalidParameter(_) => OtsStatus::InvalidParameter,
            Error::InvalidInput(_) => OtsStatus::InvalidInput,
            Error::SingularMatrix { .. } => OtsStatus::SingularMatrix,
            Error::InsufficientData(_) => OtsStatus::InsufficientData,
            Error::OutOfSupport { .. } => OtsStatus::OutOfSupport,
            Error::DegenerateDistribution { .. } => OtsStatus::DegenerateDistribution,
            Error::Precondition(_) => OtsStatus::Precondition,
            Error::Io { .. } => OtsStatus::Io,
            Error::Parse { .. } | Error::Schema { .. } => OtsStatus::Parse,
            Error::Config(_) => OtsStatus::Config,
            Error::Invariant(_) => OtsStatus::Invariant,
        }
    }
}

/// Kernel family selector for [`ots_encode`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtsFamily {
    Gaussian = 0,
    StudentT = 1,
    Laplace = 2,
}

/// Opaque bin partition.
pub struct OtsBins(BinScheme);

/// Opaque trained model.
pub struct OtsModel(ModelParams);

/// Scalar summary of the influence-ratio bound for one instance pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OtsInfluenceSummary {
    pub ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub kappa2: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OtsStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            OtsStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            OtsStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            OtsStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_scalar<'a>(ptr: *mut f64, what: &'static str) -> Result<&'a mut f64, Fail> {
    ptr.as_mut().ok_or(Fail::Null(what))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Fail> {
    if got != want {
        return Err(
            Error::InvalidDimension(format!("{what}: length {got}, expected {want}")).into(),
        );
    }
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be writable for `cap` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn ots_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ots_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    V.as_ptr()
}

/// Creates `k` equal-width bins on `[a, b]`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ots_bins_new(
    k: usize,
    a: f64,
    b: f64,
    out: *mut *mut OtsBins,
) -> OtsStatus {
    guard(|| {
        let slot = out.as_mut().ok_or(Fail::Null("out"))?;
        *slot = Box::into_raw(Box::new(OtsBins(make_bins(k, a, b)?)));
        Ok(())
    })
}

/// Releases a bin handle. Null is ignored.
///
/// # Safety
/// `bins` must come from [`ots_bins_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ots_bins_free(bins: *mut OtsBins) {
    if !bins.is_null() {
        drop(Box::from_raw(bins));
    }
}

/// Number of bins.
///
/// # Safety
/// `bins` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ots_bins_count(bins: *const OtsBins) -> usize {
    bins.as_ref().map_or(0, |b| b.0.k())
}

/// Writes the `k` bin centers.
///
/// # Safety
/// `bins` must be live; `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ots_bins_centers(
    bins: *const OtsBins,
    out: *mut f64,
    len: usize,
) -> OtsStatus {
    guard(|| {
        let b = &bins.as_ref().ok_or(Fail::Null("bins"))?.0;
        check_len(len, b.k(), "centers")?;
        output(out, len, "out")?.copy_from_slice(b.centers());
        Ok(())
    })
}

/// Encodes target `y` as a bin distribution written to `out` (`len = k`).
/// `nu` is used only by the Student-t family.
///
/// # Safety
/// `bins` must be live; `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ots_encode(
    bins: *const OtsBins,
    family: OtsFamily,
    sigma: f64,
    nu: f64,
    y: f64,
    out: *mut f64,
    len: usize,
) -> OtsStatus {
    guard(|| {
        let b = &bins.as_ref().ok_or(Fail::Null("bins"))?.0;
        check_len(len, b.k(), "encoded vector")?;
        let fam = match family {
            OtsFamily::Gaussian => Family::TruncatedGaussian,
            OtsFamily::StudentT => Family::StudentT,
            OtsFamily::Laplace => Family::Laplace,
        };
        let spec = TargetDistSpec {
            family: fam,
            sigma,
            nu,
        };
        spec.validate()?;
        let p = encode(y, b, &spec)?;
        output(out, len, "out")?.copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// Probability-weighted mean of bin centers.
///
/// # Safety
/// `bins` must be live; `probs` readable for `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ots_reconstruct(
    bins: *const OtsBins,
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> OtsStatus {
    guard(|| {
        let b = &bins.as_ref().ok_or(Fail::Null("bins"))?.0;
        let q = ProbVector::new(input(probs, len, "probs")?.to_vec())?;
        *out_scalar(out, "out")? = reconstruct(&q, b)?;
        Ok(())
    })
}

unsafe fn pair(p: *const f64, q: *const f64, k: usize) -> Result<(ProbVector, ProbVector), Fail> {
    Ok((
        ProbVector::new(input(p, k, "p")?.to_vec())?,
        ProbVector::new(input(q, k, "q")?.to_vec())?,
    ))
}

/// Ordinal cross-entropy of `q` against `p`; base-10 logs when `base10` is set.
///
/// # Safety
/// `p`, `q` readable for `k` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ots_oce(
    p: *const f64,
    q: *const f64,
    k: usize,
    base10: bool,
    out: *mut f64,
) -> OtsStatus {
    guard(|| {
        let (p, q) = pair(p, q, k)?;
        let base = if base10 {
            LogBase::Base10
        } else {
            LogBase::Natural
        };
        *out_scalar(out, "out")? = oce(&p, &q, base)?.value;
        Ok(())
    })
}

/// Cross-entropy of `q` against `p`; base-10 logs when `base10` is set.
///
/// # Safety
/// `p`, `q` readable for `k` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ots_ce(
    p: *const f64,
    q: *const f64,
    k: usize,
    base10: bool,
    out: *mut f64,
) -> OtsStatus {
    guard(|| {
        let (p, q) = pair(p, q, k)?;
        let base = if base10 {
            LogBase::Base10
        } else {
            LogBase::Natural
        };
        *out_scalar(out, "out")? = ce(&p, &q, base)?.value;
        Ok(())
    })
}

/// Gradient of the ordinal cross-entropy at `softmax(logits)`.
///
/// # Safety
/// `p`, `logits` readable and `out` writable for `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn ots_oce_grad_logits(
    p: *const f64,
    logits: *const f64,
    k: usize,
    out: *mut f64,
) -> OtsStatus {
    guard(|| {
        let p = ProbVector::new(input(p, k, "p")?.to_vec())?;
        let g = oce_grad_logits(&p, input(logits, k, "logits")?)?;
        check_len(g.len(), k, "gradient")?;
        output(out, k, "out")?.copy_from_slice(&g);
        Ok(())
    })
}

/// Nemenyi critical distance.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ots_nemenyi_cd(
    k_algorithms: usize,
    n_datasets: usize,
    q_alpha: f64,
    out: *mut f64,
) -> OtsStatus {
    guard(|| {
        *out_scalar(out, "out")? = nemenyi_cd(&SignificanceConfig {
            k_algorithms,
            n_datasets,
            q_alpha,
        })?;
        Ok(())
    })
}

/// Loads a JSON checkpoint written by the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ots_model_load(path: *const c_char, out: *mut *mut OtsModel) -> OtsStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let slot = out.as_mut().ok_or(Fail::Null("out"))?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Error::InvalidInput(format!("path is not UTF-8: {e}")))?;
        *slot = Box::into_raw(Box::new(OtsModel(load_checkpoint(path)?)));
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`ots_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ots_model_free(model: *mut OtsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Lookback, horizon, channels and bins of a model.
///
/// # Safety
/// `model` must be live; every out pointer writable.
#[no_mangle]
pub unsafe extern "C" fn ots_model_shape(
    model: *const OtsModel,
    w: *mut usize,
    h: *mut usize,
    m: *mut usize,
    k: *mut usize,
) -> OtsStatus {
    guard(|| {
        let s = model.as_ref().ok_or(Fail::Null("model"))?.0.shape;
        *w.as_mut().ok_or(Fail::Null("w"))? = s.w;
        *h.as_mut().ok_or(Fail::Null("h"))? = s.h;
        *m.as_mut().ok_or(Fail::Null("m"))? = s.m;
        *k.as_mut().ok_or(Fail::Null("k"))? = s.k;
        Ok(())
    })
}

/// Runs the model on a scaled `w×m` row-major window. Writes the `h×m`
/// point forecast and the `h×m×k` bin probabilities (row-major).
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn ots_model_forward(
    model: *const OtsModel,
    x_norm: *const f64,
    x_len: usize,
    point_out: *mut f64,
    point_len: usize,
    probs_out: *mut f64,
    probs_len: usize,
) -> OtsStatus {
    guard(|| {
        let params = &model.as_ref().ok_or(Fail::Null("model"))?.0;
        let s = params.shape;
        check_len(x_len, s.w * s.m, "x_norm")?;
        check_len(point_len, s.h * s.m, "point_out")?;
        check_len(probs_len, s.h * s.m * s.k, "probs_out")?;
        let x = Matrix::from_vec(s.w, s.m, input(x_norm, x_len, "x_norm")?.to_vec())?;
        let f = forward(params, &x)?;
        output(point_out, point_len, "point_out")?.copy_from_slice(f.point.data());
        let probs = output(probs_out, probs_len, "probs_out")?;
        for (cell, chunk) in f.probs.cells().iter().zip(probs.chunks_mut(s.k)) {
            chunk.copy_from_slice(cell.as_slice());
        }
        Ok(())
    })
}

/// Influence ratio and its bounds for a regression/classification pair
/// sharing `x` (length `d`). `sigma_x` is `d×d`, `beta` is `d×k`,
/// `p_expected` is `k×k`, all row-major; `label` is 0-based.
///
/// # Safety
/// Buffers must hold the stated number of doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ots_influence_bounds(
    x: *const f64,
    d: usize,
    y: f64,
    theta: *const f64,
    sigma_x: *const f64,
    beta: *const f64,
    k: usize,
    label: usize,
    p_expected: *const f64,
    out: *mut OtsInfluenceSummary,
) -> OtsStatus {
    guard(|| {
        let slot = out.as_mut().ok_or(Fail::Null("out"))?;
        let xv = input(x, d, "x")?.to_vec();
        let sx = Matrix::from_vec(d, d, input(sigma_x, d * d, "sigma_x")?.to_vec())?;
        let reg = RegressionInstance::new(
            xv.clone(),
            y,
            input(theta, d, "theta")?.to_vec(),
            sx.clone(),
        )?;
        let b = Matrix::from_vec(d, k, input(beta, d * k, "beta")?.to_vec())?;
        let pe = Matrix::from_vec(k, k, input(p_expected, k * k, "p_expected")?.to_vec())?;
        let cls = ClassificationInstance::new(xv, label, b, kron(&sx, &pe))?;
        let r = influence_bounds(&reg, &cls, &pe)?;
        *slot = OtsInfluenceSummary {
            ratio: r.ratio,
            lower_bound: r.lower_bound,
            upper_bound: r.upper_bound,
            kappa2: r.kappa2,
            lambda_min_p: r.lambda_min_p,
            lambda_max_p: r.lambda_max_p,
            residual: r.residual,
        };
        Ok(())
    })
}
