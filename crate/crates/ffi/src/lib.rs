//! C ABI over `blendaug`.
//!
//! Every fallible call returns a [`BaStatus`]; on failure a message is kept
//! per thread and can be read with [`ba_last_error_message`]. Objects cross
//! the boundary as opaque handles that the caller releases with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use blendaug::audio::{normalize_energy, rms, AudioBuffer};
use blendaug::blender::{label, speech_blend, BlendResult, GoodScore, LabelMode};
use blendaug::closedict::{default_inventory, CloseDict, DonorWeighting};
use blendaug::gopfeat::{gop_vector, PosteriorMatrix, GOP_DIM};
use blendaug::mask::{generate_mask, get_property, MaskParams, Template};
use blendaug::Error;

/// Length of a GOP vector.
pub const BA_GOP_DIM: usize = 84;
const _: () = assert!(BA_GOP_DIM == GOP_DIM);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    InvalidData = 5,
    SilentDonor = 6,
    SegmentTooShort = 7,
    NotFound = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaTemplate {
    SmoothOverlay = 0,
    CutMix = 1,
    SmoothConcatenation = 2,
    SmoothGaussianOverlay = 3,
    CutPaste = 4,
}

impl From<BaTemplate> for Template {
    fn from(t: BaTemplate) -> Self {
        match t {
            BaTemplate::SmoothOverlay => Template::SmoothOverlay,
            BaTemplate::CutMix => Template::CutMix,
            BaTemplate::SmoothConcatenation => Template::SmoothConcatenation,
            BaTemplate::SmoothGaussianOverlay => Template::SmoothGaussianOverlay,
            BaTemplate::CutPaste => Template::CutPaste,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaLabelMode {
    FrameWeighted = 0,
    PaperFloor = 1,
}

impl From<BaLabelMode> for LabelMode {
    fn from(m: BaLabelMode) -> Self {
        match m {
            BaLabelMode::FrameWeighted => LabelMode::FrameWeighted,
            BaLabelMode::PaperFloor => LabelMode::PaperFloor,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaDonorWeighting {
    ConfusionWeighted = 0,
    Uniform = 1,
}

impl From<BaDonorWeighting> for DonorWeighting {
    fn from(w: BaDonorWeighting) -> Self {
        match w {
            BaDonorWeighting::ConfusionWeighted => DonorWeighting::ConfusionWeighted,
            BaDonorWeighting::Uniform => DonorWeighting::Uniform,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaMaskParams {
    pub overlay_lambda: f64,
    pub gaussian_depth: f64,
    pub gaussian_sigma_frac: f64,
    pub crossfade_frac: f64,
}

impl From<MaskParams> for BaMaskParams {
    fn from(p: MaskParams) -> Self {
        Self {
            overlay_lambda: p.overlay_lambda,
            gaussian_depth: p.gaussian_depth,
            gaussian_sigma_frac: p.gaussian_sigma_frac,
            crossfade_frac: p.crossfade_frac,
        }
    }
}

impl From<BaMaskParams> for MaskParams {
    fn from(p: BaMaskParams) -> Self {
        Self {
            overlay_lambda: p.overlay_lambda,
            gaussian_depth: p.gaussian_depth,
            gaussian_sigma_frac: p.gaussian_sigma_frac,
            crossfade_frac: p.crossfade_frac,
        }
    }
}

/// Close phoneme pair dictionary.
pub struct BaCloseDict(CloseDict);

/// Seeded random source for donor draws.
pub struct BaRng(ChaCha8Rng);

/// Output of [`ba_speech_blend`].
pub struct BaBlendResult(BlendResult);

/// Frame-level phone posteriors over the 42-phone inventory.
pub struct BaPosteriors(PosteriorMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(BaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => BaStatus::Io,
            Error::MalformedWav(_)
            | Error::UnsupportedEncoding { .. }
            | Error::UnsupportedChannels(_)
            | Error::Parse { .. }
            | Error::InvalidData(_)
            | Error::UnknownPhone(_) => BaStatus::InvalidData,
            Error::SilentDonor => BaStatus::SilentDonor,
            Error::SegmentTooShort { .. } => BaStatus::SegmentTooShort,
            Error::NoCandidate | Error::NoDistantPhone(_) | Error::EmptyBank(_) => {
                BaStatus::NotFound
            }
            _ => BaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: BaStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside blendaug");
            BaStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(BaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(BaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(fail(BaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(BaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_str(s: &str, buf: *mut c_char, buf_len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(fail(BaStatus::NullPointer, "output buffer is null"));
    }
    if s.len() + 1 > buf_len {
        return Err(fail(
            BaStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {buf_len}", s.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn params_or_default(params: *const BaMaskParams) -> MaskParams {
    params.as_ref().map(|p| (*p).into()).unwrap_or_default()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ba_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ba_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ba_mask_params_default() -> BaMaskParams {
    MaskParams::default().into()
}

#[no_mangle]
pub extern "C" fn ba_rng_new(seed: u64) -> *mut BaRng {
    Box::into_raw(Box::new(BaRng(ChaCha8Rng::seed_from_u64(seed))))
}

/// # Safety
/// `rng` must come from [`ba_rng_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ba_rng_free(rng: *mut BaRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// The bundled starter dictionary.
#[no_mangle]
pub extern "C" fn ba_close_dict_starter() -> *mut BaCloseDict {
    Box::into_raw(Box::new(BaCloseDict(CloseDict::starter())))
}

/// Loads a tab-separated `candidate donor weight` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ba_close_dict_load(
    path: *const c_char,
    out: *mut *mut BaCloseDict,
) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let path = as_str(path, "path")?;
        let dict = CloseDict::load(Path::new(path), default_inventory())?;
        *out = Box::into_raw(Box::new(BaCloseDict(dict)));
        Ok(())
    })
}

/// # Safety
/// `dict` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ba_close_dict_free(dict: *mut BaCloseDict) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Draws a close donor for `candidate` into `buf`. Returns
/// `BA_STATUS_NOT_FOUND` when the candidate has no entries.
///
/// # Safety
/// Handles must be live, `candidate` NUL-terminated and `buf` writable for
/// `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ba_close_dict_pick_donor(
    dict: *const BaCloseDict,
    candidate: *const c_char,
    rng: *mut BaRng,
    weighting: BaDonorWeighting,
    buf: *mut c_char,
    buf_len: usize,
) -> BaStatus {
    guard(|| {
        let dict = as_ref(dict, "dict")?;
        let rng = as_mut(rng, "rng")?;
        let candidate = as_str(candidate, "candidate")?;
        let donor = dict
            .0
            .pick_donor(candidate, &mut rng.0, weighting.into())
            .ok_or_else(|| {
                fail(
                    BaStatus::NotFound,
                    format!("no close entry for {candidate:?}"),
                )
            })?;
        write_str(donor, buf, buf_len)
    })
}

/// Draws a phone outside the candidate's close set into `buf`.
///
/// # Safety
/// As for [`ba_close_dict_pick_donor`].
#[no_mangle]
pub unsafe extern "C" fn ba_close_dict_pick_distant(
    dict: *const BaCloseDict,
    candidate: *const c_char,
    rng: *mut BaRng,
    buf: *mut c_char,
    buf_len: usize,
) -> BaStatus {
    guard(|| {
        let dict = as_ref(dict, "dict")?;
        let rng = as_mut(rng, "rng")?;
        let candidate = as_str(candidate, "candidate")?;
        let phone = dict.0.pick_distant(candidate, &mut rng.0)?;
        write_str(phone, buf, buf_len)
    })
}

/// # Safety
/// `samples` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_rms(samples: *const f64, len: usize, out: *mut f64) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = rms(as_slice(samples, len, "samples")?)?;
        Ok(())
    })
}

/// Scales `samples` to RMS `target`, writing `len` values to `out`.
///
/// # Safety
/// `samples` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ba_normalize_energy(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    target: f64,
    out: *mut f64,
) -> BaStatus {
    guard(|| {
        let input = as_slice(samples, len, "samples")?;
        if out.is_null() {
            return Err(fail(BaStatus::NullPointer, "out is null"));
        }
        let buffer = AudioBuffer::new(input.to_vec(), sample_rate)?;
        let scaled = normalize_energy(&buffer, target)?;
        ptr::copy_nonoverlapping(scaled.samples().as_ptr(), out, len);
        Ok(())
    })
}

/// Writes the per-frame mix curve of a mask. The curve has `min(t, l)`
/// frames (`l` for cut/paste); `written` receives that length, and
/// `BA_STATUS_BUFFER_TOO_SMALL` is returned when `out_len` is short.
/// `params` may be null for defaults.
///
/// # Safety
/// `out` must hold `out_len` doubles and `written` be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_mask_curve(
    template: BaTemplate,
    t: usize,
    l: usize,
    params: *const BaMaskParams,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> BaStatus {
    guard(|| {
        let written = as_mut(written, "written")?;
        let prop = get_property(template.into(), t, l, params_or_default(params))?;
        let (_, curve) = generate_mask(&prop);
        *written = curve.len();
        if out_len < curve.len() {
            return Err(fail(
                BaStatus::BufferTooSmall,
                format!("curve has {} frames, buffer holds {out_len}", curve.len()),
            ));
        }
        if out.is_null() {
            return Err(fail(BaStatus::NullPointer, "out is null"));
        }
        ptr::copy_nonoverlapping(curve.values().as_ptr(), out, curve.len());
        Ok(())
    })
}

/// Label a mask would assign, without any audio.
///
/// # Safety
/// `params` may be null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_mask_label(
    template: BaTemplate,
    t: usize,
    l: usize,
    params: *const BaMaskParams,
    mode: BaLabelMode,
    out: *mut u8,
) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let prop = get_property(template.into(), t, l, params_or_default(params))?;
        let (_, curve) = generate_mask(&prop);
        *out = label(&prop, &curve, mode.into());
        Ok(())
    })
}

/// Energy-matches the donor, blends it into the candidate under the mask
/// and labels the result. `params` may be null for defaults.
///
/// # Safety
/// `candidate` must hold `candidate_len` doubles, `donor` `donor_len`, and
/// `out` be writable. Release the result with [`ba_blend_result_free`].
#[no_mangle]
pub unsafe extern "C" fn ba_speech_blend(
    candidate: *const f64,
    candidate_len: usize,
    donor: *const f64,
    donor_len: usize,
    sample_rate: u32,
    template: BaTemplate,
    params: *const BaMaskParams,
    mode: BaLabelMode,
    out: *mut *mut BaBlendResult,
) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let c = AudioBuffer::new(
            as_slice(candidate, candidate_len, "candidate")?.to_vec(),
            sample_rate,
        )?;
        let d = AudioBuffer::new(as_slice(donor, donor_len, "donor")?.to_vec(), sample_rate)?;
        let result = speech_blend(
            &c,
            &d,
            GoodScore::SPEECHOCEAN,
            template.into(),
            params_or_default(params),
            mode.into(),
        )?;
        *out = Box::into_raw(Box::new(BaBlendResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_len(result: *const BaBlendResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.audio.len())
}

/// Blended samples, valid while the handle lives.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_samples(result: *const BaBlendResult) -> *const f64 {
    result
        .as_ref()
        .map_or(ptr::null(), |r| r.0.audio.samples().as_ptr())
}

/// Per-frame λ values, valid while the handle lives; same length as the samples.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_lambdas(result: *const BaBlendResult) -> *const f64 {
    result
        .as_ref()
        .map_or(ptr::null(), |r| r.0.frame_lambdas.values().as_ptr())
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_label(result: *const BaBlendResult) -> u8 {
    result.as_ref().map_or(0, |r| r.0.label)
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_donor_gain(result: *const BaBlendResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.donor_gain)
}

/// # Safety
/// `result` must come from [`ba_speech_blend`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ba_blend_result_free(result: *mut BaBlendResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Loads a posterior CSV: a header of 42 phone labels, then one row per frame.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ba_posteriors_load(
    path: *const c_char,
    out: *mut *mut BaPosteriors,
) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = PosteriorMatrix::load(Path::new(as_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(BaPosteriors(m)));
        Ok(())
    })
}

/// As [`ba_posteriors_load`], from CSV text in memory.
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ba_posteriors_parse(
    text: *const c_char,
    out: *mut *mut BaPosteriors,
) -> BaStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = PosteriorMatrix::parse_csv(as_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(BaPosteriors(m)));
        Ok(())
    })
}

/// # Safety
/// `posteriors` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ba_posteriors_frames(posteriors: *const BaPosteriors) -> usize {
    posteriors.as_ref().map_or(0, |p| p.0.frames())
}

/// # Safety
/// `posteriors` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ba_posteriors_free(posteriors: *mut BaPosteriors) {
    if !posteriors.is_null() {
        drop(Box::from_raw(posteriors));
    }
}

/// Writes the [`BA_GOP_DIM`]-value GOP vector of `canonical` over frames
/// `[start, end)`: 42 LPP values, then 42 LPR values.
///
/// # Safety
/// `posteriors` must be live, `canonical` NUL-terminated and `out` hold
/// [`BA_GOP_DIM`] doubles.
#[no_mangle]
pub unsafe extern "C" fn ba_gop_vector(
    posteriors: *const BaPosteriors,
    canonical: *const c_char,
    start: usize,
    end: usize,
    out: *mut f64,
) -> BaStatus {
    guard(|| {
        let m = as_ref(posteriors, "posteriors")?;
        let canonical = as_str(canonical, "canonical")?;
        if out.is_null() {
            return Err(fail(BaStatus::NullPointer, "out is null"));
        }
        let v = gop_vector(&m.0, canonical, start..end)?;
        ptr::copy_nonoverlapping(v.values().as_ptr(), out, BA_GOP_DIM);
        Ok(())
    })
}
