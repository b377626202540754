//! C ABI over the `sp8d` core: constellations behind opaque handles, the
//! overhead-bit encoders, 8D decisions and single Monte Carlo points.
//!
//! Every function returns an [`Sp8dStatus`]; on failure a message is kept
//! per thread and can be read with [`sp8d_last_error_message`]. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sp8d::config::RunConfig;
use sp8d::formats::{ml_decide, pa7b8d_overhead, pb5b8d_overhead, standard_format, FormatKind};
use sp8d::geom8d::{BitWord, Constellation};
use sp8d::montecarlo::{q2_from_ber, run_point, RecordFlag};
use sp8d::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sp8dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConventionNotFound = 3,
    Numerical = 4,
    Config = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sp8dFormat {
    PdmBpsk = 0,
    Pb5b8d = 1,
    Pa7b8d = 2,
    PdmQpsk = 3,
}

impl From<Sp8dFormat> for FormatKind {
    fn from(f: Sp8dFormat) -> Self {
        match f {
            Sp8dFormat::PdmBpsk => FormatKind::PdmBpsk,
            Sp8dFormat::Pb5b8d => FormatKind::Pb5b8d,
            Sp8dFormat::Pa7b8d => FormatKind::Pa7b8d,
            Sp8dFormat::PdmQpsk => FormatKind::PdmQpsk,
        }
    }
}

/// Opaque constellation handle.
pub struct Sp8dConstellation {
    inner: Constellation,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sp8dCensus {
    pub pb: usize,
    pub pa: usize,
    pub pi: usize,
}

/// `flag`: 0 none, 1 BER upper bound (cap reached), 2 error free.
/// `q2_db` is NaN when no errors were counted.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sp8dBerRecord {
    pub bits_compared: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub q2_db: f64,
    pub realizations: u64,
    pub flag: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> Sp8dStatus {
    match e {
        Error::NoConvention => Sp8dStatus::ConventionNotFound,
        Error::Config { .. } => Sp8dStatus::Config,
        Error::Io(_) => Sp8dStatus::Io,
        Error::NoDecisionGain(_)
        | Error::NeedsErrors(_)
        | Error::EqualizerDiverged { .. }
        | Error::StepNotConverged(_)
        | Error::ThresholdNotBracketed(_) => Sp8dStatus::Numerical,
        _ => Sp8dStatus::InvalidArgument,
    }
}

struct Failure(Sp8dStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(Sp8dStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Sp8dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            Sp8dStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            Sp8dStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sp8d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp8d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds one of the four formats. Free the handle with `sp8d_constellation_free`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_build(format: Sp8dFormat, out: *mut *mut Sp8dConstellation) -> Sp8dStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = standard_format(format.into())?;
        *out = Box::into_raw(Box::new(Sp8dConstellation { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle returned by `sp8d_constellation_build`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_free(c: *mut Sp8dConstellation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

unsafe fn handle<'a>(c: *const Sp8dConstellation) -> Result<&'a Constellation, Failure> {
    c.as_ref().map(|h| &h.inner).ok_or_else(|| null("constellation"))
}

/// Number of symbols; 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_len(c: *const Sp8dConstellation) -> usize {
    c.as_ref().map_or(0, |h| h.inner.len())
}

/// Information bits per 8D symbol; 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_info_bits(c: *const Sp8dConstellation) -> u32 {
    c.as_ref().map_or(0, |h| h.inner.info_bits() as u32)
}

/// Squared minimum Euclidean distance; NaN for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_dmin_sq(c: *const Sp8dConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |h| h.inner.dmin_sq())
}

/// # Safety
/// `c` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_census(c: *const Sp8dConstellation, out: *mut Sp8dCensus) -> Sp8dStatus {
    guard(|| {
        let c = handle(c)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let k = c.census();
        *out = Sp8dCensus { pb: k.pb, pa: k.pa, pi: k.pi };
        Ok(())
    })
}

/// Real 8D coordinates `(Re x1, Im x1, Re y1, Im y1, Re x2, Im x2, Re y2, Im y2)`
/// and 8-bit label of the symbol at `index` (symbols are sorted by label).
///
/// # Safety
/// `c` must be a live handle, `coords` valid for 8 writes, `label` for one.
#[no_mangle]
pub unsafe extern "C" fn sp8d_constellation_symbol(
    c: *const Sp8dConstellation,
    index: usize,
    coords: *mut f64,
    label: *mut u8,
) -> Sp8dStatus {
    guard(|| {
        let c = handle(c)?;
        if coords.is_null() || label.is_null() {
            return Err(null("coords or label"));
        }
        let s = c.symbols().get(index).ok_or(Error::IndexOutOfRange { index, len: c.len() })?;
        ptr::copy_nonoverlapping(s.to_real8().as_ptr(), coords, 8);
        *label = s.label.value();
        Ok(())
    })
}

/// Maps a bit stream (one bit per byte, values 0/1) to symbol indices.
/// `n_bits` must be a multiple of the information bits per symbol; on
/// success `*out_len` symbols were written.
///
/// # Safety
/// `bits` valid for `n_bits` reads, `out_indices` for `out_cap` writes, `out_len` for one.
#[no_mangle]
pub unsafe extern "C" fn sp8d_encode(
    c: *const Sp8dConstellation,
    bits: *const u8,
    n_bits: usize,
    out_indices: *mut usize,
    out_cap: usize,
    out_len: *mut usize,
) -> Sp8dStatus {
    guard(|| {
        let c = handle(c)?;
        let out_len = out_len.as_mut().ok_or_else(|| null("out_len"))?;
        if (bits.is_null() && n_bits > 0) || (out_indices.is_null() && out_cap > 0) {
            return Err(null("bits or out_indices"));
        }
        let bits = if n_bits == 0 { &[][..] } else { std::slice::from_raw_parts(bits, n_bits) };
        let idx = sp8d::formats::encode_indices(bits, c)?;
        if idx.len() > out_cap {
            return Err(Failure(
                Sp8dStatus::InvalidArgument,
                format!("output holds {out_cap} symbols, {} needed", idx.len()),
            ));
        }
        if !idx.is_empty() {
            ptr::copy_nonoverlapping(idx.as_ptr(), out_indices, idx.len());
        }
        *out_len = idx.len();
        Ok(())
    })
}

/// Minimum-distance decision of a received real 8D vector.
///
/// # Safety
/// `received` valid for 8 reads; `out_index` and `out_info` for one write each.
#[no_mangle]
pub unsafe extern "C" fn sp8d_ml_decide(
    c: *const Sp8dConstellation,
    received: *const f64,
    out_index: *mut usize,
    out_info: *mut u8,
) -> Sp8dStatus {
    guard(|| {
        let c = handle(c)?;
        if received.is_null() || out_index.is_null() || out_info.is_null() {
            return Err(null("argument"));
        }
        let mut r = [0.0; 8];
        ptr::copy_nonoverlapping(received, r.as_mut_ptr(), 8);
        let d = ml_decide(&r, c)?;
        *out_index = d.index;
        *out_info = d.info.value();
        Ok(())
    })
}

/// Overhead bits `b6 b7 b8` (low three bits of `*out`) for 5 information bits.
///
/// # Safety
/// `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sp8d_pb5b8d_overhead(info: u8, out: *mut u8) -> Sp8dStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = pb5b8d_overhead(BitWord::new(info, 5)?)?.value();
        Ok(())
    })
}

/// Overhead bit `b8` for 7 information bits.
///
/// # Safety
/// `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sp8d_pa7b8d_overhead(info: u8, out: *mut u8) -> Sp8dStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = pa7b8d_overhead(BitWord::new(info, 7)?)?;
        Ok(())
    })
}

/// # Safety
/// `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sp8d_q2_from_ber(ber: f64, out: *mut f64) -> Sp8dStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = q2_from_ber(ber)?;
        Ok(())
    })
}

/// Runs one Monte Carlo point for `format` using a TOML run configuration
/// (the same keys as the command-line tool; span count `spans`, launch
/// power `power_dbm`).
///
/// # Safety
/// `config_toml` must be a NUL-terminated UTF-8 string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sp8d_run_point_toml(
    config_toml: *const c_char,
    format: Sp8dFormat,
    out: *mut Sp8dBerRecord,
) -> Sp8dStatus {
    guard(|| {
        if config_toml.is_null() {
            return Err(null("config_toml"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|_| Failure(Sp8dStatus::Config, "configuration is not UTF-8".into()))?;
        let cfg = RunConfig::parse(text)?;
        let rec = run_point(&cfg.sim_config(format.into()))?;
        *out = Sp8dBerRecord {
            bits_compared: rec.bits_compared,
            bit_errors: rec.bit_errors,
            ber: rec.ber,
            q2_db: rec.q2_db.unwrap_or(f64::NAN),
            realizations: rec.realizations as u64,
            flag: match rec.flag {
                RecordFlag::None => 0,
                RecordFlag::UpperBound => 1,
                RecordFlag::ErrorFree => 2,
            },
        };
        Ok(())
    })
}
