//! C ABI over `qcd-core`.
//!
//! Every fallible call returns a `QcdStatus` code and writes results through
//! out-pointers. On failure, `qcd_last_error()` describes the most recent
//! error on the calling thread. Handles are opaque and must be released with
//! their matching `*_free` function.

use qcd_core::calibration::{estimate_arl, threshold_for_arl, ArlOptions, ArlTable};
use qcd_core::detector::{CusumRun, DetectionOutcome, DetectionSetup};
use qcd_core::sampling::SeededStream;
use qcd_core::schemes::{
    bpsk_awgn_capacity, cre_coherent, cre_dv_homodyne, cre_squeezed, ChannelPair, Cre, EnergyParams, Modulation,
    Scheme, SchemeKind,
};
use qcd_core::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcdStatus {
    Ok = 0,
    Usage = 1,
    Domain = 2,
    Numerical = 3,
    Resource = 4,
    Range = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
    /// A query whose answer does not exist yet (e.g. alarm time before an alarm).
    NotAvailable = 9,
}

pub const QCD_SCHEME_COHERENT: u32 = 0;
pub const QCD_SCHEME_SQUEEZED: u32 = 1;
pub const QCD_SCHEME_ENTANGLED: u32 = 2;
pub const QCD_SCHEME_KENNEDY: u32 = 3;
pub const QCD_SCHEME_DV_HOMODYNE: u32 = 4;
pub const QCD_SCHEME_DV_SPD: u32 = 5;

pub const QCD_MODULATION_NONE: u32 = 0;
pub const QCD_MODULATION_BPSK: u32 = 1;

pub const QCD_OUTCOME_DETECTED: u32 = 0;
pub const QCD_OUTCOME_FALSE_ALARM: u32 = 1;
pub const QCD_OUTCOME_NO_ALARM: u32 = 2;

/// A transmitter/receiver configuration.
pub struct QcdScheme {
    inner: Scheme,
}

/// CUSUM detector state.
pub struct QcdCusum {
    inner: CusumRun,
}

/// Monte-Carlo ARL table.
pub struct QcdArlTable {
    inner: ArlTable,
}

/// Outcome of one simulated detection run. Times are in pulses; `tau` and
/// `ml_estimate` are meaningful for detected runs and false alarms only.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QcdDetection {
    pub outcome: u32,
    pub n_d: u64,
    pub tau: u64,
    pub ml_estimate: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QcdStatus {
    match e {
        Error::Usage(_) => QcdStatus::Usage,
        Error::Domain(_) => QcdStatus::Domain,
        Error::Numerical(_) => QcdStatus::Numerical,
        Error::Resource(_) => QcdStatus::Resource,
        Error::Range { .. } => QcdStatus::Range,
        Error::Io(_) => QcdStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for `qcd_last_error`.
fn guard(f: impl FnOnce() -> Result<(), QcdFail>) -> QcdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QcdStatus::Ok,
        Ok(Err(QcdFail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(QcdFail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            QcdStatus::Panic
        }
    }
}

enum QcdFail {
    Core(Error),
    Status(QcdStatus, &'static str),
}

impl From<Error> for QcdFail {
    fn from(e: Error) -> Self {
        QcdFail::Core(e)
    }
}

const NULL: QcdFail = QcdFail::Status(QcdStatus::NullPointer, "null pointer argument");

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, QcdFail> {
    p.as_mut().ok_or(NULL)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, QcdFail> {
    p.as_ref().ok_or(NULL)
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qcd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qcd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn scheme_kind(kind: u32, block: u32, neps: f64) -> Result<SchemeKind, QcdFail> {
    Ok(match kind {
        QCD_SCHEME_COHERENT => SchemeKind::CoherentHomodyne,
        QCD_SCHEME_SQUEEZED => SchemeKind::SqueezedHomodyne,
        QCD_SCHEME_ENTANGLED => SchemeKind::EntangledHomodyne { n: block as usize },
        QCD_SCHEME_KENNEDY => SchemeKind::KennedyReceiver { residual: neps },
        QCD_SCHEME_DV_HOMODYNE => SchemeKind::SinglePhotonHomodyne,
        QCD_SCHEME_DV_SPD => SchemeKind::SinglePhotonSpd,
        _ => return Err(QcdFail::Status(QcdStatus::Usage, "unknown scheme kind")),
    })
}

/// Creates a scheme. `block` is read for `QCD_SCHEME_ENTANGLED` and `neps`
/// for `QCD_SCHEME_KENNEDY`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qcd_scheme_new(
    kind: u32,
    modulation: u32,
    n_photons: f64,
    na: f64,
    block: u32,
    neps: f64,
    out_scheme: *mut *mut QcdScheme,
) -> QcdStatus {
    guard(|| {
        let slot = out(out_scheme)?;
        let modulation = match modulation {
            QCD_MODULATION_NONE => Modulation::Unmodulated,
            QCD_MODULATION_BPSK => Modulation::Bpsk,
            _ => return Err(QcdFail::Status(QcdStatus::Usage, "unknown modulation")),
        };
        let scheme = Scheme::new(scheme_kind(kind, block, neps)?, EnergyParams::new(n_photons, na)?, modulation)?;
        *slot = Box::into_raw(Box::new(QcdScheme { inner: scheme }));
        Ok(())
    })
}

/// # Safety
/// `scheme` must be null or a handle from `qcd_scheme_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcd_scheme_free(scheme: *mut QcdScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Relative entropy per pulse; `*out_infinite` is set to 1 (and `*out_cre`
/// to infinity) when the divergence is unbounded.
///
/// # Safety
/// `scheme` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_scheme_cre(
    scheme: *const QcdScheme,
    eta1: f64,
    eta2: f64,
    out_cre: *mut f64,
    out_infinite: *mut i32,
) -> QcdStatus {
    guard(|| {
        let s = handle(scheme)?;
        let (v, inf) = (out(out_cre)?, out(out_infinite)?);
        let cre = s.inner.cre(&ChannelPair::new(eta1, eta2)?)?;
        *v = cre.value();
        *inf = matches!(cre, Cre::Infinite) as i32;
        Ok(())
    })
}

/// Coherent-light relative entropy with `n + na` photons per pulse.
///
/// # Safety
/// `out_cre` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cre_coherent(eta1: f64, eta2: f64, n_photons: f64, na: f64, out_cre: *mut f64) -> QcdStatus {
    guard(|| {
        let o = out(out_cre)?;
        *o = cre_coherent(&ChannelPair::new(eta1, eta2)?, &EnergyParams::new(n_photons, na)?);
        Ok(())
    })
}

/// Displaced squeezed-light relative entropy.
///
/// # Safety
/// `out_cre` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cre_squeezed(eta1: f64, eta2: f64, n_photons: f64, na: f64, out_cre: *mut f64) -> QcdStatus {
    guard(|| {
        let o = out(out_cre)?;
        *o = cre_squeezed(&ChannelPair::new(eta1, eta2)?, &EnergyParams::new(n_photons, na)?);
        Ok(())
    })
}

/// Displaced single-photon homodyne relative entropy.
///
/// # Safety
/// `out_cre` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cre_dv_homodyne(eta1: f64, eta2: f64, alpha: f64, out_cre: *mut f64) -> QcdStatus {
    guard(|| {
        let o = out(out_cre)?;
        *o = cre_dv_homodyne(&ChannelPair::new(eta1, eta2)?, alpha)?;
        Ok(())
    })
}

/// BPSK homodyne channel capacity in bits per pulse.
///
/// # Safety
/// `out_bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_bpsk_capacity(eta: f64, n_photons: f64, out_bits: *mut f64) -> QcdStatus {
    guard(|| {
        let o = out(out_bits)?;
        *o = bpsk_awgn_capacity(eta, n_photons)?;
        Ok(())
    })
}

/// # Safety
/// `out_cusum` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_new(threshold: f64, out_cusum: *mut *mut QcdCusum) -> QcdStatus {
    guard(|| {
        let slot = out(out_cusum)?;
        *slot = Box::into_raw(Box::new(QcdCusum { inner: CusumRun::new(threshold)? }));
        Ok(())
    })
}

/// # Safety
/// `cusum` must be null or a handle from `qcd_cusum_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_free(cusum: *mut QcdCusum) {
    if !cusum.is_null() {
        drop(Box::from_raw(cusum));
    }
}

/// Feeds one log-likelihood ratio; `*out_alarm` becomes 1 on the alarm step.
/// Stepping after an alarm is a usage error.
///
/// # Safety
/// `cusum` must be a live handle not used concurrently; `out_alarm` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_step(cusum: *mut QcdCusum, llr: f64, out_alarm: *mut i32) -> QcdStatus {
    guard(|| {
        let c = cusum.as_mut().ok_or(NULL)?;
        let a = out(out_alarm)?;
        *a = c.inner.step(llr)? as i32;
        Ok(())
    })
}

/// Current decision statistic `G[k]`.
///
/// # Safety
/// `cusum` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_decision(cusum: *const QcdCusum, out_value: *mut f64) -> QcdStatus {
    guard(|| {
        *out(out_value)? = handle(cusum)?.inner.decision();
        Ok(())
    })
}

/// Steps taken so far.
///
/// # Safety
/// `cusum` must be a live handle; `out_k` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_steps(cusum: *const QcdCusum, out_k: *mut u64) -> QcdStatus {
    guard(|| {
        *out(out_k)? = handle(cusum)?.inner.k();
        Ok(())
    })
}

/// Alarm step; `QCD_STATUS_NOT_AVAILABLE` before any alarm.
///
/// # Safety
/// `cusum` must be a live handle; `out_k` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_alarm_time(cusum: *const QcdCusum, out_k: *mut u64) -> QcdStatus {
    guard(|| {
        let o = out(out_k)?;
        match handle(cusum)?.inner.alarm_time() {
            Some(k) => {
                *o = k;
                Ok(())
            }
            None => Err(QcdFail::Status(QcdStatus::NotAvailable, "no alarm yet")),
        }
    })
}

/// Maximum-likelihood change step given the data so far.
///
/// # Safety
/// `cusum` must be a live handle; `out_k` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_cusum_ml_estimate(cusum: *const QcdCusum, out_k: *mut u64) -> QcdStatus {
    guard(|| {
        *out(out_k)? = handle(cusum)?.inner.ml_estimate();
        Ok(())
    })
}

/// Simulates one detection run with the change at pulse `n_c`.
///
/// # Safety
/// `scheme` must be a live handle; `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_run_detection(
    scheme: *const QcdScheme,
    eta1: f64,
    eta2: f64,
    n_c: u64,
    horizon: u64,
    threshold: f64,
    seed: u64,
    stream: u64,
    out_result: *mut QcdDetection,
) -> QcdStatus {
    guard(|| {
        let s = handle(scheme)?;
        let o = out(out_result)?;
        let setup = DetectionSetup::new(&s.inner, &ChannelPair::new(eta1, eta2)?)?;
        *o = match setup.run(n_c, horizon, threshold, SeededStream::new(seed, stream))? {
            DetectionOutcome::Detected(r) => QcdDetection {
                outcome: QCD_OUTCOME_DETECTED,
                n_d: r.n_d,
                tau: r.tau,
                ml_estimate: r.ml_estimate,
            },
            DetectionOutcome::FalseAlarm { n_d, ml_estimate } => QcdDetection {
                outcome: QCD_OUTCOME_FALSE_ALARM,
                n_d,
                tau: 0,
                ml_estimate,
            },
            DetectionOutcome::NoAlarm { horizon } => QcdDetection {
                outcome: QCD_OUTCOME_NO_ALARM,
                n_d: horizon,
                ..Default::default()
            },
        };
        Ok(())
    })
}

/// Estimates the ARL over `points` thresholds in `[h_min, h_max]`.
///
/// # Safety
/// `scheme` must be a live handle; `out_table` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_arl_estimate(
    scheme: *const QcdScheme,
    eta1: f64,
    eta2: f64,
    h_min: f64,
    h_max: f64,
    points: u32,
    runs: u32,
    run_length: u64,
    seed: u64,
    out_table: *mut *mut QcdArlTable,
) -> QcdStatus {
    guard(|| {
        let s = handle(scheme)?;
        let slot = out(out_table)?;
        let opts = ArlOptions { h_min, h_max, points: points as usize, runs: runs as usize, run_length };
        let table = estimate_arl(&s.inner, &ChannelPair::new(eta1, eta2)?, &opts, SeededStream::new(seed, 0))?;
        *slot = Box::into_raw(Box::new(QcdArlTable { inner: table }));
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle from `qcd_arl_estimate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcd_arl_free(table: *mut QcdArlTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of grid points.
///
/// # Safety
/// `table` must be a live handle; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_arl_len(table: *const QcdArlTable, out_len: *mut u64) -> QcdStatus {
    guard(|| {
        *out(out_len)? = handle(table)?.inner.h_grid.len() as u64;
        Ok(())
    })
}

/// Row `index` of the table: threshold, ARL and censored fraction.
///
/// # Safety
/// `table` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_arl_row(
    table: *const QcdArlTable,
    index: u64,
    out_h: *mut f64,
    out_gamma: *mut f64,
    out_censor_frac: *mut f64,
) -> QcdStatus {
    guard(|| {
        let t = &handle(table)?.inner;
        let (h, g, c) = (out(out_h)?, out(out_gamma)?, out(out_censor_frac)?);
        let i = index as usize;
        if i >= t.h_grid.len() {
            return Err(QcdFail::Status(QcdStatus::Range, "row index out of range"));
        }
        *h = t.h_grid[i];
        *g = t.gamma[i];
        *c = t.censor_frac[i];
        Ok(())
    })
}

/// Threshold reaching ARL `gamma_target`, interpolated in log ARL.
///
/// # Safety
/// `table` must be a live handle; `out_h` writable.
#[no_mangle]
pub unsafe extern "C" fn qcd_arl_threshold(table: *const QcdArlTable, gamma_target: f64, out_h: *mut f64) -> QcdStatus {
    guard(|| {
        let t = handle(table)?;
        let o = out(out_h)?;
        *o = threshold_for_arl(&t.inner, gamma_target)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    #[test]
    fn null_out_pointer() {
        assert_eq!(unsafe { qcd_cre_coherent(0.9, 0.85, 100.0, 1.0, ptr::null_mut()) }, QcdStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(qcd_last_error()) };
        assert!(msg.to_str().unwrap().contains("null"));
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Range { target: 1.0, lo: 0.0, hi: 0.5 }), QcdStatus::Range);
        assert_eq!(status_of(&Error::Numerical("x".into())), QcdStatus::Numerical);
    }
}
