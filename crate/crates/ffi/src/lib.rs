//! C ABI over the `cfsim` simulator.
//!
//! Every fallible function returns a [`CfsimStatus`]; on failure the message
//! is available from [`cfsim_last_error_message`] on the same thread.
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::ptr;

use cfsim::channel::{
    bessel_j0, fit_jakes, jakes_autocorrelation, three_slope_pathloss, ArFadingModel,
    PathLossParams,
};
use cfsim::harness::{write_csv, Experiment, MetricRecord, SimConfig};
use cfsim::prediction::kalman_predict;
use cfsim::scenario::{coherence_time, doppler_frequency};
use cfsim::SimError;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CfsimStatus, msg: &str) -> CfsimStatus {
    set_error(msg);
    status
}

fn from_sim_error(e: &SimError) -> CfsimStatus {
    let status = match e {
        SimError::Io(_) => CfsimStatus::Io,
        _ if e.is_config_error() => CfsimStatus::Config,
        _ => CfsimStatus::Numerical,
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> CfsimStatus + UnwindSafe) -> CfsimStatus {
    catch_unwind(f).unwrap_or_else(|_| fail(CfsimStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, CfsimStatus> {
    if s.is_null() {
        return Err(fail(CfsimStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(CfsimStatus::InvalidArgument, "string is not UTF-8"))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn cfsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Maximum Doppler shift in Hz for a speed in m/s and a carrier in Hz.
///
/// # Safety
/// `out` must be null or valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn cfsim_doppler_frequency(
    speed: f64,
    carrier_freq: f64,
    out: *mut f64,
) -> CfsimStatus {
    if out.is_null() {
        return fail(CfsimStatus::NullPointer, "out is null");
    }
    if !(speed >= 0.0 && carrier_freq > 0.0) {
        return fail(
            CfsimStatus::InvalidArgument,
            "speed must be >= 0 and carrier_freq > 0",
        );
    }
    *out = doppler_frequency(speed, carrier_freq);
    CfsimStatus::Ok
}

/// Coherence time `3 / (16 f_D)` in seconds; `INFINITY` for `f_D = 0`.
///
/// # Safety
/// `out` must be null or valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn cfsim_coherence_time(doppler: f64, out: *mut f64) -> CfsimStatus {
    if out.is_null() {
        return fail(CfsimStatus::NullPointer, "out is null");
    }
    if !(doppler >= 0.0) {
        return fail(CfsimStatus::InvalidArgument, "doppler must be >= 0");
    }
    *out = coherence_time(doppler).seconds().unwrap_or(f64::INFINITY);
    CfsimStatus::Ok
}

/// Bessel function `J0(x)`.
#[no_mangle]
pub extern "C" fn cfsim_bessel_j0(x: f64) -> f64 {
    bessel_j0(x)
}

/// Jakes autocorrelation `J0(2π f_D T_s n)`.
#[no_mangle]
pub extern "C" fn cfsim_jakes_autocorrelation(lag: f64, doppler: f64, sample_period: f64) -> f64 {
    jakes_autocorrelation(lag, doppler, sample_period)
}

/// Three-slope path loss in dB at distance `d` metres, default constants.
#[no_mangle]
pub extern "C" fn cfsim_pathloss_db(d: f64) -> f64 {
    three_slope_pathloss(d, &PathLossParams::default())
}

/// Opaque AR fading model.
pub struct CfsimArModel {
    inner: ArFadingModel,
}

/// Fits an AR(`order`) model to the Jakes autocorrelation.
///
/// # Safety
/// `out` must be null or valid for a write of one pointer. The handle must
/// be released with [`cfsim_ar_free`].
#[no_mangle]
pub unsafe extern "C" fn cfsim_ar_fit_jakes(
    order: usize,
    doppler: f64,
    sample_period: f64,
    out: *mut *mut CfsimArModel,
) -> CfsimStatus {
    if out.is_null() {
        return fail(CfsimStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    guard(|| match fit_jakes(order, doppler, sample_period) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CfsimArModel { inner }));
            CfsimStatus::Ok
        }
        Err(e) => from_sim_error(&e),
    })
}

/// Model order, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle from [`cfsim_ar_fit_jakes`].
#[no_mangle]
pub unsafe extern "C" fn cfsim_ar_order(model: *const CfsimArModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.order())
}

/// Copies the AR coefficients `a_1..a_M` into `buf`, which must hold at
/// least `len >= order` values.
///
/// # Safety
/// `model` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cfsim_ar_coefficients(
    model: *const CfsimArModel,
    buf: *mut f64,
    len: usize,
) -> CfsimStatus {
    let (Some(m), false) = (model.as_ref(), buf.is_null()) else {
        return fail(CfsimStatus::NullPointer, "null model or buffer");
    };
    let coeffs = m.inner.coefficients();
    if len < coeffs.len() {
        return fail(
            CfsimStatus::InvalidArgument,
            "buffer shorter than model order",
        );
    }
    ptr::copy_nonoverlapping(coeffs.as_ptr(), buf, coeffs.len());
    CfsimStatus::Ok
}

/// Steady-state NMSE of the Kalman `horizon`-step predictor for the model
/// observed with noise variance `obs_noise_var`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cfsim_ar_kalman_nmse(
    model: *const CfsimArModel,
    obs_noise_var: f64,
    horizon: usize,
    out: *mut f64,
) -> CfsimStatus {
    let (Some(m), false) = (model.as_ref(), out.is_null()) else {
        return fail(CfsimStatus::NullPointer, "null model or out");
    };
    if !(obs_noise_var >= 0.0) {
        return fail(CfsimStatus::InvalidArgument, "obs_noise_var must be >= 0");
    }
    guard(|| match kalman_predict(&m.inner, obs_noise_var, horizon) {
        Ok(p) => {
            *out = p.nmse;
            CfsimStatus::Ok
        }
        Err(e) => from_sim_error(&e),
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfsim_ar_free(model: *mut CfsimArModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Opaque simulation configuration.
pub struct CfsimConfig {
    inner: SimConfig,
}

/// Default configuration.
///
/// # Safety
/// `out` must be null or valid for one write; release with [`cfsim_config_free`].
#[no_mangle]
pub unsafe extern "C" fn cfsim_config_default(out: *mut *mut CfsimConfig) -> CfsimStatus {
    if out.is_null() {
        return fail(CfsimStatus::NullPointer, "out is null");
    }
    *out = Box::into_raw(Box::new(CfsimConfig {
        inner: SimConfig::default(),
    }));
    CfsimStatus::Ok
}

/// Parses and validates a TOML configuration; omitted keys take defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cfsim_config_from_toml(
    toml: *const c_char,
    out: *mut *mut CfsimConfig,
) -> CfsimStatus {
    if out.is_null() {
        return fail(CfsimStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    let text = match read_str(toml) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match SimConfig::from_toml_str(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CfsimConfig { inner }));
            CfsimStatus::Ok
        }
        Err(e) => from_sim_error(&e),
    }
}

/// Releases a configuration handle; null is ignored.
///
/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfsim_config_free(config: *mut CfsimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

struct RecordStrings {
    experiment: CString,
    sweep_name: CString,
    scheme: CString,
    metric: CString,
}

/// Opaque list of metric records produced by one experiment run.
pub struct CfsimRecords {
    records: Vec<MetricRecord>,
    strings: Vec<RecordStrings>,
}

/// Borrowed view of one record. String pointers stay valid until the
/// owning [`CfsimRecords`] is freed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CfsimRecord {
    pub experiment: *const c_char,
    pub sweep_name: *const c_char,
    pub sweep_value: f64,
    pub scheme: *const c_char,
    /// UE index, or -1 for aggregate metrics.
    pub ue_index: i64,
    pub metric: *const c_char,
    pub value: f64,
    pub seed: u64,
}

/// Runs `experiment` ("fig3", "fig4", "fig5" or "calib") with `trials`
/// overriding the trial count when nonzero.
///
/// # Safety
/// `config` must be a live handle, `experiment` a NUL-terminated string and
/// `out` valid for one write; release with [`cfsim_records_free`].
#[no_mangle]
pub unsafe extern "C" fn cfsim_run_experiment(
    config: *const CfsimConfig,
    experiment: *const c_char,
    seed: u64,
    trials: usize,
    out: *mut *mut CfsimRecords,
) -> CfsimStatus {
    let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
        return fail(CfsimStatus::NullPointer, "null config or out");
    };
    *out = ptr::null_mut();
    let name = match read_str(experiment) {
        Ok(n) => n,
        Err(s) => return s,
    };
    let exp = match name {
        "fig3" => Experiment::Fig3,
        "fig4" => Experiment::Fig4,
        "fig5" => Experiment::Fig5,
        "calib" => Experiment::Calib,
        other => {
            return fail(
                CfsimStatus::InvalidArgument,
                &format!("unknown experiment {other:?}"),
            )
        }
    };
    let mut sim = cfg.inner.clone();
    if trials > 0 {
        exp.set_trials(&mut sim, trials);
    }
    guard(move || match exp.run(&sim, seed) {
        Ok(records) => {
            let c = |s: &str| CString::new(s).unwrap_or_default();
            let strings = records
                .iter()
                .map(|r| RecordStrings {
                    experiment: c(&r.experiment),
                    sweep_name: c(&r.sweep_name),
                    scheme: c(&r.scheme),
                    metric: c(r.metric.as_str()),
                })
                .collect();
            *out = Box::into_raw(Box::new(CfsimRecords { records, strings }));
            CfsimStatus::Ok
        }
        Err(e) => from_sim_error(&e),
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `records` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cfsim_records_len(records: *const CfsimRecords) -> usize {
    records.as_ref().map_or(0, |r| r.records.len())
}

/// Reads record `index`.
///
/// # Safety
/// `records` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cfsim_records_get(
    records: *const CfsimRecords,
    index: usize,
    out: *mut CfsimRecord,
) -> CfsimStatus {
    let (Some(r), false) = (records.as_ref(), out.is_null()) else {
        return fail(CfsimStatus::NullPointer, "null records or out");
    };
    let (Some(rec), Some(s)) = (r.records.get(index), r.strings.get(index)) else {
        return fail(CfsimStatus::InvalidArgument, "index out of range");
    };
    *out = CfsimRecord {
        experiment: s.experiment.as_ptr(),
        sweep_name: s.sweep_name.as_ptr(),
        sweep_value: rec.sweep_value,
        scheme: s.scheme.as_ptr(),
        ue_index: rec.ue_index.map_or(-1, |k| k as i64),
        metric: s.metric.as_ptr(),
        value: rec.value,
        seed: rec.seed,
    };
    CfsimStatus::Ok
}

/// Writes the records as CSV to `path`.
///
/// # Safety
/// `records` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cfsim_records_write_csv(
    records: *const CfsimRecords,
    path: *const c_char,
) -> CfsimStatus {
    let Some(r) = records.as_ref() else {
        return fail(CfsimStatus::NullPointer, "records is null");
    };
    let path = match read_str(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match write_csv(Path::new(path), &r.records) {
        Ok(()) => CfsimStatus::Ok,
        Err(e) => from_sim_error(&e),
    }
}

/// Releases a record list; null is ignored.
///
/// # Safety
/// `records` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfsim_records_free(records: *mut CfsimRecords) {
    if !records.is_null() {
        drop(Box::from_raw(records));
    }
}
