//! C ABI over `need-core`.
//!
//! Every function returns a [`NeedStatus`]; on failure the message is kept
//! per thread and read with [`need_last_error`]. Arrays are caller-owned;
//! gaps in input and output series are NaN. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use need_core::elasticity::{local_level, rolling_elasticity, tune_smoother};
use need_core::energetics::{derivative_chain, energy_states};
use need_core::panel::{load_panel, CsvLayout, IngestConfig, Panel};
use need_core::pipeline::{execute, RunConfig, Settings, Stage};
use need_core::NeedError;

/// Result of every call. Values 1-3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeedStatus {
    Ok = 0,
    /// Bad arguments or configuration.
    Validation = 1,
    /// Input data unusable (schema, duplicates, too short).
    Data = 2,
    Internal = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Opaque validated panel.
pub struct NeedPanel {
    inner: Panel,
}

/// One energetics row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NeedEnergyRow {
    pub year: i32,
    pub epsilon: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub hamiltonian: f64,
    pub lagrangian: f64,
    pub accel_energy: f64,
    pub jerk_energy: f64,
    pub total_energy: f64,
    pub power: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &NeedError) -> NeedStatus {
    match err.exit_code() {
        1 => NeedStatus::Validation,
        2 => NeedStatus::Data,
        _ => NeedStatus::Internal,
    }
}

enum Failure {
    Need(NeedError),
    Null(&'static str),
    Arg(String),
}

impl From<NeedError> for Failure {
    fn from(e: NeedError) -> Self {
        Failure::Need(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NeedStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NeedStatus::Ok,
        Ok(Err(Failure::Need(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            NeedStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            NeedStatus::Validation
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NeedStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn string<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{name} is not valid UTF-8")))
}

fn gapped(x: &[f64]) -> Vec<Option<f64>> {
    x.iter().map(|v| v.is_finite().then_some(*v)).collect()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn need_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn need_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a panel CSV with default ingest settings: long
/// layout, or wide with the default column and indicator names.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn need_panel_load(path: *const c_char, wide: bool, out: *mut *mut NeedPanel) -> NeedStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let path = string(path, "path")?;
        let file = File::open(path).map_err(|e| Failure::Arg(format!("cannot open {path}: {e}")))?;
        let cfg = IngestConfig {
            layout: if wide {
                CsvLayout::Wide(Default::default())
            } else {
                CsvLayout::Long
            },
            source: path.to_string(),
            ..IngestConfig::default()
        };
        let panel = load_panel(BufReader::new(file), &cfg)?;
        *out = Box::into_raw(Box::new(NeedPanel { inner: panel }));
        Ok(())
    })
}

/// Releases a panel. NULL is ignored.
///
/// # Safety
/// `panel` must come from [`need_panel_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn need_panel_free(panel: *mut NeedPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Number of retained countries and observations.
///
/// # Safety
/// `panel` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn need_panel_counts(
    panel: *const NeedPanel,
    n_countries: *mut usize,
    n_observations: *mut usize,
) -> NeedStatus {
    guard(|| {
        let p = panel.as_ref().ok_or(Failure::Null("panel"))?;
        if n_countries.is_null() || n_observations.is_null() {
            return Err(Failure::Null("counts"));
        }
        *n_countries = p.inner.countries.len();
        *n_observations = p.inner.n_observations();
        Ok(())
    })
}

/// Copies country `index`'s code (NUL-terminated, truncated to `cap`) into
/// `buf`.
///
/// # Safety
/// `panel` must be a live handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn need_panel_country_code(
    panel: *const NeedPanel,
    index: usize,
    buf: *mut c_char,
    cap: usize,
) -> NeedStatus {
    guard(|| {
        let p = panel.as_ref().ok_or(Failure::Null("panel"))?;
        let c = p
            .inner
            .countries
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("country index {index} out of range")))?;
        if cap == 0 {
            return Err(Failure::Arg("buffer capacity is zero".into()));
        }
        let out = slice_mut(buf.cast::<u8>(), cap, "buf")?;
        let bytes = c.country_code.as_bytes();
        let n = bytes.len().min(cap - 1);
        out[..n].copy_from_slice(&bytes[..n]);
        out[n] = 0;
        Ok(())
    })
}

/// Copies one country's years, ln GDP and ln CO2 (each `cap` long) and
/// writes the row count to `len`.
///
/// # Safety
/// `panel` must be a live handle; arrays must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn need_panel_series(
    panel: *const NeedPanel,
    index: usize,
    years: *mut i32,
    ln_gdp: *mut f64,
    ln_co2: *mut f64,
    cap: usize,
    len: *mut usize,
) -> NeedStatus {
    guard(|| {
        let p = panel.as_ref().ok_or(Failure::Null("panel"))?;
        let c = p
            .inner
            .countries
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("country index {index} out of range")))?;
        if len.is_null() {
            return Err(Failure::Null("len"));
        }
        let n = c.observations.len();
        *len = n;
        if cap < n {
            return Err(Failure::Arg(format!("capacity {cap} below {n} rows")));
        }
        let (y, g, e) = (
            slice_mut(years, n, "years")?,
            slice_mut(ln_gdp, n, "ln_gdp")?,
            slice_mut(ln_co2, n, "ln_co2")?,
        );
        for (i, o) in c.observations.iter().enumerate() {
            y[i] = o.year;
            g[i] = o.ln_gdp;
            e[i] = o.ln_co2;
        }
        Ok(())
    })
}

/// Rolling trailing-window elasticity aligned to the input: `out[i]` is the
/// estimate for the window ending at `years[i]`, NaN where none exists.
///
/// # Safety
/// All arrays must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn need_rolling_elasticity(
    years: *const i32,
    ln_gdp: *const f64,
    ln_co2: *const f64,
    n: usize,
    window_length: usize,
    out: *mut f64,
) -> NeedStatus {
    guard(|| {
        let years = slice(years, n, "years")?;
        let raw = rolling_elasticity(
            "ffi",
            years,
            slice(ln_gdp, n, "ln_gdp")?,
            slice(ln_co2, n, "ln_co2")?,
            window_length,
        )?;
        let out = slice_mut(out, n, "out")?;
        for (o, y) in out.iter_mut().zip(years) {
            *o = raw
                .years
                .binary_search(y)
                .ok()
                .and_then(|i| raw.epsilon_raw[i])
                .unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Local-level Kalman smoother over an evenly spaced series with NaN gaps.
/// Writes the smoothed level and its variance (`variance` may be NULL).
///
/// # Safety
/// Arrays must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn need_smooth(
    obs: *const f64,
    n: usize,
    process_variance: f64,
    observation_variance: f64,
    smoothed: *mut f64,
    variance: *mut f64,
) -> NeedStatus {
    guard(|| {
        if !(process_variance > 0.0 && observation_variance > 0.0) {
            return Err(Failure::Arg("variances must be positive".into()));
        }
        let fit = local_level(&gapped(slice(obs, n, "obs")?), process_variance, observation_variance)?;
        slice_mut(smoothed, n, "smoothed")?.copy_from_slice(&fit.smoothed);
        if !variance.is_null() {
            slice_mut(variance, n, "variance")?.copy_from_slice(&fit.smoothed_variance);
        }
        Ok(())
    })
}

/// Maximum-likelihood process and observation variances on the tuning grid.
///
/// # Safety
/// `obs` must hold `n` elements; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn need_tune_smoother(
    obs: *const f64,
    n: usize,
    process_variance: *mut f64,
    observation_variance: *mut f64,
) -> NeedStatus {
    guard(|| {
        if process_variance.is_null() || observation_variance.is_null() {
            return Err(Failure::Null("variance outputs"));
        }
        let cfg = tune_smoother(&gapped(slice(obs, n, "obs")?))?;
        *process_variance = cfg.process_variance;
        *observation_variance = cfg.observation_variance;
        Ok(())
    })
}

/// Derivative chain and energies of a smoothed path around `equilibrium`.
/// Years in runs shorter than the minimum are dropped, so `*len <= n`.
///
/// # Safety
/// `years` and `epsilon` must hold `n` elements, `out` at least `n` rows.
#[no_mangle]
pub unsafe extern "C" fn need_energetics(
    years: *const i32,
    epsilon: *const f64,
    n: usize,
    equilibrium: f64,
    out: *mut NeedEnergyRow,
    len: *mut usize,
) -> NeedStatus {
    guard(|| {
        if len.is_null() {
            return Err(Failure::Null("len"));
        }
        if !equilibrium.is_finite() {
            return Err(Failure::Arg("equilibrium must be finite".into()));
        }
        let chain = derivative_chain(slice(years, n, "years")?, slice(epsilon, n, "epsilon")?)?;
        let states = energy_states("ffi", &chain, equilibrium);
        let out = slice_mut(out, n, "out")?;
        for (o, s) in out.iter_mut().zip(&states) {
            *o = NeedEnergyRow {
                year: s.year,
                epsilon: s.epsilon,
                velocity: s.velocity,
                acceleration: s.acceleration,
                jerk: s.jerk,
                kinetic: s.kinetic,
                potential: s.potential,
                hamiltonian: s.hamiltonian,
                lagrangian: s.lagrangian,
                accel_energy: s.accel_energy,
                jerk_energy: s.jerk_energy,
                total_energy: s.total_energy,
                power: s.power,
            };
        }
        *len = states.len();
        Ok(())
    })
}

/// Runs a pipeline command (`ingest`, `elasticity`, `regimes`, `forecast`,
/// `earlywarn` or `run`). `settings` holds `key = value` lines as in a config
/// file and may be NULL.
///
/// # Safety
/// Strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn need_pipeline_run(command: *const c_char, settings: *const c_char) -> NeedStatus {
    guard(|| {
        let stage = match string(command, "command")? {
            "ingest" => Stage::Ingest,
            "elasticity" => Stage::Elasticity,
            "regimes" => Stage::Regimes,
            "forecast" => Stage::Forecast,
            "earlywarn" => Stage::Earlywarn,
            "run" => Stage::Run,
            other => return Err(Failure::Arg(format!("unknown command '{other}'"))),
        };
        let settings = if settings.is_null() {
            Settings::new()
        } else {
            Settings::parse_str(string(settings, "settings")?)?
        };
        let cfg = RunConfig::from_settings(&settings)?;
        execute(stage, &cfg)?;
        Ok(())
    })
}
