//! C ABI for `ngrc-control`.
//!
//! Every entry point returns an [`NgrcStatus`]. On failure a description is
//! available from [`ngrc_last_error`] until the next call on the same thread.
//! Models and traces are opaque handles owned by the caller and released with
//! their `_free` functions. Strings returned by the library are released with
//! [`ngrc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ngrc_control::control::{control_signal, run_closed_loop, ControlTrace, ControllerConfig};
use ngrc_control::harness::{default_alpha_grid, generate_dataset, grid_search_alpha, ControlTask, DataGenSpec};
use ngrc_control::ngrc::{FeatureConfig, NgrcModel};
use ngrc_control::plant::{henon_map, Henon, HenonParams, NoiseSpec, PlantState};
use ngrc_control::{rng, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NonInvertible = 4,
    Generation = 5,
    Training = 6,
    Escaped = 7,
    Json = 8,
    Panic = 9,
}

/// Built-in control tasks on the Hénon map.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgrcTask {
    Pu1ToPu2 = 0,
    Period4 = 1,
    Arbitrary = 2,
}

/// One closed-loop iteration: state before the step, applied control,
/// desired output and tracking error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NgrcTraceRow {
    pub iter: usize,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub x_des: f64,
    pub e: f64,
}

/// Opaque trained model.
pub struct NgrcModelHandle(NgrcModel);

/// Opaque closed-loop trace.
pub struct NgrcTraceHandle(ControlTrace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> NgrcStatus {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Io(_) => NgrcStatus::InvalidArgument,
        Error::Dimension { .. } => NgrcStatus::Dimension,
        Error::Escaped { .. } => NgrcStatus::Escaped,
        Error::NonInvertibleEffectiveness(_) => NgrcStatus::NonInvertible,
        Error::Training(_) => NgrcStatus::Training,
        Error::Generation { .. } => NgrcStatus::Generation,
        Error::Json(_) => NgrcStatus::Json,
    }
}

struct Fail(NgrcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NgrcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NgrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NgrcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            NgrcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn model_ref<'a>(m: *const NgrcModelHandle) -> Result<&'a NgrcModel, Fail> {
    m.as_ref().map(|h| &h.0).ok_or_else(|| null("model"))
}

fn copy_out(src: &[f64], dst: &mut [f64]) -> Result<(), Fail> {
    if dst.len() != src.len() {
        return Err(Error::Dimension { what: "output buffer", expected: src.len(), got: dst.len() }.into());
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn ngrc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ngrc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Train a scalar Hénon model from one random trajectory of `m_train + m_test`
/// samples, choosing the ridge parameter on the test rows. Gives the same
/// model as `ngrc-control train` with the same seed and settings.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_train_henon(
    seed: u64,
    sigma_d: f64,
    m_train: usize,
    m_test: usize,
    out: *mut *mut NgrcModelHandle,
) -> NgrcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = DataGenSpec { m_train, m_test, sigma_d, ..DataGenSpec::default() };
        let params = HenonParams::default();
        let data = generate_dataset(&spec, &params, &mut rng::child(seed, "train", &[]))?;
        let choice = grid_search_alpha(&data, &default_alpha_grid(), &FeatureConfig::henon())?;
        *out = Box::into_raw(Box::new(NgrcModelHandle(choice.model)));
        Ok(())
    })
}

/// Load a model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_from_json(json: *const c_char, out: *mut *mut NgrcModelHandle) -> NgrcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(NgrcStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let model = NgrcModel::from_json(text)?;
        *out = Box::into_raw(Box::new(NgrcModelHandle(model)));
        Ok(())
    })
}

/// Serialize a model to JSON. Free the result with [`ngrc_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_to_json(model: *const NgrcModelHandle, out: *mut *mut c_char) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(m.to_json()?).map_err(|e| Fail(NgrcStatus::Json, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_free(model: *mut NgrcModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of outputs `d` and readout columns `d_tot`.
///
/// # Safety
/// `model` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_dims(
    model: *const NgrcModelHandle,
    d: *mut usize,
    d_tot: *mut usize,
    d_lin: *mut usize,
) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if d.is_null() || d_tot.is_null() || d_lin.is_null() {
            return Err(null("output"));
        }
        *d = m.config().d;
        *d_tot = m.config().d_tot();
        *d_lin = m.config().d_lin;
        Ok(())
    })
}

/// Copy the readout `[w_u | w_x]` in row-major order into `out`, which must
/// hold exactly `d * d_tot` values.
///
/// # Safety
/// `model` must be a live handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_weights(model: *const NgrcModelHandle, out: *mut f64, len: usize) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let w: Vec<f64> = (0..m.config().d).flat_map(|r| m.weight_row(r)).collect();
        copy_out(&w, slice_mut(out, len, "out")?)
    })
}

/// One-step prediction with control: `out = W [u | c | x | nonlinear(x)]`.
///
/// # Safety
/// `model` must be a live handle; the buffers must hold the given lengths.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_predict(
    model: *const NgrcModelHandle,
    x: *const f64,
    x_len: usize,
    u: *const f64,
    u_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let y = m.predict(slice(x, x_len, "x")?, slice(u, u_len, "u")?)?;
        copy_out(&y, slice_mut(out, out_len, "out")?)
    })
}

/// One-step prediction without the control term.
///
/// # Safety
/// `model` must be a live handle; the buffers must hold the given lengths.
#[no_mangle]
pub unsafe extern "C" fn ngrc_model_predict_unforced(
    model: *const NgrcModelHandle,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let y = m.predict_unforced(slice(x, x_len, "x")?)?;
        copy_out(&y, slice_mut(out, out_len, "out")?)
    })
}

/// Scalar control law `u = (x_des_next - F(x) + gain * e) / w_u`.
///
/// # Safety
/// `model` must be a live handle; `x` must hold `x_len` values; `u` writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_control_signal(
    model: *const NgrcModelHandle,
    x: *const f64,
    x_len: usize,
    x_des_next: f64,
    e: f64,
    gain: f64,
    u: *mut f64,
) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if u.is_null() {
            return Err(null("u"));
        }
        *u = control_signal(m, slice(x, x_len, "x")?, x_des_next, e, gain)?;
        Ok(())
    })
}

/// Noise-free controlled Hénon step with parameters `a`, `b`, `g`.
///
/// # Safety
/// `x_out` and `y_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_henon_step(
    x: f64,
    y: f64,
    u: f64,
    a: f64,
    b: f64,
    g: f64,
    x_out: *mut f64,
    y_out: *mut f64,
) -> NgrcStatus {
    guard(|| {
        if x_out.is_null() || y_out.is_null() {
            return Err(null("output"));
        }
        let s = henon_map(PlantState::new(x, y), u, &HenonParams { a, b, g }, 0.0, 0.0);
        *x_out = s.x;
        *y_out = s.y;
        Ok(())
    })
}

/// Run the closed loop for `task` on the default Hénon map with process
/// noise `sigma_d`. The run stops early if the state escapes.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_closed_loop(
    model: *const NgrcModelHandle,
    task: NgrcTask,
    gain: f64,
    sigma_d: f64,
    n_iters: usize,
    seed: u64,
    out: *mut *mut NgrcTraceHandle,
) -> NgrcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let task = match task {
            NgrcTask::Pu1ToPu2 => ControlTask::Pu1ToPu2,
            NgrcTask::Period4 => ControlTask::Period4,
            NgrcTask::Arbitrary => ControlTask::Arbitrary,
        };
        let params = HenonParams::default();
        let target = task.target(&params)?;
        let plant = Henon::new(params, NoiseSpec::new(sigma_d)?);
        let ctl = ControllerConfig { gain, target, model: m };
        let trace = run_closed_loop(
            &plant,
            &ctl,
            task.initial_state(&params)?,
            n_iters,
            &mut rng::child(seed, "ffi-run", &[]),
        )?;
        *out = Box::into_raw(Box::new(NgrcTraceHandle(trace)));
        Ok(())
    })
}

/// Number of recorded iterations; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ngrc_trace_len(trace: *const NgrcTraceHandle) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Whether the run ended because the state escaped.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ngrc_trace_escaped(trace: *const NgrcTraceHandle) -> bool {
    trace.as_ref().is_some_and(|t| t.0.escaped)
}

/// Copy iteration `i` into `row`.
///
/// # Safety
/// `trace` must be a live handle; `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ngrc_trace_row(trace: *const NgrcTraceHandle, i: usize, row: *mut NgrcTraceRow) -> NgrcStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if row.is_null() {
            return Err(null("row"));
        }
        let r = t.0.records.get(i).ok_or_else(|| {
            Fail(NgrcStatus::InvalidArgument, format!("row {i} out of range for trace of length {}", t.0.len()))
        })?;
        *row = NgrcTraceRow {
            iter: r.iter,
            x: r.observables[0],
            y: r.observables.get(1).copied().unwrap_or(f64::NAN),
            u: r.u,
            x_des: r.x_des,
            e: r.e,
        };
        Ok(())
    })
}

/// Release a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ngrc_trace_free(trace: *mut NgrcTraceHandle) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NonInvertibleEffectiveness(0.0)), NgrcStatus::NonInvertible);
        assert_eq!(status_of(&Error::Generation { retries: 3 }), NgrcStatus::Generation);
        assert_eq!(status_of(&Error::Escaped { x: 4.0, y: 0.0 }), NgrcStatus::Escaped);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, NgrcStatus::Panic);
        let msg = unsafe { CStr::from_ptr(ngrc_last_error()) }.to_str().unwrap().to_owned();
        assert!(msg.contains("boom"), "{msg}");
    }

    #[test]
    fn success_clears_error() {
        set_error("stale");
        assert_eq!(guard(|| Ok(())), NgrcStatus::Ok);
        assert_eq!(unsafe { CStr::from_ptr(ngrc_last_error()) }.to_bytes(), b"");
    }
}
