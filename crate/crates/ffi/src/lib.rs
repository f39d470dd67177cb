//! C ABI for the `nbrw` simulator: opaque trajectory handles, integer status
//! codes and a thread-local error message.
//!
//! Every function returns an [`NbrwStatus`] and writes results through out
//! pointers. Handles come from `nbrw_simulate` or `nbrw_trajectory_load` and
//! are released with `nbrw_trajectory_free`; strings returned by the library
//! are released with `nbrw_string_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nbrw::engine::{run_brw_construction, run_direct, RunConfig};
use nbrw::error::Error;
use nbrw::events::EventParams;
use nbrw::genealogy::sample_uniform;
use nbrw::schedule::{schedule_from_eta, ConstantSchedule};
use nbrw::tails::{epsilon_schedule, Family, Scales, TailLaw};
use nbrw::trajectory::Trajectory;
use nbrw::verify::{verify_trajectory, SizeMode};

/// Status codes; 0 is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbrwStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Capacity = 3,
    ScaleInfeasible = 4,
    Infeasible = 5,
    Parse = 6,
    Schema = 7,
    Io = 8,
    InvalidUtf8 = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Jump law families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbrwFamily {
    Pareto = 0,
    ParetoLog = 1,
}

/// Simulation engines.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbrwEngine {
    Direct = 0,
    Brw = 1,
}

/// Opaque trajectory handle.
pub struct NbrwTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NbrwStatus {
    match e {
        Error::Domain(_) => NbrwStatus::Domain,
        Error::Capacity(_) => NbrwStatus::Capacity,
        Error::ScaleInfeasible(_) => NbrwStatus::ScaleInfeasible,
        Error::Infeasible(_) => NbrwStatus::Infeasible,
        Error::Parse { .. } => NbrwStatus::Parse,
        Error::Schema { .. } => NbrwStatus::Schema,
        Error::Io(_) => NbrwStatus::Io,
    }
}

/// Failure inside a wrapper body.
enum Fail {
    Status(NbrwStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null() -> Fail {
    Fail::Status(NbrwStatus::NullPointer, "null pointer argument".into())
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NbrwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NbrwStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            NbrwStatus::Panic
        }
    }
}

fn law(family: NbrwFamily, alpha: f64) -> Result<TailLaw, Error> {
    let f = match family {
        NbrwFamily::Pareto => Family::Pareto,
        NbrwFamily::ParetoLog => Family::ParetoLog,
    };
    TailLaw::new(f, alpha)
}

unsafe fn traj_ref<'a>(h: *const NbrwTrajectory) -> Result<&'a Trajectory, Fail> {
    h.as_ref().map(|t| &t.inner).ok_or_else(null)
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail::Status(NbrwStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

fn check_time(t: &Trajectory, s: u32) -> Result<(), Fail> {
    if s > t.t() {
        return Err(Fail::Lib(Error::Domain(format!("time {s} beyond the trajectory end {}", t.t()))));
    }
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nbrw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nbrw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `ℓ_N` and `a_N` for a law and population size.
///
/// # Safety
/// `ell` and `a` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_scales(family: NbrwFamily, alpha: f64, n: u64, ell: *mut u32, a: *mut f64) -> NbrwStatus {
    guard(|| {
        if ell.is_null() || a.is_null() {
            return Err(null());
        }
        let s = Scales::new(&law(family, alpha)?, n)?;
        *ell = s.ell;
        *a = s.a;
        Ok(())
    })
}

/// Simulate `[0, t]` from all particles at 0 and return a new handle.
///
/// # Safety
/// `out` must be valid for writes; on success it owns a handle.
#[no_mangle]
pub unsafe extern "C" fn nbrw_simulate(
    family: NbrwFamily,
    alpha: f64,
    n: u64,
    t: u32,
    seed: u64,
    replicate: u64,
    engine: NbrwEngine,
    out: *mut *mut NbrwTrajectory,
) -> NbrwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let mut cfg = RunConfig::new(law(family, alpha)?, n, t, seed);
        cfg.replicate = replicate;
        let inner = match engine {
            NbrwEngine::Direct => run_direct(&cfg)?,
            NbrwEngine::Brw => run_brw_construction(&cfg)?,
        };
        *out = Box::into_raw(Box::new(NbrwTrajectory { inner }));
        Ok(())
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_free(h: *mut NbrwTrajectory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Population size, horizon, `ℓ_N` and `a_N` of a trajectory; any out
/// pointer may be null.
///
/// # Safety
/// `h` must be a live handle; non-null out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_info(
    h: *const NbrwTrajectory,
    n: *mut u64,
    t: *mut u32,
    ell: *mut u32,
    a: *mut f64,
) -> NbrwStatus {
    guard(|| {
        let tr = traj_ref(h)?;
        if let Some(p) = n.as_mut() {
            *p = tr.n() as u64;
        }
        if let Some(p) = t.as_mut() {
            *p = tr.t();
        }
        if let Some(p) = ell.as_mut() {
            *p = tr.scales.ell;
        }
        if let Some(p) = a.as_mut() {
            *p = tr.a();
        }
        Ok(())
    })
}

/// Copy the sorted positions at time `s` into `buf`, which holds `len ≥ N` values.
///
/// # Safety
/// `h` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_positions(h: *const NbrwTrajectory, s: u32, buf: *mut f64, len: usize) -> NbrwStatus {
    guard(|| {
        let tr = traj_ref(h)?;
        check_time(tr, s)?;
        copy_out(tr.positions(s), buf, len)
    })
}

/// Copy the parent ranks of generation `s ≥ 1` into `buf` (`len ≥ N`).
///
/// # Safety
/// `h` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_parents(h: *const NbrwTrajectory, s: u32, buf: *mut u32, len: usize) -> NbrwStatus {
    guard(|| {
        let tr = traj_ref(h)?;
        check_time(tr, s)?;
        if s == 0 {
            return Err(Fail::Lib(Error::Domain("generation 0 has no parents".into())));
        }
        copy_out(&tr.generations[s as usize].parents, buf, len)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null());
    }
    if len < src.len() {
        return Err(Fail::Status(NbrwStatus::BufferTooSmall, format!("buffer holds {len}, need {}", src.len())));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Whether two trajectories have bit-identical positions, links and jumps.
///
/// # Safety
/// Both handles must be live; `same` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_same_process(
    a: *const NbrwTrajectory,
    b: *const NbrwTrajectory,
    same: *mut bool,
) -> NbrwStatus {
    guard(|| {
        let (x, y) = (traj_ref(a)?, traj_ref(b)?);
        *same.as_mut().ok_or_else(null)? = x.same_process(y);
        Ok(())
    })
}

/// Write a trajectory; a `.bin` extension selects the binary format.
///
/// # Safety
/// `h` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_save(h: *const NbrwTrajectory, path: *const c_char) -> NbrwStatus {
    guard(|| {
        traj_ref(h)?.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Read a trajectory file of either format into a new handle.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_trajectory_load(path: *const c_char, out: *mut *mut NbrwTrajectory) -> NbrwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let inner = Trajectory::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(NbrwTrajectory { inner }));
        Ok(())
    })
}

/// Evaluate events at time `t` on a uniform sample of `m` particles and run
/// every checker. The schedule is the probe schedule when `rho > 0`, and
/// otherwise derived from `eta`. Writes the number of counterexamples and,
/// when `json` is non-null, the full report as a string to free with
/// `nbrw_string_free`.
///
/// # Safety
/// `h` must be a live handle; `counterexamples` valid for writes; `json`
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nbrw_verify(
    h: *const NbrwTrajectory,
    eta: f64,
    rho: f64,
    t: u32,
    m: usize,
    seed: u64,
    counterexamples: *mut u32,
    json: *mut *mut c_char,
) -> NbrwStatus {
    guard(|| {
        let tr = traj_ref(h)?;
        if counterexamples.is_null() {
            return Err(null());
        }
        let alpha = tr.law().alpha;
        let sched = if rho > 0.0 { ConstantSchedule::probe(alpha, eta, rho)? } else { schedule_from_eta(eta, alpha)? };
        let sample = sample_uniform(tr, t, m, seed)?;
        let ell = tr.scales.ell;
        let rep = verify_trajectory(tr, &sched, t, &sample, &EventParams::new(epsilon_schedule(ell).min(ell)), SizeMode::Realized)?;
        *counterexamples = rep.counterexamples().len() as u32;
        if let Some(slot) = json.as_mut() {
            let text = serde_json::to_string(&rep).expect("report serializes");
            *slot = CString::new(text).expect("JSON has no NUL").into_raw();
        }
        Ok(())
    })
}

/// Release a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nbrw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
