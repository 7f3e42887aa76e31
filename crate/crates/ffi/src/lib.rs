//! C ABI over the core toolkit. Representations travel as opaque handles,
//! structured results as JSON strings the caller frees, and every failure
//! is a status code with a per-thread message behind it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slinv::pipeline::{run_pipeline, split_prime_power};
use slinv::reps::{rep_from_descriptor, UnitaryRep};
use slinv::strongconv::{moments, rep_norm};
use slinv::Error;

/// Status of one call. Anything other than `Ok` leaves a description in
/// `slinv_last_error_message` for the calling thread.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SlinvStatus {
    Ok = 0,
    /// The computation ran, and the mathematical verdict came out false.
    VerdictFailed = 1,
    /// Malformed descriptor, level, or argument.
    BadInput = 2,
    /// An enumeration or dimension cap was exceeded.
    CapExceeded = 3,
    /// Invariant violated inside the library; report it.
    Internal = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
}

/// Opaque unitary representation handle.
pub struct SlinvRep {
    inner: UnitaryRep,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).expect("no interior nul"));
}

fn status_of(e: &Error) -> SlinvStatus {
    match e {
        Error::VerdictFailed(_) => SlinvStatus::VerdictFailed,
        Error::CapExceeded { .. } | Error::SubgroupTooLarge { .. } | Error::DimensionCap(..) => {
            SlinvStatus::CapExceeded
        }
        Error::Internal(_) => SlinvStatus::Internal,
        _ => SlinvStatus::BadInput,
    }
}

fn fail(e: &Error) -> SlinvStatus {
    set_error(&e.to_string());
    status_of(e)
}

/// Run `body` with panics converted to `Internal` so they never unwind
/// across the C boundary.
fn guarded(body: impl FnOnce() -> SlinvStatus) -> SlinvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic inside the library");
            SlinvStatus::Internal
        }
    }
}

fn take_str<'a>(ptr: *const c_char) -> Result<&'a str, SlinvStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(SlinvStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        SlinvStatus::BadInput
    })
}

fn give_string(out: *mut *mut c_char, text: String) -> SlinvStatus {
    let clean: String = text.chars().filter(|&c| c != '\0').collect();
    let c = CString::new(clean).expect("no interior nul");
    unsafe { *out = c.into_raw() };
    SlinvStatus::Ok
}

/// Tool version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn slinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread; empty string when the
/// last call succeeded. Valid until the next library call on the thread.
#[no_mangle]
pub extern "C" fn slinv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Free a string returned by this library. Null is ignored.
#[no_mangle]
pub extern "C" fn slinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Build a representation from its JSON descriptor, e.g.
/// `{"type":"perm","space":"nonzero:Z2^4","level":2}`. On success writes a
/// handle the caller must release with `slinv_rep_free`.
#[no_mangle]
pub extern "C" fn slinv_rep_from_descriptor(
    descriptor: *const c_char,
    cap: usize,
    out: *mut *mut SlinvRep,
) -> SlinvStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output argument");
            return SlinvStatus::NullArgument;
        }
        let text = match take_str(descriptor) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let desc: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => {
                set_error(&format!("descriptor is not valid JSON: {e}"));
                return SlinvStatus::BadInput;
            }
        };
        match rep_from_descriptor(&desc, cap) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(SlinvRep { inner })) };
                SlinvStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a representation handle. Null is ignored.
#[no_mangle]
pub extern "C" fn slinv_rep_free(rep: *mut SlinvRep) {
    if !rep.is_null() {
        drop(unsafe { Box::from_raw(rep) });
    }
}

/// Dimension of the representation space; 0 for a null handle.
#[no_mangle]
pub extern "C" fn slinv_rep_dim(rep: *const SlinvRep) -> usize {
    if rep.is_null() {
        return 0;
    }
    unsafe { &*rep }.inner.dim()
}

/// Congruence level N of the representation; 0 for a null handle.
#[no_mangle]
pub extern "C" fn slinv_rep_level(rep: *const SlinvRep) -> u32 {
    if rep.is_null() {
        return 0;
    }
    unsafe { &*rep }.inner.level()
}

/// Largest eigenvalue of rho(S) + rho(S)* + rho(T) + rho(T)* over the
/// embedded upper-left SL2.
#[no_mangle]
pub extern "C" fn slinv_rep_norm(rep: *const SlinvRep, out: *mut f64) -> SlinvStatus {
    guarded(|| {
        if rep.is_null() || out.is_null() {
            set_error("null argument");
            return SlinvStatus::NullArgument;
        }
        match rep_norm(&unsafe { &*rep }.inner) {
            Ok(norm) => {
                unsafe { *out = norm };
                SlinvStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Construct a block-invariant vector for the representation and write the
/// witness report as JSON (fields: level, rep, step1, case, dimW, residual,
/// fallback, ...). Free the string with `slinv_string_free`.
#[no_mangle]
pub extern "C" fn slinv_pipeline_run(
    rep: *const SlinvRep,
    witness_json: *mut *mut c_char,
) -> SlinvStatus {
    guarded(|| {
        if rep.is_null() || witness_json.is_null() {
            set_error("null argument");
            return SlinvStatus::NullArgument;
        }
        let inner = &unsafe { &*rep }.inner;
        let (p, r) = match split_prime_power(inner.level()) {
            Ok(pr) => pr,
            Err(e) => return fail(&e),
        };
        match run_pipeline(inner, p, r) {
            Ok(witness) => give_string(
                witness_json,
                serde_json::to_string(&witness).expect("witness serializes"),
            ),
            Err(e) => fail(&e),
        }
    })
}

/// Restriction multiplicities of every irreducible of SL4(Z/level) to the
/// upper-left SL2 block, as a JSON report. `Ok` means every multiplicity is
/// at least 1; `VerdictFailed` means some irreducible has none (the report
/// is still written).
#[no_mangle]
pub extern "C" fn slinv_verify_level(
    level: u32,
    cap: usize,
    seed: u64,
    report_json: *mut *mut c_char,
) -> SlinvStatus {
    guarded(|| {
        if report_json.is_null() {
            set_error("null output argument");
            return SlinvStatus::NullArgument;
        }
        match slinv::invcount::verify_theorem_level(level, cap, seed) {
            Ok(report) => {
                let pass = report.verdict == "PASS";
                let status = give_string(
                    report_json,
                    serde_json::to_string(&report).expect("report serializes"),
                );
                if status != SlinvStatus::Ok {
                    return status;
                }
                if pass {
                    SlinvStatus::Ok
                } else {
                    set_error("some irreducible has no block-invariant vector");
                    SlinvStatus::VerdictFailed
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Search SL3(Z/p) for irreducibles without block-invariant vectors. `Ok`
/// means at least one was found; `VerdictFailed` means none exists.
#[no_mangle]
pub extern "C" fn slinv_counterexample_search(
    p: u32,
    cap: usize,
    seed: u64,
    report_json: *mut *mut c_char,
) -> SlinvStatus {
    guarded(|| {
        if report_json.is_null() {
            set_error("null output argument");
            return SlinvStatus::NullArgument;
        }
        match slinv::invcount::find_sl3_counterexample(p, cap, seed) {
            Ok(report) => {
                let found = report.verdict == "FOUND";
                let status = give_string(
                    report_json,
                    serde_json::to_string(&report).expect("report serializes"),
                );
                if status != SlinvStatus::Ok {
                    return status;
                }
                if found {
                    SlinvStatus::Ok
                } else {
                    set_error("every irreducible restricted with an invariant vector");
                    SlinvStatus::VerdictFailed
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Exact trace moments a_n of z = S + S^-1 + T + T^-1 with their norm lower
/// bounds b_n, as JSON `{"a": [...], "b": [...]}` for n = 1..n_max.
#[no_mangle]
pub extern "C" fn slinv_moments(n_max: usize, json: *mut *mut c_char) -> SlinvStatus {
    guarded(|| {
        if json.is_null() {
            set_error("null output argument");
            return SlinvStatus::NullArgument;
        }
        match moments(n_max) {
            Ok(ms) => give_string(
                json,
                serde_json::to_string(&serde_json::json!({"a": ms.a, "b": ms.b}))
                    .expect("moments serialize"),
            ),
            Err(e) => fail(&e),
        }
    })
}
