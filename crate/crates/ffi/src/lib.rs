//! C ABI over the `mimocap` library.
//!
//! Covariances and scenarios live behind opaque handles that the caller
//! frees. Every fallible function returns a [`MimocapStatus`] and writes its
//! result through an out-pointer; on failure the message is available from
//! [`mimocap_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mimocap::capacity::{capacity_gaussian_approx, capacity_mu, capacity_su, relay_upper_bound};
use mimocap::eigpdf::EigenPdf;
use mimocap::scenario::parse_scenario;
use mimocap::{CovarianceSpec, Error, NetworkScenario, User};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimocapStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    NoConvergence = 3,
    Internal = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

/// Eigenvalue groups of an interference-plus-noise covariance.
pub struct MimocapCovariance(CovarianceSpec);

/// Desired link plus interferers.
pub struct MimocapScenario(NetworkScenario);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    // interior NULs would truncate the C string; replace them
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> MimocapStatus {
    match e {
        Error::Domain(_) => MimocapStatus::Domain,
        Error::NoConvergence { .. } => MimocapStatus::NoConvergence,
        Error::Internal(_) => MimocapStatus::Internal,
        Error::Parse { .. } => MimocapStatus::Parse,
        Error::Io(_) => MimocapStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MimocapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MimocapStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as `{what}`"));
            MimocapStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            MimocapStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mimocap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mimocap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a covariance from `count` (eigenvalue, multiplicity) pairs.
///
/// # Safety
/// `eigenvalues` and `multiplicities` must point to `count` readable elements
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_covariance_new(
    eigenvalues: *const f64,
    multiplicities: *const usize,
    count: usize,
    out: *mut *mut MimocapCovariance,
) -> MimocapStatus {
    guard(|| {
        let vals = slice(eigenvalues, count, "eigenvalues")?;
        let mults = slice(multiplicities, count, "multiplicities")?;
        let groups: Vec<(f64, usize)> = vals.iter().copied().zip(mults.iter().copied()).collect();
        let spec = CovarianceSpec::from_groups(&groups)?;
        write(out, Box::into_raw(Box::new(MimocapCovariance(spec))), "out")
    })
}

/// # Safety
/// `cov` must be NULL or a handle from [`mimocap_covariance_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mimocap_covariance_free(cov: *mut MimocapCovariance) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// Builds a scenario; user 0 is the desired link.
///
/// # Safety
/// `nt` and `power` must point to `users` readable elements and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_scenario_new(
    nr: usize,
    nt: *const usize,
    power: *const f64,
    users: usize,
    sigma2: f64,
    out: *mut *mut MimocapScenario,
) -> MimocapStatus {
    guard(|| {
        let nt = slice(nt, users, "nt")?;
        let power = slice(power, users, "power")?;
        let list = nt.iter().zip(power).map(|(&nt, &power)| User { nt, power }).collect();
        let s = NetworkScenario::new(nr, list, sigma2)?;
        write(out, Box::into_raw(Box::new(MimocapScenario(s))), "out")
    })
}

/// Parses the flat key-value scenario text used by the command-line tool.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_scenario_parse(text: *const c_char, out: *mut *mut MimocapScenario) -> MimocapStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Error::Parse { line: 0, msg: "scenario text is not UTF-8".into() })?;
        let s = parse_scenario(text)?;
        write(out, Box::into_raw(Box::new(MimocapScenario(s))), "out")
    })
}

/// # Safety
/// `s` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn mimocap_scenario_free(s: *mut MimocapScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Ergodic capacity `E ln det(I + H Φ H†)` in bits/s/Hz with `p` receive
/// antennas.
///
/// # Safety
/// `cov` must be a live handle and `bits` writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_capacity_su(cov: *const MimocapCovariance, p: usize, bits: *mut f64) -> MimocapStatus {
    guard(|| {
        let r = capacity_su(&deref(cov, "cov")?.0, p)?;
        write(bits, r.value_bits, "bits")
    })
}

/// Mutual information of the desired link under interference, bits/s/Hz.
///
/// # Safety
/// `s` must be a live handle and `bits` writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_capacity_mu(s: *const MimocapScenario, bits: *mut f64) -> MimocapStatus {
    guard(|| {
        let r = capacity_mu(&deref(s, "scenario")?.0)?;
        write(bits, r.value_bits, "bits")
    })
}

/// Capacity with the interference treated as extra white noise, bits/s/Hz.
///
/// # Safety
/// `s` must be a live handle and `bits` writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_capacity_gaussian(s: *const MimocapScenario, bits: *mut f64) -> MimocapStatus {
    guard(|| {
        let r = capacity_gaussian_approx(&deref(s, "scenario")?.0)?;
        write(bits, r.value_bits, "bits")
    })
}

/// Half-duplex relay upper bound (half the single-hop capacity), bits/s/Hz.
///
/// # Safety
/// `cov` must be a live handle and `bits` writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_relay_upper_bound(
    cov: *const MimocapCovariance,
    p: usize,
    bits: *mut f64,
) -> MimocapStatus {
    guard(|| {
        let r = relay_upper_bound(&deref(cov, "cov")?.0, p)?;
        write(bits, r.value_bits, "bits")
    })
}

/// Joint density of the ordered nonzero eigenvalues of `H Φ H†` at `x`
/// (`len` must equal `min(dim Φ, p)`).
///
/// # Safety
/// `cov` must be a live handle, `x` must point to `len` readable values and
/// `density` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimocap_joint_pdf(
    cov: *const MimocapCovariance,
    p: usize,
    x: *const f64,
    len: usize,
    density: *mut f64,
) -> MimocapStatus {
    guard(|| {
        let pdf = EigenPdf::new(&deref(cov, "cov")?.0, p)?;
        let x = slice(x, len, "x")?;
        let v = pdf.joint_pdf(x)?;
        write(density, v, "density")
    })
}
