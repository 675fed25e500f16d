//! C ABI over the `rnmvar` potentials, kernels and variance routines.
//!
//! Every fallible entry point returns an [`RnmStatus`]; on failure the message
//! is available from [`rnm_last_error_message`] on the calling thread.
//! Handles are created by `*_new`-style constructors and released with the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use rnmvar::edge::f_delta;
use rnmvar::geometry::Region;
use rnmvar::kernel::KernelEvaluator;
use rnmvar::potential::Potential;
use rnmvar::variance::{bulk_prediction, variance_quadrature, variance_radial_exact};
use rnmvar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnmComplex {
    pub re: f64,
    pub im: f64,
}

impl From<RnmComplex> for Complex64 {
    fn from(z: RnmComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for RnmComplex {
    fn from(z: Complex64) -> Self {
        RnmComplex { re: z.re, im: z.im }
    }
}

/// Opaque potential handle.
pub struct RnmPotential {
    inner: Potential,
}

/// Opaque kernel handle: an orthonormal basis of size `n` for one potential.
pub struct RnmKernel {
    inner: KernelEvaluator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RnmStatus {
    match e {
        Error::Unsupported(_) | Error::UnsupportedPotential(_) => RnmStatus::Unsupported,
        Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::Hypothesis(_)
        | Error::NTooSmall(_)
        | Error::DegenerateRoot(_)
        | Error::Config(_)
        | Error::Schema(_) => RnmStatus::InvalidArgument,
        _ => RnmStatus::Numerical,
    }
}

struct Fail(RnmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RnmStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> RnmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RnmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            RnmStatus::Panic
        }
    }
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle.
unsafe fn potential<'a>(p: *const RnmPotential) -> Result<&'a Potential, Fail> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("potential"))
}

/// # Safety
/// `k` must be null or a live handle.
unsafe fn kernel<'a>(k: *const RnmKernel) -> Result<&'a KernelEvaluator, Fail> {
    k.as_ref().map(|h| &h.inner).ok_or_else(|| null("kernel"))
}

unsafe fn new_potential(out: *mut *mut RnmPotential, p: Result<Potential, Error>) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let handle = Box::into_raw(Box::new(RnmPotential { inner: p? }));
    out.write(handle);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rnm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn rnm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// `Q(z) = |z|^2`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_ginibre(out: *mut *mut RnmPotential) -> RnmStatus {
    guard(|| new_potential(out, Ok(Potential::ginibre())))
}

/// Elliptic Ginibre potential with non-Hermiticity `|tau| < 1`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_elliptic_ginibre(tau: f64, out: *mut *mut RnmPotential) -> RnmStatus {
    guard(|| new_potential(out, Potential::elliptic_ginibre(tau)))
}

/// `Q(z) = c |z|^(2p)`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_radial_power(p: f64, c: f64, out: *mut *mut RnmPotential) -> RnmStatus {
    guard(|| new_potential(out, Potential::radial_power(p, c)))
}

/// # Safety
/// `p` must be null or a handle from an `rnm_potential_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_free(p: *mut RnmPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `Q(z)`.
///
/// # Safety
/// `p` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_eval(p: *const RnmPotential, z: RnmComplex, out: *mut f64) -> RnmStatus {
    guard(|| write(out, potential(p)?.eval(z.into())))
}

/// Quarter Laplacian `(Q_xx + Q_yy) / 4`.
///
/// # Safety
/// `p` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_potential_laplacian(p: *const RnmPotential, z: RnmComplex, out: *mut f64) -> RnmStatus {
    guard(|| write(out, potential(p)?.laplacian_quarter(z.into())))
}

/// Builds the correlation kernel `K_n` for a potential.
///
/// # Safety
/// `p` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rnm_kernel_new(p: *const RnmPotential, n: usize, out: *mut *mut RnmKernel) -> RnmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let k = KernelEvaluator::for_potential(potential(p)?, n)?;
        write(out, Box::into_raw(Box::new(RnmKernel { inner: k })))
    })
}

/// # Safety
/// `k` must be null or a handle from [`rnm_kernel_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rnm_kernel_free(k: *mut RnmKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Number of orthonormal functions in the kernel, or 0 for a null handle.
///
/// # Safety
/// `k` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rnm_kernel_size(k: *const RnmKernel) -> usize {
    k.as_ref().map_or(0, |h| h.inner.n())
}

/// `K_n(z, w)`.
///
/// # Safety
/// `k` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_kernel_eval(
    k: *const RnmKernel,
    z: RnmComplex,
    w: RnmComplex,
    out: *mut RnmComplex,
) -> RnmStatus {
    guard(|| write(out, kernel(k)?.eval(z.into(), w.into()).into()))
}

/// One-point density `K_n(z, z) / n`.
///
/// # Safety
/// `k` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_kernel_density(k: *const RnmKernel, z: RnmComplex, out: *mut f64) -> RnmStatus {
    guard(|| write(out, kernel(k)?.density(z.into())))
}

/// Number variance of a disc by kernel quadrature.
///
/// # Safety
/// `k` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_variance_disc_quadrature(
    k: *const RnmKernel,
    center: RnmComplex,
    radius: f64,
    budget: usize,
    out: *mut f64,
) -> RnmStatus {
    guard(|| {
        let region = Region::disc(center.into(), radius)?;
        write(out, variance_quadrature(kernel(k)?, &region, budget)?.value)
    })
}

/// Number variance of the centred disc of radius `a` by exact Bernoulli sums
/// (radial potentials only).
///
/// # Safety
/// `p` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_variance_radial_exact(
    p: *const RnmPotential,
    n: usize,
    a: f64,
    out: *mut f64,
) -> RnmStatus {
    guard(|| write(out, variance_radial_exact(potential(p)?, n, a)?.value))
}

/// Leading-order number variance of a disc inside the droplet.
///
/// # Safety
/// `p` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_bulk_prediction_disc(
    p: *const RnmPotential,
    center: RnmComplex,
    radius: f64,
    n: usize,
    out: *mut f64,
) -> RnmStatus {
    guard(|| {
        let region = Region::disc(center.into(), radius)?;
        write(out, bulk_prediction(potential(p)?, &region, n)?)
    })
}

/// Edge profile `f(delta)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rnm_edge_profile(delta: f64, out: *mut f64) -> RnmStatus {
    guard(|| write(out, f_delta(delta)?))
}
