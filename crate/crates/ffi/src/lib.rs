//! C interface to `toda-core`.
//!
//! Every function returns a [`TodaStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`toda_last_error_message`]. Windows are opaque handles released with
//! [`toda_window_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use toda_core::poly::Mat2;
use toda_core::weyl::HalfPlanePoint;
use toda_core::{cocycle, hierarchy, weyl, Boundary, Error, HierarchyPolynomial, JacobiWindow};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TodaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidWindow = 3,
    InvalidPolynomial = 4,
    Unsupported = 5,
    StructureViolation = 6,
    FlowBreakdown = 7,
    Integrity = 8,
    Pole = 9,
    BufferTooSmall = 10,
    Parse = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TodaBoundary {
    Periodic = 0,
    EventuallyFree = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaComplex {
    pub re: f64,
    pub im: f64,
}

/// Row major 2x2 complex matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaMat2 {
    pub m: [[TodaComplex; 2]; 2],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaMasterResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

/// Opaque Jacobi window.
pub struct TodaWindow(JacobiWindow);

impl From<TodaComplex> for Complex64 {
    fn from(z: TodaComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for TodaComplex {
    fn from(z: Complex64) -> Self {
        TodaComplex { re: z.re, im: z.im }
    }
}

impl From<Mat2> for TodaMat2 {
    fn from(m: Mat2) -> Self {
        let c = |r: usize, k: usize| TodaComplex::from(m.0[r][k]);
        TodaMat2 {
            m: [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]],
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TodaStatus {
    match e {
        Error::Dimension { .. } | Error::InvalidArgument(_) | Error::CapExceeded { .. } | Error::Degenerate(_) => {
            TodaStatus::InvalidArgument
        }
        Error::InvalidWindow(_) => TodaStatus::InvalidWindow,
        Error::InvalidPolynomial(_) => TodaStatus::InvalidPolynomial,
        Error::UnsupportedBoundary { .. } => TodaStatus::Unsupported,
        Error::StructureViolation { .. } | Error::ShapeViolation(_) => TodaStatus::StructureViolation,
        Error::FlowBreakdown { .. } => TodaStatus::FlowBreakdown,
        Error::Integrity { .. } => TodaStatus::Integrity,
        Error::Pole { .. } => TodaStatus::Pole,
        Error::BufferTooSmall { .. } => TodaStatus::BufferTooSmall,
        Error::Config(_) | Error::Io(_) => TodaStatus::Parse,
    }
}

fn fail(status: TodaStatus, msg: impl Into<String>) -> TodaStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), TodaStatus>) -> TodaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TodaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(TodaStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, TodaStatus>;
}

impl<T> OrStatus<T> for toda_core::Result<T> {
    fn or_status(self) -> Result<T, TodaStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn window<'a>(w: *const TodaWindow) -> Result<&'a JacobiWindow, TodaStatus> {
    w.as_ref().map(|w| &w.0).ok_or_else(|| fail(TodaStatus::NullPointer, "window is null"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, TodaStatus> {
    p.as_mut().ok_or_else(|| fail(TodaStatus::NullPointer, "output pointer is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], TodaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TodaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn polynomial(coeffs: *const f64, degree: usize) -> Result<HierarchyPolynomial, TodaStatus> {
    HierarchyPolynomial::new(slice(coeffs, degree, "coeffs")?.to_vec()).or_status()
}

fn upper(z: TodaComplex) -> Result<HalfPlanePoint, TodaStatus> {
    HalfPlanePoint::new(z.into()).or_status()
}

fn boxed(j: JacobiWindow) -> *mut TodaWindow {
    Box::into_raw(Box::new(TodaWindow(j)))
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn toda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `a` and `b` point to `sites` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_window_new(
    a: *const f64,
    b: *const f64,
    sites: usize,
    boundary: TodaBoundary,
    out_window: *mut *mut TodaWindow,
) -> TodaStatus {
    guard(|| {
        let dst = out(out_window)?;
        let a = slice(a, sites, "a")?.to_vec();
        let b = slice(b, sites, "b")?.to_vec();
        let boundary = match boundary {
            TodaBoundary::Periodic => Boundary::Periodic,
            TodaBoundary::EventuallyFree => Boundary::EventuallyFree,
        };
        *dst = boxed(JacobiWindow::new(a, b, boundary).or_status()?);
        Ok(())
    })
}

/// Parses a window from TOML text (`sites`, `boundary`, `a`, `b` keys).
///
/// # Safety
/// `text` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_window_from_toml(text: *const c_char, out_window: *mut *mut TodaWindow) -> TodaStatus {
    guard(|| {
        let dst = out(out_window)?;
        if text.is_null() {
            return Err(fail(TodaStatus::NullPointer, "text is null"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| fail(TodaStatus::Parse, "text is not UTF-8"))?;
        *dst = boxed(JacobiWindow::from_toml(s).or_status()?);
        Ok(())
    })
}

/// # Safety
/// `w` is null or came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn toda_window_free(w: *mut TodaWindow) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` is a live window; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_window_sites(w: *const TodaWindow, out_sites: *mut usize) -> TodaStatus {
    guard(|| {
        *out(out_sites)? = window(w)?.sites();
        Ok(())
    })
}

/// Copies the coefficients into `a` and `b`, each of length `len == sites`.
///
/// # Safety
/// `w` is a live window; `a` and `b` are writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn toda_window_get(w: *const TodaWindow, a: *mut f64, b: *mut f64, len: usize) -> TodaStatus {
    guard(|| {
        let j = window(w)?;
        if len != j.sites() {
            return Err(fail(TodaStatus::InvalidArgument, format!("len {len} != sites {}", j.sites())));
        }
        if a.is_null() || b.is_null() {
            return Err(fail(TodaStatus::NullPointer, "output buffer is null"));
        }
        std::slice::from_raw_parts_mut(a, len).copy_from_slice(j.a());
        std::slice::from_raw_parts_mut(b, len).copy_from_slice(j.b());
        Ok(())
    })
}

/// `(J^k)[n, n]`.
///
/// # Safety
/// `w` is a live window; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_diag_entry(w: *const TodaWindow, k: usize, n: isize, out_value: *mut f64) -> TodaStatus {
    guard(|| {
        *out(out_value)? = window(w)?.diag_entry(k, n).or_status()?;
        Ok(())
    })
}

/// `(J^k)[n, n + 1]`.
///
/// # Safety
/// `w` is a live window; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_offdiag_entry(w: *const TodaWindow, k: usize, n: isize, out_value: *mut f64) -> TodaStatus {
    guard(|| {
        *out(out_value)? = window(w)?.offdiag_entry(k, n).or_status()?;
        Ok(())
    })
}

/// Ascending eigenvalues of the window matrix, `len == sites`.
///
/// # Safety
/// `w` is a live window; `eigenvalues` is writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn toda_spectrum(w: *const TodaWindow, eigenvalues: *mut f64, len: usize) -> TodaStatus {
    guard(|| {
        let j = window(w)?;
        if len != j.sites() {
            return Err(fail(TodaStatus::InvalidArgument, format!("len {len} != sites {}", j.sites())));
        }
        if eigenvalues.is_null() {
            return Err(fail(TodaStatus::NullPointer, "eigenvalues is null"));
        }
        let s = j.spectrum().or_status()?;
        std::slice::from_raw_parts_mut(eigenvalues, len).copy_from_slice(&s.eigenvalues);
        Ok(())
    })
}

/// Integrates the flow with coefficients `p_1..p_d` to time `t`; the result
/// is a new window.
///
/// # Safety
/// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_evolve(
    w: *const TodaWindow,
    coeffs: *const f64,
    degree: usize,
    t: f64,
    dt: f64,
    out_window: *mut *mut TodaWindow,
) -> TodaStatus {
    guard(|| {
        let dst = out(out_window)?;
        let j = window(w)?;
        let p = polynomial(coeffs, degree)?;
        *dst = boxed(hierarchy::evolve(j, &p, t, dt).or_status()?.window);
        Ok(())
    })
}

/// One-step transfer matrix at site `n`.
///
/// # Safety
/// `w` is a live window; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_transfer_matrix(
    w: *const TodaWindow,
    n: isize,
    z: TodaComplex,
    out_matrix: *mut TodaMat2,
) -> TodaStatus {
    guard(|| {
        *out(out_matrix)? = cocycle::transfer_matrix(window(w)?, n, z.into()).matrix.into();
        Ok(())
    })
}

/// Cocycle `T(t, J)` at site `n`.
///
/// # Safety
/// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_evolve_t(
    w: *const TodaWindow,
    coeffs: *const f64,
    degree: usize,
    n: isize,
    z: TodaComplex,
    t: f64,
    dt: f64,
    out_matrix: *mut TodaMat2,
) -> TodaStatus {
    guard(|| {
        let dst = out(out_matrix)?;
        let p = polynomial(coeffs, degree)?;
        *dst = cocycle::evolve_t(window(w)?, &p, n, z.into(), t, dt).or_status()?.matrix.into();
        Ok(())
    })
}

/// Weyl m-functions at site `n`; `Im z > 0`, eventually free windows only.
///
/// # Safety
/// `w` is a live window; both outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn toda_m_functions(
    w: *const TodaWindow,
    n: isize,
    z: TodaComplex,
    m_plus: *mut TodaComplex,
    m_minus: *mut TodaComplex,
) -> TodaStatus {
    guard(|| {
        let (p, m) = (out(m_plus)?, out(m_minus)?);
        let pair = weyl::m_functions(window(w)?, n, upper(z)?).or_status()?;
        *p = pair.m_plus.into();
        *m = pair.m_minus.into();
        Ok(())
    })
}

/// Residuals of the three generator identities at site `n`.
///
/// # Safety
/// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn toda_check_master_equations(
    w: *const TodaWindow,
    n: isize,
    coeffs: *const f64,
    degree: usize,
    out_residuals: *mut TodaMasterResiduals,
) -> TodaStatus {
    guard(|| {
        let dst = out(out_residuals)?;
        let p = polynomial(coeffs, degree)?;
        let r = cocycle::check_master_equations(window(w)?, n, &p).or_status()?;
        *dst = TodaMasterResiduals {
            r1: r.r1,
            r2: r.r2,
            r3: r.r3,
        };
        Ok(())
    })
}
