//! Weyl m-functions of eventually free Jacobi operators and the Möbius
//! action of `SL(2, C)`.
//!
//! At reference site `n` the decaying solutions `u^±` of `J u = z u` give
//!
//! ```text
//! m_+ = -u^+_n / (a_{n-1} u^+_{n-1}),    m_- = u^-_n / (a_{n-1} u^-_{n-1})
//! ```
//!
//! which are the ratios `v_0 / v_1` and `-v_0 / v_1` of the transfer-matrix
//! data `v_n = (-u_n, a_{n-1} u_{n-1})`. Along a hierarchy flow
//! `m_+(t) = T m_+(0)` and `m_-(t) = diag(1,-1) T diag(1,-1) m_-(0)`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::cocycle::GeneratorSeries;
use crate::error::{Error, Result};
use crate::hierarchy::{FlowOptions, HierarchyPolynomial, Trajectory};
use crate::lattice::{Boundary, JacobiWindow};
use crate::poly::Mat2;

/// Tail deviation above which an evolved window is reported as contaminated.
pub const CONTAMINATION_TOL: f64 = 1e-8;

/// Number of outermost sites inspected for contamination.
pub const CONTAMINATION_EDGE: usize = 2;

/// A point of the open upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite() && z.im > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spectral parameter {z} is not in the open upper half-plane"
            )));
        }
        Ok(HalfPlanePoint(z))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for HalfPlanePoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        HalfPlanePoint::new(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MPair {
    pub m_plus: Complex64,
    pub m_minus: Complex64,
    pub z: HalfPlanePoint,
}

impl MPair {
    pub fn is_herglotz(&self) -> bool {
        self.m_plus.im > 0.0 && self.m_minus.im > 0.0
    }
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiemannPoint {
    Finite(Complex64),
    Infinity,
}

impl RiemannPoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            RiemannPoint::Finite(w) => Some(w),
            RiemannPoint::Infinity => None,
        }
    }
}

impl From<Complex64> for RiemannPoint {
    fn from(w: Complex64) -> Self {
        RiemannPoint::Finite(w)
    }
}

impl fmt::Display for RiemannPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiemannPoint::Finite(w) => write!(f, "{w}"),
            RiemannPoint::Infinity => f.write_str("inf"),
        }
    }
}

/// `w -> (a w + b) / (c w + d)`.
pub fn mobius(t: &Mat2, w: RiemannPoint) -> RiemannPoint {
    let [[a, b], [c, d]] = t.0;
    let zero = Complex64::new(0.0, 0.0);
    let (num, den) = match w {
        RiemannPoint::Finite(w) => (a * w + b, c * w + d),
        RiemannPoint::Infinity => (a, c),
    };
    if den == zero {
        RiemannPoint::Infinity
    } else {
        RiemannPoint::Finite(num / den)
    }
}

/// Root of `w^2 - z w + 1 = 0` with `|w| < 1`.
pub fn free_root(z: HalfPlanePoint) -> Complex64 {
    let z = z.z();
    let s = (z * z - 4.0).sqrt();
    let w1 = (z - s) / 2.0;
    let w2 = (z + s) / 2.0;
    // the roots multiply to 1, so off the real axis exactly one is inside
    let w = if w1.norm() < w2.norm() { w1 } else { w2 };
    debug_assert!(w.norm() < 1.0, "decaying root {w} for z = {z}");
    w
}

/// `m_+` of the free operator, `-w`.
pub fn free_m(z: HalfPlanePoint) -> Complex64 {
    -free_root(z)
}

/// Both m-functions of the free operator; `m_- = 1 / w`.
pub fn free_m_pair(z: HalfPlanePoint) -> MPair {
    let w = free_root(z);
    MPair {
        m_plus: -w,
        m_minus: w.inv(),
        z,
    }
}

const RESCALE_AT: f64 = 1e100;

fn rescale(x: &mut Complex64, y: &mut Complex64) {
    let s = x.norm().max(y.norm());
    if s > RESCALE_AT || (s < 1.0 / RESCALE_AT && s > 0.0) {
        *x /= s;
        *y /= s;
    }
}

/// `(u_{n-1}, u_n)` of the solution decaying at `+inf`, up to scale.
fn decaying_right(j: &JacobiWindow, n: isize, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    let len = j.sites() as isize;
    // right of the window the solution is w^k; start at (len, len + 1)
    let start = len.max(n);
    let (mut lo, mut hi) = (Complex64::new(1.0, 0.0), w);
    let mut k = start;
    // (lo, hi) = (u_k, u_{k+1})
    while k > n - 1 {
        let prev = ((z - j.b_at(k)) * lo - j.a_at(k) * hi) / j.a_at(k - 1);
        hi = lo;
        lo = prev;
        k -= 1;
        rescale(&mut lo, &mut hi);
    }
    (lo, hi)
}

/// `(u_{n-1}, u_n)` of the solution decaying at `-inf`, up to scale.
fn decaying_left(j: &JacobiWindow, n: isize, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    // left of the window the solution is w^{-k}; start at (-2, -1)
    let start = (-1).min(n - 1);
    let (mut lo, mut hi) = (w, Complex64::new(1.0, 0.0));
    let mut k = start;
    // (lo, hi) = (u_{k-1}, u_k)
    while k < n {
        let next = ((z - j.b_at(k)) * hi - j.a_at(k - 1) * lo) / j.a_at(k);
        lo = hi;
        hi = next;
        k += 1;
        rescale(&mut lo, &mut hi);
    }
    (lo, hi)
}

/// `m_±` at reference site `n` of an eventually free operator.
pub fn m_functions(j: &JacobiWindow, n: isize, z: HalfPlanePoint) -> Result<MPair> {
    if j.boundary() != Boundary::EventuallyFree {
        return Err(Error::UnsupportedBoundary {
            op: "m-functions",
            boundary: j.boundary(),
        });
    }
    let w = free_root(z);
    let zc = z.z();
    let a = j.a_at(n - 1);
    let (rp0, rp1) = decaying_right(j, n, zc, w);
    let (lm0, lm1) = decaying_left(j, n, zc, w);
    let zero = Complex64::new(0.0, 0.0);
    if rp0 == zero || lm0 == zero {
        return Err(Error::Pole { site: n });
    }
    let pair = MPair {
        m_plus: -rp1 / (a * rp0),
        m_minus: lm1 / (a * lm0),
        z,
    };
    if !(pair.m_plus.is_finite() && pair.m_minus.is_finite()) {
        return Err(Error::Pole { site: n });
    }
    Ok(pair)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MEvolution {
    /// `|m_-(t) - diag(1,-1) T diag(1,-1) m_-(0)|`
    pub res_minus: f64,
    /// `|m_+(t) - T m_+(0)|`
    pub res_plus: f64,
    /// The same two residuals with the conjugation moved to the other
    /// function, `(minus, plus)`.
    pub swapped_residuals: (f64, f64),
    pub initial: MPair,
    pub evolved: MPair,
    pub tail_deviation: f64,
    pub contaminated: bool,
    pub det_drift: f64,
}

impl MEvolution {
    pub fn max(&self) -> f64 {
        self.res_minus.max(self.res_plus)
    }
}

fn distance(p: RiemannPoint, m: Complex64) -> f64 {
    match p {
        RiemannPoint::Finite(w) => (w - m).norm(),
        RiemannPoint::Infinity => f64::INFINITY,
    }
}

fn conjugated(t: &Mat2) -> Mat2 {
    Mat2::sign_flip() * *t * Mat2::sign_flip()
}

fn compare(traj: &Trajectory, poly: &HierarchyPolynomial, site: isize, z: HalfPlanePoint) -> Result<MEvolution> {
    let initial = m_functions(traj.initial(), site, z)?;
    let evolved = m_functions(traj.final_window(), site, z)?;
    let t = GeneratorSeries::new(traj, poly, site)?.integrate(z.z())?;
    let plain = t.matrix;
    let conj = conjugated(&plain);
    let res_plus = distance(mobius(&plain, initial.m_plus.into()), evolved.m_plus);
    let res_minus = distance(mobius(&conj, initial.m_minus.into()), evolved.m_minus);
    let swapped = (
        distance(mobius(&plain, initial.m_minus.into()), evolved.m_minus),
        distance(mobius(&conj, initial.m_plus.into()), evolved.m_plus),
    );
    let tail = traj.final_window().tail_deviation(CONTAMINATION_EDGE);
    let contaminated = tail > CONTAMINATION_TOL;
    if contaminated {
        log::warn!("evolved window tails deviate from free by {tail:.3e}; widen the buffer");
    }
    Ok(MEvolution {
        res_minus,
        res_plus,
        swapped_residuals: swapped,
        initial,
        evolved,
        tail_deviation: tail,
        contaminated,
        det_drift: t.det_drift,
    })
}

/// Evolves `j0` to time `t`, recomputes `m_±` from the evolved operator and
/// compares with the Möbius images of `m_±(0)` under the cocycle.
pub fn check_m_evolution(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    site: isize,
    t: f64,
    z: HalfPlanePoint,
    dt: f64,
) -> Result<MEvolution> {
    check_m_evolution_with(j0, poly, site, t, z, dt, &FlowOptions::default())
}

/// As [`check_m_evolution`] with explicit flow options, e.g. a relaxed
/// buffer rule to study contamination.
pub fn check_m_evolution_with(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    site: isize,
    t: f64,
    z: HalfPlanePoint,
    dt: f64,
    opts: &FlowOptions,
) -> Result<MEvolution> {
    if j0.boundary() != Boundary::EventuallyFree {
        return Err(Error::UnsupportedBoundary {
            op: "m-function evolution",
            boundary: j0.boundary(),
        });
    }
    let traj = Trajectory::compute_with(j0, poly, t, dt, opts)?;
    compare(&traj, poly, site, z)
}

/// As [`check_m_evolution`] at several spectral parameters sharing one flow,
/// with the flow driven by `lax_poly` and the cocycle built from
/// `cocycle_poly`.
#[allow(clippy::too_many_arguments)]
pub fn check_m_evolution_grid(
    j0: &JacobiWindow,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    site: isize,
    t: f64,
    zs: &[HalfPlanePoint],
    dt: f64,
    opts: &FlowOptions,
) -> Result<Vec<MEvolution>> {
    if j0.boundary() != Boundary::EventuallyFree {
        return Err(Error::UnsupportedBoundary {
            op: "m-function evolution",
            boundary: j0.boundary(),
        });
    }
    let traj = Trajectory::compute_with(j0, lax_poly, t, dt, opts)?;
    zs.iter().map(|&z| compare(&traj, cocycle_poly, site, z)).collect()
}

/// One row of an m-function sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub z: Complex64,
    pub m: Complex64,
    pub t: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub plus: Vec<SweepRow>,
    pub minus: Vec<SweepRow>,
}

impl Sweep {
    pub fn is_herglotz(&self) -> bool {
        self.plus.iter().chain(&self.minus).all(|r| r.m.im > 0.0)
    }
}

/// `m_±` at every `z` and at every time in `times` (sorted ascending,
/// nonnegative) along the flow of `j0`.
pub fn m_sweep(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    site: isize,
    zs: &[HalfPlanePoint],
    times: &[f64],
    dt: f64,
) -> Result<Sweep> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("sweep times must be nonnegative and ascending".into()));
    }
    let mut sweep = Sweep::default();
    let mut current = j0.clone();
    let mut now = 0.0;
    for &t in times {
        if t > now {
            current = Trajectory::compute(&current, poly, t - now, dt)?.final_window().clone();
            now = t;
        }
        for &z in zs {
            let pair = m_functions(&current, site, z)?;
            sweep.plus.push(SweepRow { z: z.z(), m: pair.m_plus, t });
            sweep.minus.push(SweepRow { z: z.z(), m: pair.m_minus, t });
        }
    }
    Ok(sweep)
}

pub const CSV_HEADER: &str = "re_z,im_z,re_m,im_m,t";

/// Writes rows as CSV with 17 significant digits.
pub fn write_csv(mut out: impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.z.re, r.z.im, r.m.re, r.m.im, r.t
        )?;
    }
    Ok(())
}

/// Writes `m_plus.csv` and `m_minus.csv` into `dir`.
pub fn write_sweep(dir: &Path, sweep: &Sweep) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let plus = std::fs::File::create(dir.join("m_plus.csv"))?;
    write_csv(std::io::BufWriter::new(plus), &sweep.plus)?;
    let minus = std::fs::File::create(dir.join("m_minus.csv"))?;
    write_csv(std::io::BufWriter::new(minus), &sweep.minus)?;
    Ok(())
}
