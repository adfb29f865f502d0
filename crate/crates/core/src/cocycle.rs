//! Cocycle side of the Toda hierarchy.
//!
//! Everything here is anchored at a reference site `n`: the one-step transfer
//! matrix `M(J)` uses `a_n, b_n`, and `B(J)` uses `a_{n-1}, a_n, b_n` and the
//! entries `(J^k)_n = <delta_n, J^k delta_n>`, `(LJ^k)_n = <delta_n, J^k
//! delta_{n+1}>`. `B(SJ)` at site `n` is `B(J)` at site `n + 1`.
//!
//! `B(J)` is assembled from the auxiliary polynomials
//!
//! ```text
//! G^(r) = sum_{j=0}^{r-1} z^{r-1-j} (J^j)_n
//! H^(r) = z^r - (J^r)_n + 2 a_n sum_{j=1}^{r-1} z^{r-1-j} (LJ^j)_n
//! G = sum_j p_j G^(j),   H = sum_j p_j H^(j)
//! B(J) = [[2(z - b_n) G - H,          2 G       ],
//!         [-2 a_{n-1}^2 G(S*J),  -(2(z - b_n) G - H)]]
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hierarchy::{lax_rhs, rk4_step, HierarchyPolynomial, LaxRhs, Trajectory};
use crate::lattice::{Boundary, JacobiWindow};
use crate::poly::{Mat2, Poly, PolyMatrix2};

/// Largest tolerated `|det T - 1|` before an integration is rejected.
pub const DET_INTEGRITY_TOL: f64 = 1e-6;

/// An `SL(2, C)` matrix at spectral parameter `z` and flow time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferState {
    pub matrix: Mat2,
    pub z: Complex64,
    pub t: f64,
    /// Largest `|det - 1|` seen while producing this matrix.
    pub det_drift: f64,
}

impl TransferState {
    fn new(matrix: Mat2, z: Complex64, t: f64, det_drift: f64) -> Self {
        TransferState {
            matrix,
            z,
            t,
            det_drift,
        }
    }
}

/// `M(J) = [[(z - b_n)/a_n, 1/a_n], [-a_n, 0]]`.
pub fn transfer_matrix(j: &JacobiWindow, n: isize, z: Complex64) -> TransferState {
    let m = transfer_mat(j, n, z);
    TransferState::new(m, z, 0.0, (m.det() - 1.0).norm())
}

fn transfer_mat(j: &JacobiWindow, n: isize, z: Complex64) -> Mat2 {
    let (a, b) = (j.a_at(n), j.b_at(n));
    Mat2::new(
        (z - b) / a,
        Complex64::new(1.0 / a, 0.0),
        Complex64::new(-a, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("auxiliary polynomial order must be >= 1".into()));
    }
    Ok(())
}

/// `G^(r)` at site `n`, degree `r - 1`.
pub fn g_poly(j: &JacobiWindow, n: isize, r: usize) -> Result<Poly> {
    check_r(r)?;
    let mut c = vec![0.0; r];
    for k in 0..r {
        c[r - 1 - k] = j.diag_entry(k, n)?;
    }
    Ok(Poly::from_real(&c))
}

/// `H^(r)` at site `n`, degree `r`, leading coefficient 1.
pub fn h_poly(j: &JacobiWindow, n: isize, r: usize) -> Result<Poly> {
    check_r(r)?;
    let mut c = vec![0.0; r + 1];
    c[r] = 1.0;
    c[0] -= j.diag_entry(r, n)?;
    let two_a = 2.0 * j.a_at(n);
    for k in 1..r {
        c[r - 1 - k] += two_a * j.offdiag_entry(k, n)?;
    }
    Ok(Poly::from_real(&c))
}

/// Weighted auxiliary polynomials `G = sum p_j G^(j)`, `H = sum p_j H^(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GHReport {
    pub site: isize,
    pub g: Poly,
    pub h: Poly,
}

pub fn gh_report(j: &JacobiWindow, n: isize, poly: &HierarchyPolynomial) -> Result<GHReport> {
    let mut g = Poly::zero();
    let mut h = Poly::zero();
    for r in 1..=poly.degree() {
        let p = poly.p(r);
        g = &g + &g_poly(j, n, r)?.scale(p);
        h = &h + &h_poly(j, n, r)?.scale(p);
    }
    Ok(GHReport { site: n, g, h })
}

/// [`gh_report`] at every window site.
pub fn gh_across(j: &JacobiWindow, poly: &HierarchyPolynomial) -> Result<Vec<GHReport>> {
    (0..j.sites() as isize).map(|n| gh_report(j, n, poly)).collect()
}

/// `B(J)` at site `n`.
pub fn build_b(j: &JacobiWindow, n: isize, poly: &HierarchyPolynomial) -> Result<PolyMatrix2> {
    let GHReport { g, h, .. } = gh_report(j, n, poly)?;
    let g_left = gh_report(j, n - 1, poly)?.g;
    let b = j.b_at(n);
    let a_left = j.a_at(n - 1);
    // 2(z - b) G - H
    let zg = &g.shift_up() - &g.scale(b);
    let a = &zg.scale(2.0) - &h;
    let c = g.scale(2.0);
    let d = g_left.scale(-2.0 * a_left * a_left);
    let e = -&a;
    Ok(PolyMatrix2::new(a, c, d, e))
}

/// Inverts `C = 2G` for the weights `p_1..p_d`, with `d = deg C + 1`.
pub fn recover_p(c: &Poly, j: &JacobiWindow, n: isize) -> Result<HierarchyPolynomial> {
    let top = c
        .degree(0.0)
        .ok_or_else(|| Error::Degenerate("C is the zero polynomial".into()))?;
    let d = top + 1;
    let powers: Vec<f64> = (0..d).map(|k| j.diag_entry(k, n)).collect::<Result<_>>()?;
    let mut p = vec![0.0; d + 1];
    for k in (1..=d).rev() {
        let mut v = c.coeff(k - 1).re / 2.0;
        for i in 1..=d - k {
            v -= p[k + i] * powers[i];
        }
        p[k] = v;
    }
    HierarchyPolynomial::new(p[1..].to_vec())
}

/// Shape tolerance for [`compute_q`], relative to the largest coefficient.
const SHAPE_TOL: f64 = 1e-12;

/// `q_d..q_1` by the descending recursion
/// `q_k = -A_k + C_{k-1} - b_n C_k - 2 a_n sum_{i>=1} (LJ^i)_n q_{k+1+i}`.
pub fn compute_q(bm: &PolyMatrix2, j: &JacobiWindow, n: isize) -> Result<Vec<f64>> {
    let scale = 1.0_f64.max(bm.a().max_abs()).max(bm.c().max_abs());
    let tol = SHAPE_TOL * scale;
    if !bm.trace().is_zero(tol) {
        return Err(Error::ShapeViolation("trace is not identically zero".into()));
    }
    let d = bm
        .a()
        .degree(tol)
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::ShapeViolation("A must have degree >= 1".into()))?;
    if bm.c().degree(tol).is_some_and(|k| k >= d) || bm.d().degree(tol).is_some_and(|k| k >= d) {
        return Err(Error::ShapeViolation(format!(
            "C and D must have degree below deg A = {d}"
        )));
    }
    let (a_n, b_n) = (j.a_at(n), j.b_at(n));
    let lj: Vec<f64> = (0..d).map(|k| j.offdiag_entry(k, n)).collect::<Result<_>>()?;
    let ca = |k: usize| bm.a().coeff(k).re;
    let cc = |k: usize| bm.c().coeff(k).re;
    let mut q = vec![0.0; d + 2];
    for k in (1..=d).rev() {
        let mut v = -ca(k) + cc(k - 1) - b_n * cc(k);
        for i in 1..d.saturating_sub(k) {
            v -= 2.0 * a_n * lj[i] * q[k + 1 + i];
        }
        q[k] = v;
    }
    Ok(q[1..=d].to_vec())
}

/// Precomputed `B` along a trajectory for one reference site.
#[derive(Debug, Clone)]
pub struct GeneratorSeries {
    h: f64,
    nodes: Vec<PolyMatrix2>,
    mids: Vec<PolyMatrix2>,
}

impl GeneratorSeries {
    pub fn new(traj: &Trajectory, poly: &HierarchyPolynomial, site: isize) -> Result<Self> {
        let nodes = traj
            .nodes()
            .iter()
            .map(|j| build_b(j, site, poly))
            .collect::<Result<_>>()?;
        let mids = traj
            .mids()
            .iter()
            .map(|j| build_b(j, site, poly))
            .collect::<Result<_>>()?;
        Ok(GeneratorSeries {
            h: traj.step(),
            nodes,
            mids,
        })
    }

    /// Integrates `dT/dt = B(t ⊙ J) T`, `T(0) = I`, by RK4 at spectral
    /// parameter `z`.
    pub fn integrate(&self, z: Complex64) -> Result<TransferState> {
        let h = self.h;
        let mut t = Mat2::identity();
        let mut drift: f64 = 0.0;
        let mut b0 = self.nodes[0].eval(z);
        for (k, mid) in self.mids.iter().enumerate() {
            let bm = mid.eval(z);
            let b1 = self.nodes[k + 1].eval(z);
            let k1 = b0 * t;
            let k2 = bm * (t + k1.scale(h / 2.0));
            let k3 = bm * (t + k2.scale(h / 2.0));
            let k4 = b1 * (t + k3.scale(h));
            t = t + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
            let dev = (t.det() - 1.0).norm();
            drift = drift.max(dev);
            if dev > DET_INTEGRITY_TOL {
                return Err(Error::Integrity { drift: dev, step: k });
            }
            b0 = b1;
        }
        Ok(TransferState::new(t, z, self.mids.len() as f64 * h, drift))
    }
}

/// `T(t_final, J0)` at site `n`.
pub fn evolve_t(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    site: isize,
    z: Complex64,
    t_final: f64,
    dt: f64,
) -> Result<TransferState> {
    let traj = Trajectory::compute(j0, poly, t_final, dt)?;
    GeneratorSeries::new(&traj, poly, site)?.integrate(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleCheck {
    /// `|T(s + t, J) - T(s, t ⊙ J) T(t, J)|`, largest entry.
    pub residual: f64,
    pub det_drift: f64,
}

/// Cocycle law for the three integrations `T(s+t, J)`, `T(t, J)`, `T(s, t ⊙ J)`.
pub fn check_cocycle(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    site: isize,
    z: Complex64,
    s: f64,
    t: f64,
    dt: f64,
) -> Result<CocycleCheck> {
    check_cocycle_with(j0, poly, poly, site, z, s, t, dt)
}

/// As [`check_cocycle`] with the flow driven by `lax_poly` and `B` built
/// from `cocycle_poly`.
#[allow(clippy::too_many_arguments)]
pub fn check_cocycle_with(
    j0: &JacobiWindow,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    site: isize,
    z: Complex64,
    s: f64,
    t: f64,
    dt: f64,
) -> Result<CocycleCheck> {
    let full_traj = Trajectory::compute(j0, lax_poly, s + t, dt)?;
    let full = GeneratorSeries::new(&full_traj, cocycle_poly, site)?.integrate(z)?;
    let first_traj = Trajectory::compute(j0, lax_poly, t, dt)?;
    let first = GeneratorSeries::new(&first_traj, cocycle_poly, site)?.integrate(z)?;
    let second_traj = Trajectory::compute(first_traj.final_window(), lax_poly, s, dt)?;
    let second = GeneratorSeries::new(&second_traj, cocycle_poly, site)?.integrate(z)?;
    let composed = second.matrix * first.matrix;
    Ok(CocycleCheck {
        residual: (full.matrix - composed).max_abs(),
        det_drift: full.det_drift.max(first.det_drift).max(second.det_drift),
    })
}

/// `B(SJ) M(J) - M(J) B(J)` at `z`, using `B_poly` for the generator.
fn curvature_rhs(j: &JacobiWindow, n: isize, poly: &HierarchyPolynomial, z: Complex64) -> Result<Mat2> {
    let m = transfer_mat(j, n, z);
    let b_here = build_b(j, n, poly)?.eval(z);
    let b_next = build_b(j, n + 1, poly)?.eval(z);
    Ok(b_next * m - m * b_here)
}

/// Central difference of `M(t ⊙ J)` at `t = 0` along the `flow_poly` flow.
fn curvature_fd(
    j: &JacobiWindow,
    n: isize,
    flow_poly: &HierarchyPolynomial,
    z: Complex64,
    dt: f64,
) -> Result<Mat2> {
    let plus = rk4_step(j, flow_poly, dt, 0)?;
    let minus = rk4_step(j, flow_poly, -dt, 0)?;
    Ok((transfer_mat(&plus, n, z) - transfer_mat(&minus, n, z)).scale(1.0 / (2.0 * dt)))
}

/// `|dM/dt - (B(SJ) M - M B(J))|` with `dM/dt` by central differences of
/// step `dt`.
pub fn check_zero_curvature(
    j: &JacobiWindow,
    n: isize,
    poly: &HierarchyPolynomial,
    z: Complex64,
    dt: f64,
) -> Result<f64> {
    check_zero_curvature_with(j, n, poly, poly, z, dt)
}

/// As [`check_zero_curvature`] with the flow driven by `lax_poly` and `B`
/// built from `cocycle_poly`.
pub fn check_zero_curvature_with(
    j: &JacobiWindow,
    n: isize,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    z: Complex64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let fd = curvature_fd(j, n, lax_poly, z, dt)?;
    Ok((fd - curvature_rhs(j, n, cocycle_poly, z)?).max_abs())
}

/// Zero-curvature residuals at each `dt` and the observed orders between
/// consecutive steps.
pub fn zero_curvature_order(
    j: &JacobiWindow,
    n: isize,
    poly: &HierarchyPolynomial,
    z: Complex64,
    dts: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    zero_curvature_order_with(j, n, poly, poly, z, dts)
}

pub fn zero_curvature_order_with(
    j: &JacobiWindow,
    n: isize,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    z: Complex64,
    dts: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let res: Vec<f64> = dts
        .iter()
        .map(|&dt| check_zero_curvature_with(j, n, lax_poly, cocycle_poly, z, dt))
        .collect::<Result<_>>()?;
    let orders = res
        .windows(2)
        .zip(dts.windows(2))
        .map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    Ok((res, orders))
}

/// `|M(t ⊙ J) T(t, J) - T(t, SJ) M(J)|` with both cocycles integrated.
pub fn check_shift_commutation(
    j: &JacobiWindow,
    n: isize,
    poly: &HierarchyPolynomial,
    z: Complex64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    check_shift_commutation_with(j, n, poly, poly, z, t, dt)
}

/// As [`check_shift_commutation`] with the flow driven by `lax_poly` and
/// `B` built from `cocycle_poly`.
pub fn check_shift_commutation_with(
    j: &JacobiWindow,
    n: isize,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    z: Complex64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if j.boundary() != Boundary::Periodic {
        return Err(Error::UnsupportedBoundary {
            op: "shift commutation",
            boundary: j.boundary(),
        });
    }
    let traj = Trajectory::compute(j, lax_poly, t, dt)?;
    let t_j = GeneratorSeries::new(&traj, cocycle_poly, n)?.integrate(z)?;
    let shifted = Trajectory::compute(&j.shift_left(), lax_poly, t, dt)?;
    let t_sj = GeneratorSeries::new(&shifted, cocycle_poly, n)?.integrate(z)?;
    let lhs = transfer_mat(traj.final_window(), n, z) * t_j.matrix;
    let rhs = t_sj.matrix * transfer_mat(j, n, z);
    Ok((lhs - rhs).max_abs())
}

/// Coefficientwise residuals of the three compatibility relations between
/// `B(J)`, `B(SJ)` and the flow derivatives `a_n'`, `b_n'`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MasterResiduals {
    /// `D(SJ) + a_n^2 C(J)`
    pub r1: f64,
    /// `A(SJ) + A(J) + a_n'/a_n - (z - b_n) C(J)`
    pub r2: f64,
    /// `(z - b_n)/a_n [A(SJ) - A(J)] - (-b_n' a_n - (z - b_n) a_n')/a_n^2
    ///  - a_n C(SJ) - D(J)/a_n`
    pub r3: f64,
}

impl MasterResiduals {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

fn rhs_at(j: &JacobiWindow, rhs: &LaxRhs, n: isize) -> (f64, f64) {
    let len = j.sites() as isize;
    match j.boundary() {
        Boundary::Periodic => {
            let i = n.rem_euclid(len) as usize;
            (rhs.da[i], rhs.db[i])
        }
        Boundary::EventuallyFree if (0..len).contains(&n) => (rhs.da[n as usize], rhs.db[n as usize]),
        Boundary::EventuallyFree => (0.0, 0.0),
    }
}

/// Master-equation residuals with `B` from `b_poly` and derivatives from a
/// precomputed right-hand side.
pub fn master_residuals(
    j: &JacobiWindow,
    n: isize,
    b_poly: &HierarchyPolynomial,
    rhs: &LaxRhs,
) -> Result<MasterResiduals> {
    let here = build_b(j, n, b_poly)?;
    let next = build_b(j, n + 1, b_poly)?;
    let (a, b) = (j.a_at(n), j.b_at(n));
    let (da, db) = rhs_at(j, rhs, n);
    let z_minus_b = Poly::from_real(&[-b, 1.0]);

    let r1 = &next.d().clone() + &here.c().scale(a * a);

    let lhs2 = next.a() + here.a();
    let rhs2 = &Poly::constant(-da / a) + &(&z_minus_b * here.c());
    let r2 = &lhs2 - &rhs2;

    let lhs3 = (&z_minus_b * &(next.a() - here.a())).scale(1.0 / a);
    let flow = Poly::from_real(&[(-db * a + b * da) / (a * a), -da / (a * a)]);
    let rhs3 = &(&flow + &next.c().scale(a)) + &here.d().scale(1.0 / a);
    let r3 = &lhs3 - &rhs3;

    Ok(MasterResiduals {
        r1: r1.max_abs(),
        r2: r2.max_abs(),
        r3: r3.max_abs(),
    })
}

/// Master equations at site `n`, with `a', b'` from the Lax flow of the same
/// polynomial.
pub fn check_master_equations(j: &JacobiWindow, n: isize, poly: &HierarchyPolynomial) -> Result<MasterResiduals> {
    let rhs = lax_rhs(j, poly)?;
    master_residuals(j, n, poly, &rhs)
}

/// `|A_0 + b_n C_0 + 2 a_n sum_{k=1}^{d-1} (LJ^k)_n q_{k+1} - sum_{k=1}^{d} (J^k)_n q_k|`.
pub fn check_vanishing_identity(j: &JacobiWindow, n: isize, poly: &HierarchyPolynomial) -> Result<f64> {
    let bm = build_b(j, n, poly)?;
    let q = compute_q(&bm, j, n)?;
    let d = q.len();
    let (a, b) = (j.a_at(n), j.b_at(n));
    let mut v = bm.a().coeff(0).re + b * bm.c().coeff(0).re;
    for k in 1..d {
        v += 2.0 * a * j.offdiag_entry(k, n)? * q[k];
    }
    for k in 1..=d {
        v -= j.diag_entry(k, n)? * q[k - 1];
    }
    Ok(v.abs())
}

/// Site-by-site recovery of `p` and `q` from `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PqReport {
    /// `p` recovered at each window site.
    pub p: Vec<Vec<f64>>,
    /// `q` computed at each window site.
    pub q: Vec<Vec<f64>>,
    /// `max_j max_n |p_j(n) - q_j(n)|`
    pub max_pq_diff: f64,
    /// `max_j (max_n p_j(n) - min_n p_j(n))`
    pub p_site_variation: f64,
    pub q_site_variation: f64,
    /// `max_j max_n |p_j(n) - p_j|` against the input polynomial.
    pub max_input_diff: f64,
}

fn site_variation(rows: &[Vec<f64>]) -> f64 {
    let d = rows.first().map_or(0, Vec::len);
    (0..d)
        .map(|k| {
            let (lo, hi) = rows
                .iter()
                .map(|r| r[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub fn pq_report(j: &JacobiWindow, poly: &HierarchyPolynomial) -> Result<PqReport> {
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    for n in 0..j.sites() as isize {
        let bm = build_b(j, n, poly)?;
        let p = recover_p(bm.c(), j, n)?;
        let q = compute_q(&bm, j, n)?;
        if p.degree() != q.len() {
            return Err(Error::ShapeViolation(format!(
                "recovered degree {} but q has {} entries",
                p.degree(),
                q.len()
            )));
        }
        ps.push(p.coeffs().to_vec());
        qs.push(q);
    }
    let max_pq_diff = ps
        .iter()
        .zip(&qs)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let max_input_diff = ps
        .iter()
        .flat_map(|p| {
            p.iter()
                .zip(poly.coeffs())
                .map(|(x, y)| (x - y).abs())
                .chain(std::iter::once(if p.len() == poly.degree() { 0.0 } else { f64::INFINITY }))
        })
        .fold(0.0, f64::max);
    Ok(PqReport {
        p_site_variation: site_variation(&ps),
        q_site_variation: site_variation(&qs),
        p: ps,
        q: qs,
        max_pq_diff,
        max_input_diff,
    })
}

/// Step used for the zero-curvature finite differences inside the
/// equivalence check.
pub const EQUIVALENCE_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Largest master-equation residual over sampled times and sites.
    pub master: f64,
    /// Largest zero-curvature residual over sampled times, sites and `z`.
    pub curvature: f64,
    /// Largest cocycle-law residual over `z` (split at `t / 2`).
    pub cocycle: f64,
    /// Largest shift-commutation residual over `z`.
    pub shift: f64,
    /// Largest `|det T - 1|` over all integrations.
    pub det_drift: f64,
}

impl EquivalenceReport {
    pub fn max(&self) -> f64 {
        self.master.max(self.curvature).max(self.cocycle).max(self.shift)
    }
}

/// Runs every cocycle-side consistency check on the flow generated by the
/// Lax equation for the same polynomial.
pub fn check_flow_equivalence(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    t: f64,
    dt: f64,
    zs: &[Complex64],
) -> Result<EquivalenceReport> {
    check_flow_equivalence_with(j0, poly, poly, t, dt, zs)
}

/// As [`check_flow_equivalence`], but with the Lax flow driven by
/// `lax_poly` while `B` is built from `cocycle_poly`. Any mismatch between
/// the two shows up as large residuals.
pub fn check_flow_equivalence_with(
    j0: &JacobiWindow,
    lax_poly: &HierarchyPolynomial,
    cocycle_poly: &HierarchyPolynomial,
    t: f64,
    dt: f64,
    zs: &[Complex64],
) -> Result<EquivalenceReport> {
    if j0.boundary() != Boundary::Periodic {
        return Err(Error::UnsupportedBoundary {
            op: "flow equivalence",
            boundary: j0.boundary(),
        });
    }
    let site = 0;
    let half = Trajectory::compute(j0, lax_poly, t / 2.0, dt)?;
    let rest = Trajectory::compute(half.final_window(), lax_poly, t / 2.0, dt)?;
    let full = Trajectory::compute(j0, lax_poly, t, dt)?;
    let shifted = Trajectory::compute(&j0.shift_left(), lax_poly, t, dt)?;

    let samples = [j0, half.final_window(), full.final_window()];
    let mut master: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    for j in samples {
        let rhs = lax_rhs(j, lax_poly)?;
        for n in 0..j.sites() as isize {
            master = master.max(master_residuals(j, n, cocycle_poly, &rhs)?.max());
            for &z in zs {
                let fd = curvature_fd(j, n, lax_poly, z, EQUIVALENCE_FD_STEP)?;
                curvature = curvature.max((fd - curvature_rhs(j, n, cocycle_poly, z)?).max_abs());
            }
        }
    }

    let g_full = GeneratorSeries::new(&full, cocycle_poly, site)?;
    let g_half = GeneratorSeries::new(&half, cocycle_poly, site)?;
    let g_rest = GeneratorSeries::new(&rest, cocycle_poly, site)?;
    let g_shift = GeneratorSeries::new(&shifted, cocycle_poly, site)?;
    let mut cocycle: f64 = 0.0;
    let mut shift: f64 = 0.0;
    let mut det_drift: f64 = 0.0;
    for &z in zs {
        let tf = g_full.integrate(z)?;
        let th = g_half.integrate(z)?;
        let tr = g_rest.integrate(z)?;
        let ts = g_shift.integrate(z)?;
        cocycle = cocycle.max((tf.matrix - tr.matrix * th.matrix).max_abs());
        let lhs = transfer_mat(full.final_window(), site, z) * tf.matrix;
        let rhs = ts.matrix * transfer_mat(j0, site, z);
        shift = shift.max((lhs - rhs).max_abs());
        det_drift = det_drift
            .max(tf.det_drift)
            .max(th.det_drift)
            .max(tr.det_drift)
            .max(ts.det_drift);
    }

    Ok(EquivalenceReport {
        master,
        curvature,
        cocycle,
        shift,
        det_drift,
    })
}

/// Default spectral grid: `count` points on `|z| = radius` with
/// `Im z >= min_imag`, evenly spaced in angle.
pub fn z_grid(radius: f64, count: usize, min_imag: f64) -> Vec<Complex64> {
    let lo = (min_imag / radius).clamp(-1.0, 1.0).asin();
    let hi = std::f64::consts::PI - lo;
    match count {
        0 => Vec::new(),
        1 => vec![Complex64::from_polar(radius, std::f64::consts::FRAC_PI_2)],
        _ => (0..count)
            .map(|k| {
                let theta = lo + (hi - lo) * k as f64 / (count - 1) as f64;
                Complex64::from_polar(radius, theta)
            })
            .collect(),
    }
}

pub fn default_z_grid() -> Vec<Complex64> {
    z_grid(3.0, 8, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> JacobiWindow {
        JacobiWindow::new(
            vec![0.55, 0.62, 0.48, 0.7, 0.51, 0.66, 0.59],
            vec![0.12, -0.25, 0.31, 0.04, -0.18, 0.22, -0.07],
            Boundary::Periodic,
        )
        .unwrap()
    }

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transfer_matrix_values() {
        let j = JacobiWindow::new(vec![2.0, 1.0, 1.0], vec![3.0, 0.0, 0.0], Boundary::Periodic).unwrap();
        let m = transfer_matrix(&j, 0, cz(5.0, 0.0)).matrix;
        assert_eq!(m, Mat2::new(cz(1.0, 0.0), cz(0.5, 0.0), cz(-2.0, 0.0), cz(0.0, 0.0)));
        let f = JacobiWindow::free(4, Boundary::Periodic).unwrap();
        let z = cz(0.3, 1.1);
        let m = transfer_matrix(&f, 2, z).matrix;
        assert_eq!(m, Mat2::new(z, cz(1.0, 0.0), cz(-1.0, 0.0), cz(0.0, 0.0)));
        assert!(transfer_matrix(&window(), 3, z).det_drift < 1e-15);
    }

    #[test]
    fn auxiliary_low_orders() {
        let j = window();
        for n in 0..7 {
            let (a, a0, b) = (j.a_at(n), j.a_at(n - 1), j.b_at(n));
            assert_eq!(g_poly(&j, n, 1).unwrap().real_coeffs(), vec![1.0]);
            assert_eq!(g_poly(&j, n, 2).unwrap().real_coeffs(), vec![b, 1.0]);
            let g3 = g_poly(&j, n, 3).unwrap().real_coeffs();
            assert!((g3[0] - (a * a + a0 * a0 + b * b)).abs() < 1e-15);
            assert_eq!(h_poly(&j, n, 1).unwrap().real_coeffs(), vec![-b, 1.0]);
            let h2 = h_poly(&j, n, 2).unwrap().real_coeffs();
            assert!((h2[0] - (a * a - a0 * a0 - b * b)).abs() < 1e-15);
            assert_eq!(h2[1], 0.0);
            for r in 1..6 {
                assert_eq!(h_poly(&j, n, r).unwrap().coeff(r).re, 1.0);
            }
        }
        assert!(g_poly(&j, 0, 0).is_err());
    }

    #[test]
    fn b_for_lowest_member() {
        let j = window();
        let bm = build_b(&j, 2, &HierarchyPolynomial::toda()).unwrap();
        let b = j.b_at(2);
        let a0 = j.a_at(1);
        assert_eq!(bm.a().real_coeffs(), vec![-b, 1.0]);
        assert_eq!(bm.c().real_coeffs(), vec![2.0]);
        assert!((bm.d().coeff(0).re + 2.0 * a0 * a0).abs() < 1e-15);
        assert!(bm.trace().is_zero(0.0));
    }

    #[test]
    fn b_shift_convention() {
        let j = window();
        let p = HierarchyPolynomial::new(vec![0.3, -0.8, 0.5]).unwrap();
        for n in 0..7 {
            assert_eq!(build_b(&j.shift_left(), n, &p).unwrap(), build_b(&j, n + 1, &p).unwrap());
        }
    }

    #[test]
    fn gh_leading_coefficients() {
        let j = window();
        let p = HierarchyPolynomial::new(vec![0.4, 1.5, -0.9]).unwrap();
        for r in gh_across(&j, &p).unwrap() {
            assert_eq!(r.g.coeff(2).re, -0.9);
            assert_eq!(r.h.coeff(3).re, -0.9);
            assert_eq!(r.g.len(), 3);
        }
    }

    #[test]
    fn recover_p_cases() {
        let j = window();
        let p = recover_p(&Poly::constant(2.0), &j, 0).unwrap();
        assert_eq!(p.coeffs(), &[1.0]);
        let b = j.b_at(3);
        let p = recover_p(&Poly::from_real(&[2.0 * b, 2.0]), &j, 3).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 1.0]);
        assert!(matches!(recover_p(&Poly::zero(), &j, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn q_for_lowest_member() {
        let j = window();
        let bm = build_b(&j, 1, &HierarchyPolynomial::toda()).unwrap();
        let q = compute_q(&bm, &j, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q[0] - (-bm.a().coeff(1).re + bm.c().coeff(0).re)).abs() < 1e-15);
        assert!((q[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_rejects_bad_shape() {
        let j = window();
        let bad = PolyMatrix2::new(
            Poly::from_real(&[0.0, 1.0]),
            Poly::from_real(&[2.0]),
            Poly::from_real(&[1.0]),
            Poly::from_real(&[0.0, 1.0]),
        );
        assert!(matches!(compute_q(&bad, &j, 0), Err(Error::ShapeViolation(_))));
        let bad = PolyMatrix2::new(
            Poly::from_real(&[0.0, 1.0]),
            Poly::from_real(&[2.0, 1.0]),
            Poly::from_real(&[1.0]),
            Poly::from_real(&[0.0, -1.0]),
        );
        assert!(compute_q(&bad, &j, 0).is_err());
    }

    #[test]
    fn vanishing_identity_lowest_member() {
        let j = window();
        let r = check_vanishing_identity(&j, 4, &HierarchyPolynomial::toda()).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn master_equation_one_by_hand() {
        let j = window();
        let p = HierarchyPolynomial::toda();
        let next = build_b(&j, 3, &p).unwrap();
        let a = j.a_at(2);
        assert!((next.d().coeff(0).re + 2.0 * a * a).abs() < 1e-15);
        assert!(check_master_equations(&j, 2, &p).unwrap().max() < 1e-14);
    }

    #[test]
    fn free_operator_zero_curvature_vanishes() {
        let j = JacobiWindow::free(8, Boundary::Periodic).unwrap();
        let p = HierarchyPolynomial::new(vec![0.5, 1.0]).unwrap();
        for z in default_z_grid() {
            assert!(check_zero_curvature(&j, 0, &p, z, 1e-3).unwrap() < 1e-13);
        }
    }

    #[test]
    fn zero_time_transfer_is_identity() {
        let t = evolve_t(&window(), &HierarchyPolynomial::toda(), 0, cz(0.0, 3.0), 0.0, 1e-3).unwrap();
        assert_eq!(t.matrix, Mat2::identity());
    }

    #[test]
    fn grid_shape() {
        let g = default_z_grid();
        assert_eq!(g.len(), 8);
        for z in &g {
            assert!((z.norm() - 3.0).abs() < 1e-12);
            assert!(z.im >= 0.5 - 1e-12);
        }
    }
}
