//! Lax-pair side of the Toda hierarchy.
//!
//! The member selected by `1 + p_1 z + ... + p_d z^d` evolves `J` by
//! `dJ/dt = P J - J P` with `P = sum_{j=1}^{d} p_j P~_{j-1}`, where `P~_k` is
//! the upper triangle of `J^{k+1}` minus its lower triangle.

use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, JacobiWindow, WindowRecord, K_MAX};

/// Structure tolerance for the commutator, relative to `|P| |J|`.
const STRUCTURE_TOL: f64 = 1e-10;

/// Default eventually-free buffer: free sites required per unit time per
/// degree on each side of the perturbation.
pub const DEFAULT_BUFFER_RATE: f64 = 10.0;

/// Coefficients `p_1..p_d` of `1 + p_1 z + ... + p_d z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HierarchyPolynomial {
    coeffs: Vec<f64>,
}

impl HierarchyPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::InvalidPolynomial("degree must be at least 1".into())),
            Some(&top) if top == 0.0 => Err(Error::InvalidPolynomial(
                "leading coefficient p_d must be nonzero".into(),
            )),
            _ if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::InvalidPolynomial("coefficients must be finite".into()))
            }
            _ => Ok(HierarchyPolynomial { coeffs }),
        }
    }

    /// The lowest member, `1 + z`.
    pub fn toda() -> Self {
        HierarchyPolynomial { coeffs: vec![1.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `p_1..p_d`; index `j - 1` holds `p_j`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `p_j` for `1 <= j <= d`.
    pub fn p(&self, j: usize) -> f64 {
        self.coeffs[j - 1]
    }

    /// `p_d, ..., p_1` as a new polynomial (a deliberately misaligned choice).
    pub fn reversed(&self) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c.reverse();
        HierarchyPolynomial::new(c)
    }
}

impl TryFrom<Vec<f64>> for HierarchyPolynomial {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        HierarchyPolynomial::new(v)
    }
}

impl From<HierarchyPolynomial> for Vec<f64> {
    fn from(p: HierarchyPolynomial) -> Self {
        p.coeffs
    }
}

/// Antisymmetric band operator. Only the strict upper band is stored; the
/// lower band is its negated transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewOperator {
    rows: usize,
    width: usize,
    periodic: bool,
    upper: Vec<f64>,
}

impl SkewOperator {
    fn zeros(rows: usize, width: usize, periodic: bool) -> Self {
        SkewOperator {
            rows,
            width,
            periodic,
            upper: vec![0.0; rows * width],
        }
    }

    pub fn half_bandwidth(&self) -> usize {
        self.width
    }

    /// Entry `(i, i + k)`.
    pub fn get(&self, i: isize, k: isize) -> f64 {
        if k == 0 || k.unsigned_abs() > self.width {
            return 0.0;
        }
        let rows = self.rows as isize;
        let (row, off) = if k > 0 { (i, k) } else { (i + k, -k) };
        let sign = if k > 0 { 1.0 } else { -1.0 };
        let row = if self.periodic {
            row.rem_euclid(rows)
        } else {
            if !(0..rows).contains(&i) || !(0..rows).contains(&(i + k)) {
                return 0.0;
            }
            row
        };
        sign * self.upper[row as usize * self.width + off as usize - 1]
    }

    fn add_scaled(&mut self, other: &SkewOperator, s: f64) {
        if other.width > self.width {
            let mut grown = SkewOperator::zeros(self.rows, other.width, self.periodic);
            for i in 0..self.rows {
                for k in 1..=self.width {
                    grown.upper[i * grown.width + k - 1] = self.upper[i * self.width + k - 1];
                }
            }
            *self = grown;
        }
        for i in 0..self.rows {
            for k in 1..=other.width {
                self.upper[i * self.width + k - 1] += s * other.upper[i * other.width + k - 1];
            }
        }
    }

    pub(crate) fn to_band(&self) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.rows, self.width, self.periodic);
        let w = self.width as isize;
        for i in 0..self.rows {
            for k in -w..=w {
                m.set(i, k, self.get(i as isize, k));
            }
        }
        m
    }

    /// Dense `N x N` matrix; on a periodic window columns are folded onto the
    /// ring.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.rows;
        let mut m = nalgebra::DMatrix::zeros(n, n);
        let w = self.width as isize;
        for i in 0..n {
            for k in -w..=w {
                let col = i as isize + k;
                let col = if self.periodic {
                    col.rem_euclid(n as isize)
                } else if (0..n as isize).contains(&col) {
                    col
                } else {
                    continue;
                };
                m[(i, col as usize)] += self.get(i as isize, k);
            }
        }
        m
    }
}

fn skew_of_power(power: &BandMatrix, width: usize) -> SkewOperator {
    let mut out = SkewOperator::zeros(power.rows(), width, power.periodic());
    for i in 0..power.rows() {
        for k in 1..=width {
            out.upper[i * width + k - 1] = power.get(i as isize, k as isize);
        }
    }
    out
}

/// `P~_j`: upper triangle of `J^{j+1}` minus lower triangle.
pub fn skew_part(j: &JacobiWindow, power: usize) -> Result<SkewOperator> {
    if power + 1 > K_MAX {
        return Err(Error::CapExceeded {
            k: power + 1,
            cap: K_MAX,
        });
    }
    let band = BandMatrix::jacobi(j);
    let mut acc = band.clone();
    for _ in 0..power {
        acc = acc.mul(&band);
    }
    Ok(skew_of_power(&acc, power + 1))
}

fn build_p_band(band: &BandMatrix, poly: &HierarchyPolynomial) -> Result<SkewOperator> {
    let d = poly.degree();
    if d > K_MAX {
        return Err(Error::CapExceeded { k: d, cap: K_MAX });
    }
    let mut p = SkewOperator::zeros(band.rows(), d, band.periodic());
    let mut acc = band.clone();
    for j in 1..=d {
        p.add_scaled(&skew_of_power(&acc, j), poly.p(j));
        if j < d {
            acc = acc.mul(band);
        }
    }
    Ok(p)
}

/// `P = sum_j p_j P~_{j-1}`.
pub fn build_p(j: &JacobiWindow, poly: &HierarchyPolynomial) -> Result<SkewOperator> {
    build_p_band(&BandMatrix::jacobi(j), poly)
}

/// Time derivatives of the coefficients along the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxRhs {
    pub da: Vec<f64>,
    pub db: Vec<f64>,
    /// Largest off-tridiagonal or asymmetric entry of `PJ - JP`.
    pub structure_residual: f64,
}

/// Eventually-free windows are padded with this many free sites per side so
/// window rows of `PJ - JP` see the untruncated operator.
fn padding(d: usize) -> usize {
    d + 3
}

fn padded(j: &JacobiWindow, pad: usize) -> JacobiWindow {
    let mut a = vec![1.0; pad];
    let mut b = vec![0.0; pad];
    a.extend_from_slice(j.a());
    b.extend_from_slice(j.b());
    a.extend(std::iter::repeat_n(1.0, pad));
    b.extend(std::iter::repeat_n(0.0, pad));
    JacobiWindow::new(a, b, Boundary::EventuallyFree).expect("padding keeps a positive")
}

/// `PJ - JP`, checked to be tridiagonal and symmetric, as `(da, db)`.
pub fn lax_rhs(j: &JacobiWindow, poly: &HierarchyPolynomial) -> Result<LaxRhs> {
    let (work, offset) = match j.boundary() {
        Boundary::Periodic => (j.clone(), 0),
        Boundary::EventuallyFree => {
            let pad = padding(poly.degree());
            (padded(j, pad), pad)
        }
    };
    let band = BandMatrix::jacobi(&work);
    let p = build_p_band(&band, poly)?.to_band();
    let comm = p.mul(&band).sub(&band.mul(&p));

    let w = comm.width() as isize;
    let mut residual: f64 = 0.0;
    for i in 0..work.sites() as isize {
        for k in 2..=w {
            residual = residual.max(comm.get(i, k).abs()).max(comm.get(i, -k).abs());
        }
        if work.boundary() == Boundary::Periodic || (i + 1) < work.sites() as isize {
            residual = residual.max((comm.get(i, 1) - comm.get(i + 1, -1)).abs());
        }
    }
    let scale = 1.0_f64.max(p.max_abs() * band.max_abs());
    let tolerance = STRUCTURE_TOL * scale;
    if residual > tolerance {
        return Err(Error::StructureViolation {
            residual,
            tolerance,
        });
    }

    let n = j.sites();
    let da = (0..n)
        .map(|i| comm.get((i + offset) as isize, 1))
        .collect();
    let db = (0..n)
        .map(|i| comm.get((i + offset) as isize, 0))
        .collect();
    Ok(LaxRhs {
        da,
        db,
        structure_residual: residual,
    })
}

/// An evolved operator with its integration bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    #[serde(rename = "J", with = "window_record")]
    pub window: JacobiWindow,
    pub t: f64,
    /// Signed step actually used; `t = steps * dt`.
    pub dt: f64,
    pub steps: usize,
}

mod window_record {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &JacobiWindow, s: S) -> std::result::Result<S::Ok, S::Error> {
        WindowRecord::from(w.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<JacobiWindow, D::Error> {
        let rec = WindowRecord::deserialize(d)?;
        JacobiWindow::try_from(rec).map_err(serde::de::Error::custom)
    }
}

impl FlowState {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flow state serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Free sites required per unit time per degree on each side of an
    /// eventually-free perturbation.
    pub buffer_rate: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            buffer_rate: DEFAULT_BUFFER_RATE,
        }
    }
}

fn step_plan(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite, got {t_final}")));
    }
    if t_final == 0.0 {
        return Ok((0, dt));
    }
    let steps = ((t_final.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

fn check_buffer(j: &JacobiWindow, poly: &HierarchyPolynomial, t: f64, opts: &FlowOptions) -> Result<()> {
    if j.boundary() != Boundary::EventuallyFree {
        return Ok(());
    }
    let needed = (opts.buffer_rate * t.abs() * poly.degree() as f64).ceil() as usize;
    if let Some(available) = j.free_margin() {
        if available < needed {
            return Err(Error::BufferTooSmall { needed, available });
        }
    }
    Ok(())
}

fn offset_window(j: &JacobiWindow, da: &[f64], db: &[f64], h: f64, step: usize) -> Result<JacobiWindow> {
    let a: Vec<f64> = j.a().iter().zip(da).map(|(x, d)| x + h * d).collect();
    let b: Vec<f64> = j.b().iter().zip(db).map(|(x, d)| x + h * d).collect();
    if let Some(site) = a.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::FlowBreakdown {
            step,
            site,
            value: a[site],
        });
    }
    JacobiWindow::new(a, b, j.boundary())
}

/// One classical RK4 step of size `h`.
pub(crate) fn rk4_step(
    j: &JacobiWindow,
    poly: &HierarchyPolynomial,
    h: f64,
    step: usize,
) -> Result<JacobiWindow> {
    let k1 = lax_rhs(j, poly)?;
    let k2 = lax_rhs(&offset_window(j, &k1.da, &k1.db, h / 2.0, step)?, poly)?;
    let k3 = lax_rhs(&offset_window(j, &k2.da, &k2.db, h / 2.0, step)?, poly)?;
    let k4 = lax_rhs(&offset_window(j, &k3.da, &k3.db, h, step)?, poly)?;
    let n = j.sites();
    let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0)
            .collect()
    };
    let da = comb(&k1.da, &k2.da, &k3.da, &k4.da);
    let db = comb(&k1.db, &k2.db, &k3.db, &k4.db);
    offset_window(j, &da, &db, h, step)
}

/// `t_final ⊙ J0` by fixed-step RK4. Negative times integrate backwards.
pub fn evolve(j0: &JacobiWindow, poly: &HierarchyPolynomial, t_final: f64, dt: f64) -> Result<FlowState> {
    evolve_with(j0, poly, t_final, dt, &FlowOptions::default(), |_| {})
}

/// As [`evolve`], calling `observe` on the initial state and after every step.
pub fn evolve_with(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    t_final: f64,
    dt: f64,
    opts: &FlowOptions,
    mut observe: impl FnMut(&FlowState),
) -> Result<FlowState> {
    let (steps, h) = step_plan(t_final, dt)?;
    check_buffer(j0, poly, t_final, opts)?;
    let mut state = FlowState {
        window: j0.clone(),
        t: 0.0,
        dt: h,
        steps: 0,
    };
    observe(&state);
    for k in 0..steps {
        state.window = rk4_step(&state.window, poly, h, k)?;
        state.steps = k + 1;
        state.t = state.steps as f64 * h;
        observe(&state);
    }
    Ok(state)
}

/// Largest coefficient difference between runs at `dt` and `dt / 2`.
pub fn convergence_check(j0: &JacobiWindow, poly: &HierarchyPolynomial, t_final: f64, dt: f64) -> Result<f64> {
    let coarse = evolve(j0, poly, t_final, dt)?;
    let fine = evolve(j0, poly, t_final, dt / 2.0)?;
    coarse.window.max_diff(&fine.window)
}

/// Group-law residual `|(s + t) ⊙ J - s ⊙ (t ⊙ J)|`.
pub fn group_action_check(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    s: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let direct = evolve(j0, poly, s + t, dt)?;
    let first = evolve(j0, poly, t, dt)?;
    let second = evolve(&first.window, poly, s, dt)?;
    direct.window.max_diff(&second.window)
}

/// A flow computed once and shared read-only: operators at every step node
/// and at every half step, as the RK4 stages of a coupled linear system need.
#[derive(Debug, Clone)]
pub struct Trajectory {
    poly: HierarchyPolynomial,
    h: f64,
    nodes: Vec<JacobiWindow>,
    mids: Vec<JacobiWindow>,
}

impl Trajectory {
    pub fn compute(j0: &JacobiWindow, poly: &HierarchyPolynomial, t_final: f64, dt: f64) -> Result<Self> {
        Self::compute_with(j0, poly, t_final, dt, &FlowOptions::default())
    }

    pub fn compute_with(
        j0: &JacobiWindow,
        poly: &HierarchyPolynomial,
        t_final: f64,
        dt: f64,
        opts: &FlowOptions,
    ) -> Result<Self> {
        let (steps, h) = step_plan(t_final, dt)?;
        check_buffer(j0, poly, t_final, opts)?;
        let mut nodes = Vec::with_capacity(steps + 1);
        let mut mids = Vec::with_capacity(steps);
        nodes.push(j0.clone());
        for k in 0..steps {
            let cur = &nodes[k];
            mids.push(rk4_step(cur, poly, h / 2.0, k)?);
            let next = rk4_step(cur, poly, h, k)?;
            nodes.push(next);
        }
        Ok(Trajectory {
            poly: poly.clone(),
            h,
            nodes,
            mids,
        })
    }

    pub fn poly(&self) -> &HierarchyPolynomial {
        &self.poly
    }

    /// Signed step.
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.mids.len()
    }

    pub fn nodes(&self) -> &[JacobiWindow] {
        &self.nodes
    }

    /// Half-step operators; `mids()[k]` sits between nodes `k` and `k + 1`.
    pub fn mids(&self) -> &[JacobiWindow] {
        &self.mids
    }

    pub fn initial(&self) -> &JacobiWindow {
        &self.nodes[0]
    }

    pub fn final_window(&self) -> &JacobiWindow {
        self.nodes.last().expect("trajectory has a start node")
    }

    pub fn final_state(&self) -> FlowState {
        FlowState {
            window: self.final_window().clone(),
            t: self.steps() as f64 * self.h,
            dt: self.h,
            steps: self.steps(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> JacobiWindow {
        JacobiWindow::new(
            vec![0.6, 0.45, 0.7, 0.5, 0.65],
            vec![0.1, -0.2, 0.3, 0.0, -0.15],
            Boundary::Periodic,
        )
        .unwrap()
    }

    #[test]
    fn polynomial_validation() {
        assert!(HierarchyPolynomial::new(vec![]).is_err());
        assert!(HierarchyPolynomial::new(vec![1.0, 0.0]).is_err());
        assert!(HierarchyPolynomial::new(vec![0.0, 2.0]).is_ok());
        let p = HierarchyPolynomial::new(vec![0.5, 2.0]).unwrap();
        assert_eq!(p.reversed().unwrap().coeffs(), &[2.0, 0.5]);
    }

    #[test]
    fn skew_zero_is_signed_offdiagonal() {
        let j = window();
        let p0 = skew_part(&j, 0).unwrap();
        for i in 0..5 {
            assert_eq!(p0.get(i, 1), j.a_at(i));
            assert_eq!(p0.get(i, -1), -j.a_at(i - 1));
            assert_eq!(p0.get(i, 0), 0.0);
        }
    }

    #[test]
    fn skew_one_free() {
        let j = JacobiWindow::free(7, Boundary::Periodic).unwrap();
        let p1 = skew_part(&j, 1).unwrap();
        for i in 0..7 {
            assert_eq!(p1.get(i, 1), 0.0);
            assert_eq!(p1.get(i, 2), 1.0);
            assert_eq!(p1.get(i, -2), -1.0);
        }
    }

    #[test]
    fn skew_cap() {
        assert!(matches!(
            skew_part(&window(), K_MAX),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn build_p_lowest_member_is_p0() {
        let j = window();
        let p = build_p(&j, &HierarchyPolynomial::toda()).unwrap();
        assert_eq!(p, skew_part(&j, 0).unwrap());
    }

    #[test]
    fn toda_rhs_closed_form() {
        let j = window();
        let rhs = lax_rhs(&j, &HierarchyPolynomial::toda()).unwrap();
        for n in 0..5 {
            let i = n as isize;
            let db = 2.0 * (j.a_at(i).powi(2) - j.a_at(i - 1).powi(2));
            let da = j.a_at(i) * (j.b_at(i + 1) - j.b_at(i));
            assert!((rhs.db[n] - db).abs() < 1e-14);
            assert!((rhs.da[n] - da).abs() < 1e-14);
        }
    }

    #[test]
    fn free_operator_is_fixed() {
        for boundary in [Boundary::Periodic, Boundary::EventuallyFree] {
            let j = JacobiWindow::free(9, boundary).unwrap();
            let p = HierarchyPolynomial::new(vec![0.3, -1.2, 0.7]).unwrap();
            let rhs = lax_rhs(&j, &p).unwrap();
            assert!(rhs.da.iter().chain(&rhs.db).all(|x| x.abs() < 1e-14));
            let out = evolve(&j, &p, 0.3, 1e-2).unwrap();
            assert!(out.window.max_diff(&j).unwrap() < 1e-14);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let j = window();
        let out = evolve(&j, &HierarchyPolynomial::toda(), 0.0, 1e-3).unwrap();
        assert_eq!(out.window, j);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn step_bookkeeping() {
        let out = evolve(&window(), &HierarchyPolynomial::toda(), -0.05, 1e-2).unwrap();
        assert_eq!(out.steps, 5);
        assert!((out.t - -0.05).abs() < 1e-15);
        assert!((out.steps as f64 * out.dt - out.t).abs() < 1e-15);
        assert!(evolve(&window(), &HierarchyPolynomial::toda(), 1.0, 0.0).is_err());
    }

    #[test]
    fn buffer_is_enforced() {
        let mut b = vec![0.0; 11];
        b[5] = 0.5;
        let j = JacobiWindow::new(vec![1.0; 11], b, Boundary::EventuallyFree).unwrap();
        let p = HierarchyPolynomial::toda();
        assert!(matches!(
            evolve(&j, &p, 1.0, 1e-2),
            Err(Error::BufferTooSmall { needed: 10, available: 5 })
        ));
        assert!(evolve(&j, &p, 0.5, 1e-2).is_ok());
    }

    #[test]
    fn breakdown_is_reported() {
        // huge step drives some a_n negative
        let j = window();
        let p = HierarchyPolynomial::new(vec![0.0, 0.0, 40.0]).unwrap();
        assert!(matches!(
            evolve(&j, &p, 1.0, 1.0),
            Err(Error::FlowBreakdown { .. })
        ));
    }

    #[test]
    fn flow_state_round_trip() {
        let s = evolve(&window(), &HierarchyPolynomial::toda(), 0.01, 1e-3).unwrap();
        let back = FlowState::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn trajectory_matches_evolve() {
        let j = window();
        let p = HierarchyPolynomial::new(vec![0.4, 0.9]).unwrap();
        let traj = Trajectory::compute(&j, &p, 0.1, 1e-2).unwrap();
        let direct = evolve(&j, &p, 0.1, 1e-2).unwrap();
        assert_eq!(traj.final_state(), direct);
        assert_eq!(traj.mids().len(), 10);
    }
}
