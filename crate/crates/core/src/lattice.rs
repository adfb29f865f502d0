//! Jacobi operators on finite lattice windows.
//!
//! A [`JacobiWindow`] stores the coefficients `a_n > 0`, `b_n` for the sites
//! `0..N` together with a rule for every other integer site:
//!
//! * [`Boundary::Periodic`]: coefficients repeat with period `N`.
//! * [`Boundary::EventuallyFree`]: `a_n = 1`, `b_n = 0` outside the window.
//!
//! Either way the window describes an operator on the whole lattice `Z`, and
//! the matrix entries returned by [`JacobiWindow::diag_entry`] and
//! [`JacobiWindow::offdiag_entry`] are entries of that operator. The finite
//! `N x N` realizations ([`JacobiWindow::dense`], [`JacobiWindow::apply`]) are
//! the ring (periodic) and the truncation (eventually free).

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest operator power the entry routines will compute.
pub const K_MAX: usize = 16;

/// Slack allowed on the `||J|| <= 2` bound before a window is reported as
/// outside the ball.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    EventuallyFree,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::EventuallyFree => f.write_str("eventually_free"),
        }
    }
}

/// Which regime a window belongs to: inside the closed ball `||J|| <= 2` or
/// merely bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRegime {
    UnitBall,
    Bounded,
}

/// On-disk record `{sites, boundary, a, b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub sites: usize,
    pub boundary: Boundary,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRecord", into = "WindowRecord")]
pub struct JacobiWindow {
    a: Vec<f64>,
    b: Vec<f64>,
    boundary: Boundary,
}

impl TryFrom<WindowRecord> for JacobiWindow {
    type Error = Error;

    fn try_from(rec: WindowRecord) -> Result<Self> {
        if rec.a.len() != rec.sites || rec.b.len() != rec.sites {
            return Err(Error::InvalidWindow(format!(
                "sites = {} but a has {} and b has {} entries",
                rec.sites,
                rec.a.len(),
                rec.b.len()
            )));
        }
        JacobiWindow::new(rec.a, rec.b, rec.boundary)
    }
}

impl From<JacobiWindow> for WindowRecord {
    fn from(w: JacobiWindow) -> Self {
        WindowRecord {
            sites: w.sites(),
            boundary: w.boundary,
            a: w.a,
            b: w.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `max |J v - lambda v|` over the computed unit eigenvectors.
    pub residual: f64,
}

impl JacobiWindow {
    pub fn new(a: Vec<f64>, b: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidWindow(format!(
                "a has {} entries but b has {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 3 {
            return Err(Error::InvalidWindow(format!(
                "need at least 3 sites, got {}",
                a.len()
            )));
        }
        if let Some(i) = b.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidWindow(format!("b[{i}] is not finite")));
        }
        if let Some(i) = a.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidWindow(format!(
                "a[{i}] = {} must be positive and finite",
                a[i]
            )));
        }
        Ok(JacobiWindow { a, b, boundary })
    }

    /// The free operator `a = 1`, `b = 0`.
    pub fn free(sites: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![1.0; sites], vec![0.0; sites], boundary)
    }

    pub fn sites(&self) -> usize {
        self.a.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `a_n` at any lattice site.
    pub fn a_at(&self, n: isize) -> f64 {
        match self.local(n) {
            Some(i) => self.a[i],
            None => 1.0,
        }
    }

    /// `b_n` at any lattice site.
    pub fn b_at(&self, n: isize) -> f64 {
        match self.local(n) {
            Some(i) => self.b[i],
            None => 0.0,
        }
    }

    fn local(&self, n: isize) -> Option<usize> {
        let len = self.sites() as isize;
        match self.boundary {
            Boundary::Periodic => Some(n.rem_euclid(len) as usize),
            Boundary::EventuallyFree => (0..len).contains(&n).then_some(n as usize),
        }
    }

    /// `(J u)_n = a_n u_{n+1} + a_{n-1} u_{n-1} + b_n u_n` on the ring
    /// (periodic) or the truncated window (eventually free, `u = 0` outside).
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let len = self.sites();
        if u.len() != len {
            return Err(Error::Dimension {
                expected: len,
                got: u.len(),
            });
        }
        let periodic = self.boundary == Boundary::Periodic;
        let out = (0..len)
            .map(|n| {
                let mut v = u[n] * self.b[n];
                if n + 1 < len {
                    v += u[n + 1] * self.a[n];
                } else if periodic {
                    v += u[0] * self.a[n];
                }
                if n > 0 {
                    v += u[n - 1] * self.a[n - 1];
                } else if periodic {
                    v += u[len - 1] * self.a[len - 1];
                }
                v
            })
            .collect();
        Ok(out)
    }

    /// Dense `N x N` realization: ring matrix (periodic) or truncation.
    pub fn dense(&self) -> DMatrix<f64> {
        let len = self.sites();
        let mut m = DMatrix::zeros(len, len);
        for n in 0..len {
            m[(n, n)] = self.b[n];
            if n + 1 < len {
                m[(n, n + 1)] = self.a[n];
                m[(n + 1, n)] = self.a[n];
            }
        }
        if self.boundary == Boundary::Periodic {
            m[(0, len - 1)] += self.a[len - 1];
            m[(len - 1, 0)] += self.a[len - 1];
        }
        m
    }

    /// `SJ`: every `a_n, b_n` replaced by `a_{n+1}, b_{n+1}`.
    pub fn shift_left(&self) -> JacobiWindow {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        match self.boundary {
            Boundary::Periodic => {
                a.rotate_left(1);
                b.rotate_left(1);
            }
            Boundary::EventuallyFree => {
                a.remove(0);
                b.remove(0);
                a.push(1.0);
                b.push(0.0);
            }
        }
        JacobiWindow {
            a,
            b,
            boundary: self.boundary,
        }
    }

    /// `S*J`: every `a_n, b_n` replaced by `a_{n-1}, b_{n-1}`.
    pub fn shift_right(&self) -> JacobiWindow {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        match self.boundary {
            Boundary::Periodic => {
                a.rotate_right(1);
                b.rotate_right(1);
            }
            Boundary::EventuallyFree => {
                a.pop();
                b.pop();
                a.insert(0, 1.0);
                b.insert(0, 0.0);
            }
        }
        JacobiWindow {
            a,
            b,
            boundary: self.boundary,
        }
    }

    /// `J^k delta_m` on `Z`, returned as values on sites `m - k ..= m + k`.
    fn power_column(&self, k: usize, m: isize) -> Vec<f64> {
        let half = k as isize;
        let width = 2 * k + 1;
        let mut v = vec![0.0; width];
        v[k] = 1.0;
        let mut next = vec![0.0; width];
        for _ in 0..k {
            for (i, slot) in next.iter_mut().enumerate() {
                let site = m - half + i as isize;
                let mut acc = self.b_at(site) * v[i];
                if i + 1 < width {
                    acc += self.a_at(site) * v[i + 1];
                }
                if i > 0 {
                    acc += self.a_at(site - 1) * v[i - 1];
                }
                *slot = acc;
            }
            std::mem::swap(&mut v, &mut next);
        }
        v
    }

    fn check_cap(k: usize) -> Result<()> {
        if k > K_MAX {
            return Err(Error::CapExceeded { k, cap: K_MAX });
        }
        Ok(())
    }

    /// `<delta_n, J^k delta_n>`.
    pub fn diag_entry(&self, k: usize, n: isize) -> Result<f64> {
        Self::check_cap(k)?;
        Ok(self.power_column(k, n)[k])
    }

    /// `<delta_n, J^k delta_{n+1}>`, written `(L J^k)_n` in the recursions.
    pub fn offdiag_entry(&self, k: usize, n: isize) -> Result<f64> {
        Self::check_cap(k)?;
        if k == 0 {
            return Ok(0.0);
        }
        // column of delta_{n+1}; site n sits one left of centre
        Ok(self.power_column(k, n + 1)[k - 1])
    }

    /// `<delta_n, J^k delta_{n+2}>`, written `(L^2 J^k)_n`.
    pub fn second_offdiag_entry(&self, k: usize, n: isize) -> Result<f64> {
        Self::check_cap(k)?;
        if k < 2 {
            return Ok(0.0);
        }
        Ok(self.power_column(k, n + 2)[k - 2])
    }

    /// Eigenvalues of the periodic ring matrix.
    pub fn spectrum(&self) -> Result<SpectrumReport> {
        if self.boundary != Boundary::Periodic {
            return Err(Error::UnsupportedBoundary {
                op: "spectrum",
                boundary: self.boundary,
            });
        }
        let m = self.dense();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..self.sites()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut residual: f64 = 0.0;
        for &i in &order {
            let v = eig.eigenvectors.column(i);
            let r = &m * v - v * eig.eigenvalues[i];
            residual = residual.max(r.amax());
        }
        Ok(SpectrumReport {
            eigenvalues,
            residual,
        })
    }

    /// Operator norm of the lattice operator. Exact for periodic windows
    /// (largest `|lambda|` of the ring matrix); for eventually-free windows it
    /// is `max(2, ||truncation||)`, a lower bound that is tight once the
    /// window covers the perturbation with some margin.
    pub fn operator_norm(&self) -> f64 {
        let eig = SymmetricEigen::new(self.dense());
        let trunc = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        match self.boundary {
            Boundary::Periodic => trunc,
            Boundary::EventuallyFree => trunc.max(2.0),
        }
    }

    /// Classifies the window against `||J|| <= 2`. Leaving the ball is only
    /// logged: every identity here is insensitive to the bound.
    pub fn norm_regime(&self) -> NormRegime {
        let norm = self.operator_norm();
        if norm <= 2.0 + NORM_TOLERANCE {
            NormRegime::UnitBall
        } else {
            log::warn!("operator norm {norm:.6} exceeds 2; running in the bounded regime");
            NormRegime::Bounded
        }
    }

    /// Largest `|a_n - 1|, |b_n|` over the `edge` outermost sites on each side.
    pub fn tail_deviation(&self, edge: usize) -> f64 {
        let len = self.sites();
        let edge = edge.min(len);
        (0..edge)
            .chain(len - edge..len)
            .map(|i| (self.a[i] - 1.0).abs().max(self.b[i].abs()))
            .fold(0.0, f64::max)
    }

    /// Distance from the support of `J - J_free` to the nearer window edge,
    /// or `None` when the window is free.
    pub fn free_margin(&self) -> Option<usize> {
        let len = self.sites();
        let perturbed = |i: &usize| self.a[*i] != 1.0 || self.b[*i] != 0.0;
        let first = (0..len).find(perturbed)?;
        let last = (0..len).rev().find(perturbed)?;
        Some(first.min(len - 1 - last))
    }

    /// Maximum entrywise difference of the coefficient arrays.
    pub fn max_diff(&self, other: &JacobiWindow) -> Result<f64> {
        if self.sites() != other.sites() {
            return Err(Error::Dimension {
                expected: self.sites(),
                got: other.sites(),
            });
        }
        Ok(self
            .a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&WindowRecord::from(self.clone())).expect("window record serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}
