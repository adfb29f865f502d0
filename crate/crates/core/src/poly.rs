//! Dense polynomials in the spectral parameter `z` and 2x2 complex matrices.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Polynomial with complex coefficients, stored lowest degree first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly::from_real(&[c])
    }

    /// `z^k`
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly {
            coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    pub fn from_complex(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`; zero past the stored length.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the highest coefficient with modulus above `tol`.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm() > tol)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.degree(tol).is_none()
    }

    /// Multiply by `z`.
    pub fn shift_up(&self) -> Poly {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Complex64::new(0.0, 0.0));
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Poly {
        let s = s.into();
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Real parts of the coefficients.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly {
            coeffs: (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly {
            coeffs: (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += x * y;
            }
        }
        Poly { coeffs }
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

/// 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    /// `diag(1, -1)`
    pub fn sign_flip() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, -one]])
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Mat2 {
        let s = s.into();
        let m = self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let (x, y) = (self.0, rhs.0);
        Mat2([
            [x[0][0] + y[0][0], x[0][1] + y[0][1]],
            [x[1][0] + y[1][0], x[1][1] + y[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (x, y) = (self.0, rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        Mat2(out)
    }
}

/// 2x2 matrix of polynomials in `z`, laid out as `[[A, C], [D, E]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix2 {
    pub entries: [[Poly; 2]; 2],
}

impl PolyMatrix2 {
    pub fn new(a: Poly, c: Poly, d: Poly, e: Poly) -> Self {
        PolyMatrix2 {
            entries: [[a, c], [d, e]],
        }
    }

    /// `(1,1)` entry, the `A` of the trace-zero form.
    pub fn a(&self) -> &Poly {
        &self.entries[0][0]
    }

    /// `(1,2)` entry.
    pub fn c(&self) -> &Poly {
        &self.entries[0][1]
    }

    /// `(2,1)` entry.
    pub fn d(&self) -> &Poly {
        &self.entries[1][0]
    }

    pub fn trace(&self) -> Poly {
        &self.entries[0][0] + &self.entries[1][1]
    }

    pub fn eval(&self, z: Complex64) -> Mat2 {
        let e = &self.entries;
        Mat2::new(e[0][0].eval(z), e[0][1].eval(z), e[1][0].eval(z), e[1][1].eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_arithmetic() {
        let p = Poly::from_real(&[1.0, 2.0]);
        let q = Poly::from_real(&[-1.0, 0.0, 3.0]);
        assert_eq!((&p + &q).real_coeffs(), vec![0.0, 2.0, 3.0]);
        assert_eq!((&p * &q).real_coeffs(), vec![-1.0, -2.0, 3.0, 6.0]);
        assert_eq!(p.shift_up().real_coeffs(), vec![0.0, 1.0, 2.0]);
        assert_eq!(q.degree(0.0), Some(2));
        assert_eq!(Poly::from_real(&[0.0, 0.0]).degree(0.0), None);
        let z = Complex64::new(0.5, -1.0);
        assert!(((&p * &q).eval(z) - p.eval(z) * q.eval(z)).norm() < 1e-14);
    }

    #[test]
    fn mat2_basics() {
        let m = Mat2::new(
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.0),
        );
        assert_eq!(Mat2::identity() * m, m);
        assert!((m.det() - Complex64::new(5.0, 1.0)).norm() < 1e-15);
        assert_eq!((m - m).max_abs(), 0.0);
    }
}
