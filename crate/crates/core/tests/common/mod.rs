//! Dense brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toda_core::{Boundary, HierarchyPolynomial, JacobiWindow};

/// An open chain (no wraparound) that agrees with `j` on `Z` over the
/// sites `first ..= first + len - 1`.
pub struct Segment {
    pub first: isize,
    pub matrix: DMatrix<f64>,
}

impl Segment {
    pub fn new(j: &JacobiWindow, first: isize, len: usize) -> Self {
        let mut m = DMatrix::zeros(len, len);
        for i in 0..len {
            let n = first + i as isize;
            m[(i, i)] = j.b_at(n);
            if i + 1 < len {
                m[(i, i + 1)] = j.a_at(n);
                m[(i + 1, i)] = j.a_at(n);
            }
        }
        Segment { first, matrix: m }
    }

    /// Covers the window with `pad` extra sites on each side.
    pub fn around(j: &JacobiWindow, pad: usize) -> Self {
        Segment::new(j, -(pad as isize), j.sites() + 2 * pad)
    }

    pub fn index(&self, n: isize) -> usize {
        (n - self.first) as usize
    }

    pub fn power(&self, k: usize) -> DMatrix<f64> {
        let len = self.matrix.nrows();
        let mut p = DMatrix::identity(len, len);
        for _ in 0..k {
            p = &p * &self.matrix;
        }
        p
    }
}

/// `<delta_n, J^k delta_{n+shift}>` from a dense power of a chain wide
/// enough that its ends are never reached.
pub fn dense_entry(j: &JacobiWindow, k: usize, n: isize, shift: isize) -> f64 {
    let seg = Segment::around(j, k + 4);
    let p = seg.power(k);
    p[(seg.index(n), seg.index(n + shift))]
}

/// `(da, db)` of the Lax flow from the dense commutator `P J - J P` with
/// `P = sum_j p_j (upper(J^j) - lower(J^j))` on a chain padded so that the
/// window rows never see its ends.
pub fn dense_lax_rhs(j: &JacobiWindow, poly: &HierarchyPolynomial) -> (Vec<f64>, Vec<f64>) {
    let d = poly.degree();
    let seg = Segment::around(j, 2 * d + 6);
    let len = seg.matrix.nrows();
    let mut p = DMatrix::zeros(len, len);
    for r in 1..=d {
        let pw = seg.power(r);
        for x in 0..len {
            for y in 0..len {
                if y > x {
                    p[(x, y)] += poly.p(r) * pw[(x, y)];
                } else if y < x {
                    p[(x, y)] -= poly.p(r) * pw[(x, y)];
                }
            }
        }
    }
    let c = &p * &seg.matrix - &seg.matrix * &p;
    let mut da = Vec::new();
    let mut db = Vec::new();
    for n in 0..j.sites() as isize {
        let i = seg.index(n);
        da.push(c[(i, i + 1)]);
        db.push(c[(i, i)]);
    }
    (da, db)
}

pub fn random_window(rng: &mut ChaCha8Rng, sites: usize, boundary: Boundary) -> JacobiWindow {
    let a = (0..sites).map(|_| rng.gen_range(0.3..1.2)).collect();
    let b = (0..sites).map(|_| rng.gen_range(-0.8..0.8)).collect();
    JacobiWindow::new(a, b, boundary).unwrap()
}

pub fn random_poly(rng: &mut ChaCha8Rng, d: usize) -> HierarchyPolynomial {
    let mut c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
    if c[d - 1].abs() < 0.1 {
        c[d - 1] = 0.5;
    }
    HierarchyPolynomial::new(c).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
