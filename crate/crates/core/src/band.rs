//! Banded operators on a periodic lattice or a finite segment.
//!
//! Row `i` stores the entries `(i, i + k)` for `-width <= k <= width`. On a
//! periodic lattice the rows repeat with period `rows` and the columns live on
//! `Z`, so wide bands never alias around the ring. On a segment, rows and
//! columns outside `0..rows` are zero.

use crate::lattice::{Boundary, JacobiWindow};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BandMatrix {
    rows: usize,
    width: usize,
    periodic: bool,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(rows: usize, width: usize, periodic: bool) -> Self {
        BandMatrix {
            rows,
            width,
            periodic,
            data: vec![0.0; rows * (2 * width + 1)],
        }
    }

    /// Tridiagonal band of `J`.
    pub(crate) fn jacobi(j: &JacobiWindow) -> Self {
        let periodic = j.boundary() == Boundary::Periodic;
        let rows = j.sites();
        let mut m = BandMatrix::zeros(rows, 1, periodic);
        for i in 0..rows {
            let n = i as isize;
            m.set(i, 0, j.b()[i]);
            if periodic || i + 1 < rows {
                m.set(i, 1, j.a_at(n));
            }
            if periodic || i > 0 {
                m.set(i, -1, j.a_at(n - 1));
            }
        }
        m
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn periodic(&self) -> bool {
        self.periodic
    }

    fn slot(&self, i: usize, k: isize) -> usize {
        i * (2 * self.width + 1) + (k + self.width as isize) as usize
    }

    pub(crate) fn set(&mut self, i: usize, k: isize, v: f64) {
        let s = self.slot(i, k);
        self.data[s] = v;
    }

    /// Entry `(i, i + k)` with `i` on the lattice.
    pub(crate) fn get(&self, i: isize, k: isize) -> f64 {
        if k.unsigned_abs() > self.width {
            return 0.0;
        }
        let rows = self.rows as isize;
        let row = if self.periodic {
            i.rem_euclid(rows)
        } else {
            if !(0..rows).contains(&i) || !(0..rows).contains(&(i + k)) {
                return 0.0;
            }
            i
        };
        self.data[self.slot(row as usize, k)]
    }

    pub(crate) fn mul(&self, rhs: &BandMatrix) -> BandMatrix {
        debug_assert_eq!(self.rows, rhs.rows);
        debug_assert_eq!(self.periodic, rhs.periodic);
        let width = self.width + rhs.width;
        let mut out = BandMatrix::zeros(self.rows, width, self.periodic);
        let (w1, w2) = (self.width as isize, rhs.width as isize);
        for i in 0..self.rows {
            let row = i as isize;
            for l in -w1..=w1 {
                let x = self.get(row, l);
                if x == 0.0 {
                    continue;
                }
                for m in -w2..=w2 {
                    let s = out.slot(i, l + m);
                    out.data[s] += x * rhs.get(row + l, m);
                }
            }
        }
        out
    }

    pub(crate) fn sub(&self, rhs: &BandMatrix) -> BandMatrix {
        debug_assert_eq!(self.rows, rhs.rows);
        let width = self.width.max(rhs.width);
        let mut out = BandMatrix::zeros(self.rows, width, self.periodic);
        let w = width as isize;
        for i in 0..self.rows {
            for k in -w..=w {
                let v = self.get(i as isize, k) - rhs.get(i as isize, k);
                out.set(i, k, v);
            }
        }
        out
    }

    pub(crate) fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_square_has_no_aliasing() {
        let j = JacobiWindow::new(vec![1.0, 2.0, 3.0], vec![0.0; 3], Boundary::Periodic).unwrap();
        let m = BandMatrix::jacobi(&j);
        let sq = m.mul(&m);
        // (J^2)(0, 2) on Z is a_0 a_1 = 2; on the 3-ring it would fold with (0, -1)
        assert_eq!(sq.get(0, 2), 2.0);
        assert_eq!(sq.get(0, -2), 3.0 * 2.0);
        assert_eq!(sq.get(0, 0), 1.0 + 9.0);
    }

    #[test]
    fn segment_edges_are_zero() {
        let j = JacobiWindow::free(4, Boundary::EventuallyFree).unwrap();
        let m = BandMatrix::jacobi(&j);
        assert_eq!(m.get(0, -1), 0.0);
        assert_eq!(m.get(3, 1), 0.0);
        let sq = m.mul(&m);
        assert_eq!(sq.get(0, 0), 1.0);
        assert_eq!(sq.get(1, 0), 2.0);
    }
}
