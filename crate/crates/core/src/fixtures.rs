//! Generated operators used by the shipped configurations and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hierarchy::HierarchyPolynomial;
use crate::lattice::{Boundary, JacobiWindow};

pub const RANDOM_A_RANGE: (f64, f64) = (0.3, 0.7);
pub const RANDOM_B_RANGE: (f64, f64) = (-0.4, 0.4);

/// Random window with `a` and `b` drawn uniformly from the fixture ranges,
/// which keeps `||J|| <= max|b| + 2 max a <= 1.8`.
pub fn random_window(sites: usize, boundary: Boundary, seed: u64) -> Result<JacobiWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..sites)
        .map(|_| rng.gen_range(RANDOM_A_RANGE.0..RANDOM_A_RANGE.1))
        .collect();
    let b = (0..sites)
        .map(|_| rng.gen_range(RANDOM_B_RANGE.0..RANDOM_B_RANGE.1))
        .collect();
    JacobiWindow::new(a, b, boundary)
}

/// Free operator with a single diagonal bump of `height` at site `buffer`,
/// centred in a window of `2 buffer + 1` sites.
pub fn bump_window(buffer: usize, height: f64) -> Result<JacobiWindow> {
    let sites = 2 * buffer + 1;
    let mut b = vec![0.0; sites];
    b[buffer] = height;
    JacobiWindow::new(vec![1.0; sites], b, Boundary::EventuallyFree)
}

/// Polynomial whose reversal differs from it, so that swapping the
/// coefficient order changes the flow.
pub fn negative_control_polynomial() -> HierarchyPolynomial {
    HierarchyPolynomial::new(vec![0.3, 1.0]).expect("valid polynomial")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_deterministic_and_in_range() {
        let x = random_window(8, Boundary::Periodic, 11).unwrap();
        assert_eq!(x, random_window(8, Boundary::Periodic, 11).unwrap());
        assert_ne!(x, random_window(8, Boundary::Periodic, 12).unwrap());
        assert!(x.operator_norm() <= 2.0);
    }

    #[test]
    fn bump_layout() {
        let j = bump_window(3, 0.5).unwrap();
        assert_eq!(j.sites(), 7);
        assert_eq!(j.b()[3], 0.5);
        assert_eq!(j.free_margin(), Some(3));
    }

    #[test]
    fn control_is_not_a_palindrome() {
        let p = negative_control_polynomial();
        assert_ne!(p, p.reversed().unwrap());
    }
}
