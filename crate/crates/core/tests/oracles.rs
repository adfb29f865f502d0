mod common;

use common::{dense_entry, dense_lax_rhs, random_poly, random_window, rng, Segment};
use num_complex::Complex64;
use rand::Rng;
use toda_core::cocycle::{build_b, transfer_matrix};
use toda_core::hierarchy::{evolve, group_action_check, lax_rhs, skew_part};
use toda_core::lattice::K_MAX;
use toda_core::weyl::{free_m, free_root, m_functions, mobius, HalfPlanePoint, RiemannPoint};
use toda_core::{Boundary, HierarchyPolynomial, JacobiWindow};

const ORACLE_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= ORACLE_TOL * scale.max(1.0)
}

#[test]
fn apply_free_examples() {
    let j = JacobiWindow::free(4, Boundary::Periodic).unwrap();
    let mut delta = vec![c(0.0, 0.0); 4];
    delta[1] = c(1.0, 0.0);
    let out = j.apply(&delta).unwrap();
    let re: Vec<f64> = out.iter().map(|z| z.re).collect();
    assert_eq!(re, vec![1.0, 0.0, 1.0, 0.0]);
    let ones = j.apply(&[c(1.0, 0.0); 4]).unwrap();
    assert!(ones.iter().all(|z| *z == c(2.0, 0.0)));
}

#[test]
fn apply_matches_dense_product() {
    let mut r = rng(1);
    for boundary in [Boundary::Periodic, Boundary::EventuallyFree] {
        let j = random_window(&mut r, 5, boundary);
        let u: Vec<Complex64> = (0..5).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let got = j.apply(&u).unwrap();
        let m = j.dense();
        for i in 0..5 {
            let want: Complex64 = (0..5).map(|k| u[k] * m[(i, k)]).sum();
            assert!((got[i] - want).norm() < 1e-14);
        }
    }
}

#[test]
fn entries_match_dense_powers() {
    let mut r = rng(2);
    for trial in 0..40 {
        let sites = 3 + trial % 10;
        let boundary = if trial % 2 == 0 { Boundary::Periodic } else { Boundary::EventuallyFree };
        let j = random_window(&mut r, sites, boundary);
        let scale = j.operator_norm().max(2.0);
        let seg = Segment::around(&j, K_MAX + 4);
        let mut power = nalgebra::DMatrix::identity(seg.matrix.nrows(), seg.matrix.nrows());
        for k in 0..=K_MAX {
            let s = scale.powi(k as i32);
            for n in [-2, 0, (sites / 2) as isize, sites as isize - 1, sites as isize + 1] {
                let i = seg.index(n);
                assert!(close(j.diag_entry(k, n).unwrap(), power[(i, i)], s));
                assert!(close(j.offdiag_entry(k, n).unwrap(), power[(i, i + 1)], s));
                assert!(close(j.second_offdiag_entry(k, n).unwrap(), power[(i, i + 2)], s));
            }
            power = &power * &seg.matrix;
        }
    }
}

#[test]
fn entry_examples() {
    let free = JacobiWindow::free(6, Boundary::Periodic).unwrap();
    assert_eq!(free.diag_entry(2, 3).unwrap(), 2.0);
    let j = random_window(&mut rng(3), 6, Boundary::Periodic);
    for n in 0..6 {
        assert_eq!(j.diag_entry(0, n).unwrap(), 1.0);
        assert_eq!(j.diag_entry(1, n).unwrap(), j.b_at(n));
        assert_eq!(j.offdiag_entry(0, n).unwrap(), 0.0);
        assert_eq!(j.offdiag_entry(1, n).unwrap(), j.a_at(n));
        assert!(close(j.offdiag_entry(3, n).unwrap(), dense_entry(&j, 3, n, 1), 1.0));
    }
}

#[test]
fn lowest_skew_part_is_signed_offdiagonal() {
    let j = random_window(&mut rng(4), 7, Boundary::Periodic);
    let p = skew_part(&j, 0).unwrap();
    for n in 0..7 {
        assert_eq!(p.get(n, 1), j.a_at(n));
        assert_eq!(p.get(n, -1), -j.a_at(n - 1));
        assert_eq!(p.get(n, 0), 0.0);
        assert_eq!(p.get(n, 2), 0.0);
    }
}

#[test]
fn second_skew_part_of_free_operator() {
    let j = JacobiWindow::free(9, Boundary::Periodic).unwrap();
    let p = skew_part(&j, 1).unwrap();
    for n in 0..9 {
        assert_eq!(p.get(n, 2), 1.0);
        assert_eq!(p.get(n, -2), -1.0);
        assert_eq!(p.get(n, 1), 0.0);
        assert_eq!(p.get(n, -1), 0.0);
    }
}

#[test]
fn lowest_member_rhs_closed_form_on_five_ring() {
    let j = random_window(&mut rng(5), 5, Boundary::Periodic);
    let (da, db) = dense_lax_rhs(&j, &HierarchyPolynomial::toda());
    for n in 0..5usize {
        let m = n as isize;
        let a = j.a_at(m);
        let a0 = j.a_at(m - 1);
        assert!((db[n] - 2.0 * (a * a - a0 * a0)).abs() < 1e-14);
        assert!((da[n] - a * (j.b_at(m + 1) - j.b_at(m))).abs() < 1e-14);
    }
}

#[test]
fn lax_rhs_matches_dense_commutator() {
    let mut r = rng(6);
    for trial in 0..24 {
        let sites = 3 + trial % 8;
        let d = 1 + trial % 4;
        let boundary = if trial % 3 == 0 { Boundary::EventuallyFree } else { Boundary::Periodic };
        let j = random_window(&mut r, sites, boundary);
        let poly = random_poly(&mut r, d);
        let got = lax_rhs(&j, &poly).unwrap();
        let (da, db) = dense_lax_rhs(&j, &poly);
        let scale = poly.coeffs().iter().map(|x| x.abs()).sum::<f64>() * j.operator_norm().max(2.0).powi(d as i32 + 1);
        for n in 0..sites {
            assert!(close(got.da[n], da[n], scale), "trial {trial} da[{n}]");
            assert!(close(got.db[n], db[n], scale), "trial {trial} db[{n}]");
        }
    }
}

#[test]
fn free_periodic_spectrum() {
    let s = JacobiWindow::free(4, Boundary::Periodic).unwrap().spectrum().unwrap();
    let want = [-2.0, 0.0, 0.0, 2.0];
    for (x, y) in s.eigenvalues.iter().zip(want) {
        assert!((x - y).abs() < 1e-14);
    }
    let s = JacobiWindow::free(8, Boundary::Periodic).unwrap().spectrum().unwrap();
    let mut want: Vec<f64> = (0..8).map(|k| 2.0 * (std::f64::consts::TAU * k as f64 / 8.0).cos()).collect();
    want.sort_by(f64::total_cmp);
    for (x, y) in s.eigenvalues.iter().zip(&want) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn random_spectrum_residual() {
    let mut r = rng(7);
    for _ in 0..10 {
        let s = random_window(&mut r, 8, Boundary::Periodic).spectrum().unwrap();
        assert!(s.residual < 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn power_recursions() {
    let mut r = rng(8);
    for boundary in [Boundary::Periodic, Boundary::EventuallyFree] {
        let j = random_window(&mut r, 7, boundary);
        for n in -1..8 {
            let (a0, a1, a2) = (j.a_at(n - 1), j.a_at(n), j.a_at(n + 1));
            let (b1, b2) = (j.b_at(n), j.b_at(n + 1));
            for t in 1..=6 {
                let jt = j.diag_entry(t, n).unwrap();
                let rec = a1 * j.offdiag_entry(t - 1, n).unwrap()
                    + a0 * j.offdiag_entry(t - 1, n - 1).unwrap()
                    + b1 * j.diag_entry(t - 1, n).unwrap();
                assert!((jt - rec).abs() < 1e-10);

                let ljt = j.offdiag_entry(t, n).unwrap();
                let rec1 = a0 * j.second_offdiag_entry(t - 1, n - 1).unwrap()
                    + a1 * j.diag_entry(t - 1, n + 1).unwrap()
                    + b1 * j.offdiag_entry(t - 1, n).unwrap();
                assert!((ljt - rec1).abs() < 1e-10);
                let rec2 = a2 * j.second_offdiag_entry(t - 1, n).unwrap()
                    + a1 * j.diag_entry(t - 1, n).unwrap()
                    + b2 * j.offdiag_entry(t - 1, n).unwrap();
                assert!((ljt - rec2).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn transfer_matrix_propagates_solutions() {
    let mut r = rng(9);
    let j = random_window(&mut r, 6, Boundary::Periodic);
    let z = c(r.gen_range(-1.0..1.0), r.gen_range(0.1..2.0));
    let mut u = vec![c(0.7, -0.2), c(-0.4, 1.1)];
    for n in 0..10isize {
        let k = n as usize;
        let next = ((z - j.b_at(n)) * u[k + 1] - j.a_at(n - 1) * u[k]) / j.a_at(n);
        u.push(next);
    }
    // u[k] holds u_{k-1}
    for n in 0..9isize {
        let k = n as usize;
        let m = transfer_matrix(&j, n, z).matrix;
        let v = [-u[k + 1], j.a_at(n - 1) * u[k]];
        let w = m.apply(v);
        let scale = u[k + 2].norm().max(u[k + 1].norm()).max(1.0);
        assert!((w[0] + u[k + 2]).norm() < 1e-12 * scale);
        assert!((w[1] - j.a_at(n) * u[k + 1]).norm() < 1e-12 * scale);
    }
}

#[test]
fn lowest_member_generator() {
    let j = random_window(&mut rng(10), 6, Boundary::Periodic);
    let z = c(0.3, 1.7);
    for n in 0..6 {
        let b = build_b(&j, n, &HierarchyPolynomial::toda()).unwrap().eval(z);
        let zb = z - j.b_at(n);
        let a0 = j.a_at(n - 1);
        assert!((b.0[0][0] - zb).norm() < 1e-15);
        assert!((b.0[0][1] - 2.0).norm() < 1e-15);
        assert!((b.0[1][0] + 2.0 * a0 * a0).norm() < 1e-15);
        assert!((b.0[1][1] + zb).norm() < 1e-15);
    }
}

#[test]
fn free_generator_reduces_to_z_times_c() {
    let j = JacobiWindow::free(6, Boundary::Periodic).unwrap();
    let poly = HierarchyPolynomial::new(vec![0.4, -1.2, 0.7]).unwrap();
    let here = build_b(&j, 2, &poly).unwrap();
    let next = build_b(&j, 3, &poly).unwrap();
    let lhs = next.a() + here.a();
    let rhs = &toda_core::poly::Poly::monomial(1) * here.c();
    assert!((&lhs - &rhs).max_abs() < 1e-14);
}

#[test]
fn free_m_closed_form() {
    let m = free_m(HalfPlanePoint::new(c(0.0, 2.0)).unwrap());
    assert!((m - c(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-15);
    // the decaying branch, checked against the growth of w^n
    let w = free_root(HalfPlanePoint::new(c(0.0, 2.0)).unwrap());
    assert!(w.powu(200).norm() < 1e-70);
}

#[test]
fn free_m_herglotz_grid() {
    for i in 0..10 {
        for k in 0..10 {
            let z = c(-4.0 + 8.0 * i as f64 / 9.0, 0.01 + 3.0 * k as f64 / 9.0);
            let z = HalfPlanePoint::new(z).unwrap();
            assert!(free_root(z).norm() < 1.0);
            assert!(free_m(z).im > 0.0);
        }
    }
}

#[test]
fn m_functions_step_through_transfer_matrix() {
    let mut r = rng(11);
    let j = random_window(&mut r, 9, Boundary::EventuallyFree);
    let z = HalfPlanePoint::new(c(0.4, 0.9)).unwrap();
    for n in -2..11 {
        let here = m_functions(&j, n, z).unwrap();
        let next = m_functions(&j, n + 1, z).unwrap();
        let m = transfer_matrix(&j, n, z.z()).matrix;
        let plus = mobius(&m, RiemannPoint::Finite(here.m_plus)).finite().unwrap();
        assert!((plus - next.m_plus).norm() < 1e-10 * next.m_plus.norm().max(1.0));
        let minus = -mobius(&m, RiemannPoint::Finite(-here.m_minus)).finite().unwrap();
        assert!((minus - next.m_minus).norm() < 1e-10 * next.m_minus.norm().max(1.0));
    }
}

#[test]
fn m_functions_herglotz_for_unit_ball_windows() {
    let mut r = rng(12);
    for _ in 0..20 {
        let a = (0..10).map(|_| r.gen_range(0.3..0.7)).collect();
        let b = (0..10).map(|_| r.gen_range(-0.4..0.4)).collect();
        let j = JacobiWindow::new(a, b, Boundary::EventuallyFree).unwrap();
        for k in 0..8 {
            let theta = 0.2 + 2.7 * k as f64 / 7.0;
            let z = Complex64::from_polar(2.5, theta);
            let z = HalfPlanePoint::new(c(z.re, z.im.max(0.5))).unwrap();
            for n in 0..10 {
                assert!(m_functions(&j, n, z).unwrap().is_herglotz());
            }
        }
    }
}

#[test]
fn group_action_against_half_step_reference() {
    let mut r = rng(13);
    let j = random_window(&mut r, 6, Boundary::Periodic);
    let p = HierarchyPolynomial::toda();
    assert!(group_action_check(&j, &p, 0.25, 0.25, 1e-3).unwrap() < 1e-7);
    assert_eq!(group_action_check(&j, &p, 0.0, 0.25, 1e-3).unwrap(), 0.0);
    let there = evolve(&j, &p, 0.4, 1e-3).unwrap();
    let back = evolve(&there.window, &p, -0.4, 1e-3).unwrap();
    assert!(back.window.max_diff(&j).unwrap() < 1e-7);
}
