//! The Rust side of the bindings, without an interpreter.

use num_complex::Complex64 as C;
use zscond_py::{energy_report, solve_summary, verify_summary};

#[test]
fn solve_single_anchor() {
    let s = solve_summary(vec![C::new(0.0, 1.0)], None).unwrap();
    assert!((s.intensity - 0.5).abs() < 1e-9);
    assert!(s.coeffs.iter().all(|c| c.abs() < 1e-9));
    assert_eq!(s.connectivity, vec![vec![0, 1], vec![1, 1]]);
    assert_eq!(s.spectrum.len(), 1);
}

#[test]
fn energy_of_a_segment() {
    let r = energy_report(vec![vec![C::new(0.0, 0.0), C::new(0.0, 1.0)]], None, 128).unwrap();
    assert!((r.i_measure - 0.5).abs() < 1e-9);
    assert!((r.i_dirichlet - 0.5).abs() < 1e-2);
}

#[test]
fn verify_single_anchor() {
    let v = verify_summary(vec![C::new(0.0, 1.0)], None, 6).unwrap();
    assert!(v.s_residual < 1e-5 && v.schiffer_residual < 1e-5 && v.jenkins);
}

#[test]
fn errors_carry_the_message() {
    let e = solve_summary(vec![C::new(0.0, -1.0)], None).err().unwrap();
    assert!(e.to_string().contains("anchor below real axis"));
    assert!(solve_summary(vec![C::new(0.0, 1.0)], Some(vec![vec![0, 1, 1]])).is_err());
}
