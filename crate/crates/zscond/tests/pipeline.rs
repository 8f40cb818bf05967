//! Class targeting: "at least this connected" against exact classes.

use zscond::geom::{AnchorSet, ConnectivityMatrix};
use zscond::pipeline::{solve_in_class, solve_in_exact_class};
use zscond::Complex64 as C;

fn pair() -> ConnectivityMatrix {
    ConnectivityMatrix::from_rows(vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap()
}

fn grounded_pair() -> ConnectivityMatrix {
    ConnectivityMatrix::from_rows(vec![vec![0, 1, 1], vec![1, 1, 1], vec![1, 1, 1]]).unwrap()
}

#[test]
fn close_pair_forms_an_arch() {
    let e = AnchorSet::new(vec![C::new(-0.3, 1.0), C::new(0.3, 1.0)]).unwrap();
    let any = solve_in_class(&e, &ConnectivityMatrix::empty(2), &Default::default(), &Default::default()).unwrap();
    assert_eq!(any.best.connectivity, pair());
    assert_eq!(any.best.spectrum.floating_count(), 1);
    let exact = solve_in_exact_class(&e, &pair(), &Default::default(), &Default::default()).unwrap();
    assert!((exact.best.intensity - any.best.intensity).abs() < 1e-12);
    let grounded = solve_in_exact_class(&e, &grounded_pair(), &Default::default(), &Default::default()).unwrap();
    assert!(grounded.best.intensity > any.best.intensity);
}

#[test]
fn wide_pair_has_no_arch() {
    let e = AnchorSet::new(vec![C::new(-1.0, 1.0), C::new(1.0, 1.0)]).unwrap();
    // the pair class is dominated by the grounded layout, which wins
    let dominated = solve_in_class(&e, &pair(), &Default::default(), &Default::default()).unwrap();
    assert_eq!(dominated.best.connectivity, grounded_pair());
    assert!(solve_in_exact_class(&e, &pair(), &Default::default(), &Default::default()).is_err());
}

#[test]
fn class_size_must_match_anchors() {
    let e = AnchorSet::new(vec![C::new(0.0, 1.0)]).unwrap();
    assert!(solve_in_class(&e, &pair(), &Default::default(), &Default::default()).is_err());
}
