//! Invariants checked over random inputs.

use proptest::prelude::*;

use zscond::equilibrium::{solve_equilibrium, ExternalField};
use zscond::geom::{connectivity_of, hausdorff_distance, AnchorSet, Arc, ConnectivityMatrix, PolyContinuum};
use zscond::pipeline::solve_in_class;
use zscond::verify::{
    bulge_family, mismatch_profiles, orthogonal_trajectory, tilt_family, NormalOptions, OrthoOptions, TrajectoryEnd,
};
use zscond::Complex64 as C;

fn seg(a: C, b: C) -> PolyContinuum {
    PolyContinuum::new(vec![Arc::segment(a, b).unwrap()]).unwrap()
}

fn intensity(k: &PolyContinuum) -> f64 {
    solve_equilibrium(k, &ExternalField::default()).unwrap().intensity()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    // I(λK + a) = λ² I(K) for real a, λ > 0
    #[test]
    fn intensity_is_covariant(
        x0 in -1.0f64..1.0, y0 in 0.2f64..1.5, x1 in -1.0f64..1.0, y1 in 0.0f64..1.5,
        a in -3.0f64..3.0, lambda in 0.3f64..3.0,
    ) {
        let (p, q) = (C::new(x0, y0), C::new(x1, y1));
        prop_assume!((p - q).norm() > 0.2);
        let k = seg(p, q);
        let moved = seg(lambda * p + a, lambda * q + a);
        let (i, j) = (intensity(&k), intensity(&moved));
        prop_assert!((j - lambda * lambda * i).abs() < 1e-8 * (1.0 + j), "{} vs {}", j, lambda * lambda * i);
    }

    // for one anchor the minimizer is the vertical segment under it
    #[test]
    fn single_anchor_closed_form(x in -5.0f64..5.0, y in 0.1f64..5.0) {
        let e = AnchorSet::new(vec![C::new(x, y)]).unwrap();
        let t = solve_in_class(&e, &ConnectivityMatrix::empty(1), &Default::default(), &Default::default()).unwrap().best;
        prop_assert!((t.intensity - 0.5 * y * y).abs() < 1e-8 * (1.0 + y * y));
        let h = hausdorff_distance(&t.spectrum, &seg(C::new(x, 0.0), C::new(x, y)));
        prop_assert!(h < 1e-6 * y, "{}", h);
    }

    // no tilt or bulge of the vertical segment beats it
    #[test]
    fn vertical_segment_is_minimal(angle in -50.0f64..50.0, bulge in -0.4f64..0.4) {
        let top = C::new(0.0, 1.0);
        let base = intensity(&seg(C::new(0.0, 0.0), top));
        let tilted = &tilt_family(top, &[angle]).unwrap()[0].1;
        let bowed = &bulge_family(top, &[bulge]).unwrap()[0].1;
        prop_assert!(intensity(tilted) >= base - 1e-9);
        prop_assert!(intensity(bowed) >= base - 1e-9);
    }

    // ∂V/∂n₊ + ∂V/∂n₋ = 2πu and mismatch = −2 dũ/dζ on any segment
    #[test]
    fn normal_derivative_identities(angle in -40.0f64..40.0) {
        let k = &tilt_family(C::new(0.0, 1.0), &[angle]).unwrap()[0].1;
        let m = solve_equilibrium(k, &ExternalField::default()).unwrap();
        let r = mismatch_profiles(&m, &NormalOptions::default()).unwrap();
        prop_assert!(r.samples > 0);
        prop_assert!(r.sum_defect < 1e-4, "sum defect {}", r.sum_defect);
        prop_assert!(r.identity_defect < 1e-3, "identity defect {}", r.identity_defect);
    }
}

proptest! {
    #![proptest_config(config(12))]

    // V = Im 𝒫 grows along an ascent path, which ends by hitting, escaping
    // or stalling rather than running out of steps
    #[test]
    fn ascent_paths_increase_v_and_terminate(t in 0.05f64..0.95, side in any::<bool>()) {
        let k = seg(C::new(0.0, 0.0), C::new(0.0, 1.0));
        let m = solve_equilibrium(&k, &ExternalField::default()).unwrap();
        let normal = if side { C::new(-1.0, 0.0) } else { C::new(1.0, 0.0) };
        let path = orthogonal_trajectory(&m, C::new(0.0, t), Some(normal), None, &OrthoOptions::default()).unwrap();
        prop_assert!(path.end != TrajectoryEnd::StepLimit);
        let q = m.quasimomentum();
        let v: Vec<f64> = path.points.iter().map(|&z| q.p(z).unwrap().im).collect();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    // grouping anchors by label and reading the groups back is the identity
    #[test]
    fn connectivity_round_trip(labels in proptest::collection::vec(0usize..4, 1..6), ground in proptest::collection::vec(any::<bool>(), 4)) {
        let m = ConnectivityMatrix::from_labels(&labels, &ground);
        prop_assert!(m.dominates(&m));
        prop_assert!(m.dominates(&ConnectivityMatrix::empty(labels.len())));
        let (_, groups) = m.groups();
        for g in &groups {
            for &i in g {
                for &j in g {
                    prop_assert_eq!(labels[i], labels[j]);
                }
            }
        }
    }

    // two vertical segments, each either grounded or lifted off ℝ
    #[test]
    fn connectivity_of_two_segments(lift0 in any::<bool>(), lift1 in any::<bool>(), h in 0.05f64..0.5) {
        let (h0, h1) = (if lift0 { h } else { 0.0 }, if lift1 { h } else { 0.0 });
        let e = AnchorSet::new(vec![C::new(-1.0, 1.0), C::new(1.0, 1.0)]).unwrap();
        let k = PolyContinuum::new(vec![
            Arc::segment(C::new(-1.0, h0), C::new(-1.0, 1.0)).unwrap(),
            Arc::segment(C::new(1.0, h1), C::new(1.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let m = connectivity_of(&k, &e).unwrap();
        prop_assert_eq!(m.get(0, 1), h0 == 0.0);
        prop_assert_eq!(m.get(0, 2), h1 == 0.0);
        prop_assert_eq!(m.get(1, 2), h0 == 0.0 && h1 == 0.0);
    }

    #[test]
    fn hausdorff_is_a_metric(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let k = |x: f64| seg(C::new(x, 0.0), C::new(x, 1.0));
        let (ka, kb, kc) = (k(a), k(b), k(c));
        let d = |p: &PolyContinuum, q: &PolyContinuum| hausdorff_distance(p, q);
        prop_assert!((d(&ka, &kb) - d(&kb, &ka)).abs() < 1e-12);
        prop_assert!((d(&ka, &kb) - (a - b).abs()).abs() < 1e-9);
        prop_assert!(d(&ka, &kc) <= d(&ka, &kb) + d(&kb, &kc) + 1e-12);
        prop_assert!(d(&ka, &ka) < 1e-12);
    }
}
