//! Acceptance criteria 1–10. Each writes one PASS/FAIL line with the
//! measured quantities to stderr; the test fails if any criterion fails.
//!
//! Run alone with `cargo test -p zscond --test acceptance`, or one criterion
//! with `ZSCOND_CRITERION=k`.

use std::io::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use zscond::boutroux::CycleBasis;
use zscond::cli::{run_command, Status};
use zscond::config::JobConfig;
use zscond::equilibrium::{solve_equilibrium, ExternalField};
use zscond::geom::{hausdorff_distance, AnchorSet, Arc, ConnectivityMatrix, PolyContinuum};
use zscond::pipeline::{solve_in_class, Traced};
use zscond::tracer::zs_measure;
use zscond::verify::{
    continuity_probe, energy_inequality_probe, minimize_in_class, raise_probe, s_property_residual, schiffer_certificate,
    tilt_family, DescentOptions, ProbeOptions,
};
use zscond::Complex64 as C;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn seg(a: C, b: C) -> PolyContinuum {
    PolyContinuum::new(vec![Arc::segment(a, b).unwrap()]).unwrap()
}

fn anchors(p: &[C]) -> AnchorSet {
    AnchorSet::new(p.to_vec()).unwrap()
}

fn solve(e: &AnchorSet, m: &ConnectivityMatrix) -> Traced {
    solve_in_class(e, m, &Default::default(), &Default::default()).unwrap().best
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("zscond-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rows(r: &[[u8; 4]]) -> ConnectivityMatrix {
    ConnectivityMatrix::from_rows(r.iter().map(|x| x.to_vec()).collect()).unwrap()
}

/// Anchors 0 and 1 share a component.
fn pair_matrix() -> ConnectivityMatrix {
    ConnectivityMatrix::from_rows(vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap()
}

fn crit1() -> Verdict {
    let cfg = JobConfig::parse("anchors = [[0.0, 1.0]]\n").unwrap();
    let dir = out_dir("c1");
    let t0 = Instant::now();
    let outcome = run_command("solve", &cfg, &dir).unwrap();
    let elapsed = t0.elapsed();
    let _ = std::fs::remove_dir_all(&dir);

    let t = solve(&anchors(&[c(0.0, 1.0)]), &ConnectivityMatrix::empty(1));
    let cmax = t.solution.qd.coeffs().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let h = hausdorff_distance(&t.spectrum, &seg(c(0.0, 0.0), c(0.0, 1.0)));
    let i_res = t.solution.qd.residue_intensity();
    let i_meas = zs_measure(&t.solution.qd, &t.spectrum).intensity();
    let pass = outcome.status == Status::Pass
        && cmax < 1e-9
        && h < 1e-6
        && (i_res - 0.5).abs() < 1e-6
        && (i_meas - 0.5).abs() < 1e-6
        && elapsed < Duration::from_secs(5);
    verdict(
        pass,
        format!("max|c|={cmax:.1e} H={h:.1e} I_res={i_res:.12} I_meas={i_meas:.12} solve {:.2}s", elapsed.as_secs_f64()),
    )
}

fn crit2() -> Verdict {
    let base = solve(&anchors(&[c(0.0, 1.0)]), &ConnectivityMatrix::empty(1));
    let mut pass = true;
    let mut detail = String::new();
    for (z, lambda, shift, expect) in [(c(1.0, 2.0), 2.0, 1.0, 2.0), (c(0.0, 3.0), 3.0, 0.0, 4.5)] {
        let t = solve(&anchors(&[z]), &ConnectivityMatrix::empty(1));
        let mapped = base.spectrum.map(|w| lambda * w + shift).unwrap();
        let h = hausdorff_distance(&t.spectrum, &mapped);
        pass &= (t.intensity - expect).abs() < 1e-6 && h < 1e-5;
        detail += &format!("E={{{z}}} I={:.10} H={h:.1e}; ", t.intensity);
    }
    verdict(pass, detail)
}

fn crit3() -> Verdict {
    let two = anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]);
    let three = anchors(&[c(-0.7, 0.8), c(0.2, 1.3), c(1.1, 0.6)]);
    let cases = [
        ("±1+i any", two.clone(), ConnectivityMatrix::empty(2)),
        ("±1+i pair", two, pair_matrix()),
        ("3-anchor", three, ConnectivityMatrix::empty(3)),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, e, m) in cases {
        let t0 = Instant::now();
        let t = solve(&e, &m);
        let elapsed = t0.elapsed();
        let qd = &t.solution.qd;
        let p1 = qd.periods(&qd.cycle_basis()).unwrap();
        let alt = CycleBasis::for_branch_points(&qd.branch_points(), &qd.evaluator().singular_points(), 0.25);
        let p2 = qd.periods(&alt).unwrap();
        let drift = p1.values.iter().zip(&p2.values).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        let im = p1.max_abs_im();
        pass &= im < 1e-10 && drift < 1e-9 && elapsed < Duration::from_secs(60);
        detail += &format!("{name}: genus {} max|Im|={im:.1e} basis drift={drift:.1e} {:.1}s; ", qd.genus(), elapsed.as_secs_f64());
    }
    verdict(pass, detail)
}

fn crit4() -> Verdict {
    let cases: Vec<(&str, AnchorSet, ConnectivityMatrix)> = vec![
        ("i", anchors(&[c(0.0, 1.0)]), ConnectivityMatrix::empty(1)),
        ("1+2i", anchors(&[c(1.0, 2.0)]), ConnectivityMatrix::empty(1)),
        ("±1+i", anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]), ConnectivityMatrix::empty(2)),
        ("±0.3+i", anchors(&[c(-0.3, 1.0), c(0.3, 1.0)]), pair_matrix()),
        ("3-anchor", anchors(&[c(-0.7, 0.8), c(0.2, 1.3), c(1.1, 0.6)]), ConnectivityMatrix::empty(3)),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, e, m) in cases {
        let t = solve(&e, &m);
        let r = solve_equilibrium(&t.spectrum, &ExternalField::default()).unwrap().intensity_report(512).unwrap();
        let d1 = (t.intensity - r.i_measure).abs();
        let d2 = (r.i_measure - r.i_dirichlet).abs();
        pass &= d1 < 1e-6 && d2 < 1e-2;
        detail += &format!("{name}: |res-meas|={d1:.1e} |meas-dir|={d2:.1e}; ");
    }
    verdict(pass, detail)
}

fn crit5() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    let sets: Vec<(&str, AnchorSet, ConnectivityMatrix)> = vec![
        ("i", anchors(&[c(0.0, 1.0)]), ConnectivityMatrix::empty(1)),
        ("±1+i", anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]), ConnectivityMatrix::empty(2)),
        ("±0.3+i", anchors(&[c(-0.3, 1.0), c(0.3, 1.0)]), pair_matrix()),
        ("3-anchor", anchors(&[c(-0.7, 0.8), c(0.2, 1.3), c(1.1, 0.6)]), ConnectivityMatrix::empty(3)),
    ];
    for (name, e, m) in sets {
        let t = solve(&e, &m);
        let mf = solve_equilibrium(&t.spectrum, &ExternalField::default()).unwrap();
        let s = s_property_residual(&mf).unwrap();
        let sc = schiffer_certificate(&mf, &e).unwrap().residual;
        pass &= s < 1e-5 && sc < 1e-5;
        detail += &format!("{name}: S={s:.1e} Schiffer={sc:.1e}; ");
    }
    let top = c(0.0, 1.0);
    let tilted = &tilt_family(top, &[15.0]).unwrap()[0].1;
    let mt = solve_equilibrium(tilted, &ExternalField::default()).unwrap();
    let s = s_property_residual(&mt).unwrap();
    let sc = schiffer_certificate(&mt, &anchors(&[top])).unwrap().residual;
    pass &= s > 1e-2 && sc > 1e-2;
    detail += &format!("15° tilt: S={s:.3} Schiffer={sc:.3}");
    verdict(pass, detail)
}

fn crit6() -> Verdict {
    let t0 = Instant::now();
    let e = anchors(&[c(0.0, 1.0)]);
    let m = ConnectivityMatrix::empty(1);
    let reference = solve_equilibrium(&seg(c(0.0, 0.0), c(0.0, 1.0)), &ExternalField::default()).unwrap();
    let angles: Vec<f64> = (0..21).map(|k| -30.0 + 3.0 * k as f64).collect();
    let fam = tilt_family(c(0.0, 1.0), &angles).unwrap();
    let rep = energy_inequality_probe(&e, &m, &reference, &fam, &ProbeOptions::default()).unwrap();
    let elapsed = t0.elapsed();
    let margin_at = |a: f64| rep.entries.iter().find(|x| x.param == a).and_then(|x| x.margin).unwrap_or(f64::NAN);
    let (m_minus, m_plus) = (margin_at(-15.0), margin_at(15.0));
    let jenkins_all = rep.entries.iter().all(|x| x.jenkins == Some(true));
    let pass = rep.argmin == Some(0.0)
        && rep.ordering_holds
        && m_minus >= 1e-3
        && m_plus >= 1e-3
        && jenkins_all
        && elapsed < Duration::from_secs(120);
    verdict(
        pass,
        format!(
            "argmin={:?} margin(±15°)={m_minus:.3e}/{m_plus:.3e} jenkins all={jenkins_all} ordering={} {:.1}s",
            rep.argmin,
            rep.ordering_holds,
            elapsed.as_secs_f64()
        ),
    )
}

fn crit7() -> Verdict {
    let cases: Vec<(&str, AnchorSet, ConnectivityMatrix)> = vec![
        ("i", anchors(&[c(0.0, 1.0)]), ConnectivityMatrix::empty(1)),
        ("±1+i any", anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]), ConnectivityMatrix::empty(2)),
        ("±1+i pair", anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]), pair_matrix()),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, e, m) in cases {
        let t = solve(&e, &m);
        let d = minimize_in_class(&e, &m, &ExternalField::default(), &DescentOptions::default()).unwrap();
        let h = hausdorff_distance(&d.best.contour, &t.spectrum);
        let gap = (d.best.intensity - t.intensity).abs();
        pass &= d.best.converged && h < 2e-2 && gap < 1e-3;
        detail += &format!("{name}: H={h:.1e} |ΔI|={gap:.1e}; ");
    }
    verdict(pass, detail)
}

const SWEEP: &str = "\
anchors = [[-0.3, 1.0], [0.3, 1.0], [0.0, 0.4]]

[sweep]
direction = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
from = 0.0
to = 0.2
points = 5
classes = [
  [[0, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]],
  [[0, 0, 0, 0], [0, 1, 1, 1], [0, 1, 1, 1], [0, 1, 1, 1]],
]
";

fn crit8() -> Verdict {
    let cfg = JobConfig::parse(SWEEP).unwrap();
    let dir = out_dir("c8");
    let t0 = Instant::now();
    let outcome = run_command("compare-classes", &cfg, &dir).unwrap();
    let elapsed = t0.elapsed();
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    let x = &report["crossover"];
    let gap = x["gap"].as_f64().unwrap_or(f64::NAN);
    let opposite = x["sign_left"].as_f64().unwrap_or(0.0) * x["sign_right"].as_f64().unwrap_or(0.0) < 0.0;
    let pass = outcome.status == Status::Pass && gap < 1e-3 && opposite && elapsed < Duration::from_secs(600);
    verdict(
        pass,
        format!("t*={} gap={gap:.1e} opposite ordering={opposite} {:.1}s", x["t_star"], elapsed.as_secs_f64()),
    )
}

/// Anchors that end exactly one arc of `k`.
fn free_ends(k: &PolyContinuum, e: &AnchorSet) -> Vec<C> {
    e.points()
        .iter()
        .copied()
        .filter(|&a| {
            let ends = k.arcs().iter().flat_map(|arc| [arc.start(), arc.end()]).filter(|&z| (z - a).norm() < 1e-7).count();
            ends == 1
        })
        .collect()
}

fn crit9() -> Verdict {
    let cases: Vec<(&str, AnchorSet, ConnectivityMatrix)> = vec![
        ("i", anchors(&[c(0.0, 1.0)]), ConnectivityMatrix::empty(1)),
        ("±1+i", anchors(&[c(-1.0, 1.0), c(1.0, 1.0)]), ConnectivityMatrix::empty(2)),
        ("±0.3+i arch", anchors(&[c(-0.3, 1.0), c(0.3, 1.0)]), pair_matrix()),
        ("3-anchor Y", anchors(&[c(-0.7, 0.8), c(0.2, 1.3), c(1.1, 0.6)]), ConnectivityMatrix::empty(3)),
        (
            "pair + grounded",
            anchors(&[c(-0.3, 1.0), c(0.3, 1.0), c(2.0, 0.5)]),
            rows(&[[0, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]]),
        ),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, e, m) in cases {
        let t = solve(&e, &m);
        let mf = solve_equilibrium(&t.spectrum, &ExternalField::default()).unwrap();
        let stag = mf.stagnation_points().unwrap().points.len();
        let floating = t.spectrum.floating_count();
        let exps: Vec<f64> =
            free_ends(&t.spectrum, &e).iter().map(|&a| mf.endpoint_exponent(a, 1e-6, 1e-3).unwrap_or(f64::NAN)).collect();
        let exp_ok = !exps.is_empty() && exps.iter().all(|x| (x + 0.5).abs() < 0.05);
        let ok = t.graph.is_forest() && t.graph.valence_ok() && exp_ok && stag == floating;
        pass &= ok;
        let worst = exps.iter().fold(0.0f64, |a, x| a.max((x + 0.5).abs()));
        detail += &format!("{name}: stag {stag}/floating {floating} exp dev {worst:.1e}; ");
    }
    verdict(pass, detail)
}

fn crit10() -> Verdict {
    let field = ExternalField::default();
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let contours = [
        ("segment", seg(c(0.0, 0.0), c(0.0, 1.0))),
        ("arch", PolyContinuum::new(vec![Arc::from_fn(65, |s| c(-0.3 + 0.6 * s, 1.0 + 0.2 * (std::f64::consts::PI * s).sin())).unwrap()]).unwrap()),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, k) in contours {
        let r = continuity_probe(&k, &field, &eps).unwrap();
        pass &= r.monotone;
        let d: Vec<String> = r.bumps.iter().map(|(_, d)| format!("{d:.2e}")).collect();
        detail += &format!("{name}: [{}]; ", d.join(", "));
    }
    let floating = seg(c(-0.5, 1.0), c(0.5, 1.0));
    let raised = raise_probe(&floating, 0, &field, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    let increasing = raised.windows(2).all(|w| w[1].1 > w[0].1);
    pass &= increasing;
    let v: Vec<String> = raised.iter().map(|(_, i)| format!("{i:.4}")).collect();
    detail += &format!("raise: [{}]", v.join(", "));
    verdict(pass, detail)
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("closed form N=1", crit1),
        ("translation/scaling covariance", crit2),
        ("Boutroux residual", crit3),
        ("three-way intensity agreement", crit4),
        ("S-property and Schiffer", crit5),
        ("energy ordering on the tilt family", crit6),
        ("descent vs trace", crit7),
        ("connectivity crossover", crit8),
        ("structural invariants", crit9),
        ("continuity and raising", crit10),
    ];
    let only: Option<usize> = std::env::var("ZSCOND_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t0 = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        // straight to the handle so the line survives libtest's capture
        let _ = writeln!(
            std::io::stderr().lock(),
            "criterion {:2} {tag} {name} ({:.1}s): {}",
            k + 1,
            t0.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
