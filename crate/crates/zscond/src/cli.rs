//! Batch front-end. Each subcommand reads a [`JobConfig`], applies flag
//! overrides, runs the pipeline and writes its artifacts under one job
//! directory (see [`crate::artifacts`] for the CSV schemas).
//!
//! Exit codes: 0 pass, 1 error or hard failure, 2 degenerate flag.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{continuum_table, num, opt_num, Figure, JobDir, Table};
use crate::boutroux::NewtonOptions;
use crate::config::{Check, JobConfig, Tolerances};
use crate::equilibrium::{solve_equilibrium, EnergyReport, EquilibriumMeasure};
use crate::error::{Error, Result};
use crate::geom::{class_membership, hausdorff_distance, AnchorSet, ConnectivityMatrix};
use crate::pipeline::{solve_in_class, solve_in_exact_class, ClassSolution, Traced};
use crate::tracer::TraceOptions;
use crate::verify::{
    energy_inequality_probe, jenkins_check, minimize_in_class, mismatch_profiles, schiffer_certificate, tilt_family,
    DescentOptions, InterceptionReport, JenkinsOptions, NormalOptions, ProbeOptions, SPropertyReport, Side,
    TrajectoryEnd,
};

#[derive(Parser)]
#[command(name = "zscond", version, about = "Minimal-energy spectral supports for anchored soliton condensates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boutroux solve, critical graph, spectrum and energy report
    Solve(Overrides),
    /// Equilibrium measure and intensities of explicit arcs
    Energy(Overrides),
    /// Optimality checks on the traced spectrum and an optional candidate
    Verify(Overrides),
    /// Intensity of two connectivity classes along an anchor sweep
    CompareClasses(Overrides),
}

#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    pub tol_boutroux: Option<f64>,
    #[arg(long, value_name = "F")]
    pub tol_bc: Option<f64>,
    #[arg(long, value_name = "F")]
    pub tol_traj: Option<f64>,
    #[arg(long, value_name = "F")]
    pub tol_energy: Option<f64>,
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, overrides_with = "no_svg")]
    pub svg: bool,
    #[arg(long, overrides_with = "svg")]
    pub no_svg: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut JobConfig) -> Result<()> {
        let t = &mut cfg.tolerances;
        for (dst, src) in [
            (&mut t.boutroux, self.tol_boutroux),
            (&mut t.bc, self.tol_bc),
            (&mut t.traj, self.tol_traj),
            (&mut t.energy, self.tol_energy),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.svg {
            cfg.svg = true;
        }
        if self.no_svg {
            cfg.svg = false;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Degenerate,
    Fail,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Degenerate => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// soft checks are reported but never fail the job
    pub hard: bool,
}

impl CheckResult {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value < threshold, hard: true }
    }

    fn soft(mut self) -> Self {
        self.hard = false;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub status: Status,
    pub checks: Vec<CheckResult>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub dir: PathBuf,
}

impl Outcome {
    fn new(command: &str, dir: &Path, checks: Vec<CheckResult>, flags: Vec<String>) -> Self {
        let status = if checks.iter().any(|c| c.hard && !c.pass) {
            Status::Fail
        } else if !flags.is_empty() {
            Status::Degenerate
        } else {
            Status::Pass
        };
        Self { command: command.into(), status, checks, flags, dir: dir.to_path_buf() }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, ov) = match &cli.command {
        Command::Solve(o) => ("solve", o),
        Command::Energy(o) => ("energy", o),
        Command::Verify(o) => ("verify", o),
        Command::CompareClasses(o) => ("compare-classes", o),
    };
    let res = JobConfig::load(&ov.config).and_then(|mut cfg| {
        ov.apply(&mut cfg)?;
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("zscond-{name}")));
        run_command(name, &cfg, &out)
    });
    match res {
        Ok(o) => {
            for c in o.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "{} {}: {:.3e} (threshold {:.3e})",
                    if c.hard { "FAIL" } else { "note" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            for f in &o.flags {
                eprintln!("flag: {f}");
            }
            println!("{name}: {:?} -> {}", o.status, o.dir.display());
            o.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run_command(name: &str, cfg: &JobConfig, out: &Path) -> Result<Outcome> {
    match name {
        "solve" => cmd_solve(cfg, out),
        "energy" => cmd_energy(cfg, out),
        "verify" => cmd_verify(cfg, out),
        "compare-classes" => cmd_compare_classes(cfg, out),
        _ => Err(Error::Config(format!("unknown command {name}"))),
    }
}

/// Run parameters embedded in every report and in the manifest.
#[derive(Serialize)]
struct Meta<'a> {
    tolerances: &'a Tolerances,
    seed: u64,
    samples: usize,
    grid_res: usize,
    config: JobConfig,
}

fn meta(cfg: &JobConfig) -> Meta<'_> {
    // the output path would make reports depend on where they were written
    let mut c = cfg.clone();
    c.out = None;
    Meta { tolerances: &cfg.tolerances, seed: cfg.seed, samples: cfg.samples, grid_res: cfg.grid_res, config: c }
}

fn newton_opts(t: &Tolerances) -> NewtonOptions {
    NewtonOptions { tol: t.boutroux, ..Default::default() }
}

fn trace_opts(t: &Tolerances) -> TraceOptions {
    TraceOptions { tol_traj: t.traj, ..Default::default() }
}

fn require_default_field(cfg: &JobConfig) -> Result<()> {
    if cfg.external_field()?.is_default() {
        Ok(())
    } else {
        Err(Error::Config("ZS spectra are traced for the default field Φ = z only; use `energy` for other fields".into()))
    }
}

fn solve_class(cfg: &JobConfig) -> Result<(AnchorSet, ConnectivityMatrix, ClassSolution)> {
    let e = cfg.anchor_set()?;
    let m = cfg.class()?;
    let cs = solve_in_class(&e, &m, &newton_opts(&cfg.tolerances), &trace_opts(&cfg.tolerances))?;
    Ok((e, m, cs))
}

fn measure_table(m: &EquilibriumMeasure) -> Table {
    let d = &m.disc;
    let mut t = Table::new(&["arc", "s", "re", "im", "u", "weight"]);
    for j in 0..m.len() {
        let arc = d.pieces[d.panels[d.panel_of[j]].piece].arc;
        let z = d.z[j];
        t.push(vec![arc.to_string(), num(d.arclength(j)), num(z.re), num(z.im), num(m.density(j)), num(d.arc_weight(j))]);
    }
    t
}

fn sprop_table(r: &SPropertyReport) -> Table {
    let mut t = Table::new(&["arc", "s", "re", "im", "dv_plus", "dv_minus", "mismatch", "du_tilde", "u"]);
    for p in &r.profiles {
        for i in 0..p.s.len() {
            t.push(vec![
                p.arc.to_string(),
                num(p.s[i]),
                num(p.points[i].re),
                num(p.points[i].im),
                num(p.normal_plus[i]),
                num(p.normal_minus[i]),
                num(p.mismatch[i]),
                num(p.u_tilde_derivative[i]),
                num(p.density[i]),
            ]);
        }
    }
    t
}

fn jenkins_table(label: &str, r: &InterceptionReport, t: &mut Table) {
    for (i, s) in r.samples.iter().enumerate() {
        let end = match s.end {
            TrajectoryEnd::Hit(_) => "hit",
            TrajectoryEnd::Escaped => "escaped",
            TrajectoryEnd::Stalled(_) => "stalled",
            TrajectoryEnd::StepLimit => "step_limit",
        };
        let side = match s.side {
            Side::Plus => "plus",
            Side::Minus => "minus",
        };
        t.push(vec![
            label.to_string(),
            i.to_string(),
            s.arc.to_string(),
            num(s.point.re),
            num(s.point.im),
            side.into(),
            end.into(),
            s.hit.to_string(),
        ]);
    }
}

fn draw_interception(fig: &mut Figure, r: &InterceptionReport) {
    for s in &r.samples {
        fig.line(&s.trajectory, "ortho");
        if let Some(&end) = s.trajectory.last() {
            fig.dot(end, if s.hit { "hit" } else { "miss" });
        }
    }
}

fn draw_traced(fig: &mut Figure, t: &Traced, e: &AnchorSet) {
    for edge in &t.graph.edges {
        fig.line(&edge.samples, "alt");
    }
    fig.continuum(&t.spectrum, "spectrum");
    for &a in e.points() {
        fig.dot(a, "anchor");
    }
}

#[derive(Serialize)]
struct QdOut<'a> {
    anchors: Vec<[f64; 2]>,
    /// P_2N = z^2N + c_1 z^(2N−1) + … ; listed c_1 first
    coeffs: &'a [f64],
    tol: f64,
    genus: usize,
    zeros: Vec<([f64; 2], usize)>,
    cancelled: &'a [usize],
}

#[derive(Serialize)]
struct EnergyOut<'a> {
    report: &'a EnergyReport,
    /// intensity from the residue of √Q at infinity, when a differential is known
    i_residue_qd: Option<f64>,
    negative_density: bool,
    meta: &'a Meta<'a>,
}

#[derive(Serialize)]
struct GraphSummary {
    vertices: usize,
    edges: usize,
    forest: bool,
    valence_ok: bool,
    min_gap: f64,
    max_drift: f64,
}

#[derive(Serialize)]
struct SolveOut<'a> {
    outcome: &'a Outcome,
    intensity: f64,
    connectivity: &'a [Vec<u8>],
    newton_iterations: usize,
    newton_history: &'a [f64],
    candidates: &'a [crate::pipeline::CandidateOutcome],
    graph: GraphSummary,
    stagnation: Vec<C>,
    meta: &'a Meta<'a>,
}

pub fn cmd_solve(cfg: &JobConfig, out: &Path) -> Result<Outcome> {
    require_default_field(cfg)?;
    let tol = &cfg.tolerances;
    let (e, _, cs) = solve_class(cfg)?;
    let t = &cs.best;
    let qd = &t.solution.qd;
    let measure = solve_equilibrium(&t.spectrum, &cfg.external_field()?)?;
    let energy = measure.intensity_report_refined(cfg.grid_res, 4 * cfg.grid_res)?;
    let periods = qd.periods(&qd.cycle_basis())?;
    let stag = measure.stagnation_points()?;

    let checks = vec![
        CheckResult::below("boutroux_residual", t.solution.residual, tol.boutroux),
        CheckResult::below("residue_vs_measure", (t.intensity - energy.i_measure).abs(), tol.energy),
        CheckResult::below("measure_vs_dirichlet", energy.residual_measure_dirichlet, tol.dirichlet),
        CheckResult::below("bc_residual", energy.bc_residual, tol.bc),
    ];
    let mut flags = Vec::new();
    if qd.is_degenerate() {
        flags.push("numerator zeros coalesce".to_string());
    }
    if !t.graph.valence_ok() {
        flags.push("critical graph valence mismatch".to_string());
    }
    if measure.negative_density {
        flags.push("equilibrium density changes sign".to_string());
    }
    let gap_floor = 1e-3 * e.diameter().max(e.points().iter().map(|z| z.im).fold(0.0, f64::max));
    if t.graph.min_gap < gap_floor {
        flags.push(format!("trajectories nearly coalesce (gap {:.3e}); topology is marginal", t.graph.min_gap));
    }
    let floating = t.spectrum.floating_count();
    if stag.points.len() != floating {
        flags.push(format!("{} stagnation points for {floating} floating components", stag.points.len()));
    }
    let outcome = Outcome::new("solve", out, checks, flags);

    let mut job = JobDir::create(out)?;
    let m = meta(cfg);
    job.json(
        "qd.json",
        &QdOut {
            anchors: e.points().iter().map(|z| [z.re, z.im]).collect(),
            coeffs: qd.coeffs(),
            tol: tol.boutroux,
            genus: qd.genus(),
            zeros: qd.zeros().iter().map(|(z, k)| ([z.re, z.im], *k)).collect(),
            cancelled: qd.cancelled(),
        },
    )?;
    let mut pt = Table::new(&["loop", "re", "im"]);
    for (i, v) in periods.values.iter().enumerate() {
        pt.push(vec![i.to_string(), num(v.re), num(v.im)]);
    }
    job.csv("periods.csv", &pt)?;
    let mut tt = Table::new(&["arc", "s", "re", "im", "p"]);
    for (i, edge) in t.graph.edges.iter().enumerate() {
        for ((z, s), p) in edge.samples.iter().zip(&edge.s).zip(&edge.p_values) {
            tt.push(vec![i.to_string(), num(*s), num(z.re), num(z.im), num(*p)]);
        }
    }
    job.csv("trajectory.csv", &tt)?;
    job.csv("spectrum.csv", &continuum_table(&t.spectrum))?;
    job.csv("measure.csv", &measure_table(&measure))?;
    job.json(
        "energy.json",
        &EnergyOut { report: &energy, i_residue_qd: Some(t.intensity), negative_density: measure.negative_density, meta: &m },
    )?;
    job.json(
        "report.json",
        &SolveOut {
            outcome: &outcome,
            intensity: t.intensity,
            connectivity: t.connectivity.rows(),
            newton_iterations: t.solution.iterations,
            newton_history: &t.solution.history,
            candidates: &cs.candidates,
            graph: GraphSummary {
                vertices: t.graph.vertices.len(),
                edges: t.graph.edges.len(),
                forest: t.graph.is_forest(),
                valence_ok: t.graph.valence_ok(),
                min_gap: t.graph.min_gap,
                max_drift: t.graph.edges.iter().map(|x| x.max_drift).fold(0.0, f64::max),
            },
            stagnation: stag.points.clone(),
            meta: &m,
        },
    )?;
    if cfg.svg {
        let mut fig = Figure::new("ZS spectrum");
        draw_traced(&mut fig, t, &e);
        for &z in &stag.points {
            fig.dot(z, "stagnation");
        }
        job.write("spectrum.svg", fig.render().as_bytes())?;
    }
    job.finish("solve", &m)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct PlainOut<'a, T: Serialize> {
    outcome: &'a Outcome,
    details: T,
    meta: &'a Meta<'a>,
}

pub fn cmd_energy(cfg: &JobConfig, out: &Path) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let k = cfg.continuum()?.ok_or_else(|| Error::Config("energy needs `arcs`".into()))?;
    let measure = solve_equilibrium(&k, &cfg.external_field()?)?;
    let energy = measure.intensity_report_refined(cfg.grid_res, 4 * cfg.grid_res)?;
    let checks = vec![
        CheckResult::below("residue_vs_measure", energy.residual_measure_residue, tol.energy),
        CheckResult::below("measure_vs_dirichlet", energy.residual_measure_dirichlet, tol.dirichlet),
        CheckResult::below("bc_residual", energy.bc_residual, tol.bc),
    ];
    let mut flags = Vec::new();
    if measure.negative_density {
        flags.push("equilibrium density changes sign".to_string());
    }
    let outcome = Outcome::new("energy", out, checks, flags);
    let m = meta(cfg);
    let mut job = JobDir::create(out)?;
    job.csv("measure.csv", &measure_table(&measure))?;
    job.json(
        "energy.json",
        &EnergyOut { report: &energy, i_residue_qd: None, negative_density: measure.negative_density, meta: &m },
    )?;
    job.json("report.json", &PlainOut { outcome: &outcome, details: energy.i_measure, meta: &m })?;
    if cfg.svg {
        let mut fig = Figure::new("contour");
        fig.continuum(&k, "candidate");
        if let Ok(e) = cfg.anchor_set() {
            for &a in e.points() {
                fig.dot(a, "anchor");
            }
        }
        job.write("contour.svg", fig.render().as_bytes())?;
    }
    job.finish("energy", &m)?;
    Ok(outcome)
}

#[derive(Serialize, Default)]
struct VerifyDetails {
    intensity: f64,
    s_reference: Option<SPropertySummary>,
    schiffer_reference: Option<crate::verify::SchifferCertificate>,
    jenkins_reference: Option<(usize, usize)>,
    candidate_intensity: Option<f64>,
    candidate_in_class: Option<bool>,
    candidate_hausdorff: Option<f64>,
    s_candidate: Option<SPropertySummary>,
    schiffer_candidate: Option<crate::verify::SchifferCertificate>,
    jenkins_candidate: Option<(usize, usize)>,
    descent: Option<DescentSummary>,
    tilt: Option<crate::verify::EnergyProbeReport>,
}

#[derive(Serialize)]
struct SPropertySummary {
    residual: f64,
    identity_defect: f64,
    sum_defect: f64,
    samples: usize,
    excluded: usize,
}

impl From<&SPropertyReport> for SPropertySummary {
    fn from(r: &SPropertyReport) -> Self {
        Self {
            residual: r.residual,
            identity_defect: r.identity_defect,
            sum_defect: r.sum_defect,
            samples: r.samples,
            excluded: r.excluded,
        }
    }
}

#[derive(Serialize)]
struct DescentSummary {
    intensity: f64,
    hausdorff: f64,
    iterations: usize,
    evaluations: usize,
    runs: usize,
    failed: usize,
    strands: usize,
}

fn hits(r: &InterceptionReport) -> (usize, usize) {
    (r.samples.iter().filter(|s| s.hit).count(), r.samples.len())
}

pub fn cmd_verify(cfg: &JobConfig, out: &Path) -> Result<Outcome> {
    require_default_field(cfg)?;
    let tol = &cfg.tolerances;
    let want = |c: Check| cfg.verify.checks.contains(&c);
    let field = cfg.external_field()?;
    let (e, class, cs) = solve_class(cfg)?;
    let t = &cs.best;
    let f = &t.spectrum;
    let mf = solve_equilibrium(f, &field)?;
    let jopts = JenkinsOptions { samples: cfg.samples, s_threshold: tol.s_property, ..Default::default() };
    let mut checks = Vec::new();
    let mut flags = Vec::new();
    let mut d = VerifyDetails { intensity: t.intensity, ..Default::default() };
    let mut job = JobDir::create(out)?;
    let mut fig = Figure::new("verification");
    draw_traced(&mut fig, t, &e);
    let mut jt = Table::new(&["target", "sample", "arc", "re", "im", "side", "end", "hit"]);

    if want(Check::Boutroux) {
        checks.push(CheckResult::below("boutroux_residual", t.solution.residual, tol.boutroux));
    }
    if want(Check::Intensity) {
        let r = mf.intensity_report_refined(cfg.grid_res, 4 * cfg.grid_res)?;
        checks.push(CheckResult::below("residue_vs_measure", (t.intensity - r.i_measure).abs(), tol.energy));
        checks.push(CheckResult::below("measure_vs_dirichlet", r.residual_measure_dirichlet, tol.dirichlet));
        checks.push(CheckResult::below("bc_residual", r.bc_residual, tol.bc));
    }
    if want(Check::SProperty) {
        let r = mismatch_profiles(&mf, &NormalOptions::default())?;
        checks.push(CheckResult::below("s_property", r.residual, tol.s_property));
        job.csv("sprop_reference.csv", &sprop_table(&r))?;
        d.s_reference = Some((&r).into());
    }
    if want(Check::Schiffer) {
        let c = schiffer_certificate(&mf, &e)?;
        checks.push(CheckResult::below("schiffer", c.residual, tol.schiffer));
        d.schiffer_reference = Some(c);
    }
    if want(Check::Jenkins) {
        let r = jenkins_check(&mf, f, &jopts)?;
        let (h, n) = hits(&r);
        checks.push(CheckResult::below("jenkins_self_misses", (n - h) as f64, 0.5));
        jenkins_table("reference", &r, &mut jt);
        d.jenkins_reference = Some((h, n));
    }
    if want(Check::Stagnation) {
        let s = mf.stagnation_points()?;
        let found = s.points.len();
        let floating = f.floating_count();
        checks.push(CheckResult::below("stagnation_count_mismatch", found.abs_diff(floating) as f64, 0.5));
        for &z in &s.points {
            fig.dot(z, "stagnation");
        }
    }
    if want(Check::Candidate) {
        if let Some(k) = cfg.continuum()? {
            let mk = solve_equilibrium(&k, &field)?;
            let ik = mk.intensity();
            let margin = ik - t.intensity;
            let hd = hausdorff_distance(f, &k);
            let in_class = class_membership(&k, &e, &class).unwrap_or(false);
            if !in_class {
                flags.push("candidate lies outside the requested class; ordering is not implied".to_string());
            }
            if mk.negative_density {
                flags.push("candidate density changes sign".to_string());
            }
            let r = mismatch_profiles(&mk, &NormalOptions::default())?;
            checks.push(CheckResult::below("candidate_s_property", r.residual, tol.s_property).soft());
            job.csv("sprop_candidate.csv", &sprop_table(&r))?;
            d.s_candidate = Some((&r).into());
            let sc = schiffer_certificate(&mk, &e)?;
            checks.push(CheckResult::below("candidate_schiffer", sc.residual, tol.schiffer).soft());
            d.schiffer_candidate = Some(sc);
            let jr = jenkins_check(&mf, &k, &jopts)?;
            let (h, n) = hits(&jr);
            checks.push(CheckResult::below("candidate_jenkins_misses", (n - h) as f64, 0.5).soft());
            jenkins_table("candidate", &jr, &mut jt);
            draw_interception(&mut fig, &jr);
            // intercepted candidates must not beat the reference
            let bound = if jr.overall { -tol.energy } else { f64::NEG_INFINITY };
            checks.push(CheckResult {
                name: "candidate_margin".into(),
                value: margin,
                threshold: bound,
                pass: margin >= bound,
                hard: in_class,
            });
            fig.continuum(&k, "candidate");
            d.candidate_intensity = Some(ik);
            d.candidate_in_class = Some(in_class);
            d.candidate_hausdorff = Some(hd);
            d.jenkins_candidate = Some((h, n));
        }
    }
    if !cfg.verify.tilt.is_empty() {
        if e.len() != 1 {
            return Err(Error::Config("verify.tilt needs exactly one anchor".into()));
        }
        let fam = tilt_family(e.points()[0], &cfg.verify.tilt)?;
        let popts = ProbeOptions {
            tol_energy: tol.energy,
            jenkins: Some(jopts.clone()),
            ..Default::default()
        };
        let rep = energy_inequality_probe(&e, &class, &mf, &fam, &popts)?;
        let mut mt = Table::new(&["param", "in_class", "intensity", "margin", "hausdorff", "jenkins", "status"]);
        for en in &rep.entries {
            mt.push(vec![
                num(en.param),
                en.in_class.to_string(),
                opt_num(en.intensity),
                opt_num(en.margin),
                num(en.hausdorff),
                en.jenkins.map_or("na".into(), |b| b.to_string()),
                en.status.clone(),
            ]);
        }
        job.csv("margins.csv", &mt)?;
        checks.push(CheckResult {
            name: "tilt_ordering".into(),
            value: rep.entries.iter().filter_map(|x| x.margin).fold(f64::INFINITY, f64::min),
            threshold: -tol.energy,
            pass: rep.ordering_holds,
            hard: true,
        });
        d.tilt = Some(rep);
    }
    if want(Check::Descent) {
        let dopts = DescentOptions { rng_seed: cfg.seed, ..Default::default() };
        let cd = minimize_in_class(&e, &class, &field, &dopts)?;
        let hd = hausdorff_distance(&cd.best.contour, f);
        checks.push(CheckResult::below("descent_intensity_gap", (cd.best.intensity - t.intensity).abs(), 1e-3));
        checks.push(CheckResult::below("descent_hausdorff", hd, 2e-2));
        fig.continuum(&cd.best.contour, "candidate");
        d.descent = Some(DescentSummary {
            intensity: cd.best.intensity,
            hausdorff: hd,
            iterations: cd.best.iterations,
            evaluations: cd.best.evaluations,
            runs: cd.runs.len(),
            failed: cd.failed.len(),
            strands: cd.best.template.strands.len(),
        });
    }

    if !jt.is_empty() {
        job.csv("jenkins.csv", &jt)?;
    }
    let outcome = Outcome::new("verify", out, checks, flags);
    let m = meta(cfg);
    job.json("report.json", &PlainOut { outcome: &outcome, details: &d, meta: &m })?;
    if cfg.svg {
        job.write("verify.svg", fig.render().as_bytes())?;
    }
    job.finish("verify", &m)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct Crossover {
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_star: f64,
    pub intensity_1: f64,
    pub intensity_2: f64,
    pub gap: f64,
    /// sign of I₁ − I₂ just left and right of the bracket
    pub sign_left: f64,
    pub sign_right: f64,
    pub bisection_steps: usize,
}

#[derive(Serialize)]
struct SweepPoint {
    t: f64,
    intensity_1: Option<f64>,
    intensity_2: Option<f64>,
    status_1: String,
    status_2: String,
}

#[derive(Serialize)]
struct CompareOut<'a> {
    outcome: &'a Outcome,
    identical_classes: bool,
    points: &'a [SweepPoint],
    crossover: Option<Crossover>,
    meta: &'a Meta<'a>,
}

fn class_intensity(cfg: &JobConfig, m: &ConnectivityMatrix, t: f64) -> Result<Traced> {
    let e = cfg.sweep_anchors(t)?;
    let (n, tr) = (newton_opts(&cfg.tolerances), trace_opts(&cfg.tolerances));
    let exact = cfg.sweep.as_ref().is_some_and(|s| s.exact);
    Ok(if exact { solve_in_exact_class(&e, m, &n, &tr) } else { solve_in_class(&e, m, &n, &tr) }?.best)
}

pub fn cmd_compare_classes(cfg: &JobConfig, out: &Path) -> Result<Outcome> {
    require_default_field(cfg)?;
    let sw = cfg.sweep.as_ref().ok_or_else(|| Error::Config("compare-classes needs a [sweep] table".into()))?;
    let classes = [
        ConnectivityMatrix::from_rows(sw.classes[0].clone())?,
        ConnectivityMatrix::from_rows(sw.classes[1].clone())?,
    ];
    let identical = classes[0] == classes[1];
    let ts: Vec<f64> =
        (0..sw.points).map(|i| sw.from + (sw.to - sw.from) * i as f64 / (sw.points - 1) as f64).collect();
    let jobs: Vec<(usize, usize)> = (0..ts.len()).flat_map(|i| [(i, 0), (i, 1)]).collect();
    let solved: Vec<Result<Traced>> = jobs.par_iter().map(|&(i, c)| class_intensity(cfg, &classes[c], ts[i])).collect();
    let status = |r: &Result<Traced>| match r {
        Ok(_) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    let points: Vec<SweepPoint> = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (a, b) = (&solved[2 * i], &solved[2 * i + 1]);
            SweepPoint {
                t,
                intensity_1: a.as_ref().ok().map(|x| x.intensity),
                intensity_2: b.as_ref().ok().map(|x| x.intensity),
                status_1: status(a),
                status_2: status(b),
            }
        })
        .collect();
    if points.iter().all(|p| p.intensity_1.is_none() && p.intensity_2.is_none()) {
        return Err(Error::NoConvergence(points.len()));
    }
    let diff = |p: &SweepPoint| p.intensity_1.zip(p.intensity_2).map(|(a, b)| a - b);

    let mut crossover = None;
    if !identical {
        let valid: Vec<(f64, f64)> = points.iter().filter_map(|p| diff(p).map(|d| (p.t, d))).collect();
        if let Some(w) = valid.windows(2).find(|w| w[0].1 * w[1].1 < 0.0) {
            let (mut a, mut da) = w[0];
            let (mut b, mut db) = w[1];
            let mut steps = 0;
            while b - a > sw.bracket && steps < 60 {
                let mid = 0.5 * (a + b);
                let dm = class_intensity(cfg, &classes[0], mid)?.intensity
                    - class_intensity(cfg, &classes[1], mid)?.intensity;
                steps += 1;
                if dm == 0.0 {
                    (a, b, da, db) = (mid, mid, dm, dm);
                    break;
                }
                if dm.signum() == da.signum() {
                    (a, da) = (mid, dm);
                } else {
                    (b, db) = (mid, dm);
                }
            }
            // linear interpolation of the difference inside the final bracket
            let t_star = if db != da { a - da * (b - a) / (db - da) } else { a };
            let (k1, k2) = (class_intensity(cfg, &classes[0], t_star)?, class_intensity(cfg, &classes[1], t_star)?);
            crossover = Some(Crossover {
                t_lo: a,
                t_hi: b,
                t_star,
                intensity_1: k1.intensity,
                intensity_2: k2.intensity,
                gap: (k1.intensity - k2.intensity).abs(),
                sign_left: w[0].1.signum(),
                sign_right: w[1].1.signum(),
                bisection_steps: steps,
            });
        }
    }

    // a class without a spectrum at some t is a result, not a degeneracy;
    // the per-point status strings say why
    let flags = Vec::new();
    let mut checks = Vec::new();
    if let Some(c) = &crossover {
        checks.push(CheckResult::below("crossover_gap", c.gap, 1e-3));
    }
    let outcome = Outcome::new("compare-classes", out, checks, flags);

    let m = meta(cfg);
    let mut job = JobDir::create(out)?;
    let mut ct = Table::new(&["t", "intensity_1", "intensity_2", "difference"]);
    for p in &points {
        ct.push(vec![num(p.t), opt_num(p.intensity_1), opt_num(p.intensity_2), opt_num(diff(p))]);
    }
    job.csv("curves.csv", &ct)?;
    if cfg.svg {
        // both minimizers at the crossover, else where the curves are closest
        let t_show = crossover.as_ref().map(|c| c.t_star).unwrap_or_else(|| {
            points
                .iter()
                .filter_map(|p| diff(p).map(|d| (p.t, d.abs())))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map_or(sw.from, |x| x.0)
        });
        let mut fig = Figure::new(&format!("class minimizers at t = {t_show:.6}"));
        for (c, class) in classes.iter().zip(["spectrum", "alt"]) {
            if let Ok(tr) = class_intensity(cfg, c, t_show) {
                fig.continuum(&tr.spectrum, class);
            }
        }
        for &a in cfg.sweep_anchors(t_show)?.points() {
            fig.dot(a, "anchor");
        }
        job.write("crossover.svg", fig.render().as_bytes())?;
    }
    job.json(
        "report.json",
        &CompareOut { outcome: &outcome, identical_classes: identical, points: &points, crossover, meta: &m },
    )?;
    job.finish("compare-classes", &m)?;
    Ok(outcome)
}

