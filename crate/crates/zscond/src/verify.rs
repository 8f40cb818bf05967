//! Optimality checks on a solved equilibrium: S-property, dominant sides,
//! orthogonal trajectories and Jenkins interception, energy probes over
//! deformation families, descent inside a connectivity class, the Schiffer
//! identity, and continuity of the intensity.
//!
//! Sign conventions. Arcs carry their sample orientation τ; the plus side is
//! on the left, n₊ = iτ. V = Im 𝒫 = Im Φ − G vanishes on K and increases
//! away from it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{solve_equilibrium_with, EquilibriumMeasure, EquilibriumOptions, ExternalField};
use crate::error::{Error, Result};
use crate::boutroux::set_partitions;
use crate::geom::{connectivity_of, hausdorff_distance, AnchorSet, Arc, ConnectivityMatrix, PolyContinuum};
use crate::panels::PanelOptions;
use crate::pipeline::dominating_classes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    /// Unit normal pointing into this side of an arc with unit tangent τ.
    pub fn normal(self, tau: C) -> C {
        match self {
            Side::Plus => C::i() * tau,
            Side::Minus => -C::i() * tau,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormalOptions {
    /// finite-difference offset, relative to the diameter of K
    pub rel_h: f64,
    /// samples closer than this fraction of their piece's length to a piece end are skipped
    pub end_zone: f64,
    /// ... and never closer than this many offsets
    pub min_end: f64,
    /// mismatches below max(floor, 10·bc_residual/h) count as zero
    pub noise_floor: f64,
}

impl Default for NormalOptions {
    fn default() -> Self {
        Self { rel_h: 1e-4, end_zone: 0.05, min_end: 200.0, noise_floor: 1e-8 }
    }
}

fn v_at(m: &EquilibriumMeasure, z: C) -> f64 {
    m.field.eval(z).0.im - m.green(z)
}

/// ∂V/∂n by one-sided differences at offsets h and 2h, Richardson-combined.
fn normal_derivative(m: &EquilibriumMeasure, z0: C, v0: f64, n: C, h: f64) -> f64 {
    let d1 = (v_at(m, z0 + n * h) - v0) / h;
    let d2 = (v_at(m, z0 + n * (2.0 * h)) - v0) / (2.0 * h);
    2.0 * d1 - d2
}

/// dũ/dζ from the averaged boundary values of 𝒫′, ũ = −(U₊ + U₋)/2.
fn u_tilde_derivative(m: &EquilibriumMeasure, z0: C, tau: C, h: f64) -> Result<f64> {
    let q = m.quasimomentum();
    let n = C::i() * tau;
    let avg = |h: f64| -> Result<f64> { Ok(-0.5 * ((q.dp(z0 + n * h)? + q.dp(z0 - n * h)?) * tau).re) };
    Ok(2.0 * avg(h)? - avg(2.0 * h)?)
}

fn vertical_arc(arc: &Arc, scale: f64) -> bool {
    let x0 = arc.start().re;
    arc.samples().len() > 1 && arc.samples().iter().all(|z| (z.re - x0).abs() <= 1e-12 * scale)
}

/// Mismatch of a vertical arc from the measure alone:
/// −2 dũ/dζ = 2 Re(Φ′τ) + 2 sgn(Im τ) ∫ Re[1/(z − w̄) − 1/(z − w)] dρ(w).
/// On the arc's own vertical line Re 1/(z − w) vanishes identically, so the
/// principal value reduces to an ordinary integral.
fn vertical_mismatch(m: &EquilibriumMeasure, z: C, tau: C) -> f64 {
    let tol = 1e-12 * m.scale();
    let integral = m.integrate_toward(z, |w| {
        let a = (1.0 / (z - w.conj())).re;
        if (w.re - z.re).abs() <= tol {
            a
        } else {
            a - (1.0 / (z - w)).re
        }
    });
    2.0 * (m.field.eval(z).1 * tau).re + 2.0 * tau.im.signum() * integral
}

#[derive(Clone, Debug, Serialize)]
pub struct MismatchProfile {
    pub arc: usize,
    pub s: Vec<f64>,
    pub points: Vec<C>,
    pub normal_plus: Vec<f64>,
    pub normal_minus: Vec<f64>,
    pub mismatch: Vec<f64>,
    pub u_tilde_derivative: Vec<f64>,
    /// density u at the sample, for the check ∂V/∂n₊ + ∂V/∂n₋ = 2πu
    pub density: Vec<f64>,
    /// the integral form of the mismatch, vertical arcs only
    pub integral_mismatch: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SPropertyReport {
    /// max |∂V/∂n₊ − ∂V/∂n₋| over the retained samples
    pub residual: f64,
    /// max |mismatch + 2 dũ/dζ|
    pub identity_defect: f64,
    /// max |∂V/∂n₊ + ∂V/∂n₋ − 2πu|
    pub sum_defect: f64,
    pub samples: usize,
    /// samples skipped as too close to an endpoint or to another arc
    pub excluded: usize,
    pub profiles: Vec<MismatchProfile>,
}

/// Normal-derivative profiles at the collocation nodes of every piece.
pub fn mismatch_profiles(m: &EquilibriumMeasure, opts: &NormalOptions) -> Result<SPropertyReport> {
    let d = &m.disc;
    let scale = m.scale();
    let h = opts.rel_h * scale;
    let k = &d.k;
    let keep: Vec<bool> = (0..d.len())
        .map(|j| {
            let piece = &d.pieces[d.panels[d.panel_of[j]].piece];
            let zone = (opts.end_zone * piece.length).max(opts.min_end * h);
            if d.end_distance(j) < zone {
                return false;
            }
            let n = C::i() * d.dz[j] / d.dz[j].norm();
            // the offset stencil must stay clear of the rest of K
            [n, -n].iter().all(|&nn| k.distance(d.z[j] + nn * (2.0 * h)) > 1.5 * h)
        })
        .collect();
    let idx: Vec<usize> = (0..d.len()).filter(|&j| keep[j]).collect();
    let rows: Vec<Result<(f64, f64, f64, f64)>> = idx
        .par_iter()
        .map(|&j| {
            let (z0, tau) = (d.z[j], d.dz[j] / d.dz[j].norm());
            let v0 = v_at(m, z0);
            let np = normal_derivative(m, z0, v0, Side::Plus.normal(tau), h);
            let nm = normal_derivative(m, z0, v0, Side::Minus.normal(tau), h);
            let vertical = vertical_arc(&k.arcs()[d.pieces[d.panels[d.panel_of[j]].piece].arc], scale);
            let im = if vertical { vertical_mismatch(m, z0, tau) } else { f64::NAN };
            Ok((np, nm, u_tilde_derivative(m, z0, tau, h)?, im))
        })
        .collect();
    let mut profiles: Vec<MismatchProfile> = Vec::new();
    let mut current: Option<usize> = None;
    let (mut residual, mut identity_defect, mut sum_defect) = (0.0f64, 0.0f64, 0.0f64);
    for (&j, row) in idx.iter().zip(rows) {
        let (np, nm, ut, im) = row?;
        let piece = d.panels[d.panel_of[j]].piece;
        if current != Some(piece) {
            current = Some(piece);
            profiles.push(MismatchProfile {
                arc: d.pieces[piece].arc,
                s: Vec::new(),
                points: Vec::new(),
                normal_plus: Vec::new(),
                normal_minus: Vec::new(),
                mismatch: Vec::new(),
                u_tilde_derivative: Vec::new(),
                density: Vec::new(),
                integral_mismatch: if im.is_nan() { None } else { Some(Vec::new()) },
            });
        }
        let p = profiles.last_mut().unwrap();
        let u = m.density(j);
        p.s.push(d.arclength(j));
        p.points.push(d.z[j]);
        p.normal_plus.push(np);
        p.normal_minus.push(nm);
        p.mismatch.push(np - nm);
        p.u_tilde_derivative.push(ut);
        p.density.push(u);
        if let Some(v) = p.integral_mismatch.as_mut() {
            v.push(im);
        }
        residual = residual.max((np - nm).abs());
        identity_defect = identity_defect.max((np - nm + 2.0 * ut).abs());
        sum_defect = sum_defect.max((np + nm - 2.0 * PI * u).abs());
    }
    Ok(SPropertyReport {
        residual,
        identity_defect,
        sum_defect,
        samples: idx.len(),
        excluded: d.len() - idx.len(),
        profiles,
    })
}

/// max |∂V/∂n₊ − ∂V/∂n₋| over interior samples of K.
pub fn s_property_residual(m: &EquilibriumMeasure) -> Result<f64> {
    Ok(mismatch_profiles(m, &NormalOptions::default())?.residual)
}

#[derive(Clone, Debug, Serialize)]
pub struct SideReport {
    pub point: C,
    pub tangent: C,
    pub side: Side,
    /// |∂V/∂n₊ − ∂V/∂n₋|
    pub strength: f64,
    /// below the noise floor: either side may serve as dominant
    pub ambiguous: bool,
    pub fd_mismatch: f64,
    pub integral_mismatch: Option<f64>,
}

fn noise_floor(m: &EquilibriumMeasure, opts: &NormalOptions) -> f64 {
    opts.noise_floor.max(10.0 * m.bc_residual / (opts.rel_h * m.scale()))
}

fn side_at(m: &EquilibriumMeasure, z: C, tau: C, opts: &NormalOptions) -> SideReport {
    let h = opts.rel_h * m.scale();
    let v0 = v_at(m, z);
    let np = normal_derivative(m, z, v0, Side::Plus.normal(tau), h);
    let nm = normal_derivative(m, z, v0, Side::Minus.normal(tau), h);
    let mismatch = np - nm;
    let floor = noise_floor(m, opts);
    SideReport {
        point: z,
        tangent: tau,
        side: if mismatch >= 0.0 { Side::Plus } else { Side::Minus },
        strength: mismatch.abs(),
        ambiguous: mismatch.abs() < floor,
        fd_mismatch: mismatch,
        integral_mismatch: None,
    }
}

/// Dominant side at parameter t of arc `arc` of the measure's support.
pub fn dominant_side(m: &EquilibriumMeasure, arc: usize, t: f64) -> Result<SideReport> {
    let k = &m.disc.k;
    let a = k.arcs().get(arc).ok_or_else(|| Error::InvalidArc(format!("no arc {arc}")))?;
    if a.is_point() || !(0.0 < t && t < 1.0) {
        return Err(Error::InvalidArc("dominant side needs an interior point of an arc".into()));
    }
    let (z, dz) = a.eval(t);
    let tau = dz / dz.norm();
    let mut r = side_at(m, z, tau, &NormalOptions::default());
    if vertical_arc(a, m.scale()) {
        r.integral_mismatch = Some(vertical_mismatch(m, z, tau));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TrajectoryEnd {
    Hit(C),
    Escaped,
    Stalled(C),
    StepLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthoTrajectory {
    pub side: Option<Side>,
    pub points: Vec<C>,
    pub end: TrajectoryEnd,
}

#[derive(Clone, Debug)]
pub struct OrthoOptions {
    /// all lengths relative to the diameter of the support
    pub start_offset: f64,
    pub hit_tol: f64,
    pub escape: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OrthoOptions {
    fn default() -> Self {
        Self { start_offset: 1e-3, hit_tol: 2e-3, escape: 20.0, max_step: 0.05, max_steps: 4000 }
    }
}

/// Steepest ascent of V from `start`, optionally pushed off the support
/// along `normal` first, until it meets `target`, stalls at a zero of 𝒫′,
/// or leaves the escape disc.
pub fn orthogonal_trajectory(
    m: &EquilibriumMeasure,
    start: C,
    normal: Option<C>,
    target: Option<&PolyContinuum>,
    opts: &OrthoOptions,
) -> Result<OrthoTrajectory> {
    let q = m.quasimomentum();
    let scale = m.scale();
    let k = &m.disc.k;
    let centre = k.arcs().iter().flat_map(|a| a.samples().iter()).sum::<C>()
        / k.arcs().iter().map(|a| a.samples().len()).sum::<usize>() as f64;
    let hit = opts.hit_tol * scale;
    let mut z = start + normal.unwrap_or_default() * (opts.start_offset * scale);
    let mut points = vec![z];
    // gradient of Im f is i·conj(f′)
    let dir = |z: C| -> Result<Option<C>> {
        let d = q.dp(z)?;
        let n = d.norm();
        Ok(if n < 1e-10 { None } else { Some(C::i() * d.conj() / n) })
    };
    for _ in 0..opts.max_steps {
        let dk = target.map_or(f64::INFINITY, |t| t.distance(z));
        if dk < hit {
            return Ok(OrthoTrajectory { side: None, points, end: TrajectoryEnd::Hit(z) });
        }
        if (z - centre).norm() > opts.escape * scale {
            return Ok(OrthoTrajectory { side: None, points, end: TrajectoryEnd::Escaped });
        }
        let df = k.distance(z);
        let h = (opts.max_step * scale).min(0.3 * df).min(0.5 * dk).max(0.1 * hit);
        let stage = |zz: C| -> Result<Option<C>> {
            if k.distance(zz) < 1e-9 * scale {
                return Ok(None);
            }
            dir(zz)
        };
        let stalled = OrthoTrajectory { side: None, points: points.clone(), end: TrajectoryEnd::Stalled(z) };
        let Some(k1) = dir(z)? else { return Ok(stalled) };
        let Some(k2) = stage(z + k1 * (0.5 * h))? else { return Ok(stalled) };
        let Some(k3) = stage(z + k2 * (0.5 * h))? else { return Ok(stalled) };
        let Some(k4) = stage(z + k3 * h)? else { return Ok(stalled) };
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        points.push(z);
    }
    Ok(OrthoTrajectory { side: None, points, end: TrajectoryEnd::StepLimit })
}

#[derive(Clone, Debug)]
pub struct JenkinsOptions {
    pub samples: usize,
    /// reference counts as having the S-property below this residual
    pub s_threshold: f64,
    pub ortho: OrthoOptions,
    pub normal: NormalOptions,
}

impl Default for JenkinsOptions {
    fn default() -> Self {
        Self { samples: 24, s_threshold: 1e-5, ortho: OrthoOptions::default(), normal: NormalOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InterceptionSample {
    pub point: C,
    pub arc: usize,
    pub dominant: Side,
    pub ambiguous: bool,
    /// the side whose trajectory is recorded
    pub side: Side,
    pub trajectory: Vec<C>,
    pub end: TrajectoryEnd,
    pub hit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterceptionReport {
    pub s_property: bool,
    pub s_residual: f64,
    pub samples: Vec<InterceptionSample>,
    pub overall: bool,
}

/// Sample points in the interior of the reference's pieces, spread by length.
fn reference_samples(f: &EquilibriumMeasure, n: usize) -> Vec<(usize, C, C)> {
    let d = &f.disc;
    let total: f64 = d.pieces.iter().map(|p| p.length).sum();
    let mut out = Vec::new();
    for p in &d.pieces {
        let cnt = ((n as f64 * p.length / total).round() as usize).max(1);
        let arc = &d.k.arcs()[p.arc];
        for j in 0..cnt {
            let tau = 0.05 + 0.9 * (j as f64 + 0.5) / cnt as f64;
            let (z, dz) = arc.eval(p.t0 + (p.t1 - p.t0) * tau);
            out.push((p.arc, z, dz / dz.norm()));
        }
    }
    out
}

/// Does every dominant orthogonal trajectory from the reference meet K?
/// With the S-property either side may do.
pub fn jenkins_check(f: &EquilibriumMeasure, k: &PolyContinuum, opts: &JenkinsOptions) -> Result<InterceptionReport> {
    let s_residual = mismatch_profiles(f, &opts.normal)?.residual;
    let s_property = s_residual < opts.s_threshold;
    let pts = reference_samples(f, opts.samples);
    let samples: Vec<Result<InterceptionSample>> = pts
        .par_iter()
        .map(|&(arc, z, tau)| {
            let sr = side_at(f, z, tau, &opts.normal);
            let either = s_property || sr.ambiguous;
            let sides = if either { vec![sr.side, sr.side.other()] } else { vec![sr.side] };
            let mut last = None;
            for side in sides {
                let t = orthogonal_trajectory(f, z, Some(side.normal(tau)), Some(k), &opts.ortho)?;
                let hit = matches!(t.end, TrajectoryEnd::Hit(_));
                let s = InterceptionSample {
                    point: z,
                    arc,
                    dominant: sr.side,
                    ambiguous: sr.ambiguous,
                    side,
                    trajectory: t.points,
                    end: t.end,
                    hit,
                };
                if hit {
                    return Ok(s);
                }
                last = Some(s);
            }
            Ok(last.unwrap())
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let overall = samples.iter().all(|s| s.hit);
    Ok(InterceptionReport { s_property, s_residual, samples, overall })
}

/// Segments from `top` down to ℝ, tilted by the given angles (degrees,
/// positive leans right).
pub fn tilt_family(top: C, angles_deg: &[f64]) -> Result<Vec<(f64, PolyContinuum)>> {
    angles_deg
        .iter()
        .map(|&a| {
            let foot = C::new(top.re + top.im * a.to_radians().tan(), 0.0);
            Ok((a, PolyContinuum::new(vec![Arc::segment(top, foot)?])?))
        })
        .collect()
}

/// Curves from `top` to its foot on ℝ bowed sideways by `b` times their length.
pub fn bulge_family(top: C, bulges: &[f64]) -> Result<Vec<(f64, PolyContinuum)>> {
    let foot = C::new(top.re, 0.0);
    bulges
        .iter()
        .map(|&b| {
            let arc = Arc::from_fn(129, |t| top + (foot - top) * C::new(t, b * (PI * t).sin()))?;
            Ok((b, PolyContinuum::new(vec![arc])?))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub tol_energy: f64,
    pub jenkins: Option<JenkinsOptions>,
    pub equilibrium: EquilibriumOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { tol_energy: 1e-6, jenkins: Some(JenkinsOptions::default()), equilibrium: EquilibriumOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeEntry {
    pub param: f64,
    pub in_class: bool,
    pub intensity: Option<f64>,
    pub margin: Option<f64>,
    pub hausdorff: f64,
    pub jenkins: Option<bool>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyProbeReport {
    pub reference_intensity: f64,
    pub entries: Vec<ProbeEntry>,
    pub argmin: Option<f64>,
    /// every in-class member has margin ≥ −tol, and near-zero margins only
    /// occur for members that coincide with the reference
    pub ordering_holds: bool,
}

/// Intensity margins 𝓘(K_θ) − 𝓘(𝔉) over a deformation family.
pub fn energy_inequality_probe(
    e: &AnchorSet,
    m: &ConnectivityMatrix,
    reference: &EquilibriumMeasure,
    family: &[(f64, PolyContinuum)],
    opts: &ProbeOptions,
) -> Result<EnergyProbeReport> {
    let i_ref = reference.intensity_phi(&reference.field)?;
    let f = &reference.disc.k;
    let resolution = 1e-3 * f.diameter();
    let entries: Vec<ProbeEntry> = family
        .par_iter()
        .map(|(param, k)| {
            let mut entry = ProbeEntry {
                param: *param,
                in_class: false,
                intensity: None,
                margin: None,
                hausdorff: hausdorff_distance(f, k),
                jenkins: None,
                status: "ok".into(),
            };
            match connectivity_of(k, e) {
                Ok(c) if c.dominates(m) => entry.in_class = true,
                Ok(_) => {
                    entry.status = Error::ClassEscape.to_string();
                    return entry;
                }
                Err(err) => {
                    entry.status = err.to_string();
                    return entry;
                }
            }
            match solve_equilibrium_with(k, &reference.field, &opts.equilibrium).and_then(|mk| mk.intensity_phi(&reference.field)) {
                Ok(i) => {
                    entry.intensity = Some(i);
                    entry.margin = Some(i - i_ref);
                }
                Err(err) => entry.status = err.to_string(),
            }
            if let Some(j) = &opts.jenkins {
                match jenkins_check(reference, k, j) {
                    Ok(r) => entry.jenkins = Some(r.overall),
                    Err(err) => entry.status = err.to_string(),
                }
            }
            entry
        })
        .collect();
    let argmin = entries
        .iter()
        .filter_map(|e| e.intensity.map(|i| (e.param, i)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p);
    let ordering_holds = entries.iter().filter(|e| e.in_class).all(|e| match e.margin {
        Some(mg) => mg >= -opts.tol_energy && (mg > opts.tol_energy || e.hausdorff < resolution.max(opts.tol_energy)),
        None => true,
    });
    Ok(EnergyProbeReport { reference_intensity: i_ref, entries, argmin, ordering_holds })
}

// ---------------------------------------------------------------------------
// Descent inside a connectivity class.

/// Strand endpoint: a fixed anchor, a free point in ℍ, or a free foot on ℝ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Node {
    Anchor(usize),
    Junction(usize),
    Foot(usize),
}

/// A contour shape: strands between nodes, each the chord plus a sine
/// series, z(t) = A + (B − A)t + L Σ a_k sin kπt, with L = i(B − A) in
/// general and L = |B − A| for strands ending on ℝ.
#[derive(Clone, Debug, Serialize)]
pub struct Template {
    pub strands: Vec<(Node, Node)>,
    pub junctions: usize,
    pub feet: usize,
    pub modes: usize,
}

impl Template {
    pub fn dim(&self) -> usize {
        self.feet + 2 * self.junctions + self.modes * self.strands.len()
    }

    /// Templates covering every layout that realizes a class dominating `m`.
    pub fn for_class(e: &AnchorSet, m: &ConnectivityMatrix, modes: usize) -> Result<Vec<Template>> {
        if m.n() != e.len() {
            return Err(Error::InvalidConnectivity(format!("matrix is for {} anchors, config has {}", m.n(), e.len())));
        }
        let mut out = Vec::new();
        for c in dominating_classes(m) {
            let (grounded, floating) = c.groups();
            for split in set_partitions(&grounded) {
                let mut t = Template { strands: Vec::new(), junctions: 0, feet: 0, modes };
                for block in &split {
                    let foot = Node::Foot(t.feet);
                    t.feet += 1;
                    if block.len() == 1 {
                        t.strands.push((Node::Anchor(block[0]), foot));
                    } else {
                        let j = Node::Junction(t.junctions);
                        t.junctions += 1;
                        t.strands.extend(block.iter().map(|&a| (Node::Anchor(a), j)));
                        t.strands.push((j, foot));
                    }
                }
                for g in &floating {
                    if g.len() == 2 {
                        t.strands.push((Node::Anchor(g[0]), Node::Anchor(g[1])));
                    } else {
                        let j = Node::Junction(t.junctions);
                        t.junctions += 1;
                        t.strands.extend(g.iter().map(|&a| (Node::Anchor(a), j)));
                    }
                }
                out.push(t);
            }
        }
        Ok(out)
    }

    fn unit(e: &AnchorSet) -> f64 {
        e.points().iter().map(|z| z.im).fold(e.diameter(), f64::max)
    }

    /// Straight-chord starting point: feet under their anchors, junctions
    /// below the centroid of what they join.
    pub fn seed(&self, e: &AnchorSet) -> Vec<f64> {
        let u = Self::unit(e);
        let pts = e.points();
        let mut p = vec![0.0; self.dim()];
        let members = |node: Node| -> Vec<C> {
            self.strands
                .iter()
                .filter_map(|&(a, b)| match (a, b) {
                    (Node::Anchor(i), x) | (x, Node::Anchor(i)) if x == node => Some(pts[i]),
                    _ => None,
                })
                .collect()
        };
        for j in 0..self.junctions {
            let ms = members(Node::Junction(j));
            let c = ms.iter().sum::<C>() / ms.len().max(1) as f64;
            let low = ms.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
            let grounded = self.strands.iter().any(|&(a, b)| a == Node::Junction(j) && matches!(b, Node::Foot(_)));
            p[self.feet + 2 * j] = c.re / u;
            p[self.feet + 2 * j + 1] = if grounded { 0.5 * low } else { 0.9 * c.im } / u;
        }
        for f in 0..self.feet {
            let x = self
                .strands
                .iter()
                .find_map(|&(a, b)| (b == Node::Foot(f)).then_some(a))
                .map(|a| match a {
                    Node::Anchor(i) => pts[i].re / u,
                    Node::Junction(j) => p[self.feet + 2 * j],
                    Node::Foot(_) => 0.0,
                })
                .unwrap_or(0.0);
            p[f] = x;
        }
        let base = self.feet + 2 * self.junctions;
        for (s, &(a, b)) in self.strands.iter().enumerate() {
            if let (Node::Anchor(i), Node::Anchor(j)) = (a, b) {
                // arches start sagging toward ℝ
                let dir = (pts[j] - pts[i]).re.signum();
                p[base + s * self.modes] = -0.2 * dir;
            }
        }
        p
    }

    pub fn contour(&self, e: &AnchorSet, p: &[f64], samples: usize) -> Result<PolyContinuum> {
        let u = Self::unit(e);
        let pos = |n: Node| match n {
            Node::Anchor(i) => e.points()[i],
            Node::Junction(j) => C::new(p[self.feet + 2 * j], p[self.feet + 2 * j + 1]) * u,
            Node::Foot(f) => C::new(p[f] * u, 0.0),
        };
        let base = self.feet + 2 * self.junctions;
        let arcs = self
            .strands
            .iter()
            .enumerate()
            .map(|(s, &(a, b))| {
                let (za, zb) = (pos(a), pos(b));
                let coef = &p[base + s * self.modes..base + (s + 1) * self.modes];
                // strands to a foot bend sideways only, so they descend monotonically
                let lateral = if matches!(b, Node::Foot(_)) { C::new((zb - za).norm(), 0.0) } else { C::i() * (zb - za) };
                Arc::from_fn(samples, |t| {
                    let bump: f64 = coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * t).sin()).sum();
                    za + (zb - za) * t + lateral * bump
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PolyContinuum::new(arcs)
    }
}

#[derive(Clone, Debug)]
pub struct DescentOptions {
    pub modes: usize,
    pub max_iter: usize,
    pub fd_step: f64,
    /// stop once the sup-norm of the gradient drops below this
    pub gtol: f64,
    pub samples: usize,
    /// size of the random perturbation applied to seeds
    pub perturbation: f64,
    pub rng_seed: u64,
    /// discretization used inside the loop; fixed panel counts keep the
    /// objective smooth in the parameters
    pub panels: PanelOptions,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            modes: 4,
            max_iter: 80,
            fd_step: 1e-6,
            gtol: 2e-5,
            samples: 97,
            perturbation: 0.05,
            rng_seed: 0,
            panels: PanelOptions { order: 8, base_per_diam: 0.0, min_base: 3, levels: 3 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentRun {
    pub template: Template,
    pub params: Vec<f64>,
    #[serde(skip)]
    pub contour: PolyContinuum,
    /// intensity of the final contour with the default discretization
    pub intensity: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub rejected: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

struct Objective<'a> {
    e: &'a AnchorSet,
    t: &'a Template,
    field: &'a ExternalField,
    class: ConnectivityMatrix,
    opts: &'a DescentOptions,
    evaluations: usize,
    rejected: usize,
}

impl Objective<'_> {
    fn eval(&mut self, p: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let r = (|| {
            let k = self.t.contour(self.e, p, self.opts.samples)?;
            if connectivity_of(&k, self.e)? != self.class {
                return Err(Error::ClassEscape);
            }
            let eo = EquilibriumOptions { panels: self.opts.panels.clone(), ..Default::default() };
            solve_equilibrium_with(&k, self.field, &eo)?.intensity_phi(self.field)
        })();
        if r.is_err() {
            self.rejected += 1;
        }
        r
    }

    fn gradient(&mut self, p: &[f64], f0: f64) -> Result<Vec<f64>> {
        let h = self.opts.fd_step;
        let mut g = vec![0.0; p.len()];
        let mut q = p.to_vec();
        for i in 0..p.len() {
            q[i] = p[i] + h;
            g[i] = match self.eval(&q) {
                Ok(f) => (f - f0) / h,
                Err(_) => {
                    q[i] = p[i] - h;
                    (f0 - self.eval(&q)?) / h
                }
            };
            q[i] = p[i];
        }
        Ok(g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// BFGS with forward-difference gradients and backtracking; trial points
/// outside the class are rejected like failed Armijo steps.
pub fn descend(
    e: &AnchorSet,
    template: &Template,
    seed: Vec<f64>,
    field: &ExternalField,
    opts: &DescentOptions,
) -> Result<DescentRun> {
    let class = connectivity_of(&template.contour(e, &seed, opts.samples)?, e)?;
    let mut obj = Objective { e, t: template, field, class, opts, evaluations: 0, rejected: 0 };
    let n = seed.len();
    let mut x = seed;
    let mut f = obj.eval(&x)?;
    let mut g = obj.gradient(&x, f)?;
    let identity = DMatrix::<f64>::identity(n, n);
    let mut hinv = identity.clone();
    let mut fresh = true;
    let mut history = vec![f];
    let mut iterations = 0;
    let mut converged = sup(&g) < opts.gtol;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (-(&hinv * &gv)).iter().copied().collect();
        if dot(&d, &g) >= 0.0 {
            hinv = identity.clone();
            fresh = true;
            d = g.iter().map(|v| -v).collect();
        }
        // keep trial steps modest in shape units
        let big = sup(&d);
        if big > 0.2 {
            d.iter_mut().for_each(|v| *v *= 0.2 / big);
        }
        let slope = dot(&d, &g);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-6 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            if let Ok(fnew) = obj.eval(&xn) {
                if fnew <= f + 1e-4 * alpha * slope {
                    accepted = Some((xn, fnew));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                // no descent along −g: at a class boundary or at the noise floor
                break;
            }
            hinv = identity.clone();
            fresh = true;
            continue;
        };
        let gn = obj.gradient(&xn, fnew)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let (sv, yv) = (DVector::from_vec(s), DVector::from_vec(y));
            if fresh {
                hinv *= sy / yv.dot(&yv);
            }
            let rho = 1.0 / sy;
            let a = &identity - &sv * yv.transpose() * rho;
            hinv = &a * &hinv * a.transpose() + &sv * sv.transpose() * rho;
            fresh = false;
        }
        x = xn;
        f = fnew;
        g = gn;
        history.push(f);
        converged = sup(&g) < opts.gtol;
    }
    let contour = template.contour(e, &x, opts.samples)?;
    let intensity = solve_equilibrium_with(&contour, field, &EquilibriumOptions::default())?.intensity_phi(field)?;
    Ok(DescentRun {
        template: template.clone(),
        gradient_norm: sup(&g),
        params: x,
        contour,
        intensity,
        iterations,
        evaluations: obj.evaluations,
        rejected: obj.rejected,
        converged,
        history,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassDescent {
    pub best: DescentRun,
    pub runs: Vec<DescentRun>,
    /// templates whose seed could not be evaluated
    pub failed: Vec<(Template, String)>,
}

/// Descend from a perturbed seed of every template realizing the class and
/// keep the converged run of least intensity.
pub fn minimize_in_class(
    e: &AnchorSet,
    m: &ConnectivityMatrix,
    field: &ExternalField,
    opts: &DescentOptions,
) -> Result<ClassDescent> {
    let templates = Template::for_class(e, m, opts.modes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let seeds: Vec<Vec<f64>> = templates
        .iter()
        .map(|t| {
            let mut p = t.seed(e);
            let base = t.feet + 2 * t.junctions;
            for (i, v) in p.iter_mut().enumerate() {
                let k = if i < base { 1.0 } else { ((i - base) % t.modes + 1) as f64 };
                *v += opts.perturbation * rng.random_range(-1.0..1.0) / k;
            }
            p
        })
        .collect();
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (t, p) in templates.iter().zip(seeds) {
        match descend(e, t, p, field, opts) {
            Ok(r) => runs.push(r),
            Err(err) => failed.push((t.clone(), err.to_string())),
        }
    }
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.intensity.total_cmp(&b.intensity))
        .cloned()
        .ok_or(Error::NoConvergence(opts.max_iter))?;
    Ok(ClassDescent { best, runs, failed })
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SchifferCertificate {
    /// fitted polynomial, coefficients of (x − centre)^k / radius^k
    pub coeffs: Vec<C>,
    pub centre: f64,
    pub radius: f64,
    pub degree: usize,
    pub test_points: usize,
    /// sup |F − fit| over the test points
    pub residual: f64,
}

/// Least-squares fit of F(x) = E(x)[(g̃′ + iΦ′)² + Φ′²], g̃′ = −i g′, by a
/// polynomial of degree 2N + r − 2 on two circles enclosing K ∪ K̄.
/// F reduces to E(Φ′² − 𝒫′²), a polynomial exactly when 𝒫′² is rational
/// with poles only at the anchors.
pub fn schiffer_certificate(m: &EquilibriumMeasure, e: &AnchorSet) -> Result<SchifferCertificate> {
    let q = m.quasimomentum();
    let pts: Vec<C> = m.disc.k.arcs().iter().flat_map(|a| a.samples().iter().copied()).chain(e.points().iter().copied()).collect();
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, z| (a.0.min(z.re), a.1.max(z.re)));
    let centre = 0.5 * (lo + hi);
    let radius = pts.iter().map(|z| (z - centre).norm()).fold(0.0, f64::max).max(1e-12);
    let degree = 2 * e.len() + m.field.degree() - 2;
    let count = (4 * e.len() + 2 * m.field.degree()).max(48);
    let xs: Vec<C> = [1.25, 1.6]
        .iter()
        .flat_map(|&r| (0..count).map(move |j| C::new(centre, 0.0) + C::from_polar(r * radius, 2.0 * PI * (j as f64 + 0.5) / count as f64)))
        .collect();
    let vals: Vec<C> = xs
        .par_iter()
        .map(|&x| {
            let ex: C = e.points().iter().map(|&a| (x - a) * (x - a.conj())).product();
            let phi1 = m.field.eval(x).1;
            let gt = -C::i() * q.g_prime(x)?;
            Ok(ex * ((gt + C::i() * phi1).powi(2) + phi1 * phi1))
        })
        .collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, k| ((xs[i] - centre) / radius).powi(k as i32));
    let b = DVector::from_vec(vals.clone());
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|s| Error::QuadratureFailure(format!("Schiffer fit: {s}")))?;
    let fit = &a * &coeffs;
    let residual = fit.iter().zip(&vals).map(|(f, v)| (f - v).norm()).fold(0.0, f64::max);
    Ok(SchifferCertificate { coeffs: coeffs.iter().copied().collect(), centre, radius, degree, test_points: xs.len(), residual })
}

// ---------------------------------------------------------------------------

/// K with arc `arc` displaced along its normal by ε sin²(πt)·length.
pub fn bump(k: &PolyContinuum, arc: usize, eps: f64) -> Result<PolyContinuum> {
    let a = k.arcs().get(arc).ok_or_else(|| Error::InvalidArc(format!("no arc {arc}")))?;
    let len = a.length();
    let mut arcs = k.arcs().to_vec();
    arcs[arc] = Arc::from_fn(257, |t| {
        let (z, dz) = a.eval(t);
        let n = C::i() * dz / dz.norm();
        z + n * (eps * len * (PI * t).sin().powi(2))
    })?;
    PolyContinuum::new(arcs)
}

/// K with one floating component translated up by h.
pub fn raise_component(k: &PolyContinuum, component: usize, h: f64) -> Result<PolyContinuum> {
    if k.is_grounded() && component == 0 {
        return Err(Error::InvalidArc("the grounded component cannot be raised".into()));
    }
    let members = k.components().get(component).ok_or_else(|| Error::InvalidArc(format!("no component {component}")))?;
    let arcs = k
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, a)| if members.contains(&i) { a.map(|z| z + C::new(0.0, h)) } else { Ok(a.clone()) })
        .collect::<Result<Vec<_>>>()?;
    PolyContinuum::new(arcs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub base_intensity: f64,
    /// (ε, |𝓘(K_ε) − 𝓘(K)|)
    pub bumps: Vec<(f64, f64)>,
    pub monotone: bool,
}

/// |𝓘(K_ε) − 𝓘(K)| for bump perturbations of arc 0.
pub fn continuity_probe(k: &PolyContinuum, field: &ExternalField, epsilons: &[f64]) -> Result<ContinuityReport> {
    let intensity = |k: &PolyContinuum| -> Result<f64> {
        solve_equilibrium_with(k, field, &EquilibriumOptions::default())?.intensity_phi(field)
    };
    let base = intensity(k)?;
    let bumps = epsilons
        .par_iter()
        .map(|&eps| Ok((eps, if eps == 0.0 { 0.0 } else { (intensity(&bump(k, 0, eps)?)? - base).abs() })))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = bumps.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[0].1 <= w[1].1);
    Ok(ContinuityReport { base_intensity: base, bumps, monotone })
}

/// 𝓘 after raising a floating component by each height.
pub fn raise_probe(k: &PolyContinuum, component: usize, field: &ExternalField, heights: &[f64]) -> Result<Vec<(f64, f64)>> {
    heights
        .par_iter()
        .map(|&h| {
            let kh = raise_component(k, component, h)?;
            Ok((h, solve_equilibrium_with(&kh, field, &EquilibriumOptions::default())?.intensity_phi(field)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn seg(a: C, b: C) -> PolyContinuum {
        PolyContinuum::new(vec![Arc::segment(a, b).unwrap()]).unwrap()
    }

    fn measure(k: &PolyContinuum) -> EquilibriumMeasure {
        solve_equilibrium(k, &ExternalField::default()).unwrap()
    }

    fn tilted(deg: f64) -> PolyContinuum {
        seg(c(0.0, 1.0), c(deg.to_radians().tan(), 0.0))
    }

    #[test]
    fn vertical_segment_has_the_s_property() {
        let r = mismatch_profiles(&measure(&seg(c(0.0, 1.0), c(0.0, 0.0))), &NormalOptions::default()).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert!(r.samples > 20);
    }

    #[test]
    fn tilted_segment_fails_s_and_schiffer() {
        let m = measure(&tilted(15.0));
        let r = mismatch_profiles(&m, &NormalOptions::default()).unwrap();
        assert!(r.residual > 1e-2, "{}", r.residual);
        // finite differences agree with −2 dũ/dζ off the endpoints
        assert!(r.identity_defect < 1e-3, "{}", r.identity_defect);
        let sc = schiffer_certificate(&m, &AnchorSet::new(vec![c(0.0, 1.0)]).unwrap()).unwrap();
        assert!(sc.residual > 1e-2, "{}", sc.residual);
    }

    #[test]
    fn schiffer_on_the_vertical_segment() {
        let e = AnchorSet::new(vec![c(0.0, 1.0)]).unwrap();
        let sc = schiffer_certificate(&measure(&seg(c(0.0, 1.0), c(0.0, 0.0))), &e).unwrap();
        assert!(sc.residual < 1e-10, "{}", sc.residual);
        // E(Φ′² − 𝒫′²) is the constant 1 here
        assert!((sc.coeffs[0] - 1.0).norm() < 1e-8, "{:?}", sc.coeffs);
    }

    #[test]
    fn schiffer_residual_is_translation_invariant() {
        let a = 2.5;
        let r = |x: f64, deg: f64| {
            let k = seg(c(x, 1.0), c(x + deg.to_radians().tan(), 0.0));
            let e = AnchorSet::new(vec![c(x, 1.0)]).unwrap();
            schiffer_certificate(&measure(&k), &e).unwrap().residual
        };
        let (r0, r1) = (r(0.0, 10.0), r(a, 10.0));
        assert!((r0 - r1).abs() < 1e-8 * r0.max(1.0), "{r0} vs {r1}");
    }

    #[test]
    fn left_of_two_segments_prefers_its_left_side() {
        let k = PolyContinuum::new(vec![
            Arc::segment(c(0.0, 0.0), c(0.0, 1.0)).unwrap(),
            Arc::segment(c(0.5, 0.0), c(0.5, 1.0)).unwrap(),
        ])
        .unwrap();
        let m = measure(&k);
        for t in [0.3, 0.5, 0.7] {
            let s = dominant_side(&m, 0, t).unwrap();
            // arc 0 runs upward, so its plus side is the left one
            assert_eq!(s.side, Side::Plus);
            let int = s.integral_mismatch.unwrap();
            assert!((s.fd_mismatch - int).abs() < 1e-3 * int.abs().max(1.0), "{} vs {int}", s.fd_mismatch);
        }
    }

    #[test]
    fn jenkins_examples() {
        let f = seg(c(0.0, 0.0), c(0.0, 1.0));
        let m = measure(&f);
        let o = JenkinsOptions { samples: 12, ..Default::default() };
        assert!(jenkins_check(&m, &f, &o).unwrap().overall);
        assert!(jenkins_check(&m, &tilted(15.0), &o).unwrap().overall);
        let circle = Arc::from_fn(65, |t| c(5.0, 0.5) + C::from_polar(0.05, 2.0 * PI * t)).unwrap();
        let r = jenkins_check(&m, &PolyContinuum::new(vec![circle]).unwrap(), &o).unwrap();
        assert!(!r.overall);
        assert!(r.samples.iter().all(|s| s.end == TrajectoryEnd::Escaped));
    }

    #[test]
    fn ascent_from_below_an_arch_meets_it() {
        let m = measure(&seg(c(0.0, 0.0), c(0.0, 1.0)));
        let arch = Arc::from_fn(65, |t| c(0.6 + 0.8 * t, 1.0 + 0.15 * (PI * t).sin())).unwrap();
        let arch = PolyContinuum::new(vec![arch]).unwrap();
        let t = orthogonal_trajectory(&m, c(1.0, 0.95), None, Some(&arch), &OrthoOptions::default()).unwrap();
        assert!(matches!(t.end, TrajectoryEnd::Hit(z) if (z.re - 1.0).abs() < 0.2), "{:?}", t.end);
        let v: Vec<f64> = t.points.iter().map(|&z| v_at(&m, z)).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tilt_margins_are_positive() {
        let e = AnchorSet::new(vec![c(0.0, 1.0)]).unwrap();
        let m = measure(&seg(c(0.0, 1.0), c(0.0, 0.0)));
        let fam = tilt_family(c(0.0, 1.0), &[-15.0, 0.0, 15.0]).unwrap();
        let opts = ProbeOptions {
            jenkins: Some(JenkinsOptions { samples: 8, ..Default::default() }),
            ..Default::default()
        };
        let r = energy_inequality_probe(&e, &ConnectivityMatrix::empty(1), &m, &fam, &opts).unwrap();
        assert_eq!(r.argmin, Some(0.0));
        assert!(r.ordering_holds);
        for en in &r.entries {
            assert_eq!(en.jenkins, Some(true));
            if en.param != 0.0 {
                assert!(en.margin.unwrap() >= 1e-3, "{:?}", en);
            }
        }
        // symmetric family, symmetric margins
        assert!((r.entries[0].margin.unwrap() - r.entries[2].margin.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn templates_cover_both_layouts() {
        let e = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let all = Template::for_class(&e, &ConnectivityMatrix::empty(2), 3).unwrap();
        // two strands to ℝ, one star through a junction, one arch
        assert_eq!(all.len(), 3);
        // with all grounded anchors mutually connected, the grounded layouts
        // also realize the floating-pair class
        let m12 = ConnectivityMatrix::from_rows(vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(Template::for_class(&e, &m12, 3).unwrap().len(), 3);
        for t in &all {
            let k = t.contour(&e, &t.seed(&e), 33).unwrap();
            assert!(is_class(&k, &e, t));
        }
    }

    fn is_class(k: &PolyContinuum, e: &AnchorSet, t: &Template) -> bool {
        let m = connectivity_of(k, e).unwrap();
        let grounded = t.feet > 0;
        m.get(1, 0) == grounded && m.get(2, 0) == grounded
    }

    #[test]
    fn descent_from_a_tilted_seed_recovers_the_segment() {
        let e = AnchorSet::new(vec![c(0.0, 1.0)]).unwrap();
        let t = &Template::for_class(&e, &ConnectivityMatrix::empty(1), 4).unwrap()[0];
        let mut p = t.seed(&e);
        p[0] = 20f64.to_radians().tan();
        let r = descend(&e, t, p, &ExternalField::default(), &DescentOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.intensity - 0.5).abs() < 1e-4, "{}", r.intensity);
        assert!(hausdorff_distance(&r.contour, &seg(c(0.0, 1.0), c(0.0, 0.0))) < 2e-2);
        // accepted steps never increase the objective
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn bumps_shrink_with_epsilon() {
        let k = seg(c(0.0, 0.0), c(0.0, 1.0));
        let r = continuity_probe(&k, &ExternalField::default(), &[0.1, 0.05, 0.025, 0.0125]).unwrap();
        assert!(r.monotone, "{:?}", r.bumps);
        // halving ε changes the gap by at most a factor 4 either way
        for w in r.bumps.windows(2) {
            let q = w[0].1 / w[1].1;
            assert!((1.0..=4.0 + 1e-9).contains(&q), "{:?}", r.bumps);
        }
    }

    #[test]
    fn raising_a_floating_segment_costs_more_and_more() {
        let k = seg(c(-0.5, 1.0), c(0.5, 1.0));
        let r = raise_probe(&k, 0, &ExternalField::default(), &[1.0, 2.0, 4.0, 8.0]).unwrap();
        let i: Vec<f64> = r.iter().map(|x| x.1).collect();
        assert!(i.windows(2).all(|w| w[1] > w[0]), "{i:?}");
        // increments per unit height grow
        let slope: Vec<f64> = r.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        assert!(slope.windows(2).all(|w| w[1] > w[0]), "{slope:?}");
        let grounded = seg(c(0.0, 0.0), c(0.0, 1.0));
        assert!(raise_component(&grounded, 0, 1.0).is_err());
    }
}
