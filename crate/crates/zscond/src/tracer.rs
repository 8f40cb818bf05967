//! Horizontal trajectories of Q dz², the critical graph, and the ZS spectrum.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::boutroux::{QEval, QuadraticDifferential};
use crate::error::{Error, Result};
use crate::geom::{Arc, PolyContinuum, GLUE_TOL};
use crate::panels::{Discretization, PanelOptions};
use crate::quad::{gauss_legendre, graded_rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CritKind {
    /// simple pole at anchor index
    Pole(usize),
    Zero,
    RealZero,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub z: C,
    /// −1 for a pole, multiplicity for a zero
    pub order: i32,
    pub kind: CritKind,
    pub level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    RealAxis,
    CriticalPoint(usize),
    Escaped,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<C>,
    pub s: Vec<f64>,
    pub p_values: Vec<f64>,
    pub origin: Option<usize>,
    pub termination: Termination,
    /// largest |Im ∫√Q dz| seen after projection
    pub max_drift: f64,
    /// direction index at the origin and at the terminal critical point
    pub dirs: (usize, Option<usize>),
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    pub tol_traj: f64,
    /// RK45 local error tolerance relative to the diameter
    pub rk_tol: f64,
    pub merge_factor: f64,
    pub escape_factor: f64,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { tol_traj: 1e-9, rk_tol: 1e-12, merge_factor: 1e-5, escape_factor: 50.0, max_steps: 200_000 }
    }
}

struct Ctx {
    ev: QEval,
    crit: Vec<CriticalPoint>,
    scale: f64,
    center: C,
}

impl Ctx {
    fn new(qd: &QuadraticDifferential) -> Result<Self> {
        let ev = qd.evaluator();
        let scale = qd.scale();
        let mut crit = Vec::new();
        for (j, e) in qd.anchors().points().iter().enumerate() {
            if !qd.cancelled().contains(&j) {
                crit.push(CriticalPoint { z: *e, order: -1, kind: CritKind::Pole(j), level: 0.0 });
            }
        }
        for &(z, m) in &ev.zeros {
            if z.im < -1e-12 * scale {
                continue;
            }
            if z.im.abs() <= 1e-12 * scale {
                crit.push(CriticalPoint { z: C::new(z.re, 0.0), order: m as i32, kind: CritKind::RealZero, level: 0.0 });
            } else {
                let level = if m % 2 == 0 { qd.level(z)? } else { 0.0 };
                crit.push(CriticalPoint { z, order: m as i32, kind: CritKind::Zero, level });
            }
        }
        let center = qd.anchors().points().iter().map(|e| C::new(e.re, 0.0)).sum::<C>()
            / qd.anchors().len() as f64;
        Ok(Self { ev, crit, scale, center })
    }

    fn find(&self, p: C) -> Option<usize> {
        self.crit.iter().position(|c| (c.z - p).norm() < 1e-9 * self.scale)
    }

    /// Leading coefficient A with Q ≈ A (z − c)^order.
    fn leading(&self, c: &CriticalPoint) -> C {
        let mut a = C::new(1.0, 0.0);
        for &(r, m) in &self.ev.zeros {
            if (r - c.z).norm() < 1e-12 * self.scale && c.order >= 0 {
                continue;
            }
            for _ in 0..m {
                a *= c.z - r;
            }
        }
        for &p in &self.ev.poles {
            if (p - c.z).norm() < 1e-12 * self.scale && c.order < 0 {
                continue;
            }
            a /= c.z - p;
        }
        a
    }

    fn directions(&self, c: &CriticalPoint) -> Vec<f64> {
        let a = self.leading(c);
        let k = (c.order + 2) as usize;
        let two_pi = 2.0 * std::f64::consts::PI;
        (0..k)
            .map(|j| ((-a.arg() + two_pi * j as f64) / k as f64).rem_euclid(two_pi))
            .collect()
    }

    /// Directions a trajectory may leave along: all of them in ℍ, only the
    /// upward ones at real zeros.
    fn usable_directions(&self, c: &CriticalPoint) -> Vec<(usize, f64)> {
        self.directions(c)
            .into_iter()
            .enumerate()
            .filter(|(_, phi)| c.kind != CritKind::RealZero || phi.sin() > 1e-6)
            .collect()
    }

    fn sqrt_near(&self, z: C, prev: C) -> C {
        let v = self.ev.q(z).sqrt();
        if (v - prev).norm() <= (v + prev).norm() { v } else { -v }
    }

    fn nearest_crit(&self, z: C) -> (usize, f64) {
        self.crit
            .iter()
            .enumerate()
            .map(|(k, c)| (k, (c.z - z).norm()))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// Conjugate critical points and every zero also limit step sizes.
    fn obstacle_distance(&self, z: C) -> f64 {
        let mut d = f64::INFINITY;
        for &(r, _) in &self.ev.zeros {
            d = d.min((z - r).norm());
        }
        for &p in &self.ev.poles {
            d = d.min((z - p).norm());
        }
        d
    }

    /// ∫√Q dz along the chord [a,b] with endpoint branch values va, vb.
    fn chord_integral(&self, a: C, b: C, va: C, vb: C) -> C {
        let g = gauss_legendre(8);
        let (c, r) = ((a + b) * 0.5, (b - a) * 0.5);
        let mut acc = C::new(0.0, 0.0);
        for k in 0..g.x.len() {
            let t = 0.5 * (g.x[k] + 1.0);
            let guess = va * (1.0 - t) + vb * t;
            acc += self.sqrt_near(c + r * g.x[k], guess) * g.w[k];
        }
        acc * r
    }

    fn trace(&self, origin: Option<usize>, start: C, phi: f64, opts: &TraceOptions) -> Result<Trajectory> {
        let dir = C::from_polar(1.0, phi);
        let delta_merge = opts.merge_factor * self.scale;
        let (z0, p0, s0) = match origin {
            Some(k) => {
                let c = &self.crit[k];
                let m = c.order as f64;
                let delta = if c.order < 0 { 1e-8 * self.scale } else { 1e-6 * self.scale };
                let a = self.leading(c);
                let z0 = c.z + dir * delta;
                // leading term of ∫ √A (z−c)^{m/2} dz
                let p0 = (a.sqrt() * (dir * delta).powf(m / 2.0 + 1.0) / (m / 2.0 + 1.0)).norm();
                (z0, p0, delta)
            }
            None => (start, 0.0, 0.0),
        };
        let mut sq = self.ev.q(z0).sqrt();
        if (sq * dir).re < 0.0 {
            sq = -sq;
        }
        let mut samples = vec![z0];
        let mut svals = vec![s0];
        let mut pvals = vec![p0];
        if let Some(k) = origin {
            samples.insert(0, self.crit[k].z);
            svals.insert(0, 0.0);
            pvals.insert(0, 0.0);
        }
        let mut z = z0;
        let mut s = s0;
        let mut p = C::new(p0, 0.0);
        let mut max_drift: f64 = 0.0;
        let tol = opts.rk_tol * self.scale;
        let mut h = (0.1 * (z0 - start).norm()).max(1e-3 * self.scale);
        let r_esc = opts.escape_factor * self.scale;
        let field = |w: C, prev: C| -> (C, C) {
            let v = self.sqrt_near(w, prev);
            (v.conj() / v.norm(), v)
        };
        let mut termination = None;
        for _ in 0..opts.max_steps {
            let d_obs = self.obstacle_distance(z);
            let h_max = (0.25 * d_obs).min(0.05 * self.scale).min(0.5 * z.im.max(1e-3 * self.scale));
            h = h.min(h_max);
            // Dormand–Prince 5(4)
            let k1 = field(z, sq).0;
            let k2 = field(z + k1 * (h / 5.0), sq).0;
            let k3 = field(z + (k1 * 3.0 + k2 * 9.0) * (h / 40.0), sq).0;
            let k4 = field(z + (k1 * 44.0 / 45.0 - k2 * 56.0 / 15.0 + k3 * 32.0 / 9.0) * h, sq).0;
            let k5 = field(
                z + (k1 * 19372.0 / 6561.0 - k2 * 25360.0 / 2187.0 + k3 * 64448.0 / 6561.0 - k4 * 212.0 / 729.0) * h,
                sq,
            )
            .0;
            let k6 = field(
                z + (k1 * 9017.0 / 3168.0 - k2 * 355.0 / 33.0 + k3 * 46732.0 / 5247.0 + k4 * 49.0 / 176.0
                    - k5 * 5103.0 / 18656.0)
                    * h,
                sq,
            )
            .0;
            let z5 = z + (k1 * 35.0 / 384.0 + k3 * 500.0 / 1113.0 + k4 * 125.0 / 192.0 - k5 * 2187.0 / 6784.0
                + k6 * 11.0 / 84.0)
                * h;
            let k7 = field(z5, sq).0;
            let z4 = z + (k1 * 5179.0 / 57600.0 + k3 * 7571.0 / 16695.0 + k4 * 393.0 / 640.0
                - k5 * 92097.0 / 339200.0
                + k6 * 187.0 / 2100.0
                + k7 / 40.0)
                * h;
            let err = (z5 - z4).norm();
            if err > tol && h > 1e-14 * self.scale {
                h *= (0.9 * (tol / err).powf(0.2)).clamp(0.2, 0.9);
                continue;
            }
            if h <= 1e-14 * self.scale && err > tol {
                return Err(Error::StepCollapse(z));
            }
            let mut zn = z5;
            let mut sqn = self.sqrt_near(zn, sq);
            let mut pn = p + self.chord_integral(z, zn, sq, sqn);
            // project back onto the level set Im p = 0
            for _ in 0..2 {
                if pn.im.abs() <= 0.1 * opts.tol_traj {
                    break;
                }
                let corr = C::new(0.0, -pn.im) / sqn;
                zn += corr;
                sqn = self.sqrt_near(zn, sq);
                pn = p + self.chord_integral(z, zn, sq, sqn);
            }
            max_drift = max_drift.max(pn.im.abs());
            s += (zn - z).norm();
            z = zn;
            sq = sqn;
            p = C::new(pn.re, 0.0);
            samples.push(z);
            svals.push(s);
            pvals.push(p.re);
            h = (h * (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(1.0, 4.0)).max(1e-14 * self.scale);

            let (kc, dc) = self.nearest_crit(z);
            if dc < delta_merge && Some(kc) != origin {
                let c = self.crit[kc].z;
                // remaining stretch: p grows by ∫|√Q| ds, graded toward c
                let mut rule = Vec::new();
                graded_rule(0.0, 1.0, 1.0, 1e-12, 16, &mut rule);
                let tail: f64 = rule.iter().map(|(t, w)| w * self.ev.q(z + (c - z) * *t).norm().sqrt()).sum::<f64>()
                    * (c - z).norm();
                s += (c - z).norm();
                samples.push(c);
                svals.push(s);
                pvals.push(p.re + tail);
                termination = Some(Termination::CriticalPoint(kc));
                break;
            }
            if z.im < GLUE_TOL {
                let last = samples.len() - 1;
                samples[last] = C::new(z.re, 0.0);
                termination = Some(Termination::RealAxis);
                break;
            }
            if (z - self.center).norm() > r_esc {
                termination = Some(Termination::Escaped);
                break;
            }
        }
        let termination = termination.ok_or(Error::StepCollapse(z))?;
        let end_dir = match termination {
            Termination::CriticalPoint(k) => {
                let c = &self.crit[k];
                let n = samples.len();
                let back = samples[n - 2] - c.z;
                let dirs = self.directions(c);
                dirs.iter()
                    .enumerate()
                    .map(|(j, phi)| (j, (C::from_polar(1.0, *phi) - back / back.norm()).norm()))
                    .fold(None, |acc: Option<(usize, f64)>, x| match acc {
                        Some(a) if a.1 <= x.1 => Some(a),
                        _ => Some(x),
                    })
                    .map(|x| x.0)
            }
            _ => None,
        };
        let start_dir = origin
            .map(|k| {
                let dirs = self.directions(&self.crit[k]);
                dirs.iter()
                    .position(|d| (C::from_polar(1.0, *d) - dir).norm() < 1e-9)
                    .unwrap_or(0)
            })
            .unwrap_or(0);
        Ok(Trajectory { samples, s: svals, p_values: pvals, origin, termination, max_drift, dirs: (start_dir, end_dir) })
    }
}

/// Directions at a critical point along which Q(z)ż² > 0.
pub fn critical_directions(qd: &QuadraticDifferential, p: C) -> Result<Vec<f64>> {
    let ctx = Ctx::new(qd)?;
    let k = ctx.find(p).ok_or(Error::NotCritical(p))?;
    Ok(ctx.directions(&ctx.crit[k]))
}

/// Trace from a critical point (along one of its directions) or a regular point.
pub fn trace_trajectory(qd: &QuadraticDifferential, start: C, dir: f64, opts: &TraceOptions) -> Result<Trajectory> {
    let ctx = Ctx::new(qd)?;
    let origin = ctx.find(start);
    if origin.is_none() {
        let q = ctx.ev.q(start);
        let v = q * C::from_polar(1.0, 2.0 * dir);
        if v.re <= 0.0 || v.im.abs() > 1e-6 * v.norm() {
            return Err(Error::NotCritical(start));
        }
        if start.im.abs() < GLUE_TOL {
            // the real axis is itself a horizontal trajectory
            return trace_along_real_axis(&ctx, start, dir);
        }
    }
    ctx.trace(origin, start, dir, opts)
}

fn trace_along_real_axis(ctx: &Ctx, start: C, dir: f64) -> Result<Trajectory> {
    let sgn = if dir.cos() >= 0.0 { 1.0 } else { -1.0 };
    let r = 50.0 * ctx.scale;
    let n = 2000;
    let mut samples = Vec::new();
    let mut s = Vec::new();
    for k in 0..=n {
        let t = r * k as f64 / n as f64;
        samples.push(C::new(start.re + sgn * t, 0.0));
        s.push(t);
    }
    let mut p = vec![0.0];
    for w in samples.windows(2) {
        let m = (w[0] + w[1]) * 0.5;
        p.push(p.last().unwrap() + ctx.ev.q(m).norm().sqrt() * (w[1] - w[0]).norm());
    }
    Ok(Trajectory {
        samples,
        s,
        p_values: p,
        origin: None,
        termination: Termination::Escaped,
        max_drift: 0.0,
        dirs: (0, None),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalGraph {
    pub vertices: Vec<CriticalPoint>,
    pub edges: Vec<Trajectory>,
    /// edge indices per vertex
    pub incidence: Vec<Vec<usize>>,
    /// double zeros off the zero level (not on the graph)
    pub stagnation: Vec<C>,
    /// smallest distance between two edges away from shared vertices
    pub min_gap: f64,
    pub escaped: usize,
}

impl CriticalGraph {
    /// Valence of each vertex matches its local direction count in ℍ.
    pub fn valence_ok(&self) -> bool {
        self.vertices.iter().enumerate().all(|(k, v)| {
            let expected = match v.kind {
                CritKind::Pole(_) => 1,
                CritKind::Zero => (v.order + 2) as usize,
                CritKind::RealZero => (v.order / 2) as usize,
            };
            self.incidence[k].len() == expected
        })
    }

    /// Edges = vertices − components, with ℝ collapsed to one vertex.
    pub fn is_forest(&self) -> bool {
        let n = self.vertices.len();
        let real = n; // virtual vertex for ℝ
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let node = |k: usize| if self.vertices[k].kind == CritKind::RealZero { real } else { k };
        let used_real = self.vertices.iter().any(|v| v.kind == CritKind::RealZero)
            || self.edges.iter().any(|e| e.termination == Termination::RealAxis);
        let mut edges = 0;
        for e in &self.edges {
            let a = match e.origin {
                Some(k) => node(k),
                None => continue,
            };
            let b = match e.termination {
                Termination::CriticalPoint(k) => node(k),
                Termination::RealAxis => real,
                Termination::Escaped => continue,
            };
            edges += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let verts: Vec<usize> = (0..n)
            .filter(|&k| self.vertices[k].kind != CritKind::RealZero)
            .chain(used_real.then_some(real))
            .collect();
        let mut roots: Vec<usize> = verts.iter().map(|&v| find(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        edges == verts.len() - roots.len()
    }
}

pub fn build_critical_graph(qd: &QuadraticDifferential, opts: &TraceOptions) -> Result<CriticalGraph> {
    let ctx = Ctx::new(qd)?;
    let level_tol = 1e-6 * ctx.scale;
    let on_graph: Vec<bool> = ctx.crit.iter().map(|c| c.level.abs() < level_tol).collect();
    let stagnation: Vec<C> = ctx.crit.iter().zip(&on_graph).filter(|(_, &g)| !g).map(|(c, _)| c.z).collect();
    let jobs: Vec<(usize, usize, f64)> = ctx
        .crit
        .iter()
        .enumerate()
        .filter(|(k, _)| on_graph[*k])
        .flat_map(|(k, c)| ctx.usable_directions(c).into_iter().map(move |(j, phi)| (k, j, phi)))
        .collect();
    let traced: Vec<Result<Trajectory>> =
        jobs.par_iter().map(|&(k, _, phi)| ctx.trace(Some(k), ctx.crit[k].z, phi, opts)).collect();

    // Sequential merge: each edge is found from both ends; keep the first.
    let n = ctx.crit.len();
    let mut consumed: Vec<Vec<bool>> = ctx.crit.iter().map(|c| vec![false; (c.order + 2) as usize]).collect();
    let mut edges: Vec<Trajectory> = Vec::new();
    let mut incidence = vec![Vec::new(); n];
    for (&(k, j, _), t) in jobs.iter().zip(traced) {
        if consumed[k][j] {
            continue;
        }
        let t = t?;
        consumed[k][j] = true;
        let id = edges.len();
        incidence[k].push(id);
        if let (Termination::CriticalPoint(w), Some(jw)) = (t.termination, t.dirs.1) {
            if w != k || jw != j {
                if consumed[w][jw] {
                    return Err(Error::GraphInconsistency(format!(
                        "two trajectories arrive at {:.6} along the same direction",
                        ctx.crit[w].z
                    )));
                }
                consumed[w][jw] = true;
                incidence[w].push(id);
            }
        }
        edges.push(t);
    }
    let escaped = edges.iter().filter(|e| e.termination == Termination::Escaped).count();
    // keep only vertices that are on the graph, remapping indices
    let keep: Vec<usize> = (0..n).filter(|&k| on_graph[k]).collect();
    let remap: Vec<Option<usize>> = (0..n).map(|k| keep.iter().position(|&x| x == k)).collect();
    for e in &mut edges {
        e.origin = e.origin.and_then(|o| remap[o]);
        if let Termination::CriticalPoint(w) = e.termination {
            e.termination = Termination::CriticalPoint(remap[w].unwrap());
        }
    }
    let vertices: Vec<CriticalPoint> = keep.iter().map(|&k| ctx.crit[k].clone()).collect();
    let incidence: Vec<Vec<usize>> = keep.iter().map(|&k| incidence[k].clone()).collect();
    let min_gap = min_edge_gap(&edges, &vertices, 10.0 * opts.merge_factor * ctx.scale);
    let g = CriticalGraph { vertices, edges, incidence, stagnation, min_gap, escaped };
    if !g.valence_ok() {
        return Err(Error::GraphInconsistency("vertex valence does not match local structure".into()));
    }
    Ok(g)
}

fn min_edge_gap(edges: &[Trajectory], vertices: &[CriticalPoint], exclude: f64) -> f64 {
    let mut best = f64::INFINITY;
    let near_vertex = |z: C| vertices.iter().any(|v| (v.z - z).norm() < exclude) || z.im < exclude;
    for i in 0..edges.len() {
        for j in 0..i {
            for a in edges[i].samples.iter().filter(|z| !near_vertex(**z)) {
                for b in edges[j].samples.iter().filter(|z| !near_vertex(**z)) {
                    best = best.min((a - b).norm());
                }
            }
        }
    }
    best
}

/// Arcs of the critical graph off the real axis.
pub fn extract_zs_spectrum(g: &CriticalGraph) -> Result<PolyContinuum> {
    let arcs: Vec<Arc> = g
        .edges
        .iter()
        .filter(|e| e.termination != Termination::Escaped)
        .filter(|e| e.samples.iter().any(|z| z.im > GLUE_TOL))
        .map(|e| {
            // drop samples that collapsed onto each other at the snap
            let mut pts = Vec::with_capacity(e.samples.len());
            let mut ss = Vec::with_capacity(e.samples.len());
            for (z, s) in e.samples.iter().zip(&e.s) {
                if ss.last().is_none_or(|&l: &f64| *s > l) && pts.last() != Some(z) {
                    pts.push(*z);
                    ss.push(*s);
                }
            }
            Arc::smooth(pts, ss)
        })
        .collect::<Result<Vec<_>>>()?;
    if arcs.is_empty() {
        return Err(Error::DegenerateSpectrum);
    }
    PolyContinuum::new(arcs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZsMeasure {
    pub nodes: Vec<C>,
    pub weights: Vec<f64>,
    pub density: Vec<f64>,
    pub arc: Vec<usize>,
    pub s: Vec<f64>,
}

impl ZsMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, d)| w * d).sum()
    }

    /// 2 ∫ Im(w) dρ
    pub fn intensity(&self) -> f64 {
        2.0 * self.nodes.iter().zip(&self.weights).zip(&self.density).map(|((z, w), d)| z.im * w * d).sum::<f64>()
    }
}

pub fn zs_measure(qd: &QuadraticDifferential, spectrum: &PolyContinuum) -> ZsMeasure {
    zs_measure_with(qd, spectrum, &PanelOptions::default())
}

pub fn zs_measure_with(qd: &QuadraticDifferential, spectrum: &PolyContinuum, opts: &PanelOptions) -> ZsMeasure {
    let d = Discretization::new(spectrum, opts);
    let ev = qd.evaluator();
    let n = d.len();
    ZsMeasure {
        nodes: d.z.clone(),
        weights: (0..n).map(|j| d.arc_weight(j)).collect(),
        density: d.z.iter().map(|&z| ev.q(z).norm().sqrt() / std::f64::consts::PI).collect(),
        arc: (0..n).map(|j| d.pieces[d.panels[d.panel_of[j]].piece].arc).collect(),
        s: (0..n).map(|j| d.arclength(j)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boutroux::{solve_boutroux, NewtonOptions, Seed};
    use crate::geom::{hausdorff_distance, AnchorSet};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn qd_i() -> QuadraticDifferential {
        QuadraticDifferential::from_coeffs(AnchorSet::new(vec![c(0.0, 1.0)]).unwrap(), vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn directions_examples() {
        let d = critical_directions(&qd_i(), c(0.0, 1.0)).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0] - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        let d = critical_directions(&qd_i(), c(0.0, 0.0)).unwrap();
        assert_eq!(d.len(), 4);
        for k in 0..4 {
            let gap = (d[(k + 1) % 4] - d[k]).rem_euclid(2.0 * std::f64::consts::PI);
            assert!((gap - 0.5 * std::f64::consts::PI).abs() < 1e-12);
        }
        assert!(critical_directions(&qd_i(), c(0.3, 0.3)).is_err());
    }

    #[test]
    fn trace_from_pole_reaches_origin() {
        let q = qd_i();
        let t = trace_trajectory(&q, c(0.0, 1.0), 1.5 * std::f64::consts::PI, &TraceOptions::default()).unwrap();
        assert!(matches!(t.termination, Termination::CriticalPoint(_)));
        assert!(t.samples.last().unwrap().norm() < 1e-12);
        assert!(t.max_drift < 1e-9);
        for z in &t.samples {
            assert!(z.re.abs() < 1e-6);
        }
        // p = √(z²+1) is 1 at the origin
        assert!((t.p_values.last().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn real_axis_is_a_trajectory() {
        let t = trace_trajectory(&qd_i(), c(1.0, 0.0), 0.0, &TraceOptions::default()).unwrap();
        assert!(t.samples.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn graph_and_spectrum_for_single_anchor() {
        let q = qd_i();
        let g = build_critical_graph(&q, &TraceOptions::default()).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.vertices.len(), 2);
        assert!(g.is_forest());
        let f = extract_zs_spectrum(&g).unwrap();
        let seg = PolyContinuum::new(vec![Arc::segment(c(0.0, 0.0), c(0.0, 1.0)).unwrap()]).unwrap();
        assert!(hausdorff_distance(&f, &seg) < 1e-6);
    }

    #[test]
    fn zs_measure_single_anchor() {
        let q = qd_i();
        let g = build_critical_graph(&q, &TraceOptions::default()).unwrap();
        let f = extract_zs_spectrum(&g).unwrap();
        let m = zs_measure(&q, &f);
        assert!((m.total() - 1.0 / std::f64::consts::PI).abs() < 1e-9, "{}", m.total());
        assert!((m.intensity() - 0.5).abs() < 1e-9);
        for (z, d) in m.nodes.iter().zip(&m.density) {
            let exact = z.im / (std::f64::consts::PI * (1.0 - z.im * z.im).sqrt());
            if z.im < 0.999 {
                assert!((d - exact).abs() < 1e-6 * (1.0 + exact));
            }
        }
    }

    #[test]
    fn two_anchor_grounded_graph() {
        let e = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let sol = solve_boutroux(&e, Seed::Naive, &NewtonOptions::default()).unwrap();
        let g = build_critical_graph(&sol.qd, &TraceOptions::default()).unwrap();
        assert!(g.is_forest());
        assert_eq!(g.escaped, 0);
        let f = extract_zs_spectrum(&g).unwrap();
        assert_eq!(f.arcs().len(), 2);
        let m = zs_measure(&sol.qd, &f);
        assert!((m.intensity() - sol.qd.residue_intensity()).abs() < 1e-8);
    }
}
