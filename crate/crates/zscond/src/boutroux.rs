//! Quadratic differentials Q dz² = P(z)/E(z) dz², their periods, and the
//! Boutroux solve.
//!
//! The Newton unknowns are the zeros of P grouped by type (see
//! [`ZeroFactor`]), not the raw coefficients: a double zero stays exactly
//! double, so the square system cannot drift into a nearby surface of
//! higher genus.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AnchorSet, ConnectivityMatrix};
use crate::quad::{cluster_roots, gauss_legendre, monic_roots, poly_from_roots};

/// Roots closer than this (relative to the diameter) to a pole cancel it.
pub const COLLISION_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub enum ZeroFactor {
    /// (z-a)², a real: where a grounded tree meets ℝ
    RealDouble(f64),
    /// (z-d)²(z-d̄)²: a stagnation point, or a four-way junction on the spectrum
    ComplexDouble(C),
    /// (z-b)(z-b̄): a branch point, trivalent junction of the spectrum
    SimplePair(C),
}

impl ZeroFactor {
    fn n_params(&self) -> usize {
        match self {
            ZeroFactor::RealDouble(_) => 1,
            _ => 2,
        }
    }

    fn roots(&self) -> Vec<C> {
        match *self {
            ZeroFactor::RealDouble(a) => vec![C::new(a, 0.0); 2],
            ZeroFactor::ComplexDouble(d) => vec![d, d, d.conj(), d.conj()],
            ZeroFactor::SimplePair(b) => vec![b, b.conj()],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ZeroStructure {
    pub factors: Vec<ZeroFactor>,
}

impl ZeroStructure {
    pub fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.roots().len()).sum()
    }

    pub fn roots(&self) -> Vec<C> {
        self.factors.iter().flat_map(|f| f.roots()).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for f in &self.factors {
            match *f {
                ZeroFactor::RealDouble(a) => p.push(a),
                ZeroFactor::ComplexDouble(z) | ZeroFactor::SimplePair(z) => {
                    p.push(z.re);
                    p.push(z.im);
                }
            }
        }
        p
    }

    pub fn with_params(&self, p: &[f64]) -> Self {
        let mut k = 0;
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let out = match f {
                    ZeroFactor::RealDouble(_) => ZeroFactor::RealDouble(p[k]),
                    ZeroFactor::ComplexDouble(_) => ZeroFactor::ComplexDouble(C::new(p[k], p[k + 1])),
                    ZeroFactor::SimplePair(_) => ZeroFactor::SimplePair(C::new(p[k], p[k + 1])),
                };
                k += f.n_params();
                out
            })
            .collect();
        Self { factors }
    }

    pub fn simple_pairs(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f, ZeroFactor::SimplePair(_))).count()
    }

    /// Infer a structure from numerator roots (pairs within `tol` are doubles).
    pub fn from_roots(roots: &[C], tol: f64) -> Result<Self> {
        let mut factors = Vec::new();
        for (z, m) in cluster_roots(roots, tol) {
            if z.im.abs() < tol {
                if m % 2 == 1 {
                    return Err(Error::InvalidAnchors(format!(
                        "numerator has a real root of odd multiplicity at {:.6}",
                        z.re
                    )));
                }
                for _ in 0..m / 2 {
                    factors.push(ZeroFactor::RealDouble(z.re));
                }
            } else if z.im > 0.0 {
                for _ in 0..m / 2 {
                    factors.push(ZeroFactor::ComplexDouble(z));
                }
                if m % 2 == 1 {
                    factors.push(ZeroFactor::SimplePair(z));
                }
            }
        }
        Ok(Self { factors })
    }

    /// The perfect-square seed ∏(z − Re e_j)².
    pub fn naive(e: &AnchorSet) -> Self {
        Self { factors: e.points().iter().map(|p| ZeroFactor::RealDouble(p.re)).collect() }
    }

    /// Seeds for every zero layout compatible with exactly the connectivity `m`.
    ///
    /// The grounded anchors may hang off ℝ as one tree or as several; each
    /// split of the grounded set gives its own layout.
    pub fn candidates_for(e: &AnchorSet, m: &ConnectivityMatrix) -> Result<Vec<Self>> {
        let pts = e.points();
        let (grounded, floating) = m.groups();
        let mut floating_factors = Vec::new();
        for g in &floating {
            if g.len() < 2 {
                return Err(Error::InvalidConnectivity(format!(
                    "anchor {} is neither grounded nor joined to another anchor",
                    g[0] + 1
                )));
            }
            let members: Vec<C> = g.iter().map(|&i| pts[i]).collect();
            let min_im = members.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
            let mean_re = members.iter().map(|z| z.re).sum::<f64>() / members.len() as f64;
            floating_factors.push(ZeroFactor::ComplexDouble(C::new(mean_re, 0.5 * min_im)));
            floating_factors.extend(junction_seeds(&members, g.len() - 2));
        }
        let mut out = Vec::new();
        for split in set_partitions(&grounded) {
            let mut factors = Vec::new();
            for block in &split {
                let members: Vec<C> = block.iter().map(|&i| pts[i]).collect();
                let mean_re = members.iter().map(|z| z.re).sum::<f64>() / members.len() as f64;
                factors.push(ZeroFactor::RealDouble(mean_re));
                factors.extend(junction_seeds(&members, block.len() - 1));
            }
            factors.extend(floating_factors.iter().copied());
            out.push(Self { factors });
        }
        Ok(out)
    }
}

fn junction_seeds(members: &[C], count: usize) -> Vec<ZeroFactor> {
    let mut sorted = members.to_vec();
    sorted.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let mean_im = members.iter().map(|z| z.im).sum::<f64>() / members.len() as f64;
    (0..count)
        .map(|k| {
            let (a, b) = (sorted[k % (sorted.len() - 1)], sorted[k % (sorted.len() - 1) + 1]);
            let re = if count == 1 {
                members.iter().map(|z| z.re).sum::<f64>() / members.len() as f64
            } else {
                0.5 * (a.re + b.re)
            };
            ZeroFactor::SimplePair(C::new(re, 0.7 * mean_im))
        })
        .collect()
}

/// All set partitions of `items`, in a fixed order.
pub fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let (first, rest) = (items[0], &items[1..]);
    let mut out = Vec::new();
    for p in set_partitions(rest) {
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k].insert(0, first);
            out.push(q);
        }
        let mut q = vec![vec![first]];
        q.extend(p);
        out.push(q);
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticDifferential {
    anchors: AnchorSet,
    coeffs: Vec<f64>,
    /// distinct numerator zeros (both half-planes) with multiplicity
    zeros: Vec<(C, usize)>,
    structure: Option<ZeroStructure>,
    /// anchors whose pole pair is cancelled by a colliding zero pair
    cancelled: Vec<usize>,
}

impl QuadraticDifferential {
    pub fn from_structure(anchors: AnchorSet, s: ZeroStructure) -> Result<Self> {
        if s.degree() != 2 * anchors.len() {
            return Err(Error::InvalidAnchors(format!(
                "numerator degree {} does not match 2N = {}",
                s.degree(),
                2 * anchors.len()
            )));
        }
        let roots = s.roots();
        let coeffs = poly_from_roots(&roots).iter().map(|c| c.re).collect();
        let mut zeros: Vec<(C, usize)> = Vec::new();
        for f in &s.factors {
            let add = |zeros: &mut Vec<(C, usize)>, z: C, m: usize| {
                if let Some(e) = zeros.iter_mut().find(|(w, _)| *w == z) {
                    e.1 += m;
                } else {
                    zeros.push((z, m));
                }
            };
            match *f {
                ZeroFactor::RealDouble(a) => add(&mut zeros, C::new(a, 0.0), 2),
                ZeroFactor::ComplexDouble(d) => {
                    add(&mut zeros, d, 2);
                    add(&mut zeros, d.conj(), 2);
                }
                ZeroFactor::SimplePair(b) => {
                    add(&mut zeros, b, 1);
                    add(&mut zeros, b.conj(), 1);
                }
            }
        }
        let mut q = Self { anchors, coeffs, zeros, structure: Some(s), cancelled: Vec::new() };
        q.detect_collisions();
        Ok(q)
    }

    /// Build from c_1..c_{2N}; zeros found by companion eigenvalues.
    pub fn from_coeffs(anchors: AnchorSet, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 2 * anchors.len() {
            return Err(Error::InvalidAnchors(format!(
                "expected {} coefficients, got {}",
                2 * anchors.len(),
                coeffs.len()
            )));
        }
        let scale = anchors.diameter();
        let roots = monic_roots(&coeffs);
        let zeros = cluster_roots(&roots, 1e-6 * scale)
            .into_iter()
            .map(|(z, m)| if z.im.abs() < 1e-6 * scale { (C::new(z.re, 0.0), m) } else { (z, m) })
            .collect::<Vec<_>>();
        for &(z, m) in &zeros {
            if z.im == 0.0 && m % 2 == 1 {
                return Err(Error::InvalidAnchors(format!(
                    "numerator has a real root of odd multiplicity at {:.6}",
                    z.re
                )));
            }
        }
        let structure = ZeroStructure::from_roots(&roots, 1e-6 * scale).ok();
        let mut q = Self { anchors, coeffs, zeros, structure, cancelled: Vec::new() };
        q.detect_collisions();
        Ok(q)
    }

    fn detect_collisions(&mut self) {
        let tol = COLLISION_TOL * self.anchors.diameter();
        self.cancelled.clear();
        for (j, e) in self.anchors.points().iter().enumerate() {
            if self.zeros.iter().any(|(z, m)| m % 2 == 1 && (z - e).norm() < tol) {
                self.cancelled.push(j);
            }
        }
    }

    pub fn anchors(&self) -> &AnchorSet {
        &self.anchors
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn structure(&self) -> Option<&ZeroStructure> {
        self.structure.as_ref()
    }

    pub fn zeros(&self) -> &[(C, usize)] {
        &self.zeros
    }

    pub fn is_degenerate(&self) -> bool {
        !self.cancelled.is_empty()
    }

    pub fn cancelled(&self) -> &[usize] {
        &self.cancelled
    }

    pub fn scale(&self) -> f64 {
        self.anchors.diameter()
    }

    /// Zeros and poles after symbolic cancellation of collided pairs.
    pub fn effective(&self) -> (Vec<(C, usize)>, Vec<C>) {
        let tol = COLLISION_TOL * self.scale();
        let mut zeros = self.zeros.clone();
        let mut poles = Vec::new();
        for (j, e) in self.anchors.points().iter().enumerate() {
            if self.cancelled.contains(&j) {
                for target in [*e, e.conj()] {
                    if let Some(k) = zeros
                        .iter()
                        .position(|(z, m)| m % 2 == 1 && (z - target).norm() < tol)
                    {
                        zeros[k].1 -= 1;
                    }
                }
            } else {
                poles.push(*e);
                poles.push(e.conj());
            }
        }
        zeros.retain(|(_, m)| *m > 0);
        (zeros, poles)
    }

    /// Branch points in the open upper half-plane.
    pub fn branch_points(&self) -> Vec<C> {
        let (zeros, poles) = self.effective();
        let mut b: Vec<C> = poles.into_iter().filter(|p| p.im > 0.0).collect();
        b.extend(zeros.iter().filter(|(z, m)| z.im > 0.0 && m % 2 == 1).map(|(z, _)| *z));
        b
    }

    pub fn genus(&self) -> usize {
        self.branch_points().len().saturating_sub(1)
    }

    /// Q(z) without the pole-distance guard.
    pub fn q_raw(&self, z: C) -> C {
        let (zeros, poles) = self.effective();
        q_from_factors(&zeros, &poles, z)
    }

    pub fn eval_q(&self, z: C) -> Result<C> {
        let tol = 1e-6 * self.scale();
        for e in self.anchors.points() {
            if (z - e).norm() < tol || (z - e.conj()).norm() < tol {
                return Err(Error::PoleEvaluation(*e));
            }
        }
        Ok(self.q_raw(z))
    }

    /// Evaluator that precomputes the effective factor lists.
    pub fn evaluator(&self) -> QEval {
        let (zeros, poles) = self.effective();
        QEval { zeros, poles }
    }

    /// √Q on the sheet where √Q → 1 at ∞; valid where |z| exceeds every zero and pole.
    pub fn sqrt_q_far(&self, z: C) -> C {
        self.evaluator().sqrt_far(z)
    }

    /// Continuous branch of √Q along a sampled path.
    pub fn sqrt_q_along(&self, path: &[C], initial: C) -> Result<Vec<C>> {
        let ev = self.evaluator();
        let q0 = ev.q(path[0]);
        if (initial * initial - q0).norm() > 1e-8 * (1.0 + q0.norm()) {
            return Err(Error::BranchJump(path[0]));
        }
        let mut out = vec![initial];
        let mut prev = initial;
        for &z in &path[1..] {
            let v = ev.q(z).sqrt();
            prev = pick_branch(v, prev).ok_or(Error::BranchJump(z))?;
            out.push(prev);
        }
        Ok(out)
    }

    pub fn cycle_basis(&self) -> CycleBasis {
        CycleBasis::for_branch_points(&self.branch_points(), &self.evaluator().singular_points(), 0.4)
    }

    pub fn periods(&self, basis: &CycleBasis) -> Result<PeriodVector> {
        let ev = self.evaluator();
        let values = basis.loops.iter().map(|l| ev.loop_integral(l)).collect::<Result<Vec<_>>>()?;
        Ok(PeriodVector { values })
    }

    /// I from √Q = 1 − I/z² + …, by trapezoidal contour quadrature at large |z|.
    pub fn residue_intensity(&self) -> f64 {
        let ev = self.evaluator();
        let rho = ev
            .zeros
            .iter()
            .map(|(z, _)| z.norm())
            .chain(ev.poles.iter().map(|p| p.norm()))
            .fold(0.0, f64::max);
        let r = 2.0 * rho + 1.0;
        let m = 256;
        let mut acc = C::new(0.0, 0.0);
        for k in 0..m {
            let z = C::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            acc += z * z * ev.sqrt_far(z);
        }
        -(acc / m as f64).re
    }

    /// Im ∫ √Q dz from ℝ up to a point where √Q is analytic (a double zero,
    /// say). For a Boutroux differential this is path independent.
    pub fn level(&self, c: C) -> Result<f64> {
        let ev = self.evaluator();
        let sing = ev.singular_points();
        let scale = self.scale();
        let clearance = |a: C, b: C| {
            sing.iter()
                .filter(|s| (*s - b).norm() > 1e-12 * scale)
                .map(|&s| crate::geom::point_segment_distance(s, a, b))
                .fold(f64::INFINITY, f64::min)
        };
        // Prefer the vertical drop to ℝ; sidestep if it grazes a singular point.
        let mut best: Option<(f64, Vec<C>)> = None;
        for k in 0..9 {
            let off = [0.0, 0.05, -0.05, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4][k] * scale;
            let path = if off == 0.0 {
                vec![C::new(c.re, 0.0), c]
            } else {
                vec![C::new(c.re + off, 0.0), C::new(c.re + off, c.im), c]
            };
            let cl = path.windows(2).map(|w| clearance(w[0], w[1])).fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| cl > b.0) {
                best = Some((cl, path));
            }
            if cl > 0.02 * scale {
                break;
            }
        }
        let (_, mut path) = best.unwrap();
        // shift off a possible real zero at the start
        if ev.q(path[0]).norm() < 1e-10 {
            let d = 1e-3 * scale;
            path[0] += d;
            path.insert(1, C::new(path[0].re, 1e-3 * scale));
        }
        let start = ev.q(path[0]).sqrt();
        let (val, _) = ev.path_integral(&path, start, Some(c))?;
        Ok(val.im)
    }
}

fn pick_branch(v: C, prev: C) -> Option<C> {
    // at a zero of Q both signs agree
    if v.norm() <= 1e-12 * prev.norm() {
        return Some(v);
    }
    let (dp, dm) = ((v - prev).norm(), (v + prev).norm());
    let (best, other, cand) = if dp <= dm { (dp, dm, v) } else { (dm, dp, -v) };
    if best > 0.5 * other && best > 1e-12 * (1.0 + prev.norm()) {
        None
    } else {
        Some(cand)
    }
}

fn q_from_factors(zeros: &[(C, usize)], poles: &[C], z: C) -> C {
    let mut num = C::new(1.0, 0.0);
    for &(r, m) in zeros {
        let d = z - r;
        for _ in 0..m {
            num *= d;
        }
    }
    let mut den = C::new(1.0, 0.0);
    for &p in poles {
        den *= z - p;
    }
    num / den
}

/// Precomputed factor lists of Q.
#[derive(Clone, Debug)]
pub struct QEval {
    pub zeros: Vec<(C, usize)>,
    pub poles: Vec<C>,
}

impl QEval {
    pub fn q(&self, z: C) -> C {
        q_from_factors(&self.zeros, &self.poles, z)
    }

    /// Q and Q'/Q.
    pub fn q_logderiv(&self, z: C) -> (C, C) {
        let mut ld = C::new(0.0, 0.0);
        for &(r, m) in &self.zeros {
            ld += m as f64 / (z - r);
        }
        for &p in &self.poles {
            ld -= 1.0 / (z - p);
        }
        (self.q(z), ld)
    }

    pub fn sqrt_far(&self, z: C) -> C {
        let mut v = C::new(1.0, 0.0);
        for &(r, m) in &self.zeros {
            let f = C::new(1.0, 0.0) - r / z;
            for _ in 0..m / 2 {
                v *= f;
            }
            if m % 2 == 1 {
                v *= f.sqrt();
            }
        }
        for &p in &self.poles {
            v /= (C::new(1.0, 0.0) - p / z).sqrt();
        }
        v
    }

    /// Branch points and poles in both half-planes (where √Q is not analytic).
    pub fn singular_points(&self) -> Vec<C> {
        let mut s: Vec<C> = self.poles.clone();
        s.extend(self.zeros.iter().filter(|(_, m)| m % 2 == 1).map(|(z, _)| *z));
        s
    }

    /// Distance to the nearest pole or zero. Even zeros are not singular,
    /// but √Q is small there and the sign choice needs short steps.
    fn nearest_critical(&self, z: C, skip: Option<C>) -> f64 {
        let mut d = f64::INFINITY;
        for &p in &self.poles {
            if skip != Some(p) {
                d = d.min((z - p).norm());
            }
        }
        for &(r, _) in &self.zeros {
            if skip != Some(r) {
                d = d.min((z - r).norm());
            }
        }
        d
    }

    /// ∫ √Q dz along a polyline with branch continuation from `start`.
    /// Steps shrink near singular points; `target` is exempt (√Q analytic there).
    pub fn path_integral(&self, path: &[C], start: C, target: Option<C>) -> Result<(C, C)> {
        let g = gauss_legendre(20);
        let mut acc = C::new(0.0, 0.0);
        let mut branch = start;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b - a).norm();
            if len == 0.0 {
                continue;
            }
            let dir = (b - a) / len;
            let mut s = 0.0;
            let mut guard = 0;
            while s < len {
                let z0 = a + dir * s;
                let mut h = 0.3 * self.nearest_critical(z0, target);
                // √Q may vanish at the target: halve the gap so consecutive values stay distinguishable
                if let Some(t) = target {
                    let dt = (t - z0).norm();
                    if dt > 1e-9 * len {
                        h = h.min(0.5 * dt);
                    }
                }
                let h = h.min(len - s).max(1e-14 * len);
                let z1 = a + dir * (s + h);
                let raw = self.q(z1).sqrt();
                let at_target = s + h >= len && target.is_some_and(|t| (z1 - t).norm() <= 1e-9 * len);
                let v1 = match pick_branch(raw, branch) {
                    Some(v) => v,
                    None if at_target => raw,
                    None => return Err(Error::BranchJump(z1)),
                };
                let (c, r) = ((z0 + z1) * 0.5, (z1 - z0) * 0.5);
                let mut part = C::new(0.0, 0.0);
                for k in 0..g.x.len() {
                    let t = 0.5 * (g.x[k] + 1.0);
                    let guess = branch * (1.0 - t) + v1 * t;
                    let v = self.q(c + r * g.x[k]).sqrt();
                    let v = if (v - guess).norm() <= (v + guess).norm() { v } else { -v };
                    part += v * g.w[k];
                }
                acc += part * r;
                branch = v1;
                s += h;
                guard += 1;
                if guard > 2_000_000 {
                    return Err(Error::QuadratureFailure("path integral step budget exhausted".into()));
                }
            }
        }
        Ok((acc, branch))
    }

    fn loop_integral(&self, l: &Loop) -> Result<C> {
        let path = l.corners();
        let start = self.q(path[0]).sqrt();
        // on ℝ away from zeros √Q is real; take the positive root
        let start = if start.re < 0.0 { -start } else { start };
        let mut acc = C::new(0.0, 0.0);
        let mut branch = start;
        for w in path.windows(2) {
            let (v, b) = self.path_integral(w, branch, None)?;
            acc += v;
            branch = b;
        }
        Ok(acc)
    }
}

/// Stadium-shaped loop around the vertical segment [b, b̄].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Loop {
    pub center: C,
    pub half_width: f64,
}

impl Loop {
    /// Closed polyline approximation; the caps are 48-gons on the same circle,
    /// so periods are exact for the polygon (homologous to the stadium).
    pub fn corners(&self) -> Vec<C> {
        let (b, w) = (self.center, self.half_width);
        let n_cap = 48;
        let mut pts = vec![C::new(b.re + w, 0.0), C::new(b.re + w, b.im)];
        for k in 1..n_cap {
            let t = std::f64::consts::PI * k as f64 / n_cap as f64;
            pts.push(b + C::from_polar(w, t));
        }
        pts.push(C::new(b.re - w, b.im));
        pts.push(C::new(b.re - w, -b.im));
        for k in 1..n_cap {
            let t = std::f64::consts::PI * (1.0 + k as f64 / n_cap as f64);
            pts.push(b.conj() + C::from_polar(w, t));
        }
        pts.push(C::new(b.re + w, -b.im));
        pts.push(C::new(b.re + w, 0.0));
        pts
    }

    pub fn encloses(&self, z: C) -> bool {
        let (b, w) = (self.center, self.half_width);
        if (z.re - b.re).abs() < w && z.im.abs() <= b.im {
            return true;
        }
        (z - b).norm() < w || (z - b.conj()).norm() < w
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleBasis {
    pub loops: Vec<Loop>,
    pub genus: usize,
}

impl CycleBasis {
    /// One loop per branch point b in ℍ around [b, b̄], minus one outermost loop.
    /// `width_factor` scales the loop half-width against the nearest obstruction.
    pub fn for_branch_points(bps: &[C], singular: &[C], width_factor: f64) -> Self {
        if bps.is_empty() {
            return Self { loops: Vec::new(), genus: 0 };
        }
        let mut loops: Vec<Loop> = bps
            .iter()
            .map(|&b| {
                let mut d = b.im;
                for &c in singular {
                    if (c - b).norm() < 1e-14 || (c - b.conj()).norm() < 1e-14 {
                        continue;
                    }
                    d = d.min((c - b).norm()).min((c - b.conj()).norm());
                    let same_line = (c.re - b.re).abs() < 1e-9 * (1.0 + b.norm());
                    if c.im.abs() < b.im && !same_line {
                        d = d.min((c.re - b.re).abs());
                    }
                }
                Loop { center: b, half_width: width_factor * d }
            })
            .collect();
        // The outermost loops sum to the residue at infinity, which vanishes.
        let outer = (0..loops.len())
            .rev()
            .find(|&k| {
                !loops
                    .iter()
                    .enumerate()
                    .any(|(j, l)| j != k && l.encloses(loops[k].center))
            })
            .unwrap_or(loops.len() - 1);
        loops.remove(outer);
        let genus = loops.len();
        Self { loops, genus }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodVector {
    pub values: Vec<C>,
}

impl PeriodVector {
    pub fn max_abs_im(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub enum Seed {
    Naive,
    Coeffs(Vec<f64>),
    Structure(ZeroStructure),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, fd_step: 1e-7 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoutrouxSolution {
    pub qd: QuadraticDifferential,
    pub iterations: usize,
    /// max |Im period| over the basis, plus the c_1 mismatch
    pub residual: f64,
    pub history: Vec<f64>,
}

fn residual_vec(e: &AnchorSet, s: &ZeroStructure, c1_target: f64) -> Result<(DVector<f64>, QuadraticDifferential)> {
    for f in &s.factors {
        match f {
            ZeroFactor::ComplexDouble(z) | ZeroFactor::SimplePair(z) if z.im <= 0.0 => {
                return Err(Error::QuadratureFailure("zero left the upper half-plane".into()));
            }
            _ => {}
        }
    }
    let qd = QuadraticDifferential::from_structure(e.clone(), s.clone())?;
    let c1: f64 = -s.roots().iter().map(|r| r.re).sum::<f64>();
    let basis = qd.cycle_basis();
    let per = qd.periods(&basis)?;
    let mut r = vec![c1 - c1_target];
    r.extend(per.values.iter().map(|v| v.im));
    if r.len() != s.params().len() {
        // a zero met a pole and the genus dropped
        return Err(Error::QuadratureFailure("zero layout collided with a pole".into()));
    }
    Ok((DVector::from_vec(r), qd))
}

/// Damped Newton on the A-periods over a fixed zero layout.
pub fn solve_boutroux(e: &AnchorSet, seed: Seed, opts: &NewtonOptions) -> Result<BoutrouxSolution> {
    let scale = e.diameter();
    let s0 = match seed {
        Seed::Naive => ZeroStructure::naive(e),
        Seed::Structure(s) => s,
        Seed::Coeffs(c) => {
            let roots = monic_roots(&c);
            ZeroStructure::from_roots(&roots, 1e-3 * scale)?
        }
    };
    if s0.degree() != 2 * e.len() {
        return Err(Error::InvalidAnchors("seed degree does not match anchors".into()));
    }
    let c1_target = -2.0 * e.points().iter().map(|p| p.re).sum::<f64>();
    let mut p = DVector::from_vec(s0.params());
    let n = p.len();
    let (mut r, mut qd) = residual_vec(e, &s0, c1_target)?;
    if r.len() != n {
        return Err(Error::InvalidAnchors(format!(
            "zero layout gives {} equations for {} unknowns",
            r.len(),
            n
        )));
    }
    let norm = |v: &DVector<f64>| v.amax();
    let mut history = vec![norm(&r)];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if norm(&r) < 1e-3 * opts.tol {
            break;
        }
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = opts.fd_step * p[j].abs().max(scale);
            let mut q = p.clone();
            q[j] += h;
            let col = match residual_vec(e, &s0.with_params(q.as_slice()), c1_target) {
                Ok((rj, _)) => (rj - &r) / h,
                Err(_) => {
                    q[j] -= 2.0 * h;
                    let (rj, _) = residual_vec(e, &s0.with_params(q.as_slice()), c1_target)?;
                    (&r - rj) / h
                }
            };
            jac.set_column(j, &col);
        }
        let step = match jac.clone().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => jac.svd(true, true).solve(&(-&r), 1e-14).map_err(|_| Error::NewtonDivergence {
                iterations,
                residual: norm(&r),
            })?,
        };
        // Armijo backtracking on the squared residual
        let f0 = r.norm_squared();
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-6 {
            let trial = &p + &step * lambda;
            if let Ok((rt, qt)) = residual_vec(e, &s0.with_params(trial.as_slice()), c1_target) {
                if rt.norm_squared() <= (1.0 - 1e-4 * lambda) * f0 {
                    accepted = Some((trial, rt, qt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((pt, rt, qt)) => {
                p = pt;
                r = rt;
                qd = qt;
                history.push(norm(&r));
            }
            None => break,
        }
        if step.amax() * lambda < 1e-15 * scale {
            break;
        }
    }
    let residual = norm(&r);
    if residual > opts.tol || !residual.is_finite() {
        return Err(Error::NewtonDivergence { iterations, residual });
    }
    Ok(BoutrouxSolution { qd, iterations, residual, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn qd_i() -> QuadraticDifferential {
        let e = AnchorSet::new(vec![c(0.0, 1.0)]).unwrap();
        QuadraticDifferential::from_coeffs(e, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = qd_i();
        assert!((q.eval_q(c(1.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((q.eval_q(c(0.0, 2.0)).unwrap() - c(4.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(q.eval_q(c(0.0, 0.0)).unwrap().norm(), 0.0);
        assert!(matches!(q.eval_q(c(0.0, 1.0)), Err(Error::PoleEvaluation(_))));
    }

    #[test]
    fn sqrt_along_examples() {
        let q = qd_i();
        let path: Vec<C> = (0..=100).map(|k| c(1.0 + k as f64 / 100.0, 0.0)).collect();
        let v = q.sqrt_q_along(&path, c(0.5f64.sqrt(), 0.0)).unwrap();
        assert!((v[100] - c(2.0 / 5f64.sqrt(), 0.0)).norm() < 1e-14);

        let circle = |center: C, r: f64| -> Vec<C> {
            (0..=400).map(|k| center + C::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / 400.0)).collect()
        };
        let far = circle(c(5.0, 0.5), 0.5);
        let init = q.q_raw(far[0]).sqrt();
        let v = q.sqrt_q_along(&far, init).unwrap();
        assert!((v[400] - init).norm() < 1e-12);

        let around = circle(c(0.0, 1.0), 0.1);
        let init = q.q_raw(around[0]).sqrt();
        let v = q.sqrt_q_along(&around, init).unwrap();
        assert!((v[400] + init).norm() < 1e-12);
    }

    #[test]
    fn residue_intensity_examples() {
        assert!((qd_i().residue_intensity() - 0.5).abs() < 1e-13);
        let e = AnchorSet::new(vec![c(1.0, 2.0)]).unwrap();
        let q = QuadraticDifferential::from_coeffs(e, vec![-2.0, 1.0]).unwrap();
        assert!((q.residue_intensity() - 2.0).abs() < 1e-13);
        let e = AnchorSet::new(vec![c(0.0, 3.0)]).unwrap();
        let q = QuadraticDifferential::from_coeffs(e, vec![0.0, 0.0]).unwrap();
        assert!((q.residue_intensity() - 4.5).abs() < 1e-12);
    }

    /// Intensity from the roots alone: I = (Σ r² − Σ_{E∪Ē} e²)/4 once c_1 balances.
    fn closed_form_intensity(q: &QuadraticDifferential) -> f64 {
        let s: C = q.zeros().iter().map(|(z, m)| z * z * *m as f64).sum();
        let t: C = q.anchors().points().iter().map(|e| e * e + e.conj() * e.conj()).sum();
        ((s - t) / 4.0).re
    }

    #[test]
    fn residue_matches_root_formula() {
        let e = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let s = ZeroStructure { factors: vec![ZeroFactor::RealDouble(-0.7), ZeroFactor::RealDouble(0.7)] };
        let q = QuadraticDifferential::from_structure(e, s).unwrap();
        assert!((q.residue_intensity() - closed_form_intensity(&q)).abs() < 1e-13);
    }

    #[test]
    fn genus_zero_has_no_periods() {
        let q = qd_i();
        let b = q.cycle_basis();
        assert_eq!(b.genus, 0);
        assert!(q.periods(&b).unwrap().values.is_empty());
    }

    #[test]
    fn n1_solves_to_perfect_square() {
        let e = AnchorSet::new(vec![c(1.0, 2.0)]).unwrap();
        let sol = solve_boutroux(&e, Seed::Naive, &NewtonOptions::default()).unwrap();
        assert!((sol.qd.coeffs()[0] + 2.0).abs() < 1e-12);
        assert!((sol.qd.coeffs()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_anchor_grounded_solution() {
        // values cross-checked against an independent Python prototype
        let e = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let sol = solve_boutroux(&e, Seed::Naive, &NewtonOptions::default()).unwrap();
        assert!(sol.residual < 1e-10);
        let s = sol.qd.structure().unwrap();
        let a = match s.factors[1] {
            ZeroFactor::RealDouble(a) => a,
            _ => panic!(),
        };
        assert!((a.abs() - 0.95597759).abs() < 1e-7, "{a}");
        assert!((sol.qd.residue_intensity() - 0.913893162).abs() < 1e-8);
        assert!((sol.qd.residue_intensity() - closed_form_intensity(&sol.qd)).abs() < 1e-12);
    }

    #[test]
    fn partitions_count() {
        assert_eq!(set_partitions(&[0, 1, 2]).len(), 5);
        assert_eq!(set_partitions(&[0, 1, 2, 3]).len(), 15);
        assert_eq!(set_partitions(&[]).len(), 1);
    }
}
