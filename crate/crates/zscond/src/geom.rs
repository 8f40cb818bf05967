//! Anchors, arcs, poly-continua, connectivity and Hausdorff distance.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endpoint gaps below this glue arcs together; samples below it touch the real axis.
pub const GLUE_TOL: f64 = 1e-9;
/// Anchors further than this from every arc are "not on K".
pub const ANCHOR_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnchorSet {
    points: Vec<C>,
}

impl AnchorSet {
    pub fn new(points: Vec<C>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidAnchors("empty anchor set".into()));
        }
        for (j, e) in points.iter().enumerate() {
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(Error::InvalidAnchors(format!("anchor {} is not finite", j + 1)));
            }
            if e.im <= 0.0 {
                return Err(Error::InvalidAnchors(format!(
                    "anchor below real axis: e{} = {} {:+}i",
                    j + 1,
                    e.re,
                    e.im
                )));
            }
            for (k, f) in points[..j].iter().enumerate() {
                if (e - f).norm() < 1e-12 * (1.0 + e.norm()) {
                    return Err(Error::InvalidAnchors(format!(
                        "anchors {} and {} coincide",
                        k + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| C::new(p[0], p[1])).collect())
    }

    pub fn points(&self) -> &[C] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Diameter of E together with its mirror image.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.points {
            d = d.max(2.0 * a.im);
            for b in &self.points {
                d = d.max((a - b).norm()).max((a - b.conj()).norm());
            }
        }
        d
    }

    pub fn translated(&self, a: f64) -> Self {
        Self { points: self.points.iter().map(|e| e + a).collect() }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { points: self.points.iter().map(|e| e * lambda).collect() }
    }
}

/// A polyline arc. `smooth` arcs are interpolated by local degree-7
/// polynomials in the stored parameter; the others are piecewise linear.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Arc {
    samples: Vec<C>,
    params: Vec<f64>,
    smooth: bool,
}

fn chord_params(samples: &[C]) -> Vec<f64> {
    let mut p = Vec::with_capacity(samples.len());
    let mut s = 0.0;
    p.push(0.0);
    for w in samples.windows(2) {
        s += (w[1] - w[0]).norm();
        p.push(s);
    }
    p
}

impl Arc {
    /// Piecewise-linear arc through `samples`.
    pub fn polyline(samples: Vec<C>) -> Result<Self> {
        let params = chord_params(&samples);
        Self::build(samples, params, false)
    }

    /// Smooth arc with its own monotone parameter (arclength for traced arcs).
    pub fn smooth(samples: Vec<C>, params: Vec<f64>) -> Result<Self> {
        Self::build(samples, params, true)
    }

    /// Smooth arc sampled from a parametrized curve on [0,1].
    pub fn from_fn(n: usize, f: impl Fn(f64) -> C) -> Result<Self> {
        let n = n.max(2);
        let samples: Vec<C> = (0..n).map(|k| f(k as f64 / (n - 1) as f64)).collect();
        let params = chord_params(&samples);
        Self::build(samples, params, true)
    }

    pub fn segment(a: C, b: C) -> Result<Self> {
        Self::polyline(vec![a, b])
    }

    fn build(samples: Vec<C>, params: Vec<f64>, smooth: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArc("arc without samples".into()));
        }
        if params.len() != samples.len() {
            return Err(Error::InvalidArc("parameter/sample length mismatch".into()));
        }
        for (k, z) in samples.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidArc(format!("sample {k} is not finite")));
            }
            if z.im < -GLUE_TOL {
                return Err(Error::InvalidArc(format!("sample {k} lies below the real axis")));
            }
        }
        for k in 1..samples.len() {
            if samples[k] == samples[k - 1] || params[k] <= params[k - 1] {
                return Err(Error::InvalidArc(format!("samples {} and {} coincide", k - 1, k)));
            }
        }
        Ok(Self { samples, params, smooth })
    }

    pub fn samples(&self) -> &[C] {
        &self.samples
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    /// A single-sample arc is a point (allowed as a degenerate piece of K).
    pub fn is_point(&self) -> bool {
        self.samples.len() == 1
    }

    pub fn start(&self) -> C {
        self.samples[0]
    }

    pub fn end(&self) -> C {
        *self.samples.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn min_im(&self) -> f64 {
        self.samples.iter().map(|z| z.im).fold(f64::INFINITY, f64::min)
    }

    /// Position and derivative at normalized parameter t in [0,1].
    pub fn eval(&self, t: f64) -> (C, C) {
        let n = self.samples.len();
        if n == 1 {
            return (self.samples[0], C::new(0.0, 0.0));
        }
        let p0 = self.params[0];
        let span = self.params[n - 1] - p0;
        let x = p0 + t.clamp(0.0, 1.0) * span;
        let i = match self.params.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        if !self.smooth || n == 2 {
            let h = self.params[i + 1] - self.params[i];
            let d = (self.samples[i + 1] - self.samples[i]) / h;
            return (self.samples[i] + d * (x - self.params[i]), d * span);
        }
        let m = n.min(8);
        let lo = (i + 1).saturating_sub(m / 2).min(n - m);
        let xs = &self.params[lo..lo + m];
        let mut a: Vec<C> = self.samples[lo..lo + m].to_vec();
        // Newton divided differences, then Horner with derivative.
        for k in 1..m {
            for j in (k..m).rev() {
                a[j] = (a[j] - a[j - 1]) / (xs[j] - xs[j - k]);
            }
        }
        let mut p = a[m - 1];
        let mut dp = C::new(0.0, 0.0);
        for k in (0..m - 1).rev() {
            dp = dp * (x - xs[k]) + p;
            p = p * (x - xs[k]) + a[k];
        }
        (p, dp * span)
    }

    /// Distance from z to the sample polyline.
    pub fn distance(&self, z: C) -> f64 {
        if self.samples.len() == 1 {
            return (z - self.samples[0]).norm();
        }
        self.samples
            .windows(2)
            .map(|w| point_segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Resample by linear interpolation so consecutive points are at most h apart.
    pub fn resample(&self, h: f64) -> Vec<C> {
        let mut out = vec![self.samples[0]];
        for w in self.samples.windows(2) {
            let n = ((w[1] - w[0]).norm() / h).ceil().max(1.0) as usize;
            for k in 1..=n {
                out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(C) -> C) -> Result<Self> {
        let samples: Vec<C> = self.samples.iter().map(|&z| f(z)).collect();
        let params = if self.smooth { self.params.clone() } else { chord_params(&samples) };
        Self::build(samples, params, self.smooth)
    }
}

pub fn point_segment_distance(z: C, a: C, b: C) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

fn segments_intersect(a: C, b: C, c: C, d: C) -> bool {
    let cross = |u: C, v: C| u.re * v.im - u.im * v.re;
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn segment_distance(a: C, b: C, c: C, d: C) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Minimum distance between two arcs' polylines, with bounding-box pruning.
pub fn arc_distance(p: &Arc, q: &Arc) -> f64 {
    let segs = |a: &Arc| -> Vec<(C, C)> {
        if a.samples.len() == 1 {
            vec![(a.samples[0], a.samples[0])]
        } else {
            a.samples.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    let (sp, sq) = (segs(p), segs(q));
    let boxes = |s: &[(C, C)]| -> Vec<(f64, f64, f64, f64, usize, usize)> {
        s.chunks(32)
            .enumerate()
            .map(|(k, ch)| {
                let mut bx = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for (a, b) in ch {
                    bx.0 = bx.0.min(a.re.min(b.re));
                    bx.1 = bx.1.max(a.re.max(b.re));
                    bx.2 = bx.2.min(a.im.min(b.im));
                    bx.3 = bx.3.max(a.im.max(b.im));
                }
                (bx.0, bx.1, bx.2, bx.3, k * 32, k * 32 + ch.len())
            })
            .collect()
    };
    let (bp, bq) = (boxes(&sp), boxes(&sq));
    let mut best = f64::INFINITY;
    // Visit box pairs nearest-first so the pruning bites early.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in bp.iter().enumerate() {
        for (j, y) in bq.iter().enumerate() {
            let dx = (y.0 - x.1).max(x.0 - y.1).max(0.0);
            let dy = (y.2 - x.3).max(x.2 - y.3).max(0.0);
            pairs.push((dx.hypot(dy), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (lb, i, j) in pairs {
        if lb > best {
            break;
        }
        for &(a, b) in &sp[bp[i].4..bp[i].5] {
            for &(c, d) in &sq[bq[j].4..bq[j].5] {
                best = best.min(segment_distance(a, b, c, d));
            }
        }
    }
    best
}

/// Symmetric (N+1)x(N+1) bit matrix; index 0 is the real axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityMatrix {
    m: Vec<Vec<u8>>,
}

impl ConnectivityMatrix {
    /// Only the diagonal entries 1..N set.
    pub fn empty(n: usize) -> Self {
        let mut m = vec![vec![0u8; n + 1]; n + 1];
        for (k, row) in m.iter_mut().enumerate().skip(1) {
            row[k] = 1;
        }
        Self { m }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n1 = rows.len();
        if n1 < 2 || rows.iter().any(|r| r.len() != n1) {
            return Err(Error::InvalidConnectivity("matrix must be square of size N+1 ≥ 2".into()));
        }
        let mut m = rows;
        for i in 0..n1 {
            for j in 0..n1 {
                if m[i][j] > 1 {
                    return Err(Error::InvalidConnectivity(format!("entry ({i},{j}) is not a bit")));
                }
                if m[i][j] != m[j][i] {
                    return Err(Error::InvalidConnectivity(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        for (k, row) in m.iter_mut().enumerate().skip(1) {
            row[k] = 1;
        }
        m[0][0] = 0;
        let c = Self { m };
        for i in 1..n1 {
            for j in 1..n1 {
                for l in 0..n1 {
                    if c.get(i, j) && c.get(j, l) && !c.get(i, l) && i != l {
                        return Err(Error::InvalidConnectivity(format!(
                            "not transitive: {i}~{j}, {j}~{l} but not {i}~{l}"
                        )));
                    }
                }
            }
        }
        Ok(c)
    }

    /// Build from a component label per anchor and a grounded flag per label.
    pub fn from_labels(labels: &[usize], grounded: &[bool]) -> Self {
        let n = labels.len();
        let mut c = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] || (grounded[labels[i]] && grounded[labels[j]]) {
                    c.m[i + 1][j + 1] = 1;
                }
            }
            if grounded[labels[i]] {
                c.m[i + 1][0] = 1;
                c.m[0][i + 1] = 1;
            }
        }
        c
    }

    pub fn n(&self) -> usize {
        self.m.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.m[i][j] == 1
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.m
    }

    /// Entrywise comparison, diagonal (0,0) ignored.
    pub fn dominates(&self, other: &Self) -> bool {
        let n1 = self.m.len();
        n1 == other.m.len()
            && (0..n1).all(|i| (0..n1).all(|j| (i == 0 && j == 0) || self.m[i][j] >= other.m[i][j]))
    }

    /// Anchor groups: the grounded set (possibly empty) and the floating groups.
    pub fn groups(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let n = self.n();
        let grounded: Vec<usize> = (0..n).filter(|&i| self.get(i + 1, 0)).collect();
        let mut seen = vec![false; n];
        let mut floating = Vec::new();
        for i in 0..n {
            if seen[i] || self.get(i + 1, 0) {
                continue;
            }
            let g: Vec<usize> = (0..n).filter(|&j| self.get(i + 1, j + 1)).collect();
            for &j in &g {
                seen[j] = true;
            }
            floating.push(g);
        }
        (grounded, floating)
    }
}

/// A finite union of arcs, partitioned into connected components.
///
/// Component 0 is the one meeting the real axis when any arc does; all
/// arcs that touch ℝ are merged into it, since ℝ itself is adjoined.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyContinuum {
    arcs: Vec<Arc>,
    components: Vec<Vec<usize>>,
    grounded: bool,
}

impl PolyContinuum {
    pub fn new(arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::EmptyContinuum);
        }
        let n = arcs.len();
        // union-find over arcs plus one virtual vertex (index n) for ℝ
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        };
        for i in 0..n {
            if arcs[i].min_im() < GLUE_TOL {
                union(&mut parent, i, n);
            }
            for j in 0..i {
                if arc_distance(&arcs[i], &arcs[j]) < GLUE_TOL {
                    union(&mut parent, i, j);
                }
            }
        }
        let ground_root = find(&mut parent, n);
        let grounded = (0..n).any(|i| find(&mut parent, i) == ground_root);
        let mut roots: Vec<usize> = Vec::new();
        let mut components: Vec<Vec<usize>> = Vec::new();
        if grounded {
            roots.push(ground_root);
            components.push(Vec::new());
        }
        for i in 0..n {
            let r = find(&mut parent, i);
            let k = match roots.iter().position(|&x| x == r) {
                Some(k) => k,
                None => {
                    roots.push(r);
                    components.push(Vec::new());
                    roots.len() - 1
                }
            };
            components[k].push(i);
        }
        Ok(Self { arcs, components, grounded })
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn is_grounded(&self) -> bool {
        self.grounded
    }

    pub fn floating_count(&self) -> usize {
        self.components.len() - usize::from(self.grounded)
    }

    pub fn component_of_arc(&self, a: usize) -> usize {
        self.components.iter().position(|c| c.contains(&a)).unwrap()
    }

    pub fn distance(&self, z: C) -> f64 {
        self.arcs.iter().map(|a| a.distance(z)).fold(f64::INFINITY, f64::min)
    }

    /// Diameter of the sample set.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<C> = self.arcs.iter().flat_map(|a| a.samples().iter().copied()).collect();
        let (mut x0, mut x1, mut y0, mut y1) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in &pts {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        (x1 - x0).hypot(y1 - y0)
    }

    pub fn map(&self, f: impl Fn(C) -> C + Copy) -> Result<Self> {
        Self::new(self.arcs.iter().map(|a| a.map(f)).collect::<Result<Vec<_>>>()?)
    }

    /// Index of the component hosting each anchor.
    pub fn anchors_hosted(&self, e: &AnchorSet) -> Result<Vec<usize>> {
        e.points()
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let (best, d) = self
                    .arcs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| (k, a.distance(p)))
                    .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                if d > ANCHOR_TOL {
                    Err(Error::AnchorNotOnContinuum { index: j + 1, distance: d })
                } else {
                    Ok(self.component_of_arc(best))
                }
            })
            .collect()
    }
}

pub fn connectivity_of(k: &PolyContinuum, e: &AnchorSet) -> Result<ConnectivityMatrix> {
    let hosted = k.anchors_hosted(e)?;
    let grounded: Vec<bool> = (0..k.components.len()).map(|c| k.grounded && c == 0).collect();
    Ok(ConnectivityMatrix::from_labels(&hosted, &grounded))
}

pub fn class_membership(k: &PolyContinuum, e: &AnchorSet, m: &ConnectivityMatrix) -> Result<bool> {
    Ok(connectivity_of(k, e)?.dominates(m))
}

/// Membership in 𝕂_E: each component holds two anchors or joins one to ℝ.
pub fn is_admissible(k: &PolyContinuum, e: &AnchorSet) -> Result<bool> {
    let hosted = k.anchors_hosted(e)?;
    Ok((0..k.components.len()).all(|c| {
        let n = hosted.iter().filter(|&&h| h == c).count();
        n >= 2 || (n >= 1 && k.grounded && c == 0)
    }))
}

/// Hausdorff distance between the two sample sets, resampled at spacing `h`,
/// with each resampled point measured exactly against the other polyline.
/// The error relative to the continuous polylines is at most h/2.
pub fn hausdorff_distance_with(k1: &PolyContinuum, k2: &PolyContinuum, h: f64) -> f64 {
    let one_sided = |a: &PolyContinuum, b: &PolyContinuum| -> f64 {
        let pts: Vec<C> = a.arcs.iter().flat_map(|arc| arc.resample(h)).collect();
        use rayon::prelude::*;
        pts.par_iter().map(|&z| b.distance(z)).reduce(|| 0.0, f64::max)
    };
    one_sided(k1, k2).max(one_sided(k2, k1))
}

pub fn hausdorff_distance(k1: &PolyContinuum, k2: &PolyContinuum) -> f64 {
    let d = k1.diameter().max(k2.diameter()).max(1e-12);
    hausdorff_distance_with(k1, k2, 1e-3 * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn anchor_validation() {
        assert!(AnchorSet::new(vec![c(0.0, -1.0)]).unwrap_err().to_string().contains("anchor below real axis"));
        assert!(AnchorSet::new(vec![]).is_err());
        assert!(AnchorSet::new(vec![c(0.0, 1.0), c(0.0, 1.0)]).is_err());
        assert_eq!(AnchorSet::new(vec![c(0.0, 1.0)]).unwrap().diameter(), 2.0);
    }

    #[test]
    fn connectivity_examples() {
        let e1 = AnchorSet::new(vec![c(0.0, 1.0)]).unwrap();
        let k = PolyContinuum::new(vec![Arc::segment(c(0.0, 0.0), c(0.0, 1.0)).unwrap()]).unwrap();
        let m = connectivity_of(&k, &e1).unwrap();
        assert!(m.get(0, 1));

        let e2 = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let arch = PolyContinuum::new(vec![Arc::segment(c(-1.0, 1.0), c(1.0, 1.0)).unwrap()]).unwrap();
        let m = connectivity_of(&arch, &e2).unwrap();
        assert!(m.get(1, 2) && !m.get(0, 1) && !m.get(0, 2));
        assert_eq!(arch.floating_count(), 1);

        // Two grounded pieces share the single ℝ-component.
        let two = PolyContinuum::new(vec![
            Arc::segment(c(-1.0, 0.0), c(-1.0, 1.0)).unwrap(),
            Arc::segment(c(1.0, 0.0), c(1.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let m = connectivity_of(&two, &e2).unwrap();
        assert!(m.get(0, 1) && m.get(0, 2) && m.get(1, 2));
        assert_eq!(two.components().len(), 1);
    }

    #[test]
    fn anchor_off_continuum() {
        let e = AnchorSet::new(vec![c(0.0, 2.0)]).unwrap();
        let k = PolyContinuum::new(vec![Arc::segment(c(0.0, 0.0), c(0.0, 1.0)).unwrap()]).unwrap();
        assert!(matches!(connectivity_of(&k, &e), Err(Error::AnchorNotOnContinuum { .. })));
    }

    #[test]
    fn membership_examples() {
        let e = AnchorSet::new(vec![c(-1.0, 1.0), c(1.0, 1.0)]).unwrap();
        let need12 = ConnectivityMatrix::from_rows(vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap();
        let joined = PolyContinuum::new(vec![
            Arc::segment(c(-1.0, 1.0), c(1.0, 1.0)).unwrap(),
            Arc::segment(c(-1.0, 0.0), c(-1.0, 1.0)).unwrap(),
        ])
        .unwrap();
        assert!(class_membership(&joined, &e, &need12).unwrap());
        assert!(class_membership(&joined, &e, &ConnectivityMatrix::empty(2)).unwrap());
        let apart = PolyContinuum::new(vec![
            Arc::segment(c(-1.0, 1.0), c(-1.0, 2.0)).unwrap(),
            Arc::segment(c(1.0, 1.0), c(1.0, 2.0)).unwrap(),
        ])
        .unwrap();
        assert!(!class_membership(&apart, &e, &need12).unwrap());
        assert!(!is_admissible(&apart, &e).unwrap());
    }

    #[test]
    fn hausdorff_examples() {
        let k1 = PolyContinuum::new(vec![Arc::segment(c(0.0, 0.0), c(0.0, 1.0)).unwrap()]).unwrap();
        assert_eq!(hausdorff_distance(&k1, &k1), 0.0);
        let k2 = k1.map(|z| z + 0.1).unwrap();
        assert!((hausdorff_distance(&k1, &k2) - 0.1).abs() < 1e-12);
        let mut arcs = k1.arcs().to_vec();
        arcs.push(Arc::polyline(vec![c(0.05, 0.5)]).unwrap());
        let k3 = PolyContinuum::new(arcs).unwrap();
        // brute force over dense samples
        let dense: Vec<C> = (0..=10_000).map(|k| c(0.0, k as f64 / 10_000.0)).collect();
        let brute = dense.iter().map(|z| (z - c(0.05, 0.5)).norm()).fold(f64::INFINITY, f64::min);
        assert!((hausdorff_distance(&k1, &k3) - brute).abs() < 1e-12);
        assert!((brute - 0.05).abs() < 1e-12);
    }

    #[test]
    fn smooth_eval_reproduces_curve() {
        let f = |t: f64| c(t.sin(), 1.0 + t * t);
        let arc = Arc::from_fn(200, f).unwrap();
        let dense = Arc::from_fn(20_000, f).unwrap();
        for k in 0..=20 {
            let (z, _) = arc.eval(k as f64 / 20.0);
            // the parameter is chordal, so compare against the nearest curve point
            assert!(dense.distance(z) < 1e-9);
        }
        let (z0, _) = arc.eval(0.0);
        let (z1, _) = arc.eval(1.0);
        assert!((z0 - c(0.0, 1.0)).norm() < 1e-14);
        assert!((z1 - c(1f64.sin(), 2.0)).norm() < 1e-14);
    }

    #[test]
    fn polyline_eval_is_linear() {
        let arc = Arc::polyline(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        let (z, d) = arc.eval(0.75);
        assert!((z - c(0.5, 1.0)).norm() < 1e-15);
        assert!((d - c(2.0, 0.0)).norm() < 1e-12);
    }
}
