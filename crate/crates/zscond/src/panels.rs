//! Panel discretization of a poly-continuum, shared by the ZS measure and
//! the equilibrium solver.
//!
//! Each smooth piece is parametrized by θ ∈ [0,1] through the cosine map
//! τ = (1 − cos πθ)/2, so endpoint square-root behaviour becomes analytic
//! in θ; the two end panels are further split dyadically.

use num_complex::Complex64 as C;

use crate::geom::{PolyContinuum, GLUE_TOL};
use crate::quad::gauss_legendre;

#[derive(Clone, Debug)]
pub struct PanelOptions {
    pub order: usize,
    /// base panels per unit of (length / diameter)
    pub base_per_diam: f64,
    pub min_base: usize,
    pub levels: usize,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self { order: 16, base_per_diam: 8.0, min_base: 4, levels: 5 }
    }
}

/// A smooth piece: a whole smooth arc, or one segment of a polyline.
#[derive(Clone, Debug)]
pub struct Piece {
    pub arc: usize,
    pub t0: f64,
    pub t1: f64,
    /// arclength offset of the piece start within its arc
    pub s0: f64,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub piece: usize,
    pub th0: f64,
    pub th1: f64,
    /// index of the first node in the flattened node list
    pub first: usize,
    pub center: C,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub k: PolyContinuum,
    pub pieces: Vec<Piece>,
    pub panels: Vec<Panel>,
    pub order: usize,
    /// per node: position, dz/dθ, θ-weight, panel index, θ
    pub z: Vec<C>,
    pub dz: Vec<C>,
    pub w: Vec<f64>,
    pub panel_of: Vec<usize>,
    pub theta: Vec<f64>,
}

impl Discretization {
    pub fn new(k: &PolyContinuum, opts: &PanelOptions) -> Self {
        let scale = k.diameter().max(1e-12);
        let mut pieces = Vec::new();
        for (ai, arc) in k.arcs().iter().enumerate() {
            if arc.is_point() {
                continue;
            }
            let n = arc.samples().len();
            let p = arc.params();
            let span = p[n - 1] - p[0];
            let mut push = |t0: f64, t1: f64, s0: f64, len: f64, lo_im: f64| {
                // pieces lying on ℝ carry no charge: the data there is already harmonic
                if lo_im < GLUE_TOL {
                    return;
                }
                pieces.push(Piece { arc: ai, t0, t1, s0, length: len });
            };
            if arc.is_smooth() {
                let max_im = arc.samples().iter().map(|z| z.im).fold(0.0, f64::max);
                push(0.0, 1.0, 0.0, arc.length(), max_im);
            } else {
                let mut s = 0.0;
                for j in 0..n - 1 {
                    let (a, b) = (arc.samples()[j], arc.samples()[j + 1]);
                    let len = (b - a).norm();
                    push((p[j] - p[0]) / span, (p[j + 1] - p[0]) / span, s, len, a.im.max(b.im));
                    s += len;
                }
            }
        }
        let g = gauss_legendre(opts.order);
        let mut d = Discretization {
            k: k.clone(),
            pieces,
            panels: Vec::new(),
            order: opts.order,
            z: Vec::new(),
            dz: Vec::new(),
            w: Vec::new(),
            panel_of: Vec::new(),
            theta: Vec::new(),
        };
        for pi in 0..d.pieces.len() {
            let nb = ((opts.base_per_diam * d.pieces[pi].length / scale).ceil() as usize).max(opts.min_base);
            let h = 1.0 / nb as f64;
            let mut cuts = vec![0.0];
            for l in (1..=opts.levels).rev() {
                cuts.push(h / (1u64 << l) as f64);
            }
            for k in 1..nb {
                cuts.push(k as f64 * h);
            }
            for l in 1..=opts.levels {
                cuts.push(1.0 - h / (1u64 << l) as f64);
            }
            cuts.push(1.0);
            for c in cuts.windows(2) {
                let (th0, th1) = (c[0], c[1]);
                let first = d.z.len();
                let (mid, r) = (0.5 * (th0 + th1), 0.5 * (th1 - th0));
                for j in 0..g.x.len() {
                    let th = mid + r * g.x[j];
                    let (z, dz) = d.geometry(pi, th);
                    d.z.push(z);
                    d.dz.push(dz);
                    d.w.push(r * g.w[j]);
                    d.panel_of.push(d.panels.len());
                    d.theta.push(th);
                }
                let pts = &d.z[first..];
                let (a, b) = (d.geometry(pi, th0).0, d.geometry(pi, th1).0);
                let center = pts.iter().sum::<C>() / pts.len() as f64;
                let radius = pts
                    .iter()
                    .chain([a, b].iter())
                    .map(|p| (p - center).norm())
                    .fold(0.0, f64::max);
                d.panels.push(Panel { piece: pi, th0, th1, first, center, radius });
            }
        }
        d
    }

    /// Position and dz/dθ on piece `pi` at θ.
    pub fn geometry(&self, pi: usize, th: f64) -> (C, C) {
        let p = &self.pieces[pi];
        let pi_ = std::f64::consts::PI;
        let tau = 0.5 * (1.0 - (pi_ * th).cos());
        let dtau = 0.5 * pi_ * (pi_ * th).sin();
        let (z, dzdt) = self.k.arcs()[p.arc].eval(p.t0 + (p.t1 - p.t0) * tau);
        (z, dzdt * (p.t1 - p.t0) * dtau)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Arclength weight of node j: θ-weight times |dz/dθ|.
    pub fn arc_weight(&self, j: usize) -> f64 {
        self.w[j] * self.dz[j].norm()
    }

    /// Arclength coordinate of node j within its arc (approximate for smooth arcs).
    pub fn arclength(&self, j: usize) -> f64 {
        let p = &self.pieces[self.panels[self.panel_of[j]].piece];
        let tau = 0.5 * (1.0 - (std::f64::consts::PI * self.theta[j]).cos());
        p.s0 + tau * p.length
    }

    /// Distance of node j to the nearer end of its piece, in arclength.
    pub fn end_distance(&self, j: usize) -> f64 {
        let p = &self.pieces[self.panels[self.panel_of[j]].piece];
        let tau = 0.5 * (1.0 - (std::f64::consts::PI * self.theta[j]).cos());
        tau.min(1.0 - tau) * p.length
    }
}
