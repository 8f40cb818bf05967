//! Equilibrium measure, Green potential and quasimomentum of a poly-continuum.
//!
//! The unknown on each panel is ψ(θ) = u(z(θ))·|dz/dθ|, which stays smooth
//! under the cosine parametrization even where u blows up like s^{-1/2}.
//! Collocation is at the Gauss nodes themselves:
//!
//!   Σ_panels ∫ ln|(z_i − w̄)/(z_i − w)| ψ(θ) dθ = Im Φ(z_i).
//!
//! Panel integrals bisect toward the target point with ψ interpolated from
//! the panel's own nodes. The same routine handles the self panel, the
//! neighbours, and near-field evaluation off the support.

use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PolyContinuum;
use crate::panels::{Discretization, PanelOptions};
use crate::quad::{gauss_legendre, lagrange_basis};

/// Φ(z) = Σ_{ℓ=1..r} t_ℓ z^ℓ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalField {
    coeffs: Vec<f64>,
}

impl Default for ExternalField {
    fn default() -> Self {
        Self { coeffs: vec![1.0] }
    }
}

impl ExternalField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::FieldMismatch("non-finite coefficient".into()));
        }
        match coeffs.last() {
            None => Err(Error::FieldMismatch("no coefficients".into())),
            Some(&t) if t <= 0.0 => Err(Error::FieldMismatch(format!("leading coefficient {t} is not positive"))),
            _ => Ok(Self { coeffs }),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_default(&self) -> bool {
        self.coeffs == [1.0]
    }

    /// (Φ, Φ′, Φ″) at z.
    pub fn eval(&self, z: C) -> (C, C, C) {
        let zero = C::new(0.0, 0.0);
        let (mut p, mut dp, mut d2p) = (zero, zero, zero);
        for &a in self.coeffs.iter().rev().chain(std::iter::once(&0.0)) {
            d2p = d2p * z + dp * 2.0;
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp, d2p)
    }
}

#[derive(Clone, Debug)]
pub struct EquilibriumOptions {
    pub panels: PanelOptions,
    pub max_condition: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self { panels: PanelOptions::default(), max_condition: 1e10 }
    }
}

#[derive(Clone, Debug)]
pub struct EquilibriumMeasure {
    pub disc: Discretization,
    pub field: ExternalField,
    /// u·|dz/dθ| at the nodes
    pub psi: Vec<f64>,
    /// max |G − Im Φ| at panel quarter-points
    pub bc_residual: f64,
    /// 1-norm condition estimate of the collocation matrix
    pub condition: f64,
    pub negative_density: bool,
}

/// Panels whose centre is this many radii away use their own nodes.
const FAR: f64 = 2.5;
/// Same for the energy grid, which only needs ~1e-12 relative accuracy.
const GRID_FAR: f64 = 1.5;
/// Sub-panels per panel in the grid cache.
const SUB: usize = 4;

/// Every panel split into `SUB` θ-pieces with their own Gauss nodes and
/// interpolated masses.
struct SubPanels {
    z: Vec<C>,
    m: Vec<f64>,
    center: Vec<C>,
    radius: Vec<f64>,
}

impl SubPanels {
    fn new(d: &Discretization, psi: &[f64]) -> Self {
        let g = gauss_legendre(d.order);
        let mut out = SubPanels { z: Vec::new(), m: Vec::new(), center: Vec::new(), radius: Vec::new() };
        let mut l = vec![0.0; d.order];
        for pan in &d.panels {
            let r = 0.5 * (pan.th1 - pan.th0);
            let psi = &psi[pan.first..pan.first + d.order];
            for q in 0..SUB {
                let a = -1.0 + 2.0 * q as f64 / SUB as f64;
                let h = 1.0 / SUB as f64;
                let c = interp(d, pan.first, a + h, &mut l);
                let mut rad = (interp(d, pan.first, a, &mut l) - c).norm().max((interp(d, pan.first, a + 2.0 * h, &mut l) - c).norm());
                for k in 0..d.order {
                    let z = interp(d, pan.first, a + h + h * g.x[k], &mut l);
                    let dens: f64 = l.iter().zip(psi).map(|(x, y)| x * y).sum();
                    rad = rad.max((z - c).norm());
                    out.z.push(z);
                    out.m.push(r * h * g.w[k] * dens);
                }
                out.center.push(c);
                out.radius.push(rad);
            }
        }
        out
    }
}
const MAX_DEPTH: usize = 44;

/// Refined rule on one panel: θ-weights, points and the panel's Lagrange
/// basis at each point (`order` values per point).
struct FineRule {
    w: Vec<f64>,
    z: Vec<C>,
    l: Vec<f64>,
}

/// Panel geometry from its own nodes; exact at the nodes, spectrally close
/// to the arc elsewhere.
fn interp(d: &Discretization, first: usize, x: f64, l: &mut [f64]) -> C {
    lagrange_basis(gauss_legendre(d.order), x, l);
    l.iter().zip(&d.z[first..first + d.order]).map(|(a, z)| z * *a).sum()
}

/// Quadrature on panel `p` bisected toward `t`; `None` when the panel's own
/// nodes are already accurate for a kernel singular at t.
fn fine_rule(d: &Discretization, p: usize, t: C) -> Option<FineRule> {
    let pan = &d.panels[p];
    if (t - pan.center).norm_sqr() > (FAR * pan.radius).powi(2) {
        return None;
    }
    let g = gauss_legendre(d.order);
    let r = 0.5 * (pan.th1 - pan.th0);
    let mut scratch = vec![0.0; d.order];
    let mut at = |x: f64| interp(d, pan.first, x, &mut scratch);
    let mut out = FineRule { w: Vec::new(), z: Vec::new(), l: Vec::new() };
    let (za, zb) = (at(-1.0), at(1.0));
    let mut stack = vec![(-1.0, 1.0, za, zb, 0usize)];
    while let Some((a, b, za, zb, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let zm = at(m);
        let size = (zm - za).norm_sqr().sqrt() + (zb - zm).norm_sqr().sqrt();
        let dist = (t - za).norm_sqr().min((t - zm).norm_sqr()).min((t - zb).norm_sqr()).sqrt();
        if dist < 1.2 * size && depth < MAX_DEPTH {
            stack.push((m, b, zm, zb, depth + 1));
            stack.push((a, m, za, zm, depth + 1));
            continue;
        }
        let h = 0.5 * (b - a);
        for k in 0..g.x.len() {
            let start = out.l.len();
            out.l.resize(start + d.order, 0.0);
            out.z.push(interp(d, pan.first, m + h * g.x[k], &mut out.l[start..]));
            out.w.push(r * h * g.w[k]);
        }
    }
    Some(out)
}

/// ∫_panel f(w) ℓ_k(θ) dθ for each Lagrange basis function ℓ_k of the panel.
fn panel_weights(d: &Discretization, p: usize, t: C, f: impl Fn(C) -> f64, out: &mut [f64]) {
    let first = d.panels[p].first;
    match fine_rule(d, p, t) {
        None => {
            for (k, o) in out.iter_mut().enumerate() {
                *o = f(d.z[first + k]) * d.w[first + k];
            }
        }
        Some(fine) => {
            out.iter_mut().for_each(|o| *o = 0.0);
            for (j, l) in fine.l.chunks(d.order).enumerate() {
                let v = f(fine.z[j]) * fine.w[j];
                for k in 0..d.order {
                    out[k] += v * l[k];
                }
            }
        }
    }
}

/// ∫_panel f(w) ψ(θ) dθ.
fn panel_sum<T>(d: &Discretization, psi: &[f64], p: usize, t: C, f: impl Fn(C) -> T) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let first = d.panels[p].first;
    let mut acc = T::default();
    match fine_rule(d, p, t) {
        None => {
            for k in 0..d.order {
                acc += f(d.z[first + k]) * (d.w[first + k] * psi[first + k]);
            }
        }
        Some(fine) => {
            let psi = &psi[first..first + d.order];
            for (j, l) in fine.l.chunks(d.order).enumerate() {
                let dens: f64 = l.iter().zip(psi).map(|(a, b)| a * b).sum();
                acc += f(fine.z[j]) * (fine.w[j] * dens);
            }
        }
    }
    acc
}

fn ln_dist(a: C, b: C) -> f64 {
    (a - b).norm().max(f64::MIN_POSITIVE).ln()
}

pub fn solve_equilibrium(k: &PolyContinuum, field: &ExternalField) -> Result<EquilibriumMeasure> {
    solve_equilibrium_with(k, field, &EquilibriumOptions::default())
}

pub fn solve_equilibrium_with(
    k: &PolyContinuum,
    field: &ExternalField,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumMeasure> {
    let d = Discretization::new(k, &opts.panels);
    let n = d.len();
    if n == 0 {
        // everything lies on ℝ, where the boundary data is already harmonic
        return Ok(EquilibriumMeasure {
            disc: d,
            field: field.clone(),
            psi: Vec::new(),
            bc_residual: 0.0,
            condition: 1.0,
            negative_density: false,
        });
    }
    let order = d.order;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = d.z[i];
            let mut row = vec![0.0; n];
            let (mut a, mut b) = (vec![0.0; order], vec![0.0; order]);
            for p in 0..d.panels.len() {
                // ln|z − w̄| = ln|z̄ − w|: singular toward the reflected target
                panel_weights(&d, p, zi.conj(), |w| ln_dist(zi.conj(), w), &mut a);
                panel_weights(&d, p, zi, |w| ln_dist(zi, w), &mut b);
                let f0 = d.panels[p].first;
                for kk in 0..order {
                    row[f0 + kk] = a[kk] - b[kk];
                }
            }
            row
        })
        .collect();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    drop(rows);
    let rhs = DVector::from_iterator(n, d.z.iter().map(|&z| field.eval(z).0.im));
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let at = a.transpose();
    let lu = a.lu();
    let psi = lu.solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
    let lut = at.lu();
    let condition = norm1 * hager_inverse_norm(n, |x| lu.solve(x), |x| lut.solve(x));
    if !condition.is_finite() || condition > opts.max_condition {
        return Err(Error::IllConditioned(condition));
    }
    let psi: Vec<f64> = psi.iter().copied().collect();
    let top = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let negative_density = psi.iter().any(|&v| v < -1e-8 * top);
    let mut m = EquilibriumMeasure {
        disc: d,
        field: field.clone(),
        psi,
        bc_residual: 0.0,
        condition,
        negative_density,
    };
    m.bc_residual = m.boundary_residual();
    Ok(m)
}

/// Hager's estimate of ‖A⁻¹‖₁ from solves with A and Aᵀ.
fn hager_inverse_norm(
    n: usize,
    solve: impl Fn(&DVector<f64>) -> Option<DVector<f64>>,
    solve_t: impl Fn(&DVector<f64>) -> Option<DVector<f64>>,
) -> f64 {
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let Some(y) = solve(&x) else { return f64::INFINITY };
        est = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = solve_t(&xi) else { return f64::INFINITY };
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if zmax <= z.dot(&x) {
            break;
        }
        x.fill(0.0);
        x[j] = 1.0;
    }
    est
}

impl EquilibriumMeasure {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn nodes(&self) -> &[C] {
        &self.disc.z
    }

    /// Density u at node j (per unit arclength).
    pub fn density(&self, j: usize) -> f64 {
        self.psi[j] / self.disc.dz[j].norm()
    }

    /// Mass of node j, u·|dw| integrated.
    pub fn mass(&self, j: usize) -> f64 {
        self.psi[j] * self.disc.w[j]
    }

    /// Slope of log u against log |z − z0| over nodes whose distance to
    /// the arc end `z0` lies in `[lo, hi]`·diameter. `None` below four nodes.
    pub fn endpoint_exponent(&self, z0: C, lo: f64, hi: f64) -> Option<f64> {
        let s = self.scale();
        let pts: Vec<(f64, f64)> = (0..self.len())
            .filter_map(|j| {
                let d = (self.disc.z[j] - z0).norm();
                let u = self.density(j);
                (d >= lo * s && d <= hi * s && u > 0.0).then(|| (d.ln(), u.ln()))
            })
            .collect();
        if pts.len() < 4 {
            return None;
        }
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
        Some(sxy / sxx)
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.len()).map(|j| self.mass(j)).sum()
    }

    pub(crate) fn scale(&self) -> f64 {
        self.disc.k.diameter().max(1e-12)
    }

    /// 2 ∫ Im w dρ.
    pub fn intensity(&self) -> f64 {
        2.0 * (0..self.len()).map(|j| self.disc.z[j].im * self.mass(j)).sum::<f64>()
    }

    /// 2 Σ t_ℓ ∫ Im(w^ℓ) dρ.
    pub fn intensity_phi(&self, field: &ExternalField) -> Result<f64> {
        if field != &self.field {
            return Err(Error::FieldMismatch("measure was solved against a different field".into()));
        }
        Ok(2.0 * (0..self.len()).map(|j| field.eval(self.disc.z[j]).0.im * self.mass(j)).sum::<f64>())
    }

    /// Same quantity as −res_∞ Φ d𝒫, by a circle contour.
    pub fn intensity_phi_residue(&self) -> f64 {
        let (c0, rad) = self.enclosing_circle();
        let m = 256;
        let mut acc = C::new(0.0, 0.0);
        for j in 0..m {
            let e = C::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            let z = c0 + e * rad;
            acc += self.field.eval(z).0 * self.g_prime_raw(z) * e * rad;
        }
        // −(1/2πi)∮ Φ 𝒫′ dz with ∮ Φ dz = 0
        (acc / m as f64).re
    }

    fn enclosing_circle(&self) -> (C, f64) {
        let (lo, hi) = self.disc.z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, z| (a.0.min(z.re), a.1.max(z.re)));
        let c0 = C::new(0.5 * (lo + hi), 0.0);
        let r = self.disc.z.iter().map(|z| (z - c0).norm()).fold(0.0, f64::max);
        (c0, 2.0 * r + 0.1 * self.scale())
    }

    /// G(z) = ∫ ln|(z − w̄)/(z − w)| dρ(w). Accurate up to and on the support.
    pub fn green(&self, z: C) -> f64 {
        let d = &self.disc;
        (0..d.panels.len())
            .map(|p| {
                panel_sum(d, &self.psi, p, z.conj(), |w| ln_dist(z.conj(), w))
                    - panel_sum(d, &self.psi, p, z, |w| ln_dist(z, w))
            })
            .sum()
    }

    fn g_prime_raw(&self, z: C) -> C {
        let d = &self.disc;
        let mut acc = C::new(0.0, 0.0);
        let mut direct = C::new(0.0, 0.0);
        for (p, pan) in d.panels.iter().enumerate() {
            let lim = (FAR * pan.radius).powi(2);
            if (z - pan.center).norm_sqr() > lim && (z.conj() - pan.center).norm_sqr() > lim {
                // i[1/(z − w̄) − 1/(z − w)] = 2 Im w / ((z − w̄)(z − w))
                for j in pan.first..pan.first + d.order {
                    let w = d.z[j];
                    direct += 2.0 * w.im * self.psi[j] * d.w[j] / ((z - w.conj()) * (z - w));
                }
                continue;
            }
            acc += panel_sum(d, &self.psi, p, z.conj(), |w| 1.0 / (z - w.conj()));
            acc -= panel_sum(d, &self.psi, p, z, |w| 1.0 / (z - w));
        }
        acc * C::i() + direct
    }

    /// g′ for the energy grid: sub-panel nodes wherever they resolve the
    /// kernel, the bisected rule only right next to the support.
    fn g_prime_grid(&self, sub: &SubPanels, z: C) -> C {
        let d = &self.disc;
        let far = |c: C, r: f64| {
            let lim = (GRID_FAR * r).powi(2);
            (z - c).norm_sqr() > lim && (z.conj() - c).norm_sqr() > lim
        };
        let kernel = |w: C| 2.0 * w.im / ((z - w.conj()) * (z - w));
        let mut direct = C::new(0.0, 0.0);
        let mut acc = C::new(0.0, 0.0);
        for (p, pan) in d.panels.iter().enumerate() {
            if far(pan.center, pan.radius) {
                for j in pan.first..pan.first + d.order {
                    direct += kernel(d.z[j]) * (self.psi[j] * d.w[j]);
                }
                continue;
            }
            let subs = p * SUB..(p + 1) * SUB;
            if subs.clone().all(|q| far(sub.center[q], sub.radius[q])) {
                for j in subs.start * d.order..subs.end * d.order {
                    direct += kernel(sub.z[j]) * sub.m[j];
                }
                continue;
            }
            acc += panel_sum(d, &self.psi, p, z.conj(), |w| 1.0 / (z - w.conj()));
            acc -= panel_sum(d, &self.psi, p, z, |w| 1.0 / (z - w));
        }
        acc * C::i() + direct
    }

    /// Laurent coefficients a_k of g′(z) = Σ a_k (z − c)^{-k-1}, k < count.
    fn laurent(&self, c: C, count: usize) -> Vec<C> {
        let mut a = vec![C::new(0.0, 0.0); count];
        for j in 0..self.len() {
            let (w, m) = (self.disc.z[j], self.mass(j));
            let (mut pw, mut pb) = (C::new(1.0, 0.0), C::new(1.0, 0.0));
            for ak in a.iter_mut() {
                *ak += C::i() * m * (pb - pw);
                pw *= w - c;
                pb *= w.conj() - c;
            }
        }
        a
    }

    fn g_second_raw(&self, z: C) -> C {
        let d = &self.disc;
        let mut acc = C::new(0.0, 0.0);
        for p in 0..d.panels.len() {
            acc -= panel_sum(d, &self.psi, p, z.conj(), |w| 1.0 / ((z - w.conj()) * (z - w.conj())));
            acc += panel_sum(d, &self.psi, p, z, |w| 1.0 / ((z - w) * (z - w)));
        }
        acc * C::i()
    }

    /// g(z) with the principal logarithm; Re g jumps across the vertical
    /// shadow of the support, Im g = G is continuous.
    fn g_raw(&self, z: C) -> C {
        let d = &self.disc;
        let re: f64 = (0..d.panels.len())
            .map(|p| panel_sum(d, &self.psi, p, z, |w| -((z - w.conj()) / (z - w)).arg()))
            .sum();
        C::new(re, self.green(z))
    }

    /// ∫ f dρ with panel rules refined toward `t`, for kernels singular there.
    pub(crate) fn integrate_toward(&self, t: C, f: impl Fn(C) -> f64 + Copy) -> f64 {
        (0..self.disc.panels.len()).map(|p| panel_sum(&self.disc, &self.psi, p, t, f)).sum()
    }

    pub fn quasimomentum(&self) -> Quasimomentum<'_> {
        Quasimomentum { m: self }
    }

    /// max |G − Im Φ| at the quarter-points of every panel.
    fn boundary_residual(&self) -> f64 {
        let d = &self.disc;
        let pts: Vec<C> = d
            .panels
            .iter()
            .flat_map(|p| {
                let (mid, r) = (0.5 * (p.th0 + p.th1), 0.5 * (p.th1 - p.th0));
                [-0.5, 0.5].map(|x| d.geometry(p.piece, mid + r * x).0)
            })
            .collect();
        pts.par_iter()
            .map(|&z| (self.green(z) - self.field.eval(z).0.im).abs())
            .reduce(|| 0.0, f64::max)
    }

    /// Intensity three ways plus diagnostics.
    pub fn intensity_report(&self, grid_res: usize) -> Result<EnergyReport> {
        if grid_res < 8 {
            return Err(Error::GridTooCoarse(f64::INFINITY));
        }
        let i_measure = self.intensity();
        let i_residue = if self.is_empty() { 0.0 } else { self.residue_intensity() };
        let i_phi = if self.field.is_default() { None } else { Some(self.intensity_phi(&self.field)?) };
        let target = i_phi.unwrap_or(i_measure);
        let (fine, coarse) = if self.is_empty() {
            (0.0, 0.0)
        } else {
            (self.dirichlet_energy(grid_res), self.dirichlet_energy(grid_res / 2))
        };
        // the endpoint singularities leave a first-order grid error
        let i_dirichlet = 2.0 * fine - coarse;
        let dirichlet_error = (fine - coarse).abs();
        if dirichlet_error > 0.05 * target.abs() + 1e-6 {
            return Err(Error::GridTooCoarse(dirichlet_error));
        }
        Ok(EnergyReport {
            i_measure,
            i_residue,
            i_dirichlet,
            i_phi,
            residual_measure_residue: (i_measure - i_residue).abs(),
            residual_measure_dirichlet: (target - i_dirichlet).abs(),
            residual_residue_dirichlet: (i_residue - i_dirichlet).abs(),
            dirichlet_error_estimate: dirichlet_error,
            bc_residual: self.bc_residual,
            condition: self.condition,
            nodes: self.len(),
            panels: self.disc.panels.len(),
            grid_res,
        })
    }

    /// [`intensity_report`](Self::intensity_report), doubling the grid while
    /// it is too coarse for the support, up to `max_res`.
    pub fn intensity_report_refined(&self, grid_res: usize, max_res: usize) -> Result<EnergyReport> {
        let mut res = grid_res;
        loop {
            match self.intensity_report(res) {
                Err(Error::GridTooCoarse(_)) if 2 * res <= max_res => res *= 2,
                r => return r,
            }
        }
    }

    /// 1/z coefficient of 𝒫 from (1/2πi)∮ (z − c) g′(z) dz.
    fn residue_intensity(&self) -> f64 {
        let (c0, rad) = self.enclosing_circle();
        let m = 256;
        let mut acc = C::new(0.0, 0.0);
        for j in 0..m {
            let e = C::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            let z = c0 + e * rad;
            acc += self.g_prime_raw(z) * e * e * rad * rad;
        }
        (acc / m as f64).re
    }

    /// (1/π) ∫_ℍ |∇G|² on a polar grid about the support, plus the far tail.
    fn dirichlet_energy(&self, res: usize) -> f64 {
        let (lo, hi) = self.disc.z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, z| (a.0.min(z.re), a.1.max(z.re)));
        let c0 = C::new(0.5 * (lo + hi), 0.0);
        let r_in = 1.25 * self.disc.z.iter().map(|z| (z - c0).norm()).fold(0.0, f64::max);
        let big_r = (20.0 * self.scale()).max(2.0 * r_in);
        let (nr, nt) = (res / 2, res);
        let dth = PI / nt as f64;
        let dr = r_in / nr as f64;
        let ds = (big_r / r_in).ln() / nr as f64;
        let k = &self.disc.k;
        let sub = SubPanels::new(&self.disc, &self.psi);
        // rings are summed in order after the parallel map so the result is
        // independent of the thread count
        // inner disc: uniform in r; cells the support passes near are split 4×4
        let inner: f64 = (0..nr)
            .into_par_iter()
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                let mut ring = 0.0;
                for j in 0..nt {
                    let th = (j as f64 + 0.5) * dth;
                    let z = c0 + C::from_polar(r, th);
                    let diag = dr.hypot((r + 0.5 * dr) * dth);
                    if k.distance(z) > 1.5 * diag {
                        ring += self.g_prime_grid(&sub, z).norm_sqr() * r * dr * dth;
                        continue;
                    }
                    let s = 4;
                    let (sr, st) = (dr / s as f64, dth / s as f64);
                    for a in 0..s {
                        let rr = r - 0.5 * dr + (a as f64 + 0.5) * sr;
                        for b in 0..s {
                            let tt = th - 0.5 * dth + (b as f64 + 0.5) * st;
                            ring += self.g_prime_grid(&sub, c0 + C::from_polar(rr, tt)).norm_sqr() * rr * sr * st;
                        }
                    }
                }
                ring
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        // outer annulus: uniform in ln r, g′ from its Laurent series
        let rmax = r_in / 1.25;
        let terms = ((-36.0 / 0.8f64.ln()).ceil() as usize).max(2);
        let a = self.laurent(c0, terms);
        let outer: f64 = (0..nr)
            .into_par_iter()
            .map(|i| {
                let r = r_in * ((i as f64 + 0.5) * ds).exp();
                let p = ((-36.0 / (rmax / r).ln()).ceil() as usize).clamp(2, terms);
                (0..nt)
                    .map(|j| {
                        let u = 1.0 / C::from_polar(r, (j as f64 + 0.5) * dth);
                        let mut v = C::new(0.0, 0.0);
                        for ak in a[..p].iter().rev() {
                            v = (v + ak) * u;
                        }
                        v.norm_sqr()
                    })
                    .sum::<f64>()
                    * r
                    * r
                    * ds
                    * dth
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let sum = inner + outer;
        let i = self.intensity();
        sum / PI + i * i / (2.0 * big_r * big_r)
    }

    /// Zeros of 𝒫′ in ℍ∖K.
    pub fn stagnation_points(&self) -> Result<StagnationSet> {
        self.quasimomentum().stagnation_points()
    }
}

/// Evaluators for 𝒫 = Φ − g and its derivatives off the support.
pub struct Quasimomentum<'a> {
    m: &'a EquilibriumMeasure,
}

impl Quasimomentum<'_> {
    pub fn measure(&self) -> &EquilibriumMeasure {
        self.m
    }

    fn check(&self, z: C) -> Result<()> {
        if self.m.is_empty() {
            return Ok(());
        }
        if self.m.disc.k.distance(z) < 1e-9 * self.m.scale() {
            return Err(Error::EvaluationOnSupport(z));
        }
        Ok(())
    }

    pub fn p(&self, z: C) -> Result<C> {
        self.check(z)?;
        let g = if self.m.is_empty() { C::new(0.0, 0.0) } else { self.m.g_raw(z) };
        Ok(self.m.field.eval(z).0 - g)
    }

    pub fn dp(&self, z: C) -> Result<C> {
        self.check(z)?;
        let g = if self.m.is_empty() { C::new(0.0, 0.0) } else { self.m.g_prime_raw(z) };
        Ok(self.m.field.eval(z).1 - g)
    }

    pub fn d2p(&self, z: C) -> Result<C> {
        self.check(z)?;
        let g = if self.m.is_empty() { C::new(0.0, 0.0) } else { self.m.g_second_raw(z) };
        Ok(self.m.field.eval(z).2 - g)
    }

    /// g′, the derivative of the complexified Green potential.
    pub fn g_prime(&self, z: C) -> Result<C> {
        self.check(z)?;
        Ok(if self.m.is_empty() { C::new(0.0, 0.0) } else { self.m.g_prime_raw(z) })
    }

    /// G = Im g.
    pub fn green(&self, z: C) -> f64 {
        if self.m.is_empty() {
            0.0
        } else {
            self.m.green(z)
        }
    }

    /// H = Re g, single-valued only off the vertical shadow of the support.
    pub fn conjugate(&self, z: C) -> Result<f64> {
        self.check(z)?;
        Ok(if self.m.is_empty() { 0.0 } else { self.m.g_raw(z).re })
    }

    /// Winding number of 𝒫′ around the circle |z − c| = r.
    fn winding(&self, c: C, r: f64) -> Result<i64> {
        let m = 64;
        let mut prev = self.dp(c + r)?;
        let mut total = 0.0;
        for j in 1..=m {
            let z = c + C::from_polar(r, 2.0 * PI * j as f64 / m as f64);
            let v = self.dp(z)?;
            total += (v / prev).arg();
            prev = v;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    fn newton(&self, mut z: C, scale: f64) -> Option<C> {
        for _ in 0..80 {
            let (f, df) = (self.dp(z).ok()?, self.d2p(z).ok()?);
            if df.norm() == 0.0 {
                return None;
            }
            let mut step = f / df;
            if step.norm() > 0.2 * scale {
                step *= 0.2 * scale / step.norm();
            }
            z -= step;
            if z.im <= 0.0 || z.norm() > 1e3 * scale {
                return None;
            }
            if step.norm() < 1e-13 * scale {
                return Some(z);
            }
        }
        let f = self.dp(z).ok()?;
        (f.norm() < 1e-8).then_some(z)
    }

    /// Zeros of 𝒫′ in ℍ∖K: winding numbers on a grid of cells clear of K
    /// flag cells to polish, Newton from every cell centre catches zeros
    /// close to the support.
    pub fn stagnation_points(&self) -> Result<StagnationSet> {
        let m = self.m;
        if m.is_empty() {
            return Ok(StagnationSet { points: Vec::new(), multiplicities: Vec::new() });
        }
        let scale = m.scale();
        let k = &m.disc.k;
        let pts = k.arcs().iter().flat_map(|a| a.samples().iter().copied());
        let (x0, x1, y1) = pts.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |a, z| (a.0.min(z.re), a.1.max(z.re), a.2.max(z.im)));
        let pad = 0.5 * scale;
        let (bx0, bx1, by0, by1) = (x0 - pad, x1 + pad, 0.0, y1 + pad);
        let h = scale / 16.0;
        let (nx, ny) = (((bx1 - bx0) / h).ceil() as usize, ((by1 - by0) / h).ceil() as usize);
        let cells: Vec<C> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| C::new(bx0 + (i as f64 + 0.5) * h, by0 + (j as f64 + 0.5) * h)))
            .collect();
        let seeds: Vec<Option<C>> = cells
            .par_iter()
            .map(|&c| {
                let clear = k.distance(c) > 0.75 * h;
                if clear && c.im > 0.75 * h {
                    // circle through the cell corners
                    match self.winding(c, 0.75 * h) {
                        Ok(0) => return None,
                        Ok(_) => {}
                        Err(_) => {}
                    }
                }
                self.newton(c, scale)
            })
            .collect();
        let mut found: Vec<C> = Vec::new();
        for z in seeds.into_iter().flatten() {
            if z.im < 1e-6 * scale || k.distance(z) < 1e-4 * scale {
                continue;
            }
            if found.iter().all(|f| (f - z).norm() > 1e-5 * scale) {
                found.push(z);
            }
        }
        found.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut multiplicities = Vec::new();
        for (i, &z) in found.iter().enumerate() {
            let others = found
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, f)| (f - z).norm())
                .fold(f64::INFINITY, f64::min);
            let r = (0.5 * k.distance(z)).min(0.3 * others).min(0.5 * z.im);
            multiplicities.push(self.winding(z, r)?.max(1) as usize);
        }
        let total: usize = multiplicities.iter().sum();
        let expected = k.floating_count();
        if total != expected {
            return Err(Error::CountMismatch { found: total, expected });
        }
        Ok(StagnationSet { points: found, multiplicities })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StagnationSet {
    pub points: Vec<C>,
    pub multiplicities: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub i_measure: f64,
    pub i_residue: f64,
    pub i_dirichlet: f64,
    pub i_phi: Option<f64>,
    pub residual_measure_residue: f64,
    pub residual_measure_dirichlet: f64,
    pub residual_residue_dirichlet: f64,
    /// |grid value at res − grid value at res/2|; I_dirichlet is their
    /// Richardson combination
    pub dirichlet_error_estimate: f64,
    pub bc_residual: f64,
    pub condition: f64,
    pub nodes: usize,
    pub panels: usize,
    pub grid_res: usize,
}
