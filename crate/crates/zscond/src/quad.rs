//! Gauss–Legendre rules, graded panels, polynomial helpers.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

pub struct GaussRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// barycentric weights for interpolation through the nodes
    pub bary: Vec<f64>,
}

fn compute_rule(n: usize) -> GaussRule {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pm) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    let bary = (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * ((1.0 - x[j] * x[j]) * w[j]).sqrt()
        })
        .collect();
    GaussRule { x, w, bary }
}

/// Cached Gauss–Legendre rule on [-1,1] with n ≤ 64 nodes.
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static CACHE: [OnceLock<GaussRule>; 65] = [const { OnceLock::new() }; 65];
    assert!((1..=64).contains(&n), "rule size {n} out of range");
    CACHE[n].get_or_init(|| compute_rule(n))
}

/// Nodes and weights on [a,b], graded geometrically toward `s` (inside [a,b]).
/// The interval touching `s` has width `h0`; widths double moving away.
pub fn graded_rule(a: f64, b: f64, s: f64, h0: f64, order: usize, out: &mut Vec<(f64, f64)>) {
    let g = gauss_legendre(order);
    let mut push = |lo: f64, hi: f64| {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for k in 0..g.x.len() {
            out.push((c + r * g.x[k], r * g.w[k]));
        }
    };
    let s = s.clamp(a, b);
    let h0 = h0.max(1e-300);
    for (dir, end) in [(1.0, b), (-1.0, a)] {
        let total = (end - s).abs();
        if total <= 0.0 {
            continue;
        }
        let mut lo = 0.0;
        let mut h = h0.min(total);
        while lo < total {
            let hi = (lo + h).min(total);
            // avoid a sliver at the end
            let hi = if total - hi < 0.5 * h { total } else { hi };
            let (p, q) = (s + dir * lo, s + dir * hi);
            push(p.min(q), p.max(q));
            lo = hi;
            h *= 2.0;
        }
    }
}

/// Barycentric Lagrange basis values at x for the rule's nodes, scaled to [-1,1].
pub fn lagrange_basis(rule: &GaussRule, x: f64, out: &mut [f64]) {
    let n = rule.x.len();
    for j in 0..n {
        if x == rule.x[j] {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut sum = 0.0;
    for j in 0..n {
        let t = rule.bary[j] / (x - rule.x[j]);
        out[j] = t;
        sum += t;
    }
    for v in out.iter_mut().take(n) {
        *v /= sum;
    }
}

/// Coefficients (descending, monic leading 1 omitted) of ∏(z - r).
pub fn poly_from_roots(roots: &[C]) -> Vec<C> {
    let mut c = vec![C::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C::new(0.0, 0.0); c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k] += a;
            next[k + 1] -= a * r;
        }
        c = next;
    }
    c[1..].to_vec()
}

/// Horner evaluation of the monic polynomial z^n + c1 z^{n-1} + … + cn.
pub fn eval_monic(coeffs: &[f64], z: C) -> C {
    coeffs.iter().fold(C::new(1.0, 0.0), |acc, &c| acc * z + c)
}

pub fn eval_monic_deriv(coeffs: &[f64], z: C) -> (C, C) {
    let mut p = C::new(1.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a real monic polynomial via companion eigenvalues plus Newton polish.
pub fn monic_roots(coeffs: &[f64]) -> Vec<C> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    let ev = m.complex_eigenvalues();
    ev.iter()
        .map(|&r0| {
            let mut r = r0;
            for _ in 0..3 {
                let (p, dp) = eval_monic_deriv(coeffs, r);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                let next = r - step;
                if eval_monic(coeffs, next).norm() < p.norm() {
                    r = next;
                } else {
                    break;
                }
            }
            r
        })
        .collect()
}

/// Group nearby roots; returns (mean, multiplicity), deterministic order.
pub fn cluster_roots(roots: &[C], tol: f64) -> Vec<(C, usize)> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![roots[i]];
        used[i] = true;
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() < tol {
                used[j] = true;
                members.push(roots[j]);
            }
        }
        let mean = members.iter().sum::<C>() / members.len() as f64;
        out.push((mean, members.len()));
    }
    out.sort_by(|a, b| {
        (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        let g = gauss_legendre(16);
        for p in 0..32 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let v: f64 = g.x.iter().zip(&g.w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((v - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn graded_rule_handles_log_singularity() {
        let mut r = Vec::new();
        graded_rule(0.0, 1.0, 0.3, 1e-14, 16, &mut r);
        let v: f64 = r.iter().map(|(x, w)| w * (x - 0.3f64).abs().ln()).sum();
        let exact = 0.3 * 0.3f64.ln() - 0.3 + 0.7 * 0.7f64.ln() - 0.7;
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn roots_round_trip() {
        let roots = [C::new(1.0, 2.0), C::new(1.0, -2.0), C::new(-0.5, 0.0), C::new(3.0, 0.0)];
        let c: Vec<f64> = poly_from_roots(&roots).iter().map(|z| z.re).collect();
        let mut got = monic_roots(&c);
        got.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let mut want = roots.to_vec();
        want.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn double_roots_cluster() {
        let c: Vec<f64> = poly_from_roots(&[C::new(0.5, 0.0); 2]).iter().map(|z| z.re).collect();
        let cl = cluster_roots(&monic_roots(&c), 1e-5);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].1, 2);
    }

    #[test]
    fn lagrange_basis_partition_of_unity() {
        let g = gauss_legendre(16);
        let mut b = vec![0.0; 16];
        lagrange_basis(g, 0.123, &mut b);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let v: f64 = b.iter().zip(&g.x).map(|(l, x)| l * x.powi(5)).sum();
        assert!((v - 0.123f64.powi(5)).abs() < 1e-14);
    }
}
