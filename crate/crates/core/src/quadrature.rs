//! Quadrature rules, sampled circles, winding numbers and moment-based root recovery.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest node count used on a single circle.
pub const MAX_CIRCLE_NODES: usize = 1 << 14;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(x, w)| (mid + half * x, half * w)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn point(&self, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, theta)
    }

    /// Node `j` of the `n`-point trapezoidal rule; nodes are nested under doubling.
    pub fn node(&self, j: usize, n: usize) -> Complex64 {
        self.point(2.0 * PI * j as f64 / n as f64)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Signed distance from `z` to the circle (positive outside).
    pub fn distance(&self, z: Complex64) -> f64 {
        (z - self.center).norm() - self.radius
    }
}

/// Function values at the trapezoidal nodes of a circle.
#[derive(Clone, Debug)]
pub struct CircleSamples<T> {
    pub circle: Circle,
    pub nodes: Vec<Complex64>,
    pub values: Vec<T>,
}

impl<T: Send> CircleSamples<T> {
    pub fn build<F>(circle: Circle, n: usize, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<T> + Sync,
    {
        assert!(n.is_power_of_two() && n >= 4);
        let nodes: Vec<Complex64> = (0..n).map(|j| circle.node(j, n)).collect();
        let values = nodes.par_iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        Ok(Self { circle, nodes, values })
    }

    /// Doubles the node count, evaluating `f` only at the new nodes.
    pub fn refine<F>(&mut self, f: F) -> Result<()>
    where
        F: Fn(Complex64) -> Result<T> + Sync,
    {
        let n = self.nodes.len();
        if 2 * n > MAX_CIRCLE_NODES {
            return Err(Error::Quadrature(format!(
                "node cap {MAX_CIRCLE_NODES} reached on circle |λ − {}| = {}",
                self.circle.center, self.circle.radius
            )));
        }
        let fresh: Vec<Complex64> = (0..n).map(|j| self.circle.node(2 * j + 1, 2 * n)).collect();
        let new_values = fresh.par_iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        let old_nodes = std::mem::take(&mut self.nodes);
        let old_values = std::mem::take(&mut self.values);
        for ((z0, v0), (z1, v1)) in old_nodes.into_iter().zip(old_values).zip(fresh.into_iter().zip(new_values)) {
            self.nodes.push(z0);
            self.values.push(v0);
            self.nodes.push(z1);
            self.values.push(v1);
        }
        Ok(())
    }
}

impl<T> CircleSamples<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∮ g dλ` by the trapezoidal rule at full and half resolution.
    pub fn integrate(&self, mut g: impl FnMut(Complex64, &T) -> Complex64) -> Estimate {
        let n = self.nodes.len();
        let mut full = Complex64::new(0.0, 0.0);
        let mut half = Complex64::new(0.0, 0.0);
        for (j, (z, v)) in self.nodes.iter().zip(&self.values).enumerate() {
            let term = g(*z, v) * (*z - self.circle.center);
            full += term;
            if j % 2 == 0 {
                half += term;
            }
        }
        let i2pi = Complex64::new(0.0, 2.0 * PI);
        Estimate {
            value: full * i2pi / n as f64,
            coarse: half * i2pi / (n / 2) as f64,
        }
    }
}

/// A quadrature value together with the value from half the nodes.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: Complex64,
    pub coarse: Complex64,
}

impl Estimate {
    pub fn difference(&self) -> f64 {
        (self.value - self.coarse).norm()
    }

    /// `|full − half| ≤ tol·(1 + |full|)`.
    pub fn converged(&self, tol: f64) -> bool {
        self.difference() <= tol * (1.0 + self.value.norm())
    }
}

/// Winding number of `f` around a sampled circle from values of `f` and `f'`.
///
/// Fails when `f` nearly vanishes at a node, judged locally by
/// `|f| ≤ 1e−10·(|f| + ρ|f'|)` with `ρ` the circle radius, or when the result is
/// not within `0.1` of an integer.
pub fn winding_number<T>(
    samples: &CircleSamples<T>,
    proj: impl Fn(&T) -> (Complex64, Complex64),
) -> Result<WindingCount> {
    let rho = samples.circle.radius;
    let worst = samples
        .values
        .iter()
        .map(|v| {
            let (f, df) = proj(v);
            f.norm() / (f.norm() + rho * df.norm())
        })
        .fold(f64::INFINITY, f64::min);
    if !(worst > 1e-10) {
        return Err(Error::Counting(format!(
            "function nearly vanishes on circle |λ − {}| = {} (local ratio {:.3e})",
            samples.circle.center, samples.circle.radius, worst
        )));
    }
    let est = samples.integrate(|_, v| {
        let (f, df) = proj(v);
        df / f
    });
    let w = est.value / Complex64::new(0.0, 2.0 * PI);
    let coarse = est.coarse / Complex64::new(0.0, 2.0 * PI);
    let count = w.re.round();
    let residual = (w - count).norm();
    Ok(WindingCount {
        count: count as i64,
        residual,
        agrees_with_coarse: (coarse - count).norm() <= 0.1,
        nodes: samples.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindingCount {
    pub count: i64,
    pub residual: f64,
    pub agrees_with_coarse: bool,
    pub nodes: usize,
}

impl WindingCount {
    pub fn is_certified(&self) -> bool {
        self.residual <= 0.1 && self.agrees_with_coarse
    }
}

/// Power sums `s_p = (1/2πi)∮ ((λ − c)/ρ)^p f'/f dλ` for `p = 0..=pmax`, with
/// `c`, `ρ` the centre and radius of the circle.
pub fn scaled_power_sums<T>(
    samples: &CircleSamples<T>,
    pmax: usize,
    proj: impl Fn(&T) -> (Complex64, Complex64),
) -> Vec<Complex64> {
    let c = samples.circle.center;
    let rho = samples.circle.radius;
    (0..=pmax)
        .map(|p| {
            let est = samples.integrate(|z, v| {
                let (f, df) = proj(v);
                ((z - c) / rho).powi(p as i32) * df / f
            });
            est.value / Complex64::new(0.0, 2.0 * PI)
        })
        .collect()
}

/// Roots of the monic polynomial whose root power sums are `s[1..=m]`.
pub fn roots_from_power_sums(s: &[Complex64], m: usize) -> Vec<Complex64> {
    assert!(s.len() > m);
    let mut e = vec![Complex64::new(0.0, 0.0); m + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=m {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * s[i] * sign;
        }
        e[k] = acc / k as f64;
    }
    // coefficients of z^m, z^{m-1}, ..., 1
    let coeffs: Vec<Complex64> = (0..=m)
        .map(|k| if k % 2 == 0 { e[k] } else { -e[k] })
        .collect();
    polynomial_roots(&coeffs)
}

/// Roots of `Σ c_k z^{m−k}` (leading coefficient first) by Aberth–Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let m = coeffs.len() - 1;
    if m == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let a: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    if m == 1 {
        return vec![-a[1]];
    }
    let bound = 1.0 + a[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(0.5 * bound, 2.0 * PI * (j as f64 + 0.25) / m as f64 + 0.4))
        .collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(1.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for c in &a[1..] {
            d = d * x + p;
            p = p * x + c;
        }
        (p, d)
    };
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..m {
            let (p, d) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / d;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..m {
                if j != i {
                    repulsion += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 8, 16, 31] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn trapezoid_on_circle_is_spectral() {
        let circle = Circle::new(Complex64::new(1.0, -0.5), 0.7);
        let s = CircleSamples::build(circle, 32, |z| Ok(z.exp() / (z - Complex64::new(1.2, -0.4)))).unwrap();
        let est = s.integrate(|_, v| *v);
        let exact = Complex64::new(0.0, 2.0 * PI) * Complex64::new(1.2, -0.4).exp();
        assert!((est.value - exact).norm() < 1e-13);
        assert!(est.converged(1e-6));
    }

    #[test]
    fn refine_keeps_nested_nodes() {
        let circle = Circle::new(Complex64::new(0.0, 0.0), 1.0);
        let mut s = CircleSamples::build(circle, 8, |z| Ok(z * z)).unwrap();
        s.refine(|z| Ok(z * z)).unwrap();
        assert_eq!(s.len(), 16);
        for (j, (z, v)) in s.nodes.iter().zip(&s.values).enumerate() {
            assert!((z - circle.node(j, 16)).norm() < 1e-15);
            assert!((v - z * z).norm() < 1e-15);
        }
    }

    #[test]
    fn winding_counts_enclosed_zeros() {
        let zeros = [Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.0), Complex64::new(2.0, 0.0)];
        let f = |z: Complex64| {
            let p: Complex64 = zeros.iter().map(|r| z - r).product();
            let dp: Complex64 = (0..3)
                .map(|i| (0..3).filter(|&j| j != i).map(|j| z - zeros[j]).product::<Complex64>())
                .sum();
            Ok((p, dp))
        };
        let s = CircleSamples::build(Circle::new(Complex64::new(0.0, 0.0), 1.0), 64, f).unwrap();
        let w = winding_number(&s, |v| *v).unwrap();
        assert_eq!(w.count, 2);
        assert!(w.is_certified());
        let sums = scaled_power_sums(&s, 2, |v| *v);
        let mut roots = roots_from_power_sums(&sums, 2);
        roots.sort_by(crate::lex_cmp);
        assert!((roots[0] - zeros[1]).norm() < 1e-12);
        assert!((roots[1] - zeros[0]).norm() < 1e-12);
    }

    #[test]
    fn aberth_finds_clustered_roots() {
        let r = [1.0, 1.0 + 1e-3, -2.0, 0.5];
        let roots_expected: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for root in &roots_expected {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * root;
            }
            poly = next;
        }
        let mut got = polynomial_roots(&poly);
        got.sort_by(crate::lex_cmp);
        let mut want = roots_expected.clone();
        want.sort_by(crate::lex_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g.re, w.re, epsilon = 1e-9);
            assert!(g.im.abs() < 1e-9);
        }
    }
}
