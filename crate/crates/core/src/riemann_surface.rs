//! Canonical square root of `Δ² − 4`, A-cycle contours `Γ_k` and their periods.
//!
//! The canonical root is `√c(λ) = 2i ∏_k √s_k(λ)/π_k` with the standard roots
//! `√s_k(λ) = √((λ − λ⁻_k)(λ − λ⁺_k)) ~ −λ` cut along the segments
//! `G_k = [λ⁻_k, λ⁺_k]`. Its modulus is taken from the integrated `Δ² − 4`; the
//! truncated product (with the zero-potential factors standing in for the tail)
//! only selects the sign, and every selection is certified by the ratio
//! `|w − P| / |w + P|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::{DiscSample, Discriminant};
use crate::error::{Error, Result};
use crate::index::ZVec;
use crate::pi_k;
use crate::quadrature::{Circle, CircleSamples, Estimate, MAX_CIRCLE_NODES};
use crate::spectrum::PeriodicSpectrum;

/// Radius of the outer A-cycle contours `Γ_k = ∂D_k(π/4)`.
pub const CONTOUR_RADIUS: f64 = PI / 4.0;
/// Points closer than this to a cut are rejected.
pub const CUT_EXCLUSION: f64 = 1e-10;
/// Largest accepted `|w − P| / |w + P|` when choosing the sign of the root.
const SIGN_RATIO_MAX: f64 = 0.25;
/// Inner contours have radius `h_k + INNER_MARGIN·d_k`, `d_k` the free space around `G_k`.
const INNER_MARGIN: f64 = 0.4;

/// `√((λ − a)(λ − b))` with asymptotics `−λ`, cut along `[a, b]`.
pub fn standard_root(a: Complex64, b: Complex64, lambda: Complex64) -> Complex64 {
    let tau = (a + b) * 0.5;
    let h = (b - a) * 0.5;
    let u = lambda - tau;
    if h == Complex64::new(0.0, 0.0) {
        return -u;
    }
    if u == Complex64::new(0.0, 0.0) {
        // midpoint of the cut: limit from either side, sign is immaterial here
        return Complex64::i() * h;
    }
    let q = h / u;
    -u * (Complex64::new(1.0, 0.0) - q * q).sqrt()
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    (z - (a + d * t.clamp(0.0, 1.0))).norm()
}

fn segments_intersect(p: Complex64, q: Complex64, a: Complex64, b: Complex64) -> bool {
    let cross = |o: Complex64, u: Complex64, v: Complex64| ((u - o).conj() * (v - o)).im;
    let d1 = cross(a, b, p);
    let d2 = cross(a, b, q);
    let d3 = cross(p, q, a);
    let d4 = cross(p, q, b);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// `∏_{k > K'} (1 − λ²/(k²π²))`, evaluated without cancellation near `λ = jπ`.
fn zero_potential_tail(lambda: Complex64, kp: i64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let j = (lambda.re / PI).round() as i64;
    let factor = |k: i64| one - lambda * lambda / ((k * k) as f64 * PI * PI);
    let sinc = |u: Complex64| if u.norm() < 1e-8 { one - u * u / 6.0 } else { u.sin() / u };
    let (num, skip) = if j == 0 {
        (sinc(lambda), None)
    } else if j.abs() <= kp {
        let u = lambda - j as f64 * PI;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let jp = j.abs() as f64 * PI;
        // sin λ / (1 − λ²/j²π²) = (−1)^{j+1} sinc(u)·j²π²/(jπ + λ)
        let val = sinc(u) * sign * (jp * jp) / (j as f64 * PI + lambda) / lambda;
        (val, Some(j.abs()))
    } else {
        (lambda.sin() / lambda, None)
    };
    let mut den = one;
    for k in 1..=kp {
        if Some(k) != skip {
            den *= factor(k);
        }
    }
    num / den
}

/// Evaluator of the canonical root for one spectrum.
#[derive(Clone, Debug)]
pub struct CanonicalRoot {
    minus: Vec<Complex64>,
    plus: Vec<Complex64>,
    kmax: i64,
}

impl CanonicalRoot {
    pub fn new(spec: &PeriodicSpectrum) -> Self {
        Self {
            minus: spec.lambda_minus.values().to_vec(),
            plus: spec.lambda_plus.values().to_vec(),
            kmax: spec.kmax,
        }
    }

    fn pair(&self, k: i64) -> (Complex64, Complex64) {
        let i = (k + self.kmax) as usize;
        (self.minus[i], self.plus[i])
    }

    /// Distance from `λ` to the nearest cut `G_k`, `|k| ≤ K`.
    pub fn distance_to_cuts(&self, lambda: Complex64) -> f64 {
        (-self.kmax..=self.kmax)
            .map(|k| {
                let (a, b) = self.pair(k);
                segment_distance(a, b, lambda)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Truncated product `2i ∏_{|k|≤K} √s_k/π_k` times the zero-potential tail.
    pub fn product(&self, lambda: Complex64) -> Complex64 {
        let mut p = Complex64::new(0.0, 2.0) * zero_potential_tail(lambda, self.kmax);
        for k in -self.kmax..=self.kmax {
            let (a, b) = self.pair(k);
            p *= standard_root(a, b, lambda) / pi_k(k);
        }
        p
    }

    /// Sign-certified canonical root from the integrated discriminant.
    pub fn from_sample(&self, s: &DiscSample) -> Result<Complex64> {
        let lambda = s.lambda;
        if self.distance_to_cuts(lambda) < CUT_EXCLUSION {
            return Err(Error::Branch(format!("λ = {lambda} lies on a cut")));
        }
        let w = s.char_value().sqrt();
        let p = self.product(lambda);
        let (plus, minus) = ((w - p).norm(), (w + p).norm());
        let (value, ratio) = if plus <= minus { (w, plus / minus) } else { (-w, minus / plus) };
        if !(ratio <= SIGN_RATIO_MAX) {
            return Err(Error::Branch(format!(
                "sign of the root at λ = {lambda} is ambiguous (ratio {ratio:.3e})"
            )));
        }
        Ok(value)
    }

    pub fn eval(&self, disc: &Discriminant, lambda: Complex64) -> Result<Complex64> {
        self.from_sample(&disc.sample(lambda)?)
    }

    /// Continues a root of `Δ² − 4` along a polyline by continuity, starting
    /// from the canonical value at `path[0]`. Returns the values at the vertices.
    /// Paths may not cross a cut.
    pub fn continue_along(&self, disc: &Discriminant, path: &[Complex64]) -> Result<Vec<Complex64>> {
        let Some(&start) = path.first() else {
            return Ok(Vec::new());
        };
        for w in path.windows(2) {
            for k in -self.kmax..=self.kmax {
                let (a, b) = self.pair(k);
                if segments_intersect(w[0], w[1], a, b) {
                    return Err(Error::Branch(format!("path segment {} → {} crosses cut G_{k}", w[0], w[1])));
                }
            }
        }
        let mut out = vec![self.eval(disc, start)?];
        let mut current = out[0];
        for w in path.windows(2) {
            current = continue_segment(disc, w[0], w[1], current, 0)?;
            out.push(current);
        }
        Ok(out)
    }
}

fn continue_segment(
    disc: &Discriminant,
    a: Complex64,
    b: Complex64,
    wa: Complex64,
    depth: usize,
) -> Result<Complex64> {
    let n = 16;
    let mut prev = wa;
    for j in 1..=n {
        let z = a + (b - a) * (j as f64 / n as f64);
        let r = disc.char_function(z)?.sqrt();
        let (near, far) = if (r - prev).norm() <= (r + prev).norm() { (r, -r) } else { (-r, r) };
        if (near - prev).norm() > 0.5 * (far - prev).norm() {
            if depth >= 12 {
                return Err(Error::Branch(format!("continuation stalled near {z}")));
            }
            let za = a + (b - a) * ((j - 1) as f64 / n as f64);
            prev = continue_segment(disc, za, z, prev, depth + 1)?;
            continue;
        }
        prev = near;
    }
    Ok(prev)
}

/// Discriminant data and canonical root at one contour node.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NodeData {
    pub sample: DiscSample,
    pub root: Complex64,
}

impl NodeData {
    /// `Δ̇/√c`.
    pub fn omega_star(&self) -> Complex64 {
        self.sample.d1 / self.root
    }
}

/// The contours `Γ_k`, `|k| ≤ K`, sampled at trapezoidal nodes.
#[derive(Clone, Debug)]
pub struct ContourSystem {
    pub n0: i64,
    pub quad_tol: f64,
    pub contours: ZVec<CircleSamples<NodeData>>,
}

/// Geometry of `Γ_k` for every `|k| ≤ K`.
pub fn contour_circles(spec: &PeriodicSpectrum) -> Result<ZVec<Circle>> {
    let kmax = spec.kmax;
    let circles = ZVec::try_from_fn(kmax, |k| {
        if k.abs() >= spec.n0 {
            return Ok(Circle::new(Complex64::new(k as f64 * PI, 0.0), CONTOUR_RADIUS));
        }
        let tau = spec.tau(k);
        let h = 0.5 * spec.gamma(k).norm();
        // free space between the disk spanned by G_k and the disks spanned by
        // the other inner cuts or occupied by the outer contours
        let d = (-kmax..=kmax)
            .filter(|&j| j != k)
            .map(|j| {
                if j.abs() >= spec.n0 {
                    (tau - Complex64::new(j as f64 * PI, 0.0)).norm() - h - CONTOUR_RADIUS
                } else {
                    (tau - spec.tau(j)).norm() - h - 0.5 * spec.gamma(j).norm()
                }
            })
            .fold(f64::INFINITY, f64::min);
        if !(d > 0.0) {
            return Err(Error::Contour(format!(
                "cut G_{k} cannot be separated from the other cuts by a circle about its midpoint"
            )));
        }
        Ok(Circle::new(tau, h + INNER_MARGIN * d))
    })?;
    for k in -kmax..=kmax {
        for j in (k + 1)..=kmax {
            let (a, b) = (circles[k], circles[j]);
            if (a.center - b.center).norm() <= a.radius + b.radius {
                return Err(Error::Contour(format!("contours Γ_{k} and Γ_{j} intersect")));
            }
        }
        let c = circles[k];
        for j in -kmax..=kmax {
            let inside = [spec.lambda_minus[j], spec.lambda_plus[j]].iter().filter(|z| c.contains(**z)).count();
            let expected = if j == k { 2 } else { 0 };
            if inside != expected {
                return Err(Error::Contour(format!("Γ_{k} encloses the wrong eigenvalues (pair {j})")));
            }
        }
    }
    Ok(circles)
}

impl ContourSystem {
    /// Samples every `Γ_k` and refines each until the period of `Ω*` and the
    /// probes `Δ̇/((λ − λ̇_j)√c)` for nearby critical points converge to `quad_tol`.
    pub fn build(disc: &Discriminant, spec: &PeriodicSpectrum, root: &CanonicalRoot, quad_tol: f64) -> Result<Self> {
        let circles = contour_circles(spec)?;
        let eval = |z: Complex64| -> Result<NodeData> {
            let sample = disc.sample(z)?;
            Ok(NodeData {
                root: root.from_sample(&sample)?,
                sample,
            })
        };
        let contours = ZVec::try_from_fn(spec.kmax, |k| {
            let circle = circles[k];
            let n = if k.abs() >= spec.n0 { 64 } else { 128 };
            let mut samples = CircleSamples::build(circle, n, eval)?;
            let poles: Vec<Complex64> = spec
                .critical
                .values()
                .iter()
                .copied()
                .filter(|p| (p - circle.center).norm() < 3.0 * circle.radius)
                .collect();
            loop {
                let mut ok = samples.integrate(|_, v| v.omega_star()).converged(quad_tol);
                for p in &poles {
                    ok &= samples.integrate(|z, v| v.omega_star() / (z - p)).converged(quad_tol);
                }
                if ok {
                    break;
                }
                if samples.len() >= MAX_CIRCLE_NODES {
                    return Err(Error::Quadrature(format!("Γ_{k} did not converge")));
                }
                samples.refine(eval)?;
            }
            check_root_continuity(&samples, k)?;
            Ok(samples)
        })?;
        Ok(Self {
            n0: spec.n0,
            quad_tol,
            contours,
        })
    }

    pub fn kmax(&self) -> i64 {
        self.contours.kmax()
    }

    pub fn contour(&self, k: i64) -> &CircleSamples<NodeData> {
        &self.contours[k]
    }

    /// `∮_{Γ_k} g(λ, node) dλ`.
    pub fn integrate(&self, k: i64, g: impl FnMut(Complex64, &NodeData) -> Complex64) -> Estimate {
        self.contours[k].integrate(g)
    }

    /// Periods `∮_{Γ_k} Δ̇/√c dλ` of `Ω*` for every `|k| ≤ K`.
    pub fn omega_star_periods(&self) -> ZVec<Complex64> {
        self.contours.map(|k, _| self.integrate(k, |_, v| v.omega_star()).value)
    }
}

fn check_root_continuity(samples: &CircleSamples<NodeData>, k: i64) -> Result<()> {
    let n = samples.len();
    for j in 0..n {
        let a = samples.values[j].root;
        let b = samples.values[(j + 1) % n].root;
        if (a - b).norm() >= (a + b).norm() {
            return Err(Error::Branch(format!("canonical root jumps between nodes {j} and {} on Γ_{k}", (j + 1) % n)));
        }
    }
    Ok(())
}

/// Classification of the `Ω*` periods.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaStarCheck {
    pub periods: ZVec<Complex64>,
    /// `max_{|k| ≥ N₀} |period|`.
    pub outer_max: f64,
    /// `max_{|k| < N₀} dist(period / 2πi, ℤ)` scaled back by `2π`.
    pub inner_max_defect: f64,
    /// Integers `period / 2πi` for `|k| < N₀`.
    pub inner_integers: Vec<(i64, i64)>,
}

pub fn check_omega_star(system: &ContourSystem) -> OmegaStarCheck {
    let periods = system.omega_star_periods();
    let n0 = system.n0;
    let outer_max = periods
        .iter()
        .filter(|(k, _)| k.abs() >= n0)
        .map(|(_, p)| p.norm())
        .fold(0.0, f64::max);
    let mut inner_max_defect: f64 = 0.0;
    let mut inner_integers = Vec::new();
    for (k, p) in periods.iter().filter(|(k, _)| k.abs() < n0) {
        let q = p / Complex64::new(0.0, 2.0 * PI);
        let m = q.re.round();
        inner_max_defect = inner_max_defect.max((q - m).norm() * 2.0 * PI);
        inner_integers.push((k, m as i64));
    }
    OmegaStarCheck {
        periods,
        outer_max,
        inner_max_defect,
        inner_integers,
    }
}
