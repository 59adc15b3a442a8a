//! Zeros `σ_k` of the numerators `ζ_n`, their asymptotics, the product
//! representation and the vanishing of `ζ_n` at double points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::DiscSample;
use crate::error::{Error, Result};
use crate::normalization::{DifferentialBasisElement, Numerator, Target};
use crate::quadrature::{roots_from_power_sums, scaled_power_sums, winding_number, Circle, CircleSamples, WindingCount};
use crate::riemann_surface::{ContourSystem, NodeData, CONTOUR_RADIUS};
use crate::spectrum::PeriodicSpectrum;
use crate::{lex_cmp, pi_k};

/// Residual certificate `|ζ(σ)| ≤ ZERO_RESIDUAL·max_Γ|ζ|`.
pub const ZERO_RESIDUAL: f64 = 1e-9;
/// Gaps below this size are treated as collapsed in the `c_k` ratios.
pub const GAP_FLOOR: f64 = 1e-4;
/// Tolerance for `|σ_k − τ_k|` on collapsed gaps.
pub const COLLAPSED_TOL: f64 = 1e-8;
const MAX_CENTRAL_NODES: usize = 8192;

/// How a zero was located.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Logarithmic integral of `1 − η` around `Γ_m`.
    Logarithm,
    /// Moments of `ζ'/ζ` on a circle.
    Moments,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub k: i64,
    pub sigma: Complex64,
    pub method: ZeroMethod,
    /// `|ζ(σ)|/scale` after the Newton polish.
    pub residual: f64,
    pub scale: f64,
}

impl ZeroRecord {
    pub fn is_certified(&self) -> bool {
        self.residual <= ZERO_RESIDUAL
    }
}

/// Zeros of one `ζ_n` with the data used to certify them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSet {
    pub target: Target,
    pub k: i64,
    /// Threshold beyond which each `Γ_m` carries exactly one zero (none on `Γ_n`).
    pub threshold: i64,
    pub zeros: BTreeMap<i64, ZeroRecord>,
    /// Windings of `ζ` on `Γ_m` for `threshold < |m| ≤ K`.
    pub windings: BTreeMap<i64, WindingCount>,
    /// Zeros in `|λ| < threshold·π + π/4`.
    pub inner_count: i64,
    pub inner_winding: WindingCount,
}

impl ZeroSet {
    pub fn sigma(&self, k: i64) -> Option<Complex64> {
        self.zeros.get(&k).map(|z| z.sigma)
    }

    /// Expected zero count in the central disk.
    pub fn expected_inner_count(target: Target, threshold: i64) -> i64 {
        match target {
            Target::Index(n) if n.abs() <= threshold => 2 * threshold,
            _ => 2 * threshold + 1,
        }
    }

    pub fn all_certified(&self) -> bool {
        self.zeros.values().all(ZeroRecord::is_certified)
            && self.windings.values().all(WindingCount::is_certified)
            && self.inner_winding.is_certified()
            && self.inner_count == Self::expected_inner_count(self.target, self.threshold)
    }

    pub fn max_residual(&self) -> f64 {
        self.zeros.values().map(|z| z.residual).fold(0.0, f64::max)
    }
}

fn expected_winding(target: Target, m: i64) -> i64 {
    match target {
        Target::Index(n) if n == m => 0,
        _ => 1,
    }
}

fn node_value(zeta: &Numerator, v: &NodeData) -> Result<(Complex64, Complex64)> {
    zeta.value_and_derivative(&v.sample)
}

fn contour_winding(zeta: &Numerator, contour: &CircleSamples<NodeData>) -> Result<WindingCount> {
    let vals = contour
        .values
        .iter()
        .map(|v| node_value(zeta, v))
        .collect::<Result<Vec<_>>>()?;
    let tmp = CircleSamples {
        circle: contour.circle,
        nodes: contour.nodes.clone(),
        values: vals,
    };
    winding_number(&tmp, |&(f, df)| (f, df))
}

fn polish(zeta: &Numerator, sigma: Complex64) -> Result<(Complex64, Complex64)> {
    let f = zeta.eval(sigma)?;
    let df = zeta.derivative(sigma)?;
    if df.norm() > 0.0 {
        let next = sigma - f / df;
        let fnext = zeta.eval(next)?;
        if fnext.norm() <= f.norm() {
            return Ok((next, fnext));
        }
    }
    Ok((sigma, f))
}

/// `σ_m = λ̇_m − (1/2πi)∮ log(1 − η)`, where `1 − η = (ζ/Δ̇)/h₀`; `None` when `sup|η| ≥ 1`.
fn sigma_by_logarithm(element: &DifferentialBasisElement, spec: &PeriodicSpectrum, contour: &CircleSamples<NodeData>, m: i64) -> Option<Complex64> {
    let h0 = &element.layout.h0;
    let mut sup: f64 = 0.0;
    let est = contour.integrate(|z, _| {
        let one_minus_eta = element.zeta.rational(z) / h0.eval(z);
        sup = sup.max((1.0 - one_minus_eta).norm());
        one_minus_eta.ln()
    });
    (sup < 1.0).then(|| spec.critical[m] - est.value / Complex64::new(0.0, 2.0 * PI))
}

fn sigma_by_moments(zeta: &Numerator, contour: &CircleSamples<NodeData>) -> Result<Complex64> {
    let vals = contour
        .values
        .iter()
        .map(|v| node_value(zeta, v))
        .collect::<Result<Vec<_>>>()?;
    let mut it = vals.iter();
    let s0 = contour.integrate(|_, _| {
        let (f, df) = it.next().expect("one value per node");
        df / f
    });
    let mut it = vals.iter();
    let s1 = contour.integrate(|z, _| {
        let (f, df) = it.next().expect("one value per node");
        z * df / f
    });
    Ok(s1.value / s0.value)
}

/// `σ_m` for an outer contour `Γ_m` carrying exactly one zero.
pub fn sigma_extract(element: &DifferentialBasisElement, spec: &PeriodicSpectrum, contours: &ContourSystem, m: i64) -> Result<ZeroRecord> {
    let contour = contours.contour(m);
    let (seed, method) = match sigma_by_logarithm(element, spec, contour, m) {
        Some(s) => (s, ZeroMethod::Logarithm),
        None => (sigma_by_moments(&element.zeta, contour)?, ZeroMethod::Moments),
    };
    let (sigma, f) = polish(&element.zeta, seed)?;
    let scale = contour
        .values
        .iter()
        .map(|v| element.zeta.eval_node(v).map(|z| z.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ZeroRecord {
        k: m,
        sigma,
        method,
        residual: f.norm() / scale,
        scale,
    })
}

/// Samples `ζ` on `|λ| = r`, refining until the winding and the power sums settle.
fn central_samples(zeta: &Numerator, r: f64) -> Result<(CircleSamples<DiscSample>, WindingCount)> {
    let disc = zeta.discriminant();
    let circle = Circle::new(Complex64::new(0.0, 0.0), r);
    let n0 = (16.0 * r).max(128.0) as usize;
    let mut samples = CircleSamples::build(circle, n0.next_power_of_two(), |z| disc.sample(z))?;
    loop {
        let proj = |s: &DiscSample| zeta.value_and_derivative(s).unwrap_or((Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)));
        let w = winding_number(&samples, proj);
        if let Ok(w) = &w {
            if w.is_certified() && w.residual < 1e-6 {
                return Ok((samples, *w));
            }
        }
        if samples.len() >= MAX_CENTRAL_NODES {
            return match w {
                Ok(w) => Ok((samples, w)),
                Err(e) => Err(e),
            };
        }
        samples.refine(|z| disc.sample(z))?;
    }
}

fn inner_zeros(zeta: &Numerator, samples: &CircleSamples<DiscSample>, count: usize) -> Result<Vec<(Complex64, f64)>> {
    let proj = |s: &DiscSample| zeta.value_and_derivative(s).unwrap_or((Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)));
    let sums = scaled_power_sums(samples, count, proj);
    let c = samples.circle.center;
    let rho = samples.circle.radius;
    let scale = samples
        .values
        .iter()
        .map(|s| zeta.eval_sample(s).map(|z| z.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = roots_from_power_sums(&sums, count).into_iter().map(|w| c + w * rho).collect();
    // deflated Newton: each root is corrected against the others held fixed
    for _ in 0..8 {
        let mut moved: f64 = 0.0;
        for i in 0..roots.len() {
            let z = roots[i];
            let f = zeta.eval(z)?;
            let df = zeta.derivative(z)?;
            let defl: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, r)| j != i && (z - r).norm() > 1e-12)
                .map(|(_, r)| 1.0 / (z - r))
                .sum();
            let denom = df - f * defl;
            if denom.norm() == 0.0 {
                continue;
            }
            let step = f / denom;
            let cand = z - step;
            if zeta.eval(cand)?.norm() <= f.norm() {
                roots[i] = cand;
                moved = moved.max(step.norm());
            }
        }
        if moved <= 1e-14 * (1.0 + rho) {
            break;
        }
    }
    roots.sort_by(lex_cmp);
    roots
        .into_iter()
        .map(|z| Ok((z, zeta.eval(z)?.norm() / scale)))
        .collect()
}

/// Counts and extracts the zeros of `ζ` for `|k| ≤ K`.
pub fn zero_set(element: &DifferentialBasisElement, spec: &PeriodicSpectrum, contours: &ContourSystem) -> Result<ZeroSet> {
    let k = element.layout.k;
    let n0 = spec.n0;
    let target = element.target;
    let mut windings = BTreeMap::new();
    let mut threshold = n0;
    for m in (n0 + 1)..=k {
        for mm in [-m, m] {
            let w = contour_winding(&element.zeta, contours.contour(mm));
            let ok = matches!(&w, Ok(w) if w.is_certified() && w.count == expected_winding(target, mm));
            if !ok {
                threshold = threshold.max(m);
            }
            if let Ok(w) = w {
                windings.insert(mm, w);
            }
        }
    }
    windings.retain(|m, _| m.abs() > threshold);
    let (inner_count, inner_winding, samples) = loop {
        if threshold >= k {
            return Err(Error::Zeros(format!("no zero-count threshold below K = {k} for n = {target}")));
        }
        let r = threshold as f64 * PI + CONTOUR_RADIUS;
        let (samples, w) = central_samples(&element.zeta, r)?;
        if w.is_certified() && w.count == ZeroSet::expected_inner_count(target, threshold) {
            break (w.count, w, samples);
        }
        threshold += 1;
        windings.retain(|m, _| m.abs() > threshold);
    };
    let mut zeros = BTreeMap::new();
    let inner_slots: Vec<i64> = (-threshold..=threshold)
        .filter(|&m| expected_winding(target, m) == 1)
        .collect();
    let scale_r = inner_zeros(&element.zeta, &samples, inner_count as usize)?;
    for (slot, (sigma, residual)) in inner_slots.iter().zip(scale_r) {
        let scale = samples
            .values
            .iter()
            .map(|s| element.zeta.eval_sample(s).map(|z| z.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        zeros.insert(
            *slot,
            ZeroRecord {
                k: *slot,
                sigma,
                method: ZeroMethod::Moments,
                residual,
                scale,
            },
        );
    }
    for m in (threshold + 1)..=k {
        for mm in [-m, m] {
            if expected_winding(target, mm) == 1 {
                zeros.insert(mm, sigma_extract(element, spec, contours, mm)?);
            }
        }
    }
    Ok(ZeroSet {
        target,
        k,
        threshold,
        zeros,
        windings,
        inner_count,
        inner_winding,
    })
}

/// `c_k = |σ_k − τ_k|/|γ_k|²` and the collapsed-gap check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    /// `(k, c_k)` for gaps with `|γ_k| ≥ GAP_FLOOR`.
    pub ratios: Vec<(i64, f64)>,
    /// `(k, |σ_k − τ_k|)` for collapsed gaps.
    pub collapsed: Vec<(i64, f64)>,
    /// `Σ_{threshold < |k| ≤ K} c_k²`.
    pub tail_sum: f64,
    pub collapsed_ok: bool,
}

pub fn verify_sigma_asymptotics(zs: &ZeroSet, spec: &PeriodicSpectrum) -> AsymptoticsReport {
    let mut ratios = Vec::new();
    let mut collapsed = Vec::new();
    for (&k, z) in &zs.zeros {
        let gap = spec.gamma(k).norm();
        let dist = (z.sigma - spec.tau(k)).norm();
        if gap >= GAP_FLOOR {
            ratios.push((k, dist / (gap * gap)));
        } else {
            collapsed.push((k, dist));
        }
    }
    let tail_sum = ratios
        .iter()
        .filter(|(k, _)| k.abs() > zs.threshold)
        .map(|(_, c)| c * c)
        .sum();
    let collapsed_ok = collapsed.iter().all(|&(k, d)| {
        let gap = spec.gamma(k).norm();
        d <= COLLAPSED_TOL + gap * gap
    });
    AsymptoticsReport {
        ratios,
        collapsed,
        tail_sum,
        collapsed_ok,
    }
}

/// Leading behaviour `−2 sin λ·h₀⁰(λ)` at zero potential, with `h₀⁰ = 1/(λ − nπ)` or `1`.
pub fn unperturbed_numerator(target: Target, lambda: Complex64) -> Complex64 {
    match target {
        Target::Star => -2.0 * lambda.sin(),
        Target::Index(n) => {
            let u = lambda - n as f64 * PI;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let sinc = if u.norm() < 1e-4 {
                1.0 - u * u / 6.0
            } else {
                u.sin() / u
            };
            -2.0 * sign * sinc
        }
    }
}

/// `ζ(λ)` from its zeros: the zero-potential numerator times `∏(σ_k − λ)/(kπ − λ)` over `|k| ≤ K`,
/// taking the factors for `k` and `−k` together.
pub fn product_reconstruction(zs: &ZeroSet, lambda: Complex64) -> Complex64 {
    let factor = |k: i64| -> Complex64 {
        match zs.sigma(k) {
            Some(s) => {
                let base = Complex64::new(k as f64 * PI, 0.0);
                let d = base - lambda;
                if d.norm() < 1e-12 {
                    // removable: the unperturbed numerator vanishes at kπ
                    Complex64::new(f64::NAN, 0.0)
                } else {
                    (s - lambda) / d
                }
            }
            None => Complex64::new(1.0, 0.0),
        }
    };
    let mut acc = unperturbed_numerator(zs.target, lambda) * factor(0);
    for k in 1..=zs.k {
        acc *= factor(k) * factor(-k);
    }
    acc
}

/// The product in the form `−(2/π_n)∏_{k≠n}(σ_k − λ)/π_k` over `|k| ≤ K` only.
pub fn truncated_product(zs: &ZeroSet, lambda: Complex64) -> Complex64 {
    let lead = match zs.target {
        Target::Index(n) => -2.0 / pi_k(n),
        Target::Star => -2.0,
    };
    let mut acc = Complex64::new(lead, 0.0);
    if let Some(s) = zs.sigma(0) {
        acc *= s - lambda;
    }
    for k in 1..=zs.k {
        for kk in [k, -k] {
            if let Some(s) = zs.sigma(kk) {
                acc *= (s - lambda) / pi_k(kk);
            }
        }
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingReport {
    pub target: Target,
    /// `(k, |ζ(τ_k)|/scale)` for double points `k ≠ n`.
    pub at_doubles: Vec<(i64, f64)>,
    /// `|ζ_n(τ_n)|/scale` when `n` is double.
    pub at_own: Option<f64>,
    pub passed: bool,
}

fn contour_scale(zeta: &Numerator, contour: &CircleSamples<NodeData>) -> Result<f64> {
    Ok(contour
        .values
        .iter()
        .map(|v| zeta.eval_node(v).map(|z| z.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max))
}

/// `ζ_n` vanishes at the double points other than `τ_n` and not at `τ_n`.
pub fn double_point_vanishing_check(element: &DifferentialBasisElement, spec: &PeriodicSpectrum, contours: &ContourSystem) -> Result<VanishingReport> {
    let own = element.n();
    let kmax = contours.kmax().min(spec.kmax);
    let mut at_doubles = Vec::new();
    let mut at_own = None;
    for k in -kmax..=kmax {
        if !spec.is_double(k) {
            continue;
        }
        let scale = contour_scale(&element.zeta, contours.contour(k))?;
        let rel = element.zeta.eval(spec.tau(k))?.norm() / scale;
        if Some(k) == own {
            at_own = Some(rel);
        } else {
            at_doubles.push((k, rel));
        }
    }
    let passed = at_doubles.iter().all(|&(_, r)| r <= 1e-8) && at_own.is_none_or(|r| r >= 1e-4);
    Ok(VanishingReport {
        target: element.target,
        at_doubles,
        at_own,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::{Discriminant, DEFAULT_ODE_TOL};
    use crate::potential::Potential;
    use crate::riemann_surface::CanonicalRoot;
    use crate::spectrum::{compute_spectrum, SpectrumOptions};

    fn setup(phi: Potential, kmax: i64) -> (Discriminant, PeriodicSpectrum, ContourSystem) {
        let disc = Discriminant::new(phi, DEFAULT_ODE_TOL);
        let spec = compute_spectrum(&disc, &SpectrumOptions::new(kmax)).unwrap();
        let root = CanonicalRoot::new(&spec);
        let sys = ContourSystem::build(&disc, &spec, &root, 1e-10).unwrap();
        (disc, spec, sys)
    }

    #[test]
    fn zero_potential_zeros_are_multiples_of_pi() {
        let (disc, spec, sys) = setup(Potential::zero(), 16);
        for n in [-2i64, 0, 3] {
            let el = DifferentialBasisElement::new(&disc, &sys, &spec, Target::Index(n), 8).unwrap();
            let zs = zero_set(&el, &spec, &sys).unwrap();
            assert!(zs.all_certified(), "n = {n}: {zs:?}");
            assert_eq!(zs.zeros.len(), 16);
            for (&k, z) in &zs.zeros {
                assert_ne!(k, n);
                assert!((z.sigma - k as f64 * PI).norm() < 1e-9, "n = {n}, k = {k}: {}", z.sigma);
            }
            let lam = Complex64::new(PI / 2.0, 0.0);
            let direct = el.zeta.eval(lam).unwrap();
            let prod = product_reconstruction(&zs, lam);
            assert!((prod - direct).norm() < 1e-9 * direct.norm());
            let rep = double_point_vanishing_check(&el, &spec, &sys).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn truncated_product_tends_to_sine() {
        let (disc, spec, sys) = setup(Potential::zero(), 16);
        let el = DifferentialBasisElement::new(&disc, &sys, &spec, Target::Index(1), 16).unwrap();
        let zs = zero_set(&el, &spec, &sys).unwrap();
        let lam = Complex64::new(PI / 2.0, 0.0);
        let expect = unperturbed_numerator(Target::Index(1), lam);
        assert!((truncated_product(&zs, lam) - expect).norm() < 0.05 * expect.norm());
    }

    #[test]
    fn focusing_constant_double_points() {
        let phi = Potential::constant(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0));
        let (disc, spec, sys) = setup(phi, 12);
        for n in [0i64, 3] {
            let el = DifferentialBasisElement::new(&disc, &sys, &spec, Target::Index(n), 6).unwrap();
            let zs = zero_set(&el, &spec, &sys).unwrap();
            assert!(zs.all_certified(), "n = {n}: {zs:?}");
            let rep = verify_sigma_asymptotics(&zs, &spec);
            assert!(rep.collapsed_ok, "{rep:?}");
            assert!(double_point_vanishing_check(&el, &spec, &sys).unwrap().passed);
        }
    }
}
