//! Growth functional `V(r) = 2∬_{|λ|≤r} |ζ/√(Δ² − 4)|² dA` and the vanishing
//! hypotheses of a form `ζ dλ/√c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalization::{a_periods, Numerator};
use crate::quadrature::gauss_legendre_on;
use crate::riemann_surface::ContourSystem;
use crate::spectrum::PeriodicSpectrum;

/// Radial panels within this distance of an eigenvalue modulus are refined.
pub const BAND_WIDTH: f64 = 0.1;
const BAND_LEVELS: usize = 6;
const RADIAL_ORDER: usize = 8;
const MIN_ANGULAR_NODES: usize = 64;
const MAX_ANGULAR_NODES: usize = 1 << 16;
const NOISE_FLOOR: f64 = 1e-6;
/// Circles closer than this to a simple eigenvalue modulus use graded panels.
const GRADED_ZONE: f64 = 0.5;
const GRADED_ORDER: usize = 16;

/// `|ζ|²/|Δ² − 4|`, written as `|ζ/Δ|²/|1 − 4/Δ²|` when `|Δ|` is large.
pub fn density(zeta: &Numerator, lambda: Complex64) -> Result<f64> {
    let s = zeta.discriminant().sample(lambda)?;
    let z = zeta.eval_sample(&s)?;
    if s.delta.norm() > 1e3 {
        let q = z / s.delta;
        Ok(q.norm_sqr() / (1.0 - 4.0 / (s.delta * s.delta)).norm())
    } else {
        Ok(z.norm_sqr() / s.char_value().norm())
    }
}

/// `∫₀^{2π} g(ρe^{iθ}) dθ`. Circles passing near a simple eigenvalue use
/// Gauss–Legendre panels graded towards its argument; others use the
/// trapezoidal rule at half-integer angles, doubled until converged.
fn angular_integral(zeta: &Numerator, rho: f64, singular: &[Complex64], tol: f64) -> Result<f64> {
    let near: Vec<f64> = singular
        .iter()
        .filter(|e| (e.norm() - rho).abs() < GRADED_ZONE)
        .map(|e| e.arg())
        .collect();
    if near.is_empty() {
        trapezoid_angular(zeta, rho, tol)
    } else {
        graded_angular(zeta, rho, singular, &near, tol)
    }
}

fn trapezoid_angular(zeta: &Numerator, rho: f64, tol: f64) -> Result<f64> {
    let trapezoid = |n: usize| -> Result<f64> {
        let vals = (0..n)
            .into_par_iter()
            .map(|j| density(zeta, Complex64::from_polar(rho, 2.0 * PI * (j as f64 + 0.5) / n as f64)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(vals.iter().sum::<f64>() * 2.0 * PI / n as f64)
    };
    let mut n = MIN_ANGULAR_NODES.max((4.0 * rho) as usize).next_power_of_two();
    let mut prev = trapezoid(n)?;
    let mut prev_diff = f64::INFINITY;
    loop {
        n *= 2;
        let cur = trapezoid(n)?;
        let diff = (cur - prev).abs();
        if diff <= tol * cur.abs() || cur == 0.0 {
            return Ok(cur);
        }
        // rounding floor from the cancellation in Δ² − 4 near eigenvalues
        if diff >= 0.5 * prev_diff && diff <= NOISE_FLOOR * cur.abs() {
            return Ok(cur);
        }
        prev_diff = diff;
        if n >= MAX_ANGULAR_NODES {
            return Err(Error::Growth(format!(
                "angular quadrature at ρ = {rho} did not converge (difference {diff:.3e})"
            )));
        }
        prev = cur;
    }
}

fn graded_angular(zeta: &Numerator, rho: f64, singular: &[Complex64], centers: &[f64], tol: f64) -> Result<f64> {
    let base = centers[0];
    let wrap = |t: f64| (t - base).rem_euclid(2.0 * PI);
    let mut pts = vec![0.0, 2.0 * PI];
    for &c in centers {
        let closest = singular
            .iter()
            .map(|e| (Complex64::from_polar(rho, c) - e).norm())
            .fold(f64::INFINITY, f64::min)
            .max(1e-14);
        let floor = 0.25 * closest / rho;
        let mut w = 0.5;
        while w > floor {
            pts.extend([wrap(c - w), wrap(c + w)]);
            w *= 0.5;
        }
        pts.push(wrap(c));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    // uniform panels of width at most 2π/(ρ + 1) away from the singular angles
    let max_width = 2.0 * PI / (8.0 * (rho + 1.0)).ceil();
    let mut panels = Vec::new();
    for w in pts.windows(2) {
        let m = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        for i in 0..m {
            let a = w[0] + (w[1] - w[0]) * i as f64 / m as f64;
            let b = w[0] + (w[1] - w[0]) * (i + 1) as f64 / m as f64;
            panels.push((a, b));
        }
    }
    let panel_sum = |order: usize| -> Result<f64> {
        let vals = panels
            .par_iter()
            .map(|&(a, b)| {
                gauss_legendre_on(order, a, b)
                    .into_iter()
                    .map(|(t, wt)| Ok(wt * density(zeta, Complex64::from_polar(rho, base + t))?))
                    .sum::<Result<f64>>()
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(vals.iter().sum())
    };
    let coarse = panel_sum(GRADED_ORDER / 2)?;
    let fine = panel_sum(GRADED_ORDER)?;
    let diff = (fine - coarse).abs();
    if diff > tol.max(NOISE_FLOOR) * fine.abs() * 1e2 {
        return Err(Error::Growth(format!(
            "graded angular quadrature at ρ = {rho} did not converge (difference {diff:.3e})"
        )));
    }
    Ok(fine)
}

/// Radial breakpoints: the interval ends, simple-eigenvalue moduli inside, and dyadic
/// refinements of width `BAND_WIDTH·2^{−l}` around them.
fn radial_breakpoints(r_a: f64, r_b: f64, moduli: &[f64]) -> Vec<f64> {
    let mut pts = vec![r_a, r_b];
    for &m in moduli {
        for l in 0..=BAND_LEVELS {
            let w = BAND_WIDTH / f64::powi(2.0, l as i32);
            pts.extend([m - w, m + w]);
        }
        pts.push(m);
    }
    pts.retain(|&p| p >= r_a && p <= r_b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// `2∫_{r_a}^{r_b}∫₀^{2π} |ζ/√c|² ρ dθ dρ`.
pub fn v_annulus(zeta: &Numerator, spec: &PeriodicSpectrum, r_a: f64, r_b: f64, tol: f64) -> Result<f64> {
    if !(0.0 <= r_a && r_a <= r_b) {
        return Err(Error::Growth(format!("invalid annulus [{r_a}, {r_b}]")));
    }
    check_integrable(zeta, spec, r_a, r_b)?;
    // at double points ζ vanishes and the density stays smooth
    let singular: Vec<Complex64> = spec
        .pairs()
        .filter(|&(k, _, _)| !spec.is_double(k))
        .flat_map(|(_, a, b)| [a, b])
        .collect();
    let moduli: Vec<f64> = singular.iter().map(|z| z.norm()).collect();
    let pts = radial_breakpoints(r_a, r_b, &moduli);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let mut panels = vec![(w[0], w[1])];
        // split long panels so each carries roughly unit length
        let len = w[1] - w[0];
        if len > 1.0 {
            let m = len.ceil() as usize;
            panels = (0..m)
                .map(|i| (w[0] + len * i as f64 / m as f64, w[0] + len * (i + 1) as f64 / m as f64))
                .collect();
        }
        for (a, b) in panels {
            for (rho, wt) in gauss_legendre_on(RADIAL_ORDER, a, b) {
                total += wt * rho * angular_integral(zeta, rho, &singular, tol)?;
            }
        }
    }
    Ok(2.0 * total)
}

/// `V(r)` over the full disk.
pub fn v_of_r(zeta: &Numerator, spec: &PeriodicSpectrum, r: f64, tol: f64) -> Result<f64> {
    v_annulus(zeta, spec, 0.0, r, tol)
}

/// The integrand is bounded only where `ζ` vanishes at the double points.
fn check_integrable(zeta: &Numerator, spec: &PeriodicSpectrum, r_a: f64, r_b: f64) -> Result<()> {
    for k in -spec.kmax..=spec.kmax {
        let tau = spec.tau(k);
        if !spec.is_double(k) || tau.norm() < r_a || tau.norm() > r_b {
            continue;
        }
        let s = zeta.discriminant().sample(tau)?;
        let scale = 1.0 + s.d1.norm() + s.d2.norm();
        if zeta.eval_sample(&s)?.norm() > 1e-8 * scale {
            return Err(Error::Growth(format!(
                "ζ does not vanish at the double point τ_{k} = {tau}; the area integral diverges"
            )));
        }
    }
    Ok(())
}

/// `V` sampled at increasing radii.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthProfile {
    /// Inner radius of the integration region (0 for the full disk).
    pub r_start: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub standard_error: f64,
}

impl GrowthProfile {
    pub fn is_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// `(r, V, running slope)` rows, the slope taken against the previous radius.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,V,slope\n");
        for i in 0..self.radii.len() {
            let slope = if i == 0 || self.values[i - 1] <= 0.0 {
                f64::NAN
            } else {
                (self.values[i] / self.values[i - 1]).ln() / (self.radii[i] / self.radii[i - 1]).ln()
            };
            out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.radii[i], self.values[i], slope));
        }
        out
    }
}

/// Least-squares slope of `log V` against `log r` over the upper half of the radii.
pub fn growth_exponent(radii: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if radii.len() < 6 || radii.len() != values.len() {
        return Err(Error::Growth("at least six radii are needed for a slope".into()));
    }
    let start = radii.len() / 2;
    let pts: Vec<(f64, f64)> = radii[start..]
        .iter()
        .zip(&values[start..])
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = if pts.len() > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se))
}

/// Profile at `r_m = (m + ½)π` for `m` in `ms`, integrating from `r_start`.
/// Annuli between consecutive radii are independent and accumulated.
pub fn growth_profile(zeta: &Numerator, spec: &PeriodicSpectrum, r_start: f64, ms: &[i64], tol: f64) -> Result<GrowthProfile> {
    let radii: Vec<f64> = ms.iter().map(|&m| (m as f64 + 0.5) * PI).collect();
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.first().is_some_and(|&r| r < r_start) {
        return Err(Error::Growth("radii must increase and exceed the start radius".into()));
    }
    let mut edges = vec![r_start];
    edges.extend(&radii);
    let pieces = edges
        .windows(2)
        .map(|w| v_annulus(zeta, spec, w[0], w[1], tol))
        .collect::<Result<Vec<f64>>>()?;
    let values: Vec<f64> = pieces
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let (fitted_exponent, standard_error) = growth_exponent(&radii, &values)?;
    Ok(GrowthProfile {
        r_start,
        radii,
        values,
        fitted_exponent,
        standard_error,
    })
}

/// Vanishing-theorem hypotheses for a form `ζ dλ/√c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesesReport {
    /// Largest `|ζ(τ_k)|/scale` over double points.
    pub max_double_value: f64,
    pub vanishes_on_doubles: bool,
    /// `(m, (1/2π)∮_{Γ_m} ζ/√c)`.
    pub periods: Vec<(i64, Complex64)>,
    pub max_period: f64,
    pub periods_vanish: bool,
}

impl HypothesesReport {
    pub fn passed(&self) -> bool {
        self.vanishes_on_doubles && self.periods_vanish
    }
}

pub const PERIOD_TOL: f64 = 1e-7;

pub fn vanishing_hypotheses_check(zeta: &Numerator, spec: &PeriodicSpectrum, contours: &ContourSystem, k: i64) -> Result<HypothesesReport> {
    let k = k.min(contours.kmax());
    let mut max_double_value: f64 = 0.0;
    for j in -k..=k {
        if !spec.is_double(j) {
            continue;
        }
        let scale = contours
            .contour(j)
            .values
            .iter()
            .map(|v| zeta.eval_node(v).map(|z| z.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let v = zeta.eval(spec.tau(j))?.norm();
        if scale > 0.0 {
            max_double_value = max_double_value.max(v / scale);
        } else if v > 0.0 {
            max_double_value = f64::INFINITY;
        }
    }
    let periods = a_periods(contours, zeta, -k..=k)?;
    let max_period = periods.iter().map(|(_, p)| p.norm()).fold(0.0, f64::max);
    Ok(HypothesesReport {
        max_double_value,
        vanishes_on_doubles: max_double_value <= 1e-8,
        periods,
        max_period,
        periods_vanish: max_period <= PERIOD_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::{Discriminant, DEFAULT_ODE_TOL};
    use crate::normalization::{omega_n_numerator, omega_star_numerator, RationalTerm};
    use crate::potential::Potential;
    use crate::spectrum::{compute_spectrum, SpectrumOptions};

    fn zero() -> (Discriminant, PeriodicSpectrum) {
        let disc = Discriminant::new(Potential::zero(), DEFAULT_ODE_TOL);
        let spec = compute_spectrum(&disc, &SpectrumOptions::new(8)).unwrap();
        (disc, spec)
    }

    #[test]
    fn omega_star_area_at_zero_potential() {
        let (disc, spec) = zero();
        let z = omega_star_numerator(&disc);
        let r = 2.5 * PI;
        let v = v_of_r(&z, &spec, r, 1e-12).unwrap();
        assert!((v - 2.0 * PI * r * r).abs() < 1e-9 * v);
    }

    #[test]
    fn omega_n_log_growth_oracle() {
        let (disc, spec) = zero();
        let n = 1;
        let z = omega_n_numerator(&disc, &spec, n);
        let a = n as f64 * PI;
        let r0 = a + PI / 4.0;
        let r = 4.5 * PI;
        let v = v_annulus(&z, &spec, r0, r, 1e-12).unwrap();
        let expect = 2.0 * PI * ((r * r - a * a).ln() - (r0 * r0 - a * a).ln());
        assert!((v - expect).abs() < 1e-8 * expect, "{v} vs {expect}");
        assert!(v_of_r(&z, &spec, r, 1e-12).is_err());
    }

    #[test]
    fn zero_form_and_scaling() {
        let (disc, spec) = zero();
        let nothing = Numerator::new(&disc, Vec::new());
        assert_eq!(v_of_r(&nothing, &spec, 2.0, 1e-12).unwrap(), 0.0);
        let star = omega_star_numerator(&disc);
        let c = Complex64::new(0.6, -0.8) * 3.0;
        let scaled = Numerator::new(
            &disc,
            vec![(c, RationalTerm { power: 0, poles: Vec::new() })],
        );
        let v1 = v_of_r(&star, &spec, 2.0, 1e-12).unwrap();
        let v2 = v_of_r(&scaled, &spec, 2.0, 1e-12).unwrap();
        assert!((v2 - 9.0 * v1).abs() < 1e-12 * v2);
    }

    #[test]
    fn exponent_of_quadratic_profile() {
        let radii: Vec<f64> = (1..=8).map(|m| (m as f64 + 0.5) * PI).collect();
        let values: Vec<f64> = radii.iter().map(|r| 2.0 * PI * r * r).collect();
        let (s, se) = growth_exponent(&radii, &values).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && se < 1e-10);
    }
}
