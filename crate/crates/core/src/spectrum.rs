//! Periodic eigenvalues `λ±_k`, critical points `λ̇_k`, the counting threshold
//! `N₀` and the double points.
//!
//! Zeros are counted by the argument principle on `∂D_k(π/6)` and on the
//! central disk `D_0((N₀ − 3/4)π)`, seeded from contour power sums and polished
//! by Newton's method on `Δ ∓ 2` and `Δ̇`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::{DiscSample, Discriminant};
use crate::error::{Error, Result};
use crate::index::ZVec;
use crate::lex_cmp;
use crate::quadrature::{roots_from_power_sums, scaled_power_sums, winding_number, Circle, CircleSamples, WindingCount};

/// Radius of the counting disks `D_k(π/6)`.
pub const COUNT_RADIUS: f64 = PI / 6.0;
/// Gaps with `|γ_k| ≤ PAIR_TOL·(1 + |τ_k|)` are treated as double points.
pub const PAIR_TOL: f64 = 1e-7;
/// Distance below which two contour-moment roots are resolved as a near-double pair.
const CLUSTER_DIST: f64 = 0.05;
const MAX_COUNT_NODES: usize = 4096;

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Eigenvalue pairs are computed for `|k| ≤ kmax`.
    pub kmax: i64,
    /// When set, the total number of zeros inside `|λ| = (k + 1/2)π` is checked
    /// against the sum of the local counts.
    pub global_check: Option<i64>,
}

impl SpectrumOptions {
    pub fn new(kmax: i64) -> Self {
        Self {
            kmax,
            global_check: Some(kmax.min(32)),
        }
    }
}

/// Winding counts of `Δ² − 4` and `Δ̇` around one circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountCertificate {
    pub center: Complex64,
    pub radius: f64,
    pub eigenvalues: WindingCount,
    pub critical_points: WindingCount,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumCertificates {
    /// One entry per `k` in `-kmax..=kmax`.
    pub disks: ZVec<CountCertificate>,
    pub central: CountCertificate,
    pub global: Option<CountCertificate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicSpectrum {
    pub kmax: i64,
    pub n0: i64,
    pub lambda_minus: ZVec<Complex64>,
    pub lambda_plus: ZVec<Complex64>,
    pub critical: ZVec<Complex64>,
    pub double: ZVec<bool>,
    pub certificates: SpectrumCertificates,
}

impl PeriodicSpectrum {
    pub fn tau(&self, k: i64) -> Complex64 {
        (self.lambda_minus[k] + self.lambda_plus[k]) * 0.5
    }

    pub fn gamma(&self, k: i64) -> Complex64 {
        self.lambda_plus[k] - self.lambda_minus[k]
    }

    pub fn is_double(&self, k: i64) -> bool {
        self.double[k]
    }

    /// All eigenvalues with multiplicity, as `(k, λ⁻_k, λ⁺_k)`.
    pub fn pairs(&self) -> impl Iterator<Item = (i64, Complex64, Complex64)> + '_ {
        (-self.kmax..=self.kmax).map(|k| (k, self.lambda_minus[k], self.lambda_plus[k]))
    }

    /// `Σ_{K/2 < |k| ≤ K} |λ⁻_k − kπ|² + |λ⁺_k − kπ|²`.
    pub fn remainder_tail(&self, k_trunc: i64) -> f64 {
        assert!(k_trunc <= self.kmax);
        (-k_trunc..=k_trunc)
            .filter(|k| 2 * k.abs() > k_trunc)
            .map(|k| {
                let kp = Complex64::new(k as f64 * PI, 0.0);
                (self.lambda_minus[k] - kp).norm_sqr() + (self.lambda_plus[k] - kp).norm_sqr()
            })
            .sum()
    }

    /// Radius of the central counting disk.
    pub fn central_radius(&self) -> f64 {
        (self.n0 as f64 - 0.75) * PI
    }
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Critical,
    Level(f64),
}

impl Target {
    fn eval(self, s: &DiscSample) -> (Complex64, Complex64) {
        match self {
            Target::Critical => (s.d1, s.d2),
            Target::Level(sign) => (s.delta - 2.0 * sign, s.d1),
        }
    }
}

fn level_sign(s: &DiscSample) -> f64 {
    if s.delta.re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn newton(disc: &Discriminant, z0: Complex64, target: Target) -> Result<(Complex64, DiscSample)> {
    let mut z = z0;
    let mut s = disc.sample(z)?;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let (f, df) = target.eval(&s);
        if f == Complex64::new(0.0, 0.0) {
            return Ok((z, s));
        }
        let dz = f / df;
        if !(dz.re.is_finite() && dz.im.is_finite()) {
            break;
        }
        let size = dz.norm();
        // Corrections that stop contracting have reached the noise floor of f.
        if size >= 0.5 * last && size <= 1e-9 * (1.0 + z.norm()) {
            return Ok((z, s));
        }
        z -= dz;
        s = disc.sample(z)?;
        if size <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            return Ok((z, s));
        }
        last = size;
    }
    Err(Error::Counting(format!("Newton iteration did not converge from {z0}")))
}

/// Eigenvalue pair near a refined critical point.
enum PairKind {
    Double(Complex64),
    Open(Complex64, Complex64),
}

fn resolve_pair(disc: &Discriminant, crit: Complex64, s: &DiscSample) -> Result<PairKind> {
    let sign = level_sign(s);
    let f0 = s.delta - 2.0 * sign;
    let a = s.d2 * 0.5;
    let delta = (-f0 / a).sqrt();
    if 2.0 * delta.norm() <= PAIR_TOL * (1.0 + crit.norm()) || f0 == Complex64::new(0.0, 0.0) {
        return Ok(PairKind::Double(crit));
    }
    let (za, _) = newton(disc, crit + delta, Target::Level(sign))?;
    let (zb, _) = newton(disc, crit - delta, Target::Level(sign))?;
    if (za - zb).norm() < 0.5 * delta.norm() {
        return Err(Error::Counting(format!(
            "near-double pair at {crit} collapsed during refinement"
        )));
    }
    Ok(PairKind::Open(za, zb))
}

fn ordered(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    if lex_cmp(&a, &b).is_le() {
        (a, b)
    } else {
        (b, a)
    }
}

fn eigen_proj(s: &DiscSample) -> (Complex64, Complex64) {
    (s.char_value(), s.char_derivative())
}

fn crit_proj(s: &DiscSample) -> (Complex64, Complex64) {
    (s.d1, s.d2)
}

/// Samples a circle and refines until both winding numbers are certified.
fn counted_circle(
    disc: &Discriminant,
    circle: Circle,
    n0: usize,
) -> Result<(CircleSamples<DiscSample>, CountCertificate)> {
    let f = |z: Complex64| disc.sample(z);
    let mut samples = CircleSamples::build(circle, n0, f)?;
    loop {
        let certified = match (winding_number(&samples, eigen_proj), winding_number(&samples, crit_proj)) {
            (Ok(e), Ok(d)) if e.is_certified() && d.is_certified() => Some((e, d)),
            (Err(err), _) | (_, Err(err)) if samples.len() >= MAX_COUNT_NODES => return Err(err),
            _ => None,
        };
        if let Some((e, d)) = certified {
            let cert = CountCertificate {
                center: circle.center,
                radius: circle.radius,
                eigenvalues: e,
                critical_points: d,
            };
            return Ok((samples, cert));
        }
        if samples.len() >= MAX_COUNT_NODES {
            return Err(Error::Counting(format!(
                "winding numbers on |λ − {}| = {} not resolved with {} nodes",
                circle.center,
                circle.radius,
                samples.len()
            )));
        }
        samples.refine(f)?;
    }
}

/// Zeros of `f` inside a sampled circle from contour power sums.
fn moment_roots(
    samples: &CircleSamples<DiscSample>,
    count: usize,
    proj: fn(&DiscSample) -> (Complex64, Complex64),
) -> Vec<Complex64> {
    if count == 0 {
        return Vec::new();
    }
    let sums = scaled_power_sums(samples, count, proj);
    let c = samples.circle.center;
    let rho = samples.circle.radius;
    roots_from_power_sums(&sums, count)
        .into_iter()
        .map(|w| c + w * rho)
        .collect()
}

struct DiskResult {
    minus: Complex64,
    plus: Complex64,
    critical: Complex64,
    double: bool,
}

fn extract_outer(disc: &Discriminant, samples: &CircleSamples<DiscSample>) -> Result<DiskResult> {
    let circle = samples.circle;
    let seed = moment_roots(samples, 1, crit_proj)[0];
    let (crit, cs) = newton(disc, seed, Target::Critical)?;
    let scale = samples.values.iter().map(|s| s.d1.norm()).fold(0.0, f64::max);
    if cs.d1.norm() > 1e-10 * scale || !circle.contains(crit) {
        return Err(Error::Counting(format!("critical point in {circle:?} not certified")));
    }
    let roots = moment_roots(samples, 2, eigen_proj);
    let (minus, plus, double) = if (roots[0] - roots[1]).norm() < CLUSTER_DIST {
        match resolve_pair(disc, crit, &cs)? {
            PairKind::Double(z) => (z, z, true),
            PairKind::Open(a, b) => {
                let (a, b) = ordered(a, b);
                (a, b, false)
            }
        }
    } else {
        let mut refined = Vec::with_capacity(2);
        for z in roots {
            let sign = level_sign(&disc.sample(z)?);
            refined.push(newton(disc, z, Target::Level(sign))?.0);
        }
        let (a, b) = ordered(refined[0], refined[1]);
        (a, b, false)
    };
    if !(circle.contains(minus) && circle.contains(plus)) {
        return Err(Error::Counting(format!("eigenvalues escaped the disk {circle:?}")));
    }
    Ok(DiskResult {
        minus,
        plus,
        critical: crit,
        double,
    })
}

struct CentralResult {
    pairs: Vec<(Complex64, Complex64, bool)>,
    critical: Vec<Complex64>,
}

fn extract_central(disc: &Discriminant, samples: &CircleSamples<DiscSample>, n0: i64) -> Result<CentralResult> {
    let circle = samples.circle;
    let n_eig = (4 * n0 - 2) as usize;
    let n_crit = (2 * n0 - 1) as usize;

    let mut critical = Vec::with_capacity(n_crit);
    let mut crit_samples = Vec::with_capacity(n_crit);
    for seed in moment_roots(samples, n_crit, crit_proj) {
        let (z, s) = newton(disc, seed, Target::Critical)?;
        if critical.iter().any(|w: &Complex64| (w - z).norm() < 1e-8 * (1.0 + z.norm())) {
            return Err(Error::Counting(format!("critical points coalesce near {z}")));
        }
        if !circle.contains(z) {
            return Err(Error::Counting(format!("critical point {z} escaped the central disk")));
        }
        critical.push(z);
        crit_samples.push(s);
    }
    critical.sort_by(lex_cmp);

    let seeds = moment_roots(samples, n_eig, eigen_proj);
    let mut used = vec![false; seeds.len()];
    let mut doubles = Vec::new();
    let mut simples = Vec::new();
    for i in 0..seeds.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let partner = (0..seeds.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (seeds[a] - seeds[i]).norm().total_cmp(&(seeds[b] - seeds[i]).norm()));
        match partner {
            Some(j) if (seeds[j] - seeds[i]).norm() < CLUSTER_DIST => {
                used[j] = true;
                let mid = (seeds[i] + seeds[j]) * 0.5;
                let (crit, cs) = newton(disc, mid, Target::Critical)?;
                match resolve_pair(disc, crit, &cs)? {
                    PairKind::Double(z) => doubles.push(z),
                    PairKind::Open(a, b) => {
                        simples.push(a);
                        simples.push(b);
                    }
                }
            }
            _ => {
                let sign = level_sign(&disc.sample(seeds[i])?);
                simples.push(newton(disc, seeds[i], Target::Level(sign))?.0);
            }
        }
    }
    simples.sort_by(lex_cmp);
    for w in simples.windows(2) {
        if (w[0] - w[1]).norm() < 1e-9 * (1.0 + w[0].norm()) {
            return Err(Error::Counting(format!("simple eigenvalues coalesce near {}", w[0])));
        }
    }
    if simples.len() % 2 == 1 || 2 * doubles.len() + simples.len() != n_eig {
        return Err(Error::Counting("central eigenvalue count inconsistent after refinement".into()));
    }
    let mut pairs: Vec<(Complex64, Complex64, bool)> = doubles.into_iter().map(|z| (z, z, true)).collect();
    pairs.extend(simples.chunks(2).map(|c| (c[0], c[1], false)));
    pairs.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    for &(a, b, _) in &pairs {
        if !(circle.contains(a) && circle.contains(b)) {
            return Err(Error::Counting(format!("eigenvalue escaped the central disk near {a}")));
        }
    }
    Ok(CentralResult { pairs, critical })
}

/// Computes and certifies the periodic spectrum for `|k| ≤ opts.kmax`.
pub fn compute_spectrum(disc: &Discriminant, opts: &SpectrumOptions) -> Result<PeriodicSpectrum> {
    let kmax = opts.kmax;
    if kmax < 1 {
        return Err(Error::Counting("truncation index must be at least 1".into()));
    }
    let disks = ZVec::try_from_fn(kmax, |k| {
        let circle = Circle::new(Complex64::new(k as f64 * PI, 0.0), COUNT_RADIUS);
        counted_circle(disc, circle, 32)
    })?;
    let good = |k: i64| {
        let c = &disks[k].1;
        c.eigenvalues.count == 2 && c.critical_points.count == 1
    };
    let mut n0 = (1..=kmax)
        .find(|&n| (n..=kmax).all(|k| good(k) && good(-k)))
        .ok_or_else(|| Error::Counting(format!("local counts fail up to |k| = {kmax}; increase K")))?;

    let (central_samples, central_cert) = loop {
        let circle = Circle::new(Complex64::new(0.0, 0.0), (n0 as f64 - 0.75) * PI);
        let nodes = (64 * n0 as usize).next_power_of_two();
        let (samples, cert) = counted_circle(disc, circle, nodes)?;
        if cert.eigenvalues.count == 4 * n0 - 2 && cert.critical_points.count == 2 * n0 - 1 {
            break (samples, cert);
        }
        n0 += 1;
        if n0 > kmax {
            return Err(Error::Counting(format!(
                "central disk counts never matched (last: {} eigenvalues, {} critical points); increase K",
                cert.eigenvalues.count, cert.critical_points.count
            )));
        }
    };

    let global = match opts.global_check {
        Some(kg) if kg >= n0 && kg <= kmax => {
            let circle = Circle::new(Complex64::new(0.0, 0.0), (kg as f64 + 0.5) * PI);
            let nodes = (16 * (kg as usize + 1)).next_power_of_two().max(64);
            let (_, cert) = counted_circle(disc, circle, nodes)?;
            if cert.eigenvalues.count != 4 * kg + 2 || cert.critical_points.count != 2 * kg + 1 {
                return Err(Error::Counting(format!(
                    "|λ| < {} contains {} eigenvalues and {} critical points, expected {} and {}",
                    circle.radius,
                    cert.eigenvalues.count,
                    cert.critical_points.count,
                    4 * kg + 2,
                    2 * kg + 1
                )));
            }
            Some(cert)
        }
        _ => None,
    };

    let central = extract_central(disc, &central_samples, n0)?;
    let inner = n0 - 1;
    let mut minus = ZVec::from_fn(kmax, |_| Complex64::default());
    let mut plus = minus.clone();
    let mut critical = minus.clone();
    let mut double = ZVec::from_fn(kmax, |_| false);
    for (idx, &(a, b, d)) in central.pairs.iter().enumerate() {
        let k = idx as i64 - inner;
        minus[k] = a;
        plus[k] = b;
        double[k] = d;
    }
    for (idx, &z) in central.critical.iter().enumerate() {
        critical[idx as i64 - inner] = z;
    }
    for k in (-kmax..=kmax).filter(|k| k.abs() >= n0) {
        let r = extract_outer(disc, &disks[k].0)?;
        minus[k] = r.minus;
        plus[k] = r.plus;
        critical[k] = r.critical;
        double[k] = r.double;
    }
    Ok(PeriodicSpectrum {
        kmax,
        n0,
        lambda_minus: minus,
        lambda_plus: plus,
        critical,
        double,
        certificates: SpectrumCertificates {
            disks: disks.map(|_, (_, c)| c.clone()),
            central: central_cert,
            global,
        },
    })
}
