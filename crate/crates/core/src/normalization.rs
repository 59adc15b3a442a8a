//! Normalized holomorphic differentials `ω_n = ζ_n dλ/√c`.
//!
//! `ζ_n = Δ̇·(h₀ − Σ_j β_j f_j)` with rational `h₀`, `f_j` whose poles sit at
//! critical points. The coefficients `β` solve the truncated period system
//! `T β = b`, whose rows state that the A-period of `ζ_n dλ/√c` around `Γ_m`
//! vanishes for every `m ≠ n`. The limiting system (`n = ∗`) uses the same
//! construction without the pivot factor.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::{DiscSample, Discriminant};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::riemann_surface::{ContourSystem, NodeData};
use crate::spectrum::PeriodicSpectrum;

/// Within this distance of a pole the numerator is evaluated in divided-difference form.
pub const POLE_CANCEL_RADIUS: f64 = 0.05;
/// Required ℓ¹ agreement between successive truncations.
pub const BETA_CONVERGENCE_TOL: f64 = 1e-8;

/// Which differential a system describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// `ω_n`.
    Index(i64),
    /// The limiting system.
    Star,
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Index(n) => write!(f, "{n}"),
            Target::Star => f.write_str("*"),
        }
    }
}

/// `λ^power / ∏_q (λ − z_q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalTerm {
    pub power: u32,
    pub poles: Vec<Complex64>,
}

impl RationalTerm {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let den: Complex64 = self.poles.iter().map(|z| lambda - z).product();
        lambda.powu(self.power) / den
    }

    /// The term with the factor `1/(λ − z)` removed, if `z` is one of its poles.
    /// `d/dλ` of the term.
    pub fn derivative(&self, lambda: Complex64) -> Complex64 {
        let den: Complex64 = self.poles.iter().map(|z| lambda - z).product();
        let log_den: Complex64 = self.poles.iter().map(|z| 1.0 / (lambda - z)).sum();
        let num = lambda.powu(self.power);
        let dnum = if self.power == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            lambda.powu(self.power - 1) * self.power as f64
        };
        (dnum - num * log_den) / den
    }

    fn without_pole(&self, z: Complex64) -> Option<RationalTerm> {
        let idx = self.poles.iter().position(|p| *p == z)?;
        let mut poles = self.poles.clone();
        poles.remove(idx);
        Some(RationalTerm {
            power: self.power,
            poles,
        })
    }
}

/// Evaluator of an entire numerator `ζ(λ) = Δ̇(λ)·Σ_i c_i t_i(λ)`.
#[derive(Clone, Debug)]
pub struct Numerator {
    terms: Vec<(Complex64, RationalTerm)>,
    poles: Vec<Complex64>,
    disc: Discriminant,
}

impl Numerator {
    pub fn new(disc: &Discriminant, terms: Vec<(Complex64, RationalTerm)>) -> Self {
        let mut poles: Vec<Complex64> = Vec::new();
        for (_, t) in &terms {
            for p in &t.poles {
                if !poles.contains(p) {
                    poles.push(*p);
                }
            }
        }
        Self {
            terms,
            poles,
            disc: disc.clone(),
        }
    }

    /// `Σ_i c_i t_i(λ)`.
    pub fn rational(&self, lambda: Complex64) -> Complex64 {
        self.terms.iter().map(|(c, t)| c * t.eval(lambda)).sum()
    }

    fn nearest_pole(&self, lambda: Complex64) -> Option<Complex64> {
        self.poles
            .iter()
            .copied()
            .filter(|p| (lambda - p).norm() < POLE_CANCEL_RADIUS)
            .min_by(|a, b| (lambda - a).norm().total_cmp(&(lambda - b).norm()))
    }

    /// Value from a discriminant sample taken at the same λ. Away from the poles
    /// this is a plain product; near a pole `z` the singular part is rewritten as
    /// `res·(Δ̇(λ) − Δ̇(z))/(λ − z)` with the difference quotient integrated from `Δ̈`.
    pub fn eval_sample(&self, s: &DiscSample) -> Result<Complex64> {
        let lambda = s.lambda;
        let Some(z) = self.nearest_pole(lambda) else {
            return Ok(s.d1 * self.rational(lambda));
        };
        let u = lambda - z;
        let mut residue = Complex64::new(0.0, 0.0);
        let mut regular = Complex64::new(0.0, 0.0);
        for (c, t) in &self.terms {
            match t.without_pole(z) {
                Some(g) => {
                    let gz = g.eval(z);
                    residue += c * gz;
                    if u.norm() > 1e-14 * (1.0 + z.norm()) {
                        regular += c * (g.eval(lambda) - gz) / u;
                    }
                }
                None => regular += c * t.eval(lambda),
            }
        }
        let quotient = self.difference_quotient(z, lambda, s)?;
        Ok(s.d1 * regular + residue * quotient)
    }

    /// `∫₀¹ Δ̈(z + t(λ − z)) dt`.
    fn difference_quotient(&self, z: Complex64, lambda: Complex64, s: &DiscSample) -> Result<Complex64> {
        if (lambda - z).norm() <= 1e-14 * (1.0 + z.norm()) {
            return Ok(s.d2);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, w) in gauss_legendre_on(6, 0.0, 1.0) {
            acc += self.disc.sample(z + (lambda - z) * t)?.d2 * w;
        }
        Ok(acc)
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        self.eval_sample(&self.disc.sample(lambda)?)
    }

    /// `(ζ, ζ')` from a sample; near a pole the derivative is a central difference.
    pub fn value_and_derivative(&self, s: &DiscSample) -> Result<(Complex64, Complex64)> {
        if self.nearest_pole(s.lambda).is_some() {
            return Ok((self.eval_sample(s)?, self.derivative(s.lambda)?));
        }
        let h: Complex64 = self.rational(s.lambda);
        let dh: Complex64 = self.terms.iter().map(|(c, t)| c * t.derivative(s.lambda)).sum();
        Ok((s.d1 * h, s.d2 * h + s.d1 * dh))
    }

    pub fn discriminant(&self) -> &Discriminant {
        &self.disc
    }

    /// Value at a contour node, where no pole is within the cancellation radius.
    pub fn eval_node(&self, v: &NodeData) -> Result<Complex64> {
        self.eval_sample(&v.sample)
    }

    /// `ζ'(λ)` by a central difference of step `1e−5`.
    pub fn derivative(&self, lambda: Complex64) -> Result<Complex64> {
        let h = 1e-5;
        Ok((self.eval(lambda + h)? - self.eval(lambda - h)?) / (2.0 * h))
    }

    pub fn terms(&self) -> &[(Complex64, RationalTerm)] {
        &self.terms
    }

    /// Numerator whose value is `Σ_i w_i ζ_i`.
    pub fn linear_combination(disc: &Discriminant, parts: &[(Complex64, &Numerator)]) -> Numerator {
        let terms = parts
            .iter()
            .flat_map(|(w, n)| n.terms.iter().map(move |(c, t)| (c * w, t.clone())))
            .collect();
        Numerator::new(disc, terms)
    }
}

/// Basis functions of the period system for one target and truncation.
#[derive(Clone, Debug)]
pub struct SystemLayout {
    pub target: Target,
    pub k: i64,
    pub n0: i64,
    /// Pivot index `p` (`n` for `|n| > N₀`, `N₀` otherwise); absent for `∗`.
    pub pivot: Option<i64>,
    /// Column (and row) indices, ascending, `n` excluded.
    pub indices: Vec<i64>,
    pub basis: Vec<RationalTerm>,
    pub h0: RationalTerm,
}

impl SystemLayout {
    pub fn new(spec: &PeriodicSpectrum, target: Target, k: i64) -> Result<Self> {
        let n0 = spec.n0;
        let crit = |j: i64| spec.critical[j];
        if k < n0 || k > spec.kmax {
            return Err(Error::Solve(format!(
                "truncation K = {k} must satisfy N0 = {n0} ≤ K ≤ {}",
                spec.kmax
            )));
        }
        let inner_den: Vec<Complex64> = (-n0..=n0).map(crit).collect();
        let (pivot, indices) = match target {
            Target::Index(n) => {
                if n.abs() > k {
                    return Err(Error::Solve(format!("index n = {n} outside the truncation K = {k}")));
                }
                let p = if n.abs() > n0 { n } else { n0 };
                (Some(p), (-k..=k).filter(|&j| j != n).collect::<Vec<_>>())
            }
            Target::Star => (None, (-k..=k).collect()),
        };
        let basis = indices
            .iter()
            .map(|&j| match (target, pivot) {
                (Target::Star, _) => {
                    if j.abs() > n0 {
                        RationalTerm {
                            power: 0,
                            poles: vec![crit(j)],
                        }
                    } else {
                        RationalTerm {
                            power: (n0 + j) as u32,
                            poles: inner_den.clone(),
                        }
                    }
                }
                (Target::Index(n), Some(p)) => {
                    if j.abs() > n0 {
                        RationalTerm {
                            power: 0,
                            poles: vec![crit(j), crit(p)],
                        }
                    } else if n.abs() > n0 {
                        let mut poles = inner_den.clone();
                        poles.push(crit(n));
                        RationalTerm {
                            power: (n0 + j) as u32,
                            poles,
                        }
                    } else {
                        let eps = i64::from(j >= n);
                        RationalTerm {
                            power: (n0 + j - eps) as u32,
                            poles: inner_den.clone(),
                        }
                    }
                }
                (Target::Index(_), None) => unreachable!("indexed targets always have a pivot"),
            })
            .collect();
        let h0 = match pivot {
            Some(p) => RationalTerm {
                power: 0,
                poles: vec![crit(p)],
            },
            None => RationalTerm {
                power: 0,
                poles: Vec::new(),
            },
        };
        Ok(Self {
            target,
            k,
            n0,
            pivot,
            indices,
            basis,
            h0,
        })
    }

    /// Row multiplier `(m − p)π`; rows without a pivot factor use `1`.
    pub fn row_scale(&self, m: i64) -> f64 {
        match self.pivot {
            Some(p) if p != m => (m - p) as f64 * PI,
            _ => 1.0,
        }
    }

    pub fn position(&self, j: i64) -> Option<usize> {
        self.indices.binary_search(&j).ok()
    }
}

/// Truncated period system.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub layout: SystemLayout,
    pub t: DMatrix<Complex64>,
    pub b: DVector<Complex64>,
    /// Largest `|full − half|` quadrature discrepancy over all entries.
    pub quadrature_defect: f64,
}

pub fn assemble_system(contours: &ContourSystem, spec: &PeriodicSpectrum, target: Target, k: i64) -> Result<LinearSystem> {
    if k > contours.kmax() {
        return Err(Error::Solve(format!("contours are only available for |k| ≤ {}", contours.kmax())));
    }
    let layout = SystemLayout::new(spec, target, k)?;
    let dim = layout.indices.len();
    let mut t = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let mut b = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    let mut defect: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for (r, &m) in layout.indices.iter().enumerate() {
        let scale = layout.row_scale(m) / (2.0 * PI);
        let contour = contours.contour(m);
        let mut record = |est: crate::quadrature::Estimate| -> Complex64 {
            defect = defect.max(est.difference() * scale.abs());
            worst_rel = worst_rel.max(est.difference() / (1.0 + est.value.norm()));
            est.value * scale
        };
        b[r] = record(contour.integrate(|z, v| layout.h0.eval(z) * v.omega_star()));
        for (c, f) in layout.basis.iter().enumerate() {
            t[(r, c)] = record(contour.integrate(|z, v| f.eval(z) * v.omega_star()));
        }
    }
    if worst_rel > 1e3 * contours.quad_tol {
        return Err(Error::Quadrature(format!(
            "period system entries for n = {target} unresolved (relative defect {worst_rel:.3e})"
        )));
    }
    Ok(LinearSystem {
        layout,
        t,
        b,
        quadrature_defect: defect,
    })
}

/// Solution of one truncated system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaSolution {
    pub target: Target,
    pub k: i64,
    pub indices: Vec<i64>,
    pub beta: Vec<Complex64>,
    pub residual: f64,
    pub rhs_norm: f64,
    /// `‖T‖₁·‖T⁻¹‖₁`.
    pub condition: f64,
    /// ℓ¹ differences between successive truncations, coarse to fine, as `(K_coarse, K_fine, diff)`.
    pub convergence: Vec<(i64, i64, f64)>,
}

impl BetaSolution {
    pub fn get(&self, j: i64) -> Complex64 {
        self.indices
            .binary_search(&j)
            .map_or(Complex64::new(0.0, 0.0), |i| self.beta[i])
    }

    pub fn l1_distance(&self, other: &BetaSolution) -> f64 {
        let kmax = self.k.max(other.k);
        (-kmax..=kmax).map(|j| (self.get(j) - other.get(j)).norm()).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.norm()).sum()
    }

    pub fn is_converged(&self) -> bool {
        self.convergence
            .last()
            .is_some_and(|&(_, _, d)| d < BETA_CONVERGENCE_TOL)
    }
}

fn l1_matrix_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense LU solve with residual and condition certificates.
pub fn solve_system(sys: &LinearSystem) -> Result<BetaSolution> {
    let lu = sys.t.clone().lu();
    let beta = lu.solve(&sys.b).ok_or_else(|| {
        Error::Solve(format!(
            "period matrix for n = {} at K = {} is singular",
            sys.layout.target, sys.layout.k
        ))
    })?;
    let inverse = lu
        .try_inverse()
        .ok_or_else(|| Error::Solve("period matrix is not invertible".into()))?;
    let condition = l1_matrix_norm(&sys.t) * l1_matrix_norm(&inverse);
    let residual: f64 = (&sys.t * &beta - &sys.b).iter().map(|z| z.norm()).sum();
    let rhs_norm: f64 = sys.b.iter().map(|z| z.norm()).sum();
    if !(residual <= 1e-9 * (1.0 + rhs_norm)) {
        return Err(Error::Solve(format!(
            "residual {residual:.3e} too large for n = {} at K = {} (condition {condition:.3e})",
            sys.layout.target, sys.layout.k
        )));
    }
    Ok(BetaSolution {
        target: sys.layout.target,
        k: sys.layout.k,
        indices: sys.layout.indices.clone(),
        beta: beta.iter().copied().collect(),
        residual,
        rhs_norm,
        condition,
        convergence: Vec::new(),
    })
}

/// Solves at `K/2`, `K` and `2K` (those admissible) and certifies the ℓ¹
/// change between the two finest truncations. The returned solution is the
/// one at `K`.
pub fn solve_beta(contours: &ContourSystem, spec: &PeriodicSpectrum, target: Target, k: i64) -> Result<BetaSolution> {
    let min_k = match target {
        Target::Index(n) => n.abs().max(spec.n0),
        Target::Star => spec.n0,
    };
    let ladder: Vec<i64> = [k / 2, k, 2 * k]
        .into_iter()
        .filter(|&kk| kk >= min_k && kk <= contours.kmax() && kk > spec.n0)
        .collect();
    if !ladder.contains(&k) {
        return Err(Error::Solve(format!("truncation K = {k} not admissible for n = {target}")));
    }
    let mut sols = Vec::with_capacity(ladder.len());
    for &kk in &ladder {
        sols.push(solve_system(&assemble_system(contours, spec, target, kk)?)?);
    }
    let convergence: Vec<(i64, i64, f64)> = sols
        .windows(2)
        .map(|w| (w[0].k, w[1].k, w[0].l1_distance(&w[1])))
        .collect();
    let idx = ladder.iter().position(|&kk| kk == k).expect("K is on the ladder");
    let mut sol = sols.swap_remove(idx);
    sol.convergence = convergence;
    if !sol.is_converged() {
        return Err(Error::Solve(format!(
            "β for n = {target} did not converge under K-doubling: {:?}",
            sol.convergence
        )));
    }
    Ok(sol)
}

/// A solved normalized differential.
#[derive(Clone, Debug)]
pub struct DifferentialBasisElement {
    pub target: Target,
    pub layout: SystemLayout,
    pub beta: BetaSolution,
    pub zeta: Numerator,
}

impl DifferentialBasisElement {
    pub fn new(disc: &Discriminant, contours: &ContourSystem, spec: &PeriodicSpectrum, target: Target, k: i64) -> Result<Self> {
        let beta = solve_beta(contours, spec, target, k)?;
        let layout = SystemLayout::new(spec, target, k)?;
        let zeta = numerator_from_beta(disc, &layout, &beta);
        Ok(Self {
            target,
            layout,
            beta,
            zeta,
        })
    }

    pub fn n(&self) -> Option<i64> {
        match self.target {
            Target::Index(n) => Some(n),
            Target::Star => None,
        }
    }
}

/// `ζ = Δ̇·(h₀ − Σ_j β_j f_j)`.
pub fn numerator_from_beta(disc: &Discriminant, layout: &SystemLayout, beta: &BetaSolution) -> Numerator {
    let mut terms = vec![(Complex64::new(1.0, 0.0), layout.h0.clone())];
    for (j, f) in layout.indices.iter().zip(&layout.basis) {
        let b = beta.get(*j);
        if b != Complex64::new(0.0, 0.0) {
            terms.push((-b, f.clone()));
        }
    }
    Numerator::new(disc, terms)
}

/// `ξ^n_β(λ) = Δ̇(λ)·Σ_j β_j f_j(λ)`.
pub fn xi_numerator(disc: &Discriminant, layout: &SystemLayout, beta: &[(i64, Complex64)]) -> Numerator {
    let terms = beta
        .iter()
        .filter_map(|&(j, b)| layout.position(j).map(|i| (b, layout.basis[i].clone())))
        .collect();
    Numerator::new(disc, terms)
}

/// `(1/2π)∮_{Γ_m} ζ/√c dλ` for the given `m`.
pub fn a_periods(contours: &ContourSystem, zeta: &Numerator, ms: impl IntoIterator<Item = i64>) -> Result<Vec<(i64, Complex64)>> {
    ms.into_iter()
        .map(|m| {
            let contour = contours.contour(m);
            let vals = contour
                .values
                .iter()
                .map(|v| Ok(zeta.eval_node(v)? / v.root))
                .collect::<Result<Vec<_>>>()?;
            let mut it = vals.into_iter();
            let est = contour.integrate(|_, _| it.next().expect("one value per node"));
            Ok((m, est.value / (2.0 * PI)))
        })
        .collect()
}

/// Normalization row of `ω_n` against `δ_{nm}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizationRow {
    pub n: i64,
    pub row: Vec<(i64, Complex64)>,
    pub max_error: f64,
}

pub fn verify_normalization(contours: &ContourSystem, element: &DifferentialBasisElement, m_max: i64) -> Result<NormalizationRow> {
    let n = element
        .n()
        .ok_or_else(|| Error::Normalization("the limiting system has no normalization row".into()))?;
    let row = a_periods(contours, &element.zeta, -m_max..=m_max)?;
    let max_error = row
        .iter()
        .map(|&(m, v)| (v - if m == n { 1.0 } else { 0.0 }).norm())
        .fold(0.0, f64::max);
    Ok(NormalizationRow { n, row, max_error })
}

/// `Σ_{|m| ≤ K} (1/2π)∮_{Γ_m} Ω^n_β` for a target and coefficient vector.
pub fn period_sum(contours: &ContourSystem, zeta: &Numerator, k: i64) -> Result<Complex64> {
    Ok(a_periods(contours, zeta, -k..=k)?.into_iter().map(|(_, v)| v).sum())
}

/// `Ω^n = Δ̇/(λ − λ̇_p)` (β = 0) for `n`.
pub fn omega_n_numerator(disc: &Discriminant, spec: &PeriodicSpectrum, n: i64) -> Numerator {
    let p = if n.abs() > spec.n0 { n } else { spec.n0 };
    Numerator::new(
        disc,
        vec![(
            Complex64::new(1.0, 0.0),
            RationalTerm {
                power: 0,
                poles: vec![spec.critical[p]],
            },
        )],
    )
}

/// `Ω* = Δ̇ dλ/√c` as a numerator.
pub fn omega_star_numerator(disc: &Discriminant) -> Numerator {
    Numerator::new(
        disc,
        vec![(
            Complex64::new(1.0, 0.0),
            RationalTerm {
                power: 0,
                poles: Vec::new(),
            },
        )],
    )
}

/// `β̂^n`: `β^n` with a zero inserted at index `n`, compared to `β*` in ℓ¹.
pub fn limit_distance(beta_n: &BetaSolution, beta_star: &BetaSolution) -> f64 {
    beta_n.l1_distance(beta_star)
}

/// `ω̂ = Ω* − (1/2π) Σ_{|m|<N₀} a_m ω_m` with `a_m` the `Ω*` periods.
pub fn omega_hat(disc: &Discriminant, contours: &ContourSystem, elements: &[DifferentialBasisElement]) -> Result<(Numerator, Vec<(i64, Complex64)>)> {
    let n0 = contours.n0;
    let star = omega_star_numerator(disc);
    let mut parts: Vec<(Complex64, &Numerator)> = vec![(Complex64::new(1.0, 0.0), &star)];
    let mut a = Vec::new();
    for m in (1 - n0)..n0 {
        let period = contours.integrate(m, |_, v| v.omega_star()).value;
        a.push((m, period));
        let el = elements
            .iter()
            .find(|e| e.n() == Some(m))
            .ok_or_else(|| Error::Normalization(format!("ω_{m} is required for ω̂")))?;
        parts.push((-period / (2.0 * PI), &el.zeta));
    }
    Ok((Numerator::linear_combination(disc, &parts), a))
}
