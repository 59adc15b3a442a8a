//! Serializable report payloads. No timestamps: identical inputs give identical files.

use serde::Serialize;
use zsforms::growth::{GrowthProfile, HypothesesReport};
use zsforms::normalization::{BetaSolution, NormalizationRow};
use zsforms::riemann_surface::OmegaStarCheck;
use zsforms::spectrum::{PeriodicSpectrum, SpectrumCertificates};
use zsforms::zeros::{AsymptoticsReport, VanishingReport, ZeroSet};
use zsforms::{Complex64, Potential};

#[derive(Serialize)]
pub struct EigenvalueRow {
    pub k: i64,
    pub minus: Complex64,
    pub plus: Complex64,
    pub critical: Complex64,
    pub double: bool,
    pub gap: f64,
}

#[derive(Serialize)]
pub struct SpectrumReport<'a> {
    pub fingerprint: String,
    pub symmetry: String,
    pub kmax: i64,
    pub n0: i64,
    pub eigenvalues: Vec<EigenvalueRow>,
    pub certificates: &'a SpectrumCertificates,
}

impl<'a> SpectrumReport<'a> {
    pub fn new(phi: &Potential, spec: &'a PeriodicSpectrum) -> Self {
        Self {
            fingerprint: format!("{:016x}", phi.fingerprint()),
            symmetry: phi.symmetry().to_string(),
            kmax: spec.kmax,
            n0: spec.n0,
            eigenvalues: (-spec.kmax..=spec.kmax)
                .map(|k| EigenvalueRow {
                    k,
                    minus: spec.lambda_minus[k],
                    plus: spec.lambda_plus[k],
                    critical: spec.critical[k],
                    double: spec.is_double(k),
                    gap: spec.gamma(k).norm(),
                })
                .collect(),
            certificates: &spec.certificates,
        }
    }
}

pub fn spectrum_csv(spec: &PeriodicSpectrum) -> String {
    let mut out = String::from("k,re_minus,im_minus,re_plus,im_plus,re_critical,im_critical,double\n");
    for k in -spec.kmax..=spec.kmax {
        let (a, b, c) = (spec.lambda_minus[k], spec.lambda_plus[k], spec.critical[k]);
        out.push_str(&format!(
            "{k},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            a.re,
            a.im,
            b.re,
            b.im,
            c.re,
            c.im,
            spec.is_double(k)
        ));
    }
    out
}

#[derive(Serialize)]
pub struct OmegaStarReport<'a> {
    pub check: &'a OmegaStarCheck,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct DifferentialReport<'a> {
    pub n: i64,
    pub beta: &'a BetaSolution,
    pub normalization: &'a NormalizationRow,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct ZerosReport<'a> {
    pub n: i64,
    pub zeros: &'a ZeroSet,
    pub asymptotics: &'a AsymptoticsReport,
    pub vanishing: &'a VanishingReport,
    pub passed: bool,
}

pub fn sigma_csv(zs: &ZeroSet, spec: &PeriodicSpectrum, n: i64) -> String {
    let mut out = String::from("n,k,re_sigma,im_sigma,dist_tau,gap_sq\n");
    for (&k, z) in &zs.zeros {
        let g = spec.gamma(k).norm();
        out.push_str(&format!(
            "{n},{k},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            z.sigma.re,
            z.sigma.im,
            (z.sigma - spec.tau(k)).norm(),
            g * g
        ));
    }
    out
}

#[derive(Serialize)]
pub struct GrowthReport<'a> {
    pub label: String,
    pub profile: &'a GrowthProfile,
    pub reference_exponent: f64,
}

#[derive(Serialize)]
pub struct HypothesesOut<'a> {
    pub omega_star_periods: Vec<(i64, Complex64)>,
    pub report: &'a HypothesesReport,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct StageSummary {
    pub stage: String,
    pub passed: bool,
    pub detail: String,
}
