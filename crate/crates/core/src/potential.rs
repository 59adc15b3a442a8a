//! Period-one potentials `φ = (φ₁, φ₂)` stored as truncated Fourier series.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for checking a declared symmetry against the coefficients.
const SYMMETRY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Generic,
    /// `φ₂ = conj φ₁`
    Defocusing,
    /// `φ₂ = −conj φ₁`
    Focusing,
    Zero,
    Constant,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symmetry::Generic => "generic",
            Symmetry::Defocusing => "defocusing",
            Symmetry::Focusing => "focusing",
            Symmetry::Zero => "zero",
            Symmetry::Constant => "constant",
        };
        f.write_str(s)
    }
}

/// One Fourier mode `c·e^{2πikx}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub k: i64,
    pub c: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    phi1: Vec<Mode>,
    phi2: Vec<Mode>,
    symmetry: Symmetry,
}

fn normalize_modes(modes: impl IntoIterator<Item = (i64, Complex64)>) -> Vec<Mode> {
    let mut out: Vec<Mode> = Vec::new();
    for (k, c) in modes {
        match out.iter_mut().find(|m| m.k == k) {
            Some(m) => m.c += c,
            None => out.push(Mode { k, c }),
        }
    }
    out.retain(|m| m.c != Complex64::new(0.0, 0.0));
    out.sort_by_key(|m| m.k);
    out
}

fn coeff(modes: &[Mode], k: i64) -> Complex64 {
    modes
        .iter()
        .find(|m| m.k == k)
        .map_or(Complex64::new(0.0, 0.0), |m| m.c)
}

impl Potential {
    pub fn zero() -> Self {
        Self {
            phi1: Vec::new(),
            phi2: Vec::new(),
            symmetry: Symmetry::Zero,
        }
    }

    /// Constant potential `φ₁ ≡ a`, `φ₂ ≡ b`.
    pub fn constant(a: Complex64, b: Complex64) -> Self {
        let mut p = Self {
            phi1: normalize_modes([(0, a)]),
            phi2: normalize_modes([(0, b)]),
            symmetry: Symmetry::Constant,
        };
        if p.is_zero() {
            p.symmetry = Symmetry::Zero;
        }
        p
    }

    /// Trigonometric polynomial from `(k, c_k)` lists. The symmetry tag is validated.
    pub fn trig(
        phi1: impl IntoIterator<Item = (i64, Complex64)>,
        phi2: impl IntoIterator<Item = (i64, Complex64)>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        let p = Self {
            phi1: normalize_modes(phi1),
            phi2: normalize_modes(phi2),
            symmetry,
        };
        p.validate()?;
        Ok(p)
    }

    /// Focusing or defocusing potential determined by `φ₁` alone.
    pub fn nls(phi1: impl IntoIterator<Item = (i64, Complex64)>, focusing: bool) -> Self {
        let phi1 = normalize_modes(phi1);
        let sign = if focusing { -1.0 } else { 1.0 };
        let phi2 = normalize_modes(phi1.iter().map(|m| (-m.k, m.c.conj() * sign)));
        let symmetry = if focusing {
            Symmetry::Focusing
        } else {
            Symmetry::Defocusing
        };
        Self {
            phi1,
            phi2,
            symmetry,
        }
    }

    /// Converts equispaced samples on `[0, 1)` into Fourier coefficients.
    /// Coefficients below `1e-15` relative to the largest one are dropped.
    pub fn from_samples(phi1: &[Complex64], phi2: &[Complex64], symmetry: Symmetry) -> Result<Self> {
        let n = phi1.len();
        if n == 0 || phi2.len() != n {
            return Err(Error::InvalidPotential(
                "sample arrays must be non-empty and of equal length".into(),
            ));
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let transform = |samples: &[Complex64]| -> Vec<(i64, Complex64)> {
            let mut buf = samples.to_vec();
            fft.process(&mut buf);
            let scale = 1.0 / n as f64;
            let max = buf.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale;
            buf.iter()
                .enumerate()
                .filter_map(|(j, c)| {
                    let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                    let c = c * scale;
                    (c.norm() > 1e-15 * max).then_some((k, c))
                })
                .collect()
        };
        Self::trig(transform(phi1), transform(phi2), symmetry)
    }

    fn validate(&self) -> Result<()> {
        for m in self.phi1.iter().chain(&self.phi2) {
            if !(m.c.re.is_finite() && m.c.im.is_finite()) {
                return Err(Error::InvalidPotential(format!("non-finite coefficient at k = {}", m.k)));
            }
        }
        let scale = self.coefficient_norm().max(f64::MIN_POSITIVE);
        let mismatch = |sign: f64| -> f64 {
            let ks = self.phi1.iter().map(|m| -m.k).chain(self.phi2.iter().map(|m| m.k));
            ks.map(|k| (coeff(&self.phi2, k) - coeff(&self.phi1, -k).conj() * sign).norm())
                .fold(0.0, f64::max)
        };
        let ok = match self.symmetry {
            Symmetry::Generic => true,
            Symmetry::Defocusing => mismatch(1.0) <= SYMMETRY_TOL * scale,
            Symmetry::Focusing => mismatch(-1.0) <= SYMMETRY_TOL * scale,
            Symmetry::Zero => self.is_zero(),
            Symmetry::Constant => self.phi1.iter().chain(&self.phi2).all(|m| m.k == 0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPotential(format!(
                "coefficients are inconsistent with the declared symmetry '{}'",
                self.symmetry
            )))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phi1.is_empty() && self.phi2.is_empty()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn phi1_modes(&self) -> &[Mode] {
        &self.phi1
    }

    pub fn phi2_modes(&self) -> &[Mode] {
        &self.phi2
    }

    /// Largest retained |frequency|.
    pub fn truncation_radius(&self) -> i64 {
        self.phi1
            .iter()
            .chain(&self.phi2)
            .map(|m| m.k.abs())
            .max()
            .unwrap_or(0)
    }

    /// `(‖φ₁‖² + ‖φ₂‖²)^{1/2}` in `L²[0,1]`.
    pub fn l2_norm(&self) -> f64 {
        self.coefficient_norm()
    }

    fn coefficient_norm(&self) -> f64 {
        self.phi1
            .iter()
            .chain(&self.phi2)
            .map(|m| m.c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Upper bound for `max(|φ₁(x)|, |φ₂(x)|)`.
    pub fn sup_bound(&self) -> f64 {
        let s1: f64 = self.phi1.iter().map(|m| m.c.norm()).sum();
        let s2: f64 = self.phi2.iter().map(|m| m.c.norm()).sum();
        s1.max(s2)
    }

    /// Mean of `φ₁φ₂` over a period.
    pub fn mean_product(&self) -> Complex64 {
        self.phi1.iter().map(|m| m.c * coeff(&self.phi2, -m.k)).sum()
    }

    /// `(φ₁(x), φ₂(x))`.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let sum = |modes: &[Mode]| -> Complex64 {
            modes
                .iter()
                .map(|m| m.c * Complex64::from_polar(1.0, 2.0 * PI * m.k as f64 * x))
                .sum()
        };
        (sum(&self.phi1), sum(&self.phi2))
    }

    /// Stable 64-bit fingerprint of the coefficients (FNV-1a over their bit patterns).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for (tag, modes) in [(1u8, &self.phi1), (2u8, &self.phi2)] {
            feed(&[tag]);
            for m in modes {
                feed(&m.k.to_le_bytes());
                feed(&m.c.re.to_bits().to_le_bytes());
                feed(&m.c.im.to_bits().to_le_bytes());
            }
        }
        h
    }
}

/// JSON ingestion document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialDoc {
    Constant {
        constant: ConstantDoc,
    },
    Samples {
        samples: SamplesDoc,
        #[serde(default)]
        symmetry: Option<Symmetry>,
    },
    Fourier {
        phi1: Vec<[f64; 3]>,
        phi2: Vec<[f64; 3]>,
        #[serde(default)]
        symmetry: Option<Symmetry>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantDoc {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplesDoc {
    pub phi1: Vec<[f64; 2]>,
    pub phi2: Vec<[f64; 2]>,
}

fn frequency(v: f64) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 1e9 {
        return Err(Error::InvalidPotential(format!("frequency {v} is not an integer")));
    }
    Ok(v as i64)
}

impl TryFrom<PotentialDoc> for Potential {
    type Error = Error;

    fn try_from(doc: PotentialDoc) -> Result<Self> {
        let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
        match doc {
            PotentialDoc::Constant { constant } => Ok(Potential::constant(c(constant.a), c(constant.b))),
            PotentialDoc::Samples { samples, symmetry } => {
                let p1: Vec<_> = samples.phi1.into_iter().map(c).collect();
                let p2: Vec<_> = samples.phi2.into_iter().map(c).collect();
                Potential::from_samples(&p1, &p2, symmetry.unwrap_or(Symmetry::Generic))
            }
            PotentialDoc::Fourier { phi1, phi2, symmetry } => {
                let conv = |v: Vec<[f64; 3]>| -> Result<Vec<(i64, Complex64)>> {
                    v.into_iter()
                        .map(|[k, re, im]| Ok((frequency(k)?, Complex64::new(re, im))))
                        .collect()
                };
                Potential::trig(conv(phi1)?, conv(phi2)?, symmetry.unwrap_or(Symmetry::Generic))
            }
        }
    }
}

impl From<&Potential> for PotentialDoc {
    fn from(p: &Potential) -> Self {
        let conv = |modes: &[Mode]| modes.iter().map(|m| [m.k as f64, m.c.re, m.c.im]).collect();
        PotentialDoc::Fourier {
            phi1: conv(&p.phi1),
            phi2: conv(&p.phi2),
            symmetry: Some(p.symmetry),
        }
    }
}

impl Potential {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PotentialDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidPotential(e.to_string()))?;
        doc.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluates_fourier_series() {
        let p = Potential::trig([(1, c(0.5, 0.0)), (-2, c(0.0, 0.25))], [(0, c(1.0, 0.0))], Symmetry::Generic)
            .unwrap();
        let x = 0.3;
        let (a, b) = p.eval(x);
        let expect = c(0.5, 0.0) * Complex64::from_polar(1.0, 2.0 * PI * x)
            + c(0.0, 0.25) * Complex64::from_polar(1.0, -4.0 * PI * x);
        assert!((a - expect).norm() < 1e-15);
        assert!((b - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(p.truncation_radius(), 2);
    }

    #[test]
    fn symmetry_validation() {
        let ok = Potential::trig([(1, c(0.3, 0.1))], [(-1, c(-0.3, 0.1))], Symmetry::Focusing);
        assert!(ok.is_ok());
        let bad = Potential::trig([(1, c(0.3, 0.1))], [(-1, c(0.3, 0.1))], Symmetry::Focusing);
        assert!(matches!(bad, Err(Error::InvalidPotential(_))));
        let nls = Potential::nls([(2, c(0.1, 0.2))], false);
        assert!(nls.validate().is_ok());
    }

    #[test]
    fn samples_round_trip() {
        let p = Potential::trig([(1, c(0.2, -0.1)), (-3, c(0.05, 0.0))], [(2, c(0.0, 0.3))], Symmetry::Generic)
            .unwrap();
        let n = 16;
        let (s1, s2): (Vec<_>, Vec<_>) = (0..n).map(|j| p.eval(j as f64 / n as f64)).unzip();
        let q = Potential::from_samples(&s1, &s2, Symmetry::Generic).unwrap();
        for x in [0.0, 0.17, 0.5, 0.93] {
            let (a, b) = p.eval(x);
            let (qa, qb) = q.eval(x);
            assert!((a - qa).norm() < 1e-13 && (b - qb).norm() < 1e-13);
        }
    }

    #[test]
    fn json_documents() {
        let p = Potential::from_json(r#"{"constant": {"a": [1, 0], "b": [-1, 0]}}"#).unwrap();
        assert_eq!(p.symmetry(), Symmetry::Constant);
        assert_eq!(p.mean_product(), c(-1.0, 0.0));
        let q = Potential::from_json(r#"{"phi1": [[1, 0.5, 0]], "phi2": [[-1, 0.5, 0]], "symmetry": "defocusing"}"#)
            .unwrap();
        assert_eq!(q.symmetry(), Symmetry::Defocusing);
        assert!(Potential::from_json(r#"{"phi1": [[0.5, 1, 0]], "phi2": []}"#).is_err());
        let round: PotentialDoc = (&q).into();
        let back: Potential = round.try_into().unwrap();
        assert_eq!(back, q);
    }
}
