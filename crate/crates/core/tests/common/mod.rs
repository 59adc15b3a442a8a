#![allow(dead_code)]

use zsforms::discriminant::DEFAULT_ODE_TOL;
use zsforms::riemann_surface::{CanonicalRoot, ContourSystem};
use zsforms::spectrum::{compute_spectrum, PeriodicSpectrum, SpectrumOptions};
use zsforms::{Complex64, Discriminant, Potential, Symmetry};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn scaled(p1: &[(i64, Complex64)], p2: &[(i64, Complex64)], norm: f64) -> Potential {
    let total: f64 = p1.iter().chain(p2).map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt();
    let s = norm / total;
    Potential::trig(
        p1.iter().map(|&(k, z)| (k, z * s)),
        p2.iter().map(|&(k, z)| (k, z * s)),
        Symmetry::Generic,
    )
    .expect("valid test potential")
}

/// Three modes in each component, L² norm 0.5.
pub fn generic_a() -> Potential {
    scaled(
        &[(1, c(0.25, 0.05)), (-1, c(0.10, -0.12)), (2, c(0.0, 0.08))],
        &[(0, c(0.12, 0.0)), (-1, c(-0.15, 0.1)), (2, c(0.05, 0.0))],
        0.5,
    )
}

/// Two modes in each component, L² norm 0.4.
pub fn generic_b() -> Potential {
    scaled(
        &[(0, c(0.1, 0.2)), (3, c(-0.15, 0.0))],
        &[(1, c(0.0, 0.2)), (-2, c(0.1, 0.05))],
        0.4,
    )
}

/// Defocusing plane wave `φ₁ = a e^{2πix}`, `φ₂ = ā e^{−2πix}` of L² norm 0.5.
pub fn plane_wave() -> Potential {
    let a = c(0.5 / 2f64.sqrt(), 0.0);
    Potential::trig([(1, a)], [(-1, a.conj())], Symmetry::Generic).expect("valid test potential")
}

pub struct Setup {
    pub disc: Discriminant,
    pub spec: PeriodicSpectrum,
    pub contours: ContourSystem,
}

pub fn setup(phi: Potential, kmax: i64) -> Setup {
    let disc = Discriminant::new(phi, DEFAULT_ODE_TOL);
    let spec = compute_spectrum(&disc, &SpectrumOptions::new(kmax)).expect("spectrum");
    let root = CanonicalRoot::new(&spec);
    let contours = ContourSystem::build(&disc, &spec, &root, 1e-10).expect("contours");
    Setup { disc, spec, contours }
}
