//! Fundamental matrix of `M' = [[−iλ, iφ₁], [−iφ₂, iλ]]·M` with its first two
//! λ-derivatives.
//!
//! Each step factors out the diagonal part exactly (`y = e^{−iλσ₃s} v`) and
//! integrates the remaining off-diagonal system by 8-stage Gauss–Legendre
//! collocation (order 16). The λ-derivatives satisfy the same collocation
//! equations with lower-triangular forcing, so one 8×8 factorization per step
//! serves all three orders. Local errors are estimated by step doubling.

use std::sync::LazyLock;

use nalgebra::{Matrix2, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::gauss_legendre;

pub type Mat2 = Matrix2<Complex64>;
type Vec8 = SVector<Complex64, 8>;
type Mat8 = SMatrix<Complex64, 8, 8>;

const STAGES: usize = 8;
/// `1 / (order + 1)` for the step-size controller.
const CONTROL_EXPONENT: f64 = 1.0 / 17.0;
const MAX_STEPS: usize = 2_000_000;

struct Tableau {
    c: [f64; STAGES],
    b: [f64; STAGES],
    a: [[f64; STAGES]; STAGES],
}

static TABLEAU: LazyLock<Tableau> = LazyLock::new(|| {
    let (x, w) = gauss_legendre(STAGES);
    let mut c = [0.0; STAGES];
    let mut b = [0.0; STAGES];
    for i in 0..STAGES {
        c[i] = 0.5 * (1.0 + x[i]);
        b[i] = 0.5 * w[i];
    }
    // a_ij = ∫_0^{c_i} ℓ_j(t) dt, integrated exactly by the same rule on [0, c_i].
    let lagrange = |j: usize, t: f64| -> f64 {
        (0..STAGES)
            .filter(|&m| m != j)
            .map(|m| (t - c[m]) / (c[j] - c[m]))
            .product()
    };
    let mut a = [[0.0; STAGES]; STAGES];
    for i in 0..STAGES {
        for j in 0..STAGES {
            a[i][j] = (0..STAGES)
                .map(|q| 0.5 * c[i] * w[q] * lagrange(j, 0.5 * c[i] * (1.0 + x[q])))
                .sum();
        }
    }
    Tableau { c, b, a }
});

/// `M` together with `∂_λ M` and `∂²_λ M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub m: Mat2,
    pub dm: Mat2,
    pub d2m: Mat2,
}

impl Jet {
    pub fn identity() -> Self {
        Self {
            m: Mat2::identity(),
            dm: Mat2::zeros(),
            d2m: Mat2::zeros(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TransferMatrix {
    pub x: f64,
    pub lambda: Complex64,
    pub jet: Jet,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TransferMatrix {
    pub fn entries(&self) -> Mat2 {
        self.jet.m
    }

    pub fn determinant(&self) -> Complex64 {
        self.jet.m.determinant()
    }
}

fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// One collocation step of length `h` from `x0`.
fn step(phi: &Potential, lambda: Complex64, x0: f64, h: f64, y: &Jet) -> Jet {
    let t = &*TABLEAU;
    let i = Complex64::i();
    let mut b12 = [Complex64::default(); STAGES];
    let mut b21 = [Complex64::default(); STAGES];
    let mut b12d = [Complex64::default(); STAGES];
    let mut b21d = [Complex64::default(); STAGES];
    let mut b12dd = [Complex64::default(); STAGES];
    let mut b21dd = [Complex64::default(); STAGES];
    for j in 0..STAGES {
        let s = t.c[j] * h;
        let (p1, p2) = phi.eval(x0 + s);
        let e = (2.0 * i * lambda * s).exp();
        b12[j] = i * p1 * e;
        b21[j] = -i * p2 / e;
        b12d[j] = 2.0 * i * s * b12[j];
        b21d[j] = -2.0 * i * s * b21[j];
        b12dd[j] = -4.0 * s * s * b12[j];
        b21dd[j] = -4.0 * s * s * b21[j];
    }
    let ha = Mat8::from_fn(|r, c| Complex64::from(h * t.a[r][c]));
    let p = Mat8::from_fn(|r, c| ha[(r, c)] * b12[c]);
    let q = Mat8::from_fn(|r, c| ha[(r, c)] * b21[c]);
    let lu = (Mat8::identity() - p * q).lu();
    let hadamard = |a: &[Complex64; STAGES], v: &Vec8| Vec8::from_fn(|r, _| a[r] * v[r]);
    let ones = Vec8::repeat(Complex64::new(1.0, 0.0));
    // Solves z1 = r1 + P z2, z2 = r2 + Q z1.
    let solve = |r1: Vec8, r2: Vec8| -> (Vec8, Vec8) {
        let z1 = lu.solve(&(r1 + p * r2)).unwrap_or(r1);
        let z2 = r2 + q * z1;
        (z1, z2)
    };
    let quad = |a: &[Complex64; STAGES], v: &Vec8| -> Complex64 {
        (0..STAGES).map(|r| t.b[r] * a[r] * v[r]).sum::<Complex64>() * h
    };

    let mut v = y.m;
    let mut vd = y.dm;
    let mut vdd = y.d2m;
    for col in 0..2 {
        let (z1, z2) = solve(ones * y.m[(0, col)], ones * y.m[(1, col)]);
        let r1 = ones * y.dm[(0, col)] + ha * hadamard(&b12d, &z2);
        let r2 = ones * y.dm[(1, col)] + ha * hadamard(&b21d, &z1);
        let (zd1, zd2) = solve(r1, r2);
        let f12 = hadamard(&b12d, &zd2) * Complex64::from(2.0) + hadamard(&b12dd, &z2);
        let f21 = hadamard(&b21d, &zd1) * Complex64::from(2.0) + hadamard(&b21dd, &z1);
        let (zdd1, zdd2) = solve(ones * y.d2m[(0, col)] + ha * f12, ones * y.d2m[(1, col)] + ha * f21);

        v[(0, col)] += quad(&b12, &z2);
        v[(1, col)] += quad(&b21, &z1);
        vd[(0, col)] += quad(&b12, &zd2) + quad(&b12d, &z2);
        vd[(1, col)] += quad(&b21, &zd1) + quad(&b21d, &z1);
        vdd[(0, col)] += quad(&b12, &zdd2) + 2.0 * quad(&b12d, &zd2) + quad(&b12dd, &z2);
        vdd[(1, col)] += quad(&b21, &zdd1) + 2.0 * quad(&b21d, &zd1) + quad(&b21dd, &z1);
    }
    back_to_original_frame(lambda, h, &v, &vd, &vdd)
}

fn back_to_original_frame(lambda: Complex64, h: f64, v: &Mat2, vd: &Mat2, vdd: &Mat2) -> Jet {
    let i = Complex64::i();
    let mut out = Jet {
        m: *v,
        dm: *vd,
        d2m: *vdd,
    };
    for (row, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        let e = (sign * i * lambda * h).exp();
        let g = sign * i * h;
        for col in 0..2 {
            out.m[(row, col)] = e * v[(row, col)];
            out.dm[(row, col)] = e * (vd[(row, col)] + g * v[(row, col)]);
            out.d2m[(row, col)] = e * (vdd[(row, col)] + 2.0 * g * vd[(row, col)] - h * h * v[(row, col)]);
        }
    }
    out
}

fn relative_difference(a: &Jet, b: &Jet) -> f64 {
    let sm = max_abs(&a.m).max(f64::MIN_POSITIVE);
    let e0 = max_abs(&(a.m - b.m)) / sm;
    let e1 = max_abs(&(a.dm - b.dm)) / max_abs(&a.dm).max(sm);
    let e2 = max_abs(&(a.d2m - b.d2m)) / max_abs(&a.d2m).max(sm);
    e0.max(e1).max(e2)
}

/// Integrates from `0` to `x` with relative local tolerance `tol`.
pub fn transfer_matrix(phi: &Potential, lambda: Complex64, x: f64, tol: f64) -> Result<TransferMatrix> {
    if !(tol > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Integration {
            lambda,
            reason: format!("invalid arguments tol = {tol}, x = {x}"),
        });
    }
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Integration {
            lambda,
            reason: "non-finite spectral parameter".into(),
        });
    }
    let mut y = Jet::identity();
    let mut pos = 0.0;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    if phi.is_zero() {
        if x > 0.0 {
            let z = Mat2::zeros();
            y = back_to_original_frame(lambda, x, &Mat2::identity(), &z, &z);
            accepted = 1;
        }
        return Ok(TransferMatrix {
            x,
            lambda,
            jet: y,
            accepted_steps: accepted,
            rejected_steps: rejected,
        });
    }
    let omega = 2.0 * lambda.norm()
        + 2.0 * std::f64::consts::PI * phi.truncation_radius() as f64
        + phi.sup_bound()
        + 1.0;
    let mut h = (2.0 / omega).min(x);
    while pos < x {
        if accepted + rejected > MAX_STEPS {
            return Err(Error::Integration {
                lambda,
                reason: format!("step budget exhausted at x = {pos}"),
            });
        }
        let h_try = h.min(x - pos);
        if h_try < 1e-14 * (1.0 + pos) && pos + h_try < x {
            return Err(Error::Integration {
                lambda,
                reason: format!("step size underflow at x = {pos}"),
            });
        }
        let full = step(phi, lambda, pos, h_try, &y);
        let half = step(phi, lambda, pos, 0.5 * h_try, &y);
        let two = step(phi, lambda, pos + 0.5 * h_try, 0.5 * h_try, &half);
        let err = relative_difference(&two, &full);
        if !err.is_finite() {
            return Err(Error::Integration {
                lambda,
                reason: format!("non-finite state at x = {pos}"),
            });
        }
        if err <= tol {
            pos = if x - pos - h_try <= 1e-15 { x } else { pos + h_try };
            y = two;
            accepted += 1;
            let fac = if err == 0.0 { 4.0 } else { 0.9 * (tol / err).powf(CONTROL_EXPONENT) };
            h = h_try * fac.clamp(0.2, 4.0);
        } else {
            rejected += 1;
            let fac = 0.9 * (tol / err).powf(CONTROL_EXPONENT);
            h = h_try * fac.clamp(0.1, 0.9);
        }
    }
    let det = y.m.determinant();
    let scale = max_abs(&y.m).powi(2).max(1.0);
    if (det - 1.0).norm() > 100.0 * tol * scale {
        return Err(Error::Integration {
            lambda,
            reason: format!("determinant drifted to {det}"),
        });
    }
    Ok(TransferMatrix {
        x,
        lambda,
        jet: y,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}
