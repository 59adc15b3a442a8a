use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use zsforms::growth::{growth_profile, vanishing_hypotheses_check};
use zsforms::normalization::{omega_hat, verify_normalization, DifferentialBasisElement, Target};
use zsforms::riemann_surface::{check_omega_star, CanonicalRoot, ContourSystem};
use zsforms::spectrum::{compute_spectrum, PeriodicSpectrum, SpectrumOptions};
use zsforms::zeros::{double_point_vanishing_check, verify_sigma_asymptotics, zero_set};
use zsforms::{Discriminant, Error, Potential};

use crate::config::{Cli, Command, RunArgs};
use crate::report::*;

pub const EXIT_CERTIFICATE: u8 = 1;
pub const EXIT_COUNTING: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_SOLVE: u8 = 4;
pub const EXIT_NORMALIZATION: u8 = 5;

/// Largest admissible `|(1/2π)∮_{A_m} ω_n − δ_nm|`.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Largest admissible `Ω*` period on the outer contours.
pub const OMEGA_STAR_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Counting(_) | Error::Contour(_) | Error::Branch(_) | Error::Integration { .. } | Error::Quadrature(_) => EXIT_COUNTING,
            Error::InvalidPotential(_) => EXIT_IO,
            Error::Solve(_) => EXIT_SOLVE,
            Error::Normalization(_) => EXIT_NORMALIZATION,
            Error::Zeros(_) | Error::Growth(_) => EXIT_CERTIFICATE,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Output<'a> {
    dir: &'a Path,
    log: fs::File,
    started: Instant,
}

impl<'a> Output<'a> {
    fn open(dir: &'a Path) -> Outcome<Self> {
        fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_IO, format!("cannot create {}: {e}", dir.display())))?;
        let log = fs::File::create(dir.join("run.log")).map_err(|e| Failure::new(EXIT_IO, format!("cannot write run.log: {e}")))?;
        Ok(Self {
            dir,
            log,
            started: Instant::now(),
        })
    }

    fn write(&self, name: &str, text: &str) -> Outcome<()> {
        fs::write(self.dir.join(name), text).map_err(|e| Failure::new(EXIT_IO, format!("cannot write {name}: {e}")))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Outcome<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Timing goes to the sidecar log only.
    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.log, "[{:>9.3}s] {msg}", self.started.elapsed().as_secs_f64());
    }
}

struct Pipeline<'a> {
    args: &'a RunArgs,
    phi: Potential,
    disc: Discriminant,
    spec: Option<PeriodicSpectrum>,
    contours: Option<ContourSystem>,
    elements: BTreeMap<i64, DifferentialBasisElement>,
    normalized: bool,
    summary: Vec<StageSummary>,
    first_failure: Option<Failure>,
}

impl<'a> Pipeline<'a> {
    fn new(args: &'a RunArgs) -> Outcome<Self> {
        let text = fs::read_to_string(&args.potential)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot read {}: {e}", args.potential.display())))?;
        let phi = Potential::from_json(&text)?;
        let disc = Discriminant::new(phi.clone(), args.ode_tol);
        Ok(Self {
            args,
            phi,
            disc,
            spec: None,
            contours: None,
            elements: BTreeMap::new(),
            normalized: false,
            summary: Vec::new(),
            first_failure: None,
        })
    }

    fn record(&mut self, stage: &str, passed: bool, detail: String, code: u8) {
        if !passed && self.first_failure.is_none() {
            self.first_failure = Some(Failure::new(code, format!("{stage}: {detail}")));
        }
        self.summary.push(StageSummary {
            stage: stage.into(),
            passed,
            detail,
        });
    }

    fn spectrum(&mut self, out: &mut Output) -> Outcome<()> {
        if self.spec.is_some() {
            return Ok(());
        }
        // the period systems are certified against a doubled truncation
        let spec = compute_spectrum(&self.disc, &SpectrumOptions::new(2 * self.args.k))?;
        out.note(&format!("spectrum to |k| = {}, N0 = {}", spec.kmax, spec.n0));
        out.json("spectrum.json", &SpectrumReport::new(&self.phi, &spec))?;
        out.write("spectrum.csv", &spectrum_csv(&spec))?;
        self.record("spectrum", true, format!("N0 = {}", spec.n0), 0);
        self.spec = Some(spec);
        Ok(())
    }

    fn contours(&mut self, out: &mut Output) -> Outcome<()> {
        self.spectrum(out)?;
        if self.contours.is_some() {
            return Ok(());
        }
        let spec = self.spec.as_ref().expect("spectrum computed");
        let root = CanonicalRoot::new(spec);
        let sys = ContourSystem::build(&self.disc, spec, &root, self.args.quad_tol)?;
        out.note("contours sampled");
        let check = check_omega_star(&sys);
        let passed = check.outer_max <= OMEGA_STAR_TOL && check.inner_max_defect <= OMEGA_STAR_TOL;
        out.json("omega_star.json", &OmegaStarReport { check: &check, passed })?;
        self.record(
            "omega-star periods",
            passed,
            format!("outer max {:.3e}, inner defect {:.3e}", check.outer_max, check.inner_max_defect),
            EXIT_CERTIFICATE,
        );
        self.contours = Some(sys);
        Ok(())
    }

    fn element(&mut self, n: i64) -> Outcome<&DifferentialBasisElement> {
        if !self.elements.contains_key(&n) {
            let spec = self.spec.as_ref().expect("spectrum computed");
            let sys = self.contours.as_ref().expect("contours sampled");
            let el = DifferentialBasisElement::new(&self.disc, sys, spec, Target::Index(n), self.args.k)?;
            self.elements.insert(n, el);
        }
        Ok(&self.elements[&n])
    }

    fn differentials(&mut self, out: &mut Output) -> Outcome<()> {
        self.contours(out)?;
        if self.normalized {
            return Ok(());
        }
        self.normalized = true;
        let k = self.args.k;
        for &n in &self.args.n {
            self.element(n)?;
            let el = &self.elements[&n];
            let sys = self.contours.as_ref().expect("contours sampled");
            let row = verify_normalization(sys, el, k)?;
            let passed = row.max_error <= NORMALIZATION_TOL;
            out.json(
                &format!("beta_{n}.json"),
                &DifferentialReport {
                    n,
                    beta: &el.beta,
                    normalization: &row,
                    passed,
                },
            )?;
            out.note(&format!("ω_{n}: normalization error {:.3e}", row.max_error));
            self.record(&format!("normalization n = {n}"), passed, format!("max error {:.3e}", row.max_error), EXIT_NORMALIZATION);
        }
        Ok(())
    }

    fn zeros(&mut self, out: &mut Output) -> Outcome<()> {
        self.differentials(out)?;
        let spec = self.spec.as_ref().expect("spectrum computed");
        let sys = self.contours.as_ref().expect("contours sampled");
        let mut results = Vec::new();
        for &n in &self.args.n {
            let el = &self.elements[&n];
            let zs = zero_set(el, spec, sys)?;
            let asym = verify_sigma_asymptotics(&zs, spec);
            let van = double_point_vanishing_check(el, spec, sys)?;
            let passed = zs.all_certified() && asym.collapsed_ok && van.passed;
            out.write(&format!("sigma_{n}.csv"), &sigma_csv(&zs, spec, n))?;
            out.json(
                &format!("zeros_{n}.json"),
                &ZerosReport {
                    n,
                    zeros: &zs,
                    asymptotics: &asym,
                    vanishing: &van,
                    passed,
                },
            )?;
            results.push((n, passed, zs.threshold, zs.max_residual()));
        }
        out.note("zeros extracted");
        for (n, passed, thr, res) in results {
            self.record(&format!("zeros n = {n}"), passed, format!("threshold {thr}, max residual {res:.3e}"), EXIT_CERTIFICATE);
        }
        Ok(())
    }

    fn growth(&mut self, out: &mut Output) -> Outcome<()> {
        self.differentials(out)?;
        let n0 = self.spec.as_ref().expect("spectrum computed").n0;
        for m in (1 - n0)..n0 {
            self.element(m)?;
        }
        let spec = self.spec.as_ref().expect("spectrum computed");
        let sys = self.contours.as_ref().expect("contours sampled");
        let elements: Vec<DifferentialBasisElement> = self.elements.values().cloned().collect();
        let (hat, a) = omega_hat(&self.disc, sys, &elements)?;
        let hyp = vanishing_hypotheses_check(&hat, spec, sys, self.args.k)?;
        out.json(
            "hypotheses.json",
            &HypothesesOut {
                omega_star_periods: a,
                report: &hyp,
                passed: hyp.passed(),
            },
        )?;
        let gm = self.args.growth_m;
        let tol = self.args.quad_tol;
        let ms: Vec<i64> = (1..=gm).collect();
        let prof = growth_profile(&hat, spec, 0.0, &ms, tol)?;
        out.write("growth_hat.csv", &prof.to_csv())?;
        out.json(
            "growth_hat.json",
            &GrowthReport {
                label: "omega_hat".into(),
                profile: &prof,
                reference_exponent: 2.0 / PI,
            },
        )?;
        out.note(&format!("ω̂ growth exponent {:.4}", prof.fitted_exponent));
        let mut profiles = Vec::new();
        for &n in &self.args.n {
            let el = &self.elements[&n];
            let start = n.abs() as f64 * PI + PI / 4.0;
            let ms: Vec<i64> = (n.abs() + 1..=n.abs() + gm).collect();
            let p = growth_profile(&el.zeta, spec, start, &ms, tol)?;
            out.write(&format!("growth_{n}.csv"), &p.to_csv())?;
            out.json(
                &format!("growth_{n}.json"),
                &GrowthReport {
                    label: format!("omega_{n}"),
                    profile: &p,
                    reference_exponent: 2.0 / PI,
                },
            )?;
            profiles.push((n, p.is_increasing(), p.fitted_exponent));
        }
        out.note("growth profiles done");
        self.record(
            "omega-hat hypotheses",
            hyp.passed(),
            format!("max period {:.3e}, max double value {:.3e}", hyp.max_period, hyp.max_double_value),
            EXIT_CERTIFICATE,
        );
        self.record(
            "omega-hat growth",
            prof.is_increasing(),
            format!("exponent {:.4} ± {:.4}", prof.fitted_exponent, prof.standard_error),
            EXIT_CERTIFICATE,
        );
        for (n, inc, e) in profiles {
            self.record(&format!("growth n = {n}"), inc, format!("exponent {e:.4}"), EXIT_CERTIFICATE);
        }
        Ok(())
    }
}

pub fn execute(cli: &Cli) -> Outcome<()> {
    let args = cli.command.args();
    args.validate().map_err(|m| Failure::new(EXIT_IO, m))?;
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot size the worker pool: {e}")))?;
    }
    let mut pipe = Pipeline::new(args)?;
    let mut out = Output::open(&args.out)?;
    let result = match &cli.command {
        Command::Spectrum(_) => pipe.spectrum(&mut out),
        Command::Differentials(_) => pipe.differentials(&mut out),
        Command::Zeros(_) => pipe.zeros(&mut out),
        Command::Growth(_) => pipe.growth(&mut out),
        Command::VerifyAll(_) => pipe.zeros(&mut out).and_then(|()| pipe.growth(&mut out)),
    };
    if let Err(f) = &result {
        pipe.record("pipeline", false, f.message.clone(), f.code);
    }
    if matches!(cli.command, Command::VerifyAll(_)) {
        out.json("summary.json", &pipe.summary)?;
    }
    result?;
    match pipe.first_failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
