use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "zsforms", version, about = "Periodic Zakharov–Shabat spectra, normalized differentials and their zeros")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Periodic spectrum with counting certificates.
    Spectrum(RunArgs),
    /// Normalized differentials ω_n with their normalization rows.
    Differentials(RunArgs),
    /// Zeros of the numerators ζ_n.
    Zeros(RunArgs),
    /// Growth profiles and vanishing hypotheses.
    Growth(RunArgs),
    /// All stages with a summary report.
    VerifyAll(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Spectrum(a) | Command::Differentials(a) | Command::Zeros(a) | Command::Growth(a) | Command::VerifyAll(a) => a,
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// Potential description (JSON).
    pub potential: PathBuf,
    /// Truncation index of the period systems.
    #[arg(long = "K", default_value_t = 32)]
    pub k: i64,
    #[arg(long, default_value_t = 1e-12)]
    pub ode_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Indices of the differentials, comma separated.
    #[arg(long = "n", value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2i64, -1, 0, 1, 2])]
    pub n: Vec<i64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Largest radius index m of the growth profiles, r_m = (m + 1/2)π.
    #[arg(long, default_value_t = 8)]
    pub growth_m: i64,
}

impl RunArgs {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ode_tol > 0.0 && self.quad_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if self.k < 4 {
            return Err(format!("--K must be at least 4 (got {})", self.k));
        }
        if let Some(n) = self.n.iter().find(|n| n.abs() > self.k) {
            return Err(format!("index n = {n} lies outside [−K, K]"));
        }
        if self.growth_m < 6 {
            return Err("--growth-m must be at least 6 to fit an exponent".into());
        }
        if self.jobs == Some(0) {
            return Err("--jobs must be positive".into());
        }
        Ok(())
    }
}
