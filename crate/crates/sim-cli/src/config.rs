//! Configuration schema and validation.
//!
//! A run is described by a single JSON file (no environment variables), so
//! a config plus a seed reproduces every artifact byte for byte.

use std::path::Path;

use floquet_lindblad::bath::BathSpectrum;
use floquet_lindblad::json::matrix_from_json_value;
use floquet_lindblad::matrix::{self, CMat, Tolerances};
use floquet_lindblad::periodic::PeriodicMatrixFunction;
use floquet_lindblad::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorClass {
    FastWcl,
    Adiabatic,
}

#[derive(Debug, Deserialize)]
pub struct TimeGridSpec {
    /// Final time in units of the drive period.
    pub periods: f64,
    /// Number of grid points (inclusive of t = 0).
    pub points: usize,
}

#[derive(Debug, Deserialize)]
struct HarmonicEntry {
    n: i64,
    matrix: serde_json::Value,
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    dimension: usize,
    period: f64,
    hamiltonian: Vec<HarmonicEntry>,
    couplings: Vec<serde_json::Value>,
    bath: BathSpectrum,
    truncation: usize,
    #[serde(default)]
    harmonic_cutoff: Option<i64>,
    generator: GeneratorClass,
    time_grid: TimeGridSpec,
    #[serde(default = "default_steps")]
    steps_per_period: usize,
    #[serde(default)]
    tolerances: Option<Tolerances>,
    seed: u64,
    #[serde(default)]
    interior_margin: Option<usize>,
    /// Fault injection: flip the sign of the dissipative part after
    /// assembly. Exists so the divisibility detectors can be demonstrated
    /// against a known-bad generator; leave false for physical runs.
    #[serde(default)]
    invert_dissipator: bool,
}

fn default_steps() -> usize {
    512
}

/// A validated simulation configuration.
pub struct SimulationConfig {
    pub dimension: usize,
    pub period: f64,
    /// Hamiltonian Fourier coefficients, Hermitian-symmetric by validation.
    pub hamiltonian: PeriodicMatrixFunction,
    pub couplings: Vec<CMat>,
    pub bath: BathSpectrum,
    pub truncation: usize,
    pub harmonic_cutoff: i64,
    pub generator: GeneratorClass,
    pub time_grid: TimeGridSpec,
    pub steps_per_period: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub interior_margin: usize,
    pub invert_dissipator: bool,
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = serde_json::from_str(&text)?;

    if raw.dimension < 1 {
        return Err(field_err("dimension", "must be at least 1"));
    }
    if !(raw.period.is_finite() && raw.period > 0.0) {
        return Err(field_err("period", format!("{} is not a positive number", raw.period)));
    }

    // Hamiltonian coefficients: parse, check dimensions and the
    // Hermiticity pairing H_{-n} = H_n^H.
    let mut pairs: Vec<(i64, CMat)> = Vec::new();
    for e in &raw.hamiltonian {
        let m = matrix_from_json_value(&e.matrix)
            .map_err(|err| field_err("hamiltonian", format!("harmonic {}: {err}", e.n)))?;
        if m.nrows() != raw.dimension || m.ncols() != raw.dimension {
            return Err(field_err(
                "hamiltonian",
                format!("harmonic {} has shape {}x{}", e.n, m.nrows(), m.ncols()),
            ));
        }
        pairs.push((e.n, m));
    }
    if pairs.is_empty() {
        return Err(field_err("hamiltonian", "at least one Fourier coefficient required"));
    }
    for (n, m) in &pairs {
        let partner: CMat = pairs
            .iter()
            .filter(|(k, _)| k == &-n)
            .fold(matrix::zeros(raw.dimension), |acc, (_, v)| acc + v);
        let residual = matrix::max_abs(&(&matrix::dagger(m) - &partner));
        if residual > 1e-12 * matrix::max_abs(m).max(1.0) {
            return Err(field_err(
                "hamiltonian",
                format!("H_{{{}}} != H_{{{}}}^H (residual {residual:.3e}); the drive must be Hermitian", -n, n),
            ));
        }
    }
    let hamiltonian = PeriodicMatrixFunction::from_coeffs(raw.period, pairs)
        .map_err(|e| field_err("hamiltonian", e.to_string()))?;

    let bandwidth = hamiltonian.bandwidth();
    if raw.truncation < bandwidth + 2 {
        return Err(field_err(
            "truncation",
            format!("must be at least bandwidth + 2 = {}", bandwidth + 2),
        ));
    }

    let mut couplings = Vec::new();
    for (k, v) in raw.couplings.iter().enumerate() {
        let m = matrix_from_json_value(v)
            .map_err(|err| field_err("couplings", format!("entry {k}: {err}")))?;
        if m.nrows() != raw.dimension || m.ncols() != raw.dimension {
            return Err(field_err("couplings", format!("entry {k} has wrong shape")));
        }
        couplings.push(m);
    }
    if couplings.is_empty() {
        return Err(field_err("couplings", "at least one jump operator required"));
    }

    raw.bath
        .validate()
        .map_err(|e| field_err("bath", e.to_string()))?;

    if raw.time_grid.points < 2 {
        return Err(field_err("time_grid.points", "need at least 2 grid points"));
    }
    if !(raw.time_grid.periods.is_finite() && raw.time_grid.periods > 0.0) {
        return Err(field_err("time_grid.periods", "must be positive"));
    }
    if raw.steps_per_period < 16 {
        return Err(field_err("steps_per_period", "must be at least 16"));
    }

    Ok(SimulationConfig {
        dimension: raw.dimension,
        period: raw.period,
        harmonic_cutoff: raw.harmonic_cutoff.unwrap_or(8).max(0),
        hamiltonian,
        couplings,
        bath: raw.bath,
        truncation: raw.truncation,
        generator: raw.generator,
        time_grid: raw.time_grid,
        steps_per_period: raw.steps_per_period,
        tolerances: raw.tolerances.unwrap_or_default(),
        seed: raw.seed,
        interior_margin: raw.interior_margin.unwrap_or(3),
        invert_dissipator: raw.invert_dissipator,
    })
}
