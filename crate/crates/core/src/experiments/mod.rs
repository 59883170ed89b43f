//! Monte Carlo sweeps over scintillation strength, crosstalk matrices and
//! decay-scale fits.

mod crosstalk;
mod fit;
mod projector;
mod sweep;

pub use crosstalk::{crosstalk_matrix, CrosstalkConfig, CrosstalkMatrix};
pub use fit::{fit_crossings, fit_decay_scale, half_crossing, least_squares, DecayFit};
pub use projector::QubitProjector;
pub use sweep::{run_sweep, run_sweep_with_workers, with_workers, SweepPoint, SweepResult};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{OamError, Result};
use crate::grid::{GridSpec, DEFAULT_SAMPLES, DEFAULT_WINDOW_WAISTS};
use crate::turbulence::{SpectrumModel, MIN_SAMPLES_PER_FRIED};

/// Ensemble size for routine runs.
pub const DEFAULT_ENSEMBLE: usize = 200;
/// Ensemble size of long reference runs.
pub const REFERENCE_ENSEMBLE: usize = 1000;
/// Smallest ensemble accepted by a sweep.
pub const MIN_ENSEMBLE: usize = 30;
/// Bootstrap resamples behind each reported standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Prefactor of the decay-distance closed form.
pub const DECAY_DISTANCE_PREFACTOR: f64 = 0.06;

/// Which arms of the entangled pair cross the turbulence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Photon A only; photon B is measured ideally.
    SinglePhoton,
    /// Both photons, through independent screens.
    TwoPhoton,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::SinglePhoton => "single-photon",
            Scenario::TwoPhoton => "two-photon",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = OamError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-photon" | "single" => Ok(Scenario::SinglePhoton),
            "two-photon" | "two" => Ok(Scenario::TwoPhoton),
            _ => Err(OamError::Domain(format!("unknown scenario `{s}`"))),
        }
    }
}

/// Everything that determines a sweep's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub q_values: Vec<u32>,
    /// Scintillation strengths `w0/r0`, ascending from 0.
    pub strengths: Vec<f64>,
    pub ensemble_size: usize,
    pub n_samples: usize,
    /// Window side in units of the waist.
    pub window_waists: f64,
    /// Beam waist, meters.
    pub w0: f64,
    /// Wavelength, meters.
    pub wavelength: f64,
    /// Free-space distance between screen and projection, meters.
    pub dz: f64,
    pub spectrum: SpectrumModel,
    pub subharmonic_levels: u32,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::SinglePhoton,
            q_values: vec![1, 3, 5, 7],
            strengths: default_strengths(),
            ensemble_size: DEFAULT_ENSEMBLE,
            n_samples: DEFAULT_SAMPLES,
            window_waists: DEFAULT_WINDOW_WAISTS,
            w0: 0.1,
            wavelength: 1550e-9,
            dz: 0.0,
            spectrum: SpectrumModel::Kolmogorov,
            subharmonic_levels: 0,
            master_seed: 1,
        }
    }
}

/// `0, 0.2, …, 4.0`.
pub fn default_strengths() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 5.0).collect()
}

impl SweepConfig {
    pub fn reference_mode(scenario: Scenario) -> Self {
        Self { scenario, ensemble_size: REFERENCE_ENSEMBLE, ..Self::default() }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::for_waist(self.n_samples, self.w0, self.window_waists)
    }

    /// Checks the invariants, including that every strength is resolvable
    /// on the grid (`r0 >= 2·pitch`).
    pub fn validate(&self) -> Result<()> {
        if self.q_values.is_empty() || self.q_values.contains(&0) {
            return Err(OamError::Validation("q values must be a non-empty list of positive integers".into()));
        }
        let mut sorted = self.q_values.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.q_values.len() {
            return Err(OamError::Validation("q values must be distinct".into()));
        }
        if self.strengths.first() != Some(&0.0) {
            return Err(OamError::Validation("strengths must start at 0".into()));
        }
        if self.strengths.iter().any(|s| !s.is_finite()) || self.strengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OamError::Validation("strengths must be finite and strictly ascending".into()));
        }
        if self.ensemble_size < MIN_ENSEMBLE {
            return Err(OamError::Validation(format!(
                "ensemble size must be at least {MIN_ENSEMBLE}, got {}",
                self.ensemble_size
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(OamError::Domain(format!("wavelength must be > 0, got {}", self.wavelength)));
        }
        if !(self.dz >= 0.0 && self.dz.is_finite()) {
            return Err(OamError::Domain(format!("dz must be >= 0, got {}", self.dz)));
        }
        self.spectrum.validate()?;
        let grid = self.grid()?;
        grid.check_beam(self.w0)?;
        for &s in &self.strengths {
            check_resolvable(&grid, self.w0, s)?;
        }
        Ok(())
    }
}

pub(crate) fn check_resolvable(grid: &GridSpec, w0: f64, strength: f64) -> Result<()> {
    if strength <= 0.0 {
        return Ok(());
    }
    let r0 = w0 / strength;
    let min = MIN_SAMPLES_PER_FRIED * grid.pitch();
    if r0 < min {
        return Err(OamError::Resolution(format!(
            "strength w0/r0 = {strength} gives r0 = {r0:.4e} m, below {MIN_SAMPLES_PER_FRIED}·pitch = {min:.4e} m"
        )));
    }
    Ok(())
}

/// Propagation distance at which entanglement of `|±ell⟩` decays:
/// `0.06 λ² ℓ^{5/6} / (w0^{5/3} Cn²)`, in meters.
pub fn decay_distance(ell: f64, w0: f64, wavelength: f64, cn2: f64) -> Result<f64> {
    for (name, v) in [("l", ell), ("w0", w0), ("wavelength", wavelength), ("Cn2", cn2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(OamError::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(DECAY_DISTANCE_PREFACTOR * wavelength * wavelength * ell.powf(5.0 / 6.0) / (w0.powf(5.0 / 3.0) * cn2))
}
