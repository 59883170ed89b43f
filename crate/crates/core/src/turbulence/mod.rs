//! Kolmogorov turbulence: Fried-parameter calibration, random phase-screen
//! synthesis, and the structure-function estimator used to validate screens.

mod io;
mod screen;
mod structure;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{OamError, Result};

pub use io::{read_screen, write_screen, SCREEN_MAGIC};
pub use screen::{generate_screen_pair, PhaseScreen, ScreenGenerator, MIN_SAMPLES_PER_FRIED};
pub use structure::{estimate_structure_function, StructureFunction};

/// Prefactor of the Fried parameter, `r0 = 0.185 (λ² / (Cn² z))^{3/5}`.
pub const FRIED_PREFACTOR: f64 = 0.185;
/// Prefactor of the scintillation strength, `w0/r0 = 5.4054 w0 (Cn² z / λ²)^{3/5}`.
pub const SCINTILLATION_PREFACTOR: f64 = 5.4054;
/// Kolmogorov refractive-index spectrum, `Φn(k) = 0.033 Cn² k^{-11/3}`.
pub const KOLMOGOROV_PREFACTOR: f64 = 0.033;
/// Reference phase structure function `D(r) = 6.88 (r/r0)^{5/3}`.
pub const STRUCTURE_COEFFICIENT: f64 = 6.88;

/// Refractive-index structure constant, medium thickness and wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceParams {
    /// `Cn²` in m^{-2/3}.
    pub cn2: f64,
    /// Thickness `Δz` of the medium collapsed onto one screen, meters.
    pub dz: f64,
    pub wavelength: f64,
}

impl TurbulenceParams {
    pub fn new(cn2: f64, dz: f64, wavelength: f64) -> Result<Self> {
        if !(cn2.is_finite() && cn2 >= 0.0) {
            return Err(OamError::Domain(format!("Cn2 must be >= 0, got {cn2}")));
        }
        if !(dz.is_finite() && dz > 0.0) {
            return Err(OamError::Domain(format!("medium thickness must be > 0, got {dz}")));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(OamError::Domain(format!("wavelength must be > 0, got {wavelength}")));
        }
        Ok(Self { cn2, dz, wavelength })
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

fn check_path(p: &TurbulenceParams, z: f64) -> Result<()> {
    if !(z.is_finite() && z > 0.0) {
        return Err(OamError::Domain(format!("path length must be > 0, got {z}")));
    }
    if !(p.cn2 > 0.0) {
        return Err(OamError::Domain("Cn2 = 0: the Fried parameter is unbounded".into()));
    }
    Ok(())
}

/// Fried parameter `r0 = 0.185 (λ² / (Cn² z))^{3/5}` in meters.
pub fn fried_parameter(p: &TurbulenceParams, z: f64) -> Result<f64> {
    check_path(p, z)?;
    Ok(FRIED_PREFACTOR * (p.wavelength * p.wavelength / (p.cn2 * z)).powf(0.6))
}

/// Scintillation strength `w0/r0 = 5.4054 w0 (Cn² z / λ²)^{3/5}`.
pub fn scintillation_strength(w0: f64, p: &TurbulenceParams, z: f64) -> Result<f64> {
    check_path(p, z)?;
    if !(w0 > 0.0) {
        return Err(OamError::Domain(format!("waist must be > 0, got {w0}")));
    }
    Ok(SCINTILLATION_PREFACTOR * w0 * (p.cn2 * z / (p.wavelength * p.wavelength)).powf(0.6))
}

/// Shape of the refractive-index power spectrum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumModel {
    /// `k^{-11/3}`, zero at `k = 0`.
    #[default]
    Kolmogorov,
    /// `(k² + (2π/L0)²)^{-11/6}`, finite at `k = 0`.
    VonKarman { outer_scale: f64 },
}

impl SpectrumModel {
    /// Spectral shape at transverse wavenumber `k`; multiply by the phase
    /// spectrum coefficient of a [`ScreenTarget`] to get the phase PSD.
    pub fn shape(&self, k: f64) -> f64 {
        match *self {
            SpectrumModel::Kolmogorov => {
                if k > 0.0 {
                    k.powf(-11.0 / 3.0)
                } else {
                    0.0
                }
            }
            SpectrumModel::VonKarman { outer_scale } => {
                let k0 = 2.0 * PI / outer_scale;
                (k * k + k0 * k0).powf(-11.0 / 6.0)
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let SpectrumModel::VonKarman { outer_scale } = *self {
            if !(outer_scale.is_finite() && outer_scale > 0.0) {
                return Err(OamError::Domain(format!("outer scale must be > 0, got {outer_scale}")));
            }
        }
        Ok(())
    }
}

/// What a screen should represent: a physical medium or a bare Fried parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScreenTarget {
    Medium(TurbulenceParams),
    /// Fried parameter in meters; `f64::INFINITY` means no turbulence.
    Fried(f64),
}

impl ScreenTarget {
    /// Target for scintillation strength `w0/r0 = strength`.
    pub fn from_strength(w0: f64, strength: f64) -> Self {
        if strength > 0.0 {
            ScreenTarget::Fried(w0 / strength)
        } else {
            ScreenTarget::Fried(f64::INFINITY)
        }
    }

    /// Implied Fried parameter, `+∞` for a quiescent medium.
    pub fn fried(&self) -> f64 {
        match *self {
            ScreenTarget::Medium(p) if p.cn2 > 0.0 => {
                FRIED_PREFACTOR * (p.wavelength * p.wavelength / (p.cn2 * p.dz)).powf(0.6)
            }
            ScreenTarget::Medium(_) => f64::INFINITY,
            ScreenTarget::Fried(r0) => r0,
        }
    }

    /// Coefficient `c` of the screen phase spectrum `c · shape(K)`, with the
    /// spectrum taken against the measure `d²K`:
    /// `c = 2π · 0.033 · k0² Cn² Δz`.
    ///
    /// A bare Fried parameter is mapped through `k0² Cn² Δz = 4π² (0.185 / r0)^{5/3}`.
    pub fn phase_spectrum_coefficient(&self) -> f64 {
        let k2_cn2_dz = match *self {
            ScreenTarget::Medium(p) => p.k0() * p.k0() * p.cn2 * p.dz,
            ScreenTarget::Fried(r0) if r0.is_infinite() => 0.0,
            ScreenTarget::Fried(r0) => 4.0 * PI * PI * (FRIED_PREFACTOR / r0).powf(5.0 / 3.0),
        };
        2.0 * PI * KOLMOGOROV_PREFACTOR * k2_cn2_dz
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            ScreenTarget::Medium(p) => TurbulenceParams::new(p.cn2, p.dz, p.wavelength).map(|_| ()),
            ScreenTarget::Fried(r0) if r0 > 0.0 => Ok(()),
            ScreenTarget::Fried(r0) => Err(OamError::Domain(format!("Fried parameter must be > 0, got {r0}"))),
        }
    }
}
