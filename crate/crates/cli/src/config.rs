//! TOML run configuration.
//!
//! Every physical quantity carries its unit in the key name: `_m` for
//! meters, `_m_neg2_3` for m^{-2/3}. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use oamturb::experiments::{default_strengths, CrosstalkConfig, Scenario, SweepConfig, DEFAULT_ENSEMBLE};
use oamturb::export::CSV_SIGNIFICANT_DIGITS;
use oamturb::grid::{DEFAULT_SAMPLES, DEFAULT_WINDOW_WAISTS};
use oamturb::turbulence::{ScreenTarget, SpectrumModel, TurbulenceParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_ENV: &str = "OAMTURB_OUT";
pub const DEFAULT_OUT: &str = "oamturb-out";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output: OutputSection,
    pub compute: ComputeSection,
    pub beam: BeamSection,
    pub grid: GridSection,
    pub turbulence: TurbulenceSection,
    pub sweep: SweepSection,
    pub screens: ScreensSection,
    pub crosstalk: CrosstalkSection,
    pub decay_table: DecayTableSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Significant digits of floats in CSV files.
    pub float_digits: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, float_digits: CSV_SIGNIFICANT_DIGITS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComputeSection {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub precision: Precision,
}

impl Default for ComputeSection {
    fn default() -> Self {
        Self { workers: 0, precision: Precision::F64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub waist_m: f64,
    pub wavelength_m: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self { waist_m: 0.1, wavelength_m: 1550e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub samples: usize,
    /// Window side in units of the waist.
    pub window_waists: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { samples: DEFAULT_SAMPLES, window_waists: DEFAULT_WINDOW_WAISTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Kolmogorov,
    VonKarman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurbulenceSection {
    pub spectrum: SpectrumKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_scale_m: Option<f64>,
}

impl Default for TurbulenceSection {
    fn default() -> Self {
        Self { spectrum: SpectrumKind::Kolmogorov, outer_scale_m: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub scenarios: Vec<Scenario>,
    pub q: Vec<u32>,
    /// Scintillation strengths w0/r0 (dimensionless), ascending from 0.
    pub strengths: Vec<f64>,
    pub ensemble: usize,
    /// Free space between screen and detector.
    pub propagation_m: f64,
    pub subharmonic_levels: u32,
    pub master_seed: u64,
    /// Also attach crosstalk matrices for the `[crosstalk]` strengths.
    pub crosstalk: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            scenarios: vec![Scenario::SinglePhoton, Scenario::TwoPhoton],
            q: vec![1, 3, 5, 7],
            strengths: default_strengths(),
            ensemble: DEFAULT_ENSEMBLE,
            propagation_m: 0.0,
            subharmonic_levels: 0,
            master_seed: 1,
            crosstalk: false,
        }
    }
}

/// Screens may be specified by strength, by Fried parameter, or by a
/// physical medium (`cn2_m_neg2_3` with `thickness_m`); at most one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreensSection {
    /// Number of screens generated (rounded up to whole pairs).
    pub count: usize,
    /// Number of screens written to disk.
    pub save: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fried_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cn2_m_neg2_3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thickness_m: Option<f64>,
    pub subharmonic_levels: u32,
    /// Largest lag of the structure function, in samples; default n/8.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    pub seed: u64,
}

impl Default for ScreensSection {
    fn default() -> Self {
        Self {
            count: 500,
            save: 16,
            strength: None,
            fried_m: None,
            cn2_m_neg2_3: None,
            thickness_m: None,
            subharmonic_levels: 3,
            max_lag: None,
            seed: 1,
        }
    }
}

pub const DEFAULT_SCREEN_STRENGTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrosstalkSection {
    pub scenarios: Vec<Scenario>,
    pub q_max: u32,
    pub strengths: Vec<f64>,
    pub ensemble: usize,
    pub subharmonic_levels: u32,
    pub seed: u64,
}

impl Default for CrosstalkSection {
    fn default() -> Self {
        Self {
            scenarios: vec![Scenario::SinglePhoton, Scenario::TwoPhoton],
            q_max: 5,
            strengths: vec![0.0, 2.0, 4.0],
            ensemble: DEFAULT_ENSEMBLE,
            subharmonic_levels: 0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayTableSection {
    pub cn2_m_neg2_3: f64,
    pub l: Vec<u32>,
}

impl Default for DecayTableSection {
    fn default() -> Self {
        Self { cn2_m_neg2_3: 1e-15, l: vec![1, 3, 5, 7] }
    }
}

/// Parsed configuration together with its source text, kept for error
/// locations.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: Option<(PathBuf, String)>,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self { config: RunConfig::default(), source: None }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(path, text)
    }

    pub fn parse(path: &Path, text: String) -> Result<Self, CliError> {
        match toml::from_str::<RunConfig>(&text) {
            Ok(config) => Ok(Self { config, source: Some((path.to_path_buf(), text)) }),
            Err(e) => {
                let line = e.span().map(|s| line_of(&text, s.start)).unwrap_or(1);
                Err(CliError::Schema(format!("{}:{line}: {}", path.display(), e.message())))
            }
        }
    }

    /// Schema error for a semantically invalid `[section] key`, located in
    /// the source when possible.
    pub fn invalid(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        match &self.source {
            Some((path, text)) => match find_key(text, section, key) {
                Some(line) => CliError::Schema(format!("{}:{line}: {section}.{key}: {msg}", path.display())),
                None => CliError::Schema(format!("{}: {section}.{key}: {msg}", path.display())),
            },
            None => CliError::Schema(format!("{section}.{key}: {msg}")),
        }
    }

    pub fn spectrum(&self) -> Result<SpectrumModel, CliError> {
        let t = &self.config.turbulence;
        match (t.spectrum, t.outer_scale_m) {
            (SpectrumKind::Kolmogorov, None) => Ok(SpectrumModel::Kolmogorov),
            (SpectrumKind::Kolmogorov, Some(_)) => {
                Err(self.invalid("turbulence", "outer_scale_m", "only meaningful with spectrum = \"von-karman\""))
            }
            (SpectrumKind::VonKarman, Some(l0)) if l0 > 0.0 && l0.is_finite() => {
                Ok(SpectrumModel::VonKarman { outer_scale: l0 })
            }
            (SpectrumKind::VonKarman, Some(l0)) => {
                Err(self.invalid("turbulence", "outer_scale_m", format!("must be > 0, got {l0}")))
            }
            (SpectrumKind::VonKarman, None) => {
                Err(self.invalid("turbulence", "spectrum", "von-karman requires outer_scale_m"))
            }
        }
    }

    pub fn check_common(&self) -> Result<(), CliError> {
        let c = &self.config;
        let positive = |section: &str, key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.invalid(section, key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("beam", "waist_m", c.beam.waist_m)?;
        positive("beam", "wavelength_m", c.beam.wavelength_m)?;
        positive("grid", "window_waists", c.grid.window_waists)?;
        if c.grid.samples < 2 {
            return Err(self.invalid("grid", "samples", format!("must be at least 2, got {}", c.grid.samples)));
        }
        if !(1..=17).contains(&c.output.float_digits) {
            return Err(self.invalid("output", "float_digits", "must be between 1 and 17"));
        }
        Ok(())
    }

    /// One sweep configuration per requested scenario.
    pub fn sweep_configs(&self, seed_override: Option<u64>) -> Result<Vec<SweepConfig>, CliError> {
        self.check_common()?;
        let c = &self.config;
        let s = &c.sweep;
        if s.scenarios.is_empty() {
            return Err(self.invalid("sweep", "scenarios", "at least one scenario is required"));
        }
        let spectrum = self.spectrum()?;
        let configs: Vec<SweepConfig> = s
            .scenarios
            .iter()
            .map(|&scenario| SweepConfig {
                scenario,
                q_values: s.q.clone(),
                strengths: s.strengths.clone(),
                ensemble_size: s.ensemble,
                n_samples: c.grid.samples,
                window_waists: c.grid.window_waists,
                w0: c.beam.waist_m,
                wavelength: c.beam.wavelength_m,
                dz: s.propagation_m,
                spectrum,
                subharmonic_levels: s.subharmonic_levels,
                master_seed: seed_override.unwrap_or(s.master_seed),
            })
            .collect();
        // Map non-resolution validation failures onto the offending keys.
        if let Err(e) = configs[0].validate() {
            return Err(match e {
                oamturb::OamError::Resolution(_) => CliError::Core(e),
                other => {
                    let msg = other.to_string();
                    let key = if msg.contains("q values") {
                        "q"
                    } else if msg.contains("strengths") {
                        "strengths"
                    } else if msg.contains("ensemble") {
                        "ensemble"
                    } else if msg.contains("dz") {
                        "propagation_m"
                    } else {
                        return Err(CliError::Core(other));
                    };
                    self.invalid("sweep", key, msg)
                }
            });
        }
        Ok(configs)
    }

    pub fn crosstalk_configs(&self, seed_override: Option<u64>) -> Result<Vec<CrosstalkConfig>, CliError> {
        self.check_common()?;
        let c = &self.config;
        let x = &c.crosstalk;
        if x.scenarios.is_empty() {
            return Err(self.invalid("crosstalk", "scenarios", "at least one scenario is required"));
        }
        if x.strengths.is_empty() || x.strengths.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(self.invalid("crosstalk", "strengths", "must be a non-empty list of finite values >= 0"));
        }
        if x.ensemble == 0 {
            return Err(self.invalid("crosstalk", "ensemble", "must be positive"));
        }
        let spectrum = self.spectrum()?;
        let mut out = Vec::new();
        for &scenario in &x.scenarios {
            for &strength in &x.strengths {
                out.push(CrosstalkConfig {
                    scenario,
                    q_max: x.q_max,
                    strength,
                    ensemble_size: x.ensemble,
                    n_samples: c.grid.samples,
                    window_waists: c.grid.window_waists,
                    w0: c.beam.waist_m,
                    wavelength: c.beam.wavelength_m,
                    spectrum,
                    subharmonic_levels: x.subharmonic_levels,
                    seed: seed_override.unwrap_or(x.seed),
                });
            }
        }
        Ok(out)
    }

    pub fn screen_target(&self) -> Result<ScreenTarget, CliError> {
        self.check_common()?;
        let s = &self.config.screens;
        let given = [s.strength.is_some(), s.fried_m.is_some(), s.cn2_m_neg2_3.is_some() || s.thickness_m.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(self.invalid("screens", "strength", "give only one of strength, fried_m or cn2_m_neg2_3"));
        }
        if let Some(r0) = s.fried_m {
            if r0.is_nan() || r0 <= 0.0 {
                return Err(self.invalid("screens", "fried_m", format!("must be > 0, got {r0}")));
            }
            return Ok(ScreenTarget::Fried(r0));
        }
        if s.cn2_m_neg2_3.is_some() || s.thickness_m.is_some() {
            let (Some(cn2), Some(dz)) = (s.cn2_m_neg2_3, s.thickness_m) else {
                return Err(self.invalid("screens", "cn2_m_neg2_3", "cn2_m_neg2_3 and thickness_m go together"));
            };
            let p = TurbulenceParams::new(cn2, dz, self.config.beam.wavelength_m)
                .map_err(|e| self.invalid("screens", "cn2_m_neg2_3", e))?;
            return Ok(ScreenTarget::Medium(p));
        }
        let strength = s.strength.unwrap_or(DEFAULT_SCREEN_STRENGTH);
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(self.invalid("screens", "strength", format!("must be >= 0, got {strength}")));
        }
        Ok(ScreenTarget::from_strength(self.config.beam.waist_m, strength))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` inside `[section]`.
fn find_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        if (current == section && k == key) || (current.is_empty() && k == format!("{section}.{key}")) {
            return Some(i + 1);
        }
    }
    None
}
