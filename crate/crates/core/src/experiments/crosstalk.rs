use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projector::transmission;
use super::{check_resolvable, Scenario, DEFAULT_ENSEMBLE};
use crate::error::{OamError, Result};
use crate::grid::{dot_conj, GridSpec, SampledField, DEFAULT_SAMPLES, DEFAULT_WINDOW_WAISTS};
use crate::modes::{evaluate_lg, LgMode};
use crate::scalar::Real;
use crate::seed::derive_seed;
use crate::turbulence::{PhaseScreen, ScreenGenerator, ScreenTarget, SpectrumModel};

const CROSSTALK_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosstalkConfig {
    pub scenario: Scenario,
    /// Modes `l ∈ {−q_max..q_max}` with `p = 0` are measured on each arm.
    pub q_max: u32,
    pub strength: f64,
    pub ensemble_size: usize,
    pub n_samples: usize,
    pub window_waists: f64,
    pub w0: f64,
    pub wavelength: f64,
    pub spectrum: SpectrumModel,
    pub subharmonic_levels: u32,
    pub seed: u64,
}

impl Default for CrosstalkConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::TwoPhoton,
            q_max: 5,
            strength: 0.0,
            ensemble_size: DEFAULT_ENSEMBLE,
            n_samples: DEFAULT_SAMPLES,
            window_waists: DEFAULT_WINDOW_WAISTS,
            w0: 0.1,
            wavelength: 1550e-9,
            spectrum: SpectrumModel::Kolmogorov,
            subharmonic_levels: 0,
            seed: 1,
        }
    }
}

/// Ensemble-averaged joint detection probabilities over `(l_A, l_B)`.
///
/// Row `i` is `l_A = i − q_max`, column `j` is `l_B = j − q_max`. Entries sum
/// to one over the detected window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    pub scenario: Scenario,
    pub q_max: u32,
    pub strength: f64,
    pub ensemble_size: usize,
    pub probabilities: Vec<Vec<f64>>,
}

impl CrosstalkMatrix {
    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    pub fn ell(&self, index: usize) -> i32 {
        index as i32 - self.q_max as i32
    }

    /// Mass on `l_A = −l_B`.
    pub fn anti_diagonal_mass(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.probabilities[i][d - 1 - i]).sum()
    }

    pub fn off_anti_diagonal_mass(&self) -> f64 {
        let total: f64 = self.probabilities.iter().flatten().sum();
        total - self.anti_diagonal_mass()
    }
}

/// Sends the flat superposition `Σ_m |m⟩|−m⟩ / √(2 q_max + 1)` through the
/// channel and measures every `(l_A, l_B)` pair.
///
/// In the single-photon scenario arm B is ideal, so each row of a member's
/// matrix is the scattering of one input mode of arm A.
pub fn crosstalk_matrix<T: Real>(cfg: &CrosstalkConfig) -> Result<CrosstalkMatrix> {
    if cfg.q_max == 0 {
        return Err(OamError::Domain("q_max must be at least 1".into()));
    }
    if cfg.ensemble_size == 0 {
        return Err(OamError::Domain("ensemble size must be positive".into()));
    }
    if !(cfg.strength >= 0.0 && cfg.strength.is_finite()) {
        return Err(OamError::Domain(format!("strength must be >= 0, got {}", cfg.strength)));
    }
    let grid = GridSpec::for_waist(cfg.n_samples, cfg.w0, cfg.window_waists)?;
    check_resolvable(&grid, cfg.w0, cfg.strength)?;
    let q = cfg.q_max as i32;
    let modes = (-q..=q)
        .map(|ell| evaluate_lg::<T>(&LgMode::new(ell, 0, cfg.w0, cfg.wavelength)?, &grid))
        .collect::<Result<Vec<_>>>()?;
    let d = modes.len();
    let n = cfg.ensemble_size;

    let members: Vec<Vec<f64>> = if cfg.strength == 0.0 {
        let ideal = identity(d);
        vec![joint_probabilities(&ideal, &ideal); n]
    } else {
        let generator = ScreenGenerator::<T>::new(grid, cfg.spectrum, cfg.subharmonic_levels)?;
        let target = ScreenTarget::from_strength(cfg.w0, cfg.strength);
        let pairs = match cfg.scenario {
            Scenario::SinglePhoton => n.div_ceil(2),
            Scenario::TwoPhoton => n,
        };
        let rows: Vec<Vec<Vec<f64>>> = (0..pairs)
            .into_par_iter()
            .map(|j| {
                let seed = derive_seed(cfg.seed, &[CROSSTALK_STREAM, cfg.strength.to_bits(), j as u64]);
                let (a, b) = generator.generate_pair(&target, seed)?;
                let (ma, mb) = (scattering(&modes, &a), scattering(&modes, &b));
                Ok(match cfg.scenario {
                    Scenario::SinglePhoton => {
                        let ideal = identity(d);
                        vec![joint_probabilities(&ma, &ideal), joint_probabilities(&mb, &ideal)]
                    }
                    Scenario::TwoPhoton => vec![joint_probabilities(&ma, &mb)],
                })
            })
            .collect::<Result<_>>()?;
        let mut members: Vec<_> = rows.into_iter().flatten().collect();
        members.truncate(n);
        members
    };

    let mut total = vec![0.0; d * d];
    for m in &members {
        total.iter_mut().zip(m).for_each(|(t, v)| *t += v);
    }
    let mass: f64 = total.iter().sum();
    if !(mass > 0.0) {
        return Err(OamError::Degenerate("no coincidences inside the detected mode window".into()));
    }
    Ok(CrosstalkMatrix {
        scenario: cfg.scenario,
        q_max: cfg.q_max,
        strength: cfg.strength,
        ensemble_size: n,
        probabilities: total.chunks(d).map(|r| r.iter().map(|v| v / mass).collect()).collect(),
    })
}

fn identity(d: usize) -> Vec<Vec<Complex<f64>>> {
    (0..d).map(|i| (0..d).map(|j| Complex::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

/// `S[l][m] = ⟨l| e^{iθ} |m⟩`.
fn scattering<T: Real>(modes: &[SampledField<T>], screen: &PhaseScreen<T>) -> Vec<Vec<Complex<f64>>> {
    let phasor = transmission(screen);
    let w = modes[0].grid().pitch().powi(2);
    let distorted: Vec<Vec<Complex<T>>> =
        modes.iter().map(|m| m.values().iter().zip(&phasor).map(|(v, t)| v * t).collect()).collect();
    modes
        .iter()
        .map(|out| {
            distorted
                .iter()
                .map(|inp| {
                    let z = dot_conj(out.values(), inp);
                    Complex::new(z.re.to_f64_lossy() * w, z.im.to_f64_lossy() * w)
                })
                .collect()
        })
        .collect()
}

/// `|Σ_m S_A[i][m] S_B[j][−m]|² / (2 q_max + 1)`, flattened row-major.
fn joint_probabilities(sa: &[Vec<Complex<f64>>], sb: &[Vec<Complex<f64>>]) -> Vec<f64> {
    let d = sa.len();
    let mut out = Vec::with_capacity(d * d);
    for row_a in sa {
        for row_b in sb {
            let amp: Complex<f64> = (0..d).map(|m| row_a[m] * row_b[d - 1 - m]).sum();
            out.push(amp.norm_sqr() / d as f64);
        }
    }
    out
}
