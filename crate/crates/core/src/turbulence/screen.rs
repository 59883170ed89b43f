use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};

use super::{ScreenTarget, SpectrumModel};
use crate::error::{OamError, Result};
use crate::grid::{Fft2, GridSpec};
use crate::scalar::Real;
use crate::seed::rng_from_seed;

/// Screens must resolve the Fried parameter with at least this many samples.
pub const MIN_SAMPLES_PER_FRIED: f64 = 2.0;

const SUBHARMONIC_CELL_QUADRATURE: usize = 16;

/// A real random phase `θ(x, y)` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen<T: Real> {
    grid: GridSpec,
    theta: Vec<T>,
    r0: f64,
    seed: u64,
    pair_index: u8,
}

impl<T: Real> PhaseScreen<T> {
    pub fn from_theta(grid: GridSpec, theta: Vec<T>, r0: f64, seed: u64, pair_index: u8) -> Result<Self> {
        if theta.len() != grid.len() {
            return Err(OamError::Dimension(format!("screen has {} samples, grid needs {}", theta.len(), grid.len())));
        }
        if pair_index > 1 {
            return Err(OamError::Domain(format!("pair index must be 0 or 1, got {pair_index}")));
        }
        Ok(Self { grid, theta, r0, seed, pair_index })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Fried parameter the screen was generated for.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 0 for the real part of the complex draw, 1 for the imaginary part.
    pub fn pair_index(&self) -> u8 {
        self.pair_index
    }

    pub fn mean(&self) -> f64 {
        self.theta.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / self.theta.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.theta.iter().map(|v| (v.to_f64_lossy() - m).powi(2)).sum::<f64>() / self.theta.len() as f64
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.theta.iter_mut().for_each(|v| *v = *v * factor);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Subharmonic {
    kx: f64,
    ky: f64,
    /// Square root of the spectral shape integrated over the cell.
    amplitude: f64,
}

/// Reusable FFT phase-screen synthesizer for one grid and spectrum.
///
/// A complex circular-Gaussian spectrum `ξ(K)` (unit-variance real and
/// imaginary parts) is weighted by `sqrt(c · shape(K)) · Δk`, inverse
/// transformed, and split into real and imaginary parts, which are two
/// independent screens with the same statistics. The DC bin is zero.
///
/// With `subharmonic_levels > 0` the DC cell is refined by successive 3×3
/// grids of spacing `Δk / 3^p`, each cell weighted by the spectral shape
/// integrated over the cell. This restores the low-order (tilt-like) power
/// the periodic FFT grid cannot represent.
#[derive(Debug, Clone)]
pub struct ScreenGenerator<T: Real> {
    grid: GridSpec,
    spectrum: SpectrumModel,
    fft: Fft2<T>,
    amplitude: Vec<f64>,
    subharmonics: Vec<Subharmonic>,
    subharmonic_levels: u32,
}

impl<T: Real> ScreenGenerator<T> {
    pub fn new(grid: GridSpec, spectrum: SpectrumModel, subharmonic_levels: u32) -> Result<Self> {
        spectrum.validate()?;
        let n = grid.n_samples();
        let dk = grid.dk();
        let mut amplitude = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let ky = grid.wavenumber(iy);
            for ix in 0..n {
                let kx = grid.wavenumber(ix);
                let k = (kx * kx + ky * ky).sqrt();
                amplitude.push(if ix == 0 && iy == 0 { 0.0 } else { spectrum.shape(k).sqrt() * dk });
            }
        }
        let mut subharmonics = Vec::new();
        for level in 1..=subharmonic_levels {
            let d = dk / 3f64.powi(level as i32);
            for j in -1i32..=1 {
                for i in -1i32..=1 {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let (kx, ky) = (i as f64 * d, j as f64 * d);
                    let mean_shape = cell_mean(&spectrum, kx, ky, d);
                    subharmonics.push(Subharmonic { kx, ky, amplitude: (mean_shape * d * d).sqrt() });
                }
            }
        }
        Ok(Self { grid, spectrum, fft: Fft2::new(n), amplitude, subharmonics, subharmonic_levels })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spectrum(&self) -> SpectrumModel {
        self.spectrum
    }

    pub fn subharmonic_levels(&self) -> u32 {
        self.subharmonic_levels
    }

    /// Draws one complex spectrum and returns its real and imaginary parts.
    ///
    /// Deterministic in `(grid, spectrum, subharmonic levels, target, seed)`.
    pub fn generate_pair(&self, target: &ScreenTarget, seed: u64) -> Result<(PhaseScreen<T>, PhaseScreen<T>)> {
        target.validate()?;
        let r0 = target.fried();
        let pitch = self.grid.pitch();
        if r0 < MIN_SAMPLES_PER_FRIED * pitch {
            return Err(OamError::Resolution(format!(
                "Fried parameter {r0:.4e} m is below {MIN_SAMPLES_PER_FRIED} samples of pitch {pitch:.4e} m"
            )));
        }
        let coefficient = target.phase_spectrum_coefficient();
        let n = self.grid.n_samples();
        if coefficient == 0.0 {
            let zero = vec![T::zero(); self.grid.len()];
            return Ok((
                PhaseScreen::from_theta(self.grid, zero.clone(), r0, seed, 0)?,
                PhaseScreen::from_theta(self.grid, zero, r0, seed, 1)?,
            ));
        }

        let scale = coefficient.sqrt();
        let mut rng = rng_from_seed(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut spec: Vec<Complex<T>> = self
            .amplitude
            .iter()
            .map(|&a| {
                let (re, im) = (normal(), normal());
                let w = a * scale;
                Complex::new(T::lit(re * w), T::lit(im * w))
            })
            .collect();
        self.fft.inverse(&mut spec);

        if !self.subharmonics.is_empty() {
            let coords: Vec<f64> = (0..n).map(|i| self.grid.coord(i)).collect();
            let mut low = vec![Complex::new(0.0f64, 0.0); self.grid.len()];
            for sh in &self.subharmonics {
                let xi = Complex::new(normal(), normal()) * (sh.amplitude * scale);
                let ex: Vec<Complex<f64>> = coords.iter().map(|&x| Complex::from_polar(1.0, sh.kx * x)).collect();
                for (iy, &y) in coords.iter().enumerate() {
                    let row = xi * Complex::from_polar(1.0, sh.ky * y);
                    for (v, e) in low[iy * n..(iy + 1) * n].iter_mut().zip(&ex) {
                        *v += row * e;
                    }
                }
            }
            for (s, l) in spec.iter_mut().zip(&low) {
                *s = *s + Complex::new(T::lit(l.re), T::lit(l.im));
            }
        }

        let (re, im): (Vec<T>, Vec<T>) = spec.into_iter().map(|c| (c.re, c.im)).unzip();
        Ok((PhaseScreen::from_theta(self.grid, re, r0, seed, 0)?, PhaseScreen::from_theta(self.grid, im, r0, seed, 1)?))
    }
}

fn cell_mean(spectrum: &SpectrumModel, kx: f64, ky: f64, d: f64) -> f64 {
    let m = SUBHARMONIC_CELL_QUADRATURE;
    let mut acc = 0.0;
    for j in 0..m {
        let y = ky + ((j as f64 + 0.5) / m as f64 - 0.5) * d;
        for i in 0..m {
            let x = kx + ((i as f64 + 0.5) / m as f64 - 0.5) * d;
            acc += spectrum.shape((x * x + y * y).sqrt());
        }
    }
    acc / (m * m) as f64
}

/// One-shot convenience wrapper around [`ScreenGenerator::generate_pair`]
/// for a Kolmogorov spectrum without subharmonics.
pub fn generate_screen_pair<T: Real>(
    grid: &GridSpec,
    target: &ScreenTarget,
    seed: u64,
) -> Result<(PhaseScreen<T>, PhaseScreen<T>)> {
    ScreenGenerator::new(*grid, SpectrumModel::Kolmogorov, 0)?.generate_pair(target, seed)
}
