//! Sampled scalar optical fields on a square grid.
//!
//! Fields are stored row-major (`y` rows, `x` columns) with the beam axis at
//! index `n / 2` along both directions. Geometry metadata (pitch, wavelength,
//! plane) is kept in `f64`; the sample values use the generic scalar `T`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{OamError, Result};
use crate::scalar::Real;
use crate::turbulence::PhaseScreen;

/// Default number of samples per side.
pub const DEFAULT_SAMPLES: usize = 256;
/// Default window side in units of the beam waist.
pub const DEFAULT_WINDOW_WAISTS: f64 = 8.0;
/// Minimum number of samples across one waist radius.
pub const MIN_SAMPLES_PER_WAIST: f64 = 16.0;
/// Minimum window side in units of the beam waist.
pub const MIN_WINDOW_WAISTS: f64 = 6.0;

const REL_EQ: f64 = 1e-12;

/// Square sampling grid: `n_samples` per side at `pitch` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_samples: usize,
    pitch: f64,
}

impl GridSpec {
    pub fn new(n_samples: usize, pitch: f64) -> Result<Self> {
        if n_samples < 64 || !n_samples.is_power_of_two() {
            return Err(OamError::Domain(format!("grid size must be a power of two >= 64, got {n_samples}")));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(OamError::Domain(format!("grid pitch must be positive, got {pitch}")));
        }
        Ok(Self { n_samples, pitch })
    }

    /// Grid whose side spans `window_waists * w0`.
    pub fn for_waist(n_samples: usize, w0: f64, window_waists: f64) -> Result<Self> {
        if !(w0 > 0.0 && window_waists > 0.0) {
            return Err(OamError::Domain(format!(
                "waist and window must be positive (w0={w0}, window={window_waists})"
            )));
        }
        let grid = Self::new(n_samples, window_waists * w0 / n_samples as f64)?;
        grid.check_beam(w0)?;
        Ok(grid)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Side length `n_samples * pitch`.
    #[inline]
    pub fn side(&self) -> f64 {
        self.n_samples as f64 * self.pitch
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_samples * self.n_samples
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate of sample index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n_samples / 2) as f64) * self.pitch
    }

    /// Angular spatial frequency of FFT bin `i` (standard FFT ordering).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n_samples as isize;
        let signed = if (i as isize) < n / 2 { i as isize } else { i as isize - n };
        2.0 * PI * signed as f64 / self.side()
    }

    /// Frequency-grid spacing `2π / L`.
    #[inline]
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.side()
    }

    /// Anti-aliasing guard: the waist spans at least 16 samples and the
    /// window at least six waists.
    pub fn check_beam(&self, w0: f64) -> Result<()> {
        let per_waist = w0 / self.pitch;
        if per_waist < MIN_SAMPLES_PER_WAIST * (1.0 - 1e-9) {
            return Err(OamError::Sampling(format!(
                "waist spans {per_waist:.2} samples, need at least {MIN_SAMPLES_PER_WAIST}"
            )));
        }
        let waists = self.side() / w0;
        if waists < MIN_WINDOW_WAISTS * (1.0 - 1e-9) {
            return Err(OamError::Sampling(format!(
                "window spans {waists:.2} waists, need at least {MIN_WINDOW_WAISTS}"
            )));
        }
        Ok(())
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> bool {
        self.n_samples == other.n_samples && rel_eq(self.pitch, other.pitch)
    }
}

#[inline]
pub(crate) fn rel_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_EQ * a.abs().max(b.abs())
}

/// A complex scalar field `g(x, y)` sampled on a [`GridSpec`] at plane `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField<T: Real> {
    grid: GridSpec,
    values: Vec<Complex<T>>,
    wavelength: f64,
    z: f64,
}

impl<T: Real> SampledField<T> {
    pub fn new(grid: GridSpec, values: Vec<Complex<T>>, wavelength: f64, z: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(OamError::Dimension(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(OamError::Domain(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(Self { grid, values, wavelength, z })
    }

    pub fn zeros(grid: GridSpec, wavelength: f64, z: f64) -> Result<Self> {
        Self::new(grid, vec![Complex::new(T::zero(), T::zero()); grid.len()], wavelength, z)
    }

    /// Samples `f(x, y)` at every grid point (coordinates in meters).
    pub fn from_fn<F>(grid: GridSpec, wavelength: f64, z: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Complex<T>,
    {
        let n = grid.n_samples();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                values.push(f(grid.coord(ix), y));
            }
        }
        Self::new(grid, values, wavelength, z)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    #[inline]
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex<T> {
        self.values[iy * self.grid.n_samples() + ix]
    }

    /// Total power `Σ|g|² · pitch²`.
    pub fn power(&self) -> T {
        let w = T::lit(self.grid.pitch() * self.grid.pitch());
        pairwise_sum(&self.values, |v| v.norm_sqr()) * w
    }

    /// Multiplies every sample by `alpha`.
    pub fn scaled(&self, alpha: Complex<T>) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v * alpha);
        out
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(OamError::Dimension(format!("grid mismatch: {:?} vs {:?}", self.grid, other.grid)));
        }
        if !rel_eq(self.wavelength, other.wavelength) {
            return Err(OamError::Dimension(format!(
                "wavelength mismatch: {} vs {}",
                self.wavelength, other.wavelength
            )));
        }
        Ok(())
    }

    /// Power-weighted RMS radius about the grid center and RMS transverse
    /// wavenumber, both computed from the samples.
    pub fn second_moments(&self) -> (f64, f64) {
        let n = self.grid.n_samples();
        let mut p = 0.0;
        let mut r2 = 0.0;
        for iy in 0..n {
            let y = self.grid.coord(iy);
            for ix in 0..n {
                let x = self.grid.coord(ix);
                let w = self.values[iy * n + ix].norm_sqr().to_f64_lossy();
                p += w;
                r2 += w * (x * x + y * y);
            }
        }
        if p == 0.0 {
            return (0.0, 0.0);
        }
        let mut spec = self.values.clone();
        Fft2::<T>::new(n).forward(&mut spec);
        let mut q = 0.0;
        let mut k2 = 0.0;
        for iy in 0..n {
            let ky = self.grid.wavenumber(iy);
            for ix in 0..n {
                let kx = self.grid.wavenumber(ix);
                let w = spec[iy * n + ix].norm_sqr().to_f64_lossy();
                q += w;
                k2 += w * (kx * kx + ky * ky);
            }
        }
        ((r2 / p).sqrt(), (k2 / q).sqrt())
    }
}

/// Discrete inner product `⟨a|b⟩ = Σ conj(a)·b · pitch²`.
pub fn inner_product<T: Real>(a: &SampledField<T>, b: &SampledField<T>) -> Result<Complex<T>> {
    a.check_compatible(b)?;
    let w = T::lit(a.grid.pitch() * a.grid.pitch());
    Ok(dot_conj(&a.values, &b.values) * w)
}

/// `Σ conj(a)·b` with blockwise summation to limit round-off in `f32`.
pub(crate) fn dot_conj<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    const BLOCK: usize = 256;
    let zero = Complex::new(T::zero(), T::zero());
    a.chunks(BLOCK)
        .zip(b.chunks(BLOCK))
        .map(|(ca, cb)| ca.iter().zip(cb).fold(zero, |acc, (x, y)| acc + x.conj() * y))
        .fold(zero, |acc, v| acc + v)
}

fn pairwise_sum<T: Real, F: Fn(&Complex<T>) -> T>(v: &[Complex<T>], f: F) -> T {
    v.chunks(256).map(|c| c.iter().map(&f).sum::<T>()).sum()
}

/// Paraxial free-space propagation by `dz` meters using the angular-spectrum
/// transfer function `exp(i (kx² + ky²) dz / (2 k0))`.
///
/// This sign pairs with the `(1 - i t)` denominators of the analytic
/// Laguerre-Gaussian modes in [`crate::modes`].
pub fn propagate_free_space<T: Real>(f: &SampledField<T>, dz: f64) -> Result<SampledField<T>> {
    if !(dz.is_finite() && dz >= 0.0) {
        return Err(OamError::Domain(format!("propagation distance must be >= 0, got {dz}")));
    }
    if dz == 0.0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let k0 = f.wavenumber();
    let (rms_r, rms_k) = f.second_moments();
    let predicted = (rms_r * rms_r + (dz * rms_k / k0).powi(2)).sqrt();
    if 2.0 * predicted > grid.side() / 2.0 {
        return Err(OamError::Sampling(format!(
            "beam would grow to rms radius {predicted:.3e} m after {dz:.3e} m, \
             exceeding a quarter of the {:.3e} m window",
            grid.side()
        )));
    }

    let n = grid.n_samples();
    let fft = Fft2::<T>::new(n);
    let mut spec = f.values.clone();
    fft.forward(&mut spec);
    let scale = 1.0 / (grid.len() as f64);
    for iy in 0..n {
        let ky = grid.wavenumber(iy);
        for ix in 0..n {
            let kx = grid.wavenumber(ix);
            let phase = (kx * kx + ky * ky) * dz / (2.0 * k0);
            let h = Complex::new(T::lit(phase.cos() * scale), T::lit(phase.sin() * scale));
            spec[iy * n + ix] = spec[iy * n + ix] * h;
        }
    }
    fft.inverse(&mut spec);
    SampledField::new(grid, spec, f.wavelength, f.z + dz)
}

/// Multiplies the field by the screen's transmission `exp(iθ)`.
pub fn apply_phase<T: Real>(f: &SampledField<T>, screen: &PhaseScreen<T>) -> Result<SampledField<T>> {
    if !f.grid.same_as(screen.grid()) {
        return Err(OamError::Dimension(format!(
            "screen grid {:?} does not match field grid {:?}",
            screen.grid(),
            f.grid
        )));
    }
    let mut out = f.clone();
    out.values.iter_mut().zip(screen.theta()).for_each(|(v, &th)| *v = *v * Complex::new(th.cos(), th.sin()));
    Ok(out)
}

/// Unnormalized square 2D FFT over a row-major buffer.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.forward);
    }

    /// Inverse transform without the `1/n²` factor.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        plan.process(buf);
        transpose_square(buf, self.n);
        plan.process(buf);
        transpose_square(buf, self.n);
    }
}

fn transpose_square<V>(buf: &mut [V], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{evaluate_lg, LgMode};
    use crate::turbulence::PhaseScreen;

    const LAMBDA: f64 = 1.55e-6;
    const W0: f64 = 0.01;

    fn grid() -> GridSpec {
        GridSpec::for_waist(256, W0, 8.0).unwrap()
    }

    fn lg(l: i32, p: u32) -> SampledField<f64> {
        evaluate_lg(&LgMode::new(l, p, W0, LAMBDA).unwrap(), &grid()).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(100, 1e-3).is_err());
        assert!(GridSpec::new(32, 1e-3).is_err());
        assert!(GridSpec::new(64, 0.0).is_err());
        assert!(GridSpec::for_waist(256, W0, 4.0).is_err());
        assert!(GridSpec::for_waist(64, W0, 8.0).is_err());
    }

    #[test]
    fn normalized_mode_has_unit_self_overlap() {
        let a = lg(1, 0);
        let v = inner_product(&a, &a).unwrap();
        assert!((v.re - 1.0).abs() < 1e-3 && v.im.abs() < 1e-12);
    }

    #[test]
    fn opposite_vortices_are_orthogonal() {
        let v = inner_product(&lg(1, 0), &lg(-1, 0)).unwrap();
        assert!(v.norm() < 1e-6, "{v}");
    }

    #[test]
    fn radial_orders_are_orthogonal() {
        let v = inner_product(&lg(0, 0), &lg(0, 1)).unwrap();
        assert!(v.norm() < 1e-3, "{v}");
    }

    #[test]
    fn inner_product_is_conjugate_symmetric_and_sesquilinear() {
        let a = lg(2, 0);
        let b = apply_phase(&lg(1, 0), &ramp_screen()).unwrap();
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
        let alpha = Complex::new(0.3, -1.7);
        let lhs = inner_product(&a.scaled(alpha), &b).unwrap();
        assert!((lhs - alpha.conj() * ab).norm() < 1e-13);
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let other = GridSpec::for_waist(512, W0, 8.0).unwrap();
        let b = evaluate_lg(&LgMode::new(1, 0, W0, LAMBDA).unwrap(), &other).unwrap();
        assert!(matches!(inner_product(&lg(1, 0), &b), Err(OamError::Dimension(_))));
    }

    fn ramp_screen() -> PhaseScreen<f64> {
        let g = grid();
        let n = g.n_samples();
        let theta = (0..g.len()).map(|i| 0.7 * ((i % n) as f64 / n as f64) + 0.1).collect();
        PhaseScreen::from_theta(g, theta, f64::INFINITY, 0, 0).unwrap()
    }

    fn constant_screen(value: f64) -> PhaseScreen<f64> {
        let g = grid();
        PhaseScreen::from_theta(g, vec![value; g.len()], f64::INFINITY, 0, 0).unwrap()
    }

    #[test]
    fn zero_screen_is_identity() {
        let f = lg(3, 0);
        assert_eq!(apply_phase(&f, &constant_screen(0.0)).unwrap(), f);
    }

    #[test]
    fn pi_screen_negates_field() {
        let f = lg(3, 0);
        let out = apply_phase(&f, &constant_screen(std::f64::consts::PI)).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a + b).norm() <= 4.0 * f64::EPSILON * b.norm());
        }
        assert!((out.power() - f.power()).abs() < 1e-14);
    }

    #[test]
    fn phase_screen_preserves_pointwise_magnitude() {
        let f = lg(2, 0);
        let out = apply_phase(&f, &ramp_screen()).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() <= 4.0 * f64::EPSILON * b.norm());
        }
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = lg(1, 0);
        let out = propagate_free_space(&f, 0.0).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fft_round_trip_is_identity() {
        let f = lg(2, 0);
        let fft = Fft2::<f64>::new(256);
        let mut buf = f.values().to_vec();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        let s = 1.0 / (256.0 * 256.0);
        for (a, b) in buf.iter().zip(f.values()) {
            assert!((a * s - b).norm() < 1e-12);
        }
    }

    #[test]
    fn propagation_conserves_power() {
        let f = lg(3, 0);
        let zr = LgMode::new(3, 0, W0, LAMBDA).unwrap().rayleigh_range();
        let out = propagate_free_space(&f, zr / 2.0).unwrap();
        assert!(((out.power() - f.power()) / f.power()).abs() < 1e-9);
        assert!((out.z() - zr / 2.0).abs() < 1e-15);
    }

    #[test]
    fn propagation_composes() {
        let f = lg(1, 0);
        let zr = LgMode::new(1, 0, W0, LAMBDA).unwrap().rayleigh_range();
        let two_step = propagate_free_space(&propagate_free_space(&f, 0.3 * zr).unwrap(), 0.2 * zr).unwrap();
        let one_step = propagate_free_space(&f, 0.5 * zr).unwrap();
        let diff: f64 = two_step.values().iter().zip(one_step.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let diff = (diff * grid().pitch().powi(2)).sqrt();
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn propagation_rejects_negative_distance_and_overflowing_beams() {
        let f = lg(1, 0);
        assert!(matches!(propagate_free_space(&f, -1.0), Err(OamError::Domain(_))));
        let zr = LgMode::new(1, 0, W0, LAMBDA).unwrap().rayleigh_range();
        assert!(matches!(propagate_free_space(&f, 5.0 * zr), Err(OamError::Sampling(_))));
    }

    #[test]
    fn single_precision_fields_work() {
        let g = grid();
        let f = evaluate_lg::<f32>(&LgMode::new(1, 0, W0, LAMBDA).unwrap(), &g).unwrap();
        let v = inner_product(&f, &f).unwrap();
        assert!((v.re - 1.0).abs() < 1e-3);
    }
}
