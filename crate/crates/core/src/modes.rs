//! Analytic Laguerre-Gaussian modes.
//!
//! In normalized cylindrical coordinates (`r` in waists, `t = z / z_R`):
//!
//! ```text
//! M(r, φ, t) = N r^|l| e^{ilφ} (1 + it)^p / (1 - it)^{p+|l|+1}
//!              · L_p^|l|(2r² / (1 + t²)) · exp(-r² / (1 - it))
//! N = sqrt(p! 2^{|l|+1} / (π (p + |l|)!))
//! ```
//!
//! `N` normalizes the mode in normalized coordinates. Sampled fields carry an
//! extra `1 / w0` so that `Σ|g|² pitch² ≈ 1` in physical units.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{OamError, Result};
use crate::grid::{GridSpec, SampledField};
use crate::scalar::Real;

/// Fraction of mode power allowed outside the inscribed circle of the window.
pub const MAX_CLIPPED_POWER: f64 = 1e-6;

/// Index and beam parameters of one LG mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgMode {
    ell: i32,
    p: u32,
    w0: f64,
    wavelength: f64,
    z: f64,
}

impl LgMode {
    /// Mode at its waist plane (`z = 0`).
    pub fn new(ell: i32, p: u32, w0: f64, wavelength: f64) -> Result<Self> {
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(OamError::Domain(format!("waist must be positive, got {w0}")));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(OamError::Domain(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(Self { ell, p, w0, wavelength, z: 0.0 })
    }

    /// Same mode evaluated at distance `z` from the waist.
    pub fn at_plane(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    pub fn ell(&self) -> i32 {
        self.ell
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn waist(&self) -> f64 {
        self.w0
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// `z_R = π w0² / λ`.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w0 * self.w0 / self.wavelength
    }

    /// Normalized plane `t = z / z_R`.
    pub fn t(&self) -> f64 {
        self.z / self.rayleigh_range()
    }

    pub fn normalization(&self) -> f64 {
        lg_normalization(self.ell, self.p)
    }

    /// Mode value in normalized coordinates: `r` in waists, `t = z / z_R`.
    pub fn amplitude(&self, r: f64, phi: f64, t: f64) -> Complex<f64> {
        let al = self.ell.unsigned_abs();
        let one_plus = Complex::new(1.0, t);
        let one_minus = Complex::new(1.0, -t);
        let radial = r.powi(al as i32) * generalized_laguerre(self.p, al as f64, 2.0 * r * r / (1.0 + t * t));
        let azimuthal = Complex::from_polar(1.0, self.ell as f64 * phi);
        let gouy = one_plus.powu(self.p) / one_minus.powu(self.p + al + 1);
        let envelope = (Complex::new(-r * r, 0.0) / one_minus).exp();
        azimuthal * gouy * envelope * (self.normalization() * radial)
    }

    /// Power fraction outside radius `radius` (meters) at this mode's plane.
    pub fn power_outside(&self, radius: f64) -> f64 {
        let t = self.t();
        let u0 = radius / self.w0 / (1.0 + t * t).sqrt();
        let al = self.ell.unsigned_abs() as i32;
        let n2 = self.normalization().powi(2);
        let density = |u: f64| {
            let l = generalized_laguerre(self.p, al as f64, 2.0 * u * u);
            n2 * u.powi(2 * al) * l * l * (-2.0 * u * u).exp() * 2.0 * PI * u
        };
        // Composite Simpson; the integrand is negligible 8 waists past the cut.
        let span = 8.0;
        let steps = 4000;
        let h = span / steps as f64;
        let mut acc = density(u0) + density(u0 + span);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * density(u0 + i as f64 * h);
        }
        acc * h / 3.0
    }
}

/// `sqrt(p! 2^{|l|+1} / (π (p + |l|)!))`.
pub fn lg_normalization(ell: i32, p: u32) -> f64 {
    let al = ell.unsigned_abs();
    // p! / (p + |l|)! = 1 / ((p+1)(p+2)...(p+|l|))
    let ratio: f64 = (1..=al).map(|k| 1.0 / (p + k) as f64).product();
    (ratio * 2f64.powi(al as i32 + 1) / PI).sqrt()
}

/// Generalized Laguerre polynomial `L_p^α(x)` by the three-term recurrence.
pub fn generalized_laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Samples the mode on `grid` at the mode's plane.
///
/// Fails with a sampling error when the waist is under-resolved or more than
/// [`MAX_CLIPPED_POWER`] of the mode falls outside the window.
pub fn evaluate_lg<T: Real>(mode: &LgMode, grid: &GridSpec) -> Result<SampledField<T>> {
    grid.check_beam(mode.w0)?;
    let clipped = mode.power_outside(grid.side() / 2.0);
    if clipped > MAX_CLIPPED_POWER {
        return Err(OamError::Sampling(format!(
            "LG(l={}, p={}) loses {clipped:.2e} of its power outside the {:.3e} m window",
            mode.ell,
            mode.p,
            grid.side()
        )));
    }
    let t = mode.t();
    let inv_w0 = 1.0 / mode.w0;
    SampledField::from_fn(*grid, mode.wavelength, mode.z, |x, y| {
        let r = (x * x + y * y).sqrt() * inv_w0;
        let v = mode.amplitude(r, y.atan2(x), t) * inv_w0;
        Complex::new(T::lit(v.re), T::lit(v.im))
    })
}

/// The `l = +q` and `l = -q` (p = 0) fields at the waist plane.
pub fn lg_basis<T: Real>(
    q: u32,
    grid: &GridSpec,
    w0: f64,
    wavelength: f64,
) -> Result<(SampledField<T>, SampledField<T>)> {
    if q == 0 {
        return Err(OamError::Domain("OAM qubit basis needs q >= 1".into()));
    }
    let q = q as i32;
    let plus = evaluate_lg(&LgMode::new(q, 0, w0, wavelength)?, grid)?;
    let minus = evaluate_lg(&LgMode::new(-q, 0, w0, wavelength)?, grid)?;
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, propagate_free_space};

    const LAMBDA: f64 = 1.55e-6;
    const W0: f64 = 0.01;

    fn grid() -> GridSpec {
        GridSpec::for_waist(256, W0, 8.0).unwrap()
    }

    #[test]
    fn gaussian_peak_equals_normalization() {
        let m = LgMode::new(0, 0, W0, LAMBDA).unwrap();
        let v = m.amplitude(0.0, 0.0, 0.0);
        assert!((v.re - (2.0 / PI).sqrt()).abs() < 1e-15 && v.im == 0.0);
        assert!((v.re - 0.7979).abs() < 1e-4);
    }

    #[test]
    fn vortex_core_is_dark() {
        let m = LgMode::new(1, 0, W0, LAMBDA).unwrap();
        assert_eq!(m.amplitude(0.0, 0.3, 0.0).norm(), 0.0);
        let f = evaluate_lg::<f64>(&m, &grid()).unwrap();
        assert_eq!(f.at(128, 128).norm(), 0.0);
    }

    #[test]
    fn quarter_turn_advances_phase_by_ell_quarter_turns() {
        let m = LgMode::new(1, 0, W0, LAMBDA).unwrap();
        for &phi in &[0.1, 1.0, 2.5] {
            let a = m.amplitude(0.8, phi, 0.0);
            let b = m.amplitude(0.8, phi + PI / 2.0, 0.0);
            let d = (b / a).arg();
            assert!((d - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laguerre_matches_closed_forms() {
        for &x in &[0.0, 0.3, 1.7, 4.2] {
            for &a in &[0.0, 1.0, 3.0] {
                assert!((generalized_laguerre(1, a, x) - (1.0 + a - x)).abs() < 1e-12);
                let l2 = x * x / 2.0 - (a + 2.0) * x + (a + 2.0) * (a + 1.0) / 2.0;
                assert!((generalized_laguerre(2, a, x) - l2).abs() < 1e-12);
                let l3 = -x.powi(3) / 6.0 + (a + 3.0) * x * x / 2.0 - (a + 2.0) * (a + 3.0) * x / 2.0
                    + (a + 1.0) * (a + 2.0) * (a + 3.0) / 6.0;
                assert!((generalized_laguerre(3, a, x) - l3).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn normalization_matches_factorial_form() {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for ell in [-4i32, -1, 0, 2, 7] {
            for p in 0..4 {
                let al = ell.unsigned_abs();
                let want = (fact(p) * 2f64.powi(al as i32 + 1) / (PI * fact(p + al))).sqrt();
                assert!((lg_normalization(ell, p) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn radial_modes_are_normalized_on_a_finer_grid() {
        let g = GridSpec::for_waist(512, W0, 12.0).unwrap();
        for p in 0..=3 {
            for ell in [0, 2] {
                let f = evaluate_lg::<f64>(&LgMode::new(ell, p, W0, LAMBDA).unwrap(), &g).unwrap();
                assert!((f.power() - 1.0).abs() < 1e-6, "l={ell} p={p}: {}", f.power());
            }
        }
    }

    #[test]
    fn basis_rejects_q_zero_and_returns_orthogonal_pair() {
        assert!(lg_basis::<f64>(0, &grid(), W0, LAMBDA).is_err());
        let (p, m) = lg_basis::<f64>(1, &grid(), W0, LAMBDA).unwrap();
        assert!(inner_product(&p, &m).unwrap().norm() < 1e-6);
    }

    #[test]
    fn q7_basis_fits_the_default_grid() {
        let (p, m) = lg_basis::<f64>(7, &grid(), W0, LAMBDA).unwrap();
        assert!((p.power() - 1.0).abs() < 1e-3);
        assert!((m.power() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn oversized_modes_are_rejected() {
        let err = evaluate_lg::<f64>(&LgMode::new(12, 0, W0, LAMBDA).unwrap(), &grid());
        assert!(matches!(err, Err(OamError::Sampling(_))));
        let coarse = GridSpec::new(256, W0 / 8.0).unwrap();
        let err = evaluate_lg::<f64>(&LgMode::new(1, 0, W0, LAMBDA).unwrap(), &coarse);
        assert!(matches!(err, Err(OamError::Sampling(_))));
    }

    #[test]
    fn negative_ell_is_conjugate_at_waist() {
        let g = grid();
        for q in [1, 4] {
            let a = evaluate_lg::<f64>(&LgMode::new(q, 0, W0, LAMBDA).unwrap(), &g).unwrap();
            let b = evaluate_lg::<f64>(&LgMode::new(-q, 0, W0, LAMBDA).unwrap(), &g).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x.conj() - y).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn numeric_propagation_tracks_analytic_mode() {
        // The window must also hold the mode after it spreads.
        let g = GridSpec::for_waist(256, W0, 12.0).unwrap();
        for (ell, t) in [(0, 1.0), (1, 0.5), (1, 1.0), (3, 0.5)] {
            let m = LgMode::new(ell, 0, W0, LAMBDA).unwrap();
            let z = t * m.rayleigh_range();
            let start = evaluate_lg::<f64>(&m, &g).unwrap();
            let moved = propagate_free_space(&start, z).unwrap();
            let analytic = evaluate_lg::<f64>(&m.at_plane(z), &g).unwrap();
            let overlap = inner_product(&analytic, &moved).unwrap().norm();
            assert!(overlap >= 0.999, "l={ell} t={t}: {overlap}");
        }
    }
}
