use num_complex::Complex;

use crate::error::Result;
use crate::grid::{apply_phase, dot_conj, propagate_free_space, GridSpec, SampledField};
use crate::modes::{evaluate_lg, LgMode};
use crate::quantum::{modal_coefficients, ModalCoefficients};
use crate::scalar::Real;
use crate::turbulence::PhaseScreen;

/// `exp(iθ)` sampled on the screen grid.
pub fn transmission<T: Real>(screen: &PhaseScreen<T>) -> Vec<Complex<T>> {
    screen.theta().iter().map(|&th| Complex::new(th.cos(), th.sin())).collect()
}

/// Extracts [`ModalCoefficients`] of the `±q` qubit from a phase screen.
///
/// With `dz = 0` the overlaps `⟨j| e^{iθ} |k⟩` reduce to sums of a fixed
/// kernel against the transmission, which are precomputed once. With
/// `dz > 0` the distorted inputs are propagated numerically and projected onto
/// the analytic modes at the detection plane.
#[derive(Debug, Clone)]
pub struct QubitProjector<T: Real> {
    q: u32,
    dz: f64,
    inputs: [SampledField<T>; 2],
    outputs: [SampledField<T>; 2],
    /// `conj(conj(out_j) in_k) · pitch²` for (j, k) = (+,+), (−,+), (+,−), (−,−).
    kernels: Option<[Vec<Complex<T>>; 4]>,
}

impl<T: Real> QubitProjector<T> {
    pub fn new(q: u32, grid: &GridSpec, w0: f64, wavelength: f64, dz: f64) -> Result<Self> {
        let (plus, minus) = crate::modes::lg_basis::<T>(q, grid, w0, wavelength)?;
        let outputs = if dz > 0.0 {
            let at = |ell: i32| -> Result<SampledField<T>> {
                evaluate_lg(&LgMode::new(ell, 0, w0, wavelength)?.at_plane(dz), grid)
            };
            [at(q as i32)?, at(-(q as i32))?]
        } else {
            [plus.clone(), minus.clone()]
        };
        let inputs = [plus, minus];
        let kernels = (dz == 0.0).then(|| {
            let w = T::lit(grid.pitch() * grid.pitch());
            let kernel = |j: usize, k: usize| -> Vec<Complex<T>> {
                outputs[j].values().iter().zip(inputs[k].values()).map(|(o, i)| o * i.conj() * w).collect()
            };
            [kernel(0, 0), kernel(1, 0), kernel(0, 1), kernel(1, 1)]
        });
        Ok(Self { q, dz, inputs, outputs, kernels })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// Coefficients for one screen; `phasor` must be [`transmission`] of
    /// `screen` and is shared across projectors.
    pub fn coefficients(&self, screen: &PhaseScreen<T>, phasor: &[Complex<T>]) -> Result<ModalCoefficients<T>> {
        match &self.kernels {
            Some([pp, pm, mp, mm]) => Ok(ModalCoefficients {
                plus_to_plus: dot_conj(pp, phasor),
                plus_to_minus: dot_conj(pm, phasor),
                minus_to_plus: dot_conj(mp, phasor),
                minus_to_minus: dot_conj(mm, phasor),
            }),
            None => self.coefficients_by_propagation(screen),
        }
    }

    /// Reference route: apply the screen, propagate, and project.
    pub fn coefficients_by_propagation(&self, screen: &PhaseScreen<T>) -> Result<ModalCoefficients<T>> {
        let distort = |f: &SampledField<T>| propagate_free_space(&apply_phase(f, screen)?, self.dz);
        let plus = distort(&self.inputs[0])?;
        let minus = distort(&self.inputs[1])?;
        modal_coefficients(&plus, &minus, &self.outputs[0], &self.outputs[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbulence::{generate_screen_pair, ScreenTarget};

    const W0: f64 = 0.01;
    const LAMBDA: f64 = 1.55e-6;

    fn grid() -> GridSpec {
        GridSpec::for_waist(128, W0, 8.0).unwrap()
    }

    fn close(a: &ModalCoefficients<f64>, b: &ModalCoefficients<f64>, tol: f64) -> bool {
        (a.plus_to_plus - b.plus_to_plus).norm() < tol
            && (a.plus_to_minus - b.plus_to_minus).norm() < tol
            && (a.minus_to_plus - b.minus_to_plus).norm() < tol
            && (a.minus_to_minus - b.minus_to_minus).norm() < tol
    }

    #[test]
    fn kernel_route_matches_field_route_at_the_screen() {
        let g = grid();
        let proj = QubitProjector::<f64>::new(2, &g, W0, LAMBDA, 0.0).unwrap();
        let (a, _) = generate_screen_pair(&g, &ScreenTarget::from_strength(W0, 2.0), 3).unwrap();
        let fast = proj.coefficients(&a, &transmission(&a)).unwrap();
        let slow = proj.coefficients_by_propagation(&a).unwrap();
        assert!(close(&fast, &slow, 1e-12));
        assert!(fast.is_subnormalized(1e-9));
    }

    #[test]
    fn flat_screen_is_the_identity_channel() {
        let g = grid();
        let flat = PhaseScreen::from_theta(g, vec![0.0; g.len()], f64::INFINITY, 0, 0).unwrap();
        for dz in [0.0, 50.0] {
            let proj = QubitProjector::<f64>::new(1, &g, W0, LAMBDA, dz).unwrap();
            let c = proj.coefficients(&flat, &transmission(&flat)).unwrap();
            assert!(close(&c, &ModalCoefficients::identity(), 1e-4), "dz={dz}: {c:?}");
        }
    }

    #[test]
    fn short_propagation_barely_changes_coefficients() {
        let g = grid();
        let (a, _) = generate_screen_pair(&g, &ScreenTarget::from_strength(W0, 1.0), 4).unwrap();
        let at_screen = QubitProjector::<f64>::new(1, &g, W0, LAMBDA, 0.0).unwrap();
        let near = QubitProjector::<f64>::new(1, &g, W0, LAMBDA, 1e-3).unwrap();
        let c0 = at_screen.coefficients(&a, &transmission(&a)).unwrap();
        let c1 = near.coefficients(&a, &transmission(&a)).unwrap();
        assert!(close(&c0, &c1, 1e-3));
    }
}
