//! Two-qubit OAM states: projection of distorted modes onto the `±q`
//! subspace, ensemble density matrices, and Wootters concurrence.
//!
//! Basis ordering everywhere is `{|q,q⟩, |q,q̄⟩, |q̄,q⟩, |q̄,q̄⟩}` with photon A
//! first and `q̄ = −q`.

pub mod matrix;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{OamError, Result};
use crate::grid::{inner_product, SampledField};
use crate::scalar::Real;
use matrix::Mat4;

/// Hermiticity tolerance applied to density matrices and raw inputs.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Negative eigenvalues of a density matrix down to `-EIGEN_CLIP` are round-off.
pub const EIGEN_CLIP: f64 = 1e-10;

fn tol<T: Real>(t: f64) -> T {
    T::lit(t).max(T::epsilon() * T::lit(256.0))
}

/// Overlaps of one arm's two distorted input modes with the `±q` basis.
///
/// For arm A these are `a_q, a_q̄, b_q, b_q̄`; for arm B `c_q, c_q̄, d_q, d_q̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalCoefficients<T: Real> {
    /// `⟨q| U |q⟩`
    pub plus_to_plus: Complex<T>,
    /// `⟨q̄| U |q⟩`
    pub plus_to_minus: Complex<T>,
    /// `⟨q| U |q̄⟩`
    pub minus_to_plus: Complex<T>,
    /// `⟨q̄| U |q̄⟩`
    pub minus_to_minus: Complex<T>,
}

impl<T: Real> ModalCoefficients<T> {
    /// The undistorted channel.
    pub fn identity() -> Self {
        let one = Complex::new(T::one(), T::zero());
        let zero = Complex::new(T::zero(), T::zero());
        Self { plus_to_plus: one, plus_to_minus: zero, minus_to_plus: zero, minus_to_minus: one }
    }

    /// Builds the coefficients of a 2×2 matrix acting on `(|q⟩, |q̄⟩)` columns.
    pub fn from_matrix(u: [[Complex<T>; 2]; 2]) -> Self {
        Self { plus_to_plus: u[0][0], plus_to_minus: u[1][0], minus_to_plus: u[0][1], minus_to_minus: u[1][1] }
    }

    /// Truncation only loses power: each input keeps at most its unit norm.
    pub fn is_subnormalized(&self, slack: f64) -> bool {
        let limit = T::one() + T::lit(slack);
        self.plus_to_plus.norm_sqr() + self.plus_to_minus.norm_sqr() <= limit
            && self.minus_to_plus.norm_sqr() + self.minus_to_minus.norm_sqr() <= limit
    }
}

/// Projects the distorted `|q⟩` and `|q̄⟩` inputs of one arm onto the basis.
pub fn modal_coefficients<T: Real>(
    distorted_plus: &SampledField<T>,
    distorted_minus: &SampledField<T>,
    basis_plus: &SampledField<T>,
    basis_minus: &SampledField<T>,
) -> Result<ModalCoefficients<T>> {
    let z = basis_plus.z();
    for f in [distorted_plus, distorted_minus, basis_minus] {
        if (f.z() - z).abs() > 1e-9 * (1.0 + z.abs()) {
            return Err(OamError::Dimension(format!("fields sit at different planes ({} vs {z})", f.z())));
        }
    }
    Ok(ModalCoefficients {
        plus_to_plus: inner_product(basis_plus, distorted_plus)?,
        plus_to_minus: inner_product(basis_minus, distorted_plus)?,
        minus_to_plus: inner_product(basis_plus, distorted_minus)?,
        minus_to_minus: inner_product(basis_minus, distorted_minus)?,
    })
}

/// Unnormalized two-photon state `C1|q,q⟩ + C2|q,q̄⟩ + C3|q̄,q⟩ + C4|q̄,q̄⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPureState<T: Real> {
    pub amplitudes: [Complex<T>; 4],
}

impl<T: Real> ProjectedPureState<T> {
    pub fn new(amplitudes: [Complex<T>; 4]) -> Self {
        Self { amplitudes }
    }

    /// `(|q,q̄⟩ + |q̄,q⟩) / √2`.
    pub fn bell() -> Self {
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self { amplitudes: [z, h, h, z] }
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Only photon A crosses the turbulence; photon B is ideal.
///
/// `C1 = b_q/√2, C2 = a_q/√2, C3 = b_q̄/√2, C4 = a_q̄/√2`.
pub fn project_single_photon<T: Real>(arm_a: &ModalCoefficients<T>) -> ProjectedPureState<T> {
    let h = T::FRAC_1_SQRT_2();
    ProjectedPureState::new([
        arm_a.minus_to_plus * h,
        arm_a.plus_to_plus * h,
        arm_a.minus_to_minus * h,
        arm_a.plus_to_minus * h,
    ])
}

/// Both photons cross independent turbulence.
///
/// ```text
/// C1 = (a_q d_q + b_q c_q)/√2     C2 = (a_q d_q̄ + b_q c_q̄)/√2
/// C3 = (a_q̄ d_q + b_q̄ c_q)/√2     C4 = (a_q̄ d_q̄ + b_q̄ c_q̄)/√2
/// ```
pub fn project_two_photon<T: Real>(
    arm_a: &ModalCoefficients<T>,
    arm_b: &ModalCoefficients<T>,
) -> ProjectedPureState<T> {
    let h = T::FRAC_1_SQRT_2();
    let (aq, aqb, bq, bqb) = (arm_a.plus_to_plus, arm_a.plus_to_minus, arm_a.minus_to_plus, arm_a.minus_to_minus);
    let (cq, cqb, dq, dqb) = (arm_b.plus_to_plus, arm_b.plus_to_minus, arm_b.minus_to_plus, arm_b.minus_to_minus);
    ProjectedPureState::new([
        (aq * dq + bq * cq) * h,
        (aq * dqb + bq * cqb) * h,
        (aqb * dq + bqb * cq) * h,
        (aqb * dqb + bqb * cqb) * h,
    ])
}

/// A Hermitian, unit-trace, positive semidefinite 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitDensityMatrix<T: Real> {
    rho: Mat4<T>,
}

impl<T: Real> TwoQubitDensityMatrix<T> {
    /// Validates an already-physical matrix.
    pub fn new(rho: Mat4<T>) -> Result<Self> {
        let defect = matrix::hermiticity_defect(&rho);
        if defect > tol::<T>(HERMITIAN_TOL) {
            return Err(OamError::Validation(format!("matrix is not Hermitian (defect {defect})")));
        }
        let tr = matrix::trace(&rho);
        if (tr.re - T::one()).abs() > tol::<T>(1e-9) || tr.im.abs() > tol::<T>(1e-9) {
            return Err(OamError::Validation(format!("trace is {tr}, expected 1")));
        }
        let (vals, _) = matrix::hermitian_eigen(&rho);
        if vals[0] < -tol::<T>(EIGEN_CLIP) {
            return Err(OamError::Validation(format!("matrix has negative eigenvalue {}", vals[0])));
        }
        Ok(Self { rho })
    }

    pub fn pure(state: &ProjectedPureState<T>) -> Result<Self> {
        let mut acc = DensityAccumulator::new();
        acc.add(state);
        acc.finish()
    }

    /// `I / 4`.
    pub fn maximally_mixed() -> Self {
        Self { rho: matrix::scale(&matrix::identity(), T::lit(0.25)) }
    }

    pub fn matrix(&self) -> &Mat4<T> {
        &self.rho
    }

    pub fn element(&self, i: usize, j: usize) -> Complex<T> {
        self.rho[i][j]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [T; 4] {
        matrix::hermitian_eigen(&self.rho).0
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> T {
        matrix::trace(&matrix::mul(&self.rho, &self.rho)).re
    }

    /// Wootters concurrence, see [`concurrence`].
    pub fn concurrence(&self) -> T {
        concurrence_unchecked(&self.rho)
    }

    pub fn to_doc(&self) -> MatrixDoc {
        MatrixDoc::from_matrix(&self.rho)
    }

    pub fn from_doc(doc: &MatrixDoc) -> Result<Self> {
        Self::new(doc.to_matrix()?)
    }
}

/// Serialized 4×4 complex matrix: row-major rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rho: Vec<Vec<[f64; 2]>>,
}

impl MatrixDoc {
    pub fn from_matrix<T: Real>(m: &Mat4<T>) -> Self {
        Self {
            rho: m.iter().map(|row| row.iter().map(|v| [v.re.to_f64_lossy(), v.im.to_f64_lossy()]).collect()).collect(),
        }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<Mat4<T>> {
        if self.rho.len() != 4 || self.rho.iter().any(|r| r.len() != 4) {
            return Err(OamError::Format("density matrix must be 4x4".into()));
        }
        let mut m = matrix::zeros();
        for (i, row) in self.rho.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(OamError::Format(format!("non-finite entry at ({i}, {j})")));
                }
                m[i][j] = matrix::c(re, im);
            }
        }
        Ok(m)
    }
}

/// Unnormalized running sum of `|Ψ⟩⟨Ψ|` with Neumaier compensation.
///
/// Sums merge associatively, so partial ensembles can be reduced in any
/// grouping; a fixed merge order gives bitwise-reproducible results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityAccumulator<T: Real> {
    sum: Mat4<T>,
    compensation: Mat4<T>,
    count: usize,
}

impl<T: Real> Default for DensityAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn neumaier<T: Real>(sum: &mut T, comp: &mut T, x: T) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp = *comp + ((*sum - t) + x);
    } else {
        *comp = *comp + ((x - t) + *sum);
    }
    *sum = t;
}

impl<T: Real> DensityAccumulator<T> {
    pub fn new() -> Self {
        Self { sum: matrix::zeros(), compensation: matrix::zeros(), count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn add_matrix(&mut self, m: &Mat4<T>) {
        for i in 0..4 {
            for j in 0..4 {
                let (s, c) = (&mut self.sum[i][j], &mut self.compensation[i][j]);
                neumaier(&mut s.re, &mut c.re, m[i][j].re);
                neumaier(&mut s.im, &mut c.im, m[i][j].im);
            }
        }
    }

    pub fn add(&mut self, state: &ProjectedPureState<T>) {
        self.add_matrix(&matrix::outer(&state.amplitudes));
        self.count += 1;
    }

    pub fn merge(&mut self, other: &DensityAccumulator<T>) {
        self.add_matrix(&other.sum);
        self.add_matrix(&other.compensation);
        self.count += other.count;
    }

    /// Compensated, unnormalized sum.
    pub fn raw_sum(&self) -> Mat4<T> {
        let mut out = self.sum;
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = out[i][j] + self.compensation[i][j];
            }
        }
        out
    }

    /// Normalizes the sum by its trace.
    pub fn finish(&self) -> Result<TwoQubitDensityMatrix<T>> {
        let sum = self.raw_sum();
        let tr = matrix::trace(&sum).re;
        if !(tr > T::zero()) || !tr.is_finite() {
            return Err(OamError::Degenerate(format!(
                "ensemble of {} states carries no weight in the qubit subspace",
                self.count
            )));
        }
        let rho = matrix::hermitian_part(&matrix::scale(&sum, T::one() / tr));
        Ok(TwoQubitDensityMatrix { rho })
    }
}

/// `ρ = Σ|Ψn⟩⟨Ψn| / tr(Σ|Ψn⟩⟨Ψn|)`.
pub fn accumulate_density<'a, T: Real, I>(states: I) -> Result<TwoQubitDensityMatrix<T>>
where
    I: IntoIterator<Item = &'a ProjectedPureState<T>>,
{
    let mut acc = DensityAccumulator::new();
    for s in states {
        acc.add(s);
    }
    acc.finish()
}

/// Wootters concurrence `max(0, √λ1 − √λ2 − √λ3 − √λ4)`, with `λi` the
/// eigenvalues of `R = ρ (σy⊗σy) ρ* (σy⊗σy)` in decreasing order.
///
/// With `ρ = W W†` and `W = V √Λ`, the `√λi` are the singular values of
/// `Wᵀ (σy⊗σy) W`; computing them directly avoids taking square roots of
/// round-off in rank-deficient states. Fails if `rho` is not Hermitian to
/// [`HERMITIAN_TOL`].
pub fn concurrence<T: Real>(rho: &Mat4<T>) -> Result<T> {
    let defect = matrix::hermiticity_defect(rho);
    if defect > tol::<T>(HERMITIAN_TOL) {
        return Err(OamError::Validation(format!("matrix is not Hermitian (defect {defect})")));
    }
    Ok(concurrence_unchecked(rho))
}

fn concurrence_unchecked<T: Real>(rho: &Mat4<T>) -> T {
    let (vals, vecs) = matrix::hermitian_eigen(rho);
    let roots = vals.map(|v| v.max(T::zero()).sqrt());
    let mut w = vecs;
    for row in w.iter_mut() {
        for (x, r) in row.iter_mut().zip(&roots) {
            *x = *x * *r;
        }
    }
    let mut wt = matrix::zeros();
    for i in 0..4 {
        for j in 0..4 {
            wt[i][j] = w[j][i];
        }
    }
    let tau = matrix::mul(&matrix::mul(&wt, &matrix::spin_flip()), &w);
    // ascending order: s[3] is the largest
    let s = matrix::singular_values(&tau);
    let c = s[3] - s[2] - s[1] - s[0];
    c.max(T::zero()).min(T::one())
}

/// Nearest physical state of a Hermitian (possibly indefinite) matrix:
/// negative eigenvalues are clipped to zero and the trace renormalized.
pub fn project_to_physical<T: Real>(raw: &Mat4<T>) -> Result<TwoQubitDensityMatrix<T>> {
    let defect = matrix::hermiticity_defect(raw);
    if defect > tol::<T>(HERMITIAN_TOL) {
        return Err(OamError::Validation(format!("matrix is not Hermitian (defect {defect})")));
    }
    let (vals, vecs) = matrix::hermitian_eigen(raw);
    let clipped = vals.map(|v| v.max(T::zero()));
    let total: T = clipped.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(OamError::Degenerate("all eigenvalues are non-positive".into()));
    }
    let normalized = clipped.map(|v| v / total);
    let rho = matrix::hermitian_part(&matrix::from_eigen(&normalized, &vecs));
    Ok(TwoQubitDensityMatrix { rho })
}
