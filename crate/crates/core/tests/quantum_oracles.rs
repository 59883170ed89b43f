//! Concurrence checked against routes that share no code with the library:
//! the characteristic polynomial of `R = ρ ρ̃` solved by Durand-Kerner, and
//! the closed form for pure states.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex;
use oamturb::quantum::matrix::{self, Mat4};
use oamturb::quantum::{accumulate_density, concurrence, ProjectedPureState, TwoQubitDensityMatrix};
use oamturb::seed::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

type C = Complex<f64>;

fn random_state(rng: &mut impl Rng) -> ProjectedPureState<f64> {
    ProjectedPureState::new(std::array::from_fn(|_| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))))
}

fn random_density(rng: &mut impl Rng, rank: usize) -> TwoQubitDensityMatrix<f64> {
    let states: Vec<_> = (0..rank).map(|_| random_state(rng)).collect();
    accumulate_density(&states).unwrap()
}

fn random_unitary2(rng: &mut impl Rng) -> [[C; 2]; 2] {
    let a = C::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let b = C::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let phase = C::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    [[a, -b.conj() * phase], [b, a.conj() * phase]]
}

fn kron(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> Mat4<f64> {
    let mut m = matrix::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    m
}

fn plain_mul(a: &Mat4<f64>, b: &Mat4<f64>) -> Mat4<f64> {
    let mut out = [[C::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Characteristic polynomial coefficients `[1, c1, c2, c3, c4]` of a 4×4
/// matrix by Faddeev-LeVerrier.
fn char_poly(a: &Mat4<f64>) -> [C; 5] {
    let mut coeffs = [C::new(0.0, 0.0); 5];
    coeffs[0] = C::new(1.0, 0.0);
    let mut m = [[C::new(0.0, 0.0); 4]; 4];
    for k in 1..=4 {
        let mut next = plain_mul(a, &m);
        for i in 0..4 {
            next[i][i] += coeffs[k - 1];
        }
        m = next;
        let am = plain_mul(a, &m);
        let tr: C = (0..4).map(|i| am[i][i]).sum();
        coeffs[k] = -tr / k as f64;
    }
    coeffs
}

/// Roots of a monic quartic by Durand-Kerner iteration.
fn quartic_roots(c: &[C; 5]) -> [C; 4] {
    let p = |z: C| (((z + c[1]) * z + c[2]) * z + c[3]) * z + c[4];
    let seed = C::new(0.4, 0.9);
    let mut roots = [seed, seed * seed, seed * seed * seed, seed * seed * seed * seed];
    for _ in 0..2000 {
        let prev = roots;
        for i in 0..4 {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            roots[i] -= p(roots[i]) / denom;
        }
        if roots.iter().zip(&prev).all(|(a, b)| (a - b).norm() < 1e-17) {
            break;
        }
    }
    roots
}

fn oracle_concurrence(rho: &Mat4<f64>) -> f64 {
    let mut sy = [[C::new(0.0, 0.0); 4]; 4];
    // σy ⊗ σy written out from σy = [[0, -i], [i, 0]].
    let pauli = [[C::new(0.0, 0.0), C::new(0.0, -1.0)], [C::new(0.0, 1.0), C::new(0.0, 0.0)]];
    for i in 0..4 {
        for j in 0..4 {
            sy[i][j] = pauli[i / 2][j / 2] * pauli[i % 2][j % 2];
        }
    }
    let conj = rho.map(|r| r.map(|v| v.conj()));
    let tilde = plain_mul(&plain_mul(&sy, &conj), &sy);
    let r = plain_mul(rho, &tilde);
    let mut roots: Vec<f64> = quartic_roots(&char_poly(&r)).iter().map(|z| z.re.max(0.0).sqrt()).collect();
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}

#[test]
fn concurrence_matches_characteristic_polynomial_oracle() {
    // Root finding on repeated roots is ill-conditioned, so the oracle is fed
    // full-rank states with distinct spectra: a random mixture plus 5% of a
    // random diagonal state.
    let mut rng = rng_from_seed(100);
    for rank in 1..=4 {
        for _ in 0..40 {
            let mut m = matrix::scale(random_density(&mut rng, rank).matrix(), 0.95);
            let noise: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.1..1.0));
            let total: f64 = noise.iter().sum();
            for i in 0..4 {
                m[i][i] += C::new(0.05 * noise[i] / total, 0.0);
            }
            let want = oracle_concurrence(&m);
            let got = concurrence(&m).unwrap();
            assert!((got - want).abs() < 1e-8, "rank {rank}: {got} vs {want}");
        }
    }
}

#[test]
fn pure_state_concurrence_matches_closed_form() {
    let mut rng = rng_from_seed(101);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let [a, b, c, d] = s.amplitudes;
        let want = 2.0 * (a * d - b * c).norm() / s.norm_sqr();
        let got = TwoQubitDensityMatrix::pure(&s).unwrap().concurrence();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn reference_states() {
    let bell = TwoQubitDensityMatrix::<f64>::pure(&ProjectedPureState::bell()).unwrap();
    assert!((bell.concurrence() - 1.0).abs() < 1e-12);
    assert!(TwoQubitDensityMatrix::<f64>::maximally_mixed().concurrence().abs() < 1e-12);
    let p = 0.6;
    let mut w = matrix::scale(bell.matrix(), p);
    for i in 0..4 {
        w[i][i] += C::new((1.0 - p) / 4.0, 0.0);
    }
    assert!((concurrence(&w).unwrap() - 0.4).abs() < 1e-9);
}

#[test]
fn local_unitaries_leave_concurrence_unchanged() {
    let mut rng = rng_from_seed(102);
    for draw in 0..100 {
        let rho = random_density(&mut rng, 1 + draw % 4);
        let u = kron(&random_unitary2(&mut rng), &random_unitary2(&mut rng));
        let rotated = matrix::mul(&matrix::mul(&u, rho.matrix()), &matrix::adjoint(&u));
        let c = concurrence(&rotated).unwrap();
        assert!((c - rho.concurrence()).abs() < 1e-9, "draw {draw}: {c} vs {}", rho.concurrence());
    }
}
