//! Dense 4×4 complex matrices and a Hermitian eigensolver.

use num_complex::Complex;

use crate::scalar::Real;

pub type Mat4<T> = [[Complex<T>; 4]; 4];

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn zeros<T: Real>() -> Mat4<T> {
    [[Complex::new(T::zero(), T::zero()); 4]; 4]
}

pub fn identity<T: Real>() -> Mat4<T> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex::new(T::one(), T::zero());
    }
    m
}

pub fn mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

pub fn adjoint<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn conj<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    a.map(|row| row.map(|v| v.conj()))
}

pub fn scale<T: Real>(a: &Mat4<T>, s: T) -> Mat4<T> {
    a.map(|row| row.map(|v| v * s))
}

pub fn trace<T: Real>(a: &Mat4<T>) -> Complex<T> {
    (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + a[i][i])
}

/// Frobenius norm of `a - b`.
pub fn distance<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> T {
    let mut s = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            s = s + (a[i][j] - b[i][j]).norm_sqr();
        }
    }
    s.sqrt()
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermiticity_defect<T: Real>(a: &Mat4<T>) -> T {
    let mut worst = T::zero();
    for i in 0..4 {
        for j in i..4 {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let half = T::lit(0.5);
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (a[i][j] + a[j][i].conj()) * half;
        }
    }
    out
}

/// `σy ⊗ σy`, real and symmetric.
pub fn spin_flip<T: Real>() -> Mat4<T> {
    let mut m = zeros();
    m[0][3] = c(-1.0, 0.0);
    m[1][2] = c(1.0, 0.0);
    m[2][1] = c(1.0, 0.0);
    m[3][0] = c(-1.0, 0.0);
    m
}

/// `|ψ⟩⟨ψ|`.
pub fn outer<T: Real>(psi: &[Complex<T>; 4]) -> Mat4<T> {
    let mut m = zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = psi[i] * psi[j].conj();
        }
    }
    m
}

/// Rebuilds `V diag(λ) V†` from eigenvectors stored as columns of `v`.
pub fn from_eigen<T: Real>(values: &[T; 4], v: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] =
                (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + v[i][k] * v[j][k].conj() * values[k]);
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// orthonormal eigenvectors as columns.
///
/// Only the Hermitian part of `a` is used.
pub fn hermitian_eigen<T: Real>(a: &Mat4<T>) -> ([T; 4], Mat4<T>) {
    let mut m = hermitian_part(a);
    let mut v = identity::<T>();
    let scale =
        (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).fold(T::zero(), |acc, (i, j)| acc + m[i][j].norm_sqr()).sqrt();
    let tiny = T::epsilon() * T::epsilon() * scale * scale;

    for _sweep in 0..64 {
        let off: T = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[i][j].norm_sqr());
        if off <= tiny || scale == T::zero() {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let g = m[p][q].norm();
                if g == T::zero() {
                    continue;
                }
                // Phase the (p, q) element real, then apply a real Jacobi rotation.
                let phase = m[p][q] / g;
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let theta = (aqq - app) / (T::lit(2.0) * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                // U = D R with D = diag(1, conj(phase)) on (p, q).
                let u_pp = Complex::new(cs, T::zero());
                let u_pq = Complex::new(sn, T::zero());
                let u_qp = phase.conj() * (-sn);
                let u_qq = phase.conj() * cs;
                // m <- m U
                for row in m.iter_mut() {
                    let (mp, mq) = (row[p], row[q]);
                    row[p] = mp * u_pp + mq * u_qp;
                    row[q] = mp * u_pq + mq * u_qq;
                }
                // m <- U† m
                for col in 0..4 {
                    let (mp, mq) = (m[p][col], m[q][col]);
                    m[p][col] = u_pp.conj() * mp + u_qp.conj() * mq;
                    m[q][col] = u_pq.conj() * mp + u_qq.conj() * mq;
                }
                m[p][q] = Complex::new(T::zero(), T::zero());
                m[q][p] = Complex::new(T::zero(), T::zero());
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = vp * u_pp + vq * u_qp;
                    row[q] = vp * u_pq + vq * u_qq;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| m[i][i].re.partial_cmp(&m[j][j].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.map(|k| m[k][k].re);
    let mut vecs = zeros();
    for (col, &k) in order.iter().enumerate() {
        for row in 0..4 {
            vecs[row][col] = v[row][k];
        }
    }
    (values, vecs)
}

/// Singular values of `a` in ascending order by one-sided complex Jacobi.
///
/// Small singular values keep absolute accuracy of order `ε·‖a‖`, unlike
/// square roots of the eigenvalues of `a† a`.
pub fn singular_values<T: Real>(a: &Mat4<T>) -> [T; 4] {
    let mut m = *a;
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let (mut alpha, mut beta) = (T::zero(), T::zero());
                let mut gamma = Complex::new(T::zero(), T::zero());
                for row in m.iter() {
                    alpha = alpha + row[p].norm_sqr();
                    beta = beta + row[q].norm_sqr();
                    gamma = gamma + row[p].conj() * row[q];
                }
                let g = gamma.norm();
                if g == T::zero() || g <= T::epsilon() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                let u_pp = Complex::new(cs, T::zero());
                let u_pq = Complex::new(sn, T::zero());
                let u_qp = phase.conj() * (-sn);
                let u_qq = phase.conj() * cs;
                for row in m.iter_mut() {
                    let (mp, mq) = (row[p], row[q]);
                    row[p] = mp * u_pp + mq * u_qp;
                    row[q] = mp * u_pq + mq * u_qq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = [0, 1, 2, 3].map(|j| m.iter().map(|row| row[j].norm_sqr()).sum::<T>().sqrt());
    s.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    s
}
