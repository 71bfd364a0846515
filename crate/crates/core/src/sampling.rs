//! Random states, operators, unitaries, and models for property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{Operator, StateVector};
use crate::lindblad::LindbladModel;
use crate::scalar::{c, cr, czero, Real, C};

fn gauss<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

fn cgauss<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    c(gauss(rng), gauss(rng))
}

/// Haar-random unit vector.
pub fn random_state<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> StateVector<T> {
    loop {
        let amps = (0..d).map(|_| cgauss(rng)).collect();
        if let Ok(psi) = StateVector::from_unnormalized(amps) {
            return psi;
        }
    }
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator<T> {
    Operator::from_fn(d, |_, _| cgauss(rng))
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator<T> {
    let g = random_matrix::<T, R>(rng, d);
    (&g + &g.dagger()).scale_real(T::lit(0.5))
}

/// Random density matrix G G^dagger / Tr(G G^dagger).
pub fn random_density<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator<T> {
    let g = random_matrix::<T, R>(rng, d);
    let p = g.matmul(&g.dagger());
    let tr = p.trace().re;
    p.scale_real(tr.recip())
}

/// Random PSD matrix of the given size (Wishart-like, trace ~ size).
pub fn random_psd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Operator<T> {
    let g = random_matrix::<T, R>(rng, n);
    g.matmul(&g.dagger()).scale_real(T::lit(1.0 / n as f64))
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt, fixing the
/// phases so the result is Haar distributed for Gaussian input.
fn orthonormalize_columns<T: Real>(m: &Operator<T>) -> Operator<T> {
    let n = m.dim();
    let mut cols: Vec<Vec<C<T>>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C<T> = cols[k]
                .iter()
                .zip(&cols[j])
                .fold(czero(), |acc, (a, b)| acc + a.conj() * b);
            let ck = cols[k].clone();
            for (x, y) in cols[j].iter_mut().zip(&ck) {
                *x -= proj * *y;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= cr(norm);
        }
    }
    Operator::from_fn(n, |i, j| cols[j][i])
}

/// Haar-random N x N unitary.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Operator<T> {
    orthonormalize_columns(&random_matrix::<T, R>(rng, n))
}

/// Haar-random N x N real orthogonal matrix (as a complex matrix).
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Operator<T> {
    let g = Operator::from_fn(n, |_, _| cr(gauss::<T, R>(rng)));
    orthonormalize_columns(&g)
}

/// Random model with Hermitian H and `n` generic (non-Hermitian) Lindblad
/// operators of moderate norm. Retries until {1, L_k} is independent.
pub fn random_model<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> LindbladModel<T> {
    loop {
        let h = random_hermitian::<T, R>(rng, d);
        let ops = (0..n)
            .map(|_| random_matrix::<T, R>(rng, d).scale_real(T::lit(0.5)))
            .collect();
        if let Ok(m) = LindbladModel::new(h, ops) {
            return m;
        }
    }
}

/// Random model with Hermitian Lindblad operators.
pub fn random_hermitian_model<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n: usize,
) -> LindbladModel<T> {
    loop {
        let h = random_hermitian::<T, R>(rng, d);
        let ops = (0..n)
            .map(|_| random_hermitian::<T, R>(rng, d).scale_real(T::lit(0.5)))
            .collect();
        if let Ok(m) = LindbladModel::new(h, ops) {
            return m;
        }
    }
}
