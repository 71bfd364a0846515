//! Dense complex linear algebra over C^d.
//!
//! Storage is dense and row-major throughout. Dimensions are small (d <= 64)
//! so no sparse paths exist. Predicates report the size of a violation
//! rather than repairing the input.

mod eigen;
mod expm;

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, cone, cr, czero, Real, C};
use crate::tolerance::Tolerances;

pub use eigen::{eigh, eigvalsh, HermitianEigen};
pub use expm::{expm, solve};

/// Upper bound on the Hilbert-space dimension accepted by model constructors.
pub const MAX_DIM: usize = 64;

/// Square complex matrix. Used both for operators on C^d and for
/// superoperators on C^(d^2).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Operator<T> {
    pub fn new(dim: usize, data: Vec<C<T>>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotSquare {
                dim,
                len: data.len(),
            });
        }
        Ok(Operator { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { cone() } else { czero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Operator { dim, data }
    }

    /// Builds from rows; fails unless the rows form a square matrix.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    dim,
                    len: dim * (dim - 1) + row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Builds from real entries (imaginary parts zero).
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| cr(T::lit(x))).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(diag: &[C<T>]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { czero() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn entries_mut(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn rows(&self) -> Vec<Vec<C<T>>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(cr(s))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        assert_eq!(self.dim, other.dim, "axpy dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![czero(); n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Operator { dim: n, data: out }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        check_dim(self.dim, psi.dim())?;
        let mut out = vec![czero(); self.dim];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(StateVector { amps: out })
    }

    /// `out = self * x` on raw slices; panics on length mismatch.
    #[inline]
    pub fn apply_into(&self, x: &[C<T>], out: &mut [C<T>]) {
        let n = self.dim;
        assert!(x.len() == n && out.len() == n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            *o = row
                .iter()
                .zip(x)
                .fold(czero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    /// Max entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "max_abs_diff dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Max entrywise |M - M^dagger|.
    pub fn hermiticity_violation(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_violation() <= tol
    }

    /// Max entrywise |M^dagger M - 1|.
    pub fn unitarity_violation(&self) -> T {
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Hilbert-Schmidt inner product Tr(self^dagger other).
    pub fn hs_inner(&self, other: &Self) -> C<T> {
        assert_eq!(self.dim, other.dim, "hs_inner dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Column-major vectorization: `vec(M)[i + d*j] = M[i][j]`.
    pub fn vectorize(&self) -> Vec<C<T>> {
        let n = self.dim;
        let mut v = vec![czero(); n * n];
        for i in 0..n {
            for j in 0..n {
                v[i + n * j] = self[(i, j)];
            }
        }
        v
    }

    /// Inverse of [`Operator::vectorize`].
    pub fn unvectorize(v: &[C<T>]) -> Result<Self> {
        let n = (v.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != v.len() {
            return Err(Error::NotSquare { dim: n, len: v.len() });
        }
        Ok(Self::from_fn(n, |i, j| v[i + n * j]))
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> Operator<U> {
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| c(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Operator<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Operator<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: &Operator<T>) -> Operator<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        self.scale_real(-T::one())
    }
}

/// Serialized as nested arrays of `[re, im]` pairs, row by row.
impl<T: Real> Serialize for Operator<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        complex_rows_to_pairs(&self.rows()).serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Operator<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Operator::from_rows(&pairs_to_complex_rows(&pairs)).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn complex_rows_to_pairs<T: Real>(rows: &[Vec<C<T>>]) -> Vec<Vec<[f64; 2]>> {
    rows.iter()
        .map(|r| r.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect())
        .collect()
}

pub(crate) fn pairs_to_complex_rows<T: Real>(pairs: &[Vec<[f64; 2]>]) -> Vec<Vec<C<T>>> {
    pairs
        .iter()
        .map(|r| r.iter().map(|p| c(T::lit(p[0]), T::lit(p[1]))).collect())
        .collect()
}

/// Vector in C^d.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Any nonempty amplitude list; no normalization requirement.
    pub fn new(amps: Vec<C<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(StateVector { amps })
    }

    /// Accepts only states with |norm^2 - 1| within the tolerance.
    pub fn normalized(amps: Vec<C<T>>, tol: &Tolerances<T>) -> Result<Self> {
        let psi = Self::new(amps)?;
        let dev = (psi.norm_sqr() - T::one()).abs();
        if dev > tol.normalization {
            return Err(Error::NotNormalized {
                what: "state".into(),
                violation: dev.as_f64(),
            });
        }
        Ok(psi)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn from_unnormalized(amps: Vec<C<T>>) -> Result<Self> {
        let mut psi = Self::new(amps)?;
        let n = psi.norm();
        if n.is_zero() {
            return Err(Error::NotNormalized {
                what: "zero vector".into(),
                violation: 1.0,
            });
        }
        psi.scale_in_place(n.recip());
        Ok(psi)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| cr(T::lit(x))).collect())
    }

    /// Computational basis vector |k> in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![czero(); dim];
        amps[k] = cone();
        StateVector { amps }
    }

    pub(crate) fn from_vec_unchecked(amps: Vec<C<T>>) -> Self {
        StateVector { amps }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Inner product <self, other>, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C<T> {
        assert_eq!(self.dim(), other.dim(), "inner dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn scale_in_place(&mut self, s: T) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        StateVector {
            amps: self.amps.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        StateVector {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Index<usize> for StateVector<T> {
    type Output = C<T>;
    fn index(&self, i: usize) -> &C<T> {
        &self.amps[i]
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    op: Operator<T>,
}

/// Measured departures from the density-matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDiagnostics<T> {
    pub hermiticity: T,
    pub trace_error: T,
    pub min_eigenvalue: T,
}

impl<T: Real> DensityDiagnostics<T> {
    pub fn is_valid(&self, tol: &Tolerances<T>) -> bool {
        self.hermiticity <= tol.hermitian
            && self.trace_error <= tol.trace
            && self.min_eigenvalue >= -tol.psd
    }
}

impl<T: Real> DensityMatrix<T> {
    /// Validates all three invariants, reporting the first violated one.
    pub fn new(op: Operator<T>, tol: &Tolerances<T>) -> Result<Self> {
        let diag = density_diagnostics(&op);
        if diag.hermiticity > tol.hermitian {
            return Err(Error::InvalidDensity {
                what: "density matrix".into(),
                reason: format!("max |rho - rho^dagger| = {:.3e}", diag.hermiticity),
            });
        }
        if diag.trace_error > tol.trace {
            return Err(Error::InvalidDensity {
                what: "density matrix".into(),
                reason: format!("|Tr(rho) - 1| = {:.3e}", diag.trace_error),
            });
        }
        if diag.min_eigenvalue < -tol.psd {
            return Err(Error::InvalidDensity {
                what: "density matrix".into(),
                reason: format!("min eigenvalue = {:.3e}", diag.min_eigenvalue),
            });
        }
        Ok(DensityMatrix { op })
    }

    /// Wraps without validation; use [`DensityMatrix::diagnostics`] to inspect.
    pub fn new_unchecked(op: Operator<T>) -> Self {
        DensityMatrix { op }
    }

    /// |psi><psi| for a state of any norm.
    pub fn pure(psi: &StateVector<T>) -> Self {
        DensityMatrix {
            op: outer_unchecked(psi, psi),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            op: Operator::identity(dim).scale_real(T::one() / T::lit(dim as f64)),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &Operator<T> {
        &self.op
    }

    pub fn into_operator(self) -> Operator<T> {
        self.op
    }

    pub fn diagnostics(&self) -> DensityDiagnostics<T> {
        density_diagnostics(&self.op)
    }
}

impl<T> Index<(usize, usize)> for DensityMatrix<T> {
    type Output = C<T>;
    fn index(&self, ij: (usize, usize)) -> &C<T> {
        &self.op[ij]
    }
}

fn density_diagnostics<T: Real>(op: &Operator<T>) -> DensityDiagnostics<T> {
    let hermiticity = op.hermiticity_violation();
    let trace_error = (op.trace() - cone()).norm();
    // eigenvalues of the Hermitian part; the anti-Hermitian part is reported above
    let herm = (op + &op.dagger()).scale_real(T::lit(0.5));
    let min_eigenvalue = eigvalsh(&herm)
        .first()
        .copied()
        .unwrap_or_else(T::zero);
    DensityDiagnostics {
        hermiticity,
        trace_error,
        min_eigenvalue,
    }
}

#[inline]
fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Conjugate transpose.
pub fn dagger<T: Real>(m: &Operator<T>) -> Operator<T> {
    m.dagger()
}

/// <psi, M psi>.
pub fn expectation<T: Real>(psi: &StateVector<T>, m: &Operator<T>) -> Result<C<T>> {
    check_dim(m.dim(), psi.dim())?;
    Ok(expectation_unchecked(psi.amplitudes(), m))
}

#[inline]
pub(crate) fn expectation_unchecked<T: Real>(psi: &[C<T>], m: &Operator<T>) -> C<T> {
    let n = m.dim();
    let mut acc = czero();
    for (i, a) in psi.iter().enumerate() {
        let row = &m.entries()[i * n..(i + 1) * n];
        let mpsi_i = row
            .iter()
            .zip(psi)
            .fold(czero(), |s, (&x, &y)| s + x * y);
        acc += a.conj() * mpsi_i;
    }
    acc
}

/// |psi><phi|, entries psi_i conj(phi_j).
pub fn outer<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<Operator<T>> {
    check_dim(psi.dim(), phi.dim())?;
    Ok(outer_unchecked(psi, phi))
}

pub(crate) fn outer_unchecked<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Operator<T> {
    outer_slices(psi.amplitudes(), phi.amplitudes())
}

#[inline]
pub(crate) fn outer_slices<T: Real>(psi: &[C<T>], phi: &[C<T>]) -> Operator<T> {
    Operator::from_fn(psi.len(), |i, j| psi[i] * phi[j].conj())
}

/// Half the sum of singular values of rho - sigma.
///
/// Both inputs are Hermitian so the singular values are the absolute
/// eigenvalues of the difference.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_dim(rho.dim(), sigma.dim())?;
    Ok(trace_norm_hermitian(&(rho.as_operator() - sigma.as_operator())) * T::lit(0.5))
}

/// Sum of |eigenvalues| of the Hermitian part of `m`.
pub(crate) fn trace_norm_hermitian<T: Real>(m: &Operator<T>) -> T {
    let herm = (m + &m.dagger()).scale_real(T::lit(0.5));
    eigvalsh(&herm).into_iter().map(|x| x.abs()).sum()
}

/// Gram-matrix test for linear independence of operators under the
/// Hilbert-Schmidt inner product, optionally with the identity prepended.
pub fn check_linear_independence<T: Real>(ops: &[Operator<T>], include_identity: bool) -> bool {
    check_linear_independence_with(ops, include_identity, &Tolerances::default())
}

pub fn check_linear_independence_with<T: Real>(
    ops: &[Operator<T>],
    include_identity: bool,
    tol: &Tolerances<T>,
) -> bool {
    let Some(first) = ops.first() else {
        return true;
    };
    let d = first.dim();
    if ops.iter().any(|o| o.dim() != d) {
        return false;
    }
    let mut all: Vec<Operator<T>> = Vec::with_capacity(ops.len() + 1);
    if include_identity {
        all.push(Operator::identity(d));
    }
    all.extend(ops.iter().cloned());
    if all.len() > d * d {
        return false;
    }
    let gram = Operator::from_fn(all.len(), |i, j| all[i].hs_inner(&all[j]));
    let ev = eigvalsh(&gram);
    let (min, max) = (ev[0], ev[ev.len() - 1]);
    max > T::zero() && min > tol.independence_ratio * max
}

/// Pauli matrices and other fixed operators used throughout tests and presets.
pub mod pauli {
    use super::*;

    pub fn sigma_x<T: Real>() -> Operator<T> {
        Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn sigma_y<T: Real>() -> Operator<T> {
        Operator::from_rows(&[
            vec![czero(), c(T::zero(), -T::one())],
            vec![c(T::zero(), T::one()), czero()],
        ])
        .unwrap()
    }

    pub fn sigma_z<T: Real>() -> Operator<T> {
        Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }
}

/// Orthonormal traceless basis of the d^2 - 1 generalized Gell-Mann matrices,
/// normalized to Tr(F_i^dagger F_j) = delta_ij.
///
/// Order: symmetric (j<k), antisymmetric (j<k), then diagonal l = 1..d-1.
pub fn gell_mann_basis<T: Real>(d: usize) -> Vec<Operator<T>> {
    let mut out = Vec::with_capacity(d * d - 1);
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Operator::zeros(d);
            m[(j, k)] = cr(inv_sqrt2);
            m[(k, j)] = cr(inv_sqrt2);
            out.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Operator::zeros(d);
            m[(j, k)] = c(T::zero(), -inv_sqrt2);
            m[(k, j)] = c(T::zero(), inv_sqrt2);
            out.push(m);
        }
    }
    for l in 1..d {
        let lf = T::lit(l as f64);
        let norm = (lf * (lf + T::one())).sqrt().recip();
        let mut m = Operator::zeros(d);
        for i in 0..l {
            m[(i, i)] = cr(norm);
        }
        m[(l, l)] = cr(-lf * norm);
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests;
