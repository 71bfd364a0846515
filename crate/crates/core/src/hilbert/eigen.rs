//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Jacobi is slow for large matrices but unconditionally stable and accurate
//! to working precision for the small Hermitian matrices used here (Gram
//! matrices, Choi matrices, Kossakowski matrices, d <= 64 operators).

use crate::scalar::{cr, czero, Real, C};

use super::Operator;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with unit eigenvectors as matching columns.
///
/// Each eigenvector's phase is fixed so that its largest-modulus entry (the
/// first one, on ties) is real and positive.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Operator<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.column(k)
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn eigh<T: Real>(m: &Operator<T>) -> HermitianEigen<T> {
    let n = m.dim();
    let mut a = m.clone();
    // symmetrize so round-off in the input does not stall convergence
    for i in 0..n {
        a[(i, i)] = cr(a[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * cr(T::lit(0.5));
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = Operator::identity(n);
    jacobi(&mut a, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.partial_cmp(&a[(y, y)].re).unwrap());
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = Operator::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        let phase = canonical_phase(&v.column(k));
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)] * phase;
        }
    }
    HermitianEigen { values, vectors }
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn eigvalsh<T: Real>(m: &Operator<T>) -> Vec<T> {
    eigh(m).values
}

fn canonical_phase<T: Real>(col: &[C<T>]) -> C<T> {
    let max = col.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let slack = max * T::lit(1e-9);
    match col.iter().find(|z| z.norm() >= max - slack) {
        Some(z) if z.norm() > T::zero() => z.conj() / cr(z.norm()),
        _ => cr(T::one()),
    }
}

fn off_diagonal_norm<T: Real>(a: &Operator<T>) -> T {
    let n = a.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi<T: Real>(a: &mut Operator<T>, v: &mut Operator<T>) {
    let n = a.dim();
    if n < 2 {
        return;
    }
    let scale = a.frobenius_norm();
    if scale == T::zero() {
        return;
    }
    let target = scale * T::epsilon();
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(a, v, p, q, target);
            }
        }
    }
}

/// Zeroes `a[p][q]` with the unitary G = diag(1, e^{-i phi}) R(theta) acting
/// on the (p, q) plane: `a <- G^dagger a G`, `v <- v G`.
fn rotate<T: Real>(a: &mut Operator<T>, v: &mut Operator<T>, p: usize, q: usize, target: T) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r <= target * T::lit(1e-3) {
        a[(p, q)] = czero();
        a[(q, p)] = czero();
        return;
    }
    let n = a.dim();
    let phase = apq / cr(r); // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * r);
    let t = {
        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let cos = (t * t + T::one()).sqrt().recip();
    let sin = t * cos;
    let e_minus = phase.conj();

    // G entries
    let g_pp = cr(cos);
    let g_pq = cr(sin);
    let g_qp = e_minus * cr(-sin);
    let g_qq = e_minus * cr(cos);

    // a <- a G (columns p, q)
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * g_pp + aiq * g_qp;
        a[(i, q)] = aip * g_pq + aiq * g_qq;
    }
    // a <- G^dagger a (rows p, q)
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = g_pp.conj() * apj + g_qp.conj() * aqj;
        a[(q, j)] = g_pq.conj() * apj + g_qq.conj() * aqj;
    }
    a[(p, q)] = czero();
    a[(q, p)] = czero();
    a[(p, p)] = cr(a[(p, p)].re);
    a[(q, q)] = cr(a[(q, q)].re);

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * g_pp + viq * g_qp;
        v[(i, q)] = vip * g_pq + viq * g_qq;
    }
}
