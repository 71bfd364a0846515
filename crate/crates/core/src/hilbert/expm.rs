//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection and the theta thresholds follow Higham (2005), "The
//! Scaling and Squaring Method for the Matrix Exponential Revisited". The
//! thresholds are the double-precision ones; they are conservative for `f32`.

use crate::scalar::{cr, czero, Real, C};

use super::Operator;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm<T: Real>(a: &Operator<T>) -> T {
    let n = a.dim();
    (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

fn lin_comb<T: Real>(terms: &[(f64, &Operator<T>)], n: usize) -> Operator<T> {
    let mut out = Operator::zeros(n);
    for &(coef, m) in terms {
        out.axpy(cr(T::lit(coef)), m);
    }
    out
}

/// Odd and even parts (U, V) of the degree-m Padé numerator for m <= 9.
fn pade_low<T: Real>(a: &Operator<T>, b: &[f64]) -> (Operator<T>, Operator<T>) {
    let n = a.dim();
    let id = Operator::identity(n);
    let a2 = a.matmul(a);
    // powers[k] = A^(2k)
    let mut powers = vec![id, a2.clone()];
    while powers.len() * 2 < b.len() {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = Operator::zeros(n);
    let mut v = Operator::zeros(n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u_inner.axpy(cr(T::lit(b[2 * k + 1])), p);
        }
        if 2 * k < b.len() {
            v.axpy(cr(T::lit(b[2 * k])), p);
        }
    }
    (a.matmul(&u_inner), v)
}

fn pade13<T: Real>(a: &Operator<T>) -> (Operator<T>, Operator<T>) {
    let n = a.dim();
    let b = &B13;
    let id = Operator::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_hi = a6.matmul(&lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n));
    let u_lo = lin_comb(
        &[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)],
        n,
    );
    let u = a.matmul(&(&u_hi + &u_lo));
    let v_hi = a6.matmul(&lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n));
    let v_lo = lin_comb(
        &[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)],
        n,
    );
    (u, &v_hi + &v_lo)
}

/// exp(A) for a square complex matrix.
pub fn expm<T: Real>(a: &Operator<T>) -> Operator<T> {
    let norm = one_norm(a).as_f64();
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a.scale_real(T::lit(2f64.powi(-s)));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p).expect("Pade denominator is nonsingular for admissible norms");
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// Solves `A X = B` by LU with partial pivoting; `None` if `A` is singular.
pub fn solve<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Option<Operator<T>> {
    let n = a.dim();
    assert_eq!(n, b.dim(), "solve dimension mismatch");
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, T::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if pmax == T::zero() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f: C<T> = lu[(i, k)] / pivot;
            if f == czero() {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            for j in 0..n {
                let t = x[(k, j)];
                x[(i, j)] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..n {
            let mut s = x[(k, j)];
            for m in (k + 1)..n {
                s -= lu[(k, m)] * x[(m, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::pauli;
    use crate::scalar::c;

    /// Truncated Taylor series with many terms; an independent reference for
    /// moderate norms.
    fn taylor(a: &Operator<f64>, terms: usize) -> Operator<f64> {
        let n = a.dim();
        let mut sum = Operator::identity(n);
        let mut term = Operator::identity(n);
        for k in 1..terms {
            term = term.matmul(a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        let z = Operator::<f64>::zeros(3);
        assert_eq!(expm(&z), Operator::identity(3));
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let d = Operator::<f64>::diagonal(&[cr(-2.0), cr(0.5), c(0.0, 1.0)]);
        let e = expm(&d);
        assert!((e[(0, 0)].re - (-2.0f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)].re - 0.5f64.exp()).abs() < 1e-14);
        assert!((e[(2, 2)] - c(1f64.cos(), 1f64.sin())).norm() < 1e-15);
    }

    #[test]
    fn rotation_generator() {
        // exp(-i theta sigma_x) = cos(theta) 1 - i sin(theta) sigma_x
        for theta in [0.001, 0.3, 1.7, 12.0] {
            let a = pauli::sigma_x::<f64>().scale(c(0.0, -theta));
            let expected = &Operator::identity(2).scale_real(theta.cos())
                + &pauli::sigma_x().scale(c(0.0, -theta.sin()));
            assert!(expm(&a).max_abs_diff(&expected) < 1e-13, "theta={theta}");
        }
    }

    #[test]
    fn agrees_with_taylor_across_degrees() {
        let base = Operator::<f64>::from_rows(&[
            vec![c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.4)],
            vec![c(0.5, -0.1), c(-0.2, 0.0), c(0.1, 0.1)],
            vec![c(0.0, 0.0), c(0.3, 0.3), c(-0.4, 0.2)],
        ])
        .unwrap();
        for s in [0.01, 0.2, 0.8, 2.0, 5.0, 9.0] {
            let a = base.scale_real(s);
            let reference = taylor(&a, 80);
            let err = expm(&a).max_abs_diff(&reference) / reference.max_abs();
            assert!(err < 1e-13, "s={s} err={err}");
        }
    }

    #[test]
    fn solve_recovers_identity() {
        let a = Operator::<f64>::from_rows(&[
            vec![c(0.0, 1.0), c(2.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, -1.0)],
        ])
        .unwrap();
        let x = solve(&a, &a).unwrap();
        assert!(x.max_abs_diff(&Operator::identity(2)) < 1e-15);
        assert!(solve(&Operator::<f64>::zeros(2), &a).is_none());
    }
}
