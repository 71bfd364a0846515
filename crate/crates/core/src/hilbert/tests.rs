use proptest::prelude::*;

use super::*;
use crate::scalar::c;

type Op = Operator<f64>;
type Sv = StateVector<f64>;

fn s2() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

#[test]
fn dagger_examples() {
    let id = Op::identity(2);
    assert_eq!(dagger(&id), id);

    let raise = Op::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
    let lower = Op::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
    assert_eq!(dagger(&raise), lower);

    let m = Op::from_rows(&[vec![c(0.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let expected =
        Op::from_rows(&[vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, -1.0), c(0.0, 0.0)]]).unwrap();
    assert_eq!(dagger(&m), expected);
}

#[test]
fn expectation_examples() {
    let z = pauli::sigma_z::<f64>();
    let up = Sv::from_real(&[1.0, 0.0]).unwrap();
    assert_eq!(expectation(&up, &z).unwrap(), c(1.0, 0.0));

    let plus = Sv::from_real(&[s2(), s2()]).unwrap();
    assert!(expectation(&plus, &z).unwrap().norm() < 1e-15);

    // 0.3 - 0.7
    let psi = Sv::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    assert!((expectation(&psi, &z).unwrap() - c(-0.4, 0.0)).norm() < 1e-15);

    let three = Sv::from_real(&[1.0, 0.0, 0.0]).unwrap();
    assert!(matches!(
        expectation(&three, &z),
        Err(Error::DimensionMismatch { expected: 2, found: 3 })
    ));
}

#[test]
fn outer_examples() {
    let up = Sv::from_real(&[1.0, 0.0]).unwrap();
    let down = Sv::from_real(&[0.0, 1.0]).unwrap();
    assert_eq!(
        outer(&up, &up).unwrap(),
        Op::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap()
    );
    assert_eq!(
        outer(&up, &down).unwrap(),
        Op::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap()
    );
    let plus = Sv::from_real(&[s2(), s2()]).unwrap();
    let half = Op::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
    assert!(outer(&plus, &plus).unwrap().max_abs_diff(&half) < 1e-15);
    assert!(outer(&plus, &Sv::basis(3, 0)).is_err());
}

#[test]
fn trace_distance_examples() {
    let tol = Tolerances::default();
    let a = DensityMatrix::new(Op::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap(), &tol).unwrap();
    let b = DensityMatrix::new(Op::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap(), &tol).unwrap();
    let mixed = DensityMatrix::maximally_mixed(2);
    assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
    assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    assert!((trace_distance(&a, &mixed).unwrap() - 0.5).abs() < 1e-15);
    assert!(trace_distance(&a, &DensityMatrix::maximally_mixed(3)).is_err());
}

#[test]
fn linear_independence_examples() {
    let (x, y, z) = (pauli::sigma_x::<f64>(), pauli::sigma_y(), pauli::sigma_z());
    assert!(check_linear_independence(std::slice::from_ref(&z), true));
    assert!(!check_linear_independence(&[z.clone(), z.scale_real(2.0)], false));
    assert!(check_linear_independence(&[x, y, z.clone()], true));
    // identity itself is dependent on the prepended identity
    assert!(!check_linear_independence(&[Op::identity(2)], true));
    // diag(1, 0) has a trace part but is still independent of 1
    let p = Op::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
    assert!(check_linear_independence(&[p], true));
}

#[test]
fn density_matrix_rejections_report_violation() {
    let tol = Tolerances::default();
    let non_herm = Op::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
    assert!(matches!(DensityMatrix::new(non_herm, &tol), Err(Error::InvalidDensity { .. })));
    let bad_trace = Op::from_real_rows(&[&[0.6, 0.0], &[0.0, 0.6]]).unwrap();
    assert!(DensityMatrix::new(bad_trace, &tol).is_err());
    let negative = Op::from_real_rows(&[&[1.2, 0.0], &[0.0, -0.2]]).unwrap();
    let diag = DensityMatrix::new_unchecked(negative.clone()).diagnostics();
    assert!((diag.min_eigenvalue + 0.2).abs() < 1e-15);
    assert!(DensityMatrix::new(negative, &tol).is_err());
}

#[test]
fn gell_mann_is_orthonormal_and_traceless() {
    for d in 2..=4 {
        let basis = gell_mann_basis::<f64>(d);
        assert_eq!(basis.len(), d * d - 1);
        for (i, fi) in basis.iter().enumerate() {
            assert!(fi.trace().norm() < 1e-14);
            assert!(fi.is_hermitian(1e-15));
            for (j, fj) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((fi.hs_inner(fj) - c(expected, 0.0)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn vectorization_is_column_major() {
    let m = Op::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
    let v = m.vectorize();
    assert_eq!(v.iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 3.0, 2.0, 4.0]);
    assert_eq!(Op::unvectorize(&v).unwrap(), m);
}

#[test]
fn serde_pairs() {
    let m = pauli::sigma_y::<f64>();
    let json = serde_json::to_string(&m).unwrap();
    assert_eq!(json, "[[[0.0,0.0],[0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
    let back: Op = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
    assert!(serde_json::from_str::<Op>("[[[1,0]],[[0,0]]]").is_err());
}

#[test]
fn f32_operators() {
    let z = pauli::sigma_z::<f32>();
    let psi = StateVector::<f32>::from_real(&[0.6, 0.8]).unwrap();
    let e = expectation(&psi, &z).unwrap();
    assert!((e.re - (0.36 - 0.64)).abs() < 1e-6);
}

fn arb_matrix(d: usize) -> impl Strategy<Value = Op> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
        .prop_map(move |v| Op::new(d, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

fn arb_state(d: usize) -> impl Strategy<Value = Sv> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| Sv::from_unnormalized(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

fn arb_density(d: usize) -> impl Strategy<Value = DensityMatrix<f64>> {
    arb_matrix(d).prop_map(move |a| {
        let p = a.matmul(&a.dagger());
        let tr = p.trace().re;
        DensityMatrix::new_unchecked(p.scale_real(1.0 / tr))
    })
}

proptest! {
    #[test]
    fn dagger_is_involution(m in arb_matrix(3)) {
        prop_assert_eq!(dagger(&dagger(&m)), m);
    }

    #[test]
    fn hermitian_expectation_is_real(m in arb_matrix(3), psi in arb_state(3)) {
        let h = &m + &m.dagger();
        prop_assert!(expectation(&psi, &h).unwrap().im.abs() <= 1e-12);
    }

    #[test]
    fn outer_trace_and_idempotence(psi in arb_state(4)) {
        let p = outer(&psi, &psi).unwrap();
        prop_assert!((p.trace().re - psi.norm_sqr()).abs() <= 1e-12);
        prop_assert!(p.matmul(&p).max_abs_diff(&p) <= 1e-10);
    }

    #[test]
    fn trace_distance_triangle(a in arb_density(3), b in arb_density(3), cc in arb_density(3)) {
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &cc).unwrap();
        let ac = trace_distance(&a, &cc).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() <= 1e-12);
    }
}
