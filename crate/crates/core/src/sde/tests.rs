use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use super::*;
use crate::hilbert::{expectation, pauli, trace_distance};
use crate::lindblad::LindbladModel;
use crate::scalar::c;
use crate::unraveling::UnitaryFreedom;

type Sv = StateVector<f64>;
type Op = Operator<f64>;

fn dephasing(freedom: UnitaryFreedom<f64>) -> Unraveling<f64> {
    let model = LindbladModel::new(Op::zeros(2), vec![pauli::sigma_z()]).unwrap();
    Unraveling::new(model, freedom).unwrap()
}

fn plus() -> Sv {
    Sv::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
}

fn variance_z(psi: &Sv) -> f64 {
    let z = expectation(psi, &pauli::sigma_z()).unwrap().re;
    1.0 - z * z
}

#[test]
fn increments_are_deterministic() {
    let mut a = WienerStream::new(7, 3);
    let mut b = WienerStream::new(7, 3);
    let mut x = [0.0f64; 5];
    let mut y = [0.0f64; 5];
    for _ in 0..100 {
        a.fill(&mut x, 0.01, 1);
        b.fill(&mut y, 0.01, 1);
        assert_eq!(x, y);
    }
    let mut other = WienerStream::new(7, 4);
    other.fill(&mut y, 0.01, 1);
    assert_ne!(x, y);

    let mut r1 = ChaCha8Rng::seed_from_u64(5);
    let mut r2 = ChaCha8Rng::seed_from_u64(5);
    assert_eq!(wiener_increments::<f64, _>(&mut r1, 4, 0.1), wiener_increments::<f64, _>(&mut r2, 4, 0.1));
    assert!(wiener_increments::<f64, _>(&mut r1, 0, 0.1).is_empty());
}

#[test]
fn increments_match_gaussian_moments() {
    let dt = 0.01;
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let xs = wiener_increments::<f64, _>(&mut rng, n, dt);
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt(), "mean {mean}");
    assert!((var / dt - 1.0).abs() < 0.01, "var {var}");
}

#[test]
fn substeps_share_the_fine_brownian_path() {
    let mut coarse = WienerStream::new(11, 2);
    let mut fine = WienerStream::new(11, 2);
    let (mut c2, mut f1, mut f2) = ([0.0f64; 3], [0.0f64; 3], [0.0f64; 3]);
    for _ in 0..50 {
        coarse.fill(&mut c2, 0.02, 2);
        fine.fill(&mut f1, 0.01, 1);
        fine.fill(&mut f2, 0.01, 1);
        for k in 0..3 {
            assert_eq!(c2[k], f1[k] + f2[k]);
        }
    }
}

#[test]
fn step_fixed_point_and_zero_noise() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let up = Sv::basis(2, 0);
    assert_eq!(step(&u, &up, 0.01, &[0.3], true).unwrap(), up);

    let next = step(&u, &plus(), 1e-3, &[0.0], false).unwrap();
    assert!(next.max_abs_diff(&plus().scaled(c(1.0 - 5e-4, 0.0))) < 1e-16);
    let renorm = step(&u, &plus(), 1e-3, &[0.0], true).unwrap();
    assert!(renorm.max_abs_diff(&plus()) < 1e-15);

    assert!(step(&u, &plus(), 1e-3, &[0.0, 0.0], true).is_err());
    assert!(step(&u, &Sv::basis(3, 0), 1e-3, &[0.0], true).is_err());
}

#[test]
fn linear_unravelling_norm_error_is_second_order() {
    let u = dephasing(UnitaryFreedom::ScalarPhase(FRAC_PI_2));
    let psi = Sv::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    for dt in [1e-2f64, 1e-3, 1e-4] {
        // dW^2 = dt removes the Ito fluctuation, leaving the deterministic remainder
        for dw in [dt.sqrt(), -dt.sqrt()] {
            let next = step(&u, &psi, dt, &[dw], false).unwrap();
            let dev = (next.norm_sqr() - 1.0).abs();
            assert!(dev <= 0.25 * dt * dt * (1.0 + 1e-6) + 1e-15, "dt={dt} dev={dev:e}");
        }
    }
    // signed mean over random increments is also O(dt^2)
    let dt = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;
    let mean = (0..n)
        .map(|_| {
            let dw = wiener_increments::<f64, _>(&mut rng, 1, dt);
            step(&u, &psi, dt, &dw, false).unwrap().norm_sqr() - 1.0
        })
        .sum::<f64>()
        / n as f64;
    let se = dt * 2f64.sqrt() / (n as f64).sqrt();
    assert!((mean - 0.25 * dt * dt).abs() < 4.0 * se, "mean {mean:e}");
}

#[test]
fn blow_up_is_reported() {
    let u = dephasing(UnitaryFreedom::standard(1));
    // B = (1, -1)/sqrt 2, A = -psi/2: with dt = 2, dW = 0 the state vanishes
    let err = step(&u, &plus(), 2.0, &[0.0], false).unwrap_err();
    assert!(matches!(err, Error::StepBlowUp { step: 0, .. }));
}

#[test]
fn config_validation_and_grid() {
    let mut cfg = IntegrationConfig::new(0.1, 1.0, 0);
    cfg.validate().unwrap();
    assert_eq!(cfg.n_steps(), 10);
    assert_eq!(IntegrationConfig::new(0.3, 1.0, 0).n_steps(), 4);
    cfg.record_stride = 3;
    assert_eq!(cfg.recorded_steps(), vec![0, 3, 6, 9, 10]);
    assert_eq!(cfg.checkpoint_steps(&[0.0, 0.5, 1.0]).unwrap(), vec![0, 5, 10]);
    assert!(cfg.checkpoint_steps(&[0.55]).is_err());
    assert!(cfg.checkpoint_steps(&[1.1]).is_err());
    assert!(cfg.checkpoint_steps(&[-0.1]).is_err());
    for bad in [
        IntegrationConfig::new(0.0, 1.0, 0),
        IntegrationConfig::new(2.0, 1.0, 0),
        IntegrationConfig::new(1e-9, 1.0, 0),
        IntegrationConfig { record_stride: 0, ..IntegrationConfig::new(0.1, 1.0, 0) },
        IntegrationConfig { noise_substeps: 0, ..IntegrationConfig::new(0.1, 1.0, 0) },
    ] {
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
    }
}

#[test]
fn trajectory_without_noise_operators_is_constant() {
    let model = LindbladModel::new(Op::zeros(2), vec![]).unwrap();
    let u = Unraveling::new(model, UnitaryFreedom::standard(0)).unwrap();
    let cfg = IntegrationConfig::new(0.01, 1.0, 3);
    let traj = simulate_trajectory(&u, &plus(), &cfg).unwrap();
    assert_eq!(traj.times.len(), 101);
    assert_eq!(traj.times[0], 0.0);
    assert!(traj.states.iter().all(|s| *s == plus()));
    assert_eq!(traj.norm_drift_max, 0.0);
}

#[test]
fn trajectories_are_reproducible_and_unit() {
    let u = dephasing(UnitaryFreedom::complex_noise(1));
    let mut cfg = IntegrationConfig::new(1e-3, 1.0, 42);
    cfg.record_stride = 10;
    let a = simulate_trajectory(&u, &plus(), &cfg).unwrap();
    let b = simulate_trajectory(&u, &plus(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.times.len(), 101);
    assert!(a.times.windows(2).all(|w| w[1] > w[0]));
    assert!(a.states.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-12));
    cfg.seed = 43;
    assert_ne!(simulate_trajectory(&u, &plus(), &cfg).unwrap().states, a.states);
}

#[test]
fn standard_collapse_localizes_nearly_every_seed() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let mut cfg = IntegrationConfig::new(1e-3, 10.0, 0);
    cfg.record_stride = 10_000;
    let seeds = 200;
    let collapsed = (0..seeds)
        .filter(|&s| {
            cfg.seed = s;
            let t = simulate_trajectory(&u, &plus(), &cfg).unwrap();
            variance_z(t.states.last().unwrap()) < 1e-3
        })
        .count();
    assert!(collapsed as f64 >= 0.99 * seeds as f64, "{collapsed}/{seeds}");
}

#[test]
fn single_member_ensemble_is_the_trajectory() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let mut cfg = IntegrationConfig::new(1e-2, 1.0, 9);
    cfg.record_stride = 25;
    let traj = simulate_trajectory(&u, &plus(), &cfg).unwrap();
    let ens = simulate_ensemble(&u, &plus(), &cfg, 1).unwrap();
    assert_eq!(ens.times, traj.times);
    for (rho, psi) in ens.rho_hat.iter().zip(&traj.states) {
        let p = crate::hilbert::outer(psi, psi).unwrap();
        assert_eq!(*rho.as_operator(), p);
    }
    assert_eq!(ens.final_states, vec![traj.states.last().unwrap().clone()]);
    assert_eq!(ens.stderr, vec![0.0; ens.times.len()]);
}

#[test]
fn ensemble_matches_decoherence_oracle() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let cfg = IntegrationConfig::new(1e-3, 1.0, 2024);
    let ens = simulate_ensemble_at(&u, &plus(), &cfg, 10_000, &[1.0], Execution::Parallel).unwrap();
    let off = 0.5 * (-2.0f64).exp();
    let exact = DensityMatrix::new_unchecked(Op::from_real_rows(&[&[0.5, off], &[off, 0.5]]).unwrap());
    let dist = trace_distance(&ens.rho_hat[0], &exact).unwrap();
    assert!(dist <= 0.03, "distance {dist}");
    assert!(ens.stderr[0] > 0.0 && ens.stderr[0] < 0.02);
}

#[test]
fn execution_mode_does_not_change_bits() {
    let u = dephasing(UnitaryFreedom::complex_noise(1));
    let mut cfg = IntegrationConfig::new(1e-2, 1.0, 5);
    cfg.record_stride = 10;
    let steps = cfg.recorded_steps();
    let serial = simulate_ensemble_with(&u, &plus(), &cfg, 300, &steps, Execution::Serial).unwrap();
    let global = simulate_ensemble_with(&u, &plus(), &cfg, 300, &steps, Execution::Parallel).unwrap();
    let three = simulate_ensemble_with(&u, &plus(), &cfg, 300, &steps, Execution::Threads(3)).unwrap();
    assert_eq!(serial, global);
    assert_eq!(serial, three);
}

#[test]
fn projector_mean_is_a_martingale() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let psi0 = Sv::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    let mut cfg = IntegrationConfig::new(1e-3, 2.0, 77);
    cfg.record_stride = 200;
    let m = 4000;
    let ens = simulate_ensemble(&u, &psi0, &cfg, m).unwrap();
    for rho in &ens.rho_hat {
        let p_up = rho.as_operator()[(0, 0)].re;
        assert!((p_up - 0.3).abs() <= 3.0 / (m as f64).sqrt(), "{p_up}");
    }
}

#[test]
fn unnormalized_initial_state_rejected() {
    let u = dephasing(UnitaryFreedom::standard(1));
    let cfg = IntegrationConfig::new(1e-2, 1.0, 0);
    let psi = Sv::from_real(&[1.0, 1.0]).unwrap();
    assert!(matches!(simulate_trajectory(&u, &psi, &cfg), Err(Error::NotNormalized { .. })));
    assert!(simulate_ensemble(&u, &plus(), &cfg, 0).is_err());
}

#[test]
fn f32_trajectory_tracks_f64() {
    let model = LindbladModel::<f32>::new(Operator::zeros(2), vec![pauli::sigma_z()]).unwrap();
    let u32 = Unraveling::new(model, UnitaryFreedom::standard(1)).unwrap();
    let psi = StateVector::<f32>::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let cfg = IntegrationConfig::new(1e-2, 0.5, 8);
    let a = simulate_trajectory(&u32, &psi, &cfg).unwrap();
    let b = simulate_trajectory(&dephasing(UnitaryFreedom::standard(1)), &plus(), &cfg).unwrap();
    let (fa, fb) = (a.states.last().unwrap(), b.states.last().unwrap());
    for k in 0..2 {
        assert!((fa[k].re as f64 - fb[k].re).abs() < 1e-4);
    }
}
