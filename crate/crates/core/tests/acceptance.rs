//! Acceptance criteria 1 to 10. Each test prints one `PASS`/`FAIL` line and
//! then asserts, so `cargo test --test acceptance -- --nocapture` shows the
//! whole scorecard.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unravel::hilbert::{pauli, trace_distance, DensityMatrix, Operator, StateVector};
use unravel::lindblad::{
    choi_min_eigenvalue, choi_of_generator, gks_to_lindblad, lindblad_rhs, propagate_exact, GksForm, LindbladModel,
};
use unravel::observables::{born_statistics, diffusion_matrix, variance_drift_regression, DEFAULT_BORN_TOL};
use unravel::output::{ensemble_table, Stamp};
use unravel::sampling::{
    random_hermitian, random_hermitian_model, random_model, random_orthogonal, random_psd, random_state, random_unitary,
};
use unravel::scenario::ScenarioFile;
use unravel::sde::{simulate_ensemble_at, Execution, IntegrationConfig};
use unravel::unraveling::{UnitaryFreedom, Unraveling};
use unravel::verify::check_unraveling_equivalence;

type Op = Operator<f64>;
type Sv = StateVector<f64>;

fn verdict(id: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} AC{id} {title}: {detail}");
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn zero2() -> Op {
    Op::zeros(2)
}

fn sz() -> Op {
    pauli::sigma_z()
}

fn plus() -> Sv {
    Sv::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
}

fn dephasing() -> LindbladModel<f64> {
    LindbladModel::new(zero2(), vec![sz()]).unwrap()
}

fn standard(model: &LindbladModel<f64>) -> Unraveling<f64> {
    Unraveling::new(model.clone(), UnitaryFreedom::standard(model.n_ops())).unwrap()
}

#[test]
fn ac01_generator_identity() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=3);
        let model = random_model::<f64, _>(&mut rng, d, n);
        let freedom = match i % 4 {
            0 => UnitaryFreedom::standard(n),
            1 => UnitaryFreedom::complex_noise(n),
            2 => UnitaryFreedom::ConstantUnitary(random_unitary(&mut rng, n)),
            // padded: N = n + 1 noises
            _ => UnitaryFreedom::ConstantUnitary(random_unitary(&mut rng, n + 1)),
        };
        let u = Unraveling::new(model.clone(), freedom).unwrap();
        let psi: Sv = random_state(&mut rng, d);
        let lhs = u.one_step_generator(&psi).unwrap();
        let rhs = lindblad_rhs(&model, DensityMatrix::pure(&psi).as_operator()).unwrap();
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    // scalar phases on one operator
    for k in 0..20 {
        let model = random_model::<f64, _>(&mut rng, 3, 1);
        let u = Unraveling::new(model.clone(), UnitaryFreedom::ScalarPhase(k as f64 * 0.3)).unwrap();
        let psi: Sv = random_state(&mut rng, 3);
        let rhs = lindblad_rhs(&model, DensityMatrix::pure(&psi).as_operator()).unwrap();
        worst = worst.max(u.one_step_generator(&psi).unwrap().max_abs_diff(&rhs));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "generator identity",
        worst <= 1e-10 && secs < 10.0,
        format!("max entry deviation {worst:.3e} (limit 1e-10) over 1020 cases in {secs:.2}s (limit 10s)"),
    );
}

#[test]
fn ac02_decoherence_oracle() {
    let model = dephasing();
    let rho0 = DensityMatrix::pure(&plus());
    let mut exact_err: f64 = 0.0;
    for t in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let rho = propagate_exact(&model, &rho0, t).unwrap();
        let r01 = rho[(0, 1)];
        exact_err = exact_err.max((r01.re - 0.5 * (-2.0 * t).exp()).abs()).max(r01.im.abs());
    }
    let start = std::time::Instant::now();
    let cfg = IntegrationConfig::new(1e-3, 1.0, 2024);
    let est = simulate_ensemble_at(&standard(&model), &plus(), &cfg, 10_000, &[0.5, 1.0], Execution::default()).unwrap();
    let mut dists = Vec::new();
    for (t, rho_hat) in est.times.iter().zip(&est.rho_hat) {
        let exact = propagate_exact(&model, &rho0, *t).unwrap();
        dists.push(trace_distance(rho_hat, &exact).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let ens_ok = dists.iter().all(|d| *d <= 0.03);
    verdict(
        2,
        "decoherence oracle",
        exact_err <= 1e-10 && ens_ok && secs < 120.0,
        format!(
            "exact vs analytic {exact_err:.3e} (limit 1e-10); ensemble trace distance at t=0.5,1: {:.4}, {:.4} (limit 0.03); {secs:.1}s",
            dists[0], dists[1]
        ),
    );
}

#[test]
fn ac03_unravelling_equivalence() {
    let model = dephasing();
    let members = vec![
        standard(&model),
        Unraveling::new(model.clone(), UnitaryFreedom::complex_noise(1)).unwrap(),
        Unraveling::new(model.clone(), UnitaryFreedom::linear_potential(1)).unwrap(),
    ];
    let cfg = IntegrationConfig::new(1e-3, 1.0, 31);
    let report = check_unraveling_equivalence(&members, &plus(), &cfg, 10_000, 1.0, Execution::default()).unwrap();
    let worst = report.values.iter().copied().fold(0.0, f64::max);

    // collapse at t = 10: standard collapses, linear-potential does not
    let long = IntegrationConfig::new(1e-3, 10.0, 32);
    let mut unclassified = Vec::new();
    for u in [&members[0], &members[2]] {
        let est = simulate_ensemble_at(u, &plus(), &long, 10_000, &[10.0], Execution::default()).unwrap();
        let born = born_statistics(&est.final_states, &sz(), &plus(), DEFAULT_BORN_TOL).unwrap();
        unclassified.push(born.unclassified_fraction);
    }
    let pass = worst <= 0.05 && unclassified[0] < 0.01 && unclassified[1] > 0.9;
    verdict(
        3,
        "unravelling equivalence",
        pass,
        format!(
            "max pairwise/exact trace distance {worst:.4} (limit 0.05); unclassified at t=10: standard {:.4} (< 0.01), linear-potential {:.4} (> 0.9)",
            unclassified[0], unclassified[1]
        ),
    );
}

#[test]
fn ac04_born_rule() {
    let model = dephasing();
    let psi0 = Sv::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    let m = 10_000;
    let cfg = IntegrationConfig::new(1e-3, 10.0, 44);
    let checkpoints = [0.0, 1.0, 2.5, 5.0, 7.5, 10.0];
    let est = simulate_ensemble_at(&standard(&model), &psi0, &cfg, m, &checkpoints, Execution::default()).unwrap();
    // P_+ projects on the first basis vector
    let martingale = est
        .rho_hat
        .iter()
        .map(|r| (r[(0, 0)].re - 0.3).abs())
        .fold(0.0, f64::max);
    let born = born_statistics(&est.final_states, &sz(), &psi0, DEFAULT_BORN_TOL).unwrap();
    let plus_sector = born.outcomes.iter().find(|o| o.eigenvalue > 0.0).unwrap();
    let limit = 3.0 * (0.21f64 / m as f64).sqrt();
    let freq_err = (plus_sector.frequency - 0.3).abs();
    verdict(
        4,
        "Born rule",
        freq_err <= limit && martingale <= 0.02,
        format!(
            "+1 frequency {:.4} (|diff| {freq_err:.4}, limit {limit:.4}); max |E<P+> - 0.3| over checkpoints {martingale:.4} (limit 0.02); unclassified {}",
            plus_sector.frequency, born.unclassified
        ),
    );
}

#[test]
fn ac05_variance_drift_law() {
    let model = dephasing();
    let cfg = IntegrationConfig::new(1e-3, 1.0, 55);
    let m = 10_000;
    let mut slopes = Vec::new();
    for f in [0.0, FRAC_PI_4] {
        let u = Unraveling::new(model.clone(), UnitaryFreedom::ScalarPhase(f)).unwrap();
        let r = variance_drift_regression(&u, &sz(), f, &plus(), &cfg, m, Execution::default()).unwrap();
        slopes.push((r.slope.unwrap(), r.slope_stderr.unwrap()));
    }
    let u = Unraveling::new(model.clone(), UnitaryFreedom::ScalarPhase(FRAC_PI_2)).unwrap();
    let flat = variance_drift_regression(&u, &sz(), FRAC_PI_2, &plus(), &cfg, m, Execution::default()).unwrap();
    let pass = slopes.iter().all(|(s, _)| (s - 1.0).abs() <= 0.1) && flat.mean_rate.abs() <= 0.02;
    verdict(
        5,
        "variance drift law",
        pass,
        format!(
            "slope f=0 {:.4} (se {:.4}), f=pi/4 {:.4} (se {:.4}) (target 1 +- 0.1); f=pi/2 mean dV/dt {:.3e} (limit 0.02)",
            slopes[0].0, slopes[0].1, slopes[1].0, slopes[1].1, flat.mean_rate
        ),
    );
}

#[test]
fn ac06_complete_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut floor = f64::INFINITY;
    for i in 0..50 {
        let d = 2 + i % 2;
        let h: Op = random_hermitian(&mut rng, d);
        let c: Op = random_psd(&mut rng, d * d - 1);
        let g = GksForm::with_gell_mann(h, c).unwrap();
        let gen = g.liouvillian();
        for t in [0.1, 1.0] {
            floor = floor.min(choi_min_eigenvalue(&choi_of_generator(&gen, t).unwrap()));
        }
    }
    let file = ScenarioFile::from_toml_str(include_str!("../scenarios/gks.toml")).unwrap();
    let g = file.build::<f64>().unwrap().gks.unwrap();
    let non_cp = choi_min_eigenvalue(&choi_of_generator(&g.liouvillian(), 0.05).unwrap());
    let flagged = gks_to_lindblad(&g).unwrap().non_cp;
    verdict(
        6,
        "complete positivity",
        floor >= -1e-10 && non_cp < -1e-6 && flagged,
        format!(
            "min Choi eigenvalue over 50 PSD cases {floor:.3e} (floor -1e-10); diag(1,-0.5) at t=0.05: {non_cp:.3e} (< -1e-6), flagged non-CP: {flagged}"
        ),
    );
}

#[test]
fn ac07_gks_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = 2 + i % 3;
        let h: Op = random_hermitian(&mut rng, d);
        let c: Op = random_hermitian(&mut rng, d * d - 1);
        let g = GksForm::with_gell_mann(h, c).unwrap();
        let diag = gks_to_lindblad(&g).unwrap();
        worst = worst.max(diag.liouvillian().matrix().max_abs_diff(g.liouvillian().matrix()));
        let rho: Op = unravel::sampling::random_density(&mut rng, d);
        worst = worst.max(diag.rhs(&rho).unwrap().max_abs_diff(&g.rhs(&rho).unwrap()));
    }
    verdict(
        7,
        "GKS round trip",
        worst <= 1e-10,
        format!("max deviation of diagonal-form generator {worst:.3e} over 50 Hermitian inputs (limit 1e-10)"),
    );
}

#[test]
fn ac08_diffusion_matrix_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let model = random_hermitian_model::<f64, _>(&mut rng, 3, n);
        let base: Op = random_unitary(&mut rng, n);
        let psi: Sv = random_state(&mut rng, 3);
        let u = Unraveling::new(model.clone(), UnitaryFreedom::ConstantUnitary(base.clone())).unwrap();
        let o: Op = random_orthogonal(&mut rng, n);
        let ou = Unraveling::new(model, UnitaryFreedom::ConstantUnitary(o.matmul(&base))).unwrap();
        let d0 = diffusion_matrix(&u, &psi).unwrap();
        worst = worst.max(d0.max_abs_diff(&diffusion_matrix(&ou, &psi).unwrap()));
    }
    let model = dephasing();
    let d_std = diffusion_matrix(&standard(&model), &plus()).unwrap();
    let d_ii = diffusion_matrix(&Unraveling::new(model, UnitaryFreedom::linear_potential(1)).unwrap(), &plus()).unwrap();
    let gap = d_std.max_abs_diff(&d_ii);
    verdict(
        8,
        "diffusion-matrix invariance",
        worst <= 1e-12 && gap > 1e-3,
        format!("max |D(u) - D(o u)| over 100 orthogonal o {worst:.3e} (limit 1e-12); u = iI changes D by {gap:.3e} (> 1e-3)"),
    );
}

#[test]
fn ac09_reproducibility() {
    let text = include_str!("../scenarios/driven.toml");
    let a = ScenarioFile::from_toml_str(text).unwrap();
    let b = ScenarioFile::from_toml_str(&a.to_toml_string()).unwrap();
    let same_hash = a.config_hash() == b.config_hash();
    let stamp = Stamp {
        config_hash: a.config_hash(),
        seed: a.integration.seed,
    };
    let run = |file: &ScenarioFile, exec: Execution| {
        let s = file.build::<f64>().unwrap();
        let est = simulate_ensemble_at(&s.unraveling, &s.psi0, &file.integration, 1000, &file.checkpoints, exec).unwrap();
        let mut csv = Vec::new();
        ensemble_table(&est).write_csv(&mut csv, &stamp).unwrap();
        let finals: Vec<u64> = est
            .final_states
            .iter()
            .flat_map(|p| p.amplitudes().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
            .collect();
        (csv, finals)
    };
    let serial1 = run(&a, Execution::Serial);
    let serial2 = run(&b, Execution::Serial);
    let parallel = run(&a, Execution::Parallel);
    let threads = run(&b, Execution::Threads(3));
    let identical = serial1 == serial2 && serial1 == parallel && serial1 == threads;
    verdict(
        9,
        "reproducibility",
        same_hash && identical,
        format!("hash stable across reparse: {same_hash}; serial x2, parallel, 3 threads bitwise identical: {identical}"),
    );
}

#[test]
fn ac10_order_consistency() {
    // Norm drift before renormalization, standard collapse unravelling.
    let model = dephasing();
    let u = standard(&model);
    let mut drift = Vec::new();
    for dt in [1e-3, 5e-4] {
        let mut cfg = IntegrationConfig::new(dt, 1.0, 1010);
        cfg.renormalize = false;
        let est = simulate_ensemble_at(&u, &plus(), &cfg, 1000, &[1.0], Execution::default()).unwrap();
        drift.push((est.norm_drift_mean, est.norm_drift_max));
    }
    let ratio = drift[0].0 / drift[1].0;
    let max_ratio = drift[0].1 / drift[1].1;

    // Bias at fixed M on a driven model, where the O(dt) error is resolvable.
    // Each coarse increment is the sum of the finer run's increments.
    let driven = LindbladModel::new(pauli::sigma_x(), vec![sz()]).unwrap();
    let du = standard(&driven);
    let psi0 = Sv::from_real(&[1.0, 0.0]).unwrap();
    let exact = propagate_exact(&driven, &DensityMatrix::pure(&psi0), 1.0).unwrap();
    let mut bias = Vec::new();
    for (dt, substeps) in [(0.1, 4), (0.05, 2), (0.025, 1)] {
        let mut cfg = IntegrationConfig::new(dt, 1.0, 1011);
        cfg.noise_substeps = substeps;
        let est = simulate_ensemble_at(&du, &psi0, &cfg, 40_000, &[1.0], Execution::default()).unwrap();
        bias.push(trace_distance(&est.rho_hat[0], &exact).unwrap());
    }
    let non_increasing = bias.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        10,
        "order consistency",
        (ratio - 2.0).abs() <= 0.3 && non_increasing,
        format!(
            "mean norm drift ratio dt/(dt/2) {ratio:.3} (target 2 +- 0.3; max ratio {max_ratio:.3}); trace distance at dt=0.1,0.05,0.025: {:.4}, {:.4}, {:.4}",
            bias[0], bias[1], bias[2]
        ),
    );
}
