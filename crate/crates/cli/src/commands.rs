use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use serde_json::json;
use unravel::hilbert::{trace_distance, DensityMatrix, Operator};
use unravel::lindblad::{choi_min_eigenvalue, choi_of_generator, gks_to_lindblad, liouvillian, propagate_exact};
use unravel::observables::{born_statistics, mean_variance_curve, DEFAULT_BORN_TOL};
use unravel::output::{density_table, ensemble_table, save_json, trajectory_table, Stamp, Table};
use unravel::scenario::{content_hash, parse_scenario, ScenarioFile};
use unravel::sde::{simulate_ensemble_with, simulate_trajectory, Execution};
use unravel::unraveling::{UnitaryFreedom, Unraveling};
use unravel::verify::{load_suite, run_suite, statistical_tolerance, SuiteFile, DEFAULT_SUITE};
use unravel::{Error, Result};

use crate::Options;

fn execution(opts: &Options) -> Execution {
    match opts.threads {
        None => Execution::Parallel,
        Some(1) => Execution::Serial,
        Some(n) => Execution::Threads(n as usize),
    }
}

fn out_dir(opts: &Options) -> Result<&Path> {
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::Io(format!("{}: {e}", opts.out.display())))?;
    Ok(&opts.out)
}

/// Parses the scenario, applies command-line overrides and revalidates.
fn load(path: &Path, opts: &Options) -> Result<(ScenarioFile, Stamp)> {
    let mut file = parse_scenario(path)?;
    if let Some(seed) = opts.seed {
        file.integration.seed = seed;
    }
    if opts.no_renormalize {
        file.integration.renormalize = false;
    }
    file.build::<f64>()?;
    let stamp = Stamp {
        config_hash: file.config_hash(),
        seed: file.integration.seed,
    };
    Ok((file, stamp))
}

fn output_path(dir: &Path, file: &ScenarioFile, suffix: &str) -> PathBuf {
    let prefix = file.output.as_ref().map_or("run", |o| o.prefix.as_str());
    dir.join(format!("{prefix}_{suffix}"))
}

pub fn simulate(path: &Path, opts: &Options) -> Result<u8> {
    let (file, stamp) = load(path, opts)?;
    let dir = out_dir(opts)?;
    let s = file.build::<f64>()?;
    let cfg = &file.integration;
    let checkpoints = file.checkpoint_times();
    let checkpoint_steps = cfg.checkpoint_steps(&checkpoints)?;
    let mut steps = cfg.recorded_steps();
    steps.extend(&checkpoint_steps);
    steps.sort_unstable();
    steps.dedup();

    let est = simulate_ensemble_with(&s.unraveling, &s.psi0, cfg, file.trajectories, &steps, execution(opts))?;
    let rho0 = DensityMatrix::pure(&s.psi0);
    let exact = est
        .times
        .iter()
        .map(|t| propagate_exact(s.model(), &rho0, *t))
        .collect::<Result<Vec<_>>>()?;
    ensemble_table(&est).save_csv(output_path(dir, &file, "ensemble.csv"), &stamp)?;
    density_table(&est.times, &exact).save_csv(output_path(dir, &file, "exact.csv"), &stamp)?;
    let traj = simulate_trajectory(&s.unraveling, &s.psi0, cfg)?;
    trajectory_table(&traj).save_csv(output_path(dir, &file, "trajectory.csv"), &stamp)?;

    if file.output.as_ref().is_some_and(|o| o.final_states) {
        let d = s.psi0.dim();
        let mut cols = vec!["trajectory".to_string()];
        for i in 0..d {
            cols.push(format!("psi{i}_re"));
            cols.push(format!("psi{i}_im"));
        }
        let mut table = Table::new(cols);
        for (i, psi) in est.final_states.iter().enumerate() {
            let mut row = vec![i as f64];
            row.extend(psi.amplitudes().iter().flat_map(|z| [z.re, z.im]));
            table.push(row);
        }
        table.save_csv(output_path(dir, &file, "final_states.csv"), &stamp)?;
    }

    let tol = statistical_tolerance(s.psi0.dim(), file.trajectories, cfg.dt);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &k in &checkpoint_steps {
        let idx = steps.binary_search(&k).expect("checkpoint steps are recorded");
        let dist = trace_distance(&est.rho_hat[idx], &exact[idx])?;
        worst = worst.max(dist);
        rows.push(json!({ "t": est.times[idx], "trace_distance": dist, "stderr": est.stderr[idx] }));
        println!("t={:<10} trace distance {:.3e} (tol {:.3e})", est.times[idx], dist, tol);
    }

    // Collapse statistics apply to a single Hermitian noise operator.
    let ops = s.model().lindblad_ops();
    let born = if ops.len() == 1 && ops[0].hermiticity_violation() < 1e-12 {
        let report = born_statistics(&est.final_states, &ops[0], &s.psi0, DEFAULT_BORN_TOL)?;
        for o in &report.outcomes {
            println!(
                "eigenvalue {:+.6}: frequency {:.4} predicted {:.4} (stderr {:.4})",
                o.eigenvalue, o.frequency, o.predicted, o.stderr
            );
        }
        Some(report)
    } else {
        None
    };

    let summary = json!({
        "trajectories": file.trajectories,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "renormalize": cfg.renormalize,
        "freedom": file.freedom,
        "tolerance": tol,
        "max_trace_distance": worst,
        "checkpoints": rows,
        "norm_drift_max": est.norm_drift_max,
        "norm_drift_mean": est.norm_drift_mean,
        "born": born,
    });
    save_json(output_path(dir, &file, "summary.json"), &summary, &stamp)?;
    Ok(0)
}

pub fn verify(path: Option<&Path>, opts: &Options) -> Result<u8> {
    let mut suite = match path {
        Some(p) => load_suite(p)?,
        None => SuiteFile::from_toml_str(DEFAULT_SUITE)?,
    };
    if let Some(seed) = opts.seed {
        suite.override_seed(seed);
    }
    if opts.no_renormalize {
        suite.disable_renormalization();
    }
    let dir = out_dir(opts)?;
    let report = run_suite(&suite, execution(opts))?;
    for r in &report.reports {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let note = if r.expected_failure { " (expected to fail)" } else { "" };
        println!(
            "{verdict} {}: measured {:.3e} tolerance {:.3e} in {:.2}s{note}",
            r.check, r.measured, r.tolerance, r.seconds
        );
    }
    // The report is stamped with the hash of the suite after overrides; each
    // check also carries the hash of its own configuration.
    let stamp = Stamp {
        config_hash: content_hash(suite.to_toml_string().as_bytes()),
        seed: opts.seed.unwrap_or_else(|| suite.checks.first().map_or(0, |c| c.scenario.integration.seed)),
    };
    save_json(dir.join("verify_report.json"), &report, &stamp)?;
    Ok(report.exit_code() as u8)
}

pub fn diagonalize(path: &Path, opts: &Options) -> Result<u8> {
    let (file, stamp) = load(path, opts)?;
    let dir = out_dir(opts)?;
    let s = file.build::<f64>()?;
    let g = s
        .gks
        .as_ref()
        .ok_or_else(|| Error::scenario("gks", "diagonalize needs a [gks] table"))?;
    let diag = gks_to_lindblad(g)?;
    for (k, r) in diag.rates.iter().enumerate() {
        println!("rate[{k}] = {r:+.17e}");
    }
    println!("completely positive generator: {}", !diag.non_cp);
    let body = json!({
        "rates": diag.rates,
        "operators": diag.ops,
        "hamiltonian": diag.hamiltonian,
        "non_cp": diag.non_cp,
    });
    save_json(output_path(dir, &file, "diagonal.json"), &body, &stamp)?;
    Ok(0)
}

pub fn choi(path: &Path, opts: &Options) -> Result<u8> {
    let (file, stamp) = load(path, opts)?;
    let dir = out_dir(opts)?;
    let s = file.build::<f64>()?;
    let (generator, times) = match (&s.gks, &file.gks) {
        (Some(g), Some(spec)) if !spec.times.is_empty() => (g.liouvillian(), spec.times.clone()),
        (Some(g), _) => (g.liouvillian(), positive(file.checkpoint_times())),
        _ => (liouvillian(s.model()), positive(file.checkpoint_times())),
    };
    if times.is_empty() {
        return Err(Error::scenario("checkpoints", "no positive times to evaluate"));
    }
    let mut mins = Vec::with_capacity(times.len());
    let mut matrices: Vec<Operator<f64>> = Vec::with_capacity(times.len());
    for &t in &times {
        let c = choi_of_generator(&generator, t)?;
        let min = choi_min_eigenvalue(&c);
        println!("t={t:<10} min Choi eigenvalue {min:+.6e}");
        mins.push(min);
        matrices.push(c);
    }
    let body = json!({ "times": times, "min_eigenvalues": mins, "choi": matrices });
    save_json(output_path(dir, &file, "choi.json"), &body, &stamp)?;
    Ok(0)
}

fn positive(times: Vec<f64>) -> Vec<f64> {
    times.into_iter().filter(|t| *t > 0.0).collect()
}

pub fn variance_scan(path: &Path, opts: &Options) -> Result<u8> {
    let (file, stamp) = load(path, opts)?;
    let dir = out_dir(opts)?;
    let s = file.build::<f64>()?;
    let model = s.model();
    if model.n_ops() != 1 {
        return Err(Error::scenario(
            "lindblad",
            format!("variance-scan needs exactly one Lindblad operator, found {}", model.n_ops()),
        ));
    }
    let l = model.lindblad_ops()[0].clone();
    let phases = file
        .variance_scan
        .as_ref()
        .map_or_else(|| vec![0.0, FRAC_PI_4, 2.0 * FRAC_PI_4], |v| v.phases.clone());
    let mut table = Table::new(vec!["phase".into(), "t".into(), "mean_variance".into()]);
    let mut finals = Vec::with_capacity(phases.len());
    for &f in &phases {
        let u = Unraveling::new(model.clone(), UnitaryFreedom::ScalarPhase(f))?;
        let (times, v) = mean_variance_curve(&u, &l, &s.psi0, &file.integration, file.trajectories, execution(opts))?;
        for (t, x) in times.iter().zip(&v) {
            table.push(vec![f, *t, *x]);
        }
        let last = *v.last().expect("at least one recorded step");
        println!("phase {f:.6}: mean variance at t={} is {last:.6e}", times.last().unwrap());
        finals.push(last);
    }
    table.save_csv(output_path(dir, &file, "variance_scan.csv"), &stamp)?;
    save_json(
        output_path(dir, &file, "variance_scan.json"),
        &json!({ "phases": phases, "final_mean_variance": finals }),
        &stamp,
    )?;
    Ok(0)
}
