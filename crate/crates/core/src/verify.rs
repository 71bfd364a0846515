//! Executable checks: ensemble against exact propagation, agreement between
//! unravellings, the pointwise generator identity, and complete positivity.
//!
//! Statistical checks use `tol(M, dt) = 3 d / sqrt(M) + 5 dt`, a union of a
//! three-sigma Monte Carlo bound and a first-order bias term.
//!
//! Suites are TOML files with one `[[checks]]` table per check, each
//! embedding a scenario under `[checks.scenario]`. A check marked
//! `expect_fail` passes exactly when its underlying test fails, which is how
//! fault-injection runs are expressed.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hilbert::{outer, trace_distance, DensityMatrix, StateVector};
use crate::lindblad::{choi_min_eigenvalue, choi_of_generator, gks_to_lindblad, lindblad_rhs, propagate_exact, GksForm};
use crate::sampling::random_state;
use crate::scalar::Real;
use crate::scenario::{content_hash, ScenarioFile};
use crate::sde::{simulate_ensemble_at, Execution, IntegrationConfig};
use crate::unraveling::{Fault, UnitaryFreedom, Unraveling};

/// Max-entry tolerance of the generator identity.
pub const GENERATOR_TOL: f64 = 1e-10;
/// Choi eigenvalue floor for a completely positive map.
pub const CP_FLOOR: f64 = -1e-10;
/// Choi eigenvalue a non-CP generator must reach at its earliest time.
pub const NON_CP_CEILING: f64 = -1e-6;

pub const DEFAULT_SUITE: &str = include_str!("../suites/default.toml");

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    /// Harness verdict: the test outcome, negated for expected failures.
    pub pass: bool,
    /// Worst-case statistic compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub config_hash: String,
    /// Per-checkpoint, per-pair or per-time statistics.
    pub values: Vec<f64>,
    pub expected_failure: bool,
    /// Outcome of the test itself.
    pub test_passed: bool,
    pub seed: u64,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    fn new(check: &str, test_passed: bool, measured: f64, tolerance: f64, values: Vec<f64>, hash: String, seed: u64, start: Instant) -> Self {
        VerificationReport {
            check: check.into(),
            pass: test_passed,
            measured,
            tolerance,
            seconds: start.elapsed().as_secs_f64(),
            config_hash: hash,
            values,
            expected_failure: false,
            test_passed,
            seed,
        }
    }

    /// Marks the check as a fault-injection run that must fail.
    pub fn expecting_failure(mut self) -> Self {
        self.expected_failure = true;
        self.pass = !self.test_passed;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.check = name.into();
        self
    }
}

/// 3 d / sqrt(M) + 5 dt.
pub fn statistical_tolerance(d: usize, m: usize, dt: f64) -> f64 {
    3.0 * d as f64 / (m as f64).sqrt() + 5.0 * dt
}

fn unraveling_json<T: Real>(u: &Unraveling<T>) -> serde_json::Value {
    json!({
        "hamiltonian": u.model().hamiltonian(),
        "lindblad": u.model().lindblad_ops(),
        "freedom": u.freedom().to_spec(),
        "fault": u.fault().name(),
    })
}

fn hash_of(kind: &str, scalar: &str, body: serde_json::Value) -> String {
    let doc = json!({ "check": kind, "scalar": scalar, "config": body });
    content_hash(doc.to_string().as_bytes())
}

fn state_json<T: Real>(psi: &StateVector<T>) -> serde_json::Value {
    psi.amplitudes()
        .iter()
        .map(|z| [z.re.as_f64(), z.im.as_f64()])
        .collect::<Vec<_>>()
        .into()
}

/// Trace distance between the ensemble estimate and exact propagation at
/// each checkpoint; passes when every distance is within tol(M, dt).
pub fn check_ensemble_vs_exact<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    checkpoints: &[f64],
    exec: Execution,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let est = simulate_ensemble_at(u, psi0, cfg, m, checkpoints, exec)?;
    let rho0 = DensityMatrix::pure(psi0);
    let mut distances = Vec::with_capacity(checkpoints.len());
    for (t, rho_hat) in est.times.iter().zip(&est.rho_hat) {
        let exact = propagate_exact(u.model(), &rho0, T::lit(*t))?;
        distances.push(trace_distance(rho_hat, &exact)?.as_f64());
    }
    let tol = statistical_tolerance(u.dim(), m, cfg.dt);
    let worst = distances.iter().copied().fold(0.0, f64::max);
    let hash = hash_of(
        "ensemble-vs-exact",
        std::any::type_name::<T>(),
        json!({
            "unraveling": unraveling_json(u),
            "psi0": state_json(psi0),
            "integration": cfg,
            "trajectories": m,
            "checkpoints": checkpoints,
        }),
    );
    let pass = distances.iter().all(|d| *d <= tol);
    Ok(VerificationReport::new("ensemble-vs-exact", pass, worst, tol, distances, hash, cfg.seed, start))
}

/// Ensembles of every member at time `t`, each on its own seed
/// `cfg.seed + j`. Passes when all pairwise trace distances are within
/// 2 tol(M, dt) and each member is within tol(M, dt) of exact propagation
/// of the first member's model. `values` lists the pairwise distances in
/// (0,1), (0,2), ..., (1,2), ... order followed by the exact distances.
pub fn check_unraveling_equivalence<T: Real>(
    members: &[Unraveling<T>],
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    t: f64,
    exec: Execution,
) -> Result<VerificationReport> {
    let start = Instant::now();
    if members.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "equivalence needs at least 2 unravellings, got {}",
            members.len()
        )));
    }
    let d = members[0].dim();
    if let Some(bad) = members.iter().find(|u| u.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let mut rhos = Vec::with_capacity(members.len());
    for (j, u) in members.iter().enumerate() {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(j as u64);
        let est = simulate_ensemble_at(u, psi0, &c, m, &[t], exec)?;
        rhos.push(est.rho_hat.into_iter().next().expect("one checkpoint"));
    }
    let exact = propagate_exact(members[0].model(), &DensityMatrix::pure(psi0), T::lit(t))?;
    let tol = statistical_tolerance(d, m, cfg.dt);
    let mut pairwise = Vec::new();
    for a in 0..rhos.len() {
        for b in a + 1..rhos.len() {
            pairwise.push(trace_distance(&rhos[a], &rhos[b])?.as_f64());
        }
    }
    let to_exact: Vec<f64> = rhos
        .iter()
        .map(|r| trace_distance(r, &exact).map(|x| x.as_f64()))
        .collect::<Result<_>>()?;
    let pass = pairwise.iter().all(|x| *x <= 2.0 * tol) && to_exact.iter().all(|x| *x <= tol);
    let worst = pairwise.iter().copied().fold(0.0, f64::max);
    let hash = hash_of(
        "unraveling-equivalence",
        std::any::type_name::<T>(),
        json!({
            "members": members.iter().map(unraveling_json).collect::<Vec<_>>(),
            "psi0": state_json(psi0),
            "integration": cfg,
            "trajectories": m,
            "t": t,
        }),
    );
    let mut values = pairwise;
    values.extend(to_exact);
    Ok(VerificationReport::new("unraveling-equivalence", pass, worst, 2.0 * tol, values, hash, cfg.seed, start))
}

/// Max-entry deviation between |A><psi| + |psi><A| + sum_k |B_k><B_k| and
/// the master-equation right-hand side over `samples` random unit states
/// drawn from `seed`.
pub fn check_generator_identity<T: Real>(u: &Unraveling<T>, samples: usize, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi: StateVector<T> = random_state(&mut rng, u.dim());
        let g = u.one_step_generator(&psi)?;
        let rhs = lindblad_rhs(u.model(), &outer(&psi, &psi)?)?;
        values.push(g.max_abs_diff(&rhs).as_f64());
    }
    let worst = values.iter().copied().fold(0.0, f64::max);
    let hash = hash_of(
        "generator-identity",
        std::any::type_name::<T>(),
        json!({ "unraveling": unraveling_json(u), "samples": samples, "seed": seed }),
    );
    Ok(VerificationReport::new(
        "generator-identity",
        worst <= GENERATOR_TOL,
        worst,
        GENERATOR_TOL,
        values,
        hash,
        seed,
        start,
    ))
}

/// Diagonalizes `g`. With all rates >= -1e-10 the Choi matrix must be PSD
/// (min eigenvalue >= -1e-10) at every time; otherwise its min eigenvalue
/// must drop below -1e-6 at the earliest time, i.e. the violation is seen.
/// `values` holds the Choi min eigenvalue at each time.
pub fn check_complete_positivity<T: Real>(g: &GksForm<T>, times: &[f64]) -> Result<VerificationReport> {
    let start = Instant::now();
    if times.is_empty() {
        return Err(Error::InvalidConfig("complete-positivity needs at least one time".into()));
    }
    let diag = gks_to_lindblad(g)?;
    let generator = g.liouvillian();
    let values: Vec<f64> = times
        .iter()
        .map(|t| choi_of_generator(&generator, T::lit(*t)).map(|c| choi_min_eigenvalue(&c).as_f64()))
        .collect::<Result<_>>()?;
    let hash = hash_of(
        "complete-positivity",
        std::any::type_name::<T>(),
        json!({
            "hamiltonian": g.hamiltonian(),
            "basis": g.basis_ops(),
            "kossakowski": g.kossakowski(),
            "times": times,
        }),
    );
    let (pass, measured, tol) = if diag.non_cp {
        let earliest = times
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("nonempty");
        (values[earliest] < NON_CP_CEILING, values[earliest], NON_CP_CEILING)
    } else {
        let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
        (worst >= CP_FLOOR, worst, CP_FLOOR)
    };
    Ok(VerificationReport::new("complete-positivity", pass, measured, tol, values, hash, 0, start))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    EnsembleVsExact,
    UnravelingEquivalence,
    GeneratorIdentity,
    CompletePositivity,
}

fn default_samples() -> usize {
    1000
}

/// One `[[checks]]` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub kind: CheckKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub expect_fail: bool,
    /// Members of an equivalence check.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub freedoms: Vec<String>,
    /// Per-member faults of an equivalence check; missing entries are "none".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<String>,
    /// Random states for the generator identity.
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub scenario: ScenarioFile,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl SuiteFile {
    /// Parses TOML and validates every embedded scenario.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let suite: SuiteFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        for (i, c) in suite.checks.iter().enumerate() {
            c.scenario.build::<f64>().map_err(|e| match e {
                Error::Scenario { field, reason } => Error::Scenario {
                    field: format!("checks[{i}].scenario.{field}"),
                    reason,
                },
                other => other,
            })?;
            c.members::<f64>().map_err(|e| Error::scenario(format!("checks[{i}]"), e.to_string()))?;
        }
        Ok(suite)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("suite is serializable")
    }

    /// Replaces every scenario seed.
    pub fn override_seed(&mut self, seed: u64) {
        for c in &mut self.checks {
            c.scenario.integration.seed = seed;
        }
    }

    /// Turns renormalization off in every scenario.
    pub fn disable_renormalization(&mut self) {
        for c in &mut self.checks {
            c.scenario.integration.renormalize = false;
        }
    }
}

impl CheckSpec {
    fn members<T: Real>(&self) -> Result<Vec<Unraveling<T>>> {
        if self.kind != CheckKind::UnravelingEquivalence {
            return Ok(Vec::new());
        }
        if self.freedoms.len() < 2 {
            return Err(Error::InvalidConfig("equivalence needs at least 2 freedoms".into()));
        }
        if self.faults.len() > self.freedoms.len() {
            return Err(Error::InvalidConfig("more faults than freedoms".into()));
        }
        let model = self.scenario.build::<T>()?.unraveling.model().clone();
        self.freedoms
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let fault = Fault::parse(self.faults.get(j).map_or("none", |s| s.as_str()))?;
                let freedom = UnitaryFreedom::parse(f, model.n_ops())?;
                Ok(Unraveling::new(model.clone(), freedom)?.with_fault(fault))
            })
            .collect()
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            CheckKind::EnsembleVsExact => "ensemble-vs-exact",
            CheckKind::UnravelingEquivalence => "unraveling-equivalence",
            CheckKind::GeneratorIdentity => "generator-identity",
            CheckKind::CompletePositivity => "complete-positivity",
        }
    }

    /// Runs the check in `f64`.
    pub fn run(&self, exec: Execution) -> Result<VerificationReport> {
        let s = self.scenario.build::<f64>()?;
        let sc = &self.scenario;
        let report = match self.kind {
            CheckKind::EnsembleVsExact => {
                check_ensemble_vs_exact(&s.unraveling, &s.psi0, &sc.integration, sc.trajectories, &sc.checkpoint_times(), exec)?
            }
            CheckKind::UnravelingEquivalence => {
                let t = *sc.checkpoint_times().last().expect("nonempty");
                check_unraveling_equivalence(&self.members()?, &s.psi0, &sc.integration, sc.trajectories, t, exec)?
            }
            CheckKind::GeneratorIdentity => check_generator_identity(&s.unraveling, self.samples, sc.integration.seed)?,
            CheckKind::CompletePositivity => {
                let g = s
                    .gks
                    .as_ref()
                    .ok_or_else(|| Error::scenario("gks", "complete-positivity needs a [gks] table"))?;
                let times = sc.gks.as_ref().map(|g| g.times.clone()).unwrap_or_default();
                let times = if times.is_empty() { vec![0.1, 1.0] } else { times };
                check_complete_positivity(g, &times)?
            }
        };
        let report = report.with_name(self.name.as_deref().unwrap_or(self.kind_name()));
        Ok(if self.expect_fail { report.expecting_failure() } else { report })
    }
}

/// Reports of a whole suite, in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<VerificationReport>,
    pub all_passed: bool,
}

impl SuiteReport {
    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed {
            0
        } else {
            1
        }
    }
}

/// Runs every check in declaration order.
pub fn run_suite(suite: &SuiteFile, exec: Execution) -> Result<SuiteReport> {
    let reports = suite
        .checks
        .iter()
        .map(|c| c.run(exec))
        .collect::<Result<Vec<_>>>()?;
    let all_passed = reports.iter().all(|r| r.pass);
    Ok(SuiteReport { reports, all_passed })
}

impl SuiteFile {
    /// A suite (a document with a top-level `checks` key) or a bare scenario,
    /// which becomes a single ensemble-vs-exact check.
    pub fn from_suite_or_scenario_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if table.contains_key("checks") {
            return SuiteFile::from_toml_str(text);
        }
        let scenario = ScenarioFile::from_toml_str(text)?;
        Ok(SuiteFile {
            checks: vec![CheckSpec {
                kind: CheckKind::EnsembleVsExact,
                name: None,
                expect_fail: false,
                freedoms: Vec::new(),
                faults: Vec::new(),
                samples: default_samples(),
                scenario,
            }],
        })
    }
}

/// Reads and validates a suite file or a bare scenario file.
pub fn load_suite(path: impl AsRef<Path>) -> Result<SuiteFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    SuiteFile::from_suite_or_scenario_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}
