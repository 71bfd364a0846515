//! Seeded Euler-Maruyama integration of `d psi = A dt + sum_k B_k dW_k` and
//! reproducible ensembles.
//!
//! Trajectory `i` of an ensemble draws its noise from a ChaCha8 stream keyed
//! by `(seed, i)`, so every output is a pure function of the configuration
//! regardless of scheduling. Ensemble sums are formed in fixed-size blocks of
//! consecutive trajectories and the blocks are combined in index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, StateVector};
use crate::scalar::{cr, czero, Real, C};
use crate::tolerance::Tolerances;
use crate::unraveling::Unraveling;

/// Largest number of steps a configuration may request.
pub const MAX_STEPS: f64 = 1e8;

/// Trajectories per reduction block. Fixed so the summation tree does not
/// depend on the thread count.
const BLOCK: usize = 64;

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

/// Fixed-step integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default)]
    pub seed: u64,
    /// Store every k-th step; the final step is always stored.
    #[serde(default = "default_one")]
    pub record_stride: usize,
    /// Each increment is summed from this many N(0, dt/s) draws, so a run at
    /// (dt, s = 2) shares its Brownian path with a run at (dt/2, s = 1).
    #[serde(default = "default_one")]
    pub noise_substeps: usize,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_final: f64, seed: u64) -> Self {
        IntegrationConfig {
            dt,
            t_final,
            renormalize: true,
            seed,
            record_stride: 1,
            noise_substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.dt > self.t_final {
            return bad(format!("dt = {} exceeds t_final = {}", self.dt, self.t_final));
        }
        if self.t_final / self.dt > MAX_STEPS {
            return bad(format!("t_final/dt = {:e} exceeds {MAX_STEPS:e}", self.t_final / self.dt));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if self.noise_substeps == 0 {
            return bad("noise_substeps must be at least 1".into());
        }
        Ok(())
    }

    /// ceil(t_final / dt), ignoring round-off below 1e-9 of a step.
    pub fn n_steps(&self) -> usize {
        let r = self.t_final / self.dt;
        let nearest = r.round();
        if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Step indices recorded under `record_stride`, always including 0 and
    /// the last step.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut steps: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *steps.last().expect("step 0 present") != n {
            steps.push(n);
        }
        steps
    }

    /// Step index for each checkpoint time. Checkpoints must lie on the step
    /// grid within 1e-9 of a step and inside [0, n_steps * dt].
    pub fn checkpoint_steps(&self, checkpoints: &[f64]) -> Result<Vec<usize>> {
        let n = self.n_steps();
        checkpoints
            .iter()
            .map(|&t| {
                let r = t / self.dt;
                let k = r.round();
                if !(t >= 0.0) || (r - k).abs() > 1e-9 * k.max(1.0) || k as usize > n {
                    return Err(Error::InvalidTime {
                        t,
                        constraint: "a multiple of dt within [0, t_final]",
                    });
                }
                Ok(k as usize)
            })
            .collect()
    }
}

/// Gaussian increment source for one trajectory.
#[derive(Clone, Debug)]
pub struct WienerStream {
    rng: ChaCha8Rng,
    acc: Vec<f64>,
}

impl WienerStream {
    /// Stream `index` of the generator keyed by `seed`.
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        WienerStream { rng, acc: Vec::new() }
    }

    /// Fills `dw` with independent N(0, dt) draws, each summed from
    /// `substeps` draws of variance dt/substeps in substep-major order.
    pub fn fill<T: Real>(&mut self, dw: &mut [T], dt: f64, substeps: usize) {
        let sd = (dt / substeps as f64).sqrt();
        self.acc.clear();
        self.acc.resize(dw.len(), 0.0);
        for _ in 0..substeps {
            for a in self.acc.iter_mut() {
                *a += sd * self.rng.sample::<f64, _>(StandardNormal);
            }
        }
        for (x, a) in dw.iter_mut().zip(&self.acc) {
            *x = T::lit(*a);
        }
    }
}

/// `n` independent N(0, dt) draws from `rng`.
pub fn wiener_increments<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, dt: f64) -> Vec<T> {
    let sd = dt.sqrt();
    (0..n)
        .map(|_| T::lit(sd * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Reusable buffers for one integrating thread.
#[derive(Clone, Debug)]
struct Workspace<T> {
    drift: Vec<C<T>>,
    diffusion: Vec<C<T>>,
    ell: Vec<C<T>>,
    scratch: Vec<C<T>>,
    dw: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(d: usize, big_n: usize) -> Self {
        Workspace {
            drift: vec![czero(); d],
            diffusion: vec![czero(); d * big_n],
            ell: vec![czero(); big_n],
            scratch: vec![czero(); d],
            dw: vec![T::zero(); big_n],
        }
    }

    /// Advances `psi` in place with the increments in `self.dw`. Returns
    /// |norm'^2 / norm^2 - 1| before any renormalization.
    fn advance(
        &mut self,
        u: &Unraveling<T>,
        psi: &mut [C<T>],
        dt: T,
        renormalize: bool,
        step: usize,
        blow_up: T,
    ) -> Result<T> {
        let d = psi.len();
        u.evaluate_into(psi, &mut self.drift, &mut self.diffusion, &mut self.ell, &mut self.scratch);
        let before: T = psi.iter().map(|z| z.norm_sqr()).sum();
        let next = &mut self.scratch;
        for i in 0..d {
            next[i] = psi[i] + self.drift[i] * dt;
        }
        for (k, w) in self.dw.iter().enumerate() {
            let b = &self.diffusion[k * d..(k + 1) * d];
            for (x, y) in next.iter_mut().zip(b) {
                *x += *y * *w;
            }
        }
        let after: T = next.iter().map(|z| z.norm_sqr()).sum();
        let norm = after.sqrt();
        if !(norm >= blow_up) || !norm.is_finite() {
            return Err(Error::StepBlowUp {
                step,
                norm: norm.as_f64(),
            });
        }
        let scale = if renormalize { norm.recip() } else { T::one() };
        for (p, x) in psi.iter_mut().zip(next.iter()) {
            *p = *x * scale;
        }
        Ok((after / before - T::one()).abs())
    }
}

/// One Euler-Maruyama step `psi + A dt + sum_k B_k dW_k`, optionally
/// renormalized.
pub fn step<T: Real>(
    u: &Unraveling<T>,
    psi: &StateVector<T>,
    dt: T,
    dw: &[T],
    renormalize: bool,
) -> Result<StateVector<T>> {
    if psi.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: psi.dim(),
        });
    }
    if dw.len() != u.noise_count() {
        return Err(Error::DimensionMismatch {
            expected: u.noise_count(),
            found: dw.len(),
        });
    }
    let mut ws = Workspace::new(u.dim(), u.noise_count());
    ws.dw.copy_from_slice(dw);
    let mut out = psi.amplitudes().to_vec();
    let tol = Tolerances::<T>::default();
    ws.advance(u, &mut out, dt, renormalize, 0, tol.blow_up_norm)?;
    Ok(StateVector::from_vec_unchecked(out))
}

/// Per-step relative norm change before renormalization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormDrift {
    pub max: f64,
    pub mean: f64,
}

/// Integrates one trajectory on stream `index`, calling `observe(step, t, psi)`
/// at step 0 and after every step.
pub fn integrate_with<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    index: u64,
    mut observe: impl FnMut(usize, f64, &[C<T>]),
) -> Result<(StateVector<T>, NormDrift)> {
    cfg.validate()?;
    check_initial(u, psi0)?;
    let n = cfg.n_steps();
    let dt = T::lit(cfg.dt);
    let blow_up = Tolerances::<T>::default().blow_up_norm;
    let mut ws = Workspace::new(u.dim(), u.noise_count());
    let mut stream = WienerStream::new(cfg.seed, index);
    let mut psi = psi0.amplitudes().to_vec();
    let mut drift = NormDrift::default();
    let mut sum = 0.0;
    observe(0, 0.0, &psi);
    for k in 1..=n {
        stream.fill(&mut ws.dw, cfg.dt, cfg.noise_substeps);
        let dev = ws.advance(u, &mut psi, dt, cfg.renormalize, k, blow_up)?.as_f64();
        drift.max = drift.max.max(dev);
        sum += dev;
        observe(k, k as f64 * cfg.dt, &psi);
    }
    drift.mean = sum / n as f64;
    Ok((StateVector::from_vec_unchecked(psi), drift))
}

fn check_initial<T: Real>(u: &Unraveling<T>, psi0: &StateVector<T>) -> Result<()> {
    if psi0.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: psi0.dim(),
        });
    }
    let dev = (psi0.norm_sqr() - T::one()).abs();
    if dev > Tolerances::<T>::default().normalization {
        return Err(Error::NotNormalized {
            what: "initial state".into(),
            violation: dev.as_f64(),
        });
    }
    Ok(())
}

/// A single realization psi_t.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<StateVector<T>>,
    /// Largest per-step |norm'^2/norm^2 - 1| before renormalization.
    pub norm_drift_max: f64,
    /// Mean of the same quantity over all steps.
    pub norm_drift_mean: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Trajectory on stream 0 of `cfg.seed`, recorded every `record_stride` steps.
pub fn simulate_trajectory<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
) -> Result<Trajectory<T>> {
    simulate_trajectory_stream(u, psi0, cfg, 0)
}

pub fn simulate_trajectory_stream<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    index: u64,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, drift) = integrate_with(u, psi0, cfg, index, |k, t, psi| {
        if k % cfg.record_stride == 0 || k == n {
            times.push(t);
            states.push(StateVector::from_vec_unchecked(psi.to_vec()));
        }
    })?;
    Ok(Trajectory {
        times,
        states,
        norm_drift_max: drift.max,
        norm_drift_mean: drift.mean,
        seed: cfg.seed,
        stream: index,
    })
}

/// How ensemble trajectories are scheduled. Results are identical for all
/// variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

/// Evaluates `f(i)` for trajectory indices `0..m` under `exec` and returns
/// the results in index order, or the error of the lowest failing index.
pub fn map_trajectories<R, F>(m: usize, exec: Execution, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync + Send,
{
    let out: Vec<Result<R>> = match exec {
        Execution::Serial => (0..m as u64).map(&f).collect(),
        Execution::Parallel => (0..m as u64).into_par_iter().map(&f).collect(),
        Execution::Threads(t) => thread_pool(t)?.install(|| (0..m as u64).into_par_iter().map(&f).collect()),
    };
    out.into_iter().collect()
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Sample estimate of rho_t = E|psi_t><psi_t|.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEstimate<T> {
    pub times: Vec<f64>,
    pub rho_hat: Vec<DensityMatrix<T>>,
    pub trajectories: usize,
    /// Frobenius-norm standard error of each rho_hat entry set.
    pub stderr: Vec<f64>,
    /// Final state of each trajectory, by index.
    pub final_states: Vec<StateVector<T>>,
    /// Largest per-step norm drift over all trajectories.
    pub norm_drift_max: f64,
    /// Ensemble mean of each trajectory's mean per-step norm drift.
    pub norm_drift_mean: f64,
}

struct Partial<T> {
    sums: Vec<Operator<T>>,
    norm4: Vec<f64>,
    finals: Vec<StateVector<T>>,
    drift_max: f64,
    drift_mean_sum: f64,
}

impl<T: Real> Partial<T> {
    fn empty(records: usize, d: usize) -> Self {
        Partial {
            sums: vec![Operator::zeros(d); records],
            norm4: vec![0.0; records],
            finals: Vec::new(),
            drift_max: 0.0,
            drift_mean_sum: 0.0,
        }
    }

    fn absorb(&mut self, other: Partial<T>) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.axpy(cr(T::one()), b);
        }
        for (a, b) in self.norm4.iter_mut().zip(&other.norm4) {
            *a += b;
        }
        self.finals.extend(other.finals);
        self.drift_max = self.drift_max.max(other.drift_max);
        self.drift_mean_sum += other.drift_mean_sum;
    }
}

fn run_block<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    steps: &[usize],
    range: std::ops::Range<usize>,
) -> Result<Partial<T>> {
    let d = u.dim();
    let mut part = Partial::empty(steps.len(), d);
    for i in range {
        let mut next = 0;
        let sums = &mut part.sums;
        let norm4 = &mut part.norm4;
        let (last, drift) = integrate_with(u, psi0, cfg, i as u64, |k, _, psi| {
            while next < steps.len() && steps[next] == k {
                let acc = sums[next].entries_mut();
                for r in 0..d {
                    for c in 0..d {
                        acc[r * d + c] += psi[r] * psi[c].conj();
                    }
                }
                let n2: T = psi.iter().map(|z| z.norm_sqr()).sum();
                norm4[next] += (n2 * n2).as_f64();
                next += 1;
            }
        })?;
        part.finals.push(last);
        part.drift_max = part.drift_max.max(drift.max);
        part.drift_mean_sum += drift.mean;
    }
    Ok(part)
}

/// Ensemble of `m` trajectories recorded under `cfg.record_stride`.
pub fn simulate_ensemble<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
) -> Result<EnsembleEstimate<T>> {
    simulate_ensemble_with(u, psi0, cfg, m, &cfg.recorded_steps(), Execution::default())
}

/// Ensemble of `m` trajectories recorded at the given checkpoint times.
pub fn simulate_ensemble_at<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    checkpoints: &[f64],
    exec: Execution,
) -> Result<EnsembleEstimate<T>> {
    cfg.validate()?;
    let steps = cfg.checkpoint_steps(checkpoints)?;
    simulate_ensemble_with(u, psi0, cfg, m, &steps, exec)
}

/// Ensemble of `m` trajectories recorded at the given step indices, which
/// must be nondecreasing.
pub fn simulate_ensemble_with<T: Real>(
    u: &Unraveling<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    steps: &[usize],
    exec: Execution,
) -> Result<EnsembleEstimate<T>> {
    cfg.validate()?;
    check_initial(u, psi0)?;
    if m == 0 {
        return Err(Error::InvalidConfig("trajectory count must be at least 1".into()));
    }
    if steps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("record steps must be nondecreasing".into()));
    }
    let blocks: Vec<std::ops::Range<usize>> = (0..m)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(m))
        .collect();
    let run = |r: &std::ops::Range<usize>| run_block(u, psi0, cfg, steps, r.clone());
    let parts: Vec<Result<Partial<T>>> = match exec {
        Execution::Serial => blocks.iter().map(run).collect(),
        Execution::Parallel => blocks.par_iter().map(run).collect(),
        Execution::Threads(t) => thread_pool(t)?.install(|| blocks.par_iter().map(run).collect()),
    };
    let mut total = Partial::empty(steps.len(), u.dim());
    for p in parts {
        total.absorb(p?);
    }
    let inv = T::lit(1.0 / m as f64);
    let mut rho_hat = Vec::with_capacity(steps.len());
    let mut stderr = Vec::with_capacity(steps.len());
    for (sum, n4) in total.sums.iter().zip(&total.norm4) {
        let rho = sum.scale_real(inv);
        let f2 = rho.frobenius_norm().as_f64().powi(2);
        let var = (n4 / m as f64 - f2).max(0.0);
        stderr.push(if m > 1 { (var / (m - 1) as f64).sqrt() } else { 0.0 });
        rho_hat.push(DensityMatrix::new_unchecked(rho));
    }
    Ok(EnsembleEstimate {
        times: steps.iter().map(|&k| k as f64 * cfg.dt).collect(),
        rho_hat,
        trajectories: m,
        stderr,
        final_states: total.finals,
        norm_drift_max: total.drift_max,
        norm_drift_mean: total.drift_mean_sum / m as f64,
    })
}

#[cfg(test)]
mod tests;
