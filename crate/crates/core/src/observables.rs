//! Collapse variance, Born statistics, the diffusion matrix of the state
//! process, and the projective collapse map.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{eigh, expectation_unchecked, DensityMatrix, Operator, StateVector};
use crate::scalar::{cr, czero, Real, C};
use crate::sde::{integrate_with, map_trajectories, Execution, IntegrationConfig};
use crate::tolerance::Tolerances;
use crate::unraveling::Unraveling;

/// Default threshold for assigning a final state to an eigenspace.
pub const DEFAULT_BORN_TOL: f64 = 1e-3;

fn require_hermitian<T: Real>(l: &Operator<T>, tol: &Tolerances<T>) -> Result<()> {
    let v = l.hermiticity_violation();
    if v > tol.hermitian {
        return Err(Error::NotHermitian {
            what: "L".into(),
            violation: v.as_f64(),
        });
    }
    Ok(())
}

fn require_dim<T: Real>(psi: &StateVector<T>, d: usize) -> Result<()> {
    if psi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.dim(),
        });
    }
    Ok(())
}

/// ||(L - <L>) psi||^2, the spread of L in a unit state.
fn spread<T: Real>(psi: &[C<T>], l: &Operator<T>, scratch: &mut [C<T>]) -> T {
    let mean = expectation_unchecked(psi, l).re;
    l.apply_into(psi, scratch);
    scratch
        .iter()
        .zip(psi)
        .map(|(lp, p)| (*lp - *p * mean).norm_sqr())
        .sum()
}

/// <L^2> - <L>^2 in a unit state.
pub fn variance<T: Real>(psi: &StateVector<T>, l: &Operator<T>) -> Result<T> {
    require_hermitian(l, &Tolerances::default())?;
    require_dim(psi, l.dim())?;
    let mut scratch = vec![czero(); psi.dim()];
    Ok(spread(psi.amplitudes(), l, &mut scratch))
}

/// Expected rate of change of the variance under the scalar-phase
/// unravelling with phase `f`: -4 cos^2(f) V^2.
pub fn variance_drift<T: Real>(psi: &StateVector<T>, l: &Operator<T>, f: T) -> Result<T> {
    let v = variance(psi, l)?;
    let cf = f.cos();
    Ok(-T::lit(4.0) * cf * cf * v * v)
}

/// Real symmetric 2d x 2d matrix over (coordinate i, part m), stored at
/// index 2i + m with m = 0 for the real and m = 1 for the imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Real> DiffusionMatrix<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.data[a * self.size + b]
    }

    /// Entry D^{i,m}_{j,n}.
    pub fn entry(&self, i: usize, m: usize, j: usize, n: usize) -> T {
        self.get(2 * i + m, 2 * j + n)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }

    pub fn asymmetry(&self) -> T {
        let n = self.size;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..a {
                worst = worst.max((self.get(a, b) - self.get(b, a)).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> T {
        let m = Operator::from_fn(self.size, |a, b| cr(self.get(a, b)));
        eigh(&m).values.first().copied().unwrap_or_else(T::zero)
    }
}

/// D^{i,m}_{j,n} = sum_k [B_k]_{i,m} [B_k]_{j,n} at `psi`.
pub fn diffusion_matrix<T: Real>(u: &Unraveling<T>, psi: &StateVector<T>) -> Result<DiffusionMatrix<T>> {
    let dd = u.drift_diffusion(psi)?;
    let size = 2 * psi.dim();
    let mut data = vec![T::zero(); size * size];
    let mut coords = vec![T::zero(); size];
    for b in &dd.diffusion {
        for (i, z) in b.amplitudes().iter().enumerate() {
            coords[2 * i] = z.re;
            coords[2 * i + 1] = z.im;
        }
        for a in 0..size {
            for c in 0..size {
                data[a * size + c] += coords[a] * coords[c];
            }
        }
    }
    Ok(DiffusionMatrix { size, data })
}

/// An eigenspace of a Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector<T> {
    pub eigenvalue: T,
    pub projector: Operator<T>,
}

/// Eigenspaces of Hermitian `l` in ascending eigenvalue order, grouping
/// eigenvalues closer than `tol.spectral_gap`.
pub fn spectral_sectors<T: Real>(l: &Operator<T>, tol: &Tolerances<T>) -> Result<Vec<Sector<T>>> {
    require_hermitian(l, tol)?;
    let eig = eigh(l);
    let d = l.dim();
    let mut sectors: Vec<(Vec<T>, Vec<usize>)> = Vec::new();
    for (k, &ev) in eig.values.iter().enumerate() {
        match sectors.last_mut() {
            Some((vals, idx)) if ev - *vals.last().expect("nonempty") <= tol.spectral_gap => {
                vals.push(ev);
                idx.push(k);
            }
            _ => sectors.push((vec![ev], vec![k])),
        }
    }
    Ok(sectors
        .into_iter()
        .map(|(vals, idx)| {
            let mut p = Operator::zeros(d);
            for &k in &idx {
                let v = eig.vectors.column(k);
                for r in 0..d {
                    for c in 0..d {
                        p[(r, c)] += v[r] * v[c].conj();
                    }
                }
            }
            let mean = vals.iter().copied().sum::<T>() / T::lit(vals.len() as f64);
            Sector {
                eigenvalue: mean,
                projector: p,
            }
        })
        .collect())
}

/// One eigenspace row of a [`BornReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornOutcome {
    pub eigenvalue: f64,
    pub count: usize,
    pub frequency: f64,
    /// ||P_n psi0||^2.
    pub predicted: f64,
    /// sqrt(p (1 - p) / M) at the predicted weight.
    pub stderr: f64,
}

/// Empirical outcome frequencies against Born weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornReport {
    pub outcomes: Vec<BornOutcome>,
    pub unclassified: usize,
    pub unclassified_fraction: f64,
    pub total: usize,
    pub tol: f64,
}

/// Assigns each final state to the eigenspace of `l` holding more than
/// `1 - tol` of its weight and compares the frequencies with the Born
/// weights of `psi0`. States in no eigenspace are counted as unclassified.
pub fn born_statistics<T: Real>(
    finals: &[StateVector<T>],
    l: &Operator<T>,
    psi0: &StateVector<T>,
    tol: T,
) -> Result<BornReport> {
    let sectors = spectral_sectors(l, &Tolerances::default())?;
    require_dim(psi0, l.dim())?;
    let mut counts = vec![0usize; sectors.len()];
    let mut unclassified = 0;
    for psi in finals {
        require_dim(psi, l.dim())?;
        let hit = sectors
            .iter()
            .position(|s| expectation_unchecked(psi.amplitudes(), &s.projector).re > T::one() - tol);
        match hit {
            Some(k) => counts[k] += 1,
            None => unclassified += 1,
        }
    }
    let m = finals.len();
    let mf = m.max(1) as f64;
    let outcomes = sectors
        .iter()
        .zip(&counts)
        .map(|(s, &count)| {
            let p = expectation_unchecked(psi0.amplitudes(), &s.projector).re.as_f64();
            BornOutcome {
                eigenvalue: s.eigenvalue.as_f64(),
                count,
                frequency: count as f64 / mf,
                predicted: p,
                stderr: (p * (1.0 - p)).max(0.0).sqrt() / mf.sqrt(),
            }
        })
        .collect();
    Ok(BornReport {
        outcomes,
        unclassified,
        unclassified_fraction: unclassified as f64 / mf,
        total: m,
        tol: tol.as_f64(),
    })
}

/// Checks that `projectors` are Hermitian, idempotent, mutually orthogonal,
/// and resolve the identity within `tol.unitary`.
pub fn validate_projectors<T: Real>(projectors: &[Operator<T>], tol: &Tolerances<T>) -> Result<()> {
    let first = projectors
        .first()
        .ok_or_else(|| Error::InvalidProjectors("empty projector set".into()))?;
    let d = first.dim();
    let mut sum = Operator::zeros(d);
    for (n, p) in projectors.iter().enumerate() {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dim(),
            });
        }
        if p.hermiticity_violation() > tol.unitary {
            return Err(Error::InvalidProjectors(format!("P_{n} is not Hermitian")));
        }
        for (m, q) in projectors.iter().enumerate().skip(n) {
            let pq = p.matmul(q);
            let expected = if m == n { p.clone() } else { Operator::zeros(d) };
            let v = pq.max_abs_diff(&expected);
            if v > tol.unitary {
                return Err(Error::InvalidProjectors(format!(
                    "P_{n} P_{m} deviates from {} by {:.3e}",
                    if m == n { "P_n" } else { "0" },
                    v.as_f64()
                )));
            }
        }
        sum = &sum + p;
    }
    let v = sum.max_abs_diff(&Operator::identity(d));
    if v > tol.unitary {
        return Err(Error::InvalidProjectors(format!(
            "projectors do not sum to the identity: deviation {:.3e}",
            v.as_f64()
        )));
    }
    Ok(())
}

/// ||P_n psi||^2 for each projector, given rho = |psi><psi|.
pub fn born_weights<T: Real>(rho: &DensityMatrix<T>, projectors: &[Operator<T>]) -> Vec<T> {
    projectors
        .iter()
        .map(|p| p.matmul(rho.as_operator()).trace().re)
        .collect()
}

/// sum_n p_n P_n |psi><psi| P_n / ||P_n psi||^2 for rank-one
/// rho = |psi><psi|. Branches with ||P_n psi||^2 below `tol.branch_weight`
/// are skipped and the remaining weights rescaled to sum to one, so the map
/// stays trace preserving.
pub fn projective_collapse<T: Real>(
    rho: &DensityMatrix<T>,
    projectors: &[Operator<T>],
    weights: &[T],
) -> Result<DensityMatrix<T>> {
    let tol = Tolerances::default();
    validate_projectors(projectors, &tol)?;
    if projectors.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: projectors.len(),
            found: weights.len(),
        });
    }
    if rho.dim() != projectors[0].dim() {
        return Err(Error::DimensionMismatch {
            expected: projectors[0].dim(),
            found: rho.dim(),
        });
    }
    if let Some(w) = weights.iter().find(|w| **w < T::zero()) {
        return Err(Error::InvalidProjectors(format!("negative weight {}", w.as_f64())));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > tol.unitary {
        return Err(Error::InvalidProjectors(format!(
            "weights sum to {}, not 1",
            total.as_f64()
        )));
    }
    let r = rho.as_operator();
    let purity = r.matmul(r).trace().re;
    if (purity - T::one()).abs() > tol.normalization {
        return Err(Error::InvalidDensity {
            what: "rho".into(),
            reason: format!("not rank one: Tr(rho^2) = {}", purity.as_f64()),
        });
    }
    let mut out = Operator::zeros(rho.dim());
    let mut kept = T::zero();
    for (p, &w) in projectors.iter().zip(weights) {
        let branch = p.matmul(r).matmul(p);
        let norm = branch.trace().re;
        if norm < tol.branch_weight {
            continue;
        }
        out.axpy(cr(w / norm), &branch);
        kept += w;
    }
    if kept <= T::zero() {
        return Err(Error::InvalidProjectors(
            "weights vanish on every branch the state populates".into(),
        ));
    }
    Ok(DensityMatrix::new_unchecked(out.scale_real(kept.recip())))
}

/// Pooled least-squares fit of the per-step variance change against the
/// predicted drift -4 cos^2(f) V^2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRegression {
    /// sum(x y) / sum(x^2) with x the predicted drift and y = dV/dt; `None`
    /// when every predicted drift is zero.
    pub slope: Option<f64>,
    /// Standard error of the slope from the fit residuals.
    pub slope_stderr: Option<f64>,
    /// Mean of the empirical dV/dt over all samples.
    pub mean_rate: f64,
    pub mean_rate_stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    xy: f64,
    xx: f64,
    yy: f64,
    y: f64,
    n: usize,
}

/// Regresses the empirical dV/dt of every step of `m` trajectories on the
/// predicted drift -4 cos^2(f) V^2 with V the variance of `l`.
pub fn variance_drift_regression<T: Real>(
    u: &Unraveling<T>,
    l: &Operator<T>,
    f: f64,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    exec: Execution,
) -> Result<DriftRegression> {
    require_hermitian(l, &Tolerances::default())?;
    require_dim(psi0, l.dim())?;
    let c2 = 4.0 * f.cos() * f.cos();
    let per = map_trajectories(m, exec, |i| {
        let mut mo = Moments::default();
        let mut scratch = vec![czero(); l.dim()];
        let mut prev: Option<f64> = None;
        integrate_with(u, psi0, cfg, i, |_, _, psi| {
            let v = spread(psi, l, &mut scratch).as_f64();
            if let Some(v0) = prev {
                let x = -c2 * v0 * v0;
                let y = (v - v0) / cfg.dt;
                mo.xy += x * y;
                mo.xx += x * x;
                mo.yy += y * y;
                mo.y += y;
                mo.n += 1;
            }
            prev = Some(v);
        })?;
        Ok(mo)
    })?;
    let mut t = Moments::default();
    for mo in per {
        t.xy += mo.xy;
        t.xx += mo.xx;
        t.yy += mo.yy;
        t.y += mo.y;
        t.n += mo.n;
    }
    let n = t.n.max(1) as f64;
    let mean_rate = t.y / n;
    let var_y = (t.yy / n - mean_rate * mean_rate).max(0.0);
    let (slope, slope_stderr) = if t.xx > 0.0 {
        let b = t.xy / t.xx;
        let rss = (t.yy - 2.0 * b * t.xy + b * b * t.xx).max(0.0);
        let s2 = rss / (n - 1.0).max(1.0);
        (Some(b), Some((s2 / t.xx).sqrt()))
    } else {
        (None, None)
    };
    Ok(DriftRegression {
        slope,
        slope_stderr,
        mean_rate,
        mean_rate_stderr: (var_y / n).sqrt(),
        samples: t.n,
    })
}

/// Ensemble mean of V_t at the recorded steps of `cfg`.
pub fn mean_variance_curve<T: Real>(
    u: &Unraveling<T>,
    l: &Operator<T>,
    psi0: &StateVector<T>,
    cfg: &IntegrationConfig,
    m: usize,
    exec: Execution,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_hermitian(l, &Tolerances::default())?;
    require_dim(psi0, l.dim())?;
    cfg.validate()?;
    let steps = cfg.recorded_steps();
    let per = map_trajectories(m, exec, |i| {
        let mut scratch = vec![czero(); l.dim()];
        let mut vs = Vec::with_capacity(steps.len());
        let mut next = 0;
        integrate_with(u, psi0, cfg, i, |k, _, psi| {
            if next < steps.len() && steps[next] == k {
                vs.push(spread(psi, l, &mut scratch).as_f64());
                next += 1;
            }
        })?;
        Ok(vs)
    })?;
    let mut mean = vec![0.0; steps.len()];
    for vs in &per {
        for (a, v) in mean.iter_mut().zip(vs) {
            *a += v;
        }
    }
    let inv = 1.0 / m.max(1) as f64;
    mean.iter_mut().for_each(|a| *a *= inv);
    Ok((steps.iter().map(|&k| k as f64 * cfg.dt).collect(), mean))
}
