//! Drift and diffusion of every diffusive unravelling of a Lindblad model.
//!
//! For a model (H, L_1..L_n), a noise count N >= n and an N x N unitary u,
//! the operators are padded with zeros to length N and mixed,
//! `L'_k = sum_j u_kj L_j`. With `l_k = 1/2 <psi, (L'_k^dagger + L'_k) psi>`:
//!
//! ```text
//! B_k(psi) = L'_k psi - l_k psi
//! A(psi)   = -i H psi - 1/2 sum_k (L_k^dagger L_k psi - 2 conj(l_k) L'_k psi + |l_k|^2 psi)
//! ```
//!
//! The phase functionals that only re-phase psi are fixed to zero. Only
//! constant u is supported; a psi-dependent u_kj(psi) would slot into
//! [`Unraveling::rotated_ops`] as a per-state computation.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{
    complex_rows_to_pairs, outer_slices, pairs_to_complex_rows, Operator, StateVector,
};
use crate::lindblad::LindbladModel;
use crate::scalar::{c, cr, czero, Real, C};
use crate::tolerance::Tolerances;

/// The unitary mixing of the noise channels.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitaryFreedom<T> {
    /// Constant N x N unitary.
    ConstantUnitary(Operator<T>),
    /// Single operator multiplied by e^{i f}; equivalent to u = [e^{i f}].
    ScalarPhase(T),
}

impl<T: Real> UnitaryFreedom<T> {
    /// The standard collapse unravelling, u = 1_n.
    pub fn standard(n: usize) -> Self {
        UnitaryFreedom::ConstantUnitary(Operator::identity(n))
    }

    /// Complex-noise unravelling: N = 2n with
    /// `u = 1/sqrt(2) [[1, -i], [i, -1]]` applied blockwise, so that
    /// L'_k = L_k / sqrt(2) and L'_{n+k} = i L_k / sqrt(2).
    pub fn complex_noise(n: usize) -> Self {
        let s = T::FRAC_1_SQRT_2();
        let mut u = Operator::zeros(2 * n);
        for k in 0..n {
            u[(k, k)] = cr(s);
            u[(k, n + k)] = c(T::zero(), -s);
            u[(n + k, k)] = c(T::zero(), s);
            u[(n + k, n + k)] = cr(-s);
        }
        UnitaryFreedom::ConstantUnitary(u)
    }

    /// Linear unravelling u = i 1. For a single operator this is the scalar
    /// phase f = pi/2.
    pub fn linear_potential(n: usize) -> Self {
        if n == 1 {
            UnitaryFreedom::ScalarPhase(T::lit(FRAC_PI_2))
        } else {
            UnitaryFreedom::ConstantUnitary(Operator::identity(n).scale(c(T::zero(), T::one())))
        }
    }

    /// Parses a preset name for a model with `n` Lindblad operators:
    /// `standard`, `diosi-complex`, `linear-potential`, `phase:<f>`, or
    /// `unitary:<matrix>` with the matrix as nested `[re, im]` arrays.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "standard" => return Ok(Self::standard(n)),
            "diosi-complex" => return Ok(Self::complex_noise(n)),
            "linear-potential" => return Ok(Self::linear_potential(n)),
            _ => {}
        }
        if let Some(f) = spec.strip_prefix("phase:") {
            let f: f64 = f
                .trim()
                .parse()
                .map_err(|e| Error::InvalidFreedom(format!("bad phase `{f}`: {e}")))?;
            return Ok(UnitaryFreedom::ScalarPhase(T::lit(f)));
        }
        if let Some(m) = spec.strip_prefix("unitary:") {
            let pairs: Vec<Vec<[f64; 2]>> = serde_json::from_str(m.trim())
                .map_err(|e| Error::InvalidFreedom(format!("bad inline unitary: {e}")))?;
            let u = Operator::from_rows(&pairs_to_complex_rows(&pairs))
                .map_err(|e| Error::InvalidFreedom(format!("bad inline unitary: {e}")))?;
            return Ok(UnitaryFreedom::ConstantUnitary(u));
        }
        Err(Error::InvalidFreedom(format!("unknown freedom `{spec}`")))
    }

    /// Canonical string accepted by [`UnitaryFreedom::parse`].
    pub fn to_spec(&self) -> String {
        match self {
            UnitaryFreedom::ScalarPhase(f) => format!("phase:{}", f.as_f64()),
            UnitaryFreedom::ConstantUnitary(u) => format!(
                "unitary:{}",
                serde_json::to_string(&complex_rows_to_pairs(&u.rows())).expect("serializable")
            ),
        }
    }

    /// Number of real Wiener processes N.
    pub fn noise_count(&self) -> usize {
        match self {
            UnitaryFreedom::ConstantUnitary(u) => u.dim(),
            UnitaryFreedom::ScalarPhase(_) => 1,
        }
    }

    /// The equivalent N x N unitary.
    pub fn matrix(&self) -> Operator<T> {
        match self {
            UnitaryFreedom::ConstantUnitary(u) => u.clone(),
            UnitaryFreedom::ScalarPhase(f) => Operator::diagonal(&[c(f.cos(), f.sin())]),
        }
    }
}

/// Deliberate violations of the drift/diffusion construction, used to check
/// that the verification harness detects non-conforming equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Fault {
    #[default]
    None,
    /// Omits the -1/2 |l_k|^2 psi term from the drift.
    DropEllSquared,
    /// Uses l_k = 0 in the diffusion but keeps it in the drift.
    ZeroEllInDiffusion,
}

impl Fault {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fault::None),
            "drop-ell-squared" => Ok(Fault::DropEllSquared),
            "zero-ell-in-diffusion" => Ok(Fault::ZeroEllInDiffusion),
            other => Err(Error::InvalidFreedom(format!("unknown fault `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Fault::None => "none",
            Fault::DropEllSquared => "drop-ell-squared",
            Fault::ZeroEllInDiffusion => "zero-ell-in-diffusion",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A model together with a unitary freedom.
#[derive(Clone, Debug)]
pub struct Unraveling<T> {
    model: LindbladModel<T>,
    freedom: UnitaryFreedom<T>,
    padded_ops: Vec<Operator<T>>,
    rotated: Vec<Operator<T>>,
    minus_i_h: Operator<T>,
    fault: Fault,
}

impl<T: Real> Unraveling<T> {
    pub fn new(model: LindbladModel<T>, freedom: UnitaryFreedom<T>) -> Result<Self> {
        Self::new_with(model, freedom, &Tolerances::default())
    }

    pub fn new_with(
        model: LindbladModel<T>,
        freedom: UnitaryFreedom<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let n = model.n_ops();
        let d = model.dim();
        let rotated = match &freedom {
            UnitaryFreedom::ScalarPhase(f) => {
                if n != 1 {
                    return Err(Error::InvalidFreedom(format!(
                        "scalar phase requires n=1, model has n={n}"
                    )));
                }
                vec![model.lindblad_ops()[0].scale(c(f.cos(), f.sin()))]
            }
            UnitaryFreedom::ConstantUnitary(u) => {
                let big_n = u.dim();
                if big_n < n {
                    return Err(Error::InvalidFreedom(format!(
                        "noise count N={big_n} is smaller than n={n}"
                    )));
                }
                let v = u.unitarity_violation();
                if v > tol.unitary {
                    return Err(Error::NotUnitary {
                        what: "u".into(),
                        violation: v.as_f64(),
                    });
                }
                (0..big_n)
                    .map(|k| {
                        let mut l = Operator::zeros(d);
                        for (j, lj) in model.lindblad_ops().iter().enumerate() {
                            l.axpy(u[(k, j)], lj);
                        }
                        l
                    })
                    .collect()
            }
        };
        let big_n = freedom.noise_count();
        let mut padded_ops = model.lindblad_ops().to_vec();
        padded_ops.resize(big_n, Operator::zeros(d));
        let minus_i_h = model.hamiltonian().scale(c(T::zero(), -T::one()));
        Ok(Unraveling {
            model,
            freedom,
            padded_ops,
            rotated,
            minus_i_h,
            fault: Fault::None,
        })
    }

    /// Same unravelling with a deliberate construction fault.
    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = fault;
        self
    }

    pub fn fault(&self) -> Fault {
        self.fault
    }

    pub fn model(&self) -> &LindbladModel<T> {
        &self.model
    }

    pub fn freedom(&self) -> &UnitaryFreedom<T> {
        &self.freedom
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// N.
    pub fn noise_count(&self) -> usize {
        self.rotated.len()
    }

    /// L_1..L_n followed by N - n zero operators.
    pub fn padded_ops(&self) -> &[Operator<T>] {
        &self.padded_ops
    }

    /// L'_k = sum_j u_kj L_j.
    pub fn rotated_ops(&self) -> &[Operator<T>] {
        &self.rotated
    }

    /// Evaluates drift and diffusion at `psi` into caller-owned buffers.
    ///
    /// `drift` has length d; `diffusion` holds N consecutive length-d blocks;
    /// `ell` has length N. `scratch` must have length d.
    ///
    /// l_k is evaluated as Re<psi, L'_k psi> / <psi, psi>, which equals the
    /// unit-state definition and keeps A and B homogeneous of degree one in
    /// psi, so unrenormalized integration does not feed norm errors back
    /// into the nonlinearity.
    pub(crate) fn evaluate_into(
        &self,
        psi: &[C<T>],
        drift: &mut [C<T>],
        diffusion: &mut [C<T>],
        ell: &mut [C<T>],
        scratch: &mut [C<T>],
    ) {
        let d = psi.len();
        self.minus_i_h.apply_into(psi, drift);
        self.model.jump_sum().apply_into(psi, scratch);
        let half = T::lit(0.5);
        for (a, s) in drift.iter_mut().zip(scratch.iter()) {
            *a -= *s * half;
        }
        let norm_sqr: T = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut ell_sq_sum = T::zero();
        for (k, lk) in self.rotated.iter().enumerate() {
            let b = &mut diffusion[k * d..(k + 1) * d];
            lk.apply_into(psi, b);
            // 1/2 <psi, (L^dagger + L) psi> = Re <psi, L psi> on unit states
            let x = psi
                .iter()
                .zip(b.iter())
                .fold(czero::<T>(), |acc, (p, q)| acc + p.conj() * q);
            let l = cr(x.re / norm_sqr);
            ell[k] = l;
            ell_sq_sum += l.norm_sqr();
            let lc = l.conj();
            for (a, q) in drift.iter_mut().zip(b.iter()) {
                *a += lc * q;
            }
            if self.fault != Fault::ZeroEllInDiffusion {
                for (q, p) in b.iter_mut().zip(psi) {
                    *q -= l * p;
                }
            }
        }
        if self.fault != Fault::DropEllSquared {
            let s = ell_sq_sum * half;
            for (a, p) in drift.iter_mut().zip(psi) {
                *a -= *p * s;
            }
        }
    }

    /// Drift, diffusion vectors, and l_k at `psi`.
    pub fn drift_diffusion(&self, psi: &StateVector<T>) -> Result<DriftDiffusion<T>> {
        let d = self.dim();
        if psi.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: psi.dim(),
            });
        }
        let big_n = self.noise_count();
        let mut drift = vec![czero(); d];
        let mut diffusion = vec![czero(); d * big_n];
        let mut ell = vec![czero(); big_n];
        let mut scratch = vec![czero(); d];
        self.evaluate_into(psi.amplitudes(), &mut drift, &mut diffusion, &mut ell, &mut scratch);
        Ok(DriftDiffusion {
            drift: StateVector::from_vec_unchecked(drift),
            diffusion: diffusion
                .chunks(d.max(1))
                .take(big_n)
                .map(|ch| StateVector::from_vec_unchecked(ch.to_vec()))
                .collect(),
            ell,
        })
    }

    /// |A><psi| + |psi><A| + sum_k |B_k><B_k|, the instantaneous change of
    /// E|psi><psi| started from `psi`.
    pub fn one_step_generator(&self, psi: &StateVector<T>) -> Result<Operator<T>> {
        let dd = self.drift_diffusion(psi)?;
        let a = dd.drift.amplitudes();
        let p = psi.amplitudes();
        let mut g = &outer_slices(a, p) + &outer_slices(p, a);
        for b in &dd.diffusion {
            g = &g + &outer_slices(b.amplitudes(), b.amplitudes());
        }
        Ok(g)
    }
}

/// Drift vector A(psi), diffusion vectors B_k(psi), and l_k at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftDiffusion<T> {
    pub drift: StateVector<T>,
    pub diffusion: Vec<StateVector<T>>,
    pub ell: Vec<C<T>>,
}

/// L'_k for every k.
pub fn rotated_ops<T: Real>(u: &Unraveling<T>) -> Vec<Operator<T>> {
    u.rotated_ops().to_vec()
}

/// 1/2 <psi, (L^dagger + L) psi>.
pub fn ell<T: Real>(psi: &StateVector<T>, lk: &Operator<T>) -> Result<C<T>> {
    let lpsi = lk.apply(psi)?;
    let ldpsi = lk.dagger().apply(psi)?;
    Ok((psi.inner(&ldpsi) + psi.inner(&lpsi)) * cr(T::lit(0.5)))
}

pub fn diffusion_vectors<T: Real>(u: &Unraveling<T>, psi: &StateVector<T>) -> Result<Vec<StateVector<T>>> {
    Ok(u.drift_diffusion(psi)?.diffusion)
}

pub fn drift_vector<T: Real>(u: &Unraveling<T>, psi: &StateVector<T>) -> Result<StateVector<T>> {
    Ok(u.drift_diffusion(psi)?.drift)
}
