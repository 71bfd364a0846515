//! The deterministic side: Lindblad generators, their matrix form on
//! column-major vectorized density matrices, exact propagation, Choi
//! matrices, and the diagonalization of a GKS (Kossakowski) form.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::hilbert::{
    check_linear_independence_with, eigh, eigvalsh, expm, gell_mann_basis, DensityMatrix, Operator,
    MAX_DIM,
};
use crate::scalar::{c, cr, Real, C};
use crate::tolerance::Tolerances;

/// Hamiltonian plus Lindblad operators, all with unit rate.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel<T> {
    hamiltonian: Operator<T>,
    lindblad_ops: Vec<Operator<T>>,
    jump_sum: Operator<T>,
}

impl<T: Real> LindbladModel<T> {
    pub fn new(hamiltonian: Operator<T>, lindblad_ops: Vec<Operator<T>>) -> Result<Self> {
        Self::new_with(hamiltonian, lindblad_ops, &Tolerances::default())
    }

    /// Validates Hermiticity of H, matching dimensions, d <= 64 and linear
    /// independence of {1, L_1, ..., L_n}.
    pub fn new_with(
        hamiltonian: Operator<T>,
        lindblad_ops: Vec<Operator<T>>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let d = hamiltonian.dim();
        if d > MAX_DIM {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIM,
                found: d,
            });
        }
        let violation = hamiltonian.hermiticity_violation();
        if violation > tol.hermitian {
            return Err(Error::NotHermitian {
                what: "H".into(),
                violation: violation.as_f64(),
            });
        }
        for l in &lindblad_ops {
            if l.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: l.dim(),
                });
            }
        }
        if !lindblad_ops.is_empty() && !check_linear_independence_with(&lindblad_ops, true, tol) {
            return Err(Error::LinearlyDependent);
        }
        let jump_sum = jump_sum(&lindblad_ops, d);
        Ok(LindbladModel {
            hamiltonian,
            lindblad_ops,
            jump_sum,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator<T> {
        &self.hamiltonian
    }

    pub fn lindblad_ops(&self) -> &[Operator<T>] {
        &self.lindblad_ops
    }

    /// Number of Lindblad operators n.
    pub fn n_ops(&self) -> usize {
        self.lindblad_ops.len()
    }

    /// Sum over k of L_k^dagger L_k.
    pub fn jump_sum(&self) -> &Operator<T> {
        &self.jump_sum
    }

    /// All Lindblad operators Hermitian (the channel is then unital).
    pub fn is_hermitian_noise(&self, tol: T) -> bool {
        self.lindblad_ops.iter().all(|l| l.is_hermitian(tol))
    }
}

fn jump_sum<T: Real>(ops: &[Operator<T>], d: usize) -> Operator<T> {
    let mut s = Operator::zeros(d);
    for l in ops {
        s = &s + &l.dagger().matmul(l);
    }
    s
}

/// -i[H, rho] + sum_k (L_k rho L_k^dagger - 1/2 {L_k^dagger L_k, rho}).
pub fn lindblad_rhs<T: Real>(model: &LindbladModel<T>, rho: &Operator<T>) -> Result<Operator<T>> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho.dim(),
        });
    }
    let mut out = model
        .hamiltonian
        .commutator(rho)
        .scale(c(T::zero(), -T::one()));
    for l in &model.lindblad_ops {
        out = &out + &l.matmul(rho).matmul(&l.dagger());
    }
    out.axpy(cr(T::lit(-0.5)), &model.jump_sum.anticommutator(rho));
    Ok(out)
}

/// Matrix of a linear map on d x d matrices, acting on column-major
/// vectorizations: `vec(L(rho)) = matrix * vec(rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<T> {
    dim: usize,
    matrix: Operator<T>,
}

impl<T: Real> Superoperator<T> {
    pub fn from_matrix(dim: usize, matrix: Operator<T>) -> Result<Self> {
        if matrix.dim() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.dim(),
            });
        }
        Ok(Superoperator { dim, matrix })
    }

    /// Dimension d of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Operator<T> {
        &self.matrix
    }

    pub fn apply(&self, rho: &Operator<T>) -> Result<Operator<T>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let v = rho.vectorize();
        let mut out = vec![C::new(T::zero(), T::zero()); v.len()];
        self.matrix.apply_into(&v, &mut out);
        Operator::unvectorize(&out)
    }

    /// exp(t * self), the propagator of the generator `self`.
    pub fn exp(&self, t: T) -> Superoperator<T> {
        Superoperator {
            dim: self.dim,
            matrix: expm(&self.matrix.scale_real(t)),
        }
    }

    pub fn compose(&self, other: &Self) -> Superoperator<T> {
        Superoperator {
            dim: self.dim,
            matrix: self.matrix.matmul(&other.matrix),
        }
    }

    /// Choi matrix sum_ij |i><j| (x) Phi(|i><j|), block (i, j) in the
    /// outer index.
    pub fn choi(&self) -> Operator<T> {
        let d = self.dim;
        let mut choi = Operator::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                // column (i + d j) of the matrix is vec(Phi(|i><j|))
                let col = self.matrix.column(i + d * j);
                for a in 0..d {
                    for b in 0..d {
                        choi[(i * d + a, j * d + b)] = col[a + d * b];
                    }
                }
            }
        }
        choi
    }
}

/// Accumulates `rate * D[op]` into a superoperator matrix, where
/// D[A, B](rho) = A rho B^dagger - 1/2 {B^dagger A, rho}.
fn add_dissipator<T: Real>(m: &mut Operator<T>, rate: C<T>, a: &Operator<T>, b: &Operator<T>) {
    let d = a.dim();
    let id = Operator::identity(d);
    let bda = b.dagger().matmul(a);
    // vec(A X B^dagger) = (conj(B) (x) A) vec(X)
    let conj_b = Operator::from_fn(d, |i, j| b[(i, j)].conj());
    m.axpy(rate, &conj_b.kron(a));
    m.axpy(rate * cr(T::lit(-0.5)), &id.kron(&bda));
    m.axpy(rate * cr(T::lit(-0.5)), &bda.transpose().kron(&id));
}

fn hamiltonian_part<T: Real>(h: &Operator<T>) -> Operator<T> {
    let d = h.dim();
    let id = Operator::identity(d);
    // -i (1 (x) H - H^T (x) 1)
    (&id.kron(h) - &h.transpose().kron(&id)).scale(c(T::zero(), -T::one()))
}

/// Liouvillian of the model on column-major vectorized density matrices.
pub fn liouvillian<T: Real>(model: &LindbladModel<T>) -> Superoperator<T> {
    let d = model.dim();
    let mut m = hamiltonian_part(&model.hamiltonian);
    for l in &model.lindblad_ops {
        add_dissipator(&mut m, cr(T::one()), l, l);
    }
    Superoperator { dim: d, matrix: m }
}

/// unvec(exp(t L) vec(rho0)) via scaling-and-squaring.
pub fn propagate_exact<T: Real>(
    model: &LindbladModel<T>,
    rho0: &DensityMatrix<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::InvalidTime {
            t: t.as_f64(),
            constraint: ">= 0",
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    if t == T::zero() {
        return Ok(rho0.clone());
    }
    let out = liouvillian(model).exp(t).apply(rho0.as_operator())?;
    Ok(DensityMatrix::new_unchecked(out))
}

/// Choi matrix of exp(t L) for the model's generator.
pub fn choi_matrix<T: Real>(model: &LindbladModel<T>, t: T) -> Result<Operator<T>> {
    choi_of_generator(&liouvillian(model), t)
}

/// Choi matrix of exp(t G) for an arbitrary generator G.
pub fn choi_of_generator<T: Real>(generator: &Superoperator<T>, t: T) -> Result<Operator<T>> {
    if t <= T::zero() || t.is_nan() {
        return Err(Error::InvalidTime {
            t: t.as_f64(),
            constraint: "> 0",
        });
    }
    Ok(generator.exp(t).choi())
}

/// Minimum eigenvalue of a Choi matrix; nonnegative iff the map is CP.
pub fn choi_min_eigenvalue<T: Real>(choi: &Operator<T>) -> T {
    eigvalsh(choi)[0]
}

/// Master equation in pre-diagonal form with a fixed traceless orthonormal
/// operator basis F_i and a Hermitian coefficient matrix c_ij:
///
/// `-i[H, rho] + sum_ij c_ij (F_i rho F_j^dagger - 1/2 {F_j^dagger F_i, rho})`.
///
/// The coefficient matrix is not required to be positive.
#[derive(Clone, Debug, PartialEq)]
pub struct GksForm<T> {
    hamiltonian: Operator<T>,
    basis_ops: Vec<Operator<T>>,
    kossakowski: Operator<T>,
}

impl<T: Real> GksForm<T> {
    pub fn new(
        hamiltonian: Operator<T>,
        basis_ops: Vec<Operator<T>>,
        kossakowski: Operator<T>,
    ) -> Result<Self> {
        Self::new_with(hamiltonian, basis_ops, kossakowski, &Tolerances::default())
    }

    /// Accepts any orthonormal traceless family of at most d^2 - 1 basis
    /// operators; the full generalized Gell-Mann basis is the default.
    pub fn new_with(
        hamiltonian: Operator<T>,
        basis_ops: Vec<Operator<T>>,
        kossakowski: Operator<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let d = hamiltonian.dim();
        let hv = hamiltonian.hermiticity_violation();
        if hv > tol.hermitian {
            return Err(Error::NotHermitian {
                what: "H".into(),
                violation: hv.as_f64(),
            });
        }
        if basis_ops.is_empty() || basis_ops.len() > d * d - 1 {
            return Err(Error::InvalidGks(format!(
                "expected 1..={} basis operators, got {}",
                d * d - 1,
                basis_ops.len()
            )));
        }
        if kossakowski.dim() != basis_ops.len() {
            return Err(Error::DimensionMismatch {
                expected: basis_ops.len(),
                found: kossakowski.dim(),
            });
        }
        let orth_tol = T::lit(1e-10).max(tol.hermitian);
        for (i, fi) in basis_ops.iter().enumerate() {
            if fi.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: fi.dim(),
                });
            }
            if fi.trace().norm() > tol.hermitian {
                return Err(Error::InvalidGks(format!("basis operator {i} is not traceless")));
            }
            for (j, fj) in basis_ops.iter().enumerate() {
                let expected = if i == j { T::one() } else { T::zero() };
                if (fi.hs_inner(fj) - cr(expected)).norm() > orth_tol {
                    return Err(Error::InvalidGks(format!(
                        "basis operators {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        let kv = kossakowski.hermiticity_violation();
        if kv > tol.hermitian {
            return Err(Error::NotHermitian {
                what: "kossakowski".into(),
                violation: kv.as_f64(),
            });
        }
        Ok(GksForm {
            hamiltonian,
            basis_ops,
            kossakowski,
        })
    }

    /// Uses the normalized generalized Gell-Mann basis of dimension d.
    pub fn with_gell_mann(hamiltonian: Operator<T>, kossakowski: Operator<T>) -> Result<Self> {
        let d = hamiltonian.dim();
        Self::new(hamiltonian, gell_mann_basis(d), kossakowski)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator<T> {
        &self.hamiltonian
    }

    pub fn basis_ops(&self) -> &[Operator<T>] {
        &self.basis_ops
    }

    pub fn kossakowski(&self) -> &Operator<T> {
        &self.kossakowski
    }

    pub fn rhs(&self, rho: &Operator<T>) -> Result<Operator<T>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let mut out = self
            .hamiltonian
            .commutator(rho)
            .scale(c(T::zero(), -T::one()));
        for (i, fi) in self.basis_ops.iter().enumerate() {
            for (j, fj) in self.basis_ops.iter().enumerate() {
                let cij = self.kossakowski[(i, j)];
                if cij.norm() == T::zero() {
                    continue;
                }
                let fjd = fj.dagger();
                let jump = fi.matmul(rho).matmul(&fjd);
                let anti = fjd.matmul(fi).anticommutator(rho);
                out.axpy(cij, &jump);
                out.axpy(cij * cr(T::lit(-0.5)), &anti);
            }
        }
        Ok(out)
    }

    pub fn liouvillian(&self) -> Superoperator<T> {
        let d = self.dim();
        let mut m = hamiltonian_part(&self.hamiltonian);
        for (i, fi) in self.basis_ops.iter().enumerate() {
            for (j, fj) in self.basis_ops.iter().enumerate() {
                let cij = self.kossakowski[(i, j)];
                if cij.norm() != T::zero() {
                    add_dissipator(&mut m, cij, fi, fj);
                }
            }
        }
        Superoperator { dim: d, matrix: m }
    }
}

/// Diagonal form `-i[H, rho] + sum_k c_k D[L_k](rho)` with real rates that
/// may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalForm<T> {
    pub hamiltonian: Operator<T>,
    /// Descending.
    pub rates: Vec<T>,
    pub ops: Vec<Operator<T>>,
    /// Some rate is below `-cp_rate`.
    pub non_cp: bool,
}

impl<T: Real> DiagonalForm<T> {
    pub fn rhs(&self, rho: &Operator<T>) -> Result<Operator<T>> {
        let d = self.hamiltonian.dim();
        if rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.dim(),
            });
        }
        let mut out = self
            .hamiltonian
            .commutator(rho)
            .scale(c(T::zero(), -T::one()));
        for (&rate, l) in self.rates.iter().zip(&self.ops) {
            let ld = l.dagger();
            out.axpy(cr(rate), &l.matmul(rho).matmul(&ld));
            out.axpy(cr(rate * T::lit(-0.5)), &ld.matmul(l).anticommutator(rho));
        }
        Ok(out)
    }

    pub fn liouvillian(&self) -> Superoperator<T> {
        let d = self.hamiltonian.dim();
        let mut m = hamiltonian_part(&self.hamiltonian);
        for (&rate, l) in self.rates.iter().zip(&self.ops) {
            add_dissipator(&mut m, cr(rate), l, l);
        }
        Superoperator { dim: d, matrix: m }
    }

    /// Drops zero-rate channels and folds sqrt(rate) into the operators,
    /// producing a model with unit rates. Fails if any rate is negative.
    pub fn to_model(&self, tol: &Tolerances<T>) -> Result<LindbladModel<T>> {
        if self.non_cp {
            return Err(Error::InvalidGks("generator has negative rates".into()));
        }
        let ops = self
            .rates
            .iter()
            .zip(&self.ops)
            .filter(|(&r, _)| r > tol.cp_rate)
            .map(|(&r, l)| l.scale_real(r.sqrt()))
            .collect();
        LindbladModel::new_with(self.hamiltonian.clone(), ops, tol)
    }
}

/// Diagonalizes the coefficient matrix c = U diag(c_k) U^dagger and forms
/// L_k = sum_i U_ik F_i.
///
/// Rates are ordered descending; near-equal rates are ordered by the
/// lexicographic order of their eigenvectors' real parts.
pub fn gks_to_lindblad<T: Real>(g: &GksForm<T>) -> Result<DiagonalForm<T>> {
    gks_to_lindblad_with(g, &Tolerances::default())
}

pub fn gks_to_lindblad_with<T: Real>(g: &GksForm<T>, tol: &Tolerances<T>) -> Result<DiagonalForm<T>> {
    let kv = g.kossakowski.hermiticity_violation();
    if kv > tol.hermitian {
        return Err(Error::NotHermitian {
            what: "kossakowski".into(),
            violation: kv.as_f64(),
        });
    }
    let eig = eigh(&g.kossakowski);
    let m = eig.values.len();
    let tie = tol.cp_rate;
    let mut order: Vec<usize> = (0..m).rev().collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (eig.values[a], eig.values[b]);
        if (va - vb).abs() > tie {
            return vb.partial_cmp(&va).unwrap_or(Ordering::Equal);
        }
        let ca = eig.vector(a);
        let cb = eig.vector(b);
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let d = g.dim();
    let mut rates = Vec::with_capacity(m);
    let mut ops = Vec::with_capacity(m);
    for &k in &order {
        rates.push(eig.values[k]);
        let mut l = Operator::zeros(d);
        for (i, fi) in g.basis_ops.iter().enumerate() {
            l.axpy(eig.vectors[(i, k)], fi);
        }
        ops.push(l);
    }
    let non_cp = rates.iter().any(|&r| r < -tol.cp_rate);
    Ok(DiagonalForm {
        hamiltonian: g.hamiltonian.clone(),
        rates,
        ops,
        non_cp,
    })
}
