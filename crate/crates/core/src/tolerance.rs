//! Every numerical threshold used by predicates and checks, in one record.

use crate::scalar::Real;

/// Tolerance configuration.
///
/// The defaults are the contract values for `f64`. For lower-precision
/// scalars each threshold is floored at `8 * epsilon` so that the same
/// predicates remain meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Entrywise max |M - M^dagger| for Hermitian-tagged operators.
    pub hermitian: T,
    /// |norm^2 - 1| for states accepted as normalized.
    pub normalization: T,
    /// |Tr(rho) - 1| for density matrices.
    pub trace: T,
    /// Minimum eigenvalue floor for positive semidefinite checks (a magnitude).
    pub psd: T,
    /// Entrywise max |U^dagger U - 1| for unitaries and projector algebra.
    pub unitary: T,
    /// Gram-matrix eigenvalue ratio below which operators count as dependent.
    pub independence_ratio: T,
    /// Rates below `-cp_rate` flag a non-CP generator.
    pub cp_rate: T,
    /// Eigenvalues closer than this belong to the same spectral sector.
    pub spectral_gap: T,
    /// Squared projector weight below which a collapse branch is skipped.
    pub branch_weight: T,
    /// Pre-renormalization norm below which a step is treated as blow-up.
    pub blow_up_norm: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let floor = T::lit(8.0) * T::epsilon();
        let f = |x: f64| T::lit(x).max(floor);
        Tolerances {
            hermitian: f(1e-12),
            normalization: f(1e-9),
            trace: f(1e-12),
            psd: f(1e-10),
            unitary: f(1e-12),
            independence_ratio: f(1e-10),
            cp_rate: f(1e-10),
            spectral_gap: f(1e-9),
            branch_weight: f(1e-14),
            blow_up_norm: T::lit(1e-6),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_defaults_are_contract_values() {
        let t = Tolerances::<f64>::default();
        assert_eq!(t.hermitian, 1e-12);
        assert_eq!(t.normalization, 1e-9);
        assert_eq!(t.psd, 1e-10);
        assert_eq!(t.branch_weight, 1e-14);
    }

    #[test]
    fn f32_defaults_are_floored() {
        let t = Tolerances::<f32>::default();
        assert!(t.hermitian > f32::EPSILON);
        assert!(t.branch_weight > 0.0);
    }
}
