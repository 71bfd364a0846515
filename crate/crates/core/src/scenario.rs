//! TOML scenario files: a model, a freedom, an initial state and the
//! integration settings, validated on load.
//!
//! Complex numbers are always `[re, im]` pairs; operators are arrays of rows
//! of pairs.
//!
//! ```toml
//! dim = 2
//! hamiltonian = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
//! lindblad = [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]
//! freedom = "standard"
//! psi0 = [[0.7071067811865476, 0], [0.7071067811865476, 0]]
//! trajectories = 1000
//! checkpoints = [0.5, 1.0]
//!
//! [integration]
//! dt = 0.001
//! t_final = 1.0
//! seed = 7
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, StateVector};
use crate::lindblad::{GksForm, LindbladModel};
use crate::scalar::{c, Real};
use crate::sde::IntegrationConfig;
use crate::tolerance::Tolerances;
use crate::unraveling::{Fault, UnitaryFreedom, Unraveling};

fn default_freedom() -> String {
    "standard".into()
}

fn default_one() -> usize {
    1
}

fn is_default_fault(s: &str) -> bool {
    s == "none"
}

fn default_fault() -> String {
    "none".into()
}

/// Where artifacts go; paths are relative to the `--out` directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_prefix")]
    pub prefix: String,
    /// Also write the final state of every trajectory.
    #[serde(default)]
    pub final_states: bool,
}

fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            prefix: default_prefix(),
            final_states: false,
        }
    }
}

/// A GKS-form generator. Without `operators` the normalized generalized
/// Gell-Mann basis is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GksSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<Operator<f64>>,
    pub kossakowski: Operator<f64>,
    /// Times at which Choi matrices are evaluated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
}

/// Phase grid for the variance scan of a single Hermitian operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceScanSpec {
    pub phases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dim: usize,
    pub hamiltonian: Operator<f64>,
    #[serde(default)]
    pub lindblad: Vec<Operator<f64>>,
    #[serde(default = "default_freedom")]
    pub freedom: String,
    #[serde(default = "default_fault", skip_serializing_if = "is_default_fault")]
    pub fault: String,
    pub psi0: Vec<[f64; 2]>,
    #[serde(default = "default_one")]
    pub trajectories: usize,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    pub integration: IntegrationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gks: Option<GksSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_scan: Option<VarianceScanSpec>,
}

/// The objects a validated scenario describes.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub unraveling: Unraveling<T>,
    pub psi0: StateVector<T>,
    pub gks: Option<GksForm<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn model(&self) -> &LindbladModel<T> {
        self.unraveling.model()
    }
}

fn field_err(field: impl Into<String>, e: Error) -> Error {
    Error::scenario(field, e.to_string())
}

impl ScenarioFile {
    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.build::<f64>()?;
        Ok(file)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario is serializable")
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn config_hash(&self) -> String {
        content_hash(self.to_toml_string().as_bytes())
    }

    /// Builds and validates every object the scenario names, reporting the
    /// offending field on failure.
    pub fn build<T: Real>(&self) -> Result<Scenario<T>> {
        let tol = Tolerances::<T>::default();
        let d = self.dim;
        if d == 0 {
            return Err(Error::scenario("dim", "must be at least 1"));
        }
        let h: Operator<T> = self.hamiltonian.cast();
        if h.dim() != d {
            return Err(Error::scenario(
                "hamiltonian",
                format!("expected {d}x{d}, found {0}x{0}", h.dim()),
            ));
        }
        let v = h.hermiticity_violation();
        if v > tol.hermitian {
            return Err(Error::scenario(
                "hamiltonian",
                format!("not Hermitian: max |H - H^dagger| = {:.3e}", v.as_f64()),
            ));
        }
        let mut ops = Vec::with_capacity(self.lindblad.len());
        for (k, l) in self.lindblad.iter().enumerate() {
            if l.dim() != d {
                return Err(Error::scenario(
                    format!("lindblad[{k}]"),
                    format!("expected {d}x{d}, found {0}x{0}", l.dim()),
                ));
            }
            ops.push(l.cast());
        }
        let model = LindbladModel::new_with(h.clone(), ops, &tol).map_err(|e| field_err("lindblad", e))?;
        let freedom = UnitaryFreedom::parse(&self.freedom, model.n_ops()).map_err(|e| field_err("freedom", e))?;
        let fault = Fault::parse(&self.fault).map_err(|e| field_err("fault", e))?;
        let unraveling = Unraveling::new_with(model, freedom, &tol)
            .map_err(|e| field_err("freedom", e))?
            .with_fault(fault);
        if self.psi0.len() != d {
            return Err(Error::scenario(
                "psi0",
                format!("expected {d} amplitudes, found {}", self.psi0.len()),
            ));
        }
        let amps = self.psi0.iter().map(|[re, im]| c(T::lit(*re), T::lit(*im))).collect();
        let psi0 = StateVector::normalized(amps, &tol).map_err(|e| field_err("psi0", e))?;
        if self.trajectories == 0 {
            return Err(Error::scenario("trajectories", "must be at least 1"));
        }
        self.integration.validate().map_err(|e| field_err("integration", e))?;
        self.integration
            .checkpoint_steps(&self.checkpoints)
            .map_err(|e| field_err("checkpoints", e))?;
        let gks = match &self.gks {
            None => None,
            Some(g) => {
                let c: Operator<T> = g.kossakowski.cast();
                let form = if g.operators.is_empty() {
                    GksForm::with_gell_mann(h, c)
                } else {
                    GksForm::new_with(h, g.operators.iter().map(|o| o.cast()).collect(), c, &tol)
                };
                if let Some(t) = g.times.iter().find(|t| !(**t > 0.0)) {
                    return Err(Error::scenario("gks.times", format!("times must be positive, got {t}")));
                }
                Some(form.map_err(|e| field_err("gks", e))?)
            }
        };
        if let Some(scan) = &self.variance_scan {
            if self.lindblad.len() != 1 {
                return Err(Error::scenario(
                    "variance_scan",
                    format!("needs exactly one Lindblad operator, found {}", self.lindblad.len()),
                ));
            }
            if scan.phases.is_empty() {
                return Err(Error::scenario("variance_scan.phases", "empty phase grid"));
            }
        }
        Ok(Scenario { unraveling, psi0, gks })
    }

    /// Checkpoints if any were given, otherwise the final time.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        if self.checkpoints.is_empty() {
            vec![self.integration.n_steps() as f64 * self.integration.dt]
        } else {
            self.checkpoints.clone()
        }
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioFile::from_toml_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// SHA-256 of `bytes` as lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
