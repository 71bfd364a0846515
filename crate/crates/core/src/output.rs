//! CSV and JSON artifacts.
//!
//! Every CSV file starts with `# config_hash=<hex> seed=<u64>`; every JSON
//! document carries the same two values as top-level keys. Numbers are
//! written with 17 significant digits so doubles round-trip exactly.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::hilbert::{DensityMatrix, StateVector};
use crate::scalar::Real;
use crate::sde::{EnsembleEstimate, Trajectory};

/// Provenance stamped into every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rectangular table of numbers with named columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, stamp: &Stamp) -> Result<()> {
        writeln!(w, "# config_hash={} seed={}", stamp.config_hash, stamp.seed)?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt17(*x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, stamp: &Stamp) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f, stamp)?;
        f.flush()?;
        Ok(())
    }
}

fn amplitude_columns(d: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 0..d {
        cols.push(format!("psi{i}_re"));
        cols.push(format!("psi{i}_im"));
    }
    cols
}

fn state_row<T: Real>(t: f64, psi: &StateVector<T>) -> Vec<f64> {
    let mut row = vec![t];
    for z in psi.amplitudes() {
        row.push(z.re.as_f64());
        row.push(z.im.as_f64());
    }
    row
}

/// One row per recorded time: `t, psi0_re, psi0_im, ...`.
pub fn trajectory_table<T: Real>(traj: &Trajectory<T>) -> Table {
    let d = traj.states.first().map_or(0, |s| s.dim());
    let mut table = Table::new(amplitude_columns(d));
    for (t, psi) in traj.times.iter().zip(&traj.states) {
        table.push(state_row(*t, psi));
    }
    table
}

fn density_columns(d: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            cols.push(format!("rho{i}{j}_re"));
            cols.push(format!("rho{i}{j}_im"));
        }
    }
    cols
}

fn density_row<T: Real>(t: f64, rho: &DensityMatrix<T>) -> Vec<f64> {
    let mut row = vec![t];
    for z in rho.as_operator().entries() {
        row.push(z.re.as_f64());
        row.push(z.im.as_f64());
    }
    row
}

/// One row per recorded time: `t, rho00_re, rho00_im, ..., stderr`.
pub fn ensemble_table<T: Real>(est: &EnsembleEstimate<T>) -> Table {
    let d = est.rho_hat.first().map_or(0, |r| r.dim());
    let mut cols = density_columns(d);
    cols.push("stderr".into());
    let mut table = Table::new(cols);
    for ((t, rho), se) in est.times.iter().zip(&est.rho_hat).zip(&est.stderr) {
        let mut row = density_row(*t, rho);
        row.push(*se);
        table.push(row);
    }
    table
}

/// Density matrices at the given times, e.g. exact propagation.
pub fn density_table<T: Real>(times: &[f64], rhos: &[DensityMatrix<T>]) -> Table {
    let d = rhos.first().map_or(0, |r| r.dim());
    let mut table = Table::new(density_columns(d));
    for (t, rho) in times.iter().zip(rhos) {
        table.push(density_row(*t, rho));
    }
    table
}

#[derive(Serialize)]
struct Stamped<'a, B: Serialize> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: &'a B,
}

/// Pretty JSON of `body` with the stamp merged in as top-level keys.
/// `body` must serialize as a map.
pub fn to_stamped_json<B: Serialize>(body: &B, stamp: &Stamp) -> Result<String> {
    let doc = Stamped {
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        body,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| crate::Error::Io(e.to_string()))
}

pub fn save_json<B: Serialize>(path: impl AsRef<Path>, body: &B, stamp: &Stamp) -> Result<()> {
    let mut text = to_stamped_json(body, stamp)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
