//! CSV exports of the training curves and the per-patch summary.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::pipeline::Trained;
use crate::{CliError, CliResult};

/// Singular value `sigma` of mode `mode` of port `port`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub port: usize,
    pub mode: usize,
    pub sigma: f64,
}

/// Largest relative max-norm error of the `terms`-term interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EimRow {
    pub patch: usize,
    /// `alpha` (diffusion tensor) or `force` (source density).
    pub coefficient: String,
    pub terms: usize,
    pub train_error: f64,
    pub test_error: f64,
}

/// Largest greedy indicator over the training set with `n` basis functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyRow {
    pub patch: usize,
    /// `mode<i>` for the `i`-th local lifting, `source` for the source bubble.
    pub space: String,
    pub n: usize,
    pub indicator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub patch: usize,
    pub m_alpha: usize,
    pub m_f: usize,
    /// Source bubble dimension.
    pub n_b: usize,
    pub n_mode_bubbles_max: usize,
    pub frame: usize,
}

pub fn sigma_rows(t: &Trained) -> Vec<SigmaRow> {
    t.ports
        .iter()
        .enumerate()
        .flat_map(|(port, p)| p.sigma.iter().enumerate().map(move |(mode, &sigma)| SigmaRow { port, mode, sigma }))
        .collect()
}

pub fn eim_rows(t: &Trained) -> Vec<EimRow> {
    let mut out = Vec::new();
    for (patch, (p, curves)) in t.eim.patches.iter().zip(&t.eim_test).enumerate() {
        for (name, basis, test) in [("alpha", &p.alpha, &curves.0), ("force", &p.force, &curves.1)] {
            for (i, (&train_error, &test_error)) in basis.history.iter().zip(test).enumerate() {
                out.push(EimRow {
                    patch,
                    coefficient: name.to_string(),
                    terms: i + 1,
                    train_error,
                    test_error,
                });
            }
        }
    }
    out
}

pub fn greedy_rows(t: &Trained) -> Vec<GreedyRow> {
    let mut out = Vec::new();
    for (patch, p) in t.scrbe.patches.iter().enumerate() {
        let last = p.traces.len().saturating_sub(1);
        for (i, tr) in p.traces.iter().enumerate() {
            let space = if i == last { "source".to_string() } else { format!("mode{i}") };
            for (n, &indicator) in tr.history.iter().enumerate() {
                out.push(GreedyRow {
                    patch,
                    space: space.clone(),
                    n,
                    indicator,
                });
            }
        }
    }
    out
}

pub fn summary_rows(t: &Trained) -> Vec<SummaryRow> {
    t.scrbe
        .patches
        .iter()
        .zip(t.eim.term_counts())
        .enumerate()
        .map(|(patch, (p, (m_alpha, m_f)))| SummaryRow {
            patch,
            m_alpha,
            m_f,
            n_b: p.tables.source_size,
            n_mode_bubbles_max: p.tables.mode_sizes.iter().copied().max().unwrap_or(0),
            frame: p.tables.frame_len(),
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        k => CliError::Parse(format!("{}: {:?}", path.display(), k)),
    }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> CliResult<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// Writes `port_sigma.csv`, `eim_decay.csv`, `greedy.csv` and `summary.csv`.
pub fn write_reports(dir: &Path, t: &Trained) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_csv(&dir.join("port_sigma.csv"), &sigma_rows(t))?;
    write_csv(&dir.join("eim_decay.csv"), &eim_rows(t))?;
    write_csv(&dir.join("greedy.csv"), &greedy_rows(t))?;
    write_csv(&dir.join("summary.csv"), &summary_rows(t))
}

/// Plain-text table of the per-patch sizes and the test-set accuracy.
pub fn summary_text(t: &Trained) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "patch  M_alpha  M_f  N_b  N_mode(max)  frame").unwrap();
    for r in summary_rows(t) {
        writeln!(
            s,
            "{:>5}  {:>7}  {:>3}  {:>3}  {:>11}  {:>5}",
            r.patch, r.m_alpha, r.m_f, r.n_b, r.n_mode_bubbles_max, r.frame
        )
        .unwrap();
    }
    let modes: Vec<String> = t.ports.iter().map(|p| p.len().to_string()).collect();
    writeln!(s, "port modes: {}", modes.join(" ")).unwrap();
    if !t.test_errors.is_empty() {
        let max = t.test_errors.iter().copied().fold(0.0, f64::max);
        writeln!(s, "test set: {} parameters, max relative X error {max:.3e}", t.test_errors.len()).unwrap();
    }
    s
}
