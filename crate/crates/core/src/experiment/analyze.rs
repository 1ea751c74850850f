//! Eigenvalue / fixed-point table of the six prediction algorithms.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, PolicyMode};
use super::evaluation::evaluation_setting;
use crate::analysis::{key_matrix_from, AnalysisSetting};
use crate::error::{Error, Result};
use crate::prediction::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub algorithm: String,
    pub policy_mode: String,
    /// Smallest eigenvalue of `(A + A⊤)/2`; NaN when `A` could not be formed.
    pub min_sym_eig: f64,
    /// `‖A⁻¹b‖₂`; NaN when `A` is singular.
    pub fixed_point_norm: f64,
    pub note: String,
}

pub const CSV_HEADER: &str = "algorithm,policy_mode,min_sym_eig,fixed_point_norm,note";

/// Rows for every algorithm in `algorithms`, in that order.
pub fn analyze_setting(setting: &AnalysisSetting, mode: &str, algorithms: &[Algorithm]) -> Result<Vec<AnalyzeRow>> {
    let comps = setting.components()?;
    let rows = algorithms
        .iter()
        .map(|&alg| {
            let mut row = AnalyzeRow {
                algorithm: alg.name().to_string(),
                policy_mode: mode.to_string(),
                min_sym_eig: f64::NAN,
                fixed_point_norm: f64::NAN,
                note: String::new(),
            };
            match key_matrix_from(&comps, alg) {
                Ok(k) => {
                    row.min_sym_eig = k.min_sym_eig;
                    if let Some(theta) = &k.fixed_point {
                        row.fixed_point_norm = theta.norm();
                    } else {
                        row.note = "singular key matrix".into();
                    }
                    if k.rank_deficient {
                        row.note = "warning: features are rank deficient".into();
                    }
                }
                Err(e) => row.note = format!("warning: {e}"),
            }
            row
        })
        .collect();
    Ok(rows)
}

/// The table for the configured task and policy mode.
pub fn run_analyze(config: &ExperimentConfig) -> Result<Vec<AnalyzeRow>> {
    let setting = evaluation_setting(config)?;
    let mode = match config.policy_mode {
        PolicyMode::On => "on",
        PolicyMode::Off => "off",
    };
    analyze_setting(&setting, mode, &config.prediction_algorithms()?)
}

/// Fixed-width text rendering.
pub fn render_table(rows: &[AnalyzeRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:<6} {:>14} {:>16}  note", "algo", "policy", "min_sym_eig", "|theta*|");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<8} {:<6} {:>14.8} {:>16.6e}  {}",
            r.algorithm, r.policy_mode, r.min_sym_eig, r.fixed_point_norm, r.note
        );
    }
    out
}

pub fn write_analyze_csv(rows: &[AnalyzeRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
