use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};

use super::sweep::CellResult;

pub const POSTERIOR_HEADER: &str = "dataset,seed,N,prior_mode,k,probability";
pub const SUMMARY_HEADER: &str = "dataset,seed,N,mean_k,mode_k,sm_accept_rate";
pub const ERROR_HEADER: &str = "dataset,seed,N,prior_mode,error";

/// One row of the posterior table, with the cell-level summaries repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub seed: u64,
    pub n: usize,
    pub prior_mode: String,
    pub k: usize,
    pub probability: f64,
    pub mean_k: f64,
    pub mode_k: usize,
    pub sm_accept_rate: f64,
}

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing zeros
/// removed, exponent notation outside `1e-4 <= |x| < 10^digits`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn prob(p: f64) -> String {
    format_sig(p, 9)
}

/// Posterior rows of every successful cell, in result order and ascending `k`.
/// Zero-probability `k` beyond the largest supported one are omitted.
pub fn posterior_rows(results: &[CellResult]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for r in results {
        let Ok(out) = &r.outcome else { continue };
        let s = &out.summary;
        for (i, &p) in s.posterior_k.iter().enumerate() {
            rows.push(ResultRow {
                dataset: r.dataset.clone(),
                seed: r.seed,
                n: r.n,
                prior_mode: r.prior_mode.as_str().to_string(),
                k: i + 1,
                probability: p,
                mean_k: s.mean_k,
                mode_k: s.mode_k,
                sm_accept_rate: s.sm_accept_rate,
            });
        }
    }
    rows
}

pub fn posterior_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(POSTERIOR_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset,
            r.seed,
            r.n,
            r.prior_mode,
            r.k,
            prob(r.probability)
        );
    }
    out
}

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        let Ok(cell) = &r.outcome else { continue };
        let s = &cell.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset,
            r.seed,
            r.n,
            prob(s.mean_k),
            s.mode_k,
            prob(s.sm_accept_rate)
        );
    }
    out
}

/// Failed cells, or `None` when every cell succeeded.
pub fn errors_csv(results: &[CellResult]) -> Option<String> {
    let failed: Vec<_> = results
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| (r, e)))
        .collect();
    if failed.is_empty() {
        return None;
    }
    let mut out = String::from(ERROR_HEADER);
    out.push('\n');
    for (r, e) in failed {
        let msg = e.replace('"', "\"\"").replace(['\n', '\r'], " ");
        let _ = writeln!(
            out,
            "{},{},{},{},\"{msg}\"",
            r.dataset,
            r.seed,
            r.n,
            r.prior_mode.as_str()
        );
    }
    Some(out)
}

/// Posterior rows for an exact enumeration result, labeled `prior_mode = exact`.
pub fn exact_rows(dataset: &str, seed: u64, n: usize, posterior_k: &[f64]) -> Vec<ResultRow> {
    let (mean_k, mode_k) = super::sweep::moments(posterior_k);
    posterior_k
        .iter()
        .enumerate()
        .map(|(i, &p)| ResultRow {
            dataset: dataset.to_string(),
            seed,
            n,
            prior_mode: "exact".to_string(),
            k: i + 1,
            probability: p,
            mean_k,
            mode_k,
            sm_accept_rate: 0.0,
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| MfmError::io(path, e))
}

/// Writes `posterior_k.csv`, `summary.csv` and, if any cell failed, `errors.csv` into `dir`.
pub fn write_results(dir: &Path, results: &[CellResult]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MfmError::io(dir, e))?;
    write(&dir.join("posterior_k.csv"), &posterior_csv(&posterior_rows(results)))?;
    write(&dir.join("summary.csv"), &summary_csv(results))?;
    let errors = dir.join("errors.csv");
    match errors_csv(results) {
        Some(text) => write(&errors, &text)?,
        None if errors.exists() => fs::remove_file(&errors).map_err(|e| MfmError::io(&errors, e))?,
        None => {}
    }
    Ok(())
}

/// Writes any serializable record as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| MfmError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
