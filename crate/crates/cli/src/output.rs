//! Deterministic CSV/JSON emission: '.' decimal separator, scientific
//! notation for reals, LF line endings, header rows. Identical inputs
//! produce byte-identical files.

use crate::pipeline::PipelineResult;
use serde_json::json;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use weakmass_core::detector::CountRecord;
use weakmass_core::kd::KDSpectrum;

/// Canonical real formatting for CSV cells.
pub fn fmt(value: f64) -> String {
    if value.is_nan() {
        "nan".to_string()
    } else {
        format!("{value:e}")
    }
}

pub fn ensure_dir(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)
}

pub fn write_per_class_csv(result: &PipelineResult, path: &Path) -> io::Result<()> {
    let mut out = Vec::new();
    let with_counts = result.rows.iter().any(|r| r.counts_mean.is_some());
    if with_counts {
        writeln!(
            out,
            "n,p_n_first_order,p_n_exact,relative_shift,counts_mean"
        )?;
    } else {
        writeln!(out, "n,p_n_first_order,p_n_exact,relative_shift")?;
    }
    for row in &result.rows {
        if with_counts {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n,
                fmt(row.p_first),
                fmt(row.p_exact),
                fmt(row.relative_shift),
                row.counts_mean.map_or_else(String::new, fmt)
            )?;
        } else {
            writeln!(
                out,
                "{},{},{},{}",
                row.n,
                fmt(row.p_first),
                fmt(row.p_exact),
                fmt(row.relative_shift)
            )?;
        }
    }
    std::fs::write(path, out)
}

pub fn write_counts_csv(records: &[CountRecord], path: &Path) -> io::Result<()> {
    let mut out = Vec::new();
    writeln!(out, "trial,n,counts")?;
    for r in records {
        writeln!(out, "{},{},{}", r.trial, r.detector_n, fmt(r.counts))?;
    }
    std::fs::write(path, out)
}

pub fn write_spectrum_csv(spectrum: &KDSpectrum, path: &Path) -> io::Result<()> {
    let mut out = Vec::new();
    writeln!(out, "n,re_phi,im_phi,weight")?;
    for (n, phi) in spectrum.iter() {
        writeln!(
            out,
            "{},{},{},{}",
            n,
            fmt(phi.re),
            fmt(phi.im),
            fmt(phi.norm_sqr())
        )?;
    }
    std::fs::write(path, out)
}

pub fn summary_json(result: &PipelineResult) -> serde_json::Value {
    json!({
        "g0": result.g0,
        "omega_k_t": result.omega_k_t,
        "eta": result.eta,
        "n_max": result.n_max,
        "vartheta": result.vartheta,
        "omega_t": result.omega_t,
        "a_w": { "re": result.a_w.re, "im": result.a_w.im },
        "p_s0": result.p_s0,
        "p_s_first_order": result.p_s_first,
        "p_s_exact": if result.p_s_exact.is_nan() {
            serde_json::Value::Null
        } else {
            json!(result.p_s_exact)
        },
        "near_singular": result.a_w.near_singular,
        "breakdown": result.breakdown,
        "perturbative_ok": result.perturbative_ok,
        "fit": result.fit.map(|f| json!({
            "g0_hat": f.g0_hat,
            "stderr": f.stderr,
            "trials": f.trials,
            "detectability": f.stderr.is_finite() && f.significance() >= 3.0,
        })),
        "si": result.si_groups.map(|g| json!({
            "g0": g.g0,
            "omega_k_hz": g.omega_k_hz,
            "g0_t_s": g.g0_t_s,
            "g0_omega_k_t": g.g0_omega_k_t,
            "hbar_k_over_sigma": g.hbar_k_over_sigma,
            "exceeds_lifetime": g.exceeds_lifetime,
        })),
        "warnings": result.warnings,
    })
}

pub fn write_json(value: &serde_json::Value, path: &Path) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Resolve the output directory (default `weakmass_out`).
pub fn out_dir(explicit: Option<&str>) -> PathBuf {
    PathBuf::from(explicit.unwrap_or("weakmass_out"))
}
