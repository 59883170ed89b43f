//! Plot-ready artifacts: CSV tables, JSON bundles and run manifests.
//!
//! CSV files use `.` as decimal separator, LF line endings and a header row.
//! Floats are emitted with [`CSV_SIGNIFICANT_DIGITS`] significant digits;
//! JSON keeps full precision.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{OamError, Result};
use crate::experiments::{CrosstalkMatrix, DecayFit, Scenario, SweepResult};
use crate::turbulence::{StructureFunction, STRUCTURE_COEFFICIENT};

pub const CSV_SIGNIFICANT_DIGITS: usize = 9;
pub const SWEEP_CSV_HEADER: &str = "scenario,q,strength,concurrence,stderr,N";

/// Rounds to `digits` significant digits and prints the shortest decimal
/// that reads back as the rounded value; exponent form outside `[1e-4, 1e16)`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v).parse().unwrap_or(v);
    // Normalize -0 so identical runs never differ by sign of zero.
    if rounded == 0.0 {
        return "0".to_string();
    }
    if (1e-4..1e16).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Hex SHA-256 prefix of the canonical JSON form of `config`.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(digest.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCsvRow {
    pub scenario: Scenario,
    pub q: u32,
    pub strength: f64,
    pub concurrence: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn sweep_csv(results: &[SweepResult]) -> String {
    sweep_csv_with_digits(results, CSV_SIGNIFICANT_DIGITS)
}

pub fn sweep_csv_with_digits(results: &[SweepResult], digits: usize) -> String {
    let sig = |v: f64| format_sig(v, digits);
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in results {
        for p in &r.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.scenario,
                p.q,
                sig(p.strength),
                sig(p.concurrence),
                sig(p.stderr),
                p.ensemble_size
            );
        }
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepCsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SWEEP_CSV_HEADER => {}
        other => return Err(OamError::Format(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| OamError::Format(format!("line {}: bad {what} in `{line}`", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad("column count"));
            }
            Ok(SweepCsvRow {
                scenario: f[0].parse().map_err(|_| bad("scenario"))?,
                q: f[1].parse().map_err(|_| bad("q"))?,
                strength: f[2].parse().map_err(|_| bad("strength"))?,
                concurrence: f[3].parse().map_err(|_| bad("concurrence"))?,
                stderr: f[4].parse().map_err(|_| bad("stderr"))?,
                n: f[5].parse().map_err(|_| bad("N"))?,
            })
        })
        .collect()
}

/// `r, D(r)` and the Kolmogorov reference `6.88 (r/r0)^{5/3}`.
pub fn structure_csv(sf: &StructureFunction, r0: f64, digits: usize) -> String {
    let sig = |v: f64| format_sig(v, digits);
    let mut out = String::from("r_m,d_theta_rad2,kolmogorov_rad2\n");
    for (r, d) in sf.profile().into_iter().skip(1) {
        let reference = if r0.is_finite() { STRUCTURE_COEFFICIENT * (r / r0).powf(5.0 / 3.0) } else { 0.0 };
        let _ = writeln!(out, "{},{},{}", sig(r), sig(d), sig(reference));
    }
    out
}

/// Crosstalk matrix as `l_A,l_B,probability` triples.
pub fn crosstalk_csv(m: &CrosstalkMatrix, digits: usize) -> String {
    let sig = |v: f64| format_sig(v, digits);
    let mut out = String::from("l_a,l_b,probability\n");
    for (i, row) in m.probabilities.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", m.ell(i), m.ell(j), sig(p));
        }
    }
    out
}

/// Everything a sweep produced, at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBundle {
    pub results: Vec<SweepResult>,
    #[serde(default)]
    pub fits: Vec<DecayFit>,
    /// Scenarios whose curves did not cross 0.5 for every q.
    #[serde(default)]
    pub fit_errors: Vec<String>,
}

/// Provenance of one run, sufficient to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, master_seed: u64) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_hash: config_hash(config)?,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            artifacts: Vec::new(),
            config: serde_json::to_value(config)?,
        })
    }
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<V: for<'de> Deserialize<'de>>(path: &Path) -> Result<V> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
