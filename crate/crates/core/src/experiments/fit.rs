use serde::{Deserialize, Serialize};

use super::{Scenario, SweepResult};
use crate::error::{OamError, Result};

/// Level at which the decay scale is read off a concurrence curve.
pub const HALF_LEVEL: f64 = 0.5;

/// `log10 Ω = slope · log10 q + intercept` fitted over crossing strengths `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub scenario: Scenario,
    /// `(q, Ω)` pairs in ascending q.
    pub samples: Vec<(u32, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// `10^intercept`.
    pub prefactor: f64,
}

impl DecayFit {
    pub fn is_strictly_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 > w[0].1)
    }

    /// Fitted `Ω` at `q`.
    pub fn predict(&self, q: f64) -> f64 {
        self.prefactor * q.powf(self.slope)
    }
}

/// Ordinary least squares `y = slope · x + intercept`.
///
/// Returns NaNs when fewer than two distinct abscissae are given.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// First strength at which the running minimum of the curve reaches 0.5,
/// linearly interpolated between the bracketing samples.
///
/// The running minimum makes the curve monotone, so Monte Carlo wiggles after
/// the first crossing cannot produce a second one.
pub fn half_crossing(strengths: &[f64], concurrence: &[f64]) -> Option<f64> {
    let mut envelope = f64::INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for (&s, &c) in strengths.iter().zip(concurrence) {
        envelope = envelope.min(c);
        if envelope <= HALF_LEVEL {
            return match prev {
                Some((s0, c0)) => Some(s0 + (c0 - HALF_LEVEL) / (c0 - envelope) * (s - s0)),
                None => Some(s),
            };
        }
        prev = Some((s, envelope));
    }
    None
}

/// Fits the power law through known crossings.
pub fn fit_crossings(scenario: Scenario, mut samples: Vec<(u32, f64)>) -> Result<DecayFit> {
    samples.sort_by_key(|s| s.0);
    if samples.len() < 2 {
        return Err(OamError::Domain("need crossings for at least two q values".into()));
    }
    if let Some(bad) = samples.iter().find(|s| s.0 == 0 || !(s.1 > 0.0)) {
        return Err(OamError::Domain(format!("invalid crossing {bad:?}")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(q, o)| ((q as f64).log10(), o.log10())).collect();
    let (slope, intercept) = least_squares(&pts);
    if !slope.is_finite() {
        return Err(OamError::Domain("q values must be distinct".into()));
    }
    Ok(DecayFit { scenario, samples, slope, intercept, prefactor: 10f64.powf(intercept) })
}

/// Extracts `Ω` for every q of a sweep and fits the power law.
pub fn fit_decay_scale(result: &SweepResult) -> Result<DecayFit> {
    let scenario = result.scenario();
    let mut samples = Vec::new();
    for &q in &result.config.q_values {
        let (s, c): (Vec<f64>, Vec<f64>) = result.curve(q).into_iter().unzip();
        let omega = half_crossing(&s, &c)
            .ok_or_else(|| OamError::Range(format!("({scenario}, q={q}): concurrence never falls to {HALF_LEVEL}")))?;
        samples.push((q, omega));
    }
    fit_crossings(scenario, samples)
}
