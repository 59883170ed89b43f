use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PhaseScreen;
use crate::error::{OamError, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;

/// Ensemble + spatial estimate of `D(r) = ⟨[θ(X + r) − θ(X)]²⟩` at integer
/// sample lags along both grid axes (the screens are isotropic, so the two
/// axes are pooled into one radial profile).
///
/// Only pairs fully inside the window are used, so the estimator is valid for
/// non-periodic screens. Partial accumulators merge associatively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunction {
    pitch: f64,
    sums: Vec<f64>,
    counts: Vec<u64>,
    screens: usize,
}

impl StructureFunction {
    pub fn new(grid: &GridSpec, max_lag: usize) -> Result<Self> {
        if max_lag == 0 || max_lag >= grid.n_samples() {
            return Err(OamError::Domain(format!("max lag must lie in 1..{}, got {max_lag}", grid.n_samples())));
        }
        Ok(Self { pitch: grid.pitch(), sums: vec![0.0; max_lag + 1], counts: vec![0; max_lag + 1], screens: 0 })
    }

    pub fn max_lag(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn screens(&self) -> usize {
        self.screens
    }

    pub fn add_screen<T: Real>(&mut self, screen: &PhaseScreen<T>) -> Result<()> {
        let grid = screen.grid();
        if (grid.pitch() - self.pitch).abs() > 1e-12 * self.pitch || grid.n_samples() <= self.max_lag() {
            return Err(OamError::Dimension("screen grid does not match the accumulator".into()));
        }
        let n = grid.n_samples();
        let th: Vec<f64> = screen.theta().iter().map(|v| v.to_f64_lossy()).collect();
        for lag in 1..=self.max_lag() {
            let mut acc = 0.0;
            for row in th.chunks_exact(n) {
                acc += row.iter().zip(&row[lag..]).map(|(a, b)| (b - a).powi(2)).sum::<f64>();
            }
            for iy in 0..n - lag {
                let (top, bottom) = (&th[iy * n..(iy + 1) * n], &th[(iy + lag) * n..(iy + lag + 1) * n]);
                acc += top.iter().zip(bottom).map(|(a, b)| (b - a).powi(2)).sum::<f64>();
            }
            self.sums[lag] += acc;
            self.counts[lag] += 2 * (n * (n - lag)) as u64;
        }
        self.screens += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &StructureFunction) -> Result<()> {
        if self.sums.len() != other.sums.len() || (self.pitch - other.pitch).abs() > 1e-12 * self.pitch {
            return Err(OamError::Dimension("cannot merge structure functions of different shape".into()));
        }
        self.sums.iter_mut().zip(&other.sums).for_each(|(a, b)| *a += b);
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.screens += other.screens;
        Ok(())
    }

    /// `(r, D(r))` pairs for lags `0..=max_lag`, with `D(0) = 0`.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        self.sums
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(lag, (&s, &c))| (lag as f64 * self.pitch, if c == 0 { 0.0 } else { s / c as f64 }))
            .collect()
    }

    /// Least-squares slope of `log D` against `log r` over `[r_min, r_max]`.
    pub fn log_slope(&self, r_min: f64, r_max: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .profile()
            .into_iter()
            .filter(|&(r, d)| r > 0.0 && r >= r_min * (1.0 - 1e-9) && r <= r_max * (1.0 + 1e-9) && d > 0.0)
            .map(|(r, d)| (r.ln(), d.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(OamError::Range(format!("fewer than two positive lags in [{r_min}, {r_max}]")));
        }
        Ok(crate::experiments::least_squares(&pts).0)
    }
}

/// Structure function of an ensemble, accumulated in parallel and merged in
/// input order.
pub fn estimate_structure_function<T: Real>(screens: &[PhaseScreen<T>], max_lag: usize) -> Result<StructureFunction> {
    if screens.len() < 2 {
        return Err(OamError::Domain(format!("need at least two screens, got {}", screens.len())));
    }
    let grid = *screens[0].grid();
    if screens.iter().any(|s| s.grid() != &grid) {
        return Err(OamError::Dimension("screens do not share a grid".into()));
    }
    let partials: Vec<StructureFunction> = screens
        .par_iter()
        .map(|s| {
            let mut acc = StructureFunction::new(&grid, max_lag)?;
            acc.add_screen(s)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = StructureFunction::new(&grid, max_lag)?;
    for p in &partials {
        total.merge(p)?;
    }
    Ok(total)
}
