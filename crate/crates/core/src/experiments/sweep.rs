use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projector::{transmission, QubitProjector};
use super::{CrosstalkMatrix, Scenario, SweepConfig, BOOTSTRAP_RESAMPLES};
use crate::error::{OamError, Result};
use crate::quantum::{
    project_single_photon, project_two_photon, DensityAccumulator, MatrixDoc, ModalCoefficients, ProjectedPureState,
    TwoQubitDensityMatrix,
};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed};
use crate::turbulence::{PhaseScreen, ScreenGenerator, ScreenTarget};

pub(crate) const SCREEN_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = 2;

/// One `(scenario, q, strength)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scenario: Scenario,
    pub q: u32,
    pub strength: f64,
    pub concurrence: f64,
    /// Bootstrap standard error of the concurrence.
    pub stderr: f64,
    pub ensemble_size: usize,
    /// Kish effective sample size of the post-selected ensemble.
    pub n_effective: f64,
    pub density: MatrixDoc,
}

impl SweepPoint {
    pub fn density_matrix(&self) -> Result<TwoQubitDensityMatrix<f64>> {
        TwoQubitDensityMatrix::from_doc(&self.density)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by q, then strength.
    pub points: Vec<SweepPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crosstalk: Vec<CrosstalkMatrix>,
}

impl SweepResult {
    pub fn scenario(&self) -> Scenario {
        self.config.scenario
    }

    pub fn points_for(&self, q: u32) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(move |p| p.q == q)
    }

    /// `(strength, concurrence)` for one q.
    pub fn curve(&self, q: u32) -> Vec<(f64, f64)> {
        self.points_for(q).map(|p| (p.strength, p.concurrence)).collect()
    }

    pub fn point(&self, q: u32, strength: f64) -> Option<&SweepPoint> {
        self.points_for(q).find(|p| p.strength == strength)
    }
}

/// Runs a sweep on the current rayon pool.
///
/// Every ensemble member draws its screens from a seed derived from the
/// master seed, the strength and the member index, so all q values see the
/// same turbulence and the output does not depend on scheduling.
pub fn run_sweep<T: Real>(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let generator = ScreenGenerator::<T>::new(grid, cfg.spectrum, cfg.subharmonic_levels)?;
    let projectors = cfg
        .q_values
        .iter()
        .map(|&q| QubitProjector::<T>::new(q, &grid, cfg.w0, cfg.wavelength, cfg.dz))
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.ensemble_size;
    let mut by_q: Vec<Vec<SweepPoint>> = vec![Vec::with_capacity(cfg.strengths.len()); projectors.len()];
    for &strength in &cfg.strengths {
        let states = if strength == 0.0 {
            vec![vec![ProjectedPureState::bell(); projectors.len()]; n]
        } else {
            ensemble_states(cfg, &generator, &projectors, strength)?
        };
        for (qi, proj) in projectors.iter().enumerate() {
            let column: Vec<ProjectedPureState<f64>> = states.iter().map(|m| m[qi]).collect();
            let mut acc = DensityAccumulator::new();
            column.iter().for_each(|s| acc.add(s));
            let rho = acc.finish().map_err(|e| at_strength(e, cfg.scenario, proj.q(), strength))?;
            let boot_seed = derive_seed(cfg.master_seed, &[BOOTSTRAP_STREAM, strength.to_bits(), proj.q() as u64]);
            by_q[qi].push(SweepPoint {
                scenario: cfg.scenario,
                q: proj.q(),
                strength,
                concurrence: rho.concurrence(),
                stderr: bootstrap_stderr(&column, boot_seed),
                ensemble_size: n,
                n_effective: kish(&column),
                density: rho.to_doc(),
            });
        }
    }
    Ok(SweepResult { config: cfg.clone(), points: by_q.into_iter().flatten().collect(), crosstalk: Vec::new() })
}

/// Runs a sweep on a dedicated pool of `workers` threads (0 = rayon default).
pub fn run_sweep_with_workers<T: Real>(cfg: &SweepConfig, workers: usize) -> Result<SweepResult> {
    with_workers(workers, || run_sweep::<T>(cfg))?
}

/// Runs `f` inside a dedicated pool of `workers` threads (0 = rayon default).
/// Results do not depend on the pool size.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| OamError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

fn at_strength(e: OamError, scenario: Scenario, q: u32, strength: f64) -> OamError {
    match e {
        OamError::Resolution(m) => OamError::Resolution(format!("{scenario}, strength {strength}: {m}")),
        OamError::Degenerate(m) => OamError::Degenerate(format!("{scenario}, q={q}, strength {strength}: {m}")),
        other => other,
    }
}

/// Draws screen pairs for one strength. Returns one row per ensemble member,
/// holding that member's projected state for every projector.
///
/// Single-photon members use the two screens of a pair as consecutive
/// members; two-photon members send the pair through arms A and B.
fn ensemble_states<T: Real>(
    cfg: &SweepConfig,
    generator: &ScreenGenerator<T>,
    projectors: &[QubitProjector<T>],
    strength: f64,
) -> Result<Vec<Vec<ProjectedPureState<f64>>>> {
    let n = cfg.ensemble_size;
    let target = ScreenTarget::from_strength(cfg.w0, strength);
    let pairs = match cfg.scenario {
        Scenario::SinglePhoton => n.div_ceil(2),
        Scenario::TwoPhoton => n,
    };
    let rows: Vec<Vec<Vec<ProjectedPureState<f64>>>> = (0..pairs)
        .into_par_iter()
        .map(|j| {
            let seed = derive_seed(cfg.master_seed, &[SCREEN_STREAM, strength.to_bits(), j as u64]);
            let (a, b) =
                generator.generate_pair(&target, seed).map_err(|e| at_strength(e, cfg.scenario, 0, strength))?;
            match cfg.scenario {
                Scenario::SinglePhoton => {
                    let ca = arm_coefficients(projectors, &a)?;
                    let cb = arm_coefficients(projectors, &b)?;
                    Ok(vec![
                        ca.iter().map(|c| project_single_photon(&widen(c))).collect(),
                        cb.iter().map(|c| project_single_photon(&widen(c))).collect(),
                    ])
                }
                Scenario::TwoPhoton => {
                    let ca = arm_coefficients(projectors, &a)?;
                    let cb = arm_coefficients(projectors, &b)?;
                    Ok(vec![ca.iter().zip(&cb).map(|(x, y)| project_two_photon(&widen(x), &widen(y))).collect()])
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut members: Vec<_> = rows.into_iter().flatten().collect();
    members.truncate(n);
    Ok(members)
}

fn arm_coefficients<T: Real>(
    projectors: &[QubitProjector<T>],
    screen: &PhaseScreen<T>,
) -> Result<Vec<ModalCoefficients<T>>> {
    let phasor = transmission(screen);
    projectors.iter().map(|p| p.coefficients(screen, &phasor)).collect()
}

pub(crate) fn widen<T: Real>(c: &ModalCoefficients<T>) -> ModalCoefficients<f64> {
    let w = |z: num_complex::Complex<T>| num_complex::Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
    ModalCoefficients {
        plus_to_plus: w(c.plus_to_plus),
        plus_to_minus: w(c.plus_to_minus),
        minus_to_plus: w(c.minus_to_plus),
        minus_to_minus: w(c.minus_to_minus),
    }
}

/// `(Σ w)² / Σ w²` with `w` the post-selection probability of each member.
fn kish(states: &[ProjectedPureState<f64>]) -> f64 {
    let (s, s2) = states.iter().fold((0.0, 0.0), |(s, s2), st| {
        let w = st.norm_sqr();
        (s + w, s2 + w * w)
    });
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

fn bootstrap_stderr(states: &[ProjectedPureState<f64>], seed: u64) -> f64 {
    let n = states.len();
    let mut rng = rng_from_seed(seed);
    let mut draws = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut acc = DensityAccumulator::new();
        for _ in 0..n {
            acc.add(&states[rng.random_range(0..n)]);
        }
        if let Ok(rho) = acc.finish() {
            draws.push(rho.concurrence());
        }
    }
    if draws.len() < 2 {
        return 0.0;
    }
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    (draws.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> SweepConfig {
        SweepConfig {
            scenario,
            q_values: vec![1, 2],
            strengths: vec![0.0, 1.0, 2.0],
            ensemble_size: 30,
            n_samples: 128,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn zero_strength_is_a_perfect_bell_state() {
        let r = run_sweep::<f64>(&small(Scenario::TwoPhoton)).unwrap();
        for q in [1, 2] {
            let p = r.point(q, 0.0).unwrap();
            assert!((p.concurrence - 1.0).abs() < 2e-3);
            assert!(p.stderr < 1e-12);
            assert!((p.n_effective - 30.0).abs() < 1e-9);
        }
    }

    #[test]
    fn points_are_ordered_and_complete() {
        let r = run_sweep::<f64>(&small(Scenario::SinglePhoton)).unwrap();
        assert_eq!(r.points.len(), 6);
        assert_eq!(r.curve(2).iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0]);
        for p in &r.points {
            let rho = p.density_matrix().unwrap();
            assert!((rho.concurrence() - p.concurrence).abs() < 1e-12);
            assert!(p.stderr >= 0.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small(Scenario::SinglePhoton);
        let one = run_sweep_with_workers::<f64>(&cfg, 1).unwrap();
        let three = run_sweep_with_workers::<f64>(&cfg, 3).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
    }

    #[test]
    fn single_photon_members_come_from_both_screens_of_a_pair() {
        // An odd ensemble discards the second screen of the last pair only.
        let cfg = SweepConfig { ensemble_size: 31, ..small(Scenario::SinglePhoton) };
        let r = run_sweep::<f64>(&cfg).unwrap();
        assert!(r.points.iter().all(|p| p.ensemble_size == 31));
    }

    #[test]
    fn two_photon_decays_faster_than_single_photon() {
        let s = run_sweep::<f64>(&small(Scenario::SinglePhoton)).unwrap();
        let t = run_sweep::<f64>(&small(Scenario::TwoPhoton)).unwrap();
        for q in [1, 2] {
            let (ps, pt) = (s.point(q, 2.0).unwrap(), t.point(q, 2.0).unwrap());
            assert!(pt.concurrence <= ps.concurrence + 2.0 * (ps.stderr + pt.stderr));
        }
    }

    #[test]
    fn single_precision_sweep_tracks_double_precision() {
        let cfg = small(Scenario::SinglePhoton);
        let a = run_sweep::<f64>(&cfg).unwrap();
        let b = run_sweep::<f32>(&cfg).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.concurrence - y.concurrence).abs() < 1e-3, "{} vs {}", x.concurrence, y.concurrence);
        }
    }
}
