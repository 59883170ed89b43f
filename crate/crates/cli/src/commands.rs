use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use oamturb::experiments::{
    crosstalk_matrix, decay_distance, fit_decay_scale, run_sweep, with_workers, CrosstalkConfig, CrosstalkMatrix,
    SweepConfig, SweepResult,
};
use oamturb::export::{
    config_hash, crosstalk_csv, format_sig, structure_csv, sweep_csv_with_digits, write_json, RunManifest, SweepBundle,
};
use oamturb::grid::GridSpec;
use oamturb::seed::derive_seed;
use oamturb::turbulence::{
    write_screen, PhaseScreen, ScreenGenerator, ScreenTarget, SpectrumModel, StructureFunction, STRUCTURE_COEFFICIENT,
};
use oamturb::Real;
use serde::Serialize;

use crate::config::{LoadedConfig, Precision, RunConfig, DEFAULT_OUT, OUT_ENV};
use crate::error::CliError;

/// Screen pairs handed to the structure estimator at once.
const SCREEN_CHUNK_PAIRS: usize = 16;

/// Global flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub struct Context {
    pub loaded: LoadedConfig,
    pub overrides: Overrides,
}

impl Context {
    fn config(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn workers(&self) -> usize {
        self.overrides.workers.unwrap_or(self.config().compute.workers)
    }

    fn digits(&self) -> usize {
        self.config().output.float_digits
    }

    /// `--out`, then `[output] dir`, then `$OAMTURB_OUT`, then `./oamturb-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.overrides
            .out
            .clone()
            .or_else(|| self.config().output.dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    fn prepare_out(&self) -> Result<PathBuf, CliError> {
        let dir = self.out_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Effective configuration with overrides folded in, for the manifest.
    fn effective(&self) -> RunConfig {
        let mut c = self.config().clone();
        c.output.dir = None;
        if let Some(seed) = self.overrides.seed {
            c.sweep.master_seed = seed;
            c.screens.seed = seed;
            c.crosstalk.seed = seed;
        }
        c
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_bytes(path, text.as_bytes())
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes the manifest plus a re-runnable copy of the configuration.
fn finish_manifest<K: Serialize>(
    ctx: &Context,
    dir: &Path,
    command: &str,
    key: &K,
    seed: u64,
    started: Instant,
    mut artifacts: Vec<String>,
) -> Result<String, CliError> {
    let mut manifest = RunManifest::new(command, key, seed)?;
    let hash = manifest.config_hash.clone();
    let toml_path = dir.join(format!("config-{command}-{hash}.toml"));
    let toml_text = toml::to_string(&ctx.effective()).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&toml_path, &toml_text)?;
    artifacts.push(file_name(&toml_path));
    manifest.artifacts = artifacts;
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    let path = dir.join(format!("manifest-{command}-{hash}.json"));
    write_json(&path, &manifest)?;
    Ok(file_name(&path))
}

#[derive(Serialize)]
struct SweepKey<'a> {
    precision: Precision,
    float_digits: usize,
    sweeps: &'a [SweepConfig],
    crosstalk: &'a [CrosstalkConfig],
}

fn run_one<T: Real>(cfg: &SweepConfig, crosstalk: &[CrosstalkConfig]) -> oamturb::Result<SweepResult> {
    let mut result = run_sweep::<T>(cfg)?;
    for x in crosstalk.iter().filter(|x| x.scenario == cfg.scenario) {
        result.crosstalk.push(crosstalk_matrix::<T>(x)?);
    }
    Ok(result)
}

pub fn cmd_sweep(ctx: &Context) -> Result<(), CliError> {
    let started = Instant::now();
    let sweeps = ctx.loaded.sweep_configs(ctx.overrides.seed)?;
    let crosstalk =
        if ctx.config().sweep.crosstalk { ctx.loaded.crosstalk_configs(ctx.overrides.seed)? } else { Vec::new() };
    let precision = ctx.config().compute.precision;
    let key = SweepKey { precision, float_digits: ctx.digits(), sweeps: &sweeps, crosstalk: &crosstalk };
    let hash = config_hash(&key)?;
    let dir = ctx.prepare_out()?;

    let results = with_workers(ctx.workers(), || {
        sweeps
            .iter()
            .map(|cfg| match precision {
                Precision::F64 => run_one::<f64>(cfg, &crosstalk),
                Precision::F32 => run_one::<f32>(cfg, &crosstalk),
            })
            .collect::<oamturb::Result<Vec<_>>>()
    })??;

    let mut bundle = SweepBundle { results, fits: Vec::new(), fit_errors: Vec::new() };
    for r in &bundle.results {
        match fit_decay_scale(r) {
            Ok(fit) => bundle.fits.push(fit),
            Err(e) => bundle.fit_errors.push(format!("{}: {e}", r.scenario())),
        }
    }

    let csv_path = dir.join(format!("sweep-{hash}.csv"));
    write_text(&csv_path, &sweep_csv_with_digits(&bundle.results, ctx.digits()))?;
    let json_path = dir.join(format!("sweep-{hash}.json"));
    write_json(&json_path, &bundle)?;
    let manifest = finish_manifest(
        ctx,
        &dir,
        "sweep",
        &key,
        sweeps[0].master_seed,
        started,
        vec![file_name(&csv_path), file_name(&json_path)],
    )?;

    for r in &bundle.results {
        for &q in &r.config.q_values {
            let curve: Vec<String> = r.points_for(q).map(|p| format_sig(p.concurrence, 3)).collect();
            println!("{} q={q}: C = [{}]", r.scenario(), curve.join(", "));
        }
    }
    for fit in &bundle.fits {
        println!(
            "{} fit: log10 Omega = {:.3} log10 q + {:.3} (prefactor {:.3})",
            fit.scenario, fit.slope, fit.intercept, fit.prefactor
        );
    }
    for e in &bundle.fit_errors {
        println!("no fit for {e}");
    }
    println!("wrote {} ({})", csv_path.display(), manifest);
    Ok(())
}

#[derive(Serialize)]
struct ScreensKey {
    precision: Precision,
    float_digits: usize,
    n_samples: usize,
    pitch_m: f64,
    spectrum: SpectrumModel,
    target: ScreenTarget,
    count: usize,
    save: usize,
    subharmonic_levels: u32,
    max_lag: usize,
    seed: u64,
}

/// Summary of a screen ensemble, written next to the structure CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ScreensReport {
    pub screens: usize,
    pub fried_m: Option<f64>,
    pub strength: f64,
    pub pitch_m: f64,
    pub fit_range_m: [f64; 2],
    /// Log-log slope of the structure function over `fit_range_m`.
    pub slope: Option<f64>,
    /// Largest `|D / (6.88 (r/r0)^{5/3}) − 1|` over `fit_range_m`.
    pub max_relative_deviation: Option<f64>,
    pub max_abs_phase_rad: f64,
}

struct ScreenRun {
    sf: StructureFunction,
    saved: Vec<Vec<u8>>,
    max_abs: f64,
}

fn generate_screens<T: Real>(
    grid: GridSpec,
    spectrum: SpectrumModel,
    target: &ScreenTarget,
    key: &ScreensKey,
) -> oamturb::Result<ScreenRun> {
    let generator = ScreenGenerator::<T>::new(grid, spectrum, key.subharmonic_levels)?;
    let pairs = key.count.div_ceil(2);
    let mut sf = StructureFunction::new(&grid, key.max_lag)?;
    let mut saved = Vec::new();
    let mut max_abs = 0.0f64;
    for start in (0..pairs).step_by(SCREEN_CHUNK_PAIRS) {
        let mut chunk: Vec<PhaseScreen<T>> = Vec::with_capacity(2 * SCREEN_CHUNK_PAIRS);
        for j in start..(start + SCREEN_CHUNK_PAIRS).min(pairs) {
            let (a, b) = generator.generate_pair(target, derive_seed(key.seed, &[j as u64]))?;
            chunk.push(a);
            chunk.push(b);
        }
        for s in &chunk {
            max_abs = s.theta().iter().fold(max_abs, |m, v| m.max(v.to_f64_lossy().abs()));
            if saved.len() < key.save {
                let mut buf = Vec::new();
                write_screen(&mut buf, s)?;
                saved.push(buf);
            }
        }
        if chunk.len() >= 2 {
            sf.merge(&oamturb::turbulence::estimate_structure_function(&chunk, key.max_lag)?)?;
        }
    }
    Ok(ScreenRun { sf, saved, max_abs })
}

pub fn cmd_screens(ctx: &Context) -> Result<(), CliError> {
    let started = Instant::now();
    let target = ctx.loaded.screen_target()?;
    let spectrum = ctx.loaded.spectrum()?;
    let c = ctx.config();
    let s = &c.screens;
    if s.count < 2 {
        return Err(ctx.loaded.invalid("screens", "count", format!("need at least 2 screens, got {}", s.count)));
    }
    let grid = GridSpec::for_waist(c.grid.samples, c.beam.waist_m, c.grid.window_waists)?;
    let max_lag = s.max_lag.unwrap_or(c.grid.samples / 8);
    if max_lag < 1 || max_lag >= c.grid.samples {
        return Err(ctx.loaded.invalid("screens", "max_lag", format!("must be in 1..{}", c.grid.samples)));
    }
    let key = ScreensKey {
        precision: c.compute.precision,
        float_digits: ctx.digits(),
        n_samples: grid.n_samples(),
        pitch_m: grid.pitch(),
        spectrum,
        target,
        count: s.count.div_ceil(2) * 2,
        save: s.save.min(s.count.div_ceil(2) * 2),
        subharmonic_levels: s.subharmonic_levels,
        max_lag,
        seed: ctx.overrides.seed.unwrap_or(s.seed),
    };
    let hash = config_hash(&key)?;
    let dir = ctx.prepare_out()?;

    let run = with_workers(ctx.workers(), || match key.precision {
        Precision::F64 => generate_screens::<f64>(grid, spectrum, &target, &key),
        Precision::F32 => generate_screens::<f32>(grid, spectrum, &target, &key),
    })??;

    let r0 = target.fried();
    let fit_range = [4.0 * grid.pitch(), grid.side() / 8.0];
    let slope = if r0.is_finite() { run.sf.log_slope(fit_range[0], fit_range[1]).ok() } else { None };
    let max_relative_deviation = r0.is_finite().then(|| {
        run.sf
            .profile()
            .into_iter()
            .filter(|&(r, _)| r >= fit_range[0] * (1.0 - 1e-9) && r <= fit_range[1] * (1.0 + 1e-9))
            .map(|(r, d)| (d / (STRUCTURE_COEFFICIENT * (r / r0).powf(5.0 / 3.0)) - 1.0).abs())
            .fold(0.0, f64::max)
    });
    let report = ScreensReport {
        screens: run.sf.screens(),
        fried_m: r0.is_finite().then_some(r0),
        strength: c.beam.waist_m / r0,
        pitch_m: grid.pitch(),
        fit_range_m: fit_range,
        slope,
        max_relative_deviation,
        max_abs_phase_rad: run.max_abs,
    };

    let screen_dir = dir.join(format!("screens-{hash}"));
    fs::create_dir_all(&screen_dir)?;
    for (i, bytes) in run.saved.iter().enumerate() {
        write_bytes(&screen_dir.join(format!("screen-{i:05}.bin")), bytes)?;
    }
    let csv_path = dir.join(format!("structure-{hash}.csv"));
    write_text(&csv_path, &structure_csv(&run.sf, r0, ctx.digits()))?;
    let report_path = dir.join(format!("structure-{hash}.json"));
    write_json(&report_path, &report)?;
    let manifest = finish_manifest(
        ctx,
        &dir,
        "screens",
        &key,
        key.seed,
        started,
        vec![file_name(&screen_dir), file_name(&csv_path), file_name(&report_path)],
    )?;

    match (report.fried_m, report.slope) {
        (Some(r0), Some(slope)) => println!(
            "{} screens, r0 = {} m: inertial-range slope {:.3} (Kolmogorov 5/3), max deviation from 6.88 (r/r0)^(5/3): {:.3}",
            report.screens,
            format_sig(r0, 4),
            slope,
            report.max_relative_deviation.unwrap_or(f64::NAN)
        ),
        _ => println!("{} screens, no turbulence: max |theta| = {}", report.screens, report.max_abs_phase_rad),
    }
    println!("wrote {} ({})", csv_path.display(), manifest);
    Ok(())
}

/// Inputs of the decay-distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTableArgs {
    pub waist_m: f64,
    pub wavelength_m: f64,
    pub cn2_m_neg2_3: f64,
    pub l: Vec<u32>,
}

pub fn decay_table(args: &DecayTableArgs) -> Result<String, CliError> {
    if args.l.is_empty() || args.l.contains(&0) {
        return Err(CliError::Schema("l must be a non-empty list of positive integers".into()));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "w0 = {} m, wavelength = {} m, Cn2 = {} m^-2/3",
        format_sig(args.waist_m, 6),
        format_sig(args.wavelength_m, 6),
        format_sig(args.cn2_m_neg2_3, 6)
    );
    let _ = writeln!(out, "{:>4}  {:>12}", "l", "L_dec [km]");
    for &l in &args.l {
        let km = decay_distance(l as f64, args.waist_m, args.wavelength_m, args.cn2_m_neg2_3)? / 1e3;
        let _ = writeln!(out, "{l:>4}  {km:>12.3}");
    }
    Ok(out)
}

pub fn cmd_decay_table(args: &DecayTableArgs) -> Result<(), CliError> {
    print!("{}", decay_table(args)?);
    Ok(())
}

#[derive(Serialize)]
struct CrosstalkKey<'a> {
    precision: Precision,
    float_digits: usize,
    runs: &'a [CrosstalkConfig],
}

pub fn cmd_crosstalk(ctx: &Context) -> Result<(), CliError> {
    let started = Instant::now();
    let runs = ctx.loaded.crosstalk_configs(ctx.overrides.seed)?;
    let precision = ctx.config().compute.precision;
    let key = CrosstalkKey { precision, float_digits: ctx.digits(), runs: &runs };
    let hash = config_hash(&key)?;
    let dir = ctx.prepare_out()?;

    let matrices: Vec<CrosstalkMatrix> = with_workers(ctx.workers(), || {
        runs.iter()
            .map(|x| match precision {
                Precision::F64 => crosstalk_matrix::<f64>(x),
                Precision::F32 => crosstalk_matrix::<f32>(x),
            })
            .collect::<oamturb::Result<Vec<_>>>()
    })??;

    let mut artifacts = Vec::new();
    for m in &matrices {
        let path = dir.join(format!("crosstalk-{hash}-{}-s{}.csv", m.scenario, format_sig(m.strength, 6)));
        write_text(&path, &crosstalk_csv(m, ctx.digits()))?;
        artifacts.push(file_name(&path));
    }
    let json_path = dir.join(format!("crosstalk-{hash}.json"));
    write_json(&json_path, &matrices)?;
    artifacts.push(file_name(&json_path));
    let manifest = finish_manifest(ctx, &dir, "crosstalk", &key, runs[0].seed, started, artifacts)?;

    println!("{:<14} {:>9} {:>14} {:>14}", "scenario", "strength", "anti-diagonal", "elsewhere");
    for m in &matrices {
        println!(
            "{:<14} {:>9} {:>14.6} {:>14.6}",
            m.scenario.as_str(),
            format_sig(m.strength, 6),
            m.anti_diagonal_mass(),
            m.off_anti_diagonal_mass()
        );
    }
    println!("wrote {} ({})", json_path.display(), manifest);
    Ok(())
}
