//! Command execution, result documents and output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use frontspeed_core::assembly::AssemblyError;
use frontspeed_core::frontsim::{frames_to_csv, measure_spreading_speed, SimError};
use frontspeed_core::medium::{validate, Diagnostics, Hypothesis, MediumError};
use frontspeed_core::regimes::{
    homogenized_speed, sweep_large_diffusion, sweep_period, sweep_reaction, sweep_small_diffusion,
    sweep_small_diffusion_shear, RegimeError, Waivers,
};
use frontspeed_core::speed::{upper_bound, SpeedError};
use frontspeed_core::{
    FrontMeasurement, Medium, ReactionMode, Scales, SimOptions, SpeedOptions, SpeedProblem,
    SpeedResult, SweepOptions, SweepTable,
};
use serde::{Deserialize, Serialize};

use crate::config::{Command, ConfigError, Format, Regime, RunConfig};
use crate::{EXIT_HYPOTHESIS, EXIT_NUMERIC, EXIT_USAGE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("hypothesis refused: {0}")]
    Hypothesis(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Hypothesis(_) => EXIT_HYPOTHESIS,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MediumError> for CliError {
    fn from(e: MediumError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AssemblyError> for CliError {
    fn from(e: AssemblyError) -> Self {
        match e {
            AssemblyError::UnsupportedCrossDiffusion | AssemblyError::BadCoefficient { .. } => {
                CliError::Hypothesis(e.to_string())
            }
            AssemblyError::Medium(m) => m.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SpeedError> for CliError {
    fn from(e: SpeedError) -> Self {
        match e {
            SpeedError::Assembly(a) => a.into(),
            SpeedError::Medium(m) => m.into(),
            SpeedError::Eigen(_) => CliError::Numeric(e.to_string()),
            SpeedError::Invalid(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<RegimeError> for CliError {
    fn from(e: RegimeError) -> Self {
        match e {
            RegimeError::Hypothesis { .. } => CliError::Hypothesis(e.to_string()),
            RegimeError::Speed(s) => s.into(),
            RegimeError::Medium(m) => m.into(),
            RegimeError::Assembly(a) => a.into(),
            RegimeError::Invalid(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Medium(m) => m.into(),
            SimError::UnsupportedMedium(_) | SimError::Invalid(_) | SimError::Unstable { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// What a successful run prints and writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Result document of `speed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub tag: String,
    pub medium_hash: String,
    pub medium_kind: String,
    pub grid: Vec<usize>,
    pub tol: f64,
    pub upper_bound: f64,
    pub result: SpeedResult,
    pub warnings: Vec<String>,
}

/// Result document of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub tag: String,
    pub medium_hash: String,
    pub total_time: f64,
    pub burn_in: f64,
    pub measurement: FrontMeasurement,
}

/// Result document of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tag: String,
    pub medium_hash: String,
    pub medium_kind: String,
    pub admissible: bool,
    pub waived: Vec<String>,
    pub diagnostics: Diagnostics,
}

const SPEED_TAG: &str = "variational minimal speed c* = min k(lambda)/lambda";
const SIMULATION_TAG: &str = "pulsating front from step data";
const VALIDATION_TAG: &str = "structural hypotheses";

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("result documents always serialize")
}

fn waivers(config: &RunConfig) -> Waivers {
    Waivers {
        zero_average: config.waive_zero_average,
        divergence_free_diffusion_flux: config.waive_divergence_free_diffusion_flux,
        structure: config.waive_structure,
    }
}

fn speed_options(config: &RunConfig) -> SpeedOptions {
    let mut opts = SpeedOptions {
        tol: config.tol,
        ..SpeedOptions::default()
    };
    if config.lambda_min.is_some() || config.lambda_max.is_some() {
        opts.lambda_range = Some((
            config.lambda_min.unwrap_or(1e-6),
            config.lambda_max.unwrap_or(1e6),
        ));
    }
    opts
}

/// Hypothesis failures that no waiver covers, and the waived ones.
///
/// `∇·(Ae) = 0` only matters for the averaged limits, whose sweeps check it.
fn screen(diagnostics: &Diagnostics, config: &RunConfig) -> (Vec<String>, Vec<String>) {
    let mut refused = Vec::new();
    let mut waived = Vec::new();
    for check in diagnostics.failures() {
        let waivable = match check.hypothesis {
            Hypothesis::ZeroAverage => config.waive_zero_average,
            Hypothesis::DivergenceFreeDiffusionFlux => continue,
            _ => false,
        };
        let line = format!("{}: {}", check.hypothesis.name(), check.detail);
        if waivable {
            waived.push(line);
        } else {
            refused.push(line);
        }
    }
    (refused, waived)
}

fn write_outputs(stem: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    files
        .iter()
        .map(|(ext, body)| {
            let mut name = stem.as_os_str().to_owned();
            name.push(ext);
            let path = PathBuf::from(name);
            std::fs::write(&path, body)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

struct Rendered {
    summary: String,
    csv: String,
    json: String,
    extra: Vec<(&'static str, String)>,
    warnings: Vec<String>,
}

fn finish(config: &RunConfig, r: Rendered) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    if let Some(stem) = &config.out {
        let mut all = vec![(".csv", r.csv.clone()), (".json", r.json.clone())];
        all.extend(r.extra);
        files = write_outputs(stem, &all)?;
    }
    let stdout = match config.format {
        Format::Text => r.summary,
        Format::Csv => r.csv,
        Format::Json => r.json + "\n",
    };
    Ok(Outcome {
        stdout,
        warnings: r.warnings,
        files,
    })
}

/// Run a validated configuration.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let medium = config.load_medium()?;
    let grid = config.grid_for(&medium)?;
    let rendered = match config.command {
        Command::Speed => speed(config, &medium, &grid)?,
        Command::Sweep | Command::Homogenize => sweep(config, &medium)?,
        Command::Simulate => simulate(config, &medium, &grid)?,
        Command::Validate => validation(config, &medium, &grid)?,
    };
    finish(config, rendered)
}

fn speed(config: &RunConfig, medium: &Medium, grid: &[usize]) -> Result<Rendered, CliError> {
    let diagnostics = validate(medium, grid[0])?;
    let (refused, warnings) = screen(&diagnostics, config);
    if !refused.is_empty() {
        return Err(CliError::Hypothesis(refused.join("; ")));
    }
    let problem = SpeedProblem::new(medium, grid, Scales::UNIT)?;
    let result = problem.minimal_speed(&speed_options(config))?;
    let bound = upper_bound(medium, grid, Scales::UNIT)?;
    let report = SpeedReport {
        tag: SPEED_TAG.into(),
        medium_hash: medium.hash(),
        medium_kind: medium.kind().into(),
        grid: grid.to_vec(),
        tol: config.tol,
        upper_bound: bound,
        result,
        warnings: warnings.clone(),
    };
    let r = &report.result;
    let mut summary = format!("c* = {:.6}\n", r.c_star);
    let _ = writeln!(summary, "lambda* = {:.6}", r.lambda_star);
    let _ = writeln!(summary, "upper bound = {:.6}", bound);
    let _ = writeln!(summary, "regime: {SPEED_TAG}");
    let _ = writeln!(
        summary,
        "medium: {} {}, grid {:?}",
        report.medium_kind,
        &report.medium_hash[..12],
        grid
    );
    if r.bracket_failure {
        let _ = writeln!(
            summary,
            "note: the minimum sits at an end of the lambda range"
        );
    }
    let csv = format!(
        "c_star,lambda_star,k_at_star,upper_bound,bracket_error,bracket_failure\n{},{},{},{},{},{}\n",
        fmt_num(r.c_star),
        fmt_num(r.lambda_star),
        fmt_num(r.k_at_star),
        fmt_num(bound),
        fmt_num(r.bracket_error),
        r.bracket_failure
    );
    Ok(Rendered {
        summary,
        csv,
        json: to_json(&report),
        extra: Vec::new(),
        warnings,
    })
}

fn default_points(config: &RunConfig, medium: &Medium) -> Vec<f64> {
    if let Some(p) = &config.points {
        return p.clone();
    }
    match (config.command, config.regime) {
        (Command::Homogenize, _) => vec![0.5, 0.25, 0.125, 0.0625],
        (_, Some(Regime::Epsilon)) => vec![1e-1, 1e-2, 1e-3, 1e-4],
        (_, Some(Regime::Diffusion)) => vec![1.0, 10.0, 100.0, 1000.0],
        (_, Some(Regime::Reaction)) => match reaction_mode(config, medium) {
            ReactionMode::ToZero => vec![1e-1, 1e-2, 1e-3],
            _ => vec![1.0, 10.0, 100.0, 1000.0],
        },
        (_, Some(Regime::Period)) => vec![1.0 / 32.0, 0.125, 0.5, 2.0, 8.0, 32.0],
        (_, None) => Vec::new(),
    }
}

fn reaction_mode(config: &RunConfig, medium: &Medium) -> ReactionMode {
    config.mode.unwrap_or(match medium {
        Medium::Cell(_) => ReactionMode::ToZero,
        _ => ReactionMode::ToInfinity,
    })
}

fn sweep(config: &RunConfig, medium: &Medium) -> Result<Rendered, CliError> {
    let opts = SweepOptions {
        grid: config
            .grid
            .clone()
            .map(|g| match (g.as_slice(), medium.dimension()) {
                (&[n], 2) => vec![n, n],
                _ => g,
            }),
        adapt_grid: true,
        speed: speed_options(config),
        waivers: waivers(config),
    };
    let points = default_points(config, medium);
    let table = match (config.command, config.regime) {
        (Command::Homogenize, _) => homogenized_speed(medium, &points, &opts)?,
        (_, Some(Regime::Epsilon)) => match medium {
            Medium::Shear(m) if m.q1.is_some() => sweep_small_diffusion_shear(m, &points, &opts)?,
            _ => sweep_small_diffusion(medium, &points, &opts)?,
        },
        (_, Some(Regime::Diffusion)) => {
            sweep_large_diffusion(medium, &points, config.gamma.unwrap_or(0.0), &opts)?
        }
        (_, Some(Regime::Reaction)) => sweep_reaction(
            medium,
            &points,
            reaction_mode(config, medium),
            config.gamma.unwrap_or(0.5),
            &opts,
        )?,
        (_, Some(Regime::Period)) => sweep_period(medium, &points, &opts)?,
        (_, None) => return Err(CliError::Usage("a sweep needs a regime".into())),
    };
    Ok(Rendered {
        summary: sweep_summary(&table),
        csv: table.to_csv(),
        json: table.to_json(),
        extra: Vec::new(),
        warnings: Vec::new(),
    })
}

fn sweep_summary(t: &SweepTable) -> String {
    let mut s = format!(
        "{} sweep over {}\nregime: {}\n",
        t.sweep, t.parameter, t.limit_tag
    );
    let _ = writeln!(
        s,
        "{:>12}  {:>8}  {:>14}  {:>14}  {:>10}",
        t.parameter, "grid", t.quantity, "limit", "rel error"
    );
    for r in &t.rows {
        let grid = r
            .grid
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$e}"));
        let _ = writeln!(
            s,
            "{:>12.4e}  {:>8}  {:>14.8}  {:>14}  {:>10}{}",
            r.value,
            grid,
            r.quantity,
            r.theory_limit
                .map_or("-".to_string(), |v| format!("{v:.8}")),
            opt(r.rel_error, 2),
            if r.bracket_failure {
                "  (bracket failure)"
            } else {
                ""
            }
        );
    }
    if let Some(x) = t.extrapolated {
        let _ = writeln!(s, "extrapolated: {x:.8}");
    }
    if let Some(p) = t.convergence_rate {
        let _ = writeln!(s, "observed rate: {p:.3}");
    }
    if let Some(v) = &t.monotonicity {
        let _ = writeln!(
            s,
            "monotonicity ({:?}): {}",
            v.expected,
            if v.holds() {
                "holds".to_string()
            } else {
                format!("{} violations", v.violations.len())
            }
        );
    }
    let violations = t.bound_violations();
    if t.bound_kind.is_some() {
        let _ = writeln!(
            s,
            "bounds: {}",
            if violations.is_empty() {
                "hold".to_string()
            } else {
                format!("violated at rows {violations:?}")
            }
        );
    }
    s
}

fn simulate(config: &RunConfig, medium: &Medium, grid: &[usize]) -> Result<Rendered, CliError> {
    let opts = SimOptions {
        points_per_period: if config.grid.is_some() {
            grid[0]
        } else {
            SimOptions::default().points_per_period
        },
        burn_in: config.burn_in,
        frame_times: config.frames.clone(),
        ..SimOptions::default()
    };
    let measurement = measure_spreading_speed(medium, config.total_time, &opts)?;
    let report = SimulationReport {
        tag: SIMULATION_TAG.into(),
        medium_hash: medium.hash(),
        total_time: config.total_time,
        burn_in: config.burn_in,
        measurement,
    };
    let m = &report.measurement;
    let mut summary = format!("spreading speed = {:.6}\n", m.speed);
    let _ = writeln!(summary, "regime: {SIMULATION_TAG}");
    let _ = writeln!(summary, "fit residual = {:.3e}", m.fit_residual);
    let _ = writeln!(
        summary,
        "periodicity residual = {:.3e}",
        m.periodicity_residual
    );
    let _ = writeln!(summary, "u range = [{}, {}]", m.min_u, m.max_u);
    let _ = writeln!(summary, "steps = {}, dt = {:.3e}", m.steps, m.dt);
    let mut csv = String::from("t,position\n");
    for (t, x) in m.times.iter().zip(&m.positions) {
        let _ = writeln!(csv, "{},{}", fmt_num(*t), fmt_num(*x));
    }
    let extra = if m.frames.is_empty() {
        Vec::new()
    } else {
        vec![(".frames.csv", frames_to_csv(&m.frames))]
    };
    Ok(Rendered {
        summary,
        csv,
        json: to_json(&report),
        extra,
        warnings: Vec::new(),
    })
}

fn validation(config: &RunConfig, medium: &Medium, grid: &[usize]) -> Result<Rendered, CliError> {
    let diagnostics = validate(medium, grid[0])?;
    let (refused, waived) = screen(&diagnostics, config);
    let report = ValidationReport {
        tag: VALIDATION_TAG.into(),
        medium_hash: medium.hash(),
        medium_kind: medium.kind().into(),
        admissible: refused.is_empty(),
        waived: waived.clone(),
        diagnostics,
    };
    if !refused.is_empty() {
        return Err(CliError::Hypothesis(refused.join("; ")));
    }
    let mut summary = format!(
        "medium: {} {}\nregime: {VALIDATION_TAG}\n",
        report.medium_kind,
        &report.medium_hash[..12]
    );
    let mut csv = String::from("hypothesis,passed,value\n");
    for c in &report.diagnostics.checks {
        let _ = writeln!(
            summary,
            "{:<32} {}  {}",
            c.hypothesis.name(),
            if c.passed { "ok  " } else { "FAIL" },
            c.detail
        );
        let _ = writeln!(
            csv,
            "{},{},{}",
            c.hypothesis.name(),
            c.passed,
            fmt_num(c.value)
        );
    }
    Ok(Rendered {
        summary,
        csv,
        json: to_json(&report),
        extra: Vec::new(),
        warnings: waived,
    })
}
