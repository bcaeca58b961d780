//! Parameter sweeps toward the asymptotic regimes of `c*`.
//!
//! Each sweep evaluates a rescaled speed over a list of parameter values and
//! tabulates it next to its theoretical limit:
//!
//! | sweep | rows | limit |
//! |---|---|---|
//! | small diffusion, no flow | `c*(εA)/√ε` | `2√(max ζ · max eAe)` |
//! | small diffusion, shear flow | `c*(εA, q)` | `max(−q₁)` |
//! | large diffusion | `c*(MA, M^γ q)/√M` | `2√(⨍eAe · ⨍ζ)` |
//! | reaction `B → ∞` | `c*(A, Bζ)/√B` | `2√(max ζ · max eAe)` |
//! | reaction `B → 0` | `c*(A, B^γ q, Bζ)/√B` | `2√(⨍eAe · ⨍ζ)` |
//! | period `L` | `c*_L = L·c*(A/L², q/L, ζ)` | small-`L` and large-`L` limits |
//! | homogenization | `ε·c*(A/ε², q/ε, ζ)` | `2√(⨍eAe · ⨍ζ)` |
//!
//! Sweeps refuse media that violate the hypotheses behind their limit unless
//! the corresponding waiver is set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{AssemblyError, CellDiscretization, Scales};
use crate::medium::{
    cell_average, harmonic_mean, max_over_cell, validate, CoefficientField, Hypothesis, Medium,
    MediumError, ShearMedium,
};
use crate::speed::{upper_bound, SpeedError, SpeedOptions, SpeedProblem, SpeedResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegimeError {
    #[error("hypothesis {name} fails: {detail}")]
    Hypothesis { name: String, detail: String },
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("{0}")]
    Invalid(String),
}

fn refuse(name: &str, detail: impl Into<String>) -> RegimeError {
    RegimeError::Hypothesis {
        name: name.to_string(),
        detail: detail.into(),
    }
}

/// Hypotheses a sweep may be told to ignore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Waivers {
    /// Allow a flow with nonzero cell average.
    pub zero_average: bool,
    /// Allow `∇·(A e) ≠ 0` in the large-diffusion and homogenization sweeps.
    pub divergence_free_diffusion_flux: bool,
    /// Allow media outside the structural assumptions of the small-diffusion
    /// and fast-reaction limits (constant `eAe` or constant `ζ`, no flow).
    pub structure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Base grid; defaults to 128 points in one dimension and 64 × 64 in two.
    pub grid: Option<Vec<usize>>,
    /// Refine one-dimensional grids to resolve layers of width `√ε`.
    pub adapt_grid: bool,
    pub speed: SpeedOptions,
    pub waivers: Waivers,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: None,
            adapt_grid: true,
            speed: SpeedOptions::default(),
            waivers: Waivers::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
}

/// Monotonicity of the `quantity` column in the order of the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneVerdict {
    pub expected: Trend,
    /// Indices `i` where rows `i` and `i + 1` break the expected trend.
    pub violations: Vec<usize>,
    /// Largest wrong-way step.
    pub max_violation: f64,
}

impl MonotoneVerdict {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub grid: Vec<usize>,
    pub c_star: f64,
    pub lambda_star: f64,
    /// The rescaled speed tabulated by the sweep.
    pub quantity: f64,
    pub theory_limit: Option<f64>,
    /// `|quantity − limit| / |limit|`.
    pub rel_error: Option<f64>,
    /// Rigorous per-row bound on `quantity`.
    pub bound: Option<f64>,
    pub bracket_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub medium_hash: String,
    pub medium_kind: String,
    pub base_grid: Vec<usize>,
    pub tol: f64,
    pub eigen_tol: f64,
    pub gamma: Option<f64>,
    pub mode: Option<String>,
}

/// Result of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub sweep: String,
    pub parameter: String,
    pub quantity: String,
    /// Which limit the `theory_limit` column holds.
    pub limit_tag: String,
    pub bound_kind: Option<BoundKind>,
    pub rows: Vec<SweepRow>,
    pub monotonicity: Option<MonotoneVerdict>,
    /// Aitken extrapolation of the last three rows.
    pub extrapolated: Option<f64>,
    /// Observed order `p` of `quantity − limit ∝ value^p` from the last rows.
    pub convergence_rate: Option<f64>,
    pub metadata: SweepMetadata,
}

/// Slack for bound checks; the discrete bounds hold up to roundoff.
pub const BOUND_SLACK: f64 = 1e-8;

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepTable {
    /// CSV with header `parameter,value,quantity,theory_limit,rel_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,value,quantity,theory_limit,rel_error\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.parameter,
                fmt_num(r.value),
                fmt_num(r.quantity),
                opt(r.theory_limit),
                opt(r.rel_error)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep tables always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, RegimeError> {
        serde_json::from_str(text).map_err(|e| RegimeError::Invalid(e.to_string()))
    }

    /// Rows whose `quantity` breaks the bound column by more than [`BOUND_SLACK`].
    pub fn bound_violations(&self) -> Vec<usize> {
        let Some(kind) = self.bound_kind else {
            return Vec::new();
        };
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| match (kind, r.bound) {
                (BoundKind::Upper, Some(b)) => r.quantity > b + BOUND_SLACK,
                (BoundKind::Lower, Some(b)) => r.quantity < b - BOUND_SLACK,
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn last(&self) -> &SweepRow {
        self.rows.last().expect("sweeps have at least one row")
    }
}

/// Count wrong-way steps of the `quantity` column.
///
/// Steps below `10⁻¹²` of the values are roundoff and never count.
pub fn check_monotone(table: &SweepTable, expected: Trend) -> MonotoneVerdict {
    let q: Vec<f64> = table.rows.iter().map(|r| r.quantity).collect();
    monotone_verdict(&q, expected)
}

fn monotone_verdict(q: &[f64], expected: Trend) -> MonotoneVerdict {
    let mut violations = Vec::new();
    let mut max_violation = 0.0_f64;
    for i in 0..q.len().saturating_sub(1) {
        let step = q[i + 1] - q[i];
        let wrong = match expected {
            Trend::Increasing => -step,
            Trend::Decreasing => step,
        };
        if wrong > 1e-12 * q[i].abs().max(q[i + 1].abs()) {
            violations.push(i);
            max_violation = max_violation.max(wrong);
        }
    }
    MonotoneVerdict {
        expected,
        violations,
        max_violation,
    }
}

/// Aitken Δ² extrapolation of the last three terms.
pub fn aitken(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
    let denom = (x2 - x1) - (x1 - x0);
    if denom == 0.0 || !denom.is_finite() {
        return Some(x2);
    }
    Some(x2 - (x2 - x1) * (x2 - x1) / denom)
}

/// Observed order `p` of `|q − limit| ∝ value^p` from the last two rows.
fn observed_rate(rows: &[SweepRow]) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (&rows[n - 2], &rows[n - 1]);
    let (ea, eb) = (a.rel_error?, b.rel_error?);
    if ea <= 0.0 || eb <= 0.0 || a.value == b.value {
        return None;
    }
    Some((eb / ea).ln() / (b.value / a.value).ln())
}

const FINE_1D: usize = 4096;
const FINE_2D: usize = 512;

fn fine(medium_dim: usize) -> usize {
    if medium_dim == 1 {
        FINE_1D
    } else {
        FINE_2D
    }
}

fn check_values(values: &[f64]) -> Result<(), RegimeError> {
    if values.is_empty() {
        return Err(RegimeError::Invalid(
            "sweep needs at least one parameter value".into(),
        ));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(RegimeError::Invalid(format!(
            "sweep values must be positive, got {v}"
        )));
    }
    Ok(())
}

fn base_grid(medium: &Medium, opts: &SweepOptions) -> Vec<usize> {
    match &opts.grid {
        Some(g) => g.clone(),
        None if medium.dimension() == 1 => vec![128],
        None => vec![64, 64],
    }
}

/// One-dimensional grids are refined to at least 8 points per layer width
/// `√ε·period`; two-dimensional grids are left alone.
fn adapted_grid(medium: &Medium, base: &[usize], epsilon: f64, opts: &SweepOptions) -> Vec<usize> {
    if !opts.adapt_grid || medium.dimension() != 1 || epsilon >= 1.0 {
        return base.to_vec();
    }
    let need = (8.0 / epsilon.sqrt()).ceil() as usize;
    let n = base[0].max(need.div_ceil(4) * 4).min(1 << 14);
    vec![n]
}

fn is_constant(field: &CoefficientField, n: usize) -> Result<bool, MediumError> {
    if field.as_constant().is_some() {
        return Ok(true);
    }
    let s = crate::medium::sample_field(field, n)?;
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    Ok(hi - lo <= 1e-12 * hi.abs().max(1.0))
}

fn flow_is_trivial(medium: &Medium) -> bool {
    match medium {
        Medium::Line(_) => true,
        Medium::Shear(m) => m.q1.as_ref().map_or(true, |q| q.as_constant() == Some(0.0)),
        Medium::Cell(m) => m
            .stream
            .as_ref()
            .map_or(true, |h| h.as_constant().is_some()),
    }
}

fn require_admissible(medium: &Medium, waivers: &Waivers) -> Result<(), RegimeError> {
    let n = if medium.dimension() == 1 { 1024 } else { 64 };
    let diag = validate(medium, n)?;
    for check in diag.failures() {
        let waived = match check.hypothesis {
            Hypothesis::ZeroAverage => waivers.zero_average,
            Hypothesis::DivergenceFreeDiffusionFlux => true,
            _ => false,
        };
        if !waived {
            return Err(refuse(check.hypothesis.name(), check.detail.clone()));
        }
    }
    Ok(())
}

fn diffusion_flux_free(medium: &Medium) -> Result<bool, RegimeError> {
    Ok(match medium {
        Medium::Line(m) => is_constant(&m.a, FINE_1D)?,
        Medium::Shear(_) => true,
        Medium::Cell(m) => CellDiscretization::new(m, 64, 64)?.is_diffusion_flux_free(),
    })
}

fn require_flux_free(medium: &Medium, waivers: &Waivers) -> Result<(), RegimeError> {
    if !waivers.divergence_free_diffusion_flux && !diffusion_flux_free(medium)? {
        return Err(refuse(
            Hypothesis::DivergenceFreeDiffusionFlux.name(),
            "div(A e) does not vanish, so the averaged limit does not apply",
        ));
    }
    Ok(())
}

/// Constant `eAe` or constant `ζ`, the structure behind the small-diffusion limit.
fn require_alternative(medium: &Medium, waivers: &Waivers) -> Result<(), RegimeError> {
    if waivers.structure {
        return Ok(());
    }
    let n = fine(medium.dimension());
    let eae = medium.directional_diffusion()?;
    // A line medium varies along e; the peak limit needs invariance along e.
    if let Medium::Line(m) = medium {
        if !(is_constant(&m.a, n)? && is_constant(&m.zeta, n)?) {
            return Err(refuse(
                "invariance-along-e",
                "the peak limit needs coefficients invariant along e; use a shear medium",
            ));
        }
    }
    if is_constant(&eae, n)? || is_constant(medium.zeta(), n)? {
        Ok(())
    } else {
        Err(refuse(
            "constant-diffusion-or-growth",
            "neither e·A·e nor zeta is constant",
        ))
    }
}

/// `2√(max ζ · max eAe)` on a fine sampling.
fn peak_limit(medium: &Medium) -> Result<f64, RegimeError> {
    let n = fine(medium.dimension());
    let eae = medium.directional_diffusion()?;
    Ok(2.0 * (max_over_cell(medium.zeta(), n)? * max_over_cell(&eae, n)?).sqrt())
}

/// `2√(⨍eAe · ⨍ζ)` on a fine sampling.
fn average_limit(medium: &Medium) -> Result<f64, RegimeError> {
    let n = fine(medium.dimension());
    let eae = medium.directional_diffusion()?;
    Ok(2.0 * (cell_average(medium.zeta(), n)? * cell_average(&eae, n)?).sqrt())
}

/// `2√(⨍eAe · ⨍ζ)` from the node values of a discretization.
fn grid_average_bound(problem: &SpeedProblem) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let d = problem.discretization();
    2.0 * (mean(d.directional_diffusion()) * mean(d.zeta())).sqrt()
}

struct RowSpec {
    value: f64,
    grid: Vec<usize>,
    scales: Scales,
    /// `quantity = factor · c*`.
    factor: f64,
    limit: Option<f64>,
    bound: Bound,
}

#[derive(Clone, Copy)]
enum Bound {
    None,
    /// General upper bound, rescaled by the row factor.
    Upper,
    /// Averaged lower bound `2√(⨍eAe·⨍ζ)` of the rescaled speed.
    AveragedLower,
}

fn run_row(medium: &Medium, spec: &RowSpec, opts: &SweepOptions) -> Result<SweepRow, RegimeError> {
    let problem = SpeedProblem::new(medium, &spec.grid, spec.scales)?;
    let r: SpeedResult = problem.minimal_speed(&opts.speed)?;
    let quantity = spec.factor * r.c_star;
    let bound = match spec.bound {
        Bound::None => None,
        Bound::Upper => Some(spec.factor * upper_bound(medium, &spec.grid, spec.scales)?),
        Bound::AveragedLower => Some(grid_average_bound(&problem)),
    };
    Ok(SweepRow {
        value: spec.value,
        grid: spec.grid.clone(),
        c_star: r.c_star,
        lambda_star: r.lambda_star,
        quantity,
        theory_limit: spec.limit,
        rel_error: spec.limit.map(|l| ((quantity - l) / l).abs()),
        bound,
        bracket_failure: r.bracket_failure,
    })
}

struct TableSpec<'a> {
    sweep: &'a str,
    parameter: &'a str,
    quantity: &'a str,
    limit_tag: &'a str,
    bound_kind: Option<BoundKind>,
    trend: Option<Trend>,
    gamma: Option<f64>,
    mode: Option<&'a str>,
}

fn run_table(
    medium: &Medium,
    specs: Vec<RowSpec>,
    table: TableSpec<'_>,
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    let rows = specs
        .par_iter()
        .map(|s| run_row(medium, s, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let quantities: Vec<f64> = rows.iter().map(|r| r.quantity).collect();
    let monotonicity = table.trend.map(|t| monotone_verdict(&quantities, t));
    Ok(SweepTable {
        sweep: table.sweep.into(),
        parameter: table.parameter.into(),
        quantity: table.quantity.into(),
        limit_tag: table.limit_tag.into(),
        bound_kind: table.bound_kind,
        convergence_rate: observed_rate(&rows),
        extrapolated: aitken(&quantities),
        monotonicity,
        rows,
        metadata: SweepMetadata {
            medium_hash: medium.hash(),
            medium_kind: medium.kind().into(),
            base_grid: base_grid(medium, opts),
            tol: opts.speed.tol,
            eigen_tol: opts.speed.eigen.tol,
            gamma: table.gamma,
            mode: table.mode.map(Into::into),
        },
    })
}

/// Small-diffusion sweep `c*(εA)/√ε → 2√(max ζ · max eAe)` as `ε → 0`.
///
/// Needs a shear or line medium without flow in which `eAe` or `ζ` is constant.
pub fn sweep_small_diffusion(
    medium: &Medium,
    epsilons: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(epsilons)?;
    if matches!(medium, Medium::Cell(_)) {
        return Err(RegimeError::Invalid(
            "the small-diffusion sweep takes line or shear media".into(),
        ));
    }
    if !flow_is_trivial(medium) {
        return Err(RegimeError::Invalid(
            "the medium carries a flow; use the shear-flow small-diffusion sweep".into(),
        ));
    }
    require_admissible(medium, &opts.waivers)?;
    require_alternative(medium, &opts.waivers)?;
    let limit = peak_limit(medium)?;
    let base = base_grid(medium, opts);
    let specs = epsilons
        .iter()
        .map(|&eps| {
            Ok(RowSpec {
                value: eps,
                grid: adapted_grid(medium, &base, eps, opts),
                scales: Scales::small_diffusion(eps)?,
                factor: 1.0 / eps.sqrt(),
                limit: Some(limit),
                bound: Bound::Upper,
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    run_table(
        medium,
        specs,
        TableSpec {
            sweep: "small-diffusion",
            parameter: "epsilon",
            quantity: "c*/sqrt(epsilon)",
            limit_tag: "small-diffusion limit 2*sqrt(max zeta * max eAe)",
            bound_kind: Some(BoundKind::Upper),
            trend: None,
            gamma: None,
            mode: None,
        },
        opts,
    )
}

/// Small-diffusion sweep with a shear flow: `c*(εA, q) → max(−q₁)` as `ε → 0`.
///
/// The per-row bound is `max(−q₁) + 2√ε·√(max α)·√(max ζ)`.
pub fn sweep_small_diffusion_shear(
    medium: &ShearMedium,
    epsilons: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(epsilons)?;
    let q1 = medium
        .q1
        .as_ref()
        .ok_or_else(|| RegimeError::Invalid("the shear-flow sweep needs a flow q1".into()))?;
    let wrapped = Medium::Shear(medium.clone());
    require_admissible(&wrapped, &opts.waivers)?;
    let limit = -crate::medium::min_over_cell(q1, FINE_1D)?;
    let base = base_grid(&wrapped, opts);
    let specs = epsilons
        .iter()
        .map(|&eps| {
            Ok(RowSpec {
                value: eps,
                grid: adapted_grid(&wrapped, &base, eps, opts),
                scales: Scales::small_diffusion(eps)?,
                factor: 1.0,
                limit: Some(limit),
                bound: Bound::Upper,
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    run_table(
        &wrapped,
        specs,
        TableSpec {
            sweep: "small-diffusion-shear",
            parameter: "epsilon",
            quantity: "c*",
            limit_tag: "shear-flow limit max(-q1)",
            bound_kind: Some(BoundKind::Upper),
            trend: None,
            gamma: None,
            mode: None,
        },
        opts,
    )
}

/// Large-diffusion sweep `c*(MA, M^γ q)/√M → 2√(⨍eAe · ⨍ζ)` as `M → ∞`.
///
/// Needs `∇·(A e) = 0` and `0 ≤ γ ≤ ½`. Each row also carries the discrete
/// lower bound `2√(⨍eAe · ⨍ζ)`. With `γ = ½` on a shear medium the rows must
/// decrease in `M`.
pub fn sweep_large_diffusion(
    medium: &Medium,
    ms: &[f64],
    gamma: f64,
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(ms)?;
    Scales::large_diffusion(1.0, gamma)?;
    require_admissible(medium, &opts.waivers)?;
    require_flux_free(medium, &opts.waivers)?;
    let limit = average_limit(medium)?;
    let base = base_grid(medium, opts);
    let specs = ms
        .iter()
        .map(|&m| {
            Ok(RowSpec {
                value: m,
                grid: base.clone(),
                scales: Scales::large_diffusion(m, gamma)?,
                factor: 1.0 / m.sqrt(),
                limit: Some(limit),
                bound: Bound::AveragedLower,
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    let trend = (gamma == 0.5 && matches!(medium, Medium::Shear(_))).then_some(Trend::Decreasing);
    run_table(
        medium,
        specs,
        TableSpec {
            sweep: "large-diffusion",
            parameter: "M",
            quantity: "c*/sqrt(M)",
            limit_tag: "large-diffusion limit 2*sqrt(mean eAe * mean zeta)",
            bound_kind: Some(BoundKind::Lower),
            trend,
            gamma: Some(gamma),
            mode: None,
        },
        opts,
    )
}

/// Direction of the reaction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionMode {
    /// `c*(A, Bζ)/√B → 2√(max ζ · max eAe)` as `B → ∞`.
    ToInfinity,
    /// `c*(A, B^γ q, Bζ)/√B → 2√(⨍eAe · ⨍ζ)` as `B → 0`, computed on a
    /// two-dimensional cell.
    ToZero,
    /// `B ↦ c*(A, √B q, Bζ)/√B` on a shear medium, which increases in `B`.
    Monotone,
}

/// Reaction-amplitude sweep.
pub fn sweep_reaction(
    medium: &Medium,
    bs: &[f64],
    mode: ReactionMode,
    gamma: f64,
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(bs)?;
    require_admissible(medium, &opts.waivers)?;
    match mode {
        ReactionMode::ToInfinity => {
            if matches!(medium, Medium::Cell(_)) {
                return Err(RegimeError::Invalid(
                    "the fast-reaction sweep takes line or shear media".into(),
                ));
            }
            if !flow_is_trivial(medium) && !opts.waivers.structure {
                return Err(refuse(
                    "no-flow",
                    "the fast-reaction limit is stated without flow",
                ));
            }
            require_alternative(medium, &opts.waivers)?;
            let limit = peak_limit(medium)?;
            let base = base_grid(medium, opts);
            let specs = bs
                .iter()
                .map(|&b| {
                    Ok(RowSpec {
                        value: b,
                        grid: adapted_grid(medium, &base, 1.0 / b, opts),
                        scales: Scales::reaction(b, gamma.max(0.5))?,
                        factor: 1.0 / b.sqrt(),
                        limit: Some(limit),
                        bound: Bound::Upper,
                    })
                })
                .collect::<Result<Vec<_>, RegimeError>>()?;
            run_table(
                medium,
                specs,
                TableSpec {
                    sweep: "reaction",
                    parameter: "B",
                    quantity: "c*/sqrt(B)",
                    limit_tag: "fast-reaction limit 2*sqrt(max zeta * max eAe)",
                    bound_kind: Some(BoundKind::Upper),
                    trend: None,
                    gamma: Some(gamma.max(0.5)),
                    mode: Some("to-infinity"),
                },
                opts,
            )
        }
        ReactionMode::ToZero => {
            Scales::reaction(1.0, gamma)?;
            require_flux_free(medium, &opts.waivers)?;
            let cell = match medium {
                Medium::Shear(m) => Medium::Cell(m.to_cell(m.period)?),
                other => other.clone(),
            };
            let limit = average_limit(&cell)?;
            let base = base_grid(&cell, opts);
            let specs = bs
                .iter()
                .map(|&b| {
                    Ok(RowSpec {
                        value: b,
                        grid: base.clone(),
                        scales: Scales::reaction(b, gamma)?,
                        factor: 1.0 / b.sqrt(),
                        limit: Some(limit),
                        bound: Bound::AveragedLower,
                    })
                })
                .collect::<Result<Vec<_>, RegimeError>>()?;
            run_table(
                &cell,
                specs,
                TableSpec {
                    sweep: "reaction",
                    parameter: "B",
                    quantity: "c*/sqrt(B)",
                    limit_tag: "slow-reaction limit 2*sqrt(mean eAe * mean zeta)",
                    bound_kind: Some(BoundKind::Lower),
                    trend: None,
                    gamma: Some(gamma),
                    mode: Some("to-zero"),
                },
                opts,
            )
        }
        ReactionMode::Monotone => {
            if !matches!(medium, Medium::Shear(_)) {
                return Err(RegimeError::Invalid(
                    "the monotone reaction sweep takes shear media".into(),
                ));
            }
            let base = base_grid(medium, opts);
            let specs = bs
                .iter()
                .map(|&b| {
                    Ok(RowSpec {
                        value: b,
                        grid: adapted_grid(medium, &base, 1.0 / b, opts),
                        scales: Scales::reaction(b, 0.5)?,
                        factor: 1.0 / b.sqrt(),
                        limit: None,
                        bound: Bound::None,
                    })
                })
                .collect::<Result<Vec<_>, RegimeError>>()?;
            run_table(
                medium,
                specs,
                TableSpec {
                    sweep: "reaction",
                    parameter: "B",
                    quantity: "c*/sqrt(B)",
                    limit_tag: "none",
                    bound_kind: None,
                    trend: Some(Trend::Increasing),
                    gamma: Some(0.5),
                    mode: Some("monotone"),
                },
                opts,
            )
        }
    }
}

/// `c*_L = L·c*(A/L², q/L, ζ)`: the speed in the medium dilated by `L`,
/// computed on the unit-period grid without re-meshing.
pub fn scaled_speed_by_period(
    medium: &Medium,
    grid: &[usize],
    base: Scales,
    period: f64,
    opts: &SpeedOptions,
) -> Result<SpeedResult, RegimeError> {
    if !(period.is_finite() && period > 0.0) {
        return Err(RegimeError::Invalid(format!(
            "period factor must be positive, got {period}"
        )));
    }
    let scales = Scales::new(
        base.diffusion / (period * period),
        base.advection / period,
        base.reaction,
    )?;
    let mut r = SpeedProblem::new(medium, grid, scales)?.minimal_speed(opts)?;
    r.c_star *= period;
    r.lambda_star /= period;
    r.k_at_star = r.c_star * r.lambda_star;
    Ok(r)
}

fn period_limits(
    medium: &Medium,
    waivers: &Waivers,
) -> Result<(Option<f64>, Option<f64>), RegimeError> {
    let small = match medium {
        Medium::Line(m) => {
            Some(2.0 * (harmonic_mean(&m.a, FINE_1D)? * cell_average(&m.zeta, FINE_1D)?).sqrt())
        }
        _ if waivers.divergence_free_diffusion_flux || diffusion_flux_free(medium)? => {
            Some(average_limit(medium)?)
        }
        _ => None,
    };
    let large = match medium {
        Medium::Shear(_)
            if flow_is_trivial(medium)
                && require_alternative(medium, &Waivers::default()).is_ok() =>
        {
            Some(peak_limit(medium)?)
        }
        _ => None,
    };
    Ok((small, large))
}

/// Period sweep `L ↦ c*_L`.
///
/// Rows with `L < 1` carry the small-period limit (`2√(a_H ⨍ζ)` with the
/// harmonic mean `a_H` on a line, `2√(⨍eAe · ⨍ζ)` otherwise); rows with
/// `L > 1` carry `2√(max ζ · max eAe)` for shear media without flow.
/// Shear media must give a speed that increases with `L`.
pub fn sweep_period(
    medium: &Medium,
    ls: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(ls)?;
    require_admissible(medium, &opts.waivers)?;
    let (small, large) = period_limits(medium, &opts.waivers)?;
    let base = base_grid(medium, opts);
    let specs = ls
        .iter()
        .map(|&l| {
            Ok(RowSpec {
                value: l,
                grid: adapted_grid(medium, &base, 1.0 / (l * l), opts),
                scales: Scales::new(1.0 / (l * l), 1.0 / l, 1.0)?,
                factor: l,
                limit: match l {
                    l if l < 1.0 => small,
                    l if l > 1.0 => large,
                    _ => None,
                },
                bound: Bound::None,
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    let trend = matches!(medium, Medium::Shear(_)).then_some(Trend::Increasing);
    run_table(
        medium,
        specs,
        TableSpec {
            sweep: "period",
            parameter: "L",
            quantity: "c*_L",
            limit_tag: "small-period limit for L < 1, large-period limit for L > 1",
            bound_kind: None,
            trend,
            gamma: None,
            mode: None,
        },
        opts,
    )
}

/// Homogenized speeds `c_ε = ε·c*(A/ε², q/ε, ζ) → 2√(⨍eAe · ⨍ζ)` as `ε → 0`.
pub fn homogenized_speed(
    medium: &Medium,
    epsilons: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, RegimeError> {
    check_values(epsilons)?;
    require_admissible(medium, &opts.waivers)?;
    require_flux_free(medium, &opts.waivers)?;
    let limit = average_limit(medium)?;
    let base = base_grid(medium, opts);
    let specs = epsilons
        .iter()
        .map(|&eps| {
            Ok(RowSpec {
                value: eps,
                grid: base.clone(),
                scales: Scales::new(1.0 / (eps * eps), 1.0 / eps, 1.0)?,
                factor: eps,
                limit: Some(limit),
                bound: Bound::AveragedLower,
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    run_table(
        medium,
        specs,
        TableSpec {
            sweep: "homogenization",
            parameter: "epsilon",
            quantity: "c_epsilon",
            limit_tag: "homogenization limit 2*sqrt(mean eAe * mean zeta)",
            bound_kind: Some(BoundKind::Lower),
            trend: None,
            gamma: Some(0.5),
            mode: None,
        },
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::presets;

    fn quick() -> SweepOptions {
        SweepOptions {
            grid: Some(vec![32]),
            ..Default::default()
        }
    }

    #[test]
    fn aitken_recovers_geometric_limits() {
        let v: Vec<f64> = (0..5).map(|i| 2.0 + 0.5_f64.powi(i)).collect();
        assert!((aitken(&v).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(aitken(&[1.0, 2.0]), None);
    }

    #[test]
    fn monotone_verdict_counts_wrong_steps() {
        let v = monotone_verdict(&[1.0, 2.0, 1.5, 3.0], Trend::Increasing);
        assert_eq!(v.violations, vec![1]);
        assert!((v.max_violation - 0.5).abs() < 1e-15);
        assert!(monotone_verdict(&[3.0, 2.0, 1.0], Trend::Decreasing).holds());
    }

    #[test]
    fn small_diffusion_refuses_variable_alpha_and_zeta() {
        let f = CoefficientField::line(
            1.0,
            crate::medium::Profile::Cosine {
                mean: 1.0,
                amplitude: 0.5,
            },
        )
        .unwrap();
        let m = Medium::Shear(ShearMedium::new(f.clone(), f, None).unwrap());
        let err = sweep_small_diffusion(&m, &[0.1], &quick()).unwrap_err();
        assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err}");
        let opts = SweepOptions {
            waivers: Waivers {
                structure: true,
                ..Default::default()
            },
            ..quick()
        };
        assert!(sweep_small_diffusion(&m, &[0.1], &opts).is_ok());
    }

    #[test]
    fn peak_limits_refuse_media_varying_along_e() {
        let err =
            sweep_small_diffusion(&presets::cosine_growth_line(), &[0.1], &quick()).unwrap_err();
        assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err}");
        assert!(sweep_small_diffusion(&presets::constant_line(), &[0.1], &quick()).is_ok());
    }

    #[test]
    fn nonzero_mean_flow_is_refused_unless_waived() {
        let one = CoefficientField::constant_line(1.0, 1.0).unwrap();
        let q = CoefficientField::constant_line(1.0, 0.5).unwrap();
        let m = ShearMedium::new(one.clone(), one, Some(q)).unwrap();
        assert!(matches!(
            sweep_small_diffusion_shear(&m, &[0.1], &quick()),
            Err(RegimeError::Hypothesis { .. })
        ));
        let opts = SweepOptions {
            waivers: Waivers {
                zero_average: true,
                ..Default::default()
            },
            ..quick()
        };
        let t = sweep_small_diffusion_shear(&m, &[0.1], &opts).unwrap();
        // Constant coefficients: c* = 2√ε − q₁.
        assert!((t.rows[0].c_star - (2.0 * 0.1_f64.sqrt() - 0.5)).abs() < 1e-8);
    }

    #[test]
    fn large_diffusion_refuses_layered_line() {
        let err =
            sweep_large_diffusion(&presets::layered_line(), &[10.0], 0.0, &quick()).unwrap_err();
        assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err}");
    }

    #[test]
    fn large_diffusion_rejects_bad_exponent() {
        let m = Medium::Shear(presets::shear_growth());
        assert!(sweep_large_diffusion(&m, &[10.0], 0.7, &quick()).is_err());
    }

    #[test]
    fn period_scaling_is_exact() {
        let m = presets::cosine_growth_line();
        let opts = SpeedOptions::default();
        let l = 3.0;
        let scaled = scaled_speed_by_period(&m, &[32], Scales::UNIT, l, &opts).unwrap();
        let direct = SpeedProblem::new(&m, &[32], Scales::new(1.0 / 9.0, 1.0 / 3.0, 1.0).unwrap())
            .unwrap()
            .minimal_speed(&opts)
            .unwrap();
        assert!((scaled.c_star - l * direct.c_star).abs() <= 1e-12 * scaled.c_star);
    }

    #[test]
    fn csv_has_the_documented_header_and_digits() {
        let t = sweep_large_diffusion(
            &Medium::Shear(presets::shear_growth()),
            &[1.0, 10.0],
            0.5,
            &quick(),
        )
        .unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "parameter,value,quantity,theory_limit,rel_error"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "M");
        assert_eq!(first[1], "1.0000000000000000e0");
        assert!(!csv.contains('\r'));
        let back = SweepTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
