//! Minimal speed `c* = min_{λ>0} k(λ)/λ`.
//!
//! `λ ↦ k(λ)` is convex, so `k(λ)/λ` is unimodal on `(0, ∞)`. The minimum is
//! located by a scan on a logarithmic grid of decay rates followed by
//! golden-section refinement in `ln λ` around the best probe. Each eigenvalue
//! solve is warm-started from the previous eigenvector.

use serde::{Deserialize, Serialize};

use crate::assembly::{AssemblyError, Discretization, Grid, Scales};
use crate::eigen::{principal_eig, EigenError, EigenOptions, PrincipalPair};
use crate::medium::{Medium, MediumError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpeedError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error("{0}")]
    Invalid(String),
}

/// Options of the minimization over `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedOptions {
    /// Relative width of the final `λ` bracket.
    pub tol: f64,
    /// Search interval; defaults to `[10⁻³ λ̂, 10³ λ̂]` with
    /// `λ̂ = √(B⨍ζ / (D⨍eAe))`, the minimizer of the averaged problem.
    pub lambda_range: Option<(f64, f64)>,
    /// Number of logarithmically spaced scan probes.
    pub probes: usize,
    pub eigen: EigenOptions,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions {
            tol: 1e-6,
            lambda_range: None,
            probes: 40,
            eigen: EigenOptions::default(),
        }
    }
}

/// Outcome of [`SpeedProblem::minimal_speed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedResult {
    pub c_star: f64,
    pub lambda_star: f64,
    pub k_at_star: f64,
    /// `(λ, k(λ)/λ)` at every scan probe.
    pub scan: Vec<(f64, f64)>,
    pub lambda_range: (f64, f64),
    /// Final `λ` bracket.
    pub bracket: (f64, f64),
    /// Spread of `k/λ` over the last refinement points.
    pub bracket_error: f64,
    /// The scan minimum sat at an end of the search interval.
    pub bracket_failure: bool,
    pub evaluations: usize,
}

/// A discretized medium with fixed scales, ready for eigenvalue solves.
#[derive(Debug, Clone)]
pub struct SpeedProblem {
    disc: Discretization,
    pub scales: Scales,
}

impl SpeedProblem {
    /// `grid = [n]` or `[n₁, n₂]`.
    pub fn new(medium: &Medium, grid: &[usize], scales: Scales) -> Result<Self, SpeedError> {
        Scales::new(scales.diffusion, scales.advection, scales.reaction)?;
        Ok(SpeedProblem {
            disc: Discretization::new(medium, grid)?,
            scales,
        })
    }

    pub fn from_discretization(disc: Discretization, scales: Scales) -> Result<Self, SpeedError> {
        Scales::new(scales.diffusion, scales.advection, scales.reaction)?;
        Ok(SpeedProblem { disc, scales })
    }

    /// The same discretization with other scales.
    pub fn with_scales(&self, scales: Scales) -> Result<Self, SpeedError> {
        Self::from_discretization(self.disc.clone(), scales)
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn grid(&self) -> Grid {
        self.disc.grid()
    }

    pub fn eigenpair(
        &self,
        lambda: f64,
        opts: &EigenOptions,
        init: Option<&[f64]>,
    ) -> Result<PrincipalPair, SpeedError> {
        let matrix = self.disc.assemble(lambda, self.scales)?;
        Ok(principal_eig(&matrix, opts, init)?)
    }

    /// Principal eigenvalue `k(λ)`.
    pub fn k_of_lambda(&self, lambda: f64) -> Result<f64, SpeedError> {
        Ok(self.eigenpair(lambda, &EigenOptions::default(), None)?.k)
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// `[10⁻³ λ̂, 10³ λ̂]`.
    pub fn default_lambda_range(&self) -> (f64, f64) {
        let zeta = Self::mean(self.disc.zeta()).max(f64::MIN_POSITIVE);
        let eae = Self::mean(self.disc.directional_diffusion());
        let hat = (self.scales.reaction * zeta / (self.scales.diffusion * eae)).sqrt();
        (1e-3 * hat, 1e3 * hat)
    }

    /// `S‖(q·e)⁻‖∞ + 2√(B max ζ · D max eAe)` with maxima over this grid.
    pub fn grid_upper_bound(&self) -> f64 {
        let max = |v: &[f64]| v.iter().fold(f64::NEG_INFINITY, |a, x| a.max(*x));
        let drift = self
            .disc
            .flow_along_direction()
            .map_or(0.0, |q| q.iter().fold(0.0_f64, |a, x| a.max(-x)));
        self.scales.advection * drift
            + 2.0
                * (self.scales.reaction
                    * max(self.disc.zeta())
                    * self.scales.diffusion
                    * max(self.disc.directional_diffusion()))
                .sqrt()
    }

    /// Minimize `k(λ)/λ` over the search interval.
    pub fn minimal_speed(&self, opts: &SpeedOptions) -> Result<SpeedResult, SpeedError> {
        if !(opts.tol > 0.0 && opts.tol < 1.0) {
            return Err(SpeedError::Invalid(format!(
                "tolerance must lie in (0, 1), got {}",
                opts.tol
            )));
        }
        if opts.probes < 3 {
            return Err(SpeedError::Invalid(format!(
                "need at least 3 scan probes, got {}",
                opts.probes
            )));
        }
        let (lo, hi) = opts
            .lambda_range
            .unwrap_or_else(|| self.default_lambda_range());
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(SpeedError::Invalid(format!("invalid λ range [{lo}, {hi}]")));
        }
        let mut eval = Evaluator {
            problem: self,
            eigen: opts.eigen,
            warm: None,
            best: (f64::NAN, f64::NAN, f64::INFINITY),
            evaluations: 0,
        };
        let (la, lb) = (lo.ln(), hi.ln());
        let m = opts.probes;
        let mut scan = Vec::with_capacity(m);
        for i in 0..m {
            let lambda = (la + (lb - la) * i as f64 / (m - 1) as f64).exp();
            scan.push((lambda, eval.phi(lambda)?));
        }
        let j = (0..m)
            .min_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1))
            .unwrap();
        let bracket_failure = j == 0 || j == m - 1;
        let mut a = scan[j.saturating_sub(1)].0.ln();
        let mut b = scan[(j + 1).min(m - 1)].0.ln();
        // Golden-section search in ln λ; the best probe seeds the warm start.
        eval.warm_from(scan[j].0)?;
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = eval.phi(c.exp())?;
        let mut fd = eval.phi(d.exp())?;
        while b - a > opts.tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = eval.phi(c.exp())?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = eval.phi(d.exp())?;
            }
        }
        let (lambda_star, k_at_star, c_star) = eval.best;
        Ok(SpeedResult {
            c_star,
            lambda_star,
            k_at_star,
            scan,
            lambda_range: (lo, hi),
            bracket: (a.exp(), b.exp()),
            bracket_error: (fc - fd).abs(),
            bracket_failure,
            evaluations: eval.evaluations,
        })
    }
}

struct Evaluator<'a> {
    problem: &'a SpeedProblem,
    eigen: EigenOptions,
    warm: Option<Vec<f64>>,
    /// `(λ, k, k/λ)` of the smallest quotient seen so far.
    best: (f64, f64, f64),
    evaluations: usize,
}

impl Evaluator<'_> {
    fn phi(&mut self, lambda: f64) -> Result<f64, SpeedError> {
        let pair = self
            .problem
            .eigenpair(lambda, &self.eigen, self.warm.as_deref())?;
        self.evaluations += 1;
        let q = pair.k / lambda;
        if q < self.best.2 {
            self.best = (lambda, pair.k, q);
        }
        self.warm = Some(pair.psi);
        Ok(q)
    }

    fn warm_from(&mut self, lambda: f64) -> Result<(), SpeedError> {
        let pair = self
            .problem
            .eigenpair(lambda, &self.eigen, self.warm.as_deref())?;
        self.evaluations += 1;
        self.warm = Some(pair.psi);
        Ok(())
    }
}

/// `k(λ)` for a medium on a grid with scales.
pub fn k_of_lambda(
    medium: &Medium,
    grid: &[usize],
    scales: Scales,
    lambda: f64,
) -> Result<f64, SpeedError> {
    SpeedProblem::new(medium, grid, scales)?.k_of_lambda(lambda)
}

/// `c*` for a medium on a grid with scales.
pub fn minimal_speed(
    medium: &Medium,
    grid: &[usize],
    scales: Scales,
    opts: &SpeedOptions,
) -> Result<SpeedResult, SpeedError> {
    SpeedProblem::new(medium, grid, scales)?.minimal_speed(opts)
}

/// Closed form `2√(aζ) − q₁` for constant coefficients.
pub fn analytic_speed_constant(a: f64, zeta: f64, q1: f64) -> Result<f64, SpeedError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(SpeedError::Invalid(format!(
            "diffusion must be positive, got {a}"
        )));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(SpeedError::Invalid(format!(
            "growth rate must be positive, got {zeta}"
        )));
    }
    Ok(2.0 * (a * zeta).sqrt() - q1)
}

/// Upper bound `S‖(q·e)⁻‖∞ + 2√(B max ζ)·√(D max eAe)`.
///
/// Maxima are taken over the union of a fine sampling of the medium and the
/// nodes of `grid`, so the bound also dominates the discrete speed on `grid`.
pub fn upper_bound(medium: &Medium, grid: &[usize], scales: Scales) -> Result<f64, SpeedError> {
    let fine: &[usize] = if medium.dimension() == 1 {
        &[4096]
    } else {
        &[512, 512]
    };
    let mut bound = f64::NEG_INFINITY;
    for g in [fine, grid] {
        bound = bound.max(SpeedProblem::new(medium, g, scales)?.grid_upper_bound());
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::presets;

    #[test]
    fn constant_line_speed_is_two() {
        let r = minimal_speed(
            &presets::constant_line(),
            &[32],
            Scales::UNIT,
            &SpeedOptions::default(),
        )
        .unwrap();
        assert!((r.c_star - 2.0).abs() < 1e-9, "{}", r.c_star);
        assert!((r.lambda_star - 1.0).abs() < 1e-4);
        assert!(!r.bracket_failure);
    }

    #[test]
    fn c_star_is_the_smallest_quotient() {
        let r = minimal_speed(
            &presets::cosine_growth_line(),
            &[32],
            Scales::UNIT,
            &SpeedOptions::default(),
        )
        .unwrap();
        assert!(r.scan.iter().all(|(_, q)| r.c_star <= *q));
        assert!((r.c_star - r.k_at_star / r.lambda_star).abs() < 1e-13);
    }

    #[test]
    fn closed_form_speeds() {
        assert_eq!(analytic_speed_constant(1.0, 1.0, 0.0).unwrap(), 2.0);
        assert_eq!(analytic_speed_constant(1.0, 2.25, 1.0).unwrap(), 2.0);
        assert!(analytic_speed_constant(0.0, 1.0, 0.0).is_err());
        assert!(analytic_speed_constant(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn constant_shear_flow_shifts_the_speed() {
        let one = crate::medium::CoefficientField::constant_line(1.0, 1.0).unwrap();
        let q = crate::medium::CoefficientField::constant_line(1.0, -0.5).unwrap();
        let m = Medium::Shear(crate::medium::ShearMedium::new(one.clone(), one, Some(q)).unwrap());
        let r = minimal_speed(&m, &[16], Scales::UNIT, &SpeedOptions::default()).unwrap();
        assert!((r.c_star - 2.5).abs() < 1e-9);
    }

    #[test]
    fn narrow_range_reports_bracket_failure() {
        let opts = SpeedOptions {
            lambda_range: Some((2.0, 5.0)),
            ..Default::default()
        };
        let r = minimal_speed(&presets::constant_line(), &[16], Scales::UNIT, &opts).unwrap();
        assert!(r.bracket_failure);
    }

    #[test]
    fn bad_options_are_rejected() {
        let m = presets::constant_line();
        let opts = SpeedOptions {
            lambda_range: Some((1.0, 0.5)),
            ..Default::default()
        };
        assert!(minimal_speed(&m, &[16], Scales::UNIT, &opts).is_err());
        let opts = SpeedOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(minimal_speed(&m, &[16], Scales::UNIT, &opts).is_err());
    }
}
