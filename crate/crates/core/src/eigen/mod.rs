//! Principal eigenvalue of the assembled operator.
//!
//! `L_λ` has nonnegative off-diagonal entries and an irreducible stencil, so
//! by Perron–Frobenius it has a real eigenvalue `k` of largest real part with
//! a positive eigenvector. Two solvers are provided:
//!
//! * [`principal_eig_power`]: power iteration on `σI + L` with
//!   `σ = 1 + max |L_ii|`. Simple, but it contracts by `1 − gap/σ` per step.
//! * [`principal_eig_resolvent`]: power iteration on `(σI − L)⁻¹` with `σ`
//!   just above a Collatz–Wielandt upper bound for `k`, refactored as the
//!   bound tightens. Converges in a handful of direct solves.
//!
//! [`growth_rate_oracle`] and [`rayleigh_value`] provide independent checks.

mod banded;

pub use banded::{ShiftedSolver, SolveError};

use serde::{Deserialize, Serialize};

use crate::assembly::OperatorMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error(
        "no convergence after {iterations} iterations: residual {residual:e}, estimate {estimate}"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        estimate: f64,
    },
    #[error(
        "off-diagonal entry ({row}, {col}) = {value:e} is negative; the stencil is not monotone"
    )]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("matrix is not symmetric (max |L - Lᵀ| = {0:e})")]
    NotSymmetric(f64),
    #[error("vector has length {got}, matrix has size {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("starting vector must be positive")]
    NonPositiveStart,
    #[error("time step {dt:e} exceeds the positivity limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Which eigensolver to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Power,
    #[default]
    Resolvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Residual target `‖Lψ − kψ‖ ≤ tol·max(1, |k|)` for unit `ψ`.
    pub tol: f64,
    /// Cap on the number of iterations.
    pub max_iter: usize,
    pub method: EigenMethod,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 200_000,
            method: EigenMethod::Resolvent,
        }
    }
}

/// Principal eigenpair with convergence information.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPair {
    pub k: f64,
    /// Unit-norm eigenvector, positive up to roundoff.
    pub psi: Vec<f64>,
    pub iterations: usize,
    /// Final residual `‖Lψ − kψ‖₂`.
    pub residual: f64,
    /// Collatz–Wielandt bounds `min (Lψ)_i/ψ_i ≤ k ≤ max (Lψ)_i/ψ_i`.
    pub bounds: (f64, f64),
    pub method: EigenMethod,
}

/// Principal eigenpair by the method in `opts`.
pub fn principal_eig(
    matrix: &OperatorMatrix,
    opts: &EigenOptions,
    init: Option<&[f64]>,
) -> Result<PrincipalPair, EigenError> {
    match opts.method {
        EigenMethod::Power => principal_eig_power(matrix, opts, init),
        EigenMethod::Resolvent => principal_eig_resolvent(matrix, opts, init),
    }
}

fn check_monotone(matrix: &OperatorMatrix) -> Result<(), EigenError> {
    match matrix.entries().find(|&(i, j, v)| i != j && v < 0.0) {
        Some((row, col, value)) => Err(EigenError::NegativeOffDiagonal { row, col, value }),
        None => Ok(()),
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn start_vector(n: usize, init: Option<&[f64]>) -> Result<Vec<f64>, EigenError> {
    let mut v = match init {
        Some(v) => {
            if v.len() != n {
                return Err(EigenError::DimensionMismatch {
                    got: v.len(),
                    expected: n,
                });
            }
            if !v.iter().all(|x| x.is_finite() && *x >= 0.0) || v.iter().all(|x| *x == 0.0) {
                return Err(EigenError::NonPositiveStart);
            }
            // Keep every entry positive so the Collatz–Wielandt bounds stay valid.
            let top = v.iter().fold(0.0_f64, |a, x| a.max(*x));
            v.iter().map(|x| x.max(1e-12 * top)).collect()
        }
        None => vec![1.0; n],
    };
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    Ok(v)
}

/// Residual below which further iteration only reshuffles roundoff.
fn roundoff_floor(matrix: &OperatorMatrix) -> f64 {
    64.0 * f64::EPSILON * matrix.norm_inf()
}

fn effective_tol(opts: &EigenOptions, k: f64, floor: f64) -> f64 {
    (opts.tol * k.abs().max(1.0)).max(floor)
}

/// Rayleigh estimate and residual for unit `psi` with `lpsi = Lψ`.
fn estimate(psi: &[f64], lpsi: &[f64]) -> (f64, f64) {
    let k = dot(psi, lpsi);
    let r = psi
        .iter()
        .zip(lpsi)
        .map(|(p, l)| (l - k * p) * (l - k * p))
        .sum::<f64>()
        .sqrt();
    (k, r)
}

/// Collatz–Wielandt bounds over entries that are safely positive.
fn collatz_bounds(psi: &[f64], lpsi: &[f64]) -> (f64, f64) {
    let top = psi.iter().fold(0.0_f64, |a, x| a.max(*x));
    let floor = (top * 1e-200).max(f64::MIN_POSITIVE);
    psi.iter()
        .zip(lpsi)
        .filter(|(p, _)| **p > floor)
        .map(|(p, l)| l / p)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}

/// Power iteration on `σI + L`, `σ = 1 + max |L_ii|`.
pub fn principal_eig_power(
    matrix: &OperatorMatrix,
    opts: &EigenOptions,
    init: Option<&[f64]>,
) -> Result<PrincipalPair, EigenError> {
    check_monotone(matrix)?;
    let n = matrix.size();
    let sigma = 1.0 + matrix.max_abs_diagonal();
    let floor = roundoff_floor(matrix);
    let mut psi = start_vector(n, init)?;
    let mut lpsi = vec![0.0; n];
    let mut last = (f64::NAN, f64::INFINITY);
    for it in 0..opts.max_iter {
        matrix.apply(&psi, &mut lpsi);
        let (k, r) = estimate(&psi, &lpsi);
        last = (k, r);
        if r <= effective_tol(opts, k, floor) {
            return Ok(PrincipalPair {
                k,
                bounds: collatz_bounds(&psi, &lpsi),
                psi,
                iterations: it,
                residual: r,
                method: EigenMethod::Power,
            });
        }
        for (p, l) in psi.iter_mut().zip(&lpsi) {
            *p = sigma * *p + l;
        }
        let s = norm2(&psi);
        psi.iter_mut().for_each(|x| *x /= s);
    }
    Err(EigenError::NotConverged {
        iterations: opts.max_iter,
        residual: last.1,
        estimate: last.0,
    })
}

/// Shift-and-invert power iteration on `(σI − L)⁻¹`.
///
/// `σ` sits above an upper bound of the principal eigenvalue by the bound's
/// distance to the current estimate, so `σI − L` is a nonsingular M-matrix
/// and its inverse is entrywise positive; the factorization is renewed
/// whenever the bound has moved substantially closer to `k`.
pub fn principal_eig_resolvent(
    matrix: &OperatorMatrix,
    opts: &EigenOptions,
    init: Option<&[f64]>,
) -> Result<PrincipalPair, EigenError> {
    check_monotone(matrix)?;
    let n = matrix.size();
    let scale = matrix.norm_inf().max(1.0);
    let floor = roundoff_floor(matrix);
    let max_row_sum = matrix
        .row_sums()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut psi = start_vector(n, init)?;
    let mut lpsi = matrix.mul_vec(&psi);
    let (mut k, mut r) = estimate(&psi, &lpsi);
    let mut bounds = collatz_bounds(&psi, &lpsi);
    let mut iterations = 0;
    let mut factorizations = 0;
    let done = |k: f64, r: f64| r <= effective_tol(opts, k, floor);
    while !done(k, r) {
        if iterations >= opts.max_iter || factorizations > 60 {
            return Err(EigenError::NotConverged {
                iterations,
                residual: r,
                estimate: k,
            });
        }
        // Both the Collatz–Wielandt bound and the largest row sum dominate
        // the principal eigenvalue. Shifting past the bound by its distance to
        // the estimate keeps σI − L an M-matrix while σ − k shrinks with the
        // bound, independently of the lower bound, which stays loose for
        // localized eigenvectors.
        let hi = bounds.1.min(max_row_sum);
        let mut sigma = hi.max(k) + (hi - k).max(1e-12 * scale);
        let solver = match ShiftedSolver::factor(matrix, sigma) {
            Ok(s) => s,
            Err(SolveError::NonPositivePivot { .. }) => {
                // The bound was spoiled by roundoff; the largest row sum always dominates k.
                sigma = max_row_sum + 1e-8 * scale;
                ShiftedSolver::factor(matrix, sigma)?
            }
            Err(e) => return Err(e.into()),
        };
        factorizations += 1;
        let mut previous = r;
        loop {
            solver.solve_in_place(&mut psi);
            let top = psi.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            if !(top.is_finite() && top > 0.0) {
                return Err(EigenError::Invalid(
                    "shifted solve produced a non-finite vector".into(),
                ));
            }
            // Entries of a positive vector can round to tiny negatives in the far tails.
            psi.iter_mut().for_each(|x| *x = x.max(0.0));
            let s = norm2(&psi);
            psi.iter_mut().for_each(|x| *x /= s);
            matrix.apply(&psi, &mut lpsi);
            (k, r) = estimate(&psi, &lpsi);
            bounds = collatz_bounds(&psi, &lpsi);
            iterations += 1;
            if done(k, r) || iterations >= opts.max_iter {
                break;
            }
            // Renew the factorization only when convergence is slow and the
            // upper bound now allows a much closer shift.
            let slow = r > 0.25 * previous;
            if slow && bounds.1 - k < 0.25 * (sigma - k) {
                break;
            }
            previous = r;
        }
    }
    Ok(PrincipalPair {
        k,
        psi,
        iterations,
        residual: r,
        bounds,
        method: EigenMethod::Resolvent,
    })
}

/// Rayleigh quotient `vᵀLv / vᵀv` of a symmetric operator.
pub fn rayleigh_value(matrix: &OperatorMatrix, v: &[f64]) -> Result<f64, EigenError> {
    if v.len() != matrix.size() {
        return Err(EigenError::DimensionMismatch {
            got: v.len(),
            expected: matrix.size(),
        });
    }
    let asym = matrix.asymmetry();
    if !matrix.symmetric || asym > 0.0 {
        return Err(EigenError::NotSymmetric(asym));
    }
    let vv = dot(v, v);
    if vv == 0.0 {
        return Err(EigenError::Invalid("zero vector".into()));
    }
    Ok(dot(v, &matrix.mul_vec(v)) / vv)
}

/// Exponential growth rate of `v' = Lv` from explicit Euler steps.
///
/// One step multiplies by `I + dt·L`, whose principal eigenvalue is exactly
/// `1 + dt·k`, so `(‖v_{s+1}‖₁/‖v_s‖₁ − 1)/dt` tends to `k`. The estimate is
/// averaged over the last fifth of the horizon. `dt` defaults to the largest
/// step that keeps `I + dt·L` nonnegative.
pub fn growth_rate_oracle(
    matrix: &OperatorMatrix,
    horizon: f64,
    dt: Option<f64>,
) -> Result<f64, EigenError> {
    check_monotone(matrix)?;
    let n = matrix.size();
    let stiff = matrix
        .diagonal()
        .into_iter()
        .fold(0.0_f64, |a, v| a.max(-v));
    let limit = if stiff > 0.0 {
        1.0 / stiff
    } else {
        f64::INFINITY
    };
    let dt = dt.unwrap_or(if limit.is_finite() { limit } else { 1e-2 });
    if !(dt > 0.0 && dt.is_finite()) || dt > limit * (1.0 + 1e-12) {
        return Err(EigenError::StepTooLarge { dt, limit });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(EigenError::Invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let steps = (horizon / dt).ceil() as usize;
    let tail = (steps / 5).max(1);
    let mut v = vec![1.0 / n as f64; n];
    let mut lv = vec![0.0; n];
    let mut acc = 0.0;
    for s in 0..steps {
        matrix.apply(&v, &mut lv);
        let mut total = 0.0;
        for (x, l) in v.iter_mut().zip(&lv) {
            *x += dt * l;
            total += *x;
        }
        if s >= steps - tail {
            acc += (total - 1.0) / dt;
        }
        v.iter_mut().for_each(|x| *x /= total);
    }
    Ok(acc / tail as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_cross_section_operator, assemble_line_operator, Scales};

    fn cosine(n: usize, mean: f64, amplitude: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                mean + amplitude * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos()
            })
            .collect()
    }

    #[test]
    fn constant_medium_eigenvalue_is_lambda_squared_plus_one() {
        for lambda in [0.5, 1.0, 2.0] {
            let l =
                assemble_line_operator(&[1.0; 32], &[1.0; 32], 1.0, lambda, Scales::UNIT).unwrap();
            for method in [EigenMethod::Power, EigenMethod::Resolvent] {
                let opts = EigenOptions {
                    method,
                    ..Default::default()
                };
                let pair = principal_eig(&l, &opts, None).unwrap();
                assert!(
                    (pair.k - (lambda * lambda + 1.0)).abs() < 1e-10,
                    "{method:?}: {}",
                    pair.k
                );
            }
        }
    }

    #[test]
    fn vanishing_growth_and_decay_rate_give_zero() {
        let l = assemble_line_operator(&[1.0; 16], &[0.0; 16], 1.0, 1e-9, Scales::UNIT).unwrap();
        let pair = principal_eig_resolvent(&l, &EigenOptions::default(), None).unwrap();
        assert!(pair.k.abs() < 1e-8);
    }

    #[test]
    fn shifting_zeta_shifts_the_eigenvalue() {
        let a = cosine(48, 1.0, 0.4);
        let z = cosine(48, 1.0, 0.5);
        let z2: Vec<f64> = z.iter().map(|v| v + 0.75).collect();
        let l1 = assemble_line_operator(&a, &z, 1.0, 0.9, Scales::UNIT).unwrap();
        let l2 = assemble_line_operator(&a, &z2, 1.0, 0.9, Scales::UNIT).unwrap();
        let opts = EigenOptions::default();
        let k1 = principal_eig(&l1, &opts, None).unwrap().k;
        let k2 = principal_eig(&l2, &opts, None).unwrap().k;
        assert!((k2 - k1 - 0.75).abs() < 1e-9);
    }

    #[test]
    fn solvers_agree_and_eigenvector_is_positive() {
        let a = cosine(40, 1.0, 0.5);
        let z = cosine(40, 1.2, 0.7);
        let l = assemble_line_operator(&a, &z, 1.0, 1.3, Scales::small_diffusion(0.3).unwrap())
            .unwrap();
        let p = principal_eig_power(
            &l,
            &EigenOptions {
                method: EigenMethod::Power,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let r = principal_eig_resolvent(&l, &EigenOptions::default(), None).unwrap();
        assert!((p.k - r.k).abs() < 1e-8, "{} vs {}", p.k, r.k);
        assert!(r.psi.iter().all(|v| *v > 0.0));
        assert!(r.bounds.0 <= r.k + 1e-9 && r.k <= r.bounds.1 + 1e-9);
        let lp = l.mul_vec(&r.psi);
        let res = lp
            .iter()
            .zip(&r.psi)
            .map(|(x, y)| (x - r.k * y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-9);
    }

    #[test]
    fn warm_start_converges_to_the_same_pair() {
        let a = cosine(40, 1.0, 0.5);
        let z = cosine(40, 1.0, 0.5);
        let l1 = assemble_line_operator(&a, &z, 1.0, 1.0, Scales::UNIT).unwrap();
        let l2 = assemble_line_operator(&a, &z, 1.0, 1.1, Scales::UNIT).unwrap();
        let opts = EigenOptions::default();
        let first = principal_eig(&l1, &opts, None).unwrap();
        let cold = principal_eig(&l2, &opts, None).unwrap();
        let warm = principal_eig(&l2, &opts, Some(&first.psi)).unwrap();
        assert!((cold.k - warm.k).abs() < 1e-10);
    }

    #[test]
    fn negative_off_diagonal_is_rejected() {
        let mut l = assemble_line_operator(&[1.0; 8], &[1.0; 8], 1.0, 1.0, Scales::UNIT).unwrap();
        l.set_entry(0, 1, -0.5);
        assert!(matches!(
            principal_eig(&l, &EigenOptions::default(), None),
            Err(EigenError::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn growth_oracle_matches_the_eigenvalue() {
        let a = cosine(32, 1.0, 0.3);
        let z = cosine(32, 1.0, 0.5);
        let l = assemble_line_operator(&a, &z, 1.0, 1.0, Scales::UNIT).unwrap();
        let k = principal_eig(&l, &EigenOptions::default(), None).unwrap().k;
        let g = growth_rate_oracle(&l, 50.0, None).unwrap();
        assert!((g - k).abs() < 1e-8, "{g} vs {k}");
    }

    #[test]
    fn growth_oracle_rejects_unstable_steps() {
        let l = assemble_line_operator(&[1.0; 32], &[1.0; 32], 1.0, 1.0, Scales::UNIT).unwrap();
        assert!(matches!(
            growth_rate_oracle(&l, 1.0, Some(1.0)),
            Err(EigenError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn rayleigh_quotient_requires_symmetry() {
        let l = assemble_line_operator(&[1.0; 8], &[1.0; 8], 1.0, 1.0, Scales::UNIT).unwrap();
        assert!(matches!(
            rayleigh_value(&l, &[1.0; 8]),
            Err(EigenError::NotSymmetric(_))
        ));
        let s = assemble_cross_section_operator(
            &[1.0; 8],
            &[1.0; 8],
            &[1.0; 8],
            None,
            1.0,
            1.0,
            Scales::UNIT,
        )
        .unwrap();
        assert!((rayleigh_value(&s, &[1.0; 8]).unwrap() - 2.0).abs() < 1e-12);
    }
}
