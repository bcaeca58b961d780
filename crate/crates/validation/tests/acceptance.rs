//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so every verdict is printed, including
//! the passing ones.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use frontspeed_core::assembly::{assemble_cell_operator, Scales, ShearDiscretization};
use frontspeed_core::eigen::{
    growth_rate_oracle, principal_eig_power, rayleigh_value, EigenOptions,
};
use frontspeed_core::frontsim::{measure_spreading_speed, SimOptions};
use frontspeed_core::medium::{harmonic_mean, max_over_cell, presets, validate, Hypothesis};
use frontspeed_core::regimes::{
    homogenized_speed, sweep_large_diffusion, sweep_period, sweep_reaction, sweep_small_diffusion,
    sweep_small_diffusion_shear, BoundKind, ReactionMode, SweepOptions, SweepTable, Trend,
};
use frontspeed_core::speed::{upper_bound, SpeedProblem};
use frontspeed_core::{Discretization, Medium, OperatorMatrix, SpeedOptions};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

/// Collects the failed sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.check(
            t < limit,
            format!(
                "runtime {:.1}s (limit {}s)",
                t.as_secs_f64(),
                limit.as_secs()
            ),
        );
    }

    fn finish(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            let mut all = self.failures;
            all.extend(self.notes.into_iter().map(|n| format!("ok: {n}")));
            Err(all.join("; "))
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn speed(medium: &Medium, grid: &[usize], scales: Scales) -> Result<f64, String> {
    SpeedProblem::new(medium, grid, scales)
        .and_then(|p| p.minimal_speed(&SpeedOptions::default()))
        .map(|r| r.c_star)
        .map_err(|e| e.to_string())
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn bounds_hold(table: &SweepTable) -> bool {
    table.bound_violations().is_empty() && table.rows.iter().all(|r| r.bound.is_some())
}

fn constant_coefficients() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = presets::constant_line();
    let cs = speed(&m, &[128], Scales::UNIT)?;
    c.check(
        rel(cs, 2.0) <= 1e-6,
        format!("c* = {cs:.10} (target 2 within 1e-6)"),
    );
    let p = SpeedProblem::new(&m, &[128], Scales::UNIT).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for lambda in [0.5, 1.0, 2.0] {
        let k = p.k_of_lambda(lambda).map_err(|e| e.to_string())?;
        worst = worst.max((k - (lambda * lambda + 1.0)).abs());
    }
    c.check(worst <= 1e-8, format!("max |k − (λ²+1)| = {worst:.1e}"));
    c.runtime(start, Duration::from_secs(1));
    c.finish()
}

fn upper_bound_holds() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    for (name, m) in presets::bound_media() {
        let grid: Vec<usize> = if m.dimension() == 1 {
            vec![128]
        } else {
            vec![64, 64]
        };
        let cs = speed(&m, &grid, Scales::UNIT)?;
        let bound = upper_bound(&m, &grid, Scales::UNIT).map_err(|e| e.to_string())?;
        c.check(
            cs <= bound + 1e-8,
            format!("{name}: c* = {cs:.6} ≤ {bound:.6}"),
        );
        let zeta_varies = max_over_cell(m.zeta(), 512).map_err(|e| e.to_string())?
            > frontspeed_core::medium::min_over_cell(m.zeta(), 512).map_err(|e| e.to_string())?;
        if zeta_varies {
            c.check(
                bound - cs > 1e-3,
                format!("{name}: gap {:.2e} > 1e-3", bound - cs),
            );
        }
    }
    c.runtime(start, Duration::from_secs(10));
    c.finish()
}

fn small_diffusion() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = Medium::Shear(presets::shear_growth());
    let t = sweep_small_diffusion(&m, &[1e-1, 1e-2, 1e-3, 1e-4], &SweepOptions::default())
        .map_err(|e| e.to_string())?;
    let target = 2.0 * 1.5_f64.sqrt();
    let last = t.last();
    c.check(
        rel(last.quantity, target) <= 0.05,
        format!("c*/√ε at ε=1e-4 = {:.5} vs {target:.5}", last.quantity),
    );
    let errors: Vec<f64> = t
        .rows
        .iter()
        .map(|r| r.rel_error.unwrap_or(f64::NAN))
        .collect();
    c.check(
        errors.windows(2).all(|w| w[1] < w[0]),
        format!(
            "errors {:?} decrease",
            errors
                .iter()
                .map(|e| format!("{e:.2e}"))
                .collect::<Vec<_>>()
        ),
    );
    c.check(bounds_hold(&t), "per-row upper bound holds");
    c.runtime(start, Duration::from_secs(60));
    c.finish()
}

fn shear_advection() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let t = sweep_small_diffusion_shear(&presets::shear_flow(), &eps, &SweepOptions::default())
        .map_err(|e| e.to_string())?;
    let last = t.last();
    c.check(
        rel(last.quantity, 1.0) <= 0.05,
        format!("c* at ε=1e-4 = {:.5} vs 1", last.quantity),
    );
    let worst = t
        .rows
        .iter()
        .map(|r| r.quantity - (1.0 + 2.0 * r.value.sqrt()))
        .fold(f64::NEG_INFINITY, f64::max);
    c.check(worst <= 1e-8, format!("max c* − (1 + 2√ε) = {worst:.3e}"));
    c.runtime(start, Duration::from_secs(60));
    c.finish()
}

fn large_diffusion() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = Medium::Cell(presets::cellular(true));
    let ms = [1.0, 10.0, 100.0, 1000.0];
    let mut last = Vec::new();
    for gamma in [0.0, 0.5] {
        let t = sweep_large_diffusion(&m, &ms, gamma, &SweepOptions::default())
            .map_err(|e| e.to_string())?;
        let q = t.last().quantity;
        c.check(
            rel(q, 2.0) <= 0.03,
            format!("γ={gamma}: c*/√M at M=1e3 = {q:.7}"),
        );
        c.check(
            t.bound_kind == Some(BoundKind::Lower) && bounds_hold(&t),
            format!("γ={gamma}: lower bound 2√(m₀m) holds on every row"),
        );
        last.push(q);
    }
    c.check(
        rel(last[0], last[1]) <= 0.01,
        format!(
            "γ=0 vs γ=½ last rows differ by {:.1e}",
            rel(last[0], last[1])
        ),
    );
    c.runtime(start, Duration::from_secs(300));
    c.finish()
}

fn one_dimensional_homogenization() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = presets::layered_line();
    let Medium::Line(line) = &m else {
        unreachable!()
    };
    let t = sweep_period(&m, &[1.0 / 32.0, 32.0], &SweepOptions::default())
        .map_err(|e| e.to_string())?;
    let small = 2.0
        * (harmonic_mean(&line.a, 4096).map_err(|e| e.to_string())?
            * frontspeed_core::medium::cell_average(&line.zeta, 4096)
                .map_err(|e| e.to_string())?)
        .sqrt();
    let large = 2.0
        * (max_over_cell(&line.a, 4096).map_err(|e| e.to_string())?
            * max_over_cell(&line.zeta, 4096).map_err(|e| e.to_string())?)
        .sqrt();
    let (a, b) = (&t.rows[0], &t.rows[1]);
    c.check(
        rel(a.quantity, small) <= 0.01,
        format!("c*(1/32) = {:.6} vs 2√(a_H·⨍ζ) = {small:.6}", a.quantity),
    );
    c.check(
        rel(b.quantity, large) <= 0.05,
        format!("c*(32) = {:.6} vs 2√(max a·max ζ) = {large:.6}", b.quantity),
    );
    c.runtime(start, Duration::from_secs(60));
    c.finish()
}

fn reaction_limits() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = Medium::Shear(presets::shear_growth());
    let opts = SweepOptions::default();
    let up = sweep_reaction(
        &m,
        &[1.0, 10.0, 100.0, 1000.0],
        ReactionMode::ToInfinity,
        0.5,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let target = 2.0 * 1.5_f64.sqrt();
    let q = up.last().quantity;
    c.check(
        rel(q, target) <= 0.05,
        format!("c*/√B at B=1e3 = {q:.5} vs {target:.5}"),
    );
    let down =
        sweep_reaction(&m, &[1e-3], ReactionMode::ToZero, 0.5, &opts).map_err(|e| e.to_string())?;
    let q = down.last().quantity;
    c.check(
        down.metadata.medium_kind == "cell" && rel(q, 2.0) <= 0.05,
        format!("c*/√B at B=1e-3 on the cell embedding = {q:.7} vs 2"),
    );
    c.runtime(start, Duration::from_secs(120));
    c.finish()
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let m = Medium::Shear(presets::shear_growth());
    let opts = SweepOptions::default();
    let points = geometric(10f64.powf(-1.5), 100.0, 8);
    let sweeps = [
        (
            "β ↦ c*(β)/√β",
            sweep_large_diffusion(&m, &points, 0.5, &opts),
            Trend::Decreasing,
        ),
        (
            "L ↦ c*(L)",
            sweep_period(&m, &points, &opts),
            Trend::Increasing,
        ),
        (
            "B ↦ c*(B)/√B",
            sweep_reaction(&m, &points, ReactionMode::Monotone, 0.5, &opts),
            Trend::Increasing,
        ),
    ];
    for (name, table, trend) in sweeps {
        let table = table.map_err(|e| format!("{name}: {e}"))?;
        let verdict = table
            .monotonicity
            .clone()
            .ok_or(format!("{name}: no verdict"))?;
        c.check(
            verdict.expected == trend && verdict.holds() && table.rows.len() == 8,
            format!(
                "{name}: {} violations over {} rows",
                verdict.violations.len(),
                table.rows.len()
            ),
        );
    }
    c.runtime(start, Duration::from_secs(120));
    c.finish()
}

fn homogenized() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let eps = [0.5, 0.25, 0.125, 1.0 / 16.0, 1.0 / 32.0];
    let mut tables = Vec::new();
    for flow in [true, false] {
        let m = Medium::Cell(presets::cellular(flow));
        let t = homogenized_speed(&m, &eps, &SweepOptions::default()).map_err(|e| e.to_string())?;
        let last = t.last();
        let limit = last.theory_limit.ok_or("missing limit")?;
        c.check(
            rel(last.quantity, limit) <= 0.03,
            format!(
                "flow={flow}: c_ε at ε=1/32 = {:.7} vs {limit:.7}",
                last.quantity
            ),
        );
        c.check(bounds_hold(&t), format!("flow={flow}: lower bound holds"));
        tables.push(t);
    }
    let (a, b) = (tables[0].last(), tables[1].last());
    let (la, lb) = (
        a.theory_limit.unwrap_or(f64::NAN),
        b.theory_limit.unwrap_or(f64::NAN),
    );
    c.check(
        rel(la, lb) <= 0.01,
        format!("limit columns {la:.7} and {lb:.7}"),
    );
    c.check(
        rel(a.quantity, b.quantity) <= 0.01,
        format!("ε=1/32 rows {:.7} and {:.7}", a.quantity, b.quantity),
    );
    c.runtime(start, Duration::from_secs(300));
    c.finish()
}

fn oracle_matrices() -> Result<Vec<(String, OperatorMatrix)>, String> {
    let mut out = Vec::new();
    let err = |e: frontspeed_core::assembly::AssemblyError| e.to_string();
    for (name, m) in [
        ("constant line", presets::constant_line()),
        ("cosine growth line", presets::cosine_growth_line()),
        ("layered line", presets::layered_line()),
    ] {
        let d = Discretization::new(&m, &[64]).map_err(err)?;
        for lambda in [0.5, 1.0, 2.0] {
            out.push((
                format!("{name} λ={lambda}"),
                d.assemble(lambda, Scales::UNIT).map_err(err)?,
            ));
        }
    }
    for (name, m) in [
        ("shear growth", presets::shear_growth()),
        ("shear flow", presets::shear_flow()),
        ("shear diffusion", presets::shear_diffusion()),
    ] {
        let d = ShearDiscretization::new(&m, 64).map_err(err)?;
        out.push((
            format!("{name} cross-section λ=1"),
            d.assemble(1.0, Scales::UNIT).map_err(err)?,
        ));
    }
    let d = ShearDiscretization::new(&presets::shear_growth(), 64).map_err(err)?;
    out.push((
        "shear growth cross-section ε=0.01 λ=10".into(),
        d.assemble(10.0, Scales::small_diffusion(0.01).map_err(err)?)
            .map_err(err)?,
    ));
    for flow in [true, false] {
        let m = presets::cellular(flow);
        out.push((
            format!("cell 16×16 flow={flow} λ=1"),
            assemble_cell_operator(&m, 16, 16, 1.0, Scales::UNIT).map_err(err)?,
        ));
    }
    Ok(out)
}

fn oracle_agreement() -> Outcome {
    let mut c = Checks::default();
    let opts = EigenOptions::default();
    let mut worst = 0.0_f64;
    let mut worst_rayleigh = 0.0_f64;
    let mut symmetric = 0;
    let matrices = oracle_matrices()?;
    for (name, a) in &matrices {
        let p = principal_eig_power(a, &opts, None).map_err(|e| format!("{name}: {e}"))?;
        let g = growth_rate_oracle(a, 40.0, None).map_err(|e| format!("{name}: {e}"))?;
        let d = (p.k - g).abs() / p.k.abs().max(1.0);
        worst = worst.max(d);
        if d > 1e-6 {
            c.check(false, format!("{name}: power {} vs growth {g}", p.k));
        }
        if a.symmetric {
            symmetric += 1;
            let r = rayleigh_value(a, &p.psi).map_err(|e| format!("{name}: {e}"))?;
            let dr = (r - p.k).abs();
            worst_rayleigh = worst_rayleigh.max(dr);
            if dr > 10.0 * opts.tol {
                c.check(false, format!("{name}: Rayleigh {r} vs k {}", p.k));
            }
        }
    }
    c.check(
        symmetric > 0,
        format!("{} matrices, {symmetric} symmetric", matrices.len()),
    );
    c.check(worst <= 1e-6, format!("max power/growth gap {worst:.1e}"));
    c.check(
        worst_rayleigh <= 10.0 * opts.tol,
        format!("max Rayleigh gap {worst_rayleigh:.1e}"),
    );
    c.finish()
}

fn dynamical_cross_check() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    for (name, m, horizon) in [
        ("constant", presets::constant_line(), 40.0),
        ("cosine growth", presets::cosine_growth_line(), 80.0),
    ] {
        let cs = speed(&m, &[128], Scales::UNIT)?;
        let opts = SimOptions {
            frame_times: vec![0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon],
            ..Default::default()
        };
        let r = measure_spreading_speed(&m, horizon, &opts).map_err(|e| format!("{name}: {e}"))?;
        c.check(
            rel(r.speed, cs) <= 0.05,
            format!("{name}: measured {:.4} vs c* {cs:.4}", r.speed),
        );
        let frames_ok = r
            .frames
            .iter()
            .all(|f| f.u.iter().all(|u| (0.0..=1.0).contains(u)));
        c.check(
            r.max_principle_holds() && frames_ok && r.frames.len() == 4,
            format!("{name}: 0 ≤ u ≤ 1 on every step and frame"),
        );
    }
    c.runtime(start, Duration::from_secs(120));
    c.finish()
}

fn main() -> ExitCode {
    // The cellular media must pass validation for the suite to be meaningful.
    for flow in [true, false] {
        let d =
            validate(&Medium::Cell(presets::cellular(flow)), 64).expect("preset media validate");
        assert!(d.is_admissible() && d.holds(Hypothesis::DivergenceFreeDiffusionFlux));
    }
    let criteria: [(&str, Criterion); 11] = [
        ("constant-coefficient exactness", constant_coefficients),
        ("upper bound", upper_bound_holds),
        ("small-diffusion limit", small_diffusion),
        ("shear-advection limit", shear_advection),
        ("large-diffusion limit", large_diffusion),
        (
            "1D homogenization and large period",
            one_dimensional_homogenization,
        ),
        ("reaction limits", reaction_limits),
        ("monotonicity", monotonicity),
        ("homogenized speed", homogenized),
        ("oracle agreement", oracle_agreement),
        ("dynamical cross-check", dynamical_cross_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
