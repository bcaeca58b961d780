//! Regime sweeps: limits, bounds, dualities and serialization.

use frontspeed_core::medium::presets;
use frontspeed_core::regimes::{
    homogenized_speed, sweep_large_diffusion, sweep_period, sweep_reaction, sweep_small_diffusion,
    RegimeError,
};
use frontspeed_core::{Medium, ReactionMode, SweepOptions, SweepTable};

fn eps_values() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

#[test]
fn small_diffusion_extrapolates_to_the_peak_limit() {
    let medium = Medium::Shear(presets::shear_growth());
    let t = sweep_small_diffusion(&medium, &eps_values(), &SweepOptions::default()).unwrap();
    let limit = t.last().theory_limit.unwrap();
    let x = t.extrapolated.unwrap();
    assert!((x - limit).abs() <= 0.02 * limit, "{x} vs {limit}");
    assert!(t.bound_violations().is_empty());
    let errors: Vec<f64> = t.rows.iter().map(|r| r.rel_error.unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn peak_limits_refuse_media_varying_along_the_direction() {
    let err = sweep_small_diffusion(
        &presets::cosine_growth_line(),
        &eps_values(),
        &SweepOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err:?}");
}

#[test]
fn fast_reaction_is_dual_to_small_diffusion() {
    // Rescaling time by B maps c*(A, Bζ)/√B onto c*(A/B, ζ)·√B.
    let bs = [4.0, 16.0, 64.0];
    let eps: Vec<f64> = bs.iter().map(|b| 1.0 / b).collect();
    let opts = SweepOptions::default();
    let medium = Medium::Shear(presets::shear_growth());
    let r = sweep_reaction(&medium, &bs, ReactionMode::ToInfinity, 0.5, &opts).unwrap();
    let d = sweep_small_diffusion(&medium, &eps, &opts).unwrap();
    for (a, b) in r.rows.iter().zip(&d.rows) {
        assert_eq!(a.grid, b.grid);
        assert!(
            (a.quantity - b.quantity).abs() <= 1e-5 * b.quantity,
            "{} vs {}",
            a.quantity,
            b.quantity
        );
    }
}

#[test]
fn large_diffusion_rows_sit_above_the_averaged_bound() {
    let medium = Medium::Shear(presets::shear_growth());
    let t = sweep_large_diffusion(
        &medium,
        &[1.0, 4.0, 16.0, 64.0],
        0.5,
        &SweepOptions::default(),
    )
    .unwrap();
    assert!(t.bound_violations().is_empty(), "{:?}", t.rows);
    assert!(t.monotonicity.as_ref().unwrap().holds());
    let last = t.last();
    assert!(last.rel_error.unwrap() < 0.02, "{last:?}");
}

#[test]
fn slow_reaction_and_homogenization_share_the_average_limit() {
    let medium = Medium::Cell(presets::cellular(true));
    let opts = SweepOptions {
        grid: Some(vec![24, 24]),
        ..SweepOptions::default()
    };
    let r = sweep_reaction(&medium, &[1.0 / 64.0], ReactionMode::ToZero, 0.5, &opts).unwrap();
    let h = homogenized_speed(&medium, &[1.0 / 8.0], &opts).unwrap();
    assert_eq!(r.last().theory_limit, h.last().theory_limit);
    for t in [&r, &h] {
        assert!(t.bound_violations().is_empty());
        assert!(t.last().rel_error.unwrap() < 0.05, "{:?}", t.last());
    }
}

#[test]
fn short_periods_approach_the_harmonic_limit() {
    let t = sweep_period(
        &presets::layered_line(),
        &[1.0 / 8.0, 1.0 / 32.0],
        &SweepOptions::default(),
    )
    .unwrap();
    let last = t.last();
    assert!((last.theory_limit.unwrap() - 2.0).abs() < 1e-9);
    assert!(last.rel_error.unwrap() < 0.01, "{last:?}");
    assert!(t.rows[1].rel_error.unwrap() <= t.rows[0].rel_error.unwrap());
}

#[test]
fn shear_speeds_increase_with_the_period() {
    let medium = Medium::Shear(presets::shear_growth());
    let t = sweep_period(&medium, &[0.25, 0.5, 2.0, 4.0], &SweepOptions::default()).unwrap();
    assert!(t.monotonicity.as_ref().unwrap().holds(), "{:?}", t.rows);
    assert!(t.last().theory_limit.is_some());
}

#[test]
fn refusals_name_the_failed_hypothesis() {
    let err = sweep_large_diffusion(
        &presets::layered_line(),
        &[1.0, 2.0],
        0.0,
        &SweepOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err:?}");
    let err = sweep_reaction(
        &Medium::Shear(presets::shear_flow()),
        &[4.0],
        ReactionMode::ToInfinity,
        0.5,
        &SweepOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, RegimeError::Hypothesis { .. }), "{err:?}");
}

#[test]
fn tables_are_deterministic_and_round_trip() {
    let run = || {
        let medium = Medium::Shear(presets::shear_growth());
        sweep_small_diffusion(&medium, &[0.25, 0.125, 0.0625], &SweepOptions::default()).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
    let back = SweepTable::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert_eq!(a.to_csv().lines().count(), 4);
}
