//! Benchmark fixtures: the media and grids timed by `benches/solver.rs`.

use frontspeed_core::medium::presets;
use frontspeed_core::Medium;

/// Named media with the grid each is timed on.
pub fn cases() -> Vec<(&'static str, Medium, Vec<usize>)> {
    vec![
        ("cosine line 256", presets::cosine_growth_line(), vec![256]),
        (
            "shear flow 128",
            Medium::Shear(presets::shear_flow()),
            vec![128],
        ),
        (
            "cellular flow 32x32",
            Medium::Cell(presets::cellular(true)),
            vec![32, 32],
        ),
    ]
}
