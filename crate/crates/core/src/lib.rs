//! Minimal speeds of pulsating traveling fronts for KPP reaction-advection-diffusion
//! equations in periodic media.
//!
//! The minimal speed in the direction `e` is
//!
//! ```text
//! c*(e) = min_{λ>0} k(λ)/λ,
//! ```
//!
//! where `k(λ)` is the principal periodic eigenvalue of the shifted operator
//! `L_λ`. The crate discretizes `L_λ` with a monotone finite-volume scheme
//! ([`assembly`]), computes `k(λ)` ([`eigen`]), minimizes over `λ`
//! ([`speed`]), sweeps the asymptotic regimes ([`regimes`]) and cross-checks
//! speeds by direct simulation ([`frontsim`]).

pub mod assembly;
pub mod eigen;
pub mod frontsim;
pub mod medium;
pub mod regimes;
pub mod speed;

pub use assembly::{Discretization, OperatorMatrix, Scales};
pub use eigen::{EigenMethod, EigenOptions, PrincipalPair};
pub use frontsim::{FrontMeasurement, SimOptions};
pub use medium::{CellMedium, CoefficientField, LineMedium, Medium, Profile, ShearMedium};
pub use regimes::{ReactionMode, SweepOptions, SweepTable};
pub use speed::{SpeedOptions, SpeedProblem, SpeedResult};
