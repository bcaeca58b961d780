//! Time-domain simulation of `∂ₜu = ∂ₓ(a ∂ₓu) + ζ(x) g(u)` on a line.
//!
//! The measured spreading speed of a front started from step data is an
//! independent check of `c*`. The simulator keeps a window of whole periods
//! that follows the front, tracks the rightmost crossing of `u = θ`, and
//! fits a line to the crossing positions after a burn-in.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::medium::{max_over_cell, LineMedium, Medium, MediumError, ReactionShape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("time step {dt} exceeds the monotone bound {bound}")]
    Unstable { dt: f64, bound: f64 },
    #[error("front reached the right edge of the window at t = {t}; enlarge the window")]
    WindowExceeded { t: f64 },
    #[error("no crossing of the level {theta} at t = {t}")]
    FrontLost { t: f64, theta: f64 },
    #[error(
        "front crossed {periods:.2} periods after burn-in; at least 10 are needed, increase T"
    )]
    TooShort { periods: f64 },
    #[error("the simulator takes line media, got a {0} medium")]
    UnsupportedMedium(&'static str),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Window length in periods.
    pub window_periods: usize,
    pub points_per_period: usize,
    /// Level tracked as the front position.
    pub theta: f64,
    /// Fraction of the run excluded from the speed fit.
    pub burn_in: f64,
    /// Time step; defaults to 0.9 of the monotone bound.
    pub dt: Option<f64>,
    /// Number of evenly spaced position samples.
    pub samples: usize,
    /// Times at which the whole window is recorded.
    pub frame_times: Vec<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            window_periods: 60,
            points_per_period: 32,
            theta: 0.5,
            burn_in: 0.5,
            dt: None,
            samples: 400,
            frame_times: Vec::new(),
        }
    }
}

/// Snapshot of the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    /// Position of the first node.
    pub x0: f64,
    pub h: f64,
    pub u: Vec<f64>,
}

/// Outcome of [`measure_spreading_speed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMeasurement {
    pub times: Vec<f64>,
    /// Positions of the rightmost crossing of `θ`.
    pub positions: Vec<f64>,
    /// Least-squares slope over the samples after burn-in.
    pub speed: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the fitted line.
    pub fit_residual: f64,
    /// `max |u(T, x) − u(T + P/c, x + P)|` over the front region `0.01 ≤ u(T) ≤ 0.99`.
    pub periodicity_residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub dt: f64,
    pub steps: u64,
    pub frames: Vec<Frame>,
}

impl FrontMeasurement {
    /// `0 ≤ u ≤ 1` held at every node after every step.
    pub fn max_principle_holds(&self) -> bool {
        self.min_u >= 0.0 && self.max_u <= 1.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurements always serialize")
    }
}

/// Frames as CSV rows `t,x,u`.
pub fn frames_to_csv(frames: &[Frame]) -> String {
    let mut out = String::from("t,x,u\n");
    for f in frames {
        for (i, u) in f.u.iter().enumerate() {
            let x = f.x0 + i as f64 * f.h;
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", f.t, x, u);
        }
    }
    out
}

/// Solution on a window of whole periods.
///
/// Node `i` sits at `offset + (i + ½)h`; the window edges hold `u = 1` on the
/// left and `u = 0` on the right.
#[derive(Debug, Clone)]
pub struct SimState {
    pub u: Vec<f64>,
    pub t: f64,
    /// Number of nodes dropped from the left by recentering.
    pub shifted_nodes: usize,
    pub h: f64,
    m: usize,
    a_face: Vec<f64>,
    zeta: Vec<f64>,
    reaction: ReactionShape,
    scratch: Vec<f64>,
}

impl SimState {
    /// Step data `u = 1` on the first `front_periods` periods.
    pub fn new(
        medium: &LineMedium,
        window_periods: usize,
        points_per_period: usize,
        front_periods: usize,
    ) -> Result<Self, SimError> {
        if window_periods < 4 || points_per_period < 4 || front_periods >= window_periods {
            return Err(SimError::Invalid(format!(
                "window of {window_periods} periods with {points_per_period} points each and \
                 the front at {front_periods} periods is not usable"
            )));
        }
        let m = points_per_period;
        let h = medium.period / m as f64;
        let a_face = (0..m).map(|i| medium.a.eval(i as f64 * h, 0.0)).collect();
        let zeta = (0..m)
            .map(|i| medium.zeta.eval((i as f64 + 0.5) * h, 0.0))
            .collect();
        let n = window_periods * m;
        let mut u = vec![0.0; n];
        u[..front_periods * m].fill(1.0);
        Ok(SimState {
            u,
            t: 0.0,
            shifted_nodes: 0,
            h,
            m,
            a_face,
            zeta,
            reaction: medium.reaction,
            scratch: vec![0.0; n],
        })
    }

    /// Largest step for which the update is monotone, so `0 ≤ u ≤ 1` persists.
    pub fn stability_bound(&self) -> f64 {
        let a_max = self.a_face.iter().fold(0.0_f64, |m, v| m.max(*v));
        let z_max = self.zeta.iter().fold(0.0_f64, |m, v| m.max(*v));
        1.0 / (2.0 * a_max / (self.h * self.h) + z_max * self.reaction.slope_at_zero())
    }

    /// Position of the first node.
    pub fn x0(&self) -> f64 {
        (self.shifted_nodes as f64 + 0.5) * self.h
    }

    /// One explicit Euler step.
    pub fn step(&mut self, dt: f64) -> Result<(), SimError> {
        let bound = self.stability_bound();
        if !(dt > 0.0 && dt <= bound) {
            return Err(SimError::Unstable { dt, bound });
        }
        let n = self.u.len();
        let m = self.m;
        let r = dt / (self.h * self.h);
        let u = &self.u;
        for i in 0..n {
            let left = if i == 0 { 1.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            let al = self.a_face[i % m];
            let ar = self.a_face[(i + 1) % m];
            let ui = u[i];
            self.scratch[i] = ui
                + r * (ar * (right - ui) - al * (ui - left))
                + dt * self.zeta[i % m] * self.reaction.value(ui);
        }
        std::mem::swap(&mut self.u, &mut self.scratch);
        self.t += dt;
        Ok(())
    }

    /// Rightmost crossing of `theta`, relative to the window start.
    fn crossing(&self, theta: f64) -> Result<(usize, f64), SimError> {
        let i = self
            .u
            .iter()
            .rposition(|v| *v >= theta)
            .ok_or(SimError::FrontLost { t: self.t, theta })?;
        if i + 1 >= self.u.len() {
            return Err(SimError::WindowExceeded { t: self.t });
        }
        let (ui, un) = (self.u[i], self.u[i + 1]);
        let frac = if ui > un {
            (ui - theta) / (ui - un)
        } else {
            0.0
        };
        Ok((i, (i as f64 + 0.5 + frac) * self.h))
    }

    /// Absolute position of the rightmost crossing of `theta`.
    pub fn front_position(&self, theta: f64) -> Result<f64, SimError> {
        Ok(self.shifted_nodes as f64 * self.h + self.crossing(theta)?.1)
    }

    /// Drop whole periods on the left so the front sits near a third of the window.
    fn recenter(&mut self, theta: f64) -> Result<(), SimError> {
        let (i, _) = self.crossing(theta)?;
        let periods = self.u.len() / self.m;
        let target = periods / 3;
        let at = i / self.m;
        if at > target {
            let k = (at - target) * self.m;
            self.u.drain(..k);
            self.u.resize(self.u.len() + k, 0.0);
            self.shifted_nodes += k;
        }
        if self.crossing(theta)?.0 + 2 * self.m >= self.u.len() {
            return Err(SimError::WindowExceeded { t: self.t });
        }
        Ok(())
    }

    fn frame(&self) -> Frame {
        Frame {
            t: self.t,
            x0: self.x0(),
            h: self.h,
            u: self.u.clone(),
        }
    }
}

struct Extremes {
    min: f64,
    max: f64,
}

impl Extremes {
    fn record(&mut self, u: &[f64]) {
        for v in u {
            self.min = self.min.min(*v);
            self.max = self.max.max(*v);
        }
    }
}

/// Step to exactly `t_end`, recentering once per period of travel.
fn advance(
    state: &mut SimState,
    t_end: f64,
    dt: f64,
    theta: f64,
    extremes: &mut Extremes,
    steps: &mut u64,
) -> Result<(), SimError> {
    while state.t < t_end {
        let remaining = t_end - state.t;
        let last = remaining <= dt * (1.0 + 1e-12);
        state.step(if last { remaining.min(dt) } else { dt })?;
        if last {
            state.t = t_end;
        }
        extremes.record(&state.u);
        *steps += 1;
        if *steps % state.m as u64 == 0 {
            state.recenter(theta)?;
        }
    }
    state.recenter(theta)
}

/// Least-squares line `x = c t + b`; returns `(c, b, rms residual)`.
fn fit_line(t: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm) * (v - tm)).sum();
    let stx: f64 = t.iter().zip(x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let c = stx / stt;
    let b = xm - c * tm;
    let ss: f64 = t
        .iter()
        .zip(x)
        .map(|(a, b_)| (b_ - c * a - b).powi(2))
        .sum();
    (c, b, (ss / n).sqrt())
}

/// Run from step data to time `total_time` and fit the front speed.
///
/// The periodicity residual continues the run for one period of travel,
/// `P/c`, and compares the shifted profile with the one at `total_time`.
pub fn measure_spreading_speed(
    medium: &Medium,
    total_time: f64,
    opts: &SimOptions,
) -> Result<FrontMeasurement, SimError> {
    let Medium::Line(line) = medium else {
        return Err(SimError::UnsupportedMedium(medium.kind()));
    };
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(SimError::Invalid(format!(
            "total time must be positive, got {total_time}"
        )));
    }
    if !(0.0..1.0).contains(&opts.burn_in)
        || !(opts.theta > 0.0 && opts.theta < 1.0)
        || opts.samples < 4
    {
        return Err(SimError::Invalid(
            "burn-in must lie in [0, 1), theta in (0, 1), and at least 4 samples are needed".into(),
        ));
    }
    let mut state = SimState::new(
        line,
        opts.window_periods,
        opts.points_per_period,
        opts.window_periods / 6,
    )?;
    let bound = state.stability_bound();
    let dt = opts.dt.unwrap_or(0.9 * bound);
    if !(dt > 0.0 && dt <= bound) {
        return Err(SimError::Unstable { dt, bound });
    }
    let theta = opts.theta;
    let mut extremes = Extremes { min: 0.0, max: 1.0 };
    let mut steps = 0_u64;
    let mut frame_times: Vec<f64> = opts
        .frame_times
        .iter()
        .copied()
        .filter(|t| *t >= 0.0)
        .collect();
    frame_times.sort_by(f64::total_cmp);
    let mut frames = Vec::new();
    let mut pending_frames = frame_times.into_iter().peekable();

    let mut times = Vec::with_capacity(opts.samples);
    let mut positions = Vec::with_capacity(opts.samples);
    for s in 1..=opts.samples {
        let t_sample = total_time * s as f64 / opts.samples as f64;
        while let Some(&tf) = pending_frames.peek() {
            if tf > t_sample {
                break;
            }
            advance(&mut state, tf, dt, theta, &mut extremes, &mut steps)?;
            frames.push(state.frame());
            pending_frames.next();
        }
        advance(&mut state, t_sample, dt, theta, &mut extremes, &mut steps)?;
        times.push(state.t);
        positions.push(state.front_position(theta)?);
    }

    let first = times
        .partition_point(|t| *t <= opts.burn_in * total_time)
        .min(times.len() - 2);
    let (speed, intercept, fit_residual) = fit_line(&times[first..], &positions[first..]);
    let travelled = (positions[positions.len() - 1] - positions[first]) / line.period;
    if travelled < 10.0 {
        return Err(SimError::TooShort { periods: travelled });
    }

    let snapshot = state.u.clone();
    let snapshot_shift = state.shifted_nodes;
    let tau = line.period / speed;
    advance(
        &mut state,
        total_time + tau,
        dt,
        theta,
        &mut extremes,
        &mut steps,
    )?;
    let m = state.m;
    let mut periodicity_residual = 0.0_f64;
    for (j, v) in snapshot.iter().enumerate() {
        if !(0.01..=0.99).contains(v) {
            continue;
        }
        let k = (j + snapshot_shift + m).checked_sub(state.shifted_nodes);
        let later = k.and_then(|k| state.u.get(k)).copied().unwrap_or(0.0);
        periodicity_residual = periodicity_residual.max((later - v).abs());
    }

    Ok(FrontMeasurement {
        times,
        positions,
        speed,
        intercept,
        fit_residual,
        periodicity_residual,
        min_u: extremes.min,
        max_u: extremes.max,
        dt,
        steps,
        frames,
    })
}

/// The general speed bound `2√(max a · max ζ g'(0))` for a line medium.
pub fn line_speed_bound(medium: &LineMedium) -> Result<f64, SimError> {
    let a = max_over_cell(&medium.a, 4096)?;
    let z = max_over_cell(&medium.zeta, 4096)?;
    Ok(2.0 * (a * z * medium.reaction.slope_at_zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::presets;

    fn line(m: &Medium) -> &LineMedium {
        match m {
            Medium::Line(l) => l,
            _ => unreachable!(),
        }
    }

    #[test]
    fn equilibria_are_fixed_away_from_the_edges() {
        let m = presets::cosine_growth_line();
        let mut s = SimState::new(line(&m), 8, 16, 2).unwrap();
        let dt = s.stability_bound();
        let n = s.u.len();
        s.u.fill(0.0);
        s.step(dt).unwrap();
        assert!(s.u[1..].iter().all(|v| *v == 0.0));
        s.u.fill(1.0);
        s.step(dt).unwrap();
        assert!(s.u[..n - 1].iter().all(|v| *v == 1.0));
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let m = presets::constant_line();
        let mut s = SimState::new(line(&m), 8, 16, 2).unwrap();
        let b = s.stability_bound();
        assert!(matches!(s.step(1.01 * b), Err(SimError::Unstable { .. })));
    }

    #[test]
    fn recentering_keeps_absolute_positions() {
        let m = presets::constant_line();
        let mut s = SimState::new(line(&m), 12, 16, 10).unwrap();
        let before = s.front_position(0.5).unwrap();
        s.recenter(0.5).unwrap();
        assert!(s.shifted_nodes > 0);
        assert_eq!(s.front_position(0.5).unwrap(), before);
    }

    #[test]
    fn fit_recovers_a_line() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let x: Vec<f64> = t.iter().map(|t| 2.0 * t + 1.0).collect();
        let (c, b, r) = fit_line(&t, &x);
        assert!((c - 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-13 && r < 1e-13);
    }

    #[test]
    fn short_runs_are_refused() {
        let err = measure_spreading_speed(&presets::constant_line(), 2.0, &SimOptions::default())
            .unwrap_err();
        assert!(matches!(err, SimError::TooShort { .. }), "{err}");
    }

    #[test]
    fn frames_are_written_as_csv() {
        let opts = SimOptions {
            frame_times: vec![1.0],
            window_periods: 30,
            ..Default::default()
        };
        let r = measure_spreading_speed(&presets::constant_line(), 12.0, &opts).unwrap();
        assert_eq!(r.frames.len(), 1);
        let csv = frames_to_csv(&r.frames);
        assert!(csv.starts_with("t,x,u\n"));
        assert_eq!(csv.lines().count(), 1 + 30 * 32);
    }
}
