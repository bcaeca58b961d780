//! Periodic media.
//!
//! A medium is one of three geometries:
//!
//! * [`LineMedium`]: one space dimension, diffusion `a(x)` and growth rate `ζ(x)`.
//! * [`ShearMedium`]: a straight channel direction `x₁` with coefficients that
//!   depend on the cross-section coordinate `y` only, diffusion `diag(α, d)`
//!   and an optional shear flow `q = (q₁(y), 0)`.
//! * [`CellMedium`]: a two-dimensional periodicity cell with diagonal diffusion,
//!   an incompressible flow given by a stream function `H` through
//!   `q = (∂H/∂y, −∂H/∂x)`, and a propagation direction `e`.
//!
//! Coefficients are [`CoefficientField`]s: analytic profiles or sampled values,
//! always evaluated periodically. All samples on a grid of `n` points per
//! direction are taken at cell centres `(i + ½)·L/n`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Errors raised while building or sampling a medium.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MediumError {
    #[error("{path}: period must be positive and finite, got {value}")]
    BadPeriod { path: String, value: f64 },
    #[error("grid needs at least 4 points per direction, got {0}")]
    GridTooSmall(usize),
    #[error("{field}: sample {value} at index {index} is not positive")]
    NonPositive {
        field: String,
        index: usize,
        value: f64,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

impl MediumError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        MediumError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Coordinate axis of the periodicity cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Shape of a coefficient profile.
///
/// With one active coordinate `s` of period `P` (a one-dimensional field, or a
/// two-dimensional field restricted to an axis):
///
/// * `Cosine`: `c₀ + c₁·cos(2πs/P)`
/// * `InverseCosine`: `1/(c₀ + c₁·cos(2πs/P))`
/// * `SineProduct`: `c₀ + c₁·sin(2πs/P)`
///
/// On an unrestricted two-dimensional cell `Cosine` and `SineProduct` take the
/// product of the two coordinate factors, and `InverseCosine` varies along `x`.
/// `Samples` holds cell-centred values with `x` varying fastest and is
/// interpolated (bi)linearly between them.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    Cosine { mean: f64, amplitude: f64 },
    InverseCosine { mean: f64, amplitude: f64 },
    SineProduct { mean: f64, amplitude: f64 },
    Samples { values: Vec<f64>, shape: [usize; 2] },
}

/// A periodic coefficient on the cell `[0, L₁) (× [0, L₂))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    dimension: usize,
    periods: [f64; 2],
    profile: Profile,
    axis: Option<Axis>,
}

fn check_period(path: &str, value: f64) -> Result<(), MediumError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(MediumError::BadPeriod {
            path: path.to_string(),
            value,
        })
    }
}

fn check_grid(n: usize) -> Result<(), MediumError> {
    if n < 4 {
        Err(MediumError::GridTooSmall(n))
    } else {
        Ok(())
    }
}

impl CoefficientField {
    /// One-dimensional field of period `period`.
    pub fn line(period: f64, profile: Profile) -> Result<Self, MediumError> {
        check_period("periods[0]", period)?;
        let field = CoefficientField {
            dimension: 1,
            periods: [period, period],
            profile,
            axis: None,
        };
        field.check_profile()?;
        Ok(field)
    }

    /// Two-dimensional field on the cell `[0, L₁) × [0, L₂)`.
    pub fn cell(periods: [f64; 2], profile: Profile) -> Result<Self, MediumError> {
        check_period("periods[0]", periods[0])?;
        check_period("periods[1]", periods[1])?;
        let field = CoefficientField {
            dimension: 2,
            periods,
            profile,
            axis: None,
        };
        field.check_profile()?;
        Ok(field)
    }

    /// Two-dimensional field that varies along `axis` only.
    pub fn cell_along(
        periods: [f64; 2],
        axis: Axis,
        profile: Profile,
    ) -> Result<Self, MediumError> {
        let mut field = Self::cell(periods, Profile::Constant(0.0))?;
        field.axis = Some(axis);
        field.profile = profile;
        field.check_profile()?;
        Ok(field)
    }

    /// Constant one-dimensional field.
    pub fn constant_line(period: f64, value: f64) -> Result<Self, MediumError> {
        Self::line(period, Profile::Constant(value))
    }

    /// Constant two-dimensional field.
    pub fn constant_cell(periods: [f64; 2], value: f64) -> Result<Self, MediumError> {
        Self::cell(periods, Profile::Constant(value))
    }

    /// The same one-dimensional profile seen as a field on a two-dimensional
    /// cell that varies along `y` only, with `x`-period `period_x`.
    pub fn extrude_along_y(&self, period_x: f64) -> Result<Self, MediumError> {
        if self.dimension != 1 {
            return Err(MediumError::schema(
                "field",
                "only one-dimensional fields can be extruded",
            ));
        }
        Self::cell_along([period_x, self.periods[0]], Axis::Y, self.profile.clone())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn axis(&self) -> Option<Axis> {
        self.axis
    }

    /// `Some(c)` when the field is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.profile {
            Profile::Constant(c) => Some(*c),
            Profile::Cosine { mean, amplitude } | Profile::SineProduct { mean, amplitude }
                if *amplitude == 0.0 =>
            {
                Some(*mean)
            }
            Profile::InverseCosine { mean, amplitude } if *amplitude == 0.0 => Some(1.0 / mean),
            _ => None,
        }
    }

    /// Exact `(inf, sup)` of the profile. Cosine and sine products of the two
    /// coordinates span the same range as a single factor; interpolated
    /// samples attain their extremes at the samples.
    pub fn extremes(&self) -> (f64, f64) {
        match &self.profile {
            Profile::Constant(c) => (*c, *c),
            Profile::Cosine { mean, amplitude } | Profile::SineProduct { mean, amplitude } => {
                (mean - amplitude.abs(), mean + amplitude.abs())
            }
            Profile::InverseCosine { mean, amplitude } => {
                let (a, b) = (
                    1.0 / (mean + amplitude.abs()),
                    1.0 / (mean - amplitude.abs()),
                );
                (a.min(b), a.max(b))
            }
            Profile::Samples { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                }),
        }
    }

    fn is_restricted(&self) -> bool {
        self.dimension == 1 || self.axis.is_some()
    }

    fn check_profile(&self) -> Result<(), MediumError> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(MediumError::schema(
                    "params",
                    format!("{what} must be finite"),
                ))
            }
        };
        match &self.profile {
            Profile::Constant(c) => finite(*c, "constant"),
            Profile::Cosine { mean, amplitude } | Profile::SineProduct { mean, amplitude } => {
                finite(*mean, "mean")?;
                finite(*amplitude, "amplitude")
            }
            Profile::InverseCosine { mean, amplitude } => {
                finite(*mean, "mean")?;
                finite(*amplitude, "amplitude")?;
                if mean.abs() <= amplitude.abs() {
                    return Err(MediumError::schema(
                        "params",
                        "inverse_cosine needs |c0| > |c1| so the denominator never vanishes",
                    ));
                }
                Ok(())
            }
            Profile::Samples { values, shape } => {
                if shape[0] == 0 || shape[1] == 0 || shape[0] * shape[1] != values.len() {
                    return Err(MediumError::schema(
                        "shape",
                        format!("shape {shape:?} does not match {} samples", values.len()),
                    ));
                }
                if self.is_restricted() && shape[1] != 1 {
                    return Err(MediumError::schema(
                        "shape",
                        "a one-dimensional samples profile needs shape [n, 1]",
                    ));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(MediumError::schema(
                        format!("params[{i}]"),
                        "sample must be finite",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Value at the point `(x, y)`; `y` is ignored for one-dimensional fields.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if self.is_restricted() {
            let (s, period) = match self.axis {
                Some(Axis::Y) => (y, self.periods[1]),
                _ => (x, self.periods[0]),
            };
            let phase = 2.0 * PI * s / period;
            return match &self.profile {
                Profile::Constant(c) => *c,
                Profile::Cosine { mean, amplitude } => mean + amplitude * phase.cos(),
                Profile::InverseCosine { mean, amplitude } => {
                    1.0 / (mean + amplitude * phase.cos())
                }
                Profile::SineProduct { mean, amplitude } => mean + amplitude * phase.sin(),
                Profile::Samples { values, .. } => interpolate_line(values, s / period),
            };
        }
        let px = 2.0 * PI * x / self.periods[0];
        let py = 2.0 * PI * y / self.periods[1];
        match &self.profile {
            Profile::Constant(c) => *c,
            Profile::Cosine { mean, amplitude } => mean + amplitude * px.cos() * py.cos(),
            Profile::InverseCosine { mean, amplitude } => 1.0 / (mean + amplitude * px.cos()),
            Profile::SineProduct { mean, amplitude } => mean + amplitude * px.sin() * py.sin(),
            Profile::Samples { values, shape } => {
                interpolate_cell(values, *shape, x / self.periods[0], y / self.periods[1])
            }
        }
    }

    /// Values at the cell centres of an `n₁ × n₂` grid, `x` fastest.
    /// One-dimensional fields ignore `n₂`.
    pub fn sample_grid(&self, n1: usize, n2: usize) -> Result<Vec<f64>, MediumError> {
        check_grid(n1)?;
        let h1 = self.periods[0] / n1 as f64;
        if self.dimension == 1 {
            return Ok((0..n1)
                .map(|i| self.eval((i as f64 + 0.5) * h1, 0.0))
                .collect());
        }
        check_grid(n2)?;
        let h2 = self.periods[1] / n2 as f64;
        let mut out = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            let y = (j as f64 + 0.5) * h2;
            for i in 0..n1 {
                out.push(self.eval((i as f64 + 0.5) * h1, y));
            }
        }
        Ok(out)
    }

    /// Values at the grid vertices `(i·h₁, j·h₂)` of an `n₁ × n₂` grid, `x` fastest.
    pub fn sample_vertices(&self, n1: usize, n2: usize) -> Result<Vec<f64>, MediumError> {
        check_grid(n1)?;
        check_grid(n2)?;
        let h1 = self.periods[0] / n1 as f64;
        let h2 = self.periods[1] / n2 as f64;
        let mut out = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                out.push(self.eval(i as f64 * h1, j as f64 * h2));
            }
        }
        Ok(out)
    }
}

/// Periodic linear interpolation of cell-centred samples at fraction `t` of the period.
fn interpolate_line(values: &[f64], t: f64) -> f64 {
    let n = values.len();
    let u = (t * n as f64 - 0.5).rem_euclid(n as f64);
    let i0 = (u.floor() as usize).min(n - 1);
    let w = u - i0 as f64;
    let i1 = (i0 + 1) % n;
    (1.0 - w) * values[i0] + w * values[i1]
}

fn interpolate_cell(values: &[f64], shape: [usize; 2], tx: f64, ty: f64) -> f64 {
    let [n1, n2] = shape;
    let locate = |t: f64, n: usize| {
        let u = (t * n as f64 - 0.5).rem_euclid(n as f64);
        let i0 = (u.floor() as usize).min(n - 1);
        (i0, (i0 + 1) % n, u - i0 as f64)
    };
    let (i0, i1, wx) = locate(tx, n1);
    let (j0, j1, wy) = locate(ty, n2);
    let at = |i: usize, j: usize| values[i + n1 * j];
    (1.0 - wy) * ((1.0 - wx) * at(i0, j0) + wx * at(i1, j0))
        + wy * ((1.0 - wx) * at(i0, j1) + wx * at(i1, j1))
}

/// Samples on `n` (one-dimensional) or `n × n` (two-dimensional) cell centres.
pub fn sample_field(field: &CoefficientField, n: usize) -> Result<Vec<f64>, MediumError> {
    field.sample_grid(n, n)
}

/// Midpoint-rule cell average `⨍ f`.
pub fn cell_average(field: &CoefficientField, n: usize) -> Result<f64, MediumError> {
    let s = sample_field(field, n)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Harmonic mean `(⨍ 1/f)⁻¹`; the field must be positive on the grid.
pub fn harmonic_mean(field: &CoefficientField, n: usize) -> Result<f64, MediumError> {
    let s = sample_field(field, n)?;
    if let Some((index, &value)) = s.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(MediumError::NonPositive {
            field: "field".into(),
            index,
            value,
        });
    }
    Ok(s.len() as f64 / s.iter().map(|v| 1.0 / v).sum::<f64>())
}

/// Largest value of the field: the exact supremum for analytic profiles,
/// never below any sample on the `n` grid.
pub fn max_over_cell(field: &CoefficientField, n: usize) -> Result<f64, MediumError> {
    let sampled = sample_field(field, n)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(sampled.max(field.extremes().1))
}

/// Smallest value of the field: the exact infimum for analytic profiles,
/// never above any sample on the `n` grid.
pub fn min_over_cell(field: &CoefficientField, n: usize) -> Result<f64, MediumError> {
    let sampled = sample_field(field, n)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(sampled.min(field.extremes().0))
}

/// Saturating shape `g` of the nonlinearity `f(x, u) = ζ(x)·g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionShape {
    /// `g(u) = u(1 − u)`.
    #[default]
    Logistic,
}

impl ReactionShape {
    pub fn value(self, u: f64) -> f64 {
        match self {
            ReactionShape::Logistic => u * (1.0 - u),
        }
    }

    pub fn slope_at_zero(self) -> f64 {
        match self {
            ReactionShape::Logistic => 1.0,
        }
    }

    /// Largest violation of `0 ≤ g(u) ≤ g'(0)·u` on `(0, 1)` and of `g(0) = g(1) = 0`,
    /// sampled on `m` points.
    pub fn kpp_defect(self, m: usize) -> f64 {
        let slope = self.slope_at_zero();
        let mut defect = self.value(0.0).abs().max(self.value(1.0).abs());
        for i in 1..m {
            let u = i as f64 / m as f64;
            let g = self.value(u);
            defect = defect.max(-g).max(g - slope * u);
        }
        defect
    }
}

/// One-dimensional periodic medium `u_t = (a u_x)_x + ζ(x) g(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMedium {
    pub period: f64,
    pub a: CoefficientField,
    pub zeta: CoefficientField,
    pub reaction: ReactionShape,
}

impl LineMedium {
    pub fn new(a: CoefficientField, zeta: CoefficientField) -> Result<Self, MediumError> {
        for (name, f) in [("a", &a), ("zeta", &zeta)] {
            if f.dimension != 1 {
                return Err(MediumError::schema(
                    name,
                    "line media take one-dimensional fields",
                ));
            }
        }
        if a.periods[0] != zeta.periods[0] {
            return Err(MediumError::schema(
                "zeta",
                "fields must share the medium period",
            ));
        }
        Ok(LineMedium {
            period: a.periods[0],
            a,
            zeta,
            reaction: ReactionShape::Logistic,
        })
    }
}

/// Shear medium: coefficients depend on the cross-section coordinate `y` only.
///
/// The channel direction is `e = (1, 0)`, diffusion is `diag(α(y), d(y))` and
/// the flow is `q = (q₁(y), 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearMedium {
    /// Cross-section period `L_y`.
    pub period: f64,
    pub alpha: CoefficientField,
    pub d: CoefficientField,
    pub zeta: CoefficientField,
    pub q1: Option<CoefficientField>,
    pub reaction: ReactionShape,
}

impl ShearMedium {
    /// Shear medium with `d = α`.
    pub fn new(
        alpha: CoefficientField,
        zeta: CoefficientField,
        q1: Option<CoefficientField>,
    ) -> Result<Self, MediumError> {
        let d = alpha.clone();
        Self::with_cross_diffusion(alpha, d, zeta, q1)
    }

    pub fn with_cross_diffusion(
        alpha: CoefficientField,
        d: CoefficientField,
        zeta: CoefficientField,
        q1: Option<CoefficientField>,
    ) -> Result<Self, MediumError> {
        let period = alpha.periods[0];
        for (name, f) in [
            ("alpha", Some(&alpha)),
            ("d", Some(&d)),
            ("zeta", Some(&zeta)),
            ("q1", q1.as_ref()),
        ] {
            let Some(f) = f else { continue };
            if f.dimension != 1 {
                return Err(MediumError::schema(
                    name,
                    "shear media take one-dimensional fields",
                ));
            }
            if f.periods[0] != period {
                return Err(MediumError::schema(
                    name,
                    "fields must share the medium period",
                ));
            }
        }
        Ok(ShearMedium {
            period,
            alpha,
            d,
            zeta,
            q1,
            reaction: ReactionShape::Logistic,
        })
    }

    /// The same medium on the two-dimensional cell `[0, L_x) × [0, L_y)`.
    ///
    /// The shear flow is written through the stream function `H(y) = ∫ q₁`,
    /// which requires `q₁` to be a zero-mean cosine or sine profile.
    pub fn to_cell(&self, period_x: f64) -> Result<CellMedium, MediumError> {
        let ly = self.period;
        let stream = match &self.q1 {
            None => None,
            Some(q1) => {
                let k = ly / (2.0 * PI);
                let profile = match q1.profile {
                    Profile::Constant(0.0) => None,
                    Profile::Cosine {
                        mean: 0.0,
                        amplitude,
                    } => Some(Profile::SineProduct {
                        mean: 0.0,
                        amplitude: amplitude * k,
                    }),
                    Profile::SineProduct {
                        mean: 0.0,
                        amplitude,
                    } => Some(Profile::Cosine {
                        mean: 0.0,
                        amplitude: -amplitude * k,
                    }),
                    _ => return Err(MediumError::schema(
                        "q1",
                        "only zero-mean cosine or sine shear flows have a periodic stream function",
                    )),
                };
                match profile {
                    Some(p) => Some(CoefficientField::cell_along([period_x, ly], Axis::Y, p)?),
                    None => None,
                }
            }
        };
        CellMedium::new(
            self.alpha.extrude_along_y(period_x)?,
            self.d.extrude_along_y(period_x)?,
            stream,
            self.zeta.extrude_along_y(period_x)?,
            [1.0, 0.0],
        )
    }
}

/// Two-dimensional periodicity cell with diagonal diffusion `diag(a₁₁, a₂₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMedium {
    pub periods: [f64; 2],
    pub a11: CoefficientField,
    pub a22: CoefficientField,
    /// Off-diagonal diffusion entry; it enters the ellipticity check only.
    pub a12: Option<CoefficientField>,
    pub stream: Option<CoefficientField>,
    pub zeta: CoefficientField,
    /// Unit propagation direction `e`.
    pub direction: [f64; 2],
    pub reaction: ReactionShape,
}

impl CellMedium {
    pub fn new(
        a11: CoefficientField,
        a22: CoefficientField,
        stream: Option<CoefficientField>,
        zeta: CoefficientField,
        direction: [f64; 2],
    ) -> Result<Self, MediumError> {
        let periods = a11.periods;
        for (name, f) in [
            ("a11", Some(&a11)),
            ("a22", Some(&a22)),
            ("zeta", Some(&zeta)),
            ("stream_function", stream.as_ref()),
        ] {
            let Some(f) = f else { continue };
            if f.dimension != 2 {
                return Err(MediumError::schema(
                    name,
                    "cell media take two-dimensional fields",
                ));
            }
            if f.periods != periods {
                return Err(MediumError::schema(
                    name,
                    "fields must share the medium periods",
                ));
            }
        }
        let norm = direction[0].hypot(direction[1]);
        if !norm.is_finite() || norm == 0.0 {
            return Err(MediumError::schema(
                "direction",
                "direction must be a nonzero vector",
            ));
        }
        Ok(CellMedium {
            periods,
            a11,
            a22,
            a12: None,
            stream,
            zeta,
            direction: [direction[0] / norm, direction[1] / norm],
            reaction: ReactionShape::Logistic,
        })
    }

    /// Identity diffusion on the cell.
    pub fn isotropic(
        periods: [f64; 2],
        stream: Option<CoefficientField>,
        zeta: CoefficientField,
    ) -> Result<Self, MediumError> {
        Self::new(
            CoefficientField::constant_cell(periods, 1.0)?,
            CoefficientField::constant_cell(periods, 1.0)?,
            stream,
            zeta,
            [1.0, 0.0],
        )
    }
}

/// Any of the supported media.
#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    Line(LineMedium),
    Shear(ShearMedium),
    Cell(CellMedium),
}

impl Medium {
    pub fn kind(&self) -> &'static str {
        match self {
            Medium::Line(_) => "line",
            Medium::Shear(_) => "shear",
            Medium::Cell(_) => "cell",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Medium::Cell(_) => 2,
            _ => 1,
        }
    }

    pub fn zeta(&self) -> &CoefficientField {
        match self {
            Medium::Line(m) => &m.zeta,
            Medium::Shear(m) => &m.zeta,
            Medium::Cell(m) => &m.zeta,
        }
    }

    /// `e·A·e` as a field (`a`, `α`, or `e₁²a₁₁ + e₂²a₂₂`).
    pub fn directional_diffusion(&self) -> Result<CoefficientField, MediumError> {
        match self {
            Medium::Line(m) => Ok(m.a.clone()),
            Medium::Shear(m) => Ok(m.alpha.clone()),
            Medium::Cell(m) => {
                let [e1, e2] = m.direction;
                if e2 == 0.0 {
                    return Ok(m.a11.clone());
                }
                if e1 == 0.0 {
                    return Ok(m.a22.clone());
                }
                let n = 256;
                let a11 = m.a11.sample_grid(n, n)?;
                let a22 = m.a22.sample_grid(n, n)?;
                let values = a11
                    .iter()
                    .zip(&a22)
                    .map(|(p, q)| e1 * e1 * p + e2 * e2 * q)
                    .collect();
                CoefficientField::cell(
                    m.periods,
                    Profile::Samples {
                        values,
                        shape: [n, n],
                    },
                )
            }
        }
    }

    /// Canonical JSON document of the medium.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MediumDoc::from(self)).expect("medium documents always serialize")
    }

    /// Parse a medium document; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self, MediumError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: MediumDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            MediumError::schema(path, e.inner().to_string())
        })?;
        Medium::try_from(doc)
    }

    /// SHA-256 of the canonical JSON document, as lowercase hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} medium {}", self.kind(), &self.hash()[..12])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProfileKind {
    Constant,
    Cosine,
    InverseCosine,
    SineProduct,
    Samples,
}

/// JSON form of a profile: `{"kind": ..., "params": [...]}` with optional
/// `"axis"` and, for two-dimensional samples, `"shape": [n1, n2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    kind: ProfileKind,
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 2]>,
}

impl From<&CoefficientField> for ProfileDoc {
    fn from(field: &CoefficientField) -> Self {
        let (kind, params, shape) = match &field.profile {
            Profile::Constant(c) => (ProfileKind::Constant, vec![*c], None),
            Profile::Cosine { mean, amplitude } => {
                (ProfileKind::Cosine, vec![*mean, *amplitude], None)
            }
            Profile::InverseCosine { mean, amplitude } => {
                (ProfileKind::InverseCosine, vec![*mean, *amplitude], None)
            }
            Profile::SineProduct { mean, amplitude } => {
                (ProfileKind::SineProduct, vec![*mean, *amplitude], None)
            }
            Profile::Samples { values, shape } => {
                let shape = (shape[1] != 1).then_some(*shape);
                (ProfileKind::Samples, values.clone(), shape)
            }
        };
        ProfileDoc {
            kind,
            params,
            axis: field.axis,
            shape,
        }
    }
}

impl ProfileDoc {
    fn to_field(
        &self,
        path: &str,
        dimension: usize,
        periods: [f64; 2],
    ) -> Result<CoefficientField, MediumError> {
        let want = |count: usize| {
            if self.params.len() == count {
                Ok(())
            } else {
                Err(MediumError::schema(
                    format!("{path}.params"),
                    format!("expected {count} parameters, got {}", self.params.len()),
                ))
            }
        };
        let p = &self.params;
        let profile = match self.kind {
            ProfileKind::Constant => {
                want(1)?;
                Profile::Constant(p[0])
            }
            ProfileKind::Cosine => {
                want(2)?;
                Profile::Cosine {
                    mean: p[0],
                    amplitude: p[1],
                }
            }
            ProfileKind::InverseCosine => {
                want(2)?;
                Profile::InverseCosine {
                    mean: p[0],
                    amplitude: p[1],
                }
            }
            ProfileKind::SineProduct => {
                want(2)?;
                Profile::SineProduct {
                    mean: p[0],
                    amplitude: p[1],
                }
            }
            ProfileKind::Samples => {
                let shape = self.shape.unwrap_or([p.len(), 1]);
                Profile::Samples {
                    values: p.clone(),
                    shape,
                }
            }
        };
        let built = match (dimension, self.axis) {
            (1, None) => CoefficientField::line(periods[0], profile),
            (1, Some(_)) => Err(MediumError::schema(
                "axis",
                "axis applies to two-dimensional media only",
            )),
            (_, None) => CoefficientField::cell(periods, profile),
            (_, Some(axis)) => CoefficientField::cell_along(periods, axis, profile),
        };
        built.map_err(|e| match e {
            MediumError::Schema {
                path: inner,
                message,
            } => MediumError::schema(format!("{path}.{inner}"), message),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Geometry {
    Line,
    Shear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldsDoc {
    a11: ProfileDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a12: Option<ProfileDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a22: Option<ProfileDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediumDoc {
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<Geometry>,
    periods: Vec<f64>,
    fields: FieldsDoc,
    #[serde(default)]
    stream_function: Option<ProfileDoc>,
    zeta: ProfileDoc,
    #[serde(default)]
    q1: Option<ProfileDoc>,
    #[serde(default)]
    reaction_shape: ReactionShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<[f64; 2]>,
}

impl From<&Medium> for MediumDoc {
    fn from(medium: &Medium) -> Self {
        match medium {
            Medium::Line(m) => MediumDoc {
                dimension: 1,
                geometry: Some(Geometry::Line),
                periods: vec![m.period],
                fields: FieldsDoc {
                    a11: (&m.a).into(),
                    a12: None,
                    a22: None,
                },
                stream_function: None,
                zeta: (&m.zeta).into(),
                q1: None,
                reaction_shape: m.reaction,
                direction: None,
            },
            Medium::Shear(m) => MediumDoc {
                dimension: 1,
                geometry: Some(Geometry::Shear),
                periods: vec![m.period],
                fields: FieldsDoc {
                    a11: (&m.alpha).into(),
                    a12: None,
                    a22: Some((&m.d).into()),
                },
                stream_function: None,
                zeta: (&m.zeta).into(),
                q1: m.q1.as_ref().map(Into::into),
                reaction_shape: m.reaction,
                direction: None,
            },
            Medium::Cell(m) => MediumDoc {
                dimension: 2,
                geometry: None,
                periods: m.periods.to_vec(),
                fields: FieldsDoc {
                    a11: (&m.a11).into(),
                    a12: m.a12.as_ref().map(Into::into),
                    a22: Some((&m.a22).into()),
                },
                stream_function: m.stream.as_ref().map(Into::into),
                zeta: (&m.zeta).into(),
                q1: None,
                reaction_shape: m.reaction,
                direction: Some(m.direction),
            },
        }
    }
}

impl TryFrom<MediumDoc> for Medium {
    type Error = MediumError;

    fn try_from(doc: MediumDoc) -> Result<Self, MediumError> {
        if doc.dimension != 1 && doc.dimension != 2 {
            return Err(MediumError::schema(
                "dimension",
                format!("must be 1 or 2, got {}", doc.dimension),
            ));
        }
        if doc.periods.len() != doc.dimension {
            return Err(MediumError::schema(
                "periods",
                format!(
                    "expected {} periods, got {}",
                    doc.dimension,
                    doc.periods.len()
                ),
            ));
        }
        for (i, p) in doc.periods.iter().enumerate() {
            check_period(&format!("periods[{i}]"), *p)?;
        }
        let periods = [doc.periods[0], *doc.periods.last().unwrap()];
        let field = |path: &str, p: &ProfileDoc| p.to_field(path, doc.dimension, periods);
        if doc.dimension == 1 {
            if doc.stream_function.is_some() {
                return Err(MediumError::schema(
                    "stream_function",
                    "one-dimensional media use q1",
                ));
            }
            if doc.direction.is_some() {
                return Err(MediumError::schema(
                    "direction",
                    "one-dimensional media propagate along x",
                ));
            }
            if doc.fields.a12.is_some() {
                return Err(MediumError::schema(
                    "fields.a12",
                    "one-dimensional media have no a12",
                ));
            }
            let a = field("fields.a11", &doc.fields.a11)?;
            let zeta = field("zeta", &doc.zeta)?;
            let geometry =
                doc.geometry
                    .unwrap_or(if doc.q1.is_some() || doc.fields.a22.is_some() {
                        Geometry::Shear
                    } else {
                        Geometry::Line
                    });
            match geometry {
                Geometry::Line => {
                    if doc.q1.is_some() {
                        return Err(MediumError::schema(
                            "q1",
                            "advection needs geometry \"shear\"",
                        ));
                    }
                    if doc.fields.a22.is_some() {
                        return Err(MediumError::schema(
                            "fields.a22",
                            "line media have a single diffusion field",
                        ));
                    }
                    let mut m = LineMedium::new(a, zeta)?;
                    m.reaction = doc.reaction_shape;
                    Ok(Medium::Line(m))
                }
                Geometry::Shear => {
                    let d = match &doc.fields.a22 {
                        Some(p) => field("fields.a22", p)?,
                        None => a.clone(),
                    };
                    let q1 = doc.q1.as_ref().map(|p| field("q1", p)).transpose()?;
                    let mut m = ShearMedium::with_cross_diffusion(a, d, zeta, q1)?;
                    m.reaction = doc.reaction_shape;
                    Ok(Medium::Shear(m))
                }
            }
        } else {
            if doc.geometry.is_some() {
                return Err(MediumError::schema(
                    "geometry",
                    "applies to one-dimensional media only",
                ));
            }
            if doc.q1.is_some() {
                return Err(MediumError::schema(
                    "q1",
                    "two-dimensional media use stream_function",
                ));
            }
            let a11 = field("fields.a11", &doc.fields.a11)?;
            let a22 = match &doc.fields.a22 {
                Some(p) => field("fields.a22", p)?,
                None => a11.clone(),
            };
            let stream = doc
                .stream_function
                .as_ref()
                .map(|p| field("stream_function", p))
                .transpose()?;
            let zeta = field("zeta", &doc.zeta)?;
            let mut m =
                CellMedium::new(a11, a22, stream, zeta, doc.direction.unwrap_or([1.0, 0.0]))?;
            m.a12 = doc
                .fields
                .a12
                .as_ref()
                .map(|p| field("fields.a12", p))
                .transpose()?;
            m.reaction = doc.reaction_shape;
            Ok(Medium::Cell(m))
        }
    }
}

/// A structural hypothesis on the medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Diffusion entries and `ζ` are positive.
    Positivity,
    /// The diffusion matrix is uniformly elliptic.
    Ellipticity,
    /// `0 ≤ g(u) ≤ g'(0)·u`.
    KppBound,
    /// The flow has zero cell average.
    ZeroAverage,
    /// The flow is divergence free.
    DivergenceFree,
    /// `∇·(A e) = 0`; needed by the large-diffusion and homogenization limits only.
    DivergenceFreeDiffusionFlux,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Positivity => "positivity",
            Hypothesis::Ellipticity => "ellipticity",
            Hypothesis::KppBound => "kpp-bound",
            Hypothesis::ZeroAverage => "zero-average",
            Hypothesis::DivergenceFree => "divergence-free",
            Hypothesis::DivergenceFreeDiffusionFlux => "divergence-free-diffusion-flux",
        }
    }
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    /// Measured quantity: a minimum for positivity checks, a residual otherwise.
    pub value: f64,
    pub detail: String,
}

/// All hypothesis checks of a medium on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub grid: [usize; 2],
    pub checks: Vec<HypothesisCheck>,
}

impl Diagnostics {
    pub fn check(&self, hypothesis: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == hypothesis)
    }

    pub fn holds(&self, hypothesis: Hypothesis) -> bool {
        self.checks
            .iter()
            .filter(|c| c.hypothesis == hypothesis)
            .all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Positivity, ellipticity, KPP bound, and a zero-average divergence-free flow.
    pub fn is_admissible(&self) -> bool {
        [
            Hypothesis::Positivity,
            Hypothesis::Ellipticity,
            Hypothesis::KppBound,
            Hypothesis::ZeroAverage,
            Hypothesis::DivergenceFree,
        ]
        .into_iter()
        .all(|h| self.holds(h))
    }
}

/// Relative tolerance for the discrete flow and flux residuals.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

fn positivity(name: &str, samples: &[f64]) -> HypothesisCheck {
    let (index, min) =
        samples
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    HypothesisCheck {
        hypothesis: Hypothesis::Positivity,
        passed: min > 0.0,
        value: min,
        detail: format!("min {name} = {min:.6e} at node {index}"),
    }
}

/// Check the structural hypotheses on an `n` (or `n × n`) grid.
pub fn validate(medium: &Medium, n: usize) -> Result<Diagnostics, MediumError> {
    check_grid(n)?;
    let mut checks = Vec::new();
    let kpp = |shape: ReactionShape| {
        let defect = shape.kpp_defect(1000);
        HypothesisCheck {
            hypothesis: Hypothesis::KppBound,
            passed: defect <= 1e-14,
            value: defect,
            detail: format!("{shape:?} shape, defect {defect:.3e}"),
        }
    };
    let grid;
    match medium {
        Medium::Line(m) => {
            grid = [n, 1];
            checks.push(positivity("a", &sample_field(&m.a, n)?));
            checks.push(positivity("zeta", &sample_field(&m.zeta, n)?));
            checks.push(kpp(m.reaction));
        }
        Medium::Shear(m) => {
            grid = [n, 1];
            checks.push(positivity("alpha", &sample_field(&m.alpha, n)?));
            checks.push(positivity("d", &sample_field(&m.d, n)?));
            checks.push(positivity("zeta", &sample_field(&m.zeta, n)?));
            checks.push(kpp(m.reaction));
            if let Some(q1) = &m.q1 {
                let s = sample_field(q1, n)?;
                let mean = s.iter().sum::<f64>() / n as f64;
                let scale = s.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                checks.push(HypothesisCheck {
                    hypothesis: Hypothesis::ZeroAverage,
                    passed: mean.abs() <= STRUCTURE_TOLERANCE * scale,
                    value: mean,
                    detail: format!("cell average of q1 = {mean:.3e}"),
                });
            }
        }
        Medium::Cell(m) => {
            grid = [n, n];
            let a11 = m.a11.sample_grid(n, n)?;
            let a22 = m.a22.sample_grid(n, n)?;
            checks.push(positivity("a11", &a11));
            checks.push(positivity("a22", &a22));
            checks.push(positivity("zeta", &m.zeta.sample_grid(n, n)?));
            let a12 = match &m.a12 {
                Some(f) => f.sample_grid(n, n)?,
                None => vec![0.0; n * n],
            };
            let det = a11
                .iter()
                .zip(&a22)
                .zip(&a12)
                .map(|((p, q), r)| p * q - r * r)
                .fold(f64::INFINITY, f64::min);
            checks.push(HypothesisCheck {
                hypothesis: Hypothesis::Ellipticity,
                passed: det > 0.0,
                value: det,
                detail: format!("min det A = {det:.6e}"),
            });
            checks.push(kpp(m.reaction));
            let disc = crate::assembly::CellDiscretization::new(m, n, n)
                .map_err(|e| MediumError::schema("medium", e.to_string()))?;
            if m.stream.is_some() {
                let scale = disc.flow_scale().max(f64::MIN_POSITIVE);
                let div = disc.flow_divergence_residual();
                checks.push(HypothesisCheck {
                    hypothesis: Hypothesis::DivergenceFree,
                    passed: div <= STRUCTURE_TOLERANCE * scale,
                    value: div,
                    detail: format!("max |div q| = {div:.3e} (flow scale {scale:.3e})"),
                });
                let avg = disc
                    .flow_average()
                    .into_iter()
                    .fold(0.0_f64, |a, v| a.max(v.abs()));
                checks.push(HypothesisCheck {
                    hypothesis: Hypothesis::ZeroAverage,
                    passed: avg <= STRUCTURE_TOLERANCE * scale,
                    value: avg,
                    detail: format!("max |cell average of q| = {avg:.3e}"),
                });
            }
            let flux = disc.diffusion_flux_divergence_residual();
            let scale = disc.diffusion_scale().max(f64::MIN_POSITIVE);
            checks.push(HypothesisCheck {
                hypothesis: Hypothesis::DivergenceFreeDiffusionFlux,
                passed: flux <= STRUCTURE_TOLERANCE * scale,
                value: flux,
                detail: format!("max |div(A e)| = {flux:.3e}"),
            });
        }
    }
    Ok(Diagnostics { grid, checks })
}

/// Reference media used by the examples, tests and benchmarks.
pub mod presets {
    use super::*;

    fn line(profile: Profile) -> CoefficientField {
        CoefficientField::line(1.0, profile).expect("preset profiles are valid")
    }

    fn cos(mean: f64, amplitude: f64) -> CoefficientField {
        line(Profile::Cosine { mean, amplitude })
    }

    fn constant(c: f64) -> CoefficientField {
        line(Profile::Constant(c))
    }

    /// `a = 1`, `ζ = 1` on the unit line; `c* = 2`.
    pub fn constant_line() -> Medium {
        Medium::Line(LineMedium::new(constant(1.0), constant(1.0)).unwrap())
    }

    /// `a = 1`, `ζ = 1 + 0.5·cos(2πx)`.
    pub fn cosine_growth_line() -> Medium {
        Medium::Line(LineMedium::new(constant(1.0), cos(1.0, 0.5)).unwrap())
    }

    /// `a = 1/(1 + 0.5·cos(2πx))`, `ζ = 1`; harmonic mean of `a` is 1.
    pub fn layered_line() -> Medium {
        Medium::Line(
            LineMedium::new(
                line(Profile::InverseCosine {
                    mean: 1.0,
                    amplitude: 0.5,
                }),
                constant(1.0),
            )
            .unwrap(),
        )
    }

    /// Shear medium with `α = 1`, `ζ = 1 + 0.5·cos(2πy)`, no flow.
    pub fn shear_growth() -> ShearMedium {
        ShearMedium::new(constant(1.0), cos(1.0, 0.5), None).unwrap()
    }

    /// Shear medium with `α = 1`, `ζ = 1`, flow `q₁ = cos(2πy)`.
    pub fn shear_flow() -> ShearMedium {
        ShearMedium::new(constant(1.0), constant(1.0), Some(cos(0.0, 1.0))).unwrap()
    }

    /// Shear medium with `α = 1 + 0.5·cos(2πy)`, `ζ = 1`, no flow.
    pub fn shear_diffusion() -> ShearMedium {
        ShearMedium::new(cos(1.0, 0.5), constant(1.0), None).unwrap()
    }

    /// Identity diffusion, `ζ = 1 + 0.5·sin(2πx)sin(2πy)` and, with `flow`,
    /// the cellular flow `H = sin(2πx)sin(2πy)/(2π)`.
    pub fn cellular(flow: bool) -> CellMedium {
        let periods = [1.0, 1.0];
        let zeta = CoefficientField::cell(
            periods,
            Profile::SineProduct {
                mean: 1.0,
                amplitude: 0.5,
            },
        )
        .unwrap();
        let stream = flow.then(|| {
            CoefficientField::cell(
                periods,
                Profile::SineProduct {
                    mean: 0.0,
                    amplitude: 1.0 / (2.0 * PI),
                },
            )
            .unwrap()
        });
        CellMedium::isotropic(periods, stream, zeta).unwrap()
    }

    /// The six media of the upper-bound check.
    pub fn bound_media() -> Vec<(&'static str, Medium)> {
        vec![
            ("constant line", constant_line()),
            ("cosine growth line", cosine_growth_line()),
            ("shear growth", Medium::Shear(shear_growth())),
            ("shear flow", Medium::Shear(shear_flow())),
            ("shear diffusion", Medium::Shear(shear_diffusion())),
            ("cellular flow", Medium::Cell(cellular(true))),
        ]
    }
}
