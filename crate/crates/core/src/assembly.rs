//! Finite-volume discretization of the shifted operator `L_λ`.
//!
//! For a decay rate `λ > 0` in the direction `e`,
//!
//! ```text
//! L_λψ = D ∇·(A∇ψ) + (−2Dλ A e + S q)·∇ψ
//!        + [Dλ² eAe − Dλ ∇·(A e) − Sλ q·e + B ζ] ψ
//! ```
//!
//! on the periodicity cell, where `D`, `S` and `B` are the diffusion,
//! advection and reaction [`Scales`]. Unknowns live at cell centres.
//! Diffusion uses harmonic face averages, first-order terms are upwinded face
//! by face, and a flow given by a stream function is differenced from vertex
//! values, which makes it exactly divergence free on the grid. Every
//! off-diagonal entry is therefore nonnegative and each row sums to the
//! zeroth-order coefficient at its node.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::medium::{CellMedium, LineMedium, Medium, MediumError, ShearMedium};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("decay rate must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("{name} scale out of admissible range: {value}")]
    BadScale { name: &'static str, value: f64 },
    #[error("{field}: sample {value} at node {index} must be {requirement}")]
    BadCoefficient {
        field: &'static str,
        index: usize,
        value: f64,
        requirement: &'static str,
    },
    #[error("grid needs at least 4 points per direction, got {0}")]
    GridTooSmall(usize),
    #[error("{field} has {got} samples, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("off-diagonal diffusion a12 is not supported by the monotone scheme")]
    UnsupportedCrossDiffusion,
    #[error(transparent)]
    Medium(#[from] MediumError),
}

/// Diffusion, advection and reaction scale factors `(D, S, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub diffusion: f64,
    pub advection: f64,
    pub reaction: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Scales::UNIT
    }
}

impl Scales {
    pub const UNIT: Scales = Scales {
        diffusion: 1.0,
        advection: 1.0,
        reaction: 1.0,
    };

    pub fn new(diffusion: f64, advection: f64, reaction: f64) -> Result<Self, AssemblyError> {
        let s = Scales {
            diffusion,
            advection,
            reaction,
        };
        s.check()?;
        Ok(s)
    }

    /// `(ε, 1, 1)`.
    pub fn small_diffusion(epsilon: f64) -> Result<Self, AssemblyError> {
        Self::new(epsilon, 1.0, 1.0)
    }

    /// `(M, M^γ, 1)` with `0 ≤ γ ≤ ½`.
    pub fn large_diffusion(m: f64, gamma: f64) -> Result<Self, AssemblyError> {
        if !(0.0..=0.5).contains(&gamma) {
            return Err(AssemblyError::BadScale {
                name: "advection exponent",
                value: gamma,
            });
        }
        Self::new(m, m.powf(gamma), 1.0)
    }

    /// `(1, B^γ, B)` with `γ ≥ ½`.
    pub fn reaction(b: f64, gamma: f64) -> Result<Self, AssemblyError> {
        if !(gamma >= 0.5 && gamma.is_finite()) {
            return Err(AssemblyError::BadScale {
                name: "advection exponent",
                value: gamma,
            });
        }
        Self::new(1.0, b.powf(gamma), b)
    }

    fn check(&self) -> Result<(), AssemblyError> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(AssemblyError::BadScale { name, value })
            }
        };
        positive("diffusion", self.diffusion)?;
        positive("reaction", self.reaction)?;
        if !(self.advection.is_finite() && self.advection >= 0.0) {
            return Err(AssemblyError::BadScale {
                name: "advection",
                value: self.advection,
            });
        }
        Ok(())
    }
}

/// Uniform cell-centred grid; `n[1] = 1` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dimension: usize,
    pub n: [usize; 2],
    pub h: [f64; 2],
}

impl Grid {
    pub fn size(&self) -> usize {
        self.n[0] * self.n[1]
    }
}

/// Which discretized operator a matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Line,
    CrossSection,
    Cell,
}

/// Sparse row-compressed matrix of `L_λ` with its assembly metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pub lambda: f64,
    pub scales: Scales,
    pub kind: OperatorKind,
    pub grid: Grid,
    /// Exactly symmetric by construction.
    pub symmetric: bool,
    /// Entries with `|row − col| > bandwidth` come from periodic wrap-around.
    pub bandwidth: usize,
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries `(col, value)` of one row, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// All entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.size()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size())
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for (_, j, v) in self.entries() {
            out[j] += v;
        }
        out
    }

    /// Smallest off-diagonal entry; nonnegative for a monotone stencil.
    pub fn min_off_diagonal(&self) -> f64 {
        self.entries()
            .filter(|(i, j, _)| i != j)
            .map(|(_, _, v)| v)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max |L_ii|`.
    pub fn max_abs_diagonal(&self) -> f64 {
        self.diagonal().into_iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Infinity norm `max_i Σ_j |L_ij|`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.size())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        self.apply(x, &mut y);
        y
    }

    /// Largest `|L_ij − L_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Coordinate listing, one `row col value` triple per line.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{i} {j} {v:.16e}");
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn set_entry(&mut self, i: usize, j: usize, v: f64) {
        let k = (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.cols[k] == j)
            .expect("entry in pattern");
        self.vals[k] = v;
    }

    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|(c, _)| *c);
            for (c, v) in row {
                match cols.last() {
                    Some(&last) if last == c && vals.len() > *row_ptr.last().unwrap() => {
                        *vals.last_mut().unwrap() += v;
                    }
                    _ => {
                        cols.push(c);
                        vals.push(v);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        (row_ptr, cols, vals)
    }
}

fn harmonic(p: f64, q: f64) -> f64 {
    2.0 * p * q / (p + q)
}

fn check_lambda(lambda: f64) -> Result<(), AssemblyError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(AssemblyError::NonPositiveLambda(lambda))
    }
}

fn check_samples(
    field: &'static str,
    values: &[f64],
    expected: usize,
    positive: bool,
) -> Result<(), AssemblyError> {
    if values.len() != expected {
        return Err(AssemblyError::LengthMismatch {
            field,
            got: values.len(),
            expected,
        });
    }
    for (index, &value) in values.iter().enumerate() {
        let ok = value.is_finite() && if positive { value > 0.0 } else { value >= 0.0 };
        if !ok {
            return Err(AssemblyError::BadCoefficient {
                field,
                index,
                value,
                requirement: if positive { "positive" } else { "nonnegative" },
            });
        }
    }
    Ok(())
}

/// Assembles a one-dimensional row: diffusion weights and drifts on the left
/// and right faces, and the zeroth-order coefficient `z`.
fn upwind_pair(h: f64, w_left: f64, b_left: f64, w_right: f64, b_right: f64) -> (f64, f64) {
    (
        w_left / (h * h) + (-b_left).max(0.0) / h,
        w_right / (h * h) + b_right.max(0.0) / h,
    )
}

/// Line medium on an `n`-point grid: node and face values of `a`, and `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineDiscretization {
    pub grid: Grid,
    pub a: Vec<f64>,
    /// `a_face[i]` sits between nodes `i` and `i + 1`.
    pub a_face: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl LineDiscretization {
    pub fn new(medium: &LineMedium, n: usize) -> Result<Self, AssemblyError> {
        Self::from_samples(
            medium.a.sample_grid(n, 1)?,
            medium.zeta.sample_grid(n, 1)?,
            medium.period,
        )
    }

    pub fn from_samples(a: Vec<f64>, zeta: Vec<f64>, period: f64) -> Result<Self, AssemblyError> {
        let n = a.len();
        if n < 4 {
            return Err(AssemblyError::GridTooSmall(n));
        }
        check_samples("a", &a, n, true)?;
        check_samples("zeta", &zeta, n, false)?;
        let a_face = (0..n).map(|i| harmonic(a[i], a[(i + 1) % n])).collect();
        Ok(LineDiscretization {
            grid: Grid {
                dimension: 1,
                n: [n, 1],
                h: [period / n as f64, 1.0],
            },
            a,
            a_face,
            zeta,
        })
    }

    pub fn assemble(&self, lambda: f64, scales: Scales) -> Result<OperatorMatrix, AssemblyError> {
        check_lambda(lambda)?;
        scales.check()?;
        let n = self.grid.n[0];
        let h = self.grid.h[0];
        let d = scales.diffusion;
        let rows = (0..n)
            .map(|i| {
                let l = (i + n - 1) % n;
                let r = (i + 1) % n;
                let (wl, wr) = (d * self.a_face[l], d * self.a_face[i]);
                let (bl, br) = (
                    -2.0 * d * lambda * self.a_face[l],
                    -2.0 * d * lambda * self.a_face[i],
                );
                let (off_l, off_r) = upwind_pair(h, wl, bl, wr, br);
                let z = d * lambda * lambda * self.a[i]
                    - d * lambda * (self.a_face[i] - self.a_face[l]) / h
                    + scales.reaction * self.zeta[i];
                vec![(l, off_l), (r, off_r), (i, z - off_l - off_r)]
            })
            .collect();
        let (row_ptr, cols, vals) = OperatorMatrix::from_rows(rows);
        Ok(OperatorMatrix {
            row_ptr,
            cols,
            vals,
            lambda,
            scales,
            kind: OperatorKind::Line,
            grid: self.grid,
            symmetric: false,
            bandwidth: 1,
        })
    }
}

/// Cross-section of a shear medium on an `n`-point grid in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearDiscretization {
    pub grid: Grid,
    pub alpha: Vec<f64>,
    /// Harmonic face values of the cross-section diffusion `d`.
    pub d_face: Vec<f64>,
    pub zeta: Vec<f64>,
    pub q1: Option<Vec<f64>>,
}

impl ShearDiscretization {
    pub fn new(medium: &ShearMedium, n: usize) -> Result<Self, AssemblyError> {
        let q1 = medium
            .q1
            .as_ref()
            .map(|f| f.sample_grid(n, 1))
            .transpose()?;
        Self::from_samples(
            medium.alpha.sample_grid(n, 1)?,
            medium.d.sample_grid(n, 1)?,
            medium.zeta.sample_grid(n, 1)?,
            q1,
            medium.period,
        )
    }

    pub fn from_samples(
        alpha: Vec<f64>,
        d: Vec<f64>,
        zeta: Vec<f64>,
        q1: Option<Vec<f64>>,
        period: f64,
    ) -> Result<Self, AssemblyError> {
        let n = alpha.len();
        if n < 4 {
            return Err(AssemblyError::GridTooSmall(n));
        }
        check_samples("alpha", &alpha, n, true)?;
        check_samples("d", &d, n, true)?;
        check_samples("zeta", &zeta, n, false)?;
        if let Some(q) = &q1 {
            if q.len() != n {
                return Err(AssemblyError::LengthMismatch {
                    field: "q1",
                    got: q.len(),
                    expected: n,
                });
            }
            if let Some(index) = q.iter().position(|v| !v.is_finite()) {
                return Err(AssemblyError::BadCoefficient {
                    field: "q1",
                    index,
                    value: q[index],
                    requirement: "finite",
                });
            }
        }
        let d_face = (0..n).map(|i| harmonic(d[i], d[(i + 1) % n])).collect();
        Ok(ShearDiscretization {
            grid: Grid {
                dimension: 1,
                n: [n, 1],
                h: [period / n as f64, 1.0],
            },
            alpha,
            d_face,
            zeta,
            q1,
        })
    }

    pub fn assemble(&self, lambda: f64, scales: Scales) -> Result<OperatorMatrix, AssemblyError> {
        check_lambda(lambda)?;
        scales.check()?;
        let n = self.grid.n[0];
        let h2 = self.grid.h[0] * self.grid.h[0];
        let d = scales.diffusion;
        let rows = (0..n)
            .map(|i| {
                let l = (i + n - 1) % n;
                let r = (i + 1) % n;
                let off_l = d * self.d_face[l] / h2;
                let off_r = d * self.d_face[i] / h2;
                let flow = self.q1.as_ref().map_or(0.0, |q| q[i]);
                let z = d * lambda * lambda * self.alpha[i] - scales.advection * lambda * flow
                    + scales.reaction * self.zeta[i];
                vec![(l, off_l), (r, off_r), (i, z - off_l - off_r)]
            })
            .collect();
        let (row_ptr, cols, vals) = OperatorMatrix::from_rows(rows);
        Ok(OperatorMatrix {
            row_ptr,
            cols,
            vals,
            lambda,
            scales,
            kind: OperatorKind::CrossSection,
            grid: self.grid,
            symmetric: true,
            bandwidth: 1,
        })
    }
}

/// Two-dimensional cell on an `n₁ × n₂` grid, nodes indexed `i + n₁·j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDiscretization {
    pub grid: Grid,
    pub direction: [f64; 2],
    /// `a₁₁` on the face between `(i, j)` and `(i + 1, j)`.
    pub a11_face: Vec<f64>,
    /// `a₂₂` on the face between `(i, j)` and `(i, j + 1)`.
    pub a22_face: Vec<f64>,
    /// Flow component `q₁` on the `x`-faces.
    pub qx_face: Vec<f64>,
    /// Flow component `q₂` on the `y`-faces.
    pub qy_face: Vec<f64>,
    /// `eAe` at the nodes.
    pub eae: Vec<f64>,
    /// `∇·(A e)` at the nodes.
    pub div_ae: Vec<f64>,
    /// `q·e` at the nodes.
    pub qe: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl CellDiscretization {
    pub fn new(medium: &CellMedium, n1: usize, n2: usize) -> Result<Self, AssemblyError> {
        if n1 < 4 || n2 < 4 {
            return Err(AssemblyError::GridTooSmall(n1.min(n2)));
        }
        if let Some(a12) = &medium.a12 {
            if a12.as_constant() != Some(0.0) {
                return Err(AssemblyError::UnsupportedCrossDiffusion);
            }
        }
        let size = n1 * n2;
        let a11 = medium.a11.sample_grid(n1, n2)?;
        let a22 = medium.a22.sample_grid(n1, n2)?;
        let zeta = medium.zeta.sample_grid(n1, n2)?;
        check_samples("a11", &a11, size, true)?;
        check_samples("a22", &a22, size, true)?;
        check_samples("zeta", &zeta, size, false)?;
        let h = [medium.periods[0] / n1 as f64, medium.periods[1] / n2 as f64];
        let idx = |i: usize, j: usize| (i % n1) + n1 * (j % n2);
        let mut a11_face = vec![0.0; size];
        let mut a22_face = vec![0.0; size];
        for j in 0..n2 {
            for i in 0..n1 {
                let k = idx(i, j);
                a11_face[k] = harmonic(a11[k], a11[idx(i + 1, j)]);
                a22_face[k] = harmonic(a22[k], a22[idx(i, j + 1)]);
            }
        }
        let mut qx_face = vec![0.0; size];
        let mut qy_face = vec![0.0; size];
        if let Some(stream) = &medium.stream {
            let v = stream.sample_vertices(n1, n2)?;
            if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                return Err(AssemblyError::BadCoefficient {
                    field: "stream_function",
                    index,
                    value: v[index],
                    requirement: "finite",
                });
            }
            for j in 0..n2 {
                for i in 0..n1 {
                    let k = idx(i, j);
                    qx_face[k] = (v[idx(i + 1, j + 1)] - v[idx(i + 1, j)]) / h[1];
                    qy_face[k] = -(v[idx(i + 1, j + 1)] - v[idx(i, j + 1)]) / h[0];
                }
            }
        }
        let [e1, e2] = medium.direction;
        let mut eae = vec![0.0; size];
        let mut div_ae = vec![0.0; size];
        let mut qe = vec![0.0; size];
        for j in 0..n2 {
            for i in 0..n1 {
                let k = idx(i, j);
                let kl = idx(i + n1 - 1, j);
                let kd = idx(i, j + n2 - 1);
                eae[k] = e1 * e1 * a11[k] + e2 * e2 * a22[k];
                div_ae[k] = e1 * (a11_face[k] - a11_face[kl]) / h[0]
                    + e2 * (a22_face[k] - a22_face[kd]) / h[1];
                qe[k] =
                    0.5 * e1 * (qx_face[k] + qx_face[kl]) + 0.5 * e2 * (qy_face[k] + qy_face[kd]);
            }
        }
        Ok(CellDiscretization {
            grid: Grid {
                dimension: 2,
                n: [n1, n2],
                h,
            },
            direction: medium.direction,
            a11_face,
            a22_face,
            qx_face,
            qy_face,
            eae,
            div_ae,
            qe,
            zeta,
        })
    }

    pub fn assemble(&self, lambda: f64, scales: Scales) -> Result<OperatorMatrix, AssemblyError> {
        check_lambda(lambda)?;
        scales.check()?;
        let [n1, n2] = self.grid.n;
        let [h1, h2] = self.grid.h;
        let [e1, e2] = self.direction;
        let (d, s) = (scales.diffusion, scales.advection);
        let idx = |i: usize, j: usize| (i % n1) + n1 * (j % n2);
        let bx = |k: usize| -2.0 * d * lambda * e1 * self.a11_face[k] + s * self.qx_face[k];
        let by = |k: usize| -2.0 * d * lambda * e2 * self.a22_face[k] + s * self.qy_face[k];
        let mut rows = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                let k = idx(i, j);
                let kl = idx(i + n1 - 1, j);
                let kr = idx(i + 1, j);
                let kd = idx(i, j + n2 - 1);
                let ku = idx(i, j + 1);
                let (off_l, off_r) = upwind_pair(
                    h1,
                    d * self.a11_face[kl],
                    bx(kl),
                    d * self.a11_face[k],
                    bx(k),
                );
                let (off_d, off_u) = upwind_pair(
                    h2,
                    d * self.a22_face[kd],
                    by(kd),
                    d * self.a22_face[k],
                    by(k),
                );
                let z = d * lambda * lambda * self.eae[k]
                    - d * lambda * self.div_ae[k]
                    - s * lambda * self.qe[k]
                    + scales.reaction * self.zeta[k];
                rows.push(vec![
                    (kl, off_l),
                    (kr, off_r),
                    (kd, off_d),
                    (ku, off_u),
                    (k, z - off_l - off_r - off_d - off_u),
                ]);
            }
        }
        let (row_ptr, cols, vals) = OperatorMatrix::from_rows(rows);
        Ok(OperatorMatrix {
            row_ptr,
            cols,
            vals,
            lambda,
            scales,
            kind: OperatorKind::Cell,
            grid: self.grid,
            symmetric: false,
            bandwidth: n1,
        })
    }

    /// `max |∇·q|` over the nodes.
    pub fn flow_divergence_residual(&self) -> f64 {
        let [n1, n2] = self.grid.n;
        let [h1, h2] = self.grid.h;
        let mut worst = 0.0_f64;
        for j in 0..n2 {
            for i in 0..n1 {
                let k = i + n1 * j;
                let kl = (i + n1 - 1) % n1 + n1 * j;
                let kd = i + n1 * ((j + n2 - 1) % n2);
                let div = (self.qx_face[k] - self.qx_face[kl]) / h1
                    + (self.qy_face[k] - self.qy_face[kd]) / h2;
                worst = worst.max(div.abs());
            }
        }
        worst
    }

    /// Cell averages of the two flow components.
    pub fn flow_average(&self) -> [f64; 2] {
        let n = self.qx_face.len() as f64;
        [
            self.qx_face.iter().sum::<f64>() / n,
            self.qy_face.iter().sum::<f64>() / n,
        ]
    }

    /// `max |q|` over the faces.
    pub fn flow_scale(&self) -> f64 {
        self.qx_face
            .iter()
            .chain(&self.qy_face)
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max |∇·(A e)|` over the nodes.
    pub fn diffusion_flux_divergence_residual(&self) -> f64 {
        self.div_ae.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max eAe / min(h)`, the size of the terms whose difference is `∇·(A e)`.
    pub fn diffusion_scale(&self) -> f64 {
        let h = self.grid.h[0].min(self.grid.h[1]);
        self.eae.iter().fold(0.0_f64, |a, v| a.max(*v)) / h
    }

    /// `q·e` at the nodes.
    pub fn node_flow_along_direction(&self) -> &[f64] {
        &self.qe
    }

    pub fn is_diffusion_flux_free(&self) -> bool {
        self.diffusion_flux_divergence_residual()
            <= crate::medium::STRUCTURE_TOLERANCE * self.diffusion_scale()
    }
}

/// A discretized medium from which `L_λ` is assembled for any `λ` and scales.
#[derive(Debug, Clone, PartialEq)]
pub enum Discretization {
    Line(LineDiscretization),
    Shear(ShearDiscretization),
    Cell(CellDiscretization),
}

impl Discretization {
    /// `grid = [n]` or `[n₁, n₂]`; a single entry means `n × n` for cells.
    pub fn new(medium: &Medium, grid: &[usize]) -> Result<Self, AssemblyError> {
        let n1 = *grid.first().ok_or(AssemblyError::GridTooSmall(0))?;
        let n2 = grid.get(1).copied().unwrap_or(n1);
        Ok(match medium {
            Medium::Line(m) => Discretization::Line(LineDiscretization::new(m, n1)?),
            Medium::Shear(m) => Discretization::Shear(ShearDiscretization::new(m, n1)?),
            Medium::Cell(m) => Discretization::Cell(CellDiscretization::new(m, n1, n2)?),
        })
    }

    pub fn assemble(&self, lambda: f64, scales: Scales) -> Result<OperatorMatrix, AssemblyError> {
        match self {
            Discretization::Line(d) => d.assemble(lambda, scales),
            Discretization::Shear(d) => d.assemble(lambda, scales),
            Discretization::Cell(d) => d.assemble(lambda, scales),
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            Discretization::Line(d) => d.grid,
            Discretization::Shear(d) => d.grid,
            Discretization::Cell(d) => d.grid,
        }
    }

    /// `eAe` at the nodes.
    pub fn directional_diffusion(&self) -> &[f64] {
        match self {
            Discretization::Line(d) => &d.a,
            Discretization::Shear(d) => &d.alpha,
            Discretization::Cell(d) => &d.eae,
        }
    }

    pub fn zeta(&self) -> &[f64] {
        match self {
            Discretization::Line(d) => &d.zeta,
            Discretization::Shear(d) => &d.zeta,
            Discretization::Cell(d) => &d.zeta,
        }
    }

    /// `q·e` at the nodes, if the medium carries a flow.
    pub fn flow_along_direction(&self) -> Option<&[f64]> {
        match self {
            Discretization::Line(_) => None,
            Discretization::Shear(d) => d.q1.as_deref(),
            Discretization::Cell(d) => Some(&d.qe),
        }
    }
}

/// `L_λ` for the line medium with samples `a`, `ζ` on `[0, period)`.
pub fn assemble_line_operator(
    a: &[f64],
    zeta: &[f64],
    period: f64,
    lambda: f64,
    scales: Scales,
) -> Result<OperatorMatrix, AssemblyError> {
    LineDiscretization::from_samples(a.to_vec(), zeta.to_vec(), period)?.assemble(lambda, scales)
}

/// Cross-section operator `D(dφ')' + [Dλ²α − Sλq₁ + Bζ]φ` of a shear medium.
pub fn assemble_cross_section_operator(
    alpha: &[f64],
    d: &[f64],
    zeta: &[f64],
    q1: Option<&[f64]>,
    period: f64,
    lambda: f64,
    scales: Scales,
) -> Result<OperatorMatrix, AssemblyError> {
    ShearDiscretization::from_samples(
        alpha.to_vec(),
        d.to_vec(),
        zeta.to_vec(),
        q1.map(<[f64]>::to_vec),
        period,
    )?
    .assemble(lambda, scales)
}

/// `L_λ` on an `n₁ × n₂` grid of a two-dimensional cell.
pub fn assemble_cell_operator(
    medium: &CellMedium,
    n1: usize,
    n2: usize,
    lambda: f64,
    scales: Scales,
) -> Result<OperatorMatrix, AssemblyError> {
    CellDiscretization::new(medium, n1, n2)?.assemble(lambda, scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::presets;

    #[test]
    fn constant_line_rows_sum_to_lambda_squared_plus_zeta() {
        let l = assemble_line_operator(&[1.0; 16], &[1.0; 16], 1.0, 1.0, Scales::UNIT).unwrap();
        for s in l.row_sums() {
            assert!((s - 2.0).abs() < 1e-10);
        }
        assert!(l.min_off_diagonal() >= 0.0);
    }

    #[test]
    fn pure_diffusion_is_the_periodic_laplacian() {
        let eps = 0.5;
        let n = 8;
        let h = 1.0 / n as f64;
        let l = assemble_line_operator(
            &[1.0; 8],
            &[0.0; 8],
            1.0,
            1e-300,
            Scales::small_diffusion(eps).unwrap(),
        )
        .unwrap();
        for i in 0..n {
            assert!((l.get(i, i) + 2.0 * eps / (h * h)).abs() < 1e-9);
            assert!((l.get(i, (i + 1) % n) - eps / (h * h)).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert_eq!(
            assemble_line_operator(&[1.0; 8], &[1.0; 8], 1.0, 0.0, Scales::UNIT),
            Err(AssemblyError::NonPositiveLambda(0.0))
        );
        assert!(matches!(
            assemble_line_operator(
                &[1.0; 8],
                &[1.0; 8],
                1.0,
                1.0,
                Scales {
                    diffusion: 0.0,
                    ..Scales::UNIT
                }
            ),
            Err(AssemblyError::BadScale {
                name: "diffusion",
                ..
            })
        ));
        assert!(matches!(
            assemble_line_operator(&[1.0, -1.0, 1.0, 1.0], &[1.0; 4], 1.0, 1.0, Scales::UNIT),
            Err(AssemblyError::BadCoefficient {
                field: "a",
                index: 1,
                ..
            })
        ));
        assert!(matches!(
            Scales::large_diffusion(10.0, 0.7),
            Err(AssemblyError::BadScale { .. })
        ));
        assert!(matches!(
            Scales::reaction(10.0, 0.2),
            Err(AssemblyError::BadScale { .. })
        ));
    }

    #[test]
    fn cross_section_operator_is_symmetric() {
        let m = presets::shear_flow();
        let l = ShearDiscretization::new(&m, 32)
            .unwrap()
            .assemble(0.7, Scales::UNIT)
            .unwrap();
        assert!(l.symmetric);
        assert_eq!(l.asymmetry(), 0.0);
    }

    #[test]
    fn cellular_flow_generator_is_doubly_stochastic() {
        let cell = presets::cellular(true);
        let disc = CellDiscretization::new(&cell, 16, 16).unwrap();
        let l = disc
            .assemble(0.9, Scales::large_diffusion(10.0, 0.5).unwrap())
            .unwrap();
        let rows = l.row_sums();
        let cols = l.column_sums();
        for (r, c) in rows.iter().zip(&cols) {
            assert!((r - c).abs() < 1e-9 * l.norm_inf());
        }
        assert!(l.min_off_diagonal() >= 0.0);
    }

    #[test]
    fn coordinate_dump_lists_every_entry() {
        let l = assemble_line_operator(&[1.0; 4], &[1.0; 4], 1.0, 1.0, Scales::UNIT).unwrap();
        let text = l.to_coordinate_text();
        assert_eq!(text.lines().count(), l.nnz());
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1], "0");
    }

    #[test]
    fn cross_diffusion_is_refused() {
        let mut cell = presets::cellular(false);
        cell.a12 = Some(crate::medium::CoefficientField::constant_cell([1.0, 1.0], 0.1).unwrap());
        assert_eq!(
            CellDiscretization::new(&cell, 8, 8).unwrap_err(),
            AssemblyError::UnsupportedCrossDiffusion
        );
    }
}
