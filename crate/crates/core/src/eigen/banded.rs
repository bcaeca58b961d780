//! Direct solver for `σI − L` on a periodic grid.
//!
//! Away from the periodic wrap-around the matrix is banded. The band part is
//! factored without pivoting, which is stable because `σI − L` is a
//! nonsingular M-matrix whenever `σ` exceeds the principal eigenvalue, and the
//! wrap-around entries are added back as a low-rank Woodbury correction.

use crate::assembly::OperatorMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(
        "pivot {pivot:e} at row {row} is not positive; the shift does not dominate the spectrum"
    )]
    NonPositivePivot { row: usize, pivot: f64 },
    #[error("wrap-around correction is singular")]
    SingularCorrection,
}

/// Dense LU with partial pivoting for the small capacitance matrix.
#[derive(Debug, Clone)]
struct DenseLu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(n: usize, mut a: Vec<f64>) -> Result<Self, SolveError> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 || !a[p * n + k].is_finite() {
                return Err(SolveError::SingularCorrection);
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                a[i * n + k] = l;
                if l != 0.0 {
                    for c in k + 1..n {
                        a[i * n + c] -= l * a[k * n + c];
                    }
                }
            }
        }
        Ok(DenseLu { n, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.a[i * n..i * n + i];
            x[i] -= row.iter().zip(&x[..i]).map(|(a, v)| a * v).sum::<f64>();
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n + i + 1..(i + 1) * n];
            let acc = x[i] - row.iter().zip(&x[i + 1..]).map(|(a, v)| a * v).sum::<f64>();
            x[i] = acc / self.a[i * n + i];
        }
        x
    }
}

/// Factorization of `σI − L`.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    n: usize,
    p: usize,
    band: Vec<f64>,
    wrap_cols: Vec<usize>,
    /// `Z = B⁻¹W`, row-major `n × r`.
    z: Vec<f64>,
    capacitance: Option<DenseLu>,
    pub shift: f64,
}

impl ShiftedSolver {
    pub fn factor(matrix: &OperatorMatrix, shift: f64) -> Result<Self, SolveError> {
        let n = matrix.size();
        let p = matrix.bandwidth.min(n - 1);
        let w = 2 * p + 1;
        let mut band = vec![0.0; n * w];
        let mut wrap: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in matrix.entries() {
            let a = if i == j { shift - v } else { -v };
            if i.abs_diff(j) <= p {
                band[i * w + j + p - i] += a;
            } else {
                wrap.push((i, j, a));
            }
        }
        for k in 0..n {
            let piv = band[k * w + p];
            // NaN pivots fail here as well.
            if piv.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(SolveError::NonPositivePivot { row: k, pivot: piv });
            }
            let last = (k + p).min(n - 1);
            let (head, tail) = band.split_at_mut((k + 1) * w);
            let pivot_tail = &head[k * w + p + 1..k * w + p + 1 + (last - k)];
            for i in k + 1..=last {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let l = row[k + p - i] / piv;
                if l == 0.0 {
                    continue;
                }
                row[k + p - i] = l;
                let start = k + 1 + p - i;
                for (a, b) in row[start..start + (last - k)].iter_mut().zip(pivot_tail) {
                    *a -= l * b;
                }
            }
        }
        let mut solver = ShiftedSolver {
            n,
            p,
            band,
            wrap_cols: Vec::new(),
            z: Vec::new(),
            capacitance: None,
            shift,
        };
        if !wrap.is_empty() {
            wrap.sort_by_key(|&(i, j, _)| (j, i));
            let mut cols: Vec<usize> = wrap.iter().map(|&(_, j, _)| j).collect();
            cols.dedup();
            let r = cols.len();
            let mut z = vec![0.0; n * r];
            for (c, &col) in cols.iter().enumerate() {
                for &(i, j, a) in &wrap {
                    if j == col {
                        z[i * r + c] += a;
                    }
                }
            }
            solver.band_solve_rows(&mut z, r);
            let mut k = vec![0.0; r * r];
            for (a, &ca) in cols.iter().enumerate() {
                k[a * r..(a + 1) * r].copy_from_slice(&z[ca * r..(ca + 1) * r]);
                k[a * r + a] += 1.0;
            }
            solver.capacitance = Some(DenseLu::factor(r, k)?);
            solver.wrap_cols = cols;
            solver.z = z;
        }
        Ok(solver)
    }

    fn band_solve(&self, x: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        let w = 2 * p + 1;
        for i in 0..n {
            let start = i.saturating_sub(p);
            let lower = &self.band[i * w + start + p - i..i * w + p];
            let acc: f64 = lower.iter().zip(&x[start..i]).map(|(a, b)| a * b).sum();
            x[i] -= acc;
        }
        for i in (0..n).rev() {
            let end = (i + p).min(n - 1);
            let upper = &self.band[i * w + p + 1..i * w + p + 1 + (end - i)];
            let acc: f64 = upper.iter().zip(&x[i + 1..=end]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - acc) / self.band[i * w + p];
        }
    }

    /// Band solve for `r` right-hand sides stored row-major as an `n × r` block.
    fn band_solve_rows(&self, z: &mut [f64], r: usize) {
        let (n, p) = (self.n, self.p);
        let w = 2 * p + 1;
        for i in 0..n {
            let start = i.saturating_sub(p);
            let (done, rest) = z.split_at_mut(i * r);
            let zi = &mut rest[..r];
            for j in start..i {
                let l = self.band[i * w + j + p - i];
                if l != 0.0 {
                    for (a, b) in zi.iter_mut().zip(&done[j * r..(j + 1) * r]) {
                        *a -= l * b;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let end = (i + p).min(n - 1);
            let (head, later) = z.split_at_mut((i + 1) * r);
            let zi = &mut head[i * r..];
            for j in i + 1..=end {
                let u = self.band[i * w + j + p - i];
                if u != 0.0 {
                    for (a, b) in zi.iter_mut().zip(&later[(j - i - 1) * r..(j - i) * r]) {
                        *a -= u * b;
                    }
                }
            }
            let d = 1.0 / self.band[i * w + p];
            zi.iter_mut().for_each(|a| *a *= d);
        }
    }

    /// Overwrites `x` (holding the right-hand side) with `(σI − L)⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.band_solve(x);
        if let Some(cap) = &self.capacitance {
            let t: Vec<f64> = self.wrap_cols.iter().map(|&c| x[c]).collect();
            let s = cap.solve(&t);
            let r = s.len();
            for (xi, zi) in x.iter_mut().zip(self.z.chunks_exact(r)) {
                *xi -= zi.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{CellDiscretization, Scales};
    use crate::medium::presets;

    fn residual(m: &OperatorMatrix, shift: f64, x: &[f64], b: &[f64]) -> f64 {
        let lx = m.mul_vec(x);
        x.iter()
            .zip(&lx)
            .zip(b)
            .map(|((xi, li), bi)| (shift * xi - li - bi).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn solves_periodic_line_systems() {
        let m = crate::assembly::assemble_line_operator(
            &(0..12)
                .map(|i| 1.0 + 0.3 * (i as f64).sin())
                .collect::<Vec<_>>(),
            &[1.0; 12],
            1.0,
            0.8,
            Scales::UNIT,
        )
        .unwrap();
        let shift = m.row_sums().into_iter().fold(f64::MIN, f64::max) + 1.0;
        let solver = ShiftedSolver::factor(&m, shift).unwrap();
        let b: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let mut x = b.clone();
        solver.solve_in_place(&mut x);
        assert!(residual(&m, shift, &x, &b) < 1e-10);
        assert!(x.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn solves_periodic_cell_systems() {
        let disc = CellDiscretization::new(&presets::cellular(true), 8, 6).unwrap();
        let m = disc.assemble(1.3, Scales::UNIT).unwrap();
        let shift = m.row_sums().into_iter().fold(f64::MIN, f64::max) + 0.5;
        let solver = ShiftedSolver::factor(&m, shift).unwrap();
        let b: Vec<f64> = (0..48).map(|i| ((i * 7) % 5) as f64 + 0.5).collect();
        let mut x = b.clone();
        solver.solve_in_place(&mut x);
        assert!(residual(&m, shift, &x, &b) < 1e-9);
    }

    #[test]
    fn low_shift_is_detected() {
        let m =
            crate::assembly::assemble_line_operator(&[1.0; 8], &[1.0; 8], 1.0, 1.0, Scales::UNIT)
                .unwrap();
        assert!(ShiftedSolver::factor(&m, -1e6).is_err());
    }
}
