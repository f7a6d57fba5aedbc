//! Dense symmetric matrices of small dimension with a cyclic Jacobi
//! eigenvalue solver, adjugate, and spectral-gap helpers.
//!
//! Everything here targets desk-scale Hessians (dimension at most 6-ish).
//! Clarity and determinism win over throughput: the Jacobi sweeps and the
//! cofactor expansions are exact-arithmetic-shaped, with no pivot heuristics
//! that could reorder results between runs.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative off-diagonal mass at which Jacobi sweeps stop.
const JACOBI_REL_TOL: f64 = 1e-13;

/// Sweep budget factor: the iteration aborts after `30 * dim * dim` sweeps.
const JACOBI_SWEEP_FACTOR: usize = 30;

/// Symmetric matrix stored dense row-major. Symmetrized at construction, so
/// `get(i, j) == get(j, i)` holds exactly for every instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Eigenvalues in ascending order plus the accumulated rotation basis.
/// Column `j` of `basis` is the eigenvector for `eigenvalues[j]`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    dim: usize,
    basis: Vec<f64>,
}

impl SymMatrix {
    /// Builds from full rows, averaging `a[i][j]` and `a[j][i]`. Rejects
    /// ragged input and non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let v = 0.5 * (rows[i][j] + rows[j][i]);
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite matrix entry at ({i}, {j})"
                    )));
                }
                data[i * dim + j] = v;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Builds from an entry generator; `f(i, j)` and `f(j, i)` are averaged.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| f(i, j)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        Self::from_fn(dim, |i, j| if i == j { entries[i] } else { 0.0 })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        SymMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec()).collect()
    }

    /// Entrywise difference; the result stays exactly symmetric.
    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(SymMatrix { dim: self.dim, data })
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|a| a * factor).collect() }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Cyclic Jacobi sweeps until the off-diagonal Hilbert-Schmidt mass drops
    /// below `1e-13 * hs_norm(A)`. Errors if `30 * dim^2` sweeps are not
    /// enough, which for finite symmetric input indicates a logic bug rather
    /// than a hard matrix.
    pub fn jacobi_eigen(&self) -> Result<EigenDecomposition> {
        let d = self.dim;
        let mut w = self.data.clone();
        let mut basis = SymMatrix::identity(d).data;
        let tol = JACOBI_REL_TOL * self.hs_norm();
        let max_sweeps = JACOBI_SWEEP_FACTOR * d * d;

        let off = |w: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s += w[i * d + j] * w[i * d + j];
                    }
                }
            }
            s.sqrt()
        };

        let mut converged = off(&w) <= tol;
        let mut sweeps = 0;
        while !converged {
            if sweeps >= max_sweeps {
                return Err(Error::EigenNonConvergence { sweeps });
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = w[p * d + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (w[q * d + q] - w[p * d + p]) / (2.0 * apq);
                    let t = if theta.is_finite() {
                        theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                    } else {
                        // theta overflowed: the rotation angle is ~1/(2 theta) ~ 0.
                        0.0
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    let wpp = w[p * d + p];
                    let wqq = w[q * d + q];
                    w[p * d + p] = c * c * wpp - 2.0 * s * c * apq + s * s * wqq;
                    w[q * d + q] = s * s * wpp + 2.0 * s * c * apq + c * c * wqq;
                    w[p * d + q] = 0.0;
                    w[q * d + p] = 0.0;
                    for i in 0..d {
                        if i != p && i != q {
                            let wip = w[i * d + p];
                            let wiq = w[i * d + q];
                            w[i * d + p] = c * wip - s * wiq;
                            w[p * d + i] = w[i * d + p];
                            w[i * d + q] = s * wip + c * wiq;
                            w[q * d + i] = w[i * d + q];
                        }
                    }
                    for i in 0..d {
                        let bip = basis[i * d + p];
                        let biq = basis[i * d + q];
                        basis[i * d + p] = c * bip - s * biq;
                        basis[i * d + q] = s * bip + c * biq;
                    }
                }
            }
            sweeps += 1;
            converged = off(&w) <= tol;
        }

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| w[a * d + a].total_cmp(&w[b * d + b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&j| w[j * d + j]).collect();
        let mut sorted_basis = vec![0.0; d * d];
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..d {
                sorted_basis[i * d + new_col] = basis[i * d + old_col];
            }
        }
        Ok(EigenDecomposition { eigenvalues, dim: d, basis: sorted_basis })
    }

    /// Determinant as the product of Jacobi eigenvalues. Sign is preserved.
    pub fn determinant(&self) -> Result<f64> {
        Ok(self.jacobi_eigen()?.eigenvalues.iter().product())
    }

    /// Adjugate via cofactor expansion, so `A * adj(A) = det(A) * I` holds
    /// without ever inverting. The symmetric input keeps the result symmetric.
    pub fn adjugate(&self) -> SymMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                // adj(A)[i][j] is the (j, i) cofactor.
                data[i * d + j] = sign * det_dense(&minor(self, j, i));
            }
        }
        SymMatrix { dim: d, data }
    }

    /// True when the largest eigenvalue sits strictly below `-tol`.
    pub fn is_negative_definite(&self, tol: f64) -> Result<bool> {
        let eig = self.jacobi_eigen()?;
        Ok(*eig.eigenvalues.last().expect("dim >= 1") < -tol)
    }
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` of the basis matrix: component `i` of eigenvector `j`.
    pub fn basis_get(&self, i: usize, j: usize) -> f64 {
        self.basis[i * self.dim + j]
    }

    /// `basis^T basis`, which should be the identity to solver precision.
    pub fn basis_gram(&self) -> SymMatrix {
        let d = self.dim;
        SymMatrix::from_fn(d, |i, j| {
            (0..d).map(|r| self.basis_get(r, i) * self.basis_get(r, j)).sum()
        })
        .expect("gram entries are finite")
    }

    /// `basis * diag(eigenvalues) * basis^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        SymMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|r| self.basis_get(i, r) * self.eigenvalues[r] * self.basis_get(j, r))
                .sum()
        })
        .expect("reconstruction entries are finite")
    }
}

/// Largest pairwise eigenvalue gap between the sorted spectra, together with
/// the Hilbert-Schmidt norm of `A - B` that bounds it (Weyl perturbation
/// inequality): `gap <= bound + 1e-9` for any symmetric pair.
pub fn weyl_gap(a: &SymMatrix, b: &SymMatrix) -> Result<(f64, f64)> {
    let ea = a.jacobi_eigen()?;
    let eb = b.jacobi_eigen()?;
    let gap = ea
        .eigenvalues
        .iter()
        .zip(&eb.eigenvalues)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let bound = a.sub(b)?.hs_norm();
    Ok((gap, bound))
}

/// Minor of `a` with row `i` and column `j` removed, as dense rows.
fn minor(a: &SymMatrix, i: usize, j: usize) -> Vec<Vec<f64>> {
    let d = a.dim;
    let mut rows = Vec::with_capacity(d - 1);
    for r in 0..d {
        if r == i {
            continue;
        }
        let mut row = Vec::with_capacity(d - 1);
        for c in 0..d {
            if c == j {
                continue;
            }
            row.push(a.get(r, c));
        }
        rows.push(row);
    }
    rows
}

/// Determinant of a small dense (not necessarily symmetric) matrix by
/// cofactor expansion. Used for minors and for hot grid scans where the
/// Jacobi route would be overkill; the empty matrix has determinant 1.
pub(crate) fn det_dense(rows: &[Vec<f64>]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
        }
        n => {
            let mut total = 0.0;
            for c in 0..n {
                if rows[0][c] == 0.0 {
                    continue;
                }
                let sub: Vec<Vec<f64>> = rows[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != c)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * rows[0][c] * det_dense(&sub);
            }
            total
        }
    }
}

/// Determinant of a symmetric matrix by direct cofactor expansion. Same value
/// as [`SymMatrix::determinant`] up to rounding, but cheap enough for dense
/// grid scans.
pub(crate) fn det_cofactor(a: &SymMatrix) -> f64 {
    det_dense(&a.rows())
}
