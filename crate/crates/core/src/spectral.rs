//! Dense symmetric linear algebra.
//!
//! Everything here works on small-to-moderate dense matrices: a cyclic Jacobi
//! eigensolver with a deterministic ordering and sign convention, simultaneous
//! diagonalization of commuting symmetric pairs, commutation and eigenvector
//! tests, and a row-pivoted linear solver.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Default convergence tolerance for [`eigh`], relative to the Frobenius norm.
pub const DEFAULT_EIG_TOL: f64 = 1e-14;

/// Pivots below this multiple of `max|a|` are treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("expected a non-empty square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Jacobi iteration did not converge: off-diagonal norm {off:e} after {sweeps} sweeps")]
    NonConvergence { off: f64, sweeps: usize },
    #[error("matrices do not commute: defect {defect:e} exceeds tolerance {tol:e}")]
    NotCommuting { defect: f64, tol: f64 },
    #[error("zero vector has no eigen-direction")]
    ZeroVector,
    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },
}

/// A real symmetric matrix. Construction symmetrizes its input, so
/// `m[(i, j)] == m[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Wraps `m` after replacing it with `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self, SpectralError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(SpectralError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(Self(s))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self, SpectralError> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// `v vᵀ`.
    pub fn rank_one(v: &DVector<f64>) -> Self {
        Self(v * v.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `uᵀ m u` for an orthogonal `u`, re-symmetrized.
    pub fn conjugate(&self, u: &DMatrix<f64>) -> Self {
        Self::new(u.transpose() * &self.0 * u).expect("conjugation preserves shape")
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }
}

impl Deref for SymmetricMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Largest absolute entry; zero for an empty matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Orthogonal eigenbasis (columns of `u`) with eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub u: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.u * d * self.u.transpose()
    }

    /// `max|uᵀu − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.u)
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.u.column(k).into_owned()
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn leading(&self) -> (f64, DVector<f64>) {
        (self.eigenvalues[0], self.eigenvector(0))
    }

    /// Gap between the two largest eigenvalues. A 1x1 matrix has an infinite,
    /// unique gap.
    pub fn gap(&self, tol: f64) -> EigGap {
        if self.eigenvalues.len() < 2 {
            return EigGap {
                gap: f64::INFINITY,
                unique: true,
            };
        }
        let gap = (self.eigenvalues[0] - self.eigenvalues[1]).max(0.0);
        EigGap {
            gap,
            unique: gap > tol,
        }
    }
}

/// Separation of the largest eigenvalue from the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigGap {
    pub gap: f64,
    pub unique: bool,
}

pub fn orthogonality_defect(u: &DMatrix<f64>) -> f64 {
    let n = u.ncols();
    max_abs(&(u.transpose() * u - DMatrix::<f64>::identity(n, n)))
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    (2.0 * s).sqrt()
}

/// Flips `v` so that its largest-magnitude component is positive. Components
/// within a relative 1e-12 of the maximum count as tied; the lowest index wins.
pub fn canonical_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if peak == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= peak * (1.0 - 1e-12))
        .expect("peak component exists");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn canonicalize_columns(u: &mut DMatrix<f64>) {
    for k in 0..u.ncols() {
        let mut col: Vec<f64> = u.column(k).iter().copied().collect();
        canonical_sign(&mut col);
        u.column_mut(k).copy_from_slice(&col);
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius norm falls below
/// `tol · ‖m‖_F`. Eigenvalues come back sorted descending (ties keep their
/// original diagonal order) and every eigenvector has its largest-magnitude
/// component positive, so identical input gives bit-identical output.
pub fn eigh(m: &SymmetricMatrix, tol: f64) -> Result<SpectralDecomposition, SpectralError> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = frobenius(&a);

    if scale > 0.0 {
        let target = tol * scale;
        let rounds = round_robin(n);
        let mut rots = Vec::with_capacity(n / 2);
        let mut converged = false;
        for sweep in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            if off <= target {
                converged = true;
                break;
            }
            // Early sweeps only rotate the large entries.
            let threshold = if sweep < 3 {
                0.2 * off / (n * n) as f64
            } else {
                0.0
            };
            for round in &rounds {
                rots.clear();
                for &(p, q) in round {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    if sweep > 3 && apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                        continue;
                    }
                    if apq.abs() < threshold {
                        continue;
                    }
                    rots.push(Rotation::new(p, q, app, aqq, apq));
                }
                apply_round(&mut a, &mut v, &rots);
            }
        }
        if !converged {
            let off = off_diagonal_norm(&a);
            if off > target {
                return Err(SpectralError::NonConvergence {
                    off,
                    sweeps: MAX_SWEEPS,
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut u = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    canonicalize_columns(&mut u);
    Ok(SpectralDecomposition { u, eigenvalues })
}

/// Rounds of disjoint pairs `p < q` covering every pair once (circle
/// method), so the rotations inside a round commute.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + n % 2;
    let mut ring: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m.saturating_sub(1));
    for _ in 1..m {
        let round = (0..m / 2)
            .map(|i| (ring[i], ring[m - 1 - i]))
            .filter(|&(x, y)| x < n && y < n)
            .map(|(x, y)| (x.min(y), x.max(y)))
            .collect();
        rounds.push(round);
        ring[1..].rotate_right(1);
    }
    rounds
}

/// The Jacobi rotation that annihilates `a[(p, q)]`.
struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    app: f64,
    aqq: f64,
}

impl Rotation {
    fn new(p: usize, q: usize, app: f64, aqq: f64, apq: f64) -> Self {
        let theta = (aqq - app) / (2.0 * apq);
        let t = if theta.abs() > 1e150 {
            0.5 / theta
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        Self {
            p,
            q,
            c,
            s: t * c,
            app: app - t * apq,
            aqq: aqq + t * apq,
        }
    }
}

/// Below this size a round is too small to be worth splitting across threads.
const PARALLEL_MIN_DIM: usize = 96;

/// `a ← JᵀaJ` and `v ← vJ` for a round of disjoint rotations `J`. The row
/// half walks one column at a time so every access stays inside a column.
/// Every rotation owns its pair of columns, so the parallel split gives
/// bit-identical results.
fn apply_round(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, rots: &[Rotation]) {
    if rots.is_empty() {
        return;
    }
    let n = a.nrows();
    let rows = |col: &mut [f64]| {
        for r in rots {
            let (xp, xq) = (col[r.p], col[r.q]);
            col[r.p] = r.c * xp - r.s * xq;
            col[r.q] = r.s * xp + r.c * xq;
        }
    };
    if n >= PARALLEL_MIN_DIM {
        let mut pairs = column_pairs(a.as_mut_slice(), n, rots);
        pairs.extend(column_pairs(v.as_mut_slice(), n, rots));
        pairs
            .into_par_iter()
            .for_each(|(cp, cq, c, s)| rotate_pair(cp, cq, c, s));
        a.as_mut_slice().par_chunks_exact_mut(n).for_each(rows);
    } else {
        for r in rots {
            rotate_columns(a.as_mut_slice(), n, r.p, r.q, r.c, r.s);
            rotate_columns(v.as_mut_slice(), n, r.p, r.q, r.c, r.s);
        }
        a.as_mut_slice().chunks_exact_mut(n).for_each(rows);
    }
    for r in rots {
        a[(r.p, r.p)] = r.app;
        a[(r.q, r.q)] = r.aqq;
        a[(r.p, r.q)] = 0.0;
        a[(r.q, r.p)] = 0.0;
    }
}

type ColumnPair<'a> = (&'a mut [f64], &'a mut [f64], f64, f64);

fn column_pairs<'a>(data: &'a mut [f64], n: usize, rots: &[Rotation]) -> Vec<ColumnPair<'a>> {
    let mut cols: Vec<Option<&mut [f64]>> = data.chunks_exact_mut(n).map(Some).collect();
    rots.iter()
        .map(|r| {
            let cp = cols[r.p].take().expect("rotations in a round are disjoint");
            let cq = cols[r.q].take().expect("rotations in a round are disjoint");
            (cp, cq, r.c, r.s)
        })
        .collect()
}

fn rotate_pair(cp: &mut [f64], cq: &mut [f64], c: f64, s: f64) {
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// `(col_p, col_q) ← (c·col_p − s·col_q, s·col_p + c·col_q)`, `p < q`.
fn rotate_columns(data: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(q * n);
    rotate_pair(&mut head[p * n..(p + 1) * n], &mut tail[..n], c, s);
}

/// `‖ab − ba‖_max`.
pub fn commute_defect(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, SpectralError> {
    if a.shape() != b.shape() {
        return Err(SpectralError::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(max_abs(&(a * b - b * a)))
}

/// Scale-aware commuting tolerance `1e-9 · n · ‖b‖_max · ‖c‖_max`.
pub fn default_commute_tol(b: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    1e-9 * b.nrows() as f64 * max_abs(b) * max_abs(c)
}

/// Result of [`simultaneous_diagonalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousDiagonalization {
    pub u: DMatrix<f64>,
    pub diag_b: Vec<f64>,
    pub diag_c: Vec<f64>,
}

/// Relative threshold below which an eigenvalue of `c` is classed as zero.
pub const ZERO_EIG_REL: f64 = 1e-10;

/// Which part of the spectrum of `c` a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    Positive,
    Negative,
    Zero,
}

/// Classifies `value` against a zero band of half-width `zero_tol`.
pub fn mode_class(value: f64, zero_tol: f64) -> ModeClass {
    if value > zero_tol {
        ModeClass::Positive
    } else if value < -zero_tol {
        ModeClass::Negative
    } else {
        ModeClass::Zero
    }
}

/// Common orthogonal eigenbasis of two commuting symmetric matrices.
///
/// The columns are ordered by the spectrum of `c`: positive eigenvalues
/// first, then negative ones, then the zero block; within a class, by
/// descending eigenvalue of `c`.
pub fn simultaneous_diagonalize(
    b: &SymmetricMatrix,
    c: &SymmetricMatrix,
    tol: f64,
) -> Result<SimultaneousDiagonalization, SpectralError> {
    let defect = commute_defect(b, c)?;
    if defect > tol {
        return Err(SpectralError::NotCommuting { defect, tol });
    }
    let n = c.dim();
    let dc = eigh(c, DEFAULT_EIG_TOL)?;
    let c_scale = max_abs(c);
    let cluster_tol = 1e-8 * c_scale;

    // Within each (near-)degenerate eigenspace of c, diagonalize the
    // restriction of b.
    let mut u = dc.u.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (dc.eigenvalues[end - 1] - dc.eigenvalues[end]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let q = dc.u.columns(start, end - start).into_owned();
            let restricted = SymmetricMatrix::new(q.transpose() * b.as_matrix() * &q)?;
            let inner = eigh(&restricted, DEFAULT_EIG_TOL)?;
            let rotated = q * inner.u;
            u.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    let bt = u.transpose() * b.as_matrix() * &u;
    let ct = u.transpose() * c.as_matrix() * &u;
    let zero_tol = ZERO_EIG_REL * c_scale;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let ci = mode_class(ct[(i, i)], zero_tol);
        let cj = mode_class(ct[(j, j)], zero_tol);
        ci.cmp(&cj).then_with(|| {
            if ci == ModeClass::Zero {
                std::cmp::Ordering::Equal
            } else {
                ct[(j, j)]
                    .partial_cmp(&ct[(i, i)])
                    .unwrap_or(std::cmp::Ordering::Equal)
            }
        })
    });
    let mut u_sorted = DMatrix::from_fn(n, n, |r, k| u[(r, order[k])]);
    canonicalize_columns(&mut u_sorted);
    let diag_b = order.iter().map(|&i| bt[(i, i)]).collect();
    let diag_c = order.iter().map(|&i| ct[(i, i)]).collect();
    Ok(SimultaneousDiagonalization {
        u: u_sorted,
        diag_b,
        diag_c,
    })
}

/// Tests whether `v` is an eigenvector of `a`: returns the Rayleigh quotient
/// `alpha = vᵀav/‖v‖²` and whether `‖av − alpha·v‖ ≤ tol·‖v‖`.
pub fn is_eigenvector(
    a: &DMatrix<f64>,
    v: &DVector<f64>,
    tol: f64,
) -> Result<(bool, f64), SpectralError> {
    if a.ncols() != v.len() {
        return Err(SpectralError::DimensionMismatch {
            left: a.ncols(),
            right: v.len(),
        });
    }
    let norm_sq = v.norm_squared();
    if norm_sq == 0.0 {
        return Err(SpectralError::ZeroVector);
    }
    let av = a * v;
    let alpha = v.dot(&av) / norm_sq;
    let residual = (av - v * alpha).norm();
    Ok((residual <= tol * norm_sq.sqrt(), alpha))
}

/// Solves `a · x = rhs` by Gaussian elimination with row pivoting.
pub fn solve_linear(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, SpectralError> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(SpectralError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if rhs.nrows() != n {
        return Err(SpectralError::DimensionMismatch {
            left: n,
            right: rhs.nrows(),
        });
    }
    let floor = SINGULAR_PIVOT * max_abs(a);
    let mut lu = a.clone();
    let mut x = rhs.clone();
    let m = x.ncols();

    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, lu[(r, col)]))
            .max_by(|x, y| {
                x.1.abs()
                    .partial_cmp(&y.1.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if !(pivot.abs() > floor) {
            return Err(SpectralError::Singular { column: col, pivot });
        }
        if pivot_row != col {
            lu.swap_rows(pivot_row, col);
            x.swap_rows(pivot_row, col);
        }
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[(r, col)] = 0.0;
            for k in (col + 1)..n {
                lu[(r, k)] -= factor * lu[(col, k)];
            }
            for k in 0..m {
                x[(r, k)] -= factor * x[(col, k)];
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[(col, col)];
        for k in 0..m {
            let mut acc = x[(col, k)];
            for j in (col + 1)..n {
                acc -= lu[(col, j)] * x[(j, k)];
            }
            x[(col, k)] = acc / pivot;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
        let n = rows.len();
        SymmetricMatrix::from_fn(n, |i, j| rows[i][j]).unwrap()
    }

    #[test]
    fn large_eigh_is_accurate_and_thread_independent() {
        let n = 2 * PARALLEL_MIN_DIM + 1;
        let mut x = 7u64;
        let mut next = || {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let raw = DMatrix::from_fn(n, n, |_, _| next());
        let m = SymmetricMatrix::new((&raw + raw.transpose()) * 0.5).unwrap();
        let dec = eigh(&m, DEFAULT_EIG_TOL).unwrap();
        assert!(max_abs(&(dec.reconstruct() - m.as_matrix())) < 1e-12);
        assert!(orthogonality_defect(&dec.u) < 1e-12);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let quad = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let one = single.install(|| eigh(&m, DEFAULT_EIG_TOL).unwrap());
        let four = quad.install(|| eigh(&m, DEFAULT_EIG_TOL).unwrap());
        assert_eq!(one.eigenvalues, four.eigenvalues);
        assert_eq!(one.u, four.u);
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymmetricMatrix::new(m).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
        assert!(SymmetricMatrix::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymmetricMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn eigh_identity() {
        let d = eigh(&SymmetricMatrix::identity(3), 1e-14).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_eq!(d.u, DMatrix::identity(3, 3));
    }

    #[test]
    fn eigh_diagonal() {
        let d = eigh(&SymmetricMatrix::from_diagonal(&[2.0, -1.0]), 1e-14).unwrap();
        assert_eq!(d.eigenvalues, vec![2.0, -1.0]);
        assert_eq!(d.u, DMatrix::identity(2, 2));
        // Reversed input gets permuted into descending order.
        let d = eigh(&SymmetricMatrix::from_diagonal(&[-1.0, 2.0]), 1e-14).unwrap();
        assert_eq!(d.eigenvalues, vec![2.0, -1.0]);
        assert_eq!(d.eigenvector(0), DVector::from_vec(vec![0.0, 1.0]));
    }

    #[test]
    fn eigh_rank_one() {
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let d = eigh(&SymmetricMatrix::rank_one(&v), 1e-14).unwrap();
        assert!((d.eigenvalues[0] - 25.0).abs() < 1e-12);
        assert!(d.eigenvalues[1].abs() < 1e-12);
        let lead = d.eigenvector(0);
        assert!((lead[0] - 0.6).abs() < 1e-12 && (lead[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gap_flags_degenerate_top() {
        let d = eigh(&SymmetricMatrix::identity(4), 1e-14).unwrap();
        assert!(!d.gap(1e-9).unique);
        let d = eigh(&SymmetricMatrix::from_diagonal(&[3.0, 1.0]), 1e-14).unwrap();
        let g = d.gap(1e-9);
        assert!(g.unique && (g.gap - 2.0).abs() < 1e-15);
    }

    #[test]
    fn simultaneous_both_diagonal() {
        let b = SymmetricMatrix::identity(2);
        let c = SymmetricMatrix::from_diagonal(&[1.0, -4.0]);
        let sd = simultaneous_diagonalize(&b, &c, 1e-12).unwrap();
        assert_eq!(sd.u, DMatrix::identity(2, 2));
        assert_eq!(sd.diag_b, vec![1.0, 1.0]);
        assert_eq!(sd.diag_c, vec![1.0, -4.0]);
    }

    #[test]
    fn simultaneous_zero_b() {
        let b = SymmetricMatrix::zeros(3);
        let c = sym(&[&[2.0, 1.0, 0.0], &[1.0, -1.0, 0.5], &[0.0, 0.5, 0.0]]);
        let sd = simultaneous_diagonalize(&b, &c, 1e-12).unwrap();
        assert_eq!(sd.diag_b, vec![0.0; 3]);
        let ct = sd.u.transpose() * c.as_matrix() * &sd.u;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(ct[(i, j)].abs() < 1e-12);
                }
            }
        }
        // ordering: positive, then negative, then zero
        let classes: Vec<_> = sd.diag_c.iter().map(|&x| mode_class(x, 1e-10)).collect();
        let mut sorted = classes.clone();
        sorted.sort();
        assert_eq!(classes, sorted);
    }

    #[test]
    fn simultaneous_shared_rank_one() {
        let v = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let b = SymmetricMatrix::rank_one(&v);
        let c = b.scale(2.0);
        let sd = simultaneous_diagonalize(&b, &c, 1e-12).unwrap();
        let bt = sd.u.transpose() * b.as_matrix() * &sd.u;
        let ct = sd.u.transpose() * c.as_matrix() * &sd.u;
        assert!(bt[(0, 1)].abs() < 1e-10 && bt[(1, 0)].abs() < 1e-10);
        assert!(ct[(0, 1)].abs() < 1e-10 && ct[(1, 0)].abs() < 1e-10);
        assert!((sd.diag_b[0] - 1.0).abs() < 1e-12 && sd.diag_b[1].abs() < 1e-12);
        assert!((sd.diag_c[0] - 2.0).abs() < 1e-12 && sd.diag_c[1].abs() < 1e-12);
        let col = sd.u.column(0);
        assert!((col[0] - v[0]).abs() < 1e-12 && (col[1] - v[1]).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_splits_degenerate_c_block() {
        // c is degenerate on the whole space; b decides the basis.
        let b = sym(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let c = SymmetricMatrix::identity(2).scale(-3.0);
        let sd = simultaneous_diagonalize(&b, &c, 1e-12).unwrap();
        let bt = sd.u.transpose() * b.as_matrix() * &sd.u;
        assert!(bt[(0, 1)].abs() < 1e-12);
        assert!((sd.diag_b[0] - 3.0).abs() < 1e-12 && (sd.diag_b[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_rejects_non_commuting() {
        let b = sym(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let c = sym(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(
            simultaneous_diagonalize(&b, &c, 1e-9),
            Err(SpectralError::NotCommuting { .. })
        ));
    }

    #[test]
    fn commute_defect_examples() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let m = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(commute_defect(&i3, &m).unwrap(), 0.0);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(commute_defect(&a, &b).unwrap(), 0.0);
        assert!(matches!(
            commute_defect(&a, &i3),
            Err(SpectralError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn commute_defect_eigenvector_construction() {
        // W = alpha v vᵀ + Q with Q acting on the complement of v.
        let v = DVector::from_vec(vec![1.0, 2.0, 2.0]) / 3.0;
        let p = DMatrix::<f64>::identity(3, 3) - &v * v.transpose();
        let r = DMatrix::from_row_slice(3, 3, &[0.3, -0.1, 0.7, -0.1, 1.2, 0.4, 0.7, 0.4, -0.5]);
        let w = &v * v.transpose() * 1.7 + &p * r * &p;
        let vvt = &v * v.transpose();
        assert!(commute_defect(&vvt, &w).unwrap() < 1e-12);
    }

    #[test]
    fn is_eigenvector_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let v = DVector::from_vec(vec![0.3, -2.0]);
        let (yes, alpha) = is_eigenvector(&i2, &v, 1e-12).unwrap();
        assert!(yes && (alpha - 1.0).abs() < 1e-15);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let (yes, alpha) = is_eigenvector(&d, &DVector::from_vec(vec![1.0, 1.0]), 1e-6).unwrap();
        assert!(!yes && (alpha - 1.5).abs() < 1e-15);

        let u = DVector::from_vec(vec![3.0, 4.0]);
        let h = &u * u.transpose();
        let (yes, alpha) = is_eigenvector(&h, &u, 1e-12).unwrap();
        assert!(yes && (alpha - 25.0).abs() < 1e-12);

        assert_eq!(
            is_eigenvector(&i2, &DVector::zeros(2), 1e-6),
            Err(SpectralError::ZeroVector)
        );
    }

    #[test]
    fn solve_examples() {
        let rhs = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(solve_linear(&DMatrix::identity(2, 2), &rhs).unwrap(), rhs);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = solve_linear(&a, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            x,
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]))
        );

        // 1-D rational mode at t = 0.5: Y = 1 - t·δ = 0.5, -Z = δ = 1.
        let y = DMatrix::from_element(1, 1, 0.5);
        let x = solve_linear(&y, &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(x[(0, 0)], 2.0);
    }

    #[test]
    fn solve_reports_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            solve_linear(&a, &DMatrix::identity(2, 2)),
            Err(SpectralError::Singular { .. })
        ));
        assert!(matches!(
            solve_linear(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)),
            Err(SpectralError::Singular { .. })
        ));
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = DMatrix::from_row_slice(2, 2, &[1e-20, 1.0, 1.0, 1.0]);
        let rhs = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let x = solve_linear(&a, &rhs).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12 && (x[(1, 0)] - 1.0).abs() < 1e-12);
    }

    fn symmetric_strategy(max_n: usize) -> impl Strategy<Value = SymmetricMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(-1.0f64..1.0, n * n)
                .prop_map(move |data| SymmetricMatrix::new(DMatrix::from_vec(n, n, data)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn eigh_reconstructs_and_is_orthogonal(m in symmetric_strategy(12)) {
            let d = eigh(&m, DEFAULT_EIG_TOL).unwrap();
            prop_assert!(d.orthogonality_defect() < 1e-10);
            prop_assert!(max_abs(&(d.reconstruct() - m.as_matrix())) < 1e-8);
            prop_assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let again = eigh(&m, DEFAULT_EIG_TOL).unwrap();
            prop_assert_eq!(d, again);
        }

        #[test]
        fn solve_reproduces_rhs(m in symmetric_strategy(8), shift in 2.0f64..5.0) {
            let n = m.dim();
            // Diagonal shift keeps the system well conditioned.
            let a = m.as_matrix() + DMatrix::<f64>::identity(n, n) * (shift * n as f64);
            let rhs = DMatrix::from_fn(n, 2, |i, j| (i as f64 + 1.0) * if j == 0 { 1.0 } else { -0.5 });
            let x = solve_linear(&a, &rhs).unwrap();
            prop_assert!(max_abs(&(&a * x - &rhs)) < 1e-10 * max_abs(&rhs));
        }
    }
}
