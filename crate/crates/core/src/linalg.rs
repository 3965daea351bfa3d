//! Dense block matrices and the symmetric positive-definite toolkit shared by
//! every other module.
//!
//! A [`BlockMatrix`] stores an `(N+1)d × (N+1)d` matrix addressed by block
//! indices in `[0, N]`. Factorizations are plain lower Cholesky with a pivot
//! floor of `1e-12 × max diagonal`, so failures are reported with the index of
//! the first pivot that falls below it.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Relative pivot floor used by [`cholesky`].
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Relative asymmetry below which inputs are silently symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    n_blocks: usize,
    block_dim: usize,
    data: Mat,
}

impl BlockMatrix {
    pub fn new(data: Mat, block_dim: usize) -> Result<Self> {
        if block_dim == 0 {
            return Err(Error::Dimension("block dimension must be positive".into()));
        }
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() == 0 || !data.nrows().is_multiple_of(block_dim) {
            return Err(Error::Dimension(format!(
                "size {} is not a positive multiple of block dimension {}",
                data.nrows(),
                block_dim
            )));
        }
        Ok(Self {
            n_blocks: data.nrows() / block_dim,
            block_dim,
            data,
        })
    }

    pub fn zeros(n_blocks: usize, block_dim: usize) -> Self {
        let n = n_blocks * block_dim;
        Self {
            n_blocks,
            block_dim,
            data: Mat::zeros(n, n),
        }
    }

    pub fn identity(n_blocks: usize, block_dim: usize) -> Self {
        let n = n_blocks * block_dim;
        Self {
            n_blocks,
            block_dim,
            data: Mat::identity(n, n),
        }
    }

    /// Builds a matrix block by block.
    pub fn from_fn(n_blocks: usize, block_dim: usize, mut f: impl FnMut(usize, usize) -> Mat) -> Self {
        let mut m = Self::zeros(n_blocks, block_dim);
        for i in 0..n_blocks {
            for j in 0..n_blocks {
                let b = f(i, j);
                m.data
                    .view_mut((i * block_dim, j * block_dim), (block_dim, block_dim))
                    .copy_from(&b);
            }
        }
        m
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    /// Last time index `N = n_blocks - 1`.
    pub fn last(&self) -> usize {
        self.n_blocks - 1
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn into_inner(self) -> Mat {
        self.data
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_blocks || j >= self.n_blocks {
            return Err(Error::BlockIndex {
                row: i,
                col: j,
                n_blocks: self.n_blocks,
            });
        }
        Ok(())
    }

    /// Copy of block `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> Result<Mat> {
        self.check(i, j)?;
        let d = self.block_dim;
        Ok(self.data.view((i * d, j * d), (d, d)).into_owned())
    }

    pub fn set_block(&mut self, i: usize, j: usize, value: &Mat) -> Result<()> {
        self.check(i, j)?;
        let d = self.block_dim;
        if value.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "block must be {d}x{d}, got {}x{}",
                value.nrows(),
                value.ncols()
            )));
        }
        self.data.view_mut((i * d, j * d), (d, d)).copy_from(value);
        Ok(())
    }

    pub fn block_norm(&self, i: usize, j: usize) -> f64 {
        let d = self.block_dim;
        self.data.view((i * d, j * d), (d, d)).norm()
    }

    pub fn max_block_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n_blocks {
            for j in 0..self.n_blocks {
                best = best.max(self.block_norm(i, j));
            }
        }
        best
    }

    /// Gathers the blocks `rows × cols` into a dense matrix, in the given order.
    pub fn gather(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        let d = self.block_dim;
        let mut out = Mat::zeros(rows.len() * d, cols.len() * d);
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in cols.iter().enumerate() {
                self.check(i, j)?;
                out.view_mut((bi * d, bj * d), (d, d))
                    .copy_from(&self.data.view((i * d, j * d), (d, d)));
            }
        }
        Ok(out)
    }

    /// Principal block submatrix on `indices`.
    pub fn principal(&self, indices: &[usize]) -> Result<BlockMatrix> {
        let data = self.gather(indices, indices)?;
        BlockMatrix::new(data, self.block_dim)
    }

    /// Block-index reversal `k -> N - k`.
    pub fn reversed(&self) -> BlockMatrix {
        let n = self.last();
        BlockMatrix::from_fn(self.n_blocks, self.block_dim, |i, j| {
            self.block(n - i, n - j).expect("in range")
        })
    }

    pub fn scaled(&self, alpha: f64) -> BlockMatrix {
        BlockMatrix {
            n_blocks: self.n_blocks,
            block_dim: self.block_dim,
            data: &self.data * alpha,
        }
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Returns `(M + M')/2` when `M` is symmetric up to [`SYMMETRY_TOL`] relative
/// to its largest entry, and rejects it otherwise.
pub fn symmetrize_checked(m: &Mat) -> Result<Mat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m);
    let asym = max_abs(&(m - m.transpose()));
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: rel });
    }
    Ok(symmetrize(m))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor `L` with `M = L L'`. Only the lower triangle of `m`
/// is read.
pub fn cholesky(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, expected square",
            n,
            m.ncols()
        )));
    }
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(m[(i, i)]));
    let floor = PIVOT_FLOOR * max_diag;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !pivot.is_finite() || pivot <= floor {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// Solves `L L' X = B` given the lower factor.
pub fn cholesky_solve(l: &Mat, rhs: &Mat) -> Mat {
    let n = l.nrows();
    let mut x = rhs.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// `M⁻¹ B` for symmetric positive definite `M`.
pub fn solve_spd(m: &Mat, rhs: &Mat) -> Result<Mat> {
    let l = cholesky(m)?;
    Ok(cholesky_solve(&l, rhs))
}

/// Inverse of a symmetric positive definite matrix; the result is symmetrized.
pub fn invert_spd(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    let inv = solve_spd(m, &Mat::identity(n, n))?;
    Ok(symmetrize(&inv))
}

pub fn invert_spd_blocks(m: &BlockMatrix) -> Result<BlockMatrix> {
    BlockMatrix::new(invert_spd(m.data())?, m.block_dim())
}

/// Which side of the partition survives a Schur complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Keep {
    /// Keep blocks `[0, split]`, eliminating `[split+1, N]`.
    Leading,
    /// Keep blocks `[split, N]`, eliminating `[0, split-1]`.
    Trailing,
}

/// Schur complement of a symmetric positive definite block matrix.
///
/// `Leading` returns `A11 - A12 A22⁻¹ A12'` with `A11` on blocks `[0, split]`;
/// `Trailing` returns `A22 - A12' A11⁻¹ A12` with `A22` on blocks
/// `[split, N]`. When `A` is a precision matrix the result is the precision of
/// the kept subsequence. With `split = N` and `Leading` nothing is eliminated.
pub fn schur_complement(a: &BlockMatrix, split: usize, keep: Keep) -> Result<BlockMatrix> {
    let n = a.last();
    if split < 1 || split > n {
        return Err(Error::InvalidArgument(format!("split {split} must lie in [1, {n}]")));
    }
    let (kept, dropped): (Vec<usize>, Vec<usize>) = match keep {
        Keep::Leading => ((0..=split).collect(), (split + 1..=n).collect()),
        Keep::Trailing => ((split..=n).collect(), (0..split).collect()),
    };
    // Factorize the whole matrix first so a non-SPD input is always rejected.
    cholesky(a.data())?;
    let a_kk = a.gather(&kept, &kept)?;
    if dropped.is_empty() {
        return BlockMatrix::new(a_kk, a.block_dim());
    }
    let a_kd = a.gather(&kept, &dropped)?;
    let a_dd = a.gather(&dropped, &dropped)?;
    let correction = &a_kd * solve_spd(&a_dd, &a_kd.transpose())?;
    BlockMatrix::new(symmetrize(&(a_kk - correction)), a.block_dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    pub(crate) fn ar1_cov(a: f64, n_blocks: usize) -> Mat {
        Mat::from_fn(n_blocks, n_blocks, |i, j| a.powi((i as i32 - j as i32).abs()))
    }

    #[test]
    fn block_accessors() {
        let id = BlockMatrix::identity(4, 1);
        assert_eq!(id.block(0, 0).unwrap()[(0, 0)], 1.0);
        assert_eq!(id.block(0, 1).unwrap()[(0, 0)], 0.0);
        let c = BlockMatrix::new(ar1_cov(0.5, 4), 1).unwrap();
        assert_eq!(c.block(1, 3).unwrap()[(0, 0)], 0.25);
        assert!(matches!(c.block(4, 0), Err(Error::BlockIndex { .. })));
    }

    #[test]
    fn block_slices_follow_layout() {
        let m = Mat::from_fn(6, 6, |i, j| (10 * i + j) as f64);
        let b = BlockMatrix::new(m, 2).unwrap();
        assert_eq!(b.block(1, 2).unwrap(), dmatrix![24.0, 25.0; 34.0, 35.0]);
        let rebuilt = BlockMatrix::from_fn(3, 2, |i, j| b.block(i, j).unwrap());
        assert_eq!(rebuilt, b);
    }

    #[test]
    fn rejects_ragged_shapes() {
        assert!(BlockMatrix::new(Mat::zeros(5, 5), 2).is_err());
        assert!(BlockMatrix::new(Mat::zeros(4, 3), 1).is_err());
    }

    #[test]
    fn invert_simple_cases() {
        let i4 = Mat::identity(4, 4);
        assert_eq!(invert_spd(&i4).unwrap(), i4);
        let inv = invert_spd(&(&i4 * 2.0)).unwrap();
        assert!((inv - &i4 * 0.5).norm() < 1e-15);
    }

    #[test]
    fn ar1_precision_is_tridiagonal() {
        let a = 0.5;
        let inv = invert_spd(&ar1_cov(a, 4)).unwrap();
        let s = 1.0 / (1.0 - a * a);
        let expected = Mat::from_fn(4, 4, |i, j| match (i, j) {
            (0, 0) | (3, 3) => s,
            _ if i == j => (1.0 + a * a) * s,
            _ if i.abs_diff(j) == 1 => -a * s,
            _ => 0.0,
        });
        assert!((inv - expected).norm() < 1e-12);
    }

    #[test]
    fn not_positive_definite_reports_pivot() {
        let m = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 1.0; 0.0, 1.0, 1.0];
        assert_eq!(invert_spd(&m), Err(Error::NotPositiveDefinite { pivot: 2 }));
        let neg = dmatrix![-1.0, 0.0; 0.0, 1.0];
        assert_eq!(cholesky(&neg), Err(Error::NotPositiveDefinite { pivot: 0 }));
    }

    #[test]
    fn symmetrize_tolerates_roundoff_only() {
        let mut m = ar1_cov(0.5, 3);
        m[(0, 1)] += 1e-14;
        let s = symmetrize_checked(&m).unwrap();
        assert_eq!(s[(0, 1)], s[(1, 0)]);
        m[(0, 1)] += 1e-6;
        assert!(matches!(symmetrize_checked(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn schur_of_block_diagonal_and_identity() {
        let a = BlockMatrix::from_fn(3, 2, |i, j| {
            if i == j {
                Mat::identity(2, 2) * (i + 2) as f64
            } else {
                Mat::zeros(2, 2)
            }
        });
        let lead = schur_complement(&a, 1, Keep::Leading).unwrap();
        assert_eq!(lead, a.principal(&[0, 1]).unwrap());
        let id = BlockMatrix::identity(4, 1);
        for split in 1..=3 {
            assert_eq!(
                schur_complement(&id, split, Keep::Leading).unwrap(),
                BlockMatrix::identity(split + 1, 1)
            );
            assert_eq!(
                schur_complement(&id, split, Keep::Trailing).unwrap(),
                BlockMatrix::identity(4 - split, 1)
            );
        }
    }

    #[test]
    fn schur_matches_marginal_precision() {
        let c = ar1_cov(0.5, 4);
        let a = BlockMatrix::new(invert_spd(&c).unwrap(), 1).unwrap();
        let lead = schur_complement(&a, 2, Keep::Leading).unwrap();
        let marginal = invert_spd(&c.view((0, 0), (3, 3)).into_owned()).unwrap();
        assert!((lead.data() - marginal).norm() < 1e-12);
        let trail = schur_complement(&a, 1, Keep::Trailing).unwrap();
        let marginal = invert_spd(&c.view((1, 1), (3, 3)).into_owned()).unwrap();
        assert!((trail.data() - marginal).norm() < 1e-12);
    }

    #[test]
    fn schur_rejects_bad_split_and_indefinite_input() {
        let id = BlockMatrix::identity(3, 1);
        assert!(schur_complement(&id, 0, Keep::Leading).is_err());
        assert!(schur_complement(&id, 3, Keep::Trailing).is_err());
        let bad = BlockMatrix::new(-Mat::identity(3, 3), 1).unwrap();
        assert!(matches!(
            schur_complement(&bad, 1, Keep::Leading),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
