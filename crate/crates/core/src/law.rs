use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, invert_spd_blocks, symmetrize_checked, BlockMatrix, Mat};

/// Zero-mean nonsingular Gaussian law of the stacked sequence `[x_0; ...; x_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLaw {
    cov: BlockMatrix,
}

impl SequenceLaw {
    /// Validates symmetry (symmetrizing round-off) and positive definiteness.
    pub fn new(cov: BlockMatrix) -> Result<Self> {
        let d = cov.block_dim();
        let sym = symmetrize_checked(cov.data())?;
        cholesky(&sym)?;
        Ok(Self {
            cov: BlockMatrix::new(sym, d)?,
        })
    }

    pub fn from_matrix(cov: Mat, block_dim: usize) -> Result<Self> {
        Self::new(BlockMatrix::new(cov, block_dim)?)
    }

    /// Law whose precision matrix is `precision`.
    pub fn from_precision(precision: &BlockMatrix) -> Result<Self> {
        Self::new(invert_spd_blocks(precision)?)
    }

    pub fn white(n_blocks: usize, block_dim: usize) -> Self {
        Self {
            cov: BlockMatrix::identity(n_blocks, block_dim),
        }
    }

    /// Stationary scalar AR(1) law with unit variance, `C_ij = a^|i-j|`.
    pub fn ar1(coefficient: f64, last: usize) -> Result<Self> {
        if coefficient.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "AR(1) coefficient {coefficient} must satisfy |a| < 1"
            )));
        }
        let n = last + 1;
        let cov = Mat::from_fn(n, n, |i, j| coefficient.powi(i.abs_diff(j) as i32));
        Self::from_matrix(cov, 1)
    }

    pub fn covariance(&self) -> &BlockMatrix {
        &self.cov
    }

    pub fn precision(&self) -> Result<BlockMatrix> {
        invert_spd_blocks(&self.cov)
    }

    /// Last time index `N`.
    pub fn last(&self) -> usize {
        self.cov.last()
    }

    pub fn dim(&self) -> usize {
        self.cov.block_dim()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.cov.scaled(alpha))
    }

    /// Law of `[T x_0; ...; T x_N]` for a fixed invertible `T`.
    pub fn transformed(&self, t: &Mat) -> Result<Self> {
        let d = self.dim();
        if t.shape() != (d, d) {
            return Err(Error::Dimension(format!("transform must be {d}x{d}")));
        }
        let n = self.cov.n_blocks();
        let big = BlockMatrix::from_fn(n, d, |i, j| if i == j { t.clone() } else { Mat::zeros(d, d) });
        let cov = big.data() * self.cov.data() * big.data().transpose();
        Self::from_matrix(cov, d)
    }

    /// Law of the time-reversed sequence `y_k = x_{N-k}`.
    pub fn reversed(&self) -> Self {
        Self {
            cov: self.cov.reversed(),
        }
    }
}

/// Closed index interval `[lo, hi]` with `0 <= lo < hi <= N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexInterval {
    pub lo: usize,
    pub hi: usize,
}

impl IndexInterval {
    pub fn new(lo: usize, hi: usize, last: usize) -> Result<Self> {
        if lo >= hi || hi > last {
            return Err(Error::InvalidInterval { lo, hi, last });
        }
        Ok(Self { lo, hi })
    }

    pub fn full(last: usize) -> Self {
        Self { lo: 0, hi: last }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }
}

/// Where the conditioning state sits in a CM interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditioningSide {
    /// `c` is the first index (CM_F).
    First,
    /// `c` is the last index (CM_L).
    Last,
}

impl ConditioningSide {
    pub fn index_in(self, interval: IndexInterval) -> usize {
        match self {
            ConditioningSide::First => interval.lo,
            ConditioningSide::Last => interval.hi,
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            ConditioningSide::First => ConditioningSide::Last,
            ConditioningSide::Last => ConditioningSide::First,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditioningSide::First => "first",
            ConditioningSide::Last => "last",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative threshold for declaring a block zero.
    pub zero_tol: f64,
    /// Relative threshold for equation residuals and partial covariances.
    pub residual_tol: f64,
}

impl Tolerance {
    pub fn new(zero_tol: f64, residual_tol: f64) -> Result<Self> {
        if !(zero_tol > 0.0 && residual_tol > 0.0) || !zero_tol.is_finite() || !residual_tol.is_finite() {
            return Err(Error::InvalidTolerance);
        }
        Ok(Self { zero_tol, residual_tol })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            zero_tol: 1e-9,
            residual_tol: 1e-8,
        }
    }
}
