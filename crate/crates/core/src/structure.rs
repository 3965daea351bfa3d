//! Zero-block patterns of precision matrices.
//!
//! Block roles follow the usual labelling: `A_k` on the diagonal, `B_k` on the
//! super-diagonal, `D_k` in the last block column (CM_L form) or the first
//! block row (CM_F form, where `(0, j)` for `j >= 2` is `D_j`).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{ConditioningSide, Tolerance};
use crate::linalg::BlockMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    Tridiagonal,
    CyclicTridiagonal,
    CmL,
    CmF,
    /// CM_L form with `D_{k1+1} = ... = D_{N-2} = 0`.
    CmLWithCmFTail(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Last block index `N`.
    pub last: usize,
}

impl PatternSpec {
    pub fn new(kind: PatternKind, last: usize) -> Self {
        Self { kind, last }
    }

    pub fn cmc(side: ConditioningSide, last: usize) -> Self {
        let kind = match side {
            ConditioningSide::First => PatternKind::CmF,
            ConditioningSide::Last => PatternKind::CmL,
        };
        Self { kind, last }
    }

    /// Whether block `(i, j)` may be nonzero.
    pub fn allows(&self, i: usize, j: usize) -> bool {
        let n = self.last;
        let band = i.abs_diff(j) <= 1;
        match self.kind {
            PatternKind::Tridiagonal => band,
            PatternKind::CyclicTridiagonal => band || (i.min(j) == 0 && i.max(j) == n),
            PatternKind::CmL => band || i == n || j == n,
            PatternKind::CmF => band || i == 0 || j == 0,
            PatternKind::CmLWithCmFTail(k1) => {
                if band {
                    return true;
                }
                if i != n && j != n {
                    return false;
                }
                let other = i.min(j);
                !(other > k1 && other + 2 <= n)
            }
        }
    }

    pub fn allowed_support(&self) -> BTreeSet<(usize, usize)> {
        let n = self.last;
        (0..=n)
            .flat_map(|i| (0..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.allows(i, j))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternWitness {
    pub conforms: bool,
    /// Off-pattern block with the largest norm, `None` when the pattern allows
    /// every block.
    pub worst_block: Option<(usize, usize)>,
    /// Norm of `worst_block` relative to the largest block norm of the matrix.
    pub worst_ratio: f64,
}

/// Checks that every off-pattern block is zero relative to the largest block
/// norm of `m`.
pub fn detect(m: &BlockMatrix, pattern: PatternSpec, tol: &Tolerance) -> Result<PatternWitness> {
    if pattern.last + 1 != m.n_blocks() {
        return Err(Error::Dimension(format!(
            "pattern expects {} blocks, matrix has {}",
            pattern.last + 1,
            m.n_blocks()
        )));
    }
    let scale = m.max_block_norm();
    let mut worst_block = None;
    let mut worst_ratio = 0.0f64;
    for i in 0..m.n_blocks() {
        for j in 0..m.n_blocks() {
            if pattern.allows(i, j) {
                continue;
            }
            let norm = m.block_norm(i, j);
            let ratio = if scale > 0.0 { norm / scale } else { 0.0 };
            if worst_block.is_none() || ratio > worst_ratio {
                worst_block = Some((i, j));
                worst_ratio = ratio;
            }
        }
    }
    Ok(PatternWitness {
        conforms: worst_ratio <= tol.zero_tol,
        worst_block,
        worst_ratio,
    })
}
