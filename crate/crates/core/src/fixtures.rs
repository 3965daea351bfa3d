//! Small hand-built laws used by tests, the CLI fixtures and the demo.

use crate::law::SequenceLaw;
use crate::linalg::{BlockMatrix, Mat};

fn scalar_precision(n_blocks: usize, diag: f64, entries: &[(usize, usize, f64)]) -> BlockMatrix {
    let mut m = Mat::identity(n_blocks, n_blocks) * diag;
    for &(i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    BlockMatrix::new(m, 1).expect("square scalar matrix")
}

/// Scalar `N = 3` cyclic tridiagonal precision: diagonal 2, band -0.5,
/// corner -0.3.
pub fn a_cyc() -> BlockMatrix {
    scalar_precision(4, 2.0, &[(0, 1, -0.5), (1, 2, -0.5), (2, 3, -0.5), (0, 3, -0.3)])
}

/// [`a_cyc`] plus a `(1, 3)` coupling of -0.2: CM_L but not CM_F.
pub fn a_cml() -> BlockMatrix {
    scalar_precision(
        4,
        2.0,
        &[(0, 1, -0.5), (1, 2, -0.5), (2, 3, -0.5), (0, 3, -0.3), (1, 3, -0.2)],
    )
}

pub fn a_cyc_law() -> SequenceLaw {
    SequenceLaw::from_precision(&a_cyc()).expect("diagonally dominant")
}

pub fn a_cml_law() -> SequenceLaw {
    SequenceLaw::from_precision(&a_cml()).expect("diagonally dominant")
}

/// Scalar `N = 4` tridiagonal precision with an extra `(1, 3)` coupling, so
/// the marginal of `x_0..x_3` is `[0,3]`-CM_L but not `[0,3]`-CM_F.
pub fn interior_coupling_law() -> SequenceLaw {
    let p = scalar_precision(
        5,
        2.0,
        &[(0, 1, -0.5), (1, 2, -0.5), (2, 3, -0.5), (3, 4, -0.5), (1, 3, -0.2)],
    );
    SequenceLaw::from_precision(&p).expect("diagonally dominant")
}
