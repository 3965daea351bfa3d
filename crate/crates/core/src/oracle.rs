//! Definition-level conditional-independence checks.
//!
//! For Gaussians, `F(x_k | x_S, x_D) = F(x_k | x_S)` holds iff the partial
//! covariance `Cov(x_k, x_D | x_S)` vanishes. Every check here sweeps those
//! partial covariances straight from the covariance matrix and never looks at
//! the precision pattern.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{ConditioningSide, IndexInterval, SequenceLaw, Tolerance};
use crate::linalg::{solve_spd, BlockMatrix, Mat};

/// Largest stacked dimension `(N+1)d` the oracle will sweep.
pub const MAX_ORACLE_DIM: usize = 16;

/// `Cov(x_a, x_b | x_s) = C_ab - C_as C_ss⁻¹ C_sb`; with `s` empty this is
/// the unconditional cross-covariance.
pub fn partial_covariance(c: &BlockMatrix, a: &[usize], b: &[usize], s: &[usize]) -> Result<Mat> {
    let overlaps = |x: &[usize], y: &[usize]| x.iter().any(|i| y.contains(i));
    if overlaps(a, b) || overlaps(a, s) || overlaps(b, s) {
        return Err(Error::InvalidArgument(
            "index sets of a partial covariance must be disjoint".into(),
        ));
    }
    let c_ab = c.gather(a, b)?;
    if s.is_empty() {
        return Ok(c_ab);
    }
    let c_as = c.gather(a, s)?;
    let c_ss = c.gather(s, s)?;
    let c_sb = c.gather(s, b)?;
    Ok(c_ab - c_as * solve_spd(&c_ss, &c_sb)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub holds: bool,
    /// Largest normalized partial-covariance norm found by the sweep.
    pub worst_residual: f64,
    /// Indices `(k, j)` or `(j, k, l)` of the worst query, if any query ran.
    pub worst_at: Vec<usize>,
}

struct Sweep<'a> {
    cov: &'a BlockMatrix,
    scale: f64,
    tol: f64,
    worst: f64,
    worst_at: Vec<usize>,
}

impl<'a> Sweep<'a> {
    fn new(law: &'a SequenceLaw, tol: &Tolerance) -> Result<Self> {
        let size = law.covariance().data().nrows();
        if size > MAX_ORACLE_DIM {
            return Err(Error::OracleTooLarge {
                size,
                cap: MAX_ORACLE_DIM,
            });
        }
        Ok(Self {
            cov: law.covariance(),
            scale: law.covariance().max_block_norm(),
            tol: tol.residual_tol,
            worst: 0.0,
            worst_at: Vec::new(),
        })
    }

    /// Records `‖Cov(x_target, x_dropped | x_kept)‖` unless `dropped` is empty.
    fn query(&mut self, target: usize, dropped: &[usize], kept: &[usize], at: &[usize]) -> Result<()> {
        if dropped.is_empty() {
            return Ok(());
        }
        let pc = partial_covariance(self.cov, &[target], dropped, kept)?;
        let r = pc.norm() / self.scale;
        if self.worst_at.is_empty() || r > self.worst {
            self.worst = r;
            self.worst_at = at.to_vec();
        }
        Ok(())
    }

    fn finish(self) -> OracleVerdict {
        OracleVerdict {
            holds: self.worst <= self.tol,
            worst_residual: self.worst,
            worst_at: self.worst_at,
        }
    }
}

fn check_interval(law: &SequenceLaw, interval: IndexInterval) -> Result<()> {
    IndexInterval::new(interval.lo, interval.hi, law.last()).map(|_| ())
}

/// `[k1,k2]`-CM_c through the past-conditioning form: for every `j < k` in the
/// interval, `x_k` is independent of `x_i, k1 <= i < j` given `(x_j, x_c)`.
pub fn oracle_cm_interval(
    law: &SequenceLaw,
    interval: IndexInterval,
    side: ConditioningSide,
    tol: &Tolerance,
) -> Result<OracleVerdict> {
    check_interval(law, interval)?;
    let c = side.index_in(interval);
    let mut sweep = Sweep::new(law, tol)?;
    for k in interval.lo..=interval.hi {
        if k == c {
            continue;
        }
        for j in interval.lo..k {
            let dropped: Vec<usize> = (interval.lo..j).filter(|&i| i != c).collect();
            let kept: Vec<usize> = if j == c { vec![j] } else { vec![j, c] };
            sweep.query(k, &dropped, &kept, &[k, j])?;
        }
    }
    Ok(sweep.finish())
}

/// `[k1,k2]`-CM_c through the future-conditioning form: for every `k < j` in
/// the interval, `x_k` is independent of `x_i, j < i <= k2` given `(x_j, x_c)`.
pub fn oracle_cm_interval_reverse(
    law: &SequenceLaw,
    interval: IndexInterval,
    side: ConditioningSide,
    tol: &Tolerance,
) -> Result<OracleVerdict> {
    check_interval(law, interval)?;
    let c = side.index_in(interval);
    let mut sweep = Sweep::new(law, tol)?;
    for k in interval.lo..=interval.hi {
        if k == c {
            continue;
        }
        for j in (k + 1)..=interval.hi {
            let dropped: Vec<usize> = (j + 1..=interval.hi).filter(|&i| i != c).collect();
            let kept: Vec<usize> = if j == c { vec![j] } else { vec![j, c] };
            sweep.query(k, &dropped, &kept, &[k, j])?;
        }
    }
    Ok(sweep.finish())
}

/// Reciprocity: for every `j < k < l`, `x_k` is independent of the outside
/// `{i < j} ∪ {i > l}` given `(x_j, x_l)`.
pub fn oracle_reciprocal(law: &SequenceLaw, tol: &Tolerance) -> Result<OracleVerdict> {
    let n = law.last();
    let mut sweep = Sweep::new(law, tol)?;
    for j in 0..=n {
        for k in (j + 1)..=n {
            for l in (k + 1)..=n {
                let dropped: Vec<usize> = (0..j).chain(l + 1..=n).collect();
                sweep.query(k, &dropped, &[j, l], &[j, k, l])?;
            }
        }
    }
    Ok(sweep.finish())
}

/// Markov property: for every `j < k`, `x_k` is independent of `x_i, i < j`
/// given `x_j`.
pub fn oracle_markov(law: &SequenceLaw, tol: &Tolerance) -> Result<OracleVerdict> {
    let n = law.last();
    let mut sweep = Sweep::new(law, tol)?;
    for k in 0..=n {
        for j in 0..k {
            let dropped: Vec<usize> = (0..j).collect();
            sweep.query(k, &dropped, &[j], &[k, j])?;
        }
    }
    Ok(sweep.finish())
}

/// Markov property in the future-conditioning form: for every `k < j`, `x_k`
/// is independent of `x_i, i > j` given `x_j`.
pub fn oracle_markov_reverse(law: &SequenceLaw, tol: &Tolerance) -> Result<OracleVerdict> {
    let n = law.last();
    let mut sweep = Sweep::new(law, tol)?;
    for k in 0..=n {
        for j in (k + 1)..=n {
            let dropped: Vec<usize> = (j + 1..=n).collect();
            sweep.query(k, &dropped, &[j], &[k, j])?;
        }
    }
    Ok(sweep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn partial_covariance_examples() {
        let id = BlockMatrix::identity(4, 1);
        assert_eq!(partial_covariance(&id, &[0], &[2, 3], &[1]).unwrap().norm(), 0.0);
        let ar = SequenceLaw::ar1(0.5, 2).unwrap();
        let pc = partial_covariance(ar.covariance(), &[0], &[2], &[1]).unwrap();
        assert!(pc[(0, 0)].abs() < 1e-15);
        let pc = partial_covariance(ar.covariance(), &[0], &[2], &[]).unwrap();
        assert_eq!(pc[(0, 0)], 0.25);
        assert!(partial_covariance(ar.covariance(), &[0], &[0], &[]).is_err());
    }

    #[test]
    fn white_noise_satisfies_everything() {
        let tol = Tolerance::default();
        let law = SequenceLaw::white(5, 2);
        assert!(oracle_markov(&law, &tol).unwrap().holds);
        assert!(oracle_reciprocal(&law, &tol).unwrap().holds);
        for side in [ConditioningSide::First, ConditioningSide::Last] {
            assert!(
                oracle_cm_interval(&law, IndexInterval::full(4), side, &tol)
                    .unwrap()
                    .holds
            );
            assert!(
                oracle_cm_interval(&law, IndexInterval::new(1, 3, 4).unwrap(), side, &tol)
                    .unwrap()
                    .holds
            );
        }
    }

    #[test]
    fn ar1_sweeps() {
        let tol = Tolerance::default();
        let law = SequenceLaw::ar1(0.5, 3).unwrap();
        assert!(oracle_markov(&law, &tol).unwrap().holds);
        assert!(
            oracle_cm_interval(&law, IndexInterval::full(3), ConditioningSide::Last, &tol)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn cyclic_fixture_is_reciprocal_not_markov() {
        let tol = Tolerance::default();
        let law = fixtures::a_cyc_law();
        assert!(oracle_reciprocal(&law, &tol).unwrap().holds);
        let m = oracle_markov(&law, &tol).unwrap();
        assert!(!m.holds);
        assert!(m.worst_residual > 1e-3);
    }

    #[test]
    fn cml_fixture_fails_cmf_and_reciprocity() {
        let tol = Tolerance::default();
        let law = fixtures::a_cml_law();
        let v = oracle_cm_interval(&law, IndexInterval::full(3), ConditioningSide::First, &tol).unwrap();
        assert!(!v.holds);
        assert_eq!(v.worst_at.len(), 2);
        assert!(
            oracle_cm_interval(&law, IndexInterval::full(3), ConditioningSide::Last, &tol)
                .unwrap()
                .holds
        );
        assert!(!oracle_reciprocal(&law, &tol).unwrap().holds);
    }

    #[test]
    fn refuses_large_problems() {
        let law = SequenceLaw::white(9, 2);
        assert!(matches!(
            oracle_markov(&law, &Tolerance::default()),
            Err(Error::OracleTooLarge { size: 18, cap: 16 })
        ));
    }
}
