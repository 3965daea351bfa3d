//! Sequence-class verdicts from the zero-block pattern of the precision matrix.
//!
//! A nonsingular Gaussian sequence is CM_c iff `C⁻¹` has CM_c form, it is
//! `[0,k2]`- or `[k1,N]`-CM_c iff the corresponding Schur complement has CM_c
//! form, reciprocal iff `C⁻¹` is cyclic tridiagonal (equivalently CM_L and
//! CM_F), and Markov iff `C⁻¹` is tridiagonal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{ConditioningSide, IndexInterval, SequenceLaw, Tolerance};
use crate::linalg::{schur_complement, BlockMatrix, Keep};
use crate::structure::{detect, PatternKind, PatternSpec, PatternWitness};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub witness: PatternWitness,
}

impl From<PatternWitness> for Verdict {
    fn from(witness: PatternWitness) -> Self {
        Self {
            holds: witness.conforms,
            witness,
        }
    }
}

/// Reciprocity decided by the cyclic-tridiagonal pattern, with the CM_L ∧ CM_F
/// route alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReciprocalVerdict {
    pub holds: bool,
    pub witness: PatternWitness,
    pub via_cm_pair: bool,
}

impl ReciprocalVerdict {
    pub fn consistent(&self) -> bool {
        self.holds == self.via_cm_pair
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalVerdict {
    pub interval: IndexInterval,
    pub side: ConditioningSide,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    #[serde(rename = "N")]
    pub last: usize,
    #[serde(rename = "d")]
    pub dim: usize,
    pub markov: Verdict,
    pub reciprocal: Verdict,
    pub cm_l: Verdict,
    pub cm_f: Verdict,
    pub interval_cm: Vec<IntervalVerdict>,
    /// CM_L ∧ CM_F, the second reciprocity route.
    pub reciprocal_via_cm_pair: bool,
    pub composition_holds: bool,
    pub consistency: bool,
}

/// Classification state for one law: its precision and tolerances.
#[derive(Debug, Clone)]
pub struct Classifier {
    precision: BlockMatrix,
    tol: Tolerance,
}

impl Classifier {
    pub fn new(law: &SequenceLaw, tol: Tolerance) -> Result<Self> {
        Ok(Self {
            precision: law.precision()?,
            tol,
        })
    }

    pub fn precision(&self) -> &BlockMatrix {
        &self.precision
    }

    fn last(&self) -> usize {
        self.precision.last()
    }

    pub fn cmc(&self, side: ConditioningSide) -> Result<Verdict> {
        let pattern = PatternSpec::cmc(side, self.last());
        Ok(detect(&self.precision, pattern, &self.tol)?.into())
    }

    /// Boundary-anchored interval CM: `[0, k2]` with `1 <= k2 <= N-1` or
    /// `[k1, N]` with `1 <= k1 <= N-1`.
    pub fn cm_interval(&self, interval: IndexInterval, side: ConditioningSide) -> Result<Verdict> {
        let n = self.last();
        let IndexInterval { lo, hi } = IndexInterval::new(interval.lo, interval.hi, n)?;
        let marginal = if lo == 0 && (1..n).contains(&hi) {
            schur_complement(&self.precision, hi, Keep::Leading)?
        } else if hi == n && (1..n).contains(&lo) {
            schur_complement(&self.precision, lo, Keep::Trailing)?
        } else {
            return Err(Error::UnsupportedInterval { lo, hi, last: n });
        };
        let pattern = PatternSpec::cmc(side, marginal.last());
        Ok(detect(&marginal, pattern, &self.tol)?.into())
    }

    pub fn reciprocal(&self) -> Result<ReciprocalVerdict> {
        let pattern = PatternSpec::new(PatternKind::CyclicTridiagonal, self.last());
        let witness = detect(&self.precision, pattern, &self.tol)?;
        let via_cm_pair = self.cmc(ConditioningSide::First)?.holds && self.cmc(ConditioningSide::Last)?.holds;
        Ok(ReciprocalVerdict {
            holds: witness.conforms,
            witness,
            via_cm_pair,
        })
    }

    pub fn markov(&self) -> Result<Verdict> {
        let pattern = PatternSpec::new(PatternKind::Tridiagonal, self.last());
        Ok(detect(&self.precision, pattern, &self.tol)?.into())
    }

    /// The two interval compositions characterizing reciprocity:
    /// (i) `[k1,N]`-CM_F for all `k1` together with CM_L, and
    /// (ii) `[0,k2]`-CM_L for all `k2` together with CM_F.
    pub fn compositions(&self) -> Result<(bool, bool)> {
        let n = self.last();
        let cm_f = self.cmc(ConditioningSide::First)?.holds;
        let cm_l = self.cmc(ConditioningSide::Last)?.holds;
        let mut tails = cm_f && cm_l;
        let mut heads = cm_f && cm_l;
        for k in 1..n {
            tails &= self
                .cm_interval(IndexInterval { lo: k, hi: n }, ConditioningSide::First)?
                .holds;
            heads &= self
                .cm_interval(IndexInterval { lo: 0, hi: k }, ConditioningSide::Last)?
                .holds;
        }
        Ok((tails, heads))
    }

    pub fn verify_composition(&self) -> Result<bool> {
        let reciprocal = self.reciprocal()?.holds;
        let (tails, heads) = self.compositions()?;
        Ok(tails == reciprocal && heads == reciprocal)
    }

    /// Every boundary-anchored interval with both conditioning sides, in the
    /// order `[0,1] .. [0,N-1]` then `[1,N] .. [N-1,N]`.
    pub fn anchored_intervals(last: usize) -> Vec<IndexInterval> {
        let heads = (1..last).map(|k| IndexInterval { lo: 0, hi: k });
        let tails = (1..last).map(|k| IndexInterval { lo: k, hi: last });
        heads.chain(tails).collect()
    }

    pub fn report(&self) -> Result<ClassificationReport> {
        let n = self.last();
        let markov = self.markov()?;
        let rec = self.reciprocal()?;
        let cm_l = self.cmc(ConditioningSide::Last)?;
        let cm_f = self.cmc(ConditioningSide::First)?;
        let mut interval_cm = Vec::new();
        for interval in Self::anchored_intervals(n) {
            for side in [ConditioningSide::First, ConditioningSide::Last] {
                interval_cm.push(IntervalVerdict {
                    interval,
                    side,
                    verdict: self.cm_interval(interval, side)?,
                });
            }
        }
        let composition_holds = self.verify_composition()?;
        let lattice = (!markov.holds || rec.holds) && (!rec.holds || (cm_l.holds && cm_f.holds));
        let consistency = rec.consistent() && composition_holds && lattice;
        Ok(ClassificationReport {
            last: n,
            dim: self.precision.block_dim(),
            markov,
            reciprocal: Verdict {
                holds: rec.holds,
                witness: rec.witness,
            },
            cm_l,
            cm_f,
            interval_cm,
            reciprocal_via_cm_pair: rec.via_cm_pair,
            composition_holds,
            consistency,
        })
    }
}

pub fn classify_cmc(law: &SequenceLaw, side: ConditioningSide, tol: &Tolerance) -> Result<Verdict> {
    Classifier::new(law, *tol)?.cmc(side)
}

pub fn classify_cm_interval(
    law: &SequenceLaw,
    interval: IndexInterval,
    side: ConditioningSide,
    tol: &Tolerance,
) -> Result<Verdict> {
    Classifier::new(law, *tol)?.cm_interval(interval, side)
}

pub fn classify_reciprocal(law: &SequenceLaw, tol: &Tolerance) -> Result<ReciprocalVerdict> {
    Classifier::new(law, *tol)?.reciprocal()
}

pub fn classify_markov(law: &SequenceLaw, tol: &Tolerance) -> Result<Verdict> {
    Classifier::new(law, *tol)?.markov()
}

pub fn verify_composition(law: &SequenceLaw, tol: &Tolerance) -> Result<bool> {
    Classifier::new(law, *tol)?.verify_composition()
}

pub fn full_report(law: &SequenceLaw, tol: &Tolerance) -> Result<ClassificationReport> {
    Classifier::new(law, *tol)?.report()
}
