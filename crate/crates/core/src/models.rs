//! White-noise-driven CM_c dynamic models.
//!
//! Forward model, `k ∈ (0,N] \ {c}`:
//!
//! ```text
//! x_k = G_{k,k-1} x_{k-1} + G_{k,c} x_c + e_k
//! ```
//!
//! with `x_0 = e_0` and, for `c = N`, either `x_N = G_{N,0} x_0 + e_N` (BC1)
//! or `x_N = e_N, x_0 = G_{0,N} x_N + e_0` (BC2). The backward model mirrors
//! this in time, `x_k = G^B_{k,k+1} x_{k+1} + G^B_{k,c} x_c + e^B_k` for
//! `k ∈ [0,N) \ {c}`.
//!
//! Parameters are the Gaussian regression coefficients of `x_k` on its two
//! predecessors. When the predecessors coincide (`k = 1, c = 0` forward,
//! `k = N-1, c = N` backward) only their sum is identifiable and it is split
//! equally between the two gains.

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{ConditioningSide, SequenceLaw};
use crate::linalg::{cholesky, invert_spd, solve_spd, symmetrize, BlockMatrix, Mat};
use crate::structure::{PatternKind, PatternSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Bc1,
    Bc2,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Bc1 => "bc1",
            BoundaryCondition::Bc2 => "bc2",
        }
    }
}

/// Parameters of a forward or backward CM_c model.
///
/// `transition[k]` is `G_{k,k-1}` (forward) or `G^B_{k,k+1}` (backward),
/// `conditioning[k]` is `G_{k,c}`, `noise[k]` is the covariance of `e_k` for
/// every `k ∈ [0,N]`. `boundary_gain` is `G_{N,0}`/`G_{0,N}` (forward, `c = N`,
/// BC1/BC2) or `G^B_{0,N}`/`G^B_{N,0}` (backward, `c = 0`, BC1/BC2) and is
/// absent otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcModel {
    pub direction: Direction,
    pub side: ConditioningSide,
    pub bc: BoundaryCondition,
    pub last: usize,
    pub dim: usize,
    pub transition: BTreeMap<usize, Mat>,
    pub conditioning: BTreeMap<usize, Mat>,
    pub noise: Vec<Mat>,
    pub boundary_gain: Option<Mat>,
}

fn check_boundary(direction: Direction, side: ConditioningSide, bc: BoundaryCondition) -> Result<()> {
    let only_bc1 = matches!(
        (direction, side),
        (Direction::Forward, ConditioningSide::First) | (Direction::Backward, ConditioningSide::Last)
    );
    if only_bc1 && bc == BoundaryCondition::Bc2 {
        return Err(Error::InvalidBoundary {
            direction: direction.as_str(),
            side: side.as_str(),
            bc: bc.as_str(),
        });
    }
    Ok(())
}

impl CmcModel {
    /// Time indices that carry a transition/conditioning gain pair.
    pub fn dynamic_indices(direction: Direction, side: ConditioningSide, last: usize) -> Vec<usize> {
        match (direction, side) {
            (Direction::Forward, ConditioningSide::Last) => (1..last).collect(),
            (Direction::Forward, ConditioningSide::First) => (1..=last).collect(),
            (Direction::Backward, ConditioningSide::First) => (1..last).collect(),
            (Direction::Backward, ConditioningSide::Last) => (0..last).collect(),
        }
    }

    /// Index whose two predecessors coincide, where the gains are split equally.
    pub fn split_index(&self) -> Option<usize> {
        match (self.direction, self.side) {
            (Direction::Forward, ConditioningSide::First) => Some(1),
            (Direction::Backward, ConditioningSide::Last) => Some(self.last - 1),
            _ => None,
        }
    }

    pub fn has_boundary_gain(direction: Direction, side: ConditioningSide) -> bool {
        matches!(
            (direction, side),
            (Direction::Forward, ConditioningSide::Last) | (Direction::Backward, ConditioningSide::First)
        )
    }

    /// Dimensional and definiteness checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        check_boundary(self.direction, self.side, self.bc)?;
        if self.last < 1 || self.dim < 1 {
            return bad("N and d must be at least 1".into());
        }
        let d = self.dim;
        let keys = Self::dynamic_indices(self.direction, self.side, self.last);
        for (name, map) in [("transition", &self.transition), ("conditioning", &self.conditioning)] {
            let got: Vec<usize> = map.keys().copied().collect();
            if got != keys {
                return bad(format!("{name} gains defined at {got:?}, expected {keys:?}"));
            }
            for (k, g) in map {
                if g.shape() != (d, d) {
                    return bad(format!("{name}[{k}] must be {d}x{d}"));
                }
            }
        }
        if self.noise.len() != self.last + 1 {
            return bad(format!(
                "expected {} noise covariances, got {}",
                self.last + 1,
                self.noise.len()
            ));
        }
        for (k, q) in self.noise.iter().enumerate() {
            if q.shape() != (d, d) {
                return bad(format!("noise[{k}] must be {d}x{d}"));
            }
            let asym = (q - q.transpose()).amax();
            if asym > 1e-12 * q.amax().max(f64::MIN_POSITIVE) {
                return bad(format!("noise[{k}] is not symmetric"));
            }
            cholesky(q).map_err(|_| Error::InvalidModel(format!("noise[{k}] is not positive definite")))?;
        }
        match (&self.boundary_gain, Self::has_boundary_gain(self.direction, self.side)) {
            (Some(g), true) if g.shape() != (d, d) => return bad(format!("boundary gain must be {d}x{d}")),
            (None, true) => return bad("boundary gain is required".into()),
            (Some(_), false) => return bad("boundary gain is not used with this conditioning side".into()),
            _ => {}
        }
        if let Some(k) = self.split_index() {
            let (t, c) = (&self.transition[&k], &self.conditioning[&k]);
            if (t - c).amax() > 1e-12 * (1.0 + t.amax()) {
                return bad(format!("transition[{k}] and conditioning[{k}] must be equal"));
            }
        }
        Ok(())
    }

    fn noise_precisions(&self) -> Result<Vec<Mat>> {
        self.noise.iter().map(invert_spd).collect()
    }
}

/// Regression of `x_target` on the stacked predictors: returns the gain per
/// predictor and the residual covariance.
fn regress(c: &BlockMatrix, target: usize, predictors: &[usize]) -> Result<(Vec<Mat>, Mat)> {
    let d = c.block_dim();
    let c_pp = c.gather(predictors, predictors)?;
    let c_pt = c.gather(predictors, &[target])?;
    let gain = solve_spd(&c_pp, &c_pt)?.transpose();
    let noise = symmetrize(&(c.block(target, target)? - &gain * c_pt));
    cholesky(&noise)?;
    let gains = (0..predictors.len())
        .map(|p| gain.view((0, p * d), (d, d)).into_owned())
        .collect();
    Ok((gains, noise))
}

fn regress_one(c: &BlockMatrix, target: usize, predictor: usize) -> Result<(Mat, Mat)> {
    let (mut g, q) = regress(c, target, &[predictor])?;
    Ok((g.pop().expect("one gain"), q))
}

pub fn build_forward(law: &SequenceLaw, side: ConditioningSide, bc: BoundaryCondition) -> Result<CmcModel> {
    build(law, Direction::Forward, side, bc)
}

pub fn build_backward(law: &SequenceLaw, side: ConditioningSide, bc: BoundaryCondition) -> Result<CmcModel> {
    build(law, Direction::Backward, side, bc)
}

pub fn build(
    law: &SequenceLaw,
    direction: Direction,
    side: ConditioningSide,
    bc: BoundaryCondition,
) -> Result<CmcModel> {
    check_boundary(direction, side, bc)?;
    let n = law.last();
    if n < 1 {
        return Err(Error::InvalidArgument("models need N >= 1".into()));
    }
    let c = law.covariance();
    let d = law.dim();
    let cond = match side {
        ConditioningSide::First => 0,
        ConditioningSide::Last => n,
    };
    let mut noise = vec![Mat::zeros(d, d); n + 1];
    let mut transition = BTreeMap::new();
    let mut conditioning = BTreeMap::new();
    let mut boundary_gain = None;

    if CmcModel::has_boundary_gain(direction, side) {
        // The pair (x_0, x_N): one is pure noise, the other regresses on it.
        let (root, child) = match (direction, bc) {
            (Direction::Forward, BoundaryCondition::Bc1) | (Direction::Backward, BoundaryCondition::Bc2) => (0, n),
            _ => (n, 0),
        };
        noise[root] = c.block(root, root)?;
        let (g, q) = regress_one(c, child, root)?;
        noise[child] = q;
        boundary_gain = Some(g);
    } else {
        noise[cond] = c.block(cond, cond)?;
    }

    for k in CmcModel::dynamic_indices(direction, side, n) {
        let neighbour = match direction {
            Direction::Forward => k - 1,
            Direction::Backward => k + 1,
        };
        if neighbour == cond {
            let (g, q) = regress_one(c, k, cond)?;
            let half = g * 0.5;
            transition.insert(k, half.clone());
            conditioning.insert(k, half);
            noise[k] = q;
        } else {
            let (g, q) = regress(c, k, &[neighbour, cond])?;
            transition.insert(k, g[0].clone());
            conditioning.insert(k, g[1].clone());
            noise[k] = q;
        }
    }

    Ok(CmcModel {
        direction,
        side,
        bc,
        last: n,
        dim: d,
        transition,
        conditioning,
        noise,
        boundary_gain,
    })
}

/// The unit block matrix `𝒢` with `𝒢 x = e`.
pub fn assemble_script_g(model: &CmcModel) -> BlockMatrix {
    let n = model.last;
    let d = model.dim;
    let mut g = BlockMatrix::identity(n + 1, d);
    let mut put = |i: usize, j: usize, v: &Mat| {
        let cur = g.block(i, j).expect("in range");
        g.set_block(i, j, &(cur - v)).expect("in range");
    };
    let cond = match model.side {
        ConditioningSide::First => 0,
        ConditioningSide::Last => n,
    };
    for (&k, t) in &model.transition {
        let neighbour = match model.direction {
            Direction::Forward => k - 1,
            Direction::Backward => k + 1,
        };
        put(k, neighbour, t);
        put(k, cond, &model.conditioning[&k]);
    }
    if let Some(b) = &model.boundary_gain {
        let (row, col) = match (model.direction, model.bc) {
            (Direction::Forward, BoundaryCondition::Bc1) | (Direction::Backward, BoundaryCondition::Bc2) => (n, 0),
            _ => (0, n),
        };
        put(row, col, b);
    }
    g
}

/// `A = 𝒢' G⁻¹ 𝒢` with `G = diag(noise)`.
pub fn assemble_precision(model: &CmcModel) -> Result<BlockMatrix> {
    model.validate()?;
    let n = model.last;
    let d = model.dim;
    let script_g = assemble_script_g(model);
    let inv = model.noise_precisions()?;
    let g_inv = BlockMatrix::from_fn(n + 1, d, |i, j| if i == j { inv[i].clone() } else { Mat::zeros(d, d) });
    let a = script_g.data().transpose() * g_inv.data() * script_g.data();
    BlockMatrix::new(symmetrize(&a), d)
}

pub fn model_covariance(model: &CmcModel) -> Result<SequenceLaw> {
    SequenceLaw::from_precision(&assemble_precision(model)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Largest residual norm relative to `max_k ‖G_k⁻¹‖`.
    pub max_residual: f64,
    /// Index of the largest residual, `None` when nothing was checked.
    pub worst_index: Option<usize>,
    /// Indices the condition was evaluated at.
    pub checked: Vec<usize>,
}

struct Residuals {
    scale: f64,
    tol: f64,
    worst: f64,
    worst_index: Option<usize>,
    checked: Vec<usize>,
}

impl Residuals {
    fn new(inv: &[Mat], tol: f64) -> Self {
        let scale = inv.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Self {
            scale,
            tol,
            worst: 0.0,
            worst_index: None,
            checked: Vec::new(),
        }
    }

    fn push(&mut self, k: usize, residual: Mat) {
        let r = residual.norm() / self.scale;
        if self.worst_index.is_none() || r > self.worst {
            self.worst = r;
            self.worst_index = Some(k);
        }
        self.checked.push(k);
    }

    fn finish(self) -> ConditionCheck {
        ConditionCheck {
            holds: self.worst <= self.tol,
            max_residual: self.worst,
            worst_index: self.worst_index,
            checked: self.checked,
        }
    }
}

/// Reciprocity condition on the model parameters.
///
/// Forward: `G_k⁻¹ G_{k,c} = G_{k+1,k}' G_{k+1}⁻¹ G_{k+1,c}` for
/// `k ∈ (0, N-1)` when `c = N` and `k ∈ (1, N)` when `c = 0`.
/// Backward: `(G^B_{k+1})⁻¹ G^B_{k+1,c} = (G^B_{k,k+1})' (G^B_k)⁻¹ G^B_{k,c}`
/// for `k ∈ (0, N-1)` when `c = 0` and `k ∈ [0, N-2)` when `c = N`.
pub fn check_reciprocity(model: &CmcModel, residual_tol: f64) -> Result<ConditionCheck> {
    model.validate()?;
    let n = model.last as isize;
    let inv = model.noise_precisions()?;
    let t = &model.transition;
    let c = &model.conditioning;
    let mut res = Residuals::new(&inv, residual_tol);
    let ks: Vec<usize> = match (model.direction, model.side) {
        (Direction::Forward, ConditioningSide::Last) => open_range(0, n - 1),
        (Direction::Forward, ConditioningSide::First) => open_range(1, n),
        (Direction::Backward, ConditioningSide::First) => open_range(0, n - 1),
        (Direction::Backward, ConditioningSide::Last) => (0..(n - 2).max(0) as usize).collect(),
    };
    for k in ks {
        let r = match model.direction {
            Direction::Forward => &inv[k] * &c[&k] - t[&(k + 1)].transpose() * &inv[k + 1] * &c[&(k + 1)],
            Direction::Backward => &inv[k + 1] * &c[&(k + 1)] - t[&k].transpose() * &inv[k] * &c[&k],
        };
        res.push(k, r);
    }
    Ok(res.finish())
}

/// Integers strictly between `lo` and `hi`.
fn open_range(lo: isize, hi: isize) -> Vec<usize> {
    ((lo + 1)..hi).map(|k| k as usize).collect()
}

/// Additional boundary identity that makes a reciprocal model Markov.
///
/// Forward `c = N`: `G_N⁻¹ G_{N,0} = G_{1,N}' G_1⁻¹ G_{1,0}` (BC1) or
/// `G_0⁻¹ G_{0,N} = G_{1,0}' G_1⁻¹ G_{1,N}` (BC2); forward `c = 0`:
/// `G_{N,0} = 0`. Backward `c = 0`:
/// `(G^B_0)⁻¹ G^B_{0,N} = (G^B_{N-1,0})' (G^B_{N-1})⁻¹ G^B_{N-1,N}` (BC1) or
/// `(G^B_N)⁻¹ G^B_{N,0} = (G^B_{N-1,N})' (G^B_{N-1})⁻¹ G^B_{N-1,0}` (BC2);
/// backward `c = N`: `G^B_{0,N} = 0`. A vanishing gain is tested as
/// `G_k⁻¹ G = 0`, which is equivalent and has the units of the other residuals.
pub fn check_markov(model: &CmcModel, residual_tol: f64) -> Result<ConditionCheck> {
    model.validate()?;
    let n = model.last;
    let inv = model.noise_precisions()?;
    let t = &model.transition;
    let c = &model.conditioning;
    let mut res = Residuals::new(&inv, residual_tol);
    let boundary = || model.boundary_gain.as_ref().expect("validated");
    let (k, r) = match (model.direction, model.side, model.bc) {
        (Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc1) => {
            (n, &inv[n] * boundary() - c[&1].transpose() * &inv[1] * &t[&1])
        }
        (Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc2) => {
            (0, &inv[0] * boundary() - t[&1].transpose() * &inv[1] * &c[&1])
        }
        (Direction::Forward, ConditioningSide::First, _) => (n, &inv[n] * &c[&n]),
        (Direction::Backward, ConditioningSide::First, BoundaryCondition::Bc1) => (
            0,
            &inv[0] * boundary() - c[&(n - 1)].transpose() * &inv[n - 1] * &t[&(n - 1)],
        ),
        (Direction::Backward, ConditioningSide::First, BoundaryCondition::Bc2) => (
            n,
            &inv[n] * boundary() - t[&(n - 1)].transpose() * &inv[n - 1] * &c[&(n - 1)],
        ),
        (Direction::Backward, ConditioningSide::Last, _) => (0, &inv[0] * &c[&0]),
    };
    res.push(k, r);
    Ok(res.finish())
}

/// Fixture classes for [`random_law`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawClass {
    Markov,
    Reciprocal,
    #[serde(rename = "cml")]
    CmLOnly,
    #[serde(rename = "cmf")]
    CmFOnly,
    Generic,
}

impl LawClass {
    pub const ALL: [LawClass; 5] = [
        LawClass::Markov,
        LawClass::Reciprocal,
        LawClass::CmLOnly,
        LawClass::CmFOnly,
        LawClass::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LawClass::Markov => "markov",
            LawClass::Reciprocal => "reciprocal",
            LawClass::CmLOnly => "cml",
            LawClass::CmFOnly => "cmf",
            LawClass::Generic => "generic",
        }
    }
}

impl std::str::FromStr for LawClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LawClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown law class {s:?}")))
    }
}

/// Minimum norm of the block that makes a fixture class strict.
pub const MIN_WITNESS_NORM: f64 = 0.1;

/// Random diagonally dominant precision supported on `allows`.
///
/// Off-diagonal blocks on the support get entries uniform in `[-0.5, 0.5]`;
/// `witness`, when given, is redrawn until its norm reaches
/// [`MIN_WITNESS_NORM`]. Each scalar diagonal entry is the absolute sum of the
/// off-diagonal entries of its row plus one.
pub fn random_precision(
    last: usize,
    dim: usize,
    seed: u64,
    allows: impl Fn(usize, usize) -> bool,
    witness: Option<(usize, usize)>,
) -> BlockMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = Uniform::new_inclusive(-0.5, 0.5).expect("valid range");
    let d = dim;
    let mut p = BlockMatrix::zeros(last + 1, d);
    let draw = |rng: &mut ChaCha8Rng| Mat::from_fn(d, d, |_, _| entry.sample(rng));
    for i in 0..=last {
        for j in (i + 1)..=last {
            if !allows(i, j) {
                continue;
            }
            let mut b = draw(&mut rng);
            if witness == Some((i, j)) {
                while b.norm() < MIN_WITNESS_NORM {
                    b = draw(&mut rng);
                }
            }
            p.set_block(i, j, &b).expect("in range");
            p.set_block(j, i, &b.transpose()).expect("in range");
        }
    }
    let mut data = p.into_inner();
    for r in 0..data.nrows() {
        let own = r / d;
        let off: f64 = (0..data.ncols())
            .filter(|&c| c / d != own)
            .map(|c| data[(r, c)].abs())
            .sum();
        data[(r, r)] = off + 1.0;
    }
    BlockMatrix::new(data, d).expect("square")
}

/// Seeded law of the requested class; the precision has exact zeros off the
/// class support.
pub fn random_law(class: LawClass, last: usize, dim: usize, seed: u64) -> Result<SequenceLaw> {
    if last < 2 {
        return Err(Error::InvalidArgument(format!("random laws need N >= 2, got {last}")));
    }
    if dim < 1 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let n = last;
    let mut picker = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut pick = |lo: usize, hi: usize| -> Result<usize> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "class {} needs N >= 3, got {n}",
                class.as_str()
            )));
        }
        Ok(Uniform::new_inclusive(lo, hi).expect("valid range").sample(&mut picker))
    };
    let (kind, witness) = match class {
        LawClass::Markov => (Some(PatternKind::Tridiagonal), None),
        LawClass::Reciprocal => (Some(PatternKind::CyclicTridiagonal), Some((0, n))),
        LawClass::CmLOnly => (Some(PatternKind::CmL), Some((pick(1, n - 2)?, n))),
        LawClass::CmFOnly => (Some(PatternKind::CmF), Some((0, pick(2, n - 1)?))),
        LawClass::Generic => (None, None),
    };
    let precision = match kind {
        Some(kind) => {
            let spec = PatternSpec::new(kind, n);
            random_precision(n, dim, seed, |i, j| spec.allows(i, j), witness)
        }
        None => random_precision(n, dim, seed, |_, _| true, None),
    };
    SequenceLaw::from_precision(&precision)
}
