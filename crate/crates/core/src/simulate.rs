//! Seeded sampling from CM_c models.
//!
//! Replicate `r` draws from its own ChaCha8 stream `(seed, r)`, so a batch is
//! fully determined by `(model, replicates, seed)` whatever the thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::ConditioningSide;
use crate::linalg::{cholesky, BlockMatrix, Mat};
use crate::models::{model_covariance, BoundaryCondition, CmcModel, Direction};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub replicates: usize,
    pub last: usize,
    pub dim: usize,
    pub seed: u64,
    /// Row-major `[replicate][time][component]`.
    pub data: Vec<f64>,
}

impl SampleBatch {
    fn stride(&self) -> usize {
        (self.last + 1) * self.dim
    }

    /// Stacked trajectory `[x_0; ...; x_N]` of one replicate.
    pub fn trajectory(&self, r: usize) -> &[f64] {
        let s = self.stride();
        &self.data[r * s..(r + 1) * s]
    }

    pub fn state(&self, r: usize, k: usize) -> &[f64] {
        let t = self.trajectory(r);
        &t[k * self.dim..(k + 1) * self.dim]
    }
}

/// One step of the generation order: `x_k = Σ gain · x_source + e_k`.
struct Step {
    k: usize,
    terms: Vec<(Mat, usize)>,
}

/// Generation order dictated by the boundary conditions, then the dynamics.
fn schedule(model: &CmcModel) -> Vec<Step> {
    let n = model.last;
    let cond = match model.side {
        ConditioningSide::First => 0,
        ConditioningSide::Last => n,
    };
    let mut steps = Vec::new();
    if let Some(b) = &model.boundary_gain {
        let (root, child) = match (model.direction, model.bc) {
            (Direction::Forward, BoundaryCondition::Bc1) | (Direction::Backward, BoundaryCondition::Bc2) => (0, n),
            _ => (n, 0),
        };
        steps.push(Step { k: root, terms: vec![] });
        steps.push(Step {
            k: child,
            terms: vec![(b.clone(), root)],
        });
    } else {
        steps.push(Step { k: cond, terms: vec![] });
    }
    let dynamic: Vec<usize> = match model.direction {
        Direction::Forward => model.transition.keys().copied().collect(),
        Direction::Backward => model.transition.keys().rev().copied().collect(),
    };
    for k in dynamic {
        let neighbour = match model.direction {
            Direction::Forward => k - 1,
            Direction::Backward => k + 1,
        };
        steps.push(Step {
            k,
            terms: vec![
                (model.transition[&k].clone(), neighbour),
                (model.conditioning[&k].clone(), cond),
            ],
        });
    }
    steps
}

fn fill_replicate(steps: &[Step], factors: &[Mat], dim: usize, seed: u64, r: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let mut z = vec![0.0; dim];
    for step in steps {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let l = &factors[step.k];
        let mut x = vec![0.0; dim];
        for (i, xi) in x.iter_mut().enumerate() {
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                *xi += l[(i, j)] * zj;
            }
        }
        for (gain, src) in &step.terms {
            for (i, xi) in x.iter_mut().enumerate() {
                for j in 0..dim {
                    *xi += gain[(i, j)] * out[src * dim + j];
                }
            }
        }
        out[step.k * dim..(step.k + 1) * dim].copy_from_slice(&x);
    }
}

/// Draws `replicates` independent trajectories from a forward or backward
/// model, following the generation order of its boundary conditions.
pub fn sample(model: &CmcModel, replicates: usize, seed: u64) -> Result<SampleBatch> {
    model.validate()?;
    let dim = model.dim;
    let steps = schedule(model);
    let factors: Vec<Mat> = model.noise.iter().map(cholesky).collect::<Result<_>>()?;
    let stride = (model.last + 1) * dim;
    let mut data = vec![0.0; replicates * stride];
    if stride > 0 {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            data.par_chunks_mut(stride)
                .enumerate()
                .for_each(|(r, out)| fill_replicate(&steps, &factors, dim, seed, r, out));
        }
        #[cfg(not(feature = "parallel"))]
        data.chunks_mut(stride)
            .enumerate()
            .for_each(|(r, out)| fill_replicate(&steps, &factors, dim, seed, r, out));
    }
    Ok(SampleBatch {
        replicates,
        last: model.last,
        dim,
        seed,
        data,
    })
}

pub fn sample_forward(model: &CmcModel, replicates: usize, seed: u64) -> Result<SampleBatch> {
    if model.direction != Direction::Forward {
        return Err(Error::InvalidArgument("expected a forward model".into()));
    }
    sample(model, replicates, seed)
}

pub fn sample_backward(model: &CmcModel, replicates: usize, seed: u64) -> Result<SampleBatch> {
    if model.direction != Direction::Backward {
        return Err(Error::InvalidArgument("expected a backward model".into()));
    }
    sample(model, replicates, seed)
}

/// `(1/M) Σ x x'` over replicates, without mean subtraction.
pub fn sample_covariance(batch: &SampleBatch) -> Result<BlockMatrix> {
    if batch.replicates < 2 {
        return Err(Error::InsufficientSamples(batch.replicates));
    }
    let n = (batch.last + 1) * batch.dim;
    let mut acc = Mat::zeros(n, n);
    for r in 0..batch.replicates {
        let x = batch.trajectory(r);
        for i in 0..n {
            for j in 0..=i {
                acc[(i, j)] += x[i] * x[j];
            }
        }
    }
    let m = batch.replicates as f64;
    for i in 0..n {
        for j in 0..=i {
            acc[(i, j)] /= m;
            acc[(j, i)] = acc[(i, j)];
        }
    }
    BlockMatrix::new(acc, batch.dim)
}

/// Noise reconstructed from a trajectory, `e = 𝒢 x`.
pub fn innovations(model: &CmcModel, trajectory: &[f64]) -> Vec<f64> {
    let g = crate::models::assemble_script_g(model);
    let x = nalgebra::DVector::from_column_slice(trajectory);
    (g.data() * x).as_slice().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub passed: bool,
    pub replicates: usize,
    pub seed: u64,
    pub tol_abs: f64,
    pub max_abs_deviation: f64,
    /// Scalar `(row, col)` of the largest deviation.
    pub worst_entry: (usize, usize),
}

/// Samples the model and compares the sample covariance entrywise against the
/// covariance the model implies.
pub fn mc_validate(model: &CmcModel, replicates: usize, seed: u64, tol_abs: f64) -> Result<McReport> {
    let truth = model_covariance(model)?;
    mc_compare(model, truth.covariance(), replicates, seed, tol_abs)
}

/// Like [`mc_validate`] but against an arbitrary reference covariance.
pub fn mc_compare(
    model: &CmcModel,
    reference: &BlockMatrix,
    replicates: usize,
    seed: u64,
    tol_abs: f64,
) -> Result<McReport> {
    let batch = sample(model, replicates, seed)?;
    let est = sample_covariance(&batch)?;
    if est.data().shape() != reference.data().shape() {
        return Err(Error::Dimension("reference covariance has the wrong size".into()));
    }
    let diff = est.data() - reference.data();
    let (mut worst, mut at) = (0.0f64, (0, 0));
    for i in 0..diff.nrows() {
        for j in 0..diff.ncols() {
            if diff[(i, j)].abs() > worst {
                worst = diff[(i, j)].abs();
                at = (i, j);
            }
        }
    }
    Ok(McReport {
        passed: worst < tol_abs,
        replicates,
        seed,
        tol_abs,
        max_abs_deviation: worst,
        worst_entry: at,
    })
}
