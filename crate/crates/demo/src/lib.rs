//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export takes plain numbers and strings and returns a JSON document,
//! so the page needs no glue beyond `JSON.parse`.

use cmseq::classify::full_report;
use cmseq::models::{assemble_precision, build, check_markov, check_reciprocity, random_law};
use cmseq::simulate::{sample, sample_covariance};
use cmseq::structure::{detect, PatternKind, PatternSpec};
use cmseq::{BoundaryCondition, ConditioningSide, Direction, LawClass, Mat, SequenceLaw, Tolerance};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Trajectories returned to the page are capped at this count.
pub const MAX_PLOTTED: usize = 40;
const MAX_LAST: u32 = 12;
const MAX_DIM: u32 = 3;

type DemoResult<T> = Result<T, String>;

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn law(class: &str, last: u32, dim: u32, seed: u32) -> DemoResult<SequenceLaw> {
    if !(2..=MAX_LAST).contains(&last) || !(1..=MAX_DIM).contains(&dim) {
        return Err(format!("N must be in 2..={MAX_LAST} and d in 1..={MAX_DIM}"));
    }
    let class: LawClass = class.parse().map_err(|e: cmseq::Error| e.to_string())?;
    random_law(class, last as usize, dim as usize, seed as u64).map_err(|e| e.to_string())
}

fn variant(direction: &str, c: &str, bc: &str) -> DemoResult<(Direction, ConditioningSide, BoundaryCondition)> {
    let direction = match direction {
        "forward" => Direction::Forward,
        "backward" => Direction::Backward,
        other => return Err(format!("unknown direction {other:?}")),
    };
    let side = match c {
        "first" => ConditioningSide::First,
        "last" => ConditioningSide::Last,
        other => return Err(format!("unknown conditioning side {other:?}")),
    };
    let bc = match bc {
        "bc1" => BoundaryCondition::Bc1,
        "bc2" => BoundaryCondition::Bc2,
        other => return Err(format!("unknown boundary condition {other:?}")),
    };
    Ok((direction, side, bc))
}

#[derive(Serialize)]
struct Flag {
    name: String,
    holds: bool,
}

#[derive(Serialize)]
struct LawView {
    n: usize,
    d: usize,
    precision: Vec<Vec<f64>>,
    /// Block Frobenius norms relative to the largest block.
    block_norms: Vec<Vec<f64>>,
    flags: Vec<Flag>,
    intervals: Vec<Flag>,
    consistent: bool,
}

pub fn classify_law(class: &str, last: u32, dim: u32, seed: u32) -> DemoResult<String> {
    let law = law(class, last, dim, seed)?;
    let tol = Tolerance::default();
    let r = full_report(&law, &tol).map_err(|e| e.to_string())?;
    let p = law.precision().map_err(|e| e.to_string())?;
    let scale = p.max_block_norm();
    let n = law.last();
    let block_norms = (0..=n)
        .map(|i| (0..=n).map(|j| p.block_norm(i, j) / scale).collect())
        .collect();
    let flag = |name: &str, holds: bool| Flag {
        name: name.into(),
        holds,
    };
    let view = LawView {
        n,
        d: law.dim(),
        precision: rows(p.data()),
        block_norms,
        flags: vec![
            flag("Markov", r.markov.holds),
            flag("reciprocal", r.reciprocal.holds),
            flag("CM_L", r.cm_l.holds),
            flag("CM_F", r.cm_f.holds),
        ],
        intervals: r
            .interval_cm
            .iter()
            .map(|iv| {
                let side = if iv.side == ConditioningSide::First { "F" } else { "L" };
                flag(
                    &format!("[{},{}]-CM_{side}", iv.interval.lo, iv.interval.hi),
                    iv.verdict.holds,
                )
            })
            .collect(),
        consistent: r.consistency,
    };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

#[derive(Serialize)]
struct Check {
    parameters: bool,
    pattern: bool,
    residual: f64,
}

#[derive(Serialize)]
struct ModelView {
    /// Precision assembled from the model parameters, as relative block norms.
    block_norms: Vec<Vec<f64>>,
    reciprocal: Check,
    markov: Check,
    /// `‖C_model - C‖_F / ‖C‖_F`; zero up to roundoff iff the law is CM_c.
    round_trip_error: f64,
    law_is_cmc: bool,
}

pub fn model_report(
    class: &str,
    last: u32,
    dim: u32,
    seed: u32,
    direction: &str,
    c: &str,
    bc: &str,
) -> DemoResult<String> {
    let law = law(class, last, dim, seed)?;
    let (dir, side, bc) = variant(direction, c, bc)?;
    let tol = Tolerance::default();
    let err = |e: cmseq::Error| e.to_string();
    let model = build(&law, dir, side, bc).map_err(err)?;
    let a = assemble_precision(&model).map_err(err)?;
    let n = law.last();
    let rec = check_reciprocity(&model, tol.residual_tol).map_err(err)?;
    let addon = check_markov(&model, tol.residual_tol).map_err(err)?;
    let cyc = detect(&a, PatternSpec::new(PatternKind::CyclicTridiagonal, n), &tol).map_err(err)?;
    let tri = detect(&a, PatternSpec::new(PatternKind::Tridiagonal, n), &tol).map_err(err)?;
    let cov = SequenceLaw::from_precision(&a).map_err(err)?;
    let truth = law.covariance().data();
    let scale = a.max_block_norm();
    let report = full_report(&law, &tol).map_err(err)?;
    let view = ModelView {
        block_norms: (0..=n)
            .map(|i| (0..=n).map(|j| a.block_norm(i, j) / scale).collect())
            .collect(),
        reciprocal: Check {
            parameters: rec.holds,
            pattern: cyc.conforms,
            residual: rec.max_residual,
        },
        markov: Check {
            parameters: rec.holds && addon.holds,
            pattern: tri.conforms,
            residual: addon.max_residual,
        },
        round_trip_error: (cov.covariance().data() - truth).norm() / truth.norm(),
        law_is_cmc: match side {
            ConditioningSide::First => report.cm_f.holds,
            ConditioningSide::Last => report.cm_l.holds,
        },
    };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

#[derive(Serialize)]
struct SimulationView {
    samples: usize,
    /// First component of the first [`MAX_PLOTTED`] trajectories.
    trajectories: Vec<Vec<f64>>,
    /// Entrywise deviation of the sample covariance from the law's covariance.
    max_abs_deviation: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_model(
    class: &str,
    last: u32,
    dim: u32,
    seed: u32,
    direction: &str,
    c: &str,
    bc: &str,
    samples: u32,
    sim_seed: u32,
) -> DemoResult<String> {
    let law = law(class, last, dim, seed)?;
    let (dir, side, bc) = variant(direction, c, bc)?;
    if !(2..=200_000).contains(&samples) {
        return Err("samples must be in 2..=200000".into());
    }
    let err = |e: cmseq::Error| e.to_string();
    let model = build(&law, dir, side, bc).map_err(err)?;
    let batch = sample(&model, samples as usize, sim_seed as u64).map_err(err)?;
    let est = sample_covariance(&batch).map_err(err)?;
    let view = SimulationView {
        samples: batch.replicates,
        trajectories: (0..batch.replicates.min(MAX_PLOTTED))
            .map(|r| (0..=batch.last).map(|k| batch.state(r, k)[0]).collect())
            .collect(),
        max_abs_deviation: (est.data() - law.covariance().data()).amax(),
    };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

/// Random law of a class with its precision heatmap and classification flags.
#[wasm_bindgen]
pub fn classify(class: &str, n: u32, d: u32, seed: u32) -> Result<String, JsValue> {
    classify_law(class, n, d, seed).map_err(|e| JsValue::from_str(&e))
}

/// Builds a CM_c model of the law and checks both routes to its structure.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn convert(class: &str, n: u32, d: u32, seed: u32, direction: &str, c: &str, bc: &str) -> Result<String, JsValue> {
    model_report(class, n, d, seed, direction, c, bc).map_err(|e| JsValue::from_str(&e))
}

/// Samples the model and reports trajectories and the covariance error.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    class: &str,
    n: u32,
    d: u32,
    seed: u32,
    direction: &str,
    c: &str,
    bc: &str,
    samples: u32,
    sim_seed: u32,
) -> Result<String, JsValue> {
    simulate_model(class, n, d, seed, direction, c, bc, samples, sim_seed).map_err(|e| JsValue::from_str(&e))
}
