//! Subcommand bodies. Each returns a one-line summary for stdout.

use std::path::Path;

use cmseq::models::{assemble_precision, build, check_markov, check_reciprocity, random_law, ConditionCheck};
use cmseq::simulate::{mc_compare, mc_validate, sample, McReport, SampleBatch};
use cmseq::structure::{detect, PatternKind, PatternSpec};
use cmseq::{
    full_report, BoundaryCondition, ClassificationReport, CmcModel, ConditioningSide, Direction, LawClass,
    PatternWitness, Tolerance,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{self, LawFile, ModelFile, SCHEMA_VERSION};
use crate::json;

pub fn tolerance(zero_tol: f64, residual_tol: f64) -> CliResult<Tolerance> {
    Tolerance::new(zero_tol, residual_tol).map_err(|_| CliError::Input("tolerances must be positive and finite".into()))
}

#[derive(Debug, Serialize)]
pub struct ClassifyOutput<'a> {
    pub schema_version: &'static str,
    pub zero_tol: f64,
    pub residual_tol: f64,
    #[serde(flatten)]
    pub report: &'a ClassificationReport,
}

pub fn classify_text(law: &cmseq::SequenceLaw, tol: Tolerance) -> CliResult<(String, ClassificationReport)> {
    let report = full_report(law, &tol)?;
    let text = json::to_string(&ClassifyOutput {
        schema_version: SCHEMA_VERSION,
        zero_tol: tol.zero_tol,
        residual_tol: tol.residual_tol,
        report: &report,
    });
    Ok((text, report))
}

pub fn classify(input: &Path, tol: Tolerance, out: &Path) -> CliResult<String> {
    let law = files::read_law(input)?;
    let (text, r) = classify_text(&law, tol)?;
    files::write(out, &text)?;
    let summary = format!(
        "N={} d={} markov={} reciprocal={} cm_l={} cm_f={} consistent={}",
        r.last, r.dim, r.markov.holds, r.reciprocal.holds, r.cm_l.holds, r.cm_f.holds, r.consistency
    );
    if !r.consistency {
        return Err(CliError::Consistency(format!(
            "classification routes disagree: {summary}"
        )));
    }
    Ok(summary)
}

pub fn convert(
    input: &Path,
    direction: Direction,
    side: ConditioningSide,
    bc: BoundaryCondition,
    out: &Path,
) -> CliResult<String> {
    let law = files::read_law(input)?;
    let model = build(&law, direction, side, bc)?;
    files::write(out, &json::to_string(&ModelFile::from_model(&model)))?;
    Ok(format!(
        "{} model, c={}, {} with N={} d={}",
        direction.as_str(),
        side.as_str(),
        bc.as_str(),
        model.last,
        model.dim
    ))
}

/// One property decided two ways: from the parameter identities and from the
/// zero pattern of the assembled precision.
#[derive(Debug, Serialize)]
pub struct Route {
    pub parameter_route: bool,
    pub pattern_route: bool,
    pub agree: bool,
    pub conditions: ConditionCheck,
    pub pattern: PatternWitness,
}

#[derive(Debug, Serialize)]
pub struct VerifyOutput {
    pub schema_version: &'static str,
    pub kind: Direction,
    #[serde(rename = "N")]
    pub last: usize,
    pub d: usize,
    pub c: ConditioningSide,
    pub bc: BoundaryCondition,
    pub zero_tol: f64,
    pub residual_tol: f64,
    pub reciprocal: Route,
    /// `conditions` holds the boundary add-on only; the parameter route also
    /// requires reciprocity.
    pub markov: Route,
    pub consistent: bool,
}

pub fn verify_model(model: &CmcModel, tol: Tolerance) -> CliResult<VerifyOutput> {
    let a = assemble_precision(model)?;
    let rec = check_reciprocity(model, tol.residual_tol)?;
    let addon = check_markov(model, tol.residual_tol)?;
    let cyc = detect(&a, PatternSpec::new(PatternKind::CyclicTridiagonal, model.last), &tol)?;
    let tri = detect(&a, PatternSpec::new(PatternKind::Tridiagonal, model.last), &tol)?;
    let route = |param: bool, conditions: ConditionCheck, pattern: PatternWitness| Route {
        parameter_route: param,
        pattern_route: pattern.conforms,
        agree: param == pattern.conforms,
        conditions,
        pattern,
    };
    let rec_holds = rec.holds;
    let markov_holds = rec_holds && addon.holds;
    let reciprocal = route(rec_holds, rec, cyc);
    let markov = route(markov_holds, addon, tri);
    Ok(VerifyOutput {
        schema_version: SCHEMA_VERSION,
        kind: model.direction,
        last: model.last,
        d: model.dim,
        c: model.side,
        bc: model.bc,
        zero_tol: tol.zero_tol,
        residual_tol: tol.residual_tol,
        consistent: reciprocal.agree && markov.agree,
        reciprocal,
        markov,
    })
}

pub fn verify(input: &Path, tol: Tolerance, out: Option<&Path>) -> CliResult<String> {
    let model = files::read_model(input)?;
    let v = verify_model(&model, tol)?;
    if let Some(out) = out {
        files::write(out, &json::to_string(&v))?;
    }
    let summary = format!(
        "reciprocal: parameters={} pattern={}\nmarkov: parameters={} pattern={}\nroutes agree: {}",
        v.reciprocal.parameter_route,
        v.reciprocal.pattern_route,
        v.markov.parameter_route,
        v.markov.pattern_route,
        v.consistent
    );
    if !v.consistent {
        return Err(CliError::Consistency(format!(
            "parameter and pattern routes disagree\n{summary}"
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Csv,
    Json,
}

pub fn batch_csv(batch: &SampleBatch) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["replicate".to_string(), "k".to_string()];
    header.extend((1..=batch.dim).map(|i| format!("x_{i}")));
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in 0..batch.replicates {
        for k in 0..=batch.last {
            let mut row = vec![r.to_string(), k.to_string()];
            row.extend(batch.state(r, k).iter().map(|&x| json::format_f64(x)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

#[derive(Debug, Serialize)]
struct BatchOutput<'a> {
    schema_version: &'static str,
    #[serde(rename = "N")]
    last: usize,
    d: usize,
    samples: usize,
    seed: u64,
    /// `[replicate][k][component]`
    trajectories: Vec<Vec<&'a [f64]>>,
}

pub fn batch_json(batch: &SampleBatch) -> String {
    json::to_string(&BatchOutput {
        schema_version: SCHEMA_VERSION,
        last: batch.last,
        d: batch.dim,
        samples: batch.replicates,
        seed: batch.seed,
        trajectories: (0..batch.replicates)
            .map(|r| (0..=batch.last).map(|k| batch.state(r, k)).collect())
            .collect(),
    })
}

pub fn simulate(input: &Path, samples: usize, seed: u64, out: &Path, format: SampleFormat) -> CliResult<String> {
    let model = files::read_model(input)?;
    let batch = sample(&model, samples, seed)?;
    let text = match format {
        SampleFormat::Csv => batch_csv(&batch)?,
        SampleFormat::Json => batch_json(&batch),
    };
    files::write(out, &text)?;
    Ok(format!(
        "{samples} trajectories of {} states (seed {seed}) written to {}",
        model.last + 1,
        out.display()
    ))
}

pub fn generate(class: LawClass, last: usize, d: usize, seed: u64, out: &Path) -> CliResult<String> {
    let law = random_law(class, last, d, seed)?;
    files::write(out, &json::to_string(&LawFile::from_law(&law)))?;
    Ok(format!("{} law with N={last} d={d} (seed {seed})", class.as_str()))
}

/// Monte Carlo check of a model against its own covariance, or against a law
/// file when one is given.
pub fn validate(
    input: &Path,
    law: Option<&Path>,
    samples: usize,
    seed: u64,
    tol_abs: f64,
    out: Option<&Path>,
) -> CliResult<String> {
    if !(tol_abs > 0.0 && tol_abs.is_finite()) {
        return Err(CliError::Input("tolerance must be positive and finite".into()));
    }
    let model = files::read_model(input)?;
    let report: McReport = match law {
        Some(p) => {
            let law = files::read_law(p)?;
            if law.last() != model.last || law.dim() != model.dim {
                return Err(CliError::Input("law and model dimensions differ".into()));
            }
            mc_compare(&model, law.covariance(), samples, seed, tol_abs)?
        }
        None => mc_validate(&model, samples, seed, tol_abs)?,
    };
    if let Some(out) = out {
        files::write(out, &json::to_string(&report))?;
    }
    let summary = format!(
        "max |sample - true| = {:.3e} at {:?} over {samples} samples (tolerance {tol_abs})",
        report.max_abs_deviation, report.worst_entry
    );
    if report.passed {
        Ok(format!("passed: {summary}"))
    } else {
        Err(CliError::CheckFailed(format!("failed: {summary}")))
    }
}
