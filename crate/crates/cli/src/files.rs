//! On-disk schemas for laws and models.

use std::collections::BTreeMap;
use std::path::Path;

use cmseq::linalg::{cholesky, symmetrize_checked};
use cmseq::{BoundaryCondition, CmcModel, ConditioningSide, Direction, Mat, SequenceLaw};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

/// Row-major nested array.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawFile {
    pub schema_version: String,
    #[serde(rename = "N")]
    pub last: usize,
    pub d: usize,
    pub covariance: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: String,
    pub kind: Direction,
    #[serde(rename = "N")]
    pub last: usize,
    pub d: usize,
    pub c: ConditioningSide,
    pub bc: BoundaryCondition,
    pub transition: BTreeMap<usize, Rows>,
    pub conditioning: BTreeMap<usize, Rows>,
    pub noise: BTreeMap<usize, Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_gain: Option<Rows>,
}

fn rows(m: &Mat) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(field: &str, rows: &Rows, n: usize) -> CliResult<Mat> {
    if rows.len() != n {
        return Err(CliError::Input(format!(
            "{field}: expected {n} rows, got {}",
            rows.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(CliError::Input(format!(
                "{field}: row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_header(version: &str, last: usize, d: usize) -> CliResult<()> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "schema_version: expected \"{SCHEMA_VERSION}\", got {version:?}"
        )));
    }
    if last < 1 {
        return Err(CliError::Input("N: must be at least 1".into()));
    }
    if d < 1 {
        return Err(CliError::Input("d: must be at least 1".into()));
    }
    Ok(())
}

impl LawFile {
    pub fn from_law(law: &SequenceLaw) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            last: law.last(),
            d: law.dim(),
            covariance: rows(law.covariance().data()),
        }
    }

    pub fn to_law(&self) -> CliResult<SequenceLaw> {
        check_header(&self.schema_version, self.last, self.d)?;
        let c = matrix("covariance", &self.covariance, (self.last + 1) * self.d)?;
        SequenceLaw::from_matrix(c, self.d).map_err(|e| CliError::from(e).prefixed("covariance"))
    }
}

impl ModelFile {
    pub fn from_model(m: &CmcModel) -> Self {
        let map = |src: &BTreeMap<usize, Mat>| src.iter().map(|(k, g)| (*k, rows(g))).collect();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            kind: m.direction,
            last: m.last,
            d: m.dim,
            c: m.side,
            bc: m.bc,
            transition: map(&m.transition),
            conditioning: map(&m.conditioning),
            noise: m.noise.iter().enumerate().map(|(k, q)| (k, rows(q))).collect(),
            boundary_gain: m.boundary_gain.as_ref().map(rows),
        }
    }

    pub fn to_model(&self) -> CliResult<CmcModel> {
        check_header(&self.schema_version, self.last, self.d)?;
        let d = self.d;
        let gains = |name: &str, src: &BTreeMap<usize, Rows>| -> CliResult<BTreeMap<usize, Mat>> {
            src.iter()
                .map(|(k, r)| Ok((*k, matrix(&format!("{name}[{k}]"), r, d)?)))
                .collect()
        };
        let keys: Vec<usize> = self.noise.keys().copied().collect();
        if keys != (0..=self.last).collect::<Vec<_>>() {
            return Err(CliError::Input(format!(
                "noise: expected keys 0..={}, got {keys:?}",
                self.last
            )));
        }
        let mut noise = Vec::with_capacity(self.last + 1);
        for (k, r) in &self.noise {
            let field = format!("noise[{k}]");
            let q = matrix(&field, r, d)?;
            let q = symmetrize_checked(&q).map_err(|e| CliError::from(e).prefixed(&field))?;
            cholesky(&q).map_err(|e| CliError::from(e).prefixed(&field))?;
            noise.push(q);
        }
        let model = CmcModel {
            direction: self.kind,
            side: self.c,
            bc: self.bc,
            last: self.last,
            dim: d,
            transition: gains("transition", &self.transition)?,
            conditioning: gains("conditioning", &self.conditioning)?,
            noise,
            boundary_gain: self
                .boundary_gain
                .as_ref()
                .map(|r| matrix("boundary_gain", r, d))
                .transpose()?,
        };
        model.validate()?;
        Ok(model)
    }
}

impl CliError {
    fn prefixed(self, field: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{field}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{field}: {m}")),
            other => other,
        }
    }
}

/// Parses JSON, naming the path of the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." || path == "?" {
            CliError::Input(e.into_inner().to_string())
        } else {
            CliError::Input(format!("{path}: {}", e.into_inner()))
        }
    })
}

pub fn read<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read_law(path: &Path) -> CliResult<SequenceLaw> {
    read::<LawFile>(path)?.to_law()
}

pub fn read_model(path: &Path) -> CliResult<CmcModel> {
    read::<ModelFile>(path)?.to_model()
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
