//! Problem files (`gencrit.problem/1`).

use gencrit_core::densela::LinalgError;
use gencrit_core::geometry::ProblemError;
use gencrit_core::{Problem, Tolerances, Vector};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const PROBLEM_SCHEMA: &str = "gencrit.problem/1";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub n: usize,
    pub m: usize,
    pub f: String,
    pub g: Vec<String>,
    pub y0: Vec<f64>,
    #[serde(default)]
    pub x_init: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank_rel: Option<f64>,
    pub residual_abs: Option<f64>,
    pub ortho: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Result<Tolerances, LinalgError> {
        Tolerances::new(
            self.rank_rel.unwrap_or(base.rank_rel),
            self.residual_abs.unwrap_or(base.residual_abs),
            self.ortho.unwrap_or(base.ortho),
        )
    }
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed problem file at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema {found:?}, expected {PROBLEM_SCHEMA:?}")]
    Schema { found: String },
    #[error("m = {m} but g has {found} components")]
    ComponentCount { m: usize, found: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid tolerances: {0}")]
    Tolerance(#[from] LinalgError),
    #[error("invalid point {text:?}: {reason}")]
    Point { text: String, reason: String },
    #[error("no starting point: pass --start or set x_init in the problem file")]
    MissingStart,
}

/// A problem file together with what it parses into.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub problem: Problem,
    pub tolerances: Tolerances,
}

impl LoadedProblem {
    pub fn x_init(&self) -> Option<Vector> {
        self.file.x_init.as_deref().map(Vector::from_column_slice)
    }
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<LoadedProblem, InputError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    if file.schema != PROBLEM_SCHEMA {
        return Err(InputError::Schema {
            found: file.schema.clone(),
        });
    }
    if file.m != file.g.len() {
        return Err(InputError::ComponentCount {
            m: file.m,
            found: file.g.len(),
        });
    }
    let problem = Problem::new(file.n, &file.f, &file.g, &file.y0)?;
    if let Some(x) = &file.x_init {
        if x.len() != file.n {
            return Err(ProblemError::DimensionMismatch {
                what: "x_init",
                expected: file.n,
                found: x.len(),
            }
            .into());
        }
    }
    let tolerances = file
        .tolerances
        .unwrap_or_default()
        .apply(Tolerances::default())?;
    Ok(LoadedProblem {
        file,
        problem,
        tolerances,
    })
}

// serde_json reports 1-based lines and columns; the column counts bytes.
fn json_error(text: &str, err: &serde_json::Error) -> InputError {
    let (line, column) = (err.line(), err.column());
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    InputError::Json {
        offset: (line_start + column.saturating_sub(1)).min(text.len()),
        line,
        column,
        message: err.to_string(),
    }
}

/// Parses `"x1,x2,..."` into a point of dimension `n`.
pub fn parse_point(text: &str, n: usize) -> Result<Vector, InputError> {
    let invalid = |reason: String| InputError::Point {
        text: text.to_string(),
        reason,
    };
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(invalid(format!("{s:?} is not a finite number"))),
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != n {
        return Err(invalid(format!(
            "{} coordinates given, the problem has n = {n}",
            values.len()
        )));
    }
    Ok(Vector::from_vec(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"{
  "schema": "gencrit.problem/1",
  "n": 2, "m": 1,
  "f": "(x1-3)^2+(x2-4)^2",
  "g": ["x1^2+x2^2"],
  "y0": [1.0],
  "x_init": [1.0, 0.0]
}"#;

    #[test]
    fn loads_a_valid_file() {
        let loaded = parse_problem(CIRCLE).unwrap();
        assert_eq!(loaded.problem.n(), 2);
        assert_eq!(loaded.x_init().unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(loaded.tolerances, Tolerances::default());
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let text = "{\n  \"schema\": \"gencrit.problem/1\",\n  \"n\": 2,,\n}";
        match parse_problem(text) {
            Err(InputError::Json { offset, line, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(&text[offset..offset + 1], ",");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_files() {
        let wrong_m = CIRCLE.replace("\"m\": 1", "\"m\": 2");
        assert!(matches!(
            parse_problem(&wrong_m),
            Err(InputError::ComponentCount { .. })
        ));
        let wrong_schema = CIRCLE.replace("problem/1", "problem/9");
        assert!(matches!(
            parse_problem(&wrong_schema),
            Err(InputError::Schema { .. })
        ));
        let bad_expr = CIRCLE.replace("x1^2+x2^2", "x1^2+x3^2");
        assert!(matches!(
            parse_problem(&bad_expr),
            Err(InputError::Problem(ProblemError::Parse { .. }))
        ));
        let extra = CIRCLE.replace("\"n\": 2", "\"n\": 2, \"k\": 1");
        assert!(matches!(
            parse_problem(&extra),
            Err(InputError::Json { .. })
        ));
    }

    #[test]
    fn tolerance_overrides_are_validated() {
        let text = CIRCLE.replace(
            "\"y0\"",
            "\"tolerances\": {\"residual_abs\": 1e-30}, \"y0\"",
        );
        assert_eq!(parse_problem(&text).unwrap().tolerances.residual_abs, 1e-30);
        let text = CIRCLE.replace("\"y0\"", "\"tolerances\": {\"rank_rel\": -1}, \"y0\"");
        assert!(matches!(
            parse_problem(&text),
            Err(InputError::Tolerance(_))
        ));
    }

    #[test]
    fn points() {
        assert_eq!(
            parse_point("0.6, 0.8,-0", 3).unwrap().as_slice(),
            &[0.6, 0.8, -0.0]
        );
        assert!(parse_point("0.6", 2).is_err());
        assert!(parse_point("0.6,nan", 2).is_err());
        assert!(parse_point("0.6,,", 3).is_err());
    }
}
