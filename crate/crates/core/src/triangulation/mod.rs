//! Ideal triangulations given by gluing-equation exponents, the shape solver,
//! the Bloch invariant of a solution, and flattenings.
//!
//! Every row `k` reads `sum_j a_kj log z_j + b_kj log(1 - z_j) + c_k pi i`.
//! Edge rows must equal `2 pi i` and cusp rows `0`, with principal logs.

mod flattening;
mod solver;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::dilog::{self, principal_log};
use crate::prebloch::{PreBlochElement, PreBlochError};

pub use flattening::{flattening_targets, flattenings_search, is_flattening, FlatteningError, MAX_FLATTENINGS};
pub use solver::{solve_shapes, solve_shapes_with, SolveError, SolveReport, SolverOptions};

/// Largest max-norm gluing defect for which a Bloch invariant is certified.
pub const CERTIFICATE_THRESHOLD: f64 = 1e-9;

const TOP_LEVEL_FIELDS: [&str; 4] = ["name", "n_tet", "edges", "cusps"];
const ROW_FIELDS: [&str; 3] = ["a", "b", "c"];

#[derive(Debug, Error)]
pub enum TriangulationError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("invalid triangulation: {0}")]
    Invariant(String),
    #[error("shape {index} is {shape}, which lies on {{0, 1}}")]
    SingularShape { index: usize, shape: Complex64 },
    #[error("expected {expected} shapes, got {got}")]
    ShapeCount { expected: usize, got: usize },
    #[error("gluing defect {residual:e} exceeds the certificate threshold {threshold:e}")]
    ResidualTooLarge { residual: f64, threshold: f64 },
    #[error("shapes {indices:?} are flat or negatively oriented")]
    Degenerate { indices: Vec<usize> },
    #[error(transparent)]
    PreBloch(#[from] PreBlochError),
}

/// Whether unknown JSON fields are an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct GluingRow {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub c: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealTriangulation {
    name: String,
    n_tet: usize,
    edges: Vec<GluingRow>,
    cusps: Vec<GluingRow>,
    warnings: Vec<String>,
}

#[derive(Deserialize)]
struct TriangulationFile {
    name: String,
    n_tet: i64,
    edges: Vec<GluingRow>,
    cusps: Vec<GluingRow>,
}

fn reject_unknown(obj: &Value, allowed: &[&str], prefix: &str) -> Result<(), TriangulationError> {
    if let Value::Object(map) = obj {
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(TriangulationError::Schema {
                field: format!("{prefix}{key}"),
                message: format!("unknown field, expected one of {allowed:?}"),
            });
        }
    }
    Ok(())
}

fn check_unknown_fields(v: &Value) -> Result<(), TriangulationError> {
    reject_unknown(v, &TOP_LEVEL_FIELDS, "")?;
    for list in ["edges", "cusps"] {
        if let Some(Value::Array(rows)) = v.get(list) {
            for (i, row) in rows.iter().enumerate() {
                reject_unknown(row, &ROW_FIELDS, &format!("{list}[{i}]."))?;
            }
        }
    }
    Ok(())
}

/// Parses and validates the JSON triangulation format.
pub fn parse_triangulation(text: &str, mode: ParseMode) -> Result<IdealTriangulation, TriangulationError> {
    let value: Value = serde_json::from_str(text).map_err(|e| TriangulationError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if mode == ParseMode::Strict {
        check_unknown_fields(&value)?;
    }
    let file: TriangulationFile = serde_path_to_error::deserialize(&value).map_err(|e| {
        let field = e.path().to_string();
        TriangulationError::Schema {
            field,
            message: e.into_inner().to_string(),
        }
    })?;
    IdealTriangulation::new(file.name, file.n_tet, file.edges, file.cusps)
}

impl IdealTriangulation {
    pub fn new(name: String, n_tet: i64, edges: Vec<GluingRow>, cusps: Vec<GluingRow>) -> Result<Self, TriangulationError> {
        if n_tet <= 0 {
            return Err(TriangulationError::Invariant(format!("n_tet must be positive, got {n_tet}")));
        }
        let n = n_tet as usize;
        if edges.is_empty() {
            return Err(TriangulationError::Schema {
                field: "edges".into(),
                message: "at least one edge row is required".into(),
            });
        }
        for (list, rows) in [("edges", &edges), ("cusps", &cusps)] {
            for (i, row) in rows.iter().enumerate() {
                for (v, vec) in [("a", &row.a), ("b", &row.b)] {
                    if vec.len() != n {
                        return Err(TriangulationError::Schema {
                            field: format!("{list}[{i}].{v}"),
                            message: format!("length {} does not match n_tet = {n}", vec.len()),
                        });
                    }
                }
            }
        }
        let mut warnings = Vec::new();
        if edges.len() != n {
            let msg = format!(
                "{name}: {} edge rows for {n} tetrahedra; a cusped triangulation has as many edges as tetrahedra",
                edges.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(IdealTriangulation {
            name,
            n_tet: n,
            edges,
            cusps,
            warnings,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_tet(&self) -> usize {
        self.n_tet
    }

    pub fn edges(&self) -> &[GluingRow] {
        &self.edges
    }

    pub fn cusps(&self) -> &[GluingRow] {
        &self.cusps
    }

    /// Non-fatal validation findings, such as an unexpected edge count.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Edge rows followed by cusp rows.
    pub fn rows(&self) -> impl Iterator<Item = (&GluingRow, bool)> {
        self.edges
            .iter()
            .map(|r| (r, true))
            .chain(self.cusps.iter().map(|r| (r, false)))
    }

    pub fn n_rows(&self) -> usize {
        self.edges.len() + self.cusps.len()
    }

    /// The same triangulation with tetrahedron `j` described by the shape
    /// `1 / (1 - z_j)` of the next edge instead of `z_j`.
    ///
    /// For `Im z > 0` the principal logs satisfy `log z = log(1 - z') -
    /// log z' + pi i` and `log(1 - z) = -log z'`, which gives the new row
    /// exponents exactly. Three relabelings return the original rows.
    pub fn relabel(&self, j: usize) -> IdealTriangulation {
        let map = |rows: &[GluingRow]| -> Vec<GluingRow> {
            rows.iter()
                .map(|r| {
                    let mut r = r.clone();
                    let (a, b) = (r.a[j], r.b[j]);
                    r.a[j] = -a - b;
                    r.b[j] = a;
                    r.c += a;
                    r
                })
                .collect()
        };
        IdealTriangulation {
            name: self.name.clone(),
            n_tet: self.n_tet,
            edges: map(&self.edges),
            cusps: map(&self.cusps),
            warnings: self.warnings.clone(),
        }
    }
}

/// Principal `(log z, log(1 - z))` for every shape.
fn log_pairs(shapes: &[Complex64]) -> Result<Vec<(Complex64, Complex64)>, TriangulationError> {
    shapes
        .iter()
        .enumerate()
        .map(|(index, &z)| {
            if dilog::is_singular(z) || !z.re.is_finite() || !z.im.is_finite() {
                return Err(TriangulationError::SingularShape { index, shape: z });
            }
            Ok((principal_log(z), principal_log(1.0 - z)))
        })
        .collect()
}

/// `sum_j a_kj log z_j + b_kj log(1 - z_j)` for every row, without constants.
fn row_log_sums(tri: &IdealTriangulation, logs: &[(Complex64, Complex64)]) -> Vec<Complex64> {
    tri.rows()
        .map(|(row, _)| {
            logs.iter()
                .zip(row.a.iter().zip(&row.b))
                .map(|(&(lz, l1z), (&a, &b))| a as f64 * lz + b as f64 * l1z)
                .sum()
        })
        .collect()
}

fn defect_from_logs(tri: &IdealTriangulation, logs: &[(Complex64, Complex64)]) -> Vec<Complex64> {
    row_log_sums(tri, logs)
        .into_iter()
        .zip(tri.rows())
        .map(|(s, (row, is_edge))| {
            let target = if is_edge { 2.0 * PI } else { 0.0 };
            s + Complex64::new(0.0, row.c as f64 * PI - target)
        })
        .collect()
}

fn check_count(tri: &IdealTriangulation, shapes: &[Complex64]) -> Result<(), TriangulationError> {
    if shapes.len() != tri.n_tet {
        return Err(TriangulationError::ShapeCount {
            expected: tri.n_tet,
            got: shapes.len(),
        });
    }
    Ok(())
}

/// Residual of every edge row, then every cusp row.
pub fn gluing_defect(tri: &IdealTriangulation, shapes: &[Complex64]) -> Result<Vec<Complex64>, TriangulationError> {
    check_count(tri, shapes)?;
    Ok(defect_from_logs(tri, &log_pairs(shapes)?))
}

/// Derivative of [`gluing_defect`] with respect to `log z_j`, using
/// `d log(1 - z) / d log z = -z / (1 - z)`.
pub fn gluing_jacobian(tri: &IdealTriangulation, shapes: &[Complex64]) -> Result<DMatrix<Complex64>, TriangulationError> {
    check_count(tri, shapes)?;
    log_pairs(shapes)?;
    let dlog1 : Vec<Complex64> = shapes.iter().map(|&z| -z / (1.0 - z)).collect();
    let rows: Vec<&GluingRow> = tri.rows().map(|(r, _)| r).collect();
    Ok(DMatrix::from_fn(rows.len(), tri.n_tet, |k, j| {
        rows[k].a[j] as f64 + rows[k].b[j] as f64 * dlog1[j]
    }))
}

pub(crate) fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeStatus {
    /// Every shape has positive imaginary part.
    Geometric,
    /// Some tetrahedron is flat or negatively oriented.
    Degenerate,
}

/// Shapes together with the logarithms and residual they were evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeAssignment {
    shapes: Vec<Complex64>,
    log_shapes: Vec<(Complex64, Complex64)>,
    residual: f64,
}

impl ShapeAssignment {
    /// Evaluates `shapes` against `tri`, recording the max-norm defect.
    pub fn evaluate(tri: &IdealTriangulation, shapes: Vec<Complex64>) -> Result<Self, TriangulationError> {
        check_count(tri, &shapes)?;
        let log_shapes = log_pairs(&shapes)?;
        let residual = max_norm(&defect_from_logs(tri, &log_shapes));
        Ok(ShapeAssignment {
            shapes,
            log_shapes,
            residual,
        })
    }

    pub fn shapes(&self) -> &[Complex64] {
        &self.shapes
    }

    pub fn log_shapes(&self) -> &[(Complex64, Complex64)] {
        &self.log_shapes
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn degenerate_indices(&self) -> Vec<usize> {
        (0..self.shapes.len()).filter(|&j| self.shapes[j].im <= 0.0).collect()
    }

    pub fn status(&self) -> ShapeStatus {
        if self.degenerate_indices().is_empty() {
            ShapeStatus::Geometric
        } else {
            ShapeStatus::Degenerate
        }
    }
}

/// A Bloch invariant together with its membership certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochInvariant {
    pub element: PreBlochElement,
    /// The element lies in the Bloch group because the shapes solve the
    /// gluing equations to within [`CERTIFICATE_THRESHOLD`].
    pub certificate: bool,
    pub residual: f64,
}

/// `sum_j [z_j]` for a certified geometric solution.
pub fn bloch_invariant(tri: &IdealTriangulation, s: &ShapeAssignment) -> Result<BlochInvariant, TriangulationError> {
    check_count(tri, &s.shapes)?;
    if !(s.residual < CERTIFICATE_THRESHOLD) {
        return Err(TriangulationError::ResidualTooLarge {
            residual: s.residual,
            threshold: CERTIFICATE_THRESHOLD,
        });
    }
    let degenerate = s.degenerate_indices();
    if !degenerate.is_empty() {
        return Err(TriangulationError::Degenerate { indices: degenerate });
    }
    let terms: Vec<(i64, Complex64)> = s.shapes.iter().map(|&z| (1, z)).collect();
    Ok(BlochInvariant {
        element: PreBlochElement::from_integer_terms(&terms)?,
        certificate: true,
        residual: s.residual,
    })
}
