//! The end-to-end pipeline from a triangulation to an invariant report.
//!
//! Stages run in order: solve the gluing equations, form the Bloch invariant,
//! evaluate the volume and the Borel regulator, find a flattening, and
//! evaluate the mu regulator, whose real part gives the Chern-Simons value.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::dilog::{Flattening, RogersOffset};
use crate::prebloch::{bloch_defect, mu_regulator_terms, FlattenedTerm, PreBlochError, REGULATOR_NORMALIZATION};
use crate::triangulation::{
    bloch_invariant, flattenings_search, solve_shapes_with, FlatteningError, IdealTriangulation, ShapeAssignment,
    SolveError, SolverOptions, TriangulationError,
};

pub const FORMAT_VERSION: u32 = 1;

/// Chern-Simons values from different flattenings and vertex labelings of
/// a triangulation differ by multiples of this constant, see
/// [`measure_cs_lattice`]. It is `1/12` in units of the mu regulator.
pub const CS_AMBIGUITY_MODULUS: f64 = PI * PI / 6.0;

pub const DEFAULT_PRECISION: usize = 15;
pub const MIN_PRECISION: usize = 6;
pub const MAX_PRECISION: usize = 30;

const CS_AMBIGUITY_NOTE: &str = "cs depends on the chosen flattening and vertex labeling; it is defined modulo pi^2/6";
const PLUS_MINUS_NOTE: &str =
    "cusped: two classes gamma(M)+ and gamma(M)-, each selected from a Q/Z family of lifts";
const UNIQUE_NOTE: &str = "closed: a single class";

/// Name of the pipeline step that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Solve,
    Invariant,
    Regulator,
    Flattening,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Parse => "parse",
            Stage::Solve => "solve",
            Stage::Invariant => "invariant",
            Stage::Regulator => "regulator",
            Stage::Flattening => "flattening",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse: {0}")]
    Parse(#[source] TriangulationError),
    #[error("solve: {0}")]
    Solve(#[source] SolveError),
    #[error("invariant: {0}")]
    Invariant(#[source] TriangulationError),
    #[error("flattening: {0}")]
    Flattening(#[source] FlatteningError),
    #[error("regulator: {0}")]
    Regulator(#[source] PreBlochError),
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Parse(_) => Stage::Parse,
            PipelineError::Solve(_) => Stage::Solve,
            PipelineError::Invariant(_) => Stage::Invariant,
            PipelineError::Flattening(_) => Stage::Flattening,
            PipelineError::Regulator(_) => Stage::Regulator,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub solver: SolverOptions,
    pub initial: Option<Vec<Complex64>>,
    /// Box size for the flattening search.
    pub flattening_bound: u32,
    /// Argument-shift bound for the Bloch-group membership residual.
    pub shift_bound: u32,
    pub rogers_offset: RogersOffset,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            solver: SolverOptions::default(),
            initial: None,
            flattening_bound: 4,
            shift_bound: 4,
            rogers_offset: RogersOffset::None,
        }
    }
}

/// Which lifts of the Bloch invariant the report stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ambiguity {
    Unique,
    PlusMinusPair,
    QModZFamily,
}

impl Ambiguity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ambiguity::Unique => "unique",
            Ambiguity::PlusMinusPair => "plus_minus_pair",
            Ambiguity::QModZFamily => "q_mod_z_family",
        }
    }
}

impl fmt::Display for Ambiguity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsAmbiguity {
    pub modulus: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub name: String,
    pub n_tet: usize,
    pub shapes: Vec<Complex64>,
    pub gluing_residual: f64,
    pub volume: f64,
    pub borel_regulator: f64,
    pub mu: Complex64,
    pub cs: f64,
    /// `cs` reduced into `(-modulus/2, modulus/2]`.
    pub cs_reduced: f64,
    pub cs_ambiguity: CsAmbiguity,
    /// Per-tetrahedron flattening used for `mu`.
    pub flattening: Vec<Flattening>,
    pub bloch_defect: f64,
    pub certificate: bool,
    pub cusped: bool,
    pub ambiguity: Ambiguity,
    pub ambiguity_note: String,
}

/// Representative of `x` modulo `m` in `(-m/2, m/2]`.
pub fn reduce_symmetric(x: f64, m: f64) -> f64 {
    let r = x - m * (x / m).round();
    if r <= -m / 2.0 {
        r + m
    } else {
        r
    }
}

fn mu_for(s: &ShapeAssignment, flats: &[Flattening], offset: RogersOffset) -> Result<Complex64, PreBlochError> {
    let terms: Vec<FlattenedTerm> = s
        .shapes()
        .iter()
        .zip(flats)
        .map(|(&shape, &flattening)| FlattenedTerm {
            coeff: 1,
            shape,
            flattening,
        })
        .collect();
    mu_regulator_terms(&terms, offset)
}

pub fn compute_report(tri: &IdealTriangulation, opts: &ReportOptions) -> Result<InvariantReport, PipelineError> {
    let solved = solve_shapes_with(tri, opts.initial.as_deref(), &opts.solver).map_err(PipelineError::Solve)?;
    let s = solved.assignment;
    let beta = bloch_invariant(tri, &s).map_err(PipelineError::Invariant)?;
    let volume = beta.element.volume();
    let borel_regulator = beta.element.borel_regulator();
    let defect = bloch_defect(&beta.element, opts.shift_bound);

    let flattening = flattenings_search(tri, &s, opts.flattening_bound)
        .map_err(PipelineError::Flattening)?
        .swap_remove(0);
    let mu = mu_for(&s, &flattening, opts.rogers_offset).map_err(PipelineError::Regulator)?;
    let cs = -REGULATOR_NORMALIZATION * mu.re;

    let cusped = !tri.cusps().is_empty();
    let (ambiguity, note) = if cusped {
        (Ambiguity::PlusMinusPair, PLUS_MINUS_NOTE)
    } else {
        (Ambiguity::Unique, UNIQUE_NOTE)
    };
    Ok(InvariantReport {
        name: tri.name().to_string(),
        n_tet: tri.n_tet(),
        shapes: s.shapes().to_vec(),
        gluing_residual: s.residual(),
        volume,
        borel_regulator,
        mu,
        cs,
        cs_reduced: reduce_symmetric(cs, CS_AMBIGUITY_MODULUS),
        cs_ambiguity: CsAmbiguity {
            modulus: CS_AMBIGUITY_MODULUS,
            note: CS_AMBIGUITY_NOTE.to_string(),
        },
        flattening,
        bloch_defect: defect,
        certificate: beta.certificate,
        cusped,
        ambiguity,
        ambiguity_note: note.to_string(),
    })
}

// Values within rounding of -m/2 map to m/2 so that reduced values compare
// equal across runs.
fn reduce_stable(x: f64, m: f64) -> f64 {
    let r = reduce_symmetric(x, m);
    if (r + m / 2.0).abs() < 1e-9 * m.max(1.0) {
        m / 2.0
    } else {
        r
    }
}

/// Largest tetrahedron count for which [`measure_cs_lattice`] sweeps every
/// labeling; larger triangulations relabel one tetrahedron at a time.
pub const FULL_SWEEP_MAX_TETRAHEDRA: usize = 6;

/// Chern-Simons values of one triangulation over vertex labelings and
/// flattenings.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMeasurement {
    /// Distinct values, sorted.
    pub values: Vec<f64>,
    /// Smallest spacing between values, when every difference is an integer
    /// multiple of it.
    pub step: Option<f64>,
}

/// Measures the ambiguity of `cs` by re-solving every relabeling of the
/// tetrahedra (see [`IdealTriangulation::relabel`]) and evaluating the first
/// `flattenings_per_labeling` flattenings of each.
pub fn measure_cs_lattice(
    tri: &IdealTriangulation,
    opts: &ReportOptions,
    flattenings_per_labeling: usize,
    tol: f64,
) -> Result<LatticeMeasurement, PipelineError> {
    let n = tri.n_tet();
    let labelings: Vec<Vec<u32>> = if n <= FULL_SWEEP_MAX_TETRAHEDRA {
        (0..3usize.pow(n as u32))
            .map(|code| (0..n).map(|j| (code / 3usize.pow(j as u32) % 3) as u32).collect())
            .collect()
    } else {
        std::iter::once(vec![0; n])
            .chain((0..n).flat_map(|j| {
                (1..3).map(move |k| {
                    let mut v = vec![0; n];
                    v[j] = k;
                    v
                })
            }))
            .collect()
    };
    let mut cs = Vec::new();
    for turns in labelings {
        let mut t = tri.clone();
        for (j, &k) in turns.iter().enumerate() {
            for _ in 0..k {
                t = t.relabel(j);
            }
        }
        let s = solve_shapes_with(&t, None, &opts.solver)
            .map_err(PipelineError::Solve)?
            .assignment;
        let flats = flattenings_search(&t, &s, opts.flattening_bound).map_err(PipelineError::Flattening)?;
        for f in flats.iter().take(flattenings_per_labeling) {
            let mu = mu_for(&s, f, opts.rogers_offset).map_err(PipelineError::Regulator)?;
            cs.push(-REGULATOR_NORMALIZATION * mu.re);
        }
    }
    cs.sort_by(f64::total_cmp);
    cs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let step = cs.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    let step = step.filter(|&d| {
        cs.iter().all(|c| {
            let k = (c - cs[0]) / d;
            (k - k.round()).abs() * d <= tol
        })
    });
    Ok(LatticeMeasurement { values: cs, step })
}

/// Self-consistency findings; empty for a sound report.
pub fn check_report(r: &InvariantReport) -> Vec<String> {
    let mut out = Vec::new();
    if r.borel_regulator * REGULATOR_NORMALIZATION != r.volume {
        out.push("borel_regulator * 2 pi^2 != volume".to_string());
    }
    if r.certificate && (r.mu.im * REGULATOR_NORMALIZATION - r.volume).abs() > 1e-9 {
        out.push(format!(
            "Im(mu) * 2 pi^2 = {} differs from volume {}",
            r.mu.im * REGULATOR_NORMALIZATION,
            r.volume
        ));
    }
    if (r.cs + REGULATOR_NORMALIZATION * r.mu.re).abs() > 1e-12 * r.cs.abs().max(1.0) {
        out.push("cs != -2 pi^2 Re(mu)".to_string());
    }
    out
}

impl InvariantReport {
    /// A representative independent of tetrahedron order and of the chosen
    /// flattening: shapes sorted, `cs` and `Re(mu)` reduced modulo the
    /// ambiguity, and values within `1e-12` of zero set to zero.
    pub fn normalized(&self) -> InvariantReport {
        let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
        let mut pairs: Vec<(Complex64, Flattening)> =
            self.shapes.iter().copied().zip(self.flattening.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        let mu_modulus = CS_AMBIGUITY_MODULUS / REGULATOR_NORMALIZATION;
        let cs = snap(reduce_stable(self.cs, CS_AMBIGUITY_MODULUS));
        InvariantReport {
            shapes: pairs.iter().map(|p| Complex64::new(snap(p.0.re), snap(p.0.im))).collect(),
            flattening: Vec::new(),
            gluing_residual: 0.0,
            mu: Complex64::new(snap(reduce_stable(self.mu.re, mu_modulus)), self.mu.im),
            cs,
            cs_reduced: cs,
            bloch_defect: snap(self.bloch_defect),
            ..self.clone()
        }
    }

    /// Report JSON with a fixed key order; reals carry `precision`
    /// significant digits.
    pub fn to_json(&self, precision: usize) -> String {
        serde_json::to_string_pretty(&JsonReport { r: self, p: precision }).expect("report serializes")
    }

    pub fn to_text(&self, precision: usize) -> String {
        let num = |x: f64| format_significant(x, precision);
        let cx = |z: Complex64| format!("{} + {}i", num(z.re), num(z.im));
        let mut s = String::new();
        let _ = writeln!(s, "name: {}", self.name);
        let _ = writeln!(s, "tetrahedra: {}", self.n_tet);
        for (j, z) in self.shapes.iter().enumerate() {
            let f = self.flattening.get(j).copied().unwrap_or(Flattening::ZERO);
            let _ = writeln!(s, "z{j}: {}  (p, q) = ({}, {})", cx(*z), f.p, f.q);
        }
        let _ = writeln!(s, "gluing residual: {}", num(self.gluing_residual));
        let _ = writeln!(s, "volume: {}", num(self.volume));
        let _ = writeln!(s, "borel regulator: {}", num(self.borel_regulator));
        let _ = writeln!(s, "mu: {}", cx(self.mu));
        let _ = writeln!(
            s,
            "cs: {} (reduced {}, modulo {})",
            num(self.cs),
            num(self.cs_reduced),
            num(self.cs_ambiguity.modulus)
        );
        let _ = writeln!(s, "bloch defect: {}", num(self.bloch_defect));
        let _ = writeln!(s, "certificate: {}", self.certificate);
        let _ = writeln!(s, "cusped: {}", self.cusped);
        let _ = writeln!(s, "ambiguity: {} ({})", self.ambiguity, self.ambiguity_note);
        s
    }
}

/// `x` with `digits` significant digits, in plain decimal notation for
/// moderate exponents and scientific notation otherwise. Valid JSON.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{mantissa}e{exp}")
    }
}

struct Num(f64, usize);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_significant(self.0, self.1)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

struct Cx(Complex64, usize);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &Num(self.0.re, self.1))?;
        st.serialize_field("im", &Num(self.0.im, self.1))?;
        st.end()
    }
}

struct JsonReport<'a> {
    r: &'a InvariantReport,
    p: usize,
}

impl Serialize for JsonReport<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (r, p) = (self.r, self.p);
        let mut st = s.serialize_struct("InvariantReport", 17)?;
        st.serialize_field("format_version", &FORMAT_VERSION)?;
        st.serialize_field("name", &r.name)?;
        st.serialize_field("n_tet", &r.n_tet)?;
        let shapes: Vec<Cx> = r.shapes.iter().map(|&z| Cx(z, p)).collect();
        st.serialize_field("shapes", &shapes)?;
        st.serialize_field("gluing_residual", &Num(r.gluing_residual, p))?;
        st.serialize_field("volume", &Num(r.volume, p))?;
        st.serialize_field("borel_regulator", &Num(r.borel_regulator, p))?;
        st.serialize_field("mu", &Cx(r.mu, p))?;
        st.serialize_field("cs", &Num(r.cs, p))?;
        st.serialize_field("cs_reduced", &Num(r.cs_reduced, p))?;
        st.serialize_field("cs_ambiguity", &AmbiguityJson(&r.cs_ambiguity, p))?;
        let flats: Vec<[i64; 2]> = r.flattening.iter().map(|f| [f.p, f.q]).collect();
        st.serialize_field("flattening", &flats)?;
        st.serialize_field("bloch_defect", &Num(r.bloch_defect, p))?;
        st.serialize_field("certificate", &r.certificate)?;
        st.serialize_field("cusped", &r.cusped)?;
        st.serialize_field("ambiguity", r.ambiguity.as_str())?;
        st.serialize_field("ambiguity_note", &r.ambiguity_note)?;
        st.end()
    }
}

struct AmbiguityJson<'a>(&'a CsAmbiguity, usize);

impl Serialize for AmbiguityJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CsAmbiguity", 2)?;
        st.serialize_field("modulus", &Num(self.0.modulus, self.1))?;
        st.serialize_field("note", &self.0.note)?;
        st.end()
    }
}

/// One field on which two reports disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDiff {
    pub field: &'static str,
    pub left: String,
    pub right: String,
    /// Numerical distance, or `f64::INFINITY` for non-numeric fields.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDiff {
    pub entries: Vec<FieldDiff>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, field: &str) -> Option<&FieldDiff> {
        self.entries.iter().find(|d| d.field == field)
    }
}

impl fmt::Display for ReportDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.entries {
            writeln!(f, "{}: {} vs {} (delta {:e})", d.field, d.left, d.right, d.delta)?;
        }
        Ok(())
    }
}

/// Field-by-field comparison. Shapes are compared as sorted lists and `cs`
/// modulo [`CS_AMBIGUITY_MODULUS`].
pub fn compare_reports(a: &InvariantReport, b: &InvariantReport, tol: f64) -> ReportDiff {
    let mut entries = Vec::new();
    let mut exact = |field: &'static str, l: String, r: String| {
        if l != r {
            entries.push(FieldDiff {
                field,
                left: l,
                right: r,
                delta: f64::INFINITY,
            });
        }
    };
    exact("name", a.name.clone(), b.name.clone());
    exact("n_tet", a.n_tet.to_string(), b.n_tet.to_string());
    exact("certificate", a.certificate.to_string(), b.certificate.to_string());
    exact("cusped", a.cusped.to_string(), b.cusped.to_string());
    exact("ambiguity", a.ambiguity.to_string(), b.ambiguity.to_string());

    let mut numeric = |field: &'static str, l: f64, r: f64, delta: f64| {
        if !(delta <= tol) {
            entries.push(FieldDiff {
                field,
                left: l.to_string(),
                right: r.to_string(),
                delta,
            });
        }
    };
    numeric("volume", a.volume, b.volume, (a.volume - b.volume).abs());
    numeric(
        "borel_regulator",
        a.borel_regulator,
        b.borel_regulator,
        (a.borel_regulator - b.borel_regulator).abs(),
    );
    numeric(
        "cs",
        a.cs,
        b.cs,
        reduce_symmetric(a.cs - b.cs, CS_AMBIGUITY_MODULUS).abs(),
    );
    numeric("bloch_defect", a.bloch_defect, b.bloch_defect, (a.bloch_defect - b.bloch_defect).abs());
    let sorted = |v: &[Complex64]| {
        let mut v = v.to_vec();
        v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        v
    };
    let (sa, sb) = (sorted(&a.shapes), sorted(&b.shapes));
    let shape_delta = if sa.len() == sb.len() {
        sa.iter().zip(&sb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    if !(shape_delta <= tol) {
        entries.push(FieldDiff {
            field: "shapes",
            left: format!("{sa:?}"),
            right: format!("{sb:?}"),
            delta: shape_delta,
        });
    }
    ReportDiff { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(2.029883212819307, 6), "2.02988");
        assert_eq!(format_significant(-0.4112335167120566, 6), "-0.411234");
        assert_eq!(format_significant(1234567.0, 6), "1.23457e6");
        assert_eq!(format_significant(2.5e-16, 6), "2.50000e-16");
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(123.0, 6), "123.000");
        for x in [2.5e-16, 1234567.0, -3.3e-7, 0.1] {
            let s = format_significant(x, 15);
            assert!(serde_json::from_str::<f64>(&s).is_ok(), "{s}");
        }
    }

    #[test]
    fn symmetric_reduction() {
        let m = CS_AMBIGUITY_MODULUS;
        assert!(reduce_symmetric(-m, m).abs() < 1e-15);
        assert!((reduce_symmetric(0.4 * m + 3.0 * m, m) - 0.4 * m).abs() < 1e-12);
        assert_eq!(reduce_symmetric(-0.5 * m, m), 0.5 * m);
    }

    #[test]
    fn stage_names() {
        let names: Vec<String> = [Stage::Parse, Stage::Solve, Stage::Invariant, Stage::Regulator, Stage::Flattening]
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(names, ["parse", "solve", "invariant", "regulator", "flattening"]);
    }
}
