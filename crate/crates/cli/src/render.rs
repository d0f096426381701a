//! Text and JSON renderings of command results.

use std::fmt::Write as _;

use bloch_core::homology::HomologySummary;
use bloch_core::invariants::{format_significant, InvariantReport, FORMAT_VERSION};
use bloch_core::prebloch::bloch_defect;
use bloch_core::triangulation::{BlochInvariant, IdealTriangulation, ShapeStatus, SolveReport};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::Format;

/// A real printed with a fixed number of significant digits.
fn real(x: f64, p: usize) -> Box<RawValue> {
    RawValue::from_string(format_significant(x, p)).expect("formatted reals are valid JSON")
}

#[derive(Serialize)]
struct Cx {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

fn cx(z: Complex64, p: usize) -> Cx {
    Cx {
        re: real(z.re, p),
        im: real(z.im, p),
    }
}

fn cx_text(z: Complex64, p: usize) -> String {
    format!("{} + {}i", format_significant(z.re, p), format_significant(z.im, p))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn status_str(s: ShapeStatus) -> &'static str {
    match s {
        ShapeStatus::Geometric => "geometric",
        ShapeStatus::Degenerate => "degenerate",
    }
}

#[derive(Serialize)]
struct SolveJson<'a> {
    format_version: u32,
    name: &'a str,
    n_tet: usize,
    shapes: Vec<Cx>,
    residual: Box<RawValue>,
    iterations: usize,
    status: &'static str,
}

pub(crate) fn solve(tri: &IdealTriangulation, r: &SolveReport, format: Format, p: usize) -> String {
    let s = &r.assignment;
    match format {
        Format::Json => json(&SolveJson {
            format_version: FORMAT_VERSION,
            name: tri.name(),
            n_tet: tri.n_tet(),
            shapes: s.shapes().iter().map(|&z| cx(z, p)).collect(),
            residual: real(s.residual(), p),
            iterations: r.iterations,
            status: status_str(s.status()),
        }),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "name: {}", tri.name());
            let _ = writeln!(out, "tetrahedra: {}", tri.n_tet());
            for (j, &z) in s.shapes().iter().enumerate() {
                let _ = writeln!(out, "z{j}: {}", cx_text(z, p));
            }
            let _ = writeln!(out, "gluing residual: {}", format_significant(s.residual(), p));
            let _ = writeln!(out, "iterations: {}", r.iterations);
            let _ = writeln!(out, "status: {}", status_str(s.status()));
            out
        }
    }
}

pub(crate) fn report(r: &InvariantReport, format: Format, p: usize) -> String {
    match format {
        Format::Json => {
            let mut s = r.to_json(p);
            s.push('\n');
            s
        }
        Format::Text => r.to_text(p),
    }
}

#[derive(Serialize)]
struct Term {
    coeff: String,
    z: Cx,
}

#[derive(Serialize)]
struct BlochJson<'a> {
    format_version: u32,
    name: &'a str,
    terms: Vec<Term>,
    gluing_residual: Box<RawValue>,
    certificate: bool,
    shift_bound: u32,
    bloch_defect: Box<RawValue>,
    volume: Box<RawValue>,
    borel_regulator: Box<RawValue>,
}

pub(crate) fn bloch(tri: &IdealTriangulation, b: &BlochInvariant, shift_bound: u32, format: Format, p: usize) -> String {
    let defect = bloch_defect(&b.element, shift_bound);
    let e = &b.element;
    match format {
        Format::Json => json(&BlochJson {
            format_version: FORMAT_VERSION,
            name: tri.name(),
            terms: e
                .terms()
                .iter()
                .map(|&(n, z)| Term {
                    coeff: n.to_string(),
                    z: cx(z, p),
                })
                .collect(),
            gluing_residual: real(b.residual, p),
            certificate: b.certificate,
            shift_bound,
            bloch_defect: real(defect, p),
            volume: real(e.volume(), p),
            borel_regulator: real(e.borel_regulator(), p),
        }),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "name: {}", tri.name());
            let terms: Vec<String> = e.terms().iter().map(|&(n, z)| format!("{n}[{}]", cx_text(z, p))).collect();
            let _ = writeln!(out, "element: {}", terms.join(" + "));
            let _ = writeln!(out, "gluing residual: {}", format_significant(b.residual, p));
            let _ = writeln!(out, "certificate: {}", b.certificate);
            let _ = writeln!(out, "bloch defect: {} (shift bound {shift_bound})", format_significant(defect, p));
            let _ = writeln!(out, "volume: {}", format_significant(e.volume(), p));
            let _ = writeln!(out, "borel regulator: {}", format_significant(e.borel_regulator(), p));
            out
        }
    }
}

/// Big integer as a bare JSON number.
fn integer(n: &impl ToString) -> Box<RawValue> {
    RawValue::from_string(n.to_string()).expect("integers are valid JSON")
}

#[derive(Serialize)]
struct GroupJson {
    rank: usize,
    torsion: Vec<Box<RawValue>>,
    text: String,
}

#[derive(Serialize)]
struct HomologyJson {
    format_version: u32,
    groups: Vec<GroupJson>,
    mod2: [usize; 4],
    closed_orientable: bool,
    spin_structures: Option<Box<RawValue>>,
    stable_orientations: Option<Box<RawValue>>,
}

pub(crate) fn homology(h: &HomologySummary, format: Format) -> String {
    let spin = bloch_core::homology::count_spin_structures(h);
    let orient = bloch_core::homology::count_stable_orientations(h);
    match format {
        Format::Json => json(&HomologyJson {
            format_version: FORMAT_VERSION,
            groups: h
                .groups
                .iter()
                .map(|g| GroupJson {
                    rank: g.rank,
                    torsion: g.torsion.iter().map(integer).collect(),
                    text: g.to_string(),
                })
                .collect(),
            mod2: h.mod2_dims(),
            closed_orientable: h.is_closed_orientable(),
            spin_structures: spin.as_ref().map(integer),
            stable_orientations: orient.as_ref().map(integer),
        }),
        Format::Text => {
            let mut out = format!("{h}\n");
            let show = |c: &Option<num_bigint::BigUint>| match c {
                Some(n) => format!("{n}"),
                None => "n/a (not a closed orientable 3-manifold)".to_string(),
            };
            let _ = writeln!(out, "spin structures: {}", show(&spin));
            let _ = writeln!(out, "stable orientations: {}", show(&orient));
            out
        }
    }
}

#[derive(Serialize)]
struct CountJson {
    stable_orientations: Box<RawValue>,
    spin_structures: Box<RawValue>,
}

pub(crate) fn count(n: &impl ToString, spin: &impl ToString, format: Format) -> String {
    match format {
        Format::Json => json(&CountJson {
            stable_orientations: integer(n),
            spin_structures: integer(spin),
        }),
        Format::Text => format!("{}\n", n.to_string()),
    }
}
