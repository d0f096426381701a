use std::f64::consts::PI;

use bloch_core::invariants::{
    check_report, compare_reports, compute_report, measure_cs_lattice, reduce_symmetric, Ambiguity, PipelineError,
    ReportOptions, Stage, CS_AMBIGUITY_MODULUS,
};
use bloch_core::triangulation::{parse_triangulation, GluingRow, IdealTriangulation, ParseMode};
use num_complex::Complex64;

const CATALAN: f64 = 0.915_965_594_177_219_015;

fn load(name: &str) -> IdealTriangulation {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_triangulation(&std::fs::read_to_string(path).unwrap(), ParseMode::Strict).unwrap()
}

fn lattice_distance(x: f64) -> f64 {
    reduce_symmetric(x, CS_AMBIGUITY_MODULUS).abs().min((CS_AMBIGUITY_MODULUS - reduce_symmetric(x, CS_AMBIGUITY_MODULUS).abs()).abs())
}

fn permuted(tri: &IdealTriangulation, perm: &[usize]) -> IdealTriangulation {
    let map = |rows: &[GluingRow]| -> Vec<GluingRow> {
        rows.iter()
            .map(|r| GluingRow {
                a: perm.iter().map(|&j| r.a[j]).collect(),
                b: perm.iter().map(|&j| r.b[j]).collect(),
                c: r.c,
            })
            .collect()
    };
    IdealTriangulation::new(
        tri.name().to_string(),
        tri.n_tet() as i64,
        map(tri.edges()),
        map(tri.cusps()),
    )
    .unwrap()
}

#[test]
fn figure_eight_report() {
    let r = compute_report(&load("figure_eight.json"), &ReportOptions::default()).unwrap();
    assert!((r.volume - 2.029883212819307).abs() < 1e-12);
    assert!((r.borel_regulator - 0.1028350848892818).abs() < 1e-15);
    assert!(lattice_distance(r.cs) < 1e-6, "cs = {}", r.cs);
    assert_eq!(r.ambiguity, Ambiguity::PlusMinusPair);
    assert!(r.ambiguity_note.contains("Q/Z"));
    assert!(r.cusped && r.certificate);
    assert!(check_report(&r).is_empty(), "{:?}", check_report(&r));
}

#[test]
fn octahedron_report() {
    let r = compute_report(&load("octahedron_4tet.json"), &ReportOptions::default()).unwrap();
    assert!((r.volume - 4.0 * CATALAN).abs() < 1e-12);
    assert!((r.volume - 3.663862376708876).abs() < 1e-12);
    assert!(check_report(&r).is_empty());
}

#[test]
fn chern_simons_matches_census_values() {
    // CS values of an independent census computation, in the same sign convention
    for (name, cs) in [
        ("figure_eight.json", 0.0),
        ("m003.json", PI * PI / 2.0),
        ("m009.json", -PI * PI / 24.0),
        ("octahedron_4tet.json", -PI * PI / 4.0),
    ] {
        let r = compute_report(&load(name), &ReportOptions::default()).unwrap();
        assert!(lattice_distance(r.cs - cs) < 1e-9, "{name}: {} vs {cs}", r.cs);
        assert!(check_report(&r).is_empty(), "{name}");
    }
}

#[test]
fn measured_lattice_is_pi_squared_over_six() {
    for name in ["figure_eight.json", "octahedron_4tet.json", "m003.json", "m009.json"] {
        let tri = load(name);
        let m = measure_cs_lattice(&tri, &ReportOptions::default(), 5, 1e-9).unwrap();
        let step = m.step.unwrap_or_else(|| panic!("{name}: {:?}", m.values));
        assert!((step - CS_AMBIGUITY_MODULUS).abs() < 1e-9, "{name}: {step}");
        assert!(m.values.len() >= 3, "{name}");
    }
    // the figure-eight value 0 is attained by some labeling
    let m = measure_cs_lattice(&load("figure_eight.json"), &ReportOptions::default(), 5, 1e-9).unwrap();
    assert!(m.values.iter().any(|v| v.abs() < 1e-9), "{:?}", m.values);
}

#[test]
fn relabeling_preserves_volume() {
    let tri = load("m009.json");
    let base = compute_report(&tri, &ReportOptions::default()).unwrap();
    for j in 0..tri.n_tet() {
        let once = tri.relabel(j);
        assert_eq!(once.relabel(j).relabel(j), tri);
        let r = compute_report(&once, &ReportOptions::default()).unwrap();
        assert!((r.volume - base.volume).abs() < 1e-12);
        assert!(lattice_distance(r.cs - base.cs) < 1e-9);
        assert!(r.bloch_defect < 1e-8);
    }
}

#[test]
fn unsolvable_fixture_fails_in_solve_stage() {
    let err = compute_report(&load("inconsistent.json"), &ReportOptions::default()).unwrap_err();
    assert_eq!(err.stage(), Stage::Solve);
    assert!(err.to_string().starts_with("solve: no convergence"), "{err}");
}

#[test]
fn small_flattening_box_fails_in_flattening_stage() {
    let opts = ReportOptions {
        flattening_bound: 0,
        ..ReportOptions::default()
    };
    let err = compute_report(&load("octahedron_4tet.json"), &opts).unwrap_err();
    assert!(matches!(err, PipelineError::Flattening(_)));
    assert!(err.to_string().contains("larger bound"));
}

#[test]
fn report_comparisons() {
    let a = compute_report(&load("figure_eight.json"), &ReportOptions::default()).unwrap();
    let b = compute_report(&load("octahedron_4tet.json"), &ReportOptions::default()).unwrap();
    assert!(compare_reports(&a, &a, 1e-12).is_empty());
    let diff = compare_reports(&b, &a, 1e-9);
    let vol = diff.get("volume").unwrap();
    assert!((vol.delta - 1.633979163889569).abs() < 1e-9);
}

#[test]
fn multi_start_volumes_agree() {
    let tri = load("m009.json");
    let base = compute_report(&tri, &ReportOptions::default()).unwrap();
    for init in [
        vec![Complex64::new(0.4, 1.2), Complex64::new(0.4, 0.4), Complex64::new(0.6, 1.0)],
        vec![Complex64::new(0.5, 1.0); 3],
        vec![Complex64::new(0.2, 0.9), Complex64::new(0.3, 0.2), Complex64::new(0.7, 1.5)],
    ] {
        let opts = ReportOptions {
            initial: Some(init),
            ..ReportOptions::default()
        };
        let r = compute_report(&tri, &opts).unwrap();
        assert!((r.volume - base.volume).abs() < 1e-9);
        assert!(compare_reports(&base, &r, 1e-9).is_empty());
    }
}

#[test]
fn tetrahedron_order_does_not_matter() {
    for (name, perm) in [
        ("figure_eight.json", vec![1, 0]),
        ("octahedron_4tet.json", vec![2, 0, 3, 1]),
        ("m009.json", vec![2, 1, 0]),
    ] {
        let tri = load(name);
        let a = compute_report(&tri, &ReportOptions::default()).unwrap().normalized();
        let b = compute_report(&permuted(&tri, &perm), &ReportOptions::default()).unwrap().normalized();
        assert_eq!(a.to_json(10), b.to_json(10), "{name}");
    }
}

#[test]
fn reports_are_deterministic() {
    let tri = load("m009.json");
    let a = compute_report(&tri, &ReportOptions::default()).unwrap().to_json(17);
    let b = compute_report(&tri, &ReportOptions::default()).unwrap().to_json(17);
    assert_eq!(a, b);
}

#[test]
fn json_layout() {
    let r = compute_report(&load("figure_eight.json"), &ReportOptions::default()).unwrap();
    let text = r.to_json(15);
    let keys = [
        "format_version",
        "name",
        "n_tet",
        "shapes",
        "gluing_residual",
        "volume",
        "borel_regulator",
        "\"mu\"",
        "\"cs\"",
        "cs_reduced",
        "cs_ambiguity",
        "flattening",
        "bloch_defect",
        "certificate",
        "cusped",
        "\"ambiguity\"",
        "ambiguity_note",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["volume"].to_string(), "2.02988321281931");
    assert_eq!(v["ambiguity"], "plus_minus_pair");
    assert_eq!(r.to_json(6).matches("2.02988").count(), 1);
}
