//! `report-batch`: one report file per input, computed in parallel, and a
//! CSV summary assembled in input order.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use bloch_core::invariants::{compute_report, format_significant, InvariantReport};
use rayon::prelude::*;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::{load_triangulation, render, CliConfig, Failure, Format};

pub const SUMMARY_FILE: &str = "summary.csv";

const COLUMNS: [&str; 9] = [
    "name",
    "n_tet",
    "volume",
    "borel_regulator",
    "cs",
    "cs_ambiguity",
    "bloch_defect",
    "certificate",
    "ambiguity",
];

/// Replaces `path` by `bytes` in one rename, so readers never see a partial
/// file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let wrap = |source| Failure::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

/// `<stem>.json` per input; repeated stems get a numeric suffix.
fn output_names(inputs: &[PathBuf], out_dir: &Path) -> Vec<PathBuf> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    inputs
        .iter()
        .map(|input| {
            let stem = input.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            let file = if *n == 1 { format!("{stem}.json") } else { format!("{stem}-{n}.json") };
            out_dir.join(file)
        })
        .collect()
}

fn process(cfg: &CliConfig, input: &Path, output: &Path) -> Result<InvariantReport, Failure> {
    let tri = load_triangulation(input, cfg.parse_mode())?;
    let report = compute_report(&tri, &cfg.report_options())?;
    write_atomic(output, render::report(&report, Format::Json, cfg.precision()).as_bytes())?;
    Ok(report)
}

fn summary_csv(reports: &[&InvariantReport], p: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let num = |x: f64| format_significant(x, p);
    w.write_record(COLUMNS).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.n_tet.to_string(),
            num(r.volume),
            num(r.borel_regulator),
            num(r.cs),
            num(r.cs_ambiguity.modulus),
            num(r.bloch_defect),
            r.certificate.to_string(),
            r.ambiguity.as_str().to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct Entry {
    input: String,
    output: Option<String>,
    error: Option<String>,
}

pub(crate) fn run_batch(
    cfg: &CliConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        let _ = writeln!(err, "bloch: output: cannot create {}: {e}", out_dir.display());
        return 1;
    }
    let outputs = output_names(inputs, out_dir);
    let results: Vec<Result<InvariantReport, Failure>> = inputs
        .par_iter()
        .zip(&outputs)
        .map(|(input, output)| process(cfg, input, output))
        .collect();

    let mut entries = Vec::with_capacity(inputs.len());
    let mut ok = Vec::new();
    for ((input, output), result) in inputs.iter().zip(&outputs).zip(&results) {
        let input = input.display().to_string();
        match result {
            Ok(r) => {
                ok.push(r);
                entries.push(Entry {
                    input,
                    output: Some(output.display().to_string()),
                    error: None,
                });
            }
            Err(e) => {
                let _ = writeln!(err, "bloch: {input}: {e}");
                entries.push(Entry {
                    input,
                    output: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let summary = out_dir.join(SUMMARY_FILE);
    let mut failed = entries.iter().any(|e| e.error.is_some());
    if let Err(e) = write_atomic(&summary, &summary_csv(&ok, cfg.precision())) {
        let _ = writeln!(err, "bloch: {e}");
        failed = true;
    }

    let text = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&entries).expect("entries serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            for e in &entries {
                match &e.output {
                    Some(o) => s.push_str(&format!("ok {} -> {o}\n", e.input)),
                    None => s.push_str(&format!("failed {}\n", e.input)),
                }
            }
            s.push_str(&format!("summary: {}\n", summary.display()));
            s
        }
    };
    if out.write_all(text.as_bytes()).is_err() {
        failed = true;
    }
    i32::from(failed)
}
