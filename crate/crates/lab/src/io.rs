//! File formats. CSV files carry a header row; JSON keys follow struct
//! field order (maps are sorted), so equal inputs give equal bytes.

use std::path::Path;

use serde::Serialize;
use symlab_core::linalg::Mat;
use symlab_core::symplectic::MatrixRows;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Shortest round-trip decimal, with an exponent for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Space-separated shortest round-trip decimals.
pub fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

/// Builds a CSV document from a header and stringified rows.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 input")
}

/// Row-major CSV, no header.
pub fn matrix_csv(m: &Mat) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| num(m[(r, c)])).collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 input")
}

/// Parses a row-major CSV matrix.
pub fn matrix_from_csv(text: &str) -> Result<Mat, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec.iter().map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    MatrixRows { dim: rows.len(), rows }.to_matrix().map_err(|e| e.to_string())
}

pub fn matrix_json(m: &Mat) -> String {
    to_json(&MatrixRows::from(m))
}

/// Writes each `(name, contents)` pair under `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

use crate::harness::{CellReport, ClassifyRow, DiagRow, InequalityReport, OrbitsReport, SnakeFamilyReport};
use symlab_core::entropy::EntropyReport;
use symlab_core::spectrum::SpectralTag;

fn opt<T: std::fmt::Debug>(x: Option<T>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn tag_m(tag: &SpectralTag) -> String {
    match tag {
        SpectralTag::MElliptic(m) => m.to_string(),
        _ => String::new(),
    }
}

pub fn classify_csv(rows: &[ClassifyRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let c = &r.classification;
            vec![
                r.index.to_string(),
                c.tag.name().into(),
                tag_m(&c.tag),
                c.unit_circle_count.to_string(),
                c.simple.to_string(),
                num(r.defect),
                join_floats(&c.exponents),
            ]
        })
        .collect();
    csv_string(&["index", "tag", "m", "unit_count", "simple", "defect", "exponents"], &body)
}

pub fn orbits_csv(rep: &OrbitsReport) -> String {
    let body: Vec<Vec<String>> = rep
        .orbits
        .iter()
        .map(|o| {
            vec![
                o.period.to_string(),
                join_floats(&o.points[0]),
                o.classification.tag.name().into(),
                tag_m(&o.classification.tag),
                join_floats(&o.lyapunov),
            ]
        })
        .collect();
    csv_string(&["period", "point", "tag", "m", "lyapunov"], &body)
}

pub fn entropy_csv(rep: &EntropyReport) -> String {
    let mut body = Vec::new();
    for (i, eps) in rep.eps_grid.iter().enumerate() {
        for (j, n) in rep.n_grid.iter().enumerate() {
            body.push(vec![num(*eps), n.to_string(), rep.counts[i][j].to_string(), rep.raw_counts[i][j].to_string()]);
        }
    }
    csv_string(&["eps", "n", "count", "raw_count"], &body)
}

/// gnuplot data: one block per ε (`index i`), columns `n log N`.
pub fn entropy_dat(rep: &EntropyReport) -> String {
    let mut s = String::new();
    for (i, eps) in rep.eps_grid.iter().enumerate() {
        s.push_str(&format!("# eps {eps} rate {}\n", rep.rates[i]));
        for (j, n) in rep.n_grid.iter().enumerate() {
            s.push_str(&format!("{n} {}\n", (rep.counts[i][j].max(1) as f64).ln()));
        }
        s.push_str("\n\n");
    }
    s
}

pub fn snake_csv(rep: &SnakeFamilyReport) -> String {
    let body: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            let h = &r.horseshoe;
            vec![
                r.n.to_string(),
                num(r.delta),
                num(r.amplitude),
                h.t.to_string(),
                h.predicted_t.to_string(),
                h.crossings.count.to_string(),
                h.is_full_shift().to_string(),
                h.cylinder_counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
                num(h.entropy),
                num(r.bound.k1),
                num(r.bound.margin(rep.norm_fit.k1 as f64)),
                num(r.comparison.margin),
            ]
        })
        .collect();
    csv_string(
        &["n", "delta", "amplitude", "t", "predicted_t", "crossings", "full_shift", "cylinders", "entropy", "k1", "bound_margin", "comparison_margin"],
        &body,
    )
}

/// gnuplot data for the inequality scan: `log2 N, lhs, min_term − slack`.
pub fn snake_scan_dat(rep: &SnakeFamilyReport) -> String {
    let mut s = String::from("# log2N lhs rhs t\n");
    for (j, r) in rep.scan.rows.iter().enumerate() {
        s.push_str(&format!("{} {} {} {}\n", j + 1, r.lhs, r.min_term - r.slack, r.t));
    }
    s
}

pub fn scan_csv(cells: &[CellReport]) -> String {
    let body: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.map.clone(),
                c.orbits.to_string(),
                c.signature.clone(),
                opt(c.certified.as_ref().map(|d| d.k)),
                opt(c.certified.as_ref().map(|d| d.l)),
                opt(c.certified.as_ref().map(|d| d.margin)),
                c.census.elliptic_points.to_string(),
                c.census.m_elliptic_points.to_string(),
                opt(c.census.elliptic_covering_radius),
                opt(c.census.m_elliptic_covering_radius),
            ]
        })
        .collect();
    csv_string(
        &["name", "map", "orbits", "signature", "strong_dim", "l", "margin", "elliptic_points", "m_elliptic_points", "elliptic_radius", "m_elliptic_radius"],
        &body,
    )
}

pub fn diagonalize_csv(rows: &[DiagRow], eps: f64) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let rep = r.report.as_ref();
            vec![
                r.label.clone(),
                r.half_dim.to_string(),
                r.length.to_string(),
                r.contaminated.to_string(),
                r.passes(eps).to_string(),
                opt(r.simple_real),
                opt(rep.map(|x| x.top_gap)),
                opt(rep.map(|x| x.invariance_defect)),
                opt(rep.map(|x| x.letter_distance)),
                opt(rep.map(|x| x.period)),
                opt(r.output_length),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    csv_string(
        &["label", "half_dim", "length", "contaminated", "passes", "simple_real", "top_gap", "invariance_defect", "letter_distance", "period", "output_length", "error"],
        &body,
    )
}

pub fn inequality_csv(r: &InequalityReport) -> String {
    let verdict = serde_json::to_value(r.verdict).expect("serializes");
    let row = vec![
        r.map.clone(),
        r.max_period.to_string(),
        num(r.entropy_estimate),
        opt(r.confidence_width),
        opt(r.s_statistic),
        opt(r.margin),
        verdict.as_str().unwrap_or_default().to_string(),
        r.orbits_found.to_string(),
        r.orbits_used.len().to_string(),
    ];
    csv_string(&["map", "max_period", "estimate", "confidence_width", "s", "margin", "verdict", "orbits_found", "orbits_used"], &[row])
}
