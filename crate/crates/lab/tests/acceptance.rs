//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset: `cargo test --release --test acceptance -- 3 6`.

use std::process::Command;
use std::time::{Duration, Instant};

use symlab::config::{CenterMode, EntropySettings, InequalitySettings, RandomWords, ScanCell, ScanSettings, SnakeSettings};
use symlab::harness::{self, Verdict};
use symlab_core::dynamics::{self, MapFamily, SearchConfig};
use symlab_core::linalg::{self, Mat};
use symlab_core::snake::{self, LinearModel, SnakeParams};
use symlab_core::spectrum;
use symlab_core::symplectic::{self, random_symplectic, symplectic_defect};
use symlab_core::Subspace;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lagrangian(d: usize, seed: u64) -> Subspace {
    let s = random_symplectic(d, seed, 0.5).unwrap();
    let sym = s.matrix().view((0, 0), (d, d)).into_owned();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut m = Mat::zeros(2 * d, d);
    m.view_mut((0, 0), (d, d)).fill_with_identity();
    m.view_mut((d, 0), (d, d)).copy_from(&sym);
    Subspace::new(m).unwrap()
}

fn criterion_1() -> Outcome {
    let (mut defect, mut ident, mut fails, mut norm_viol) = (0.0_f64, 0.0_f64, 0, 0);
    for i in 0..1000u64 {
        let d = 1 + (i % 3) as usize;
        let e = lagrangian(d, i);
        let f = Subspace::new(linalg::jmat(d) * e.basis()).unwrap();
        let g = random_symplectic(d, 5000 + i, 1.0).unwrap();
        let mut a = g.matrix().view((0, 0), (d, d)).into_owned();
        a = (&a + a.transpose()) * (0.4 * (i % 7) as f64 / 6.0);
        let w = Subspace::new(e.basis() + f.basis() * &a).unwrap();
        match symplectic::align_isotropic(&w, &e, &f) {
            Ok(al) => {
                let b = al.map.matrix();
                defect = defect.max(symplectic_defect(b).unwrap());
                ident = ident.max(w.image(b).unwrap().distance(&e));
                ident = ident.max(linalg::max_abs(&(b * f.basis() - f.basis())));
                if al.deviation > al.graph_norm + 1e-12 {
                    norm_viol += 1;
                }
            }
            Err(_) => fails += 1,
        }
    }
    for i in 0..1000u64 {
        let d = 2 + (i % 2) as usize;
        let k = 1 + (i % (d as u64 - 1)) as usize;
        let idx: Vec<usize> = (0..k).chain(d..d + k).collect();
        let r = random_symplectic(d, 9000 + i, 1.0).unwrap();
        let w = Subspace::coordinate(2 * d, &idx).unwrap().image(r.matrix()).unwrap();
        let blk = random_symplectic(k, 20_000 + i, 1.5).unwrap();
        match symplectic::extend_block(blk.matrix(), &w) {
            Ok(ext) => {
                let b = ext.map.matrix();
                defect = defect.max(symplectic_defect(b).unwrap());
                let s = symplectic::symplectic_basis(&w).unwrap();
                let scale = linalg::max_abs(&s).max(1.0) * linalg::max_abs(blk.matrix()).max(1.0);
                ident = ident.max(linalg::max_abs(&(b * &s - &s * blk.matrix())) / scale);
                let wo = symplectic::symplectic_orthogonal(&w);
                ident = ident.max(linalg::max_abs(&(b * wo.basis() - wo.basis())));
            }
            Err(_) => fails += 1,
        }
    }
    outcome(
        fails == 0 && defect <= 1e-8 && ident <= 1e-8 && norm_viol == 0,
        format!("2000 instances, {fails} errors, worst defect {defect:.1e}, worst identity {ident:.1e}, {norm_viol} norm violations"),
    )
}

fn criterion_2() -> Outcome {
    let (mut recip, mut anti) = (0.0_f64, 0.0_f64);
    for i in 0..1000u64 {
        let d = 1 + (i % 4) as usize;
        let a = random_symplectic(d, 40_000 + i, 2.0).unwrap();
        let b = random_symplectic(d, 50_000 + i, 1.0).unwrap();
        let m = a.compose(&b);
        let values = spectrum::eigenvalues(m.matrix()).unwrap();
        for v in &values {
            let inv = v.inv();
            let err = values.iter().map(|u| (u - inv).norm()).fold(f64::INFINITY, f64::min);
            recip = recip.max(err / inv.norm().max(1.0));
        }
        let e = spectrum::lyapunov_exponents_periodic(&m, 1).unwrap();
        for k in 0..e.len() {
            anti = anti.max((e[k] + e[e.len() - 1 - k]).abs());
        }
    }
    outcome(recip <= 1e-6 && anti <= 1e-6, format!("1000 matrices in dims 2..8, reciprocity {recip:.1e}, antisymmetry {anti:.1e}"))
}

fn criterion_3() -> Outcome {
    let s = EntropySettings { eps: vec![0.05, 0.1, 0.2], n: (1..=14).collect(), budget: 100_000 };
    let rep = harness::estimate_entropy(&MapFamily::cat(), &s, 2024, &harness::pool(1).unwrap()).unwrap();
    let exact = 0.9624236501192069;
    let rel = (rep.estimate - exact).abs() / exact;
    outcome(rel < 0.25, format!("cat map estimate {:.4} vs {exact:.4} (relative error {:.1}%)", rep.estimate, 100.0 * rel))
}

fn brute_crossings(params: &SnakeParams) -> usize {
    let map = snake::SnakeMap::new(params, 0).unwrap();
    let steps = 1_000_000;
    let mut count = 0;
    let mut prev = map.profile(-params.r).0;
    for i in 1..=steps {
        let s = -params.r + 2.0 * params.r * i as f64 / steps as f64;
        let g = map.profile(s).0;
        if g == 0.0 || (g > 0.0) != (prev > 0.0) && prev != 0.0 {
            count += 1;
        }
        prev = g;
    }
    count
}

fn criterion_4() -> Outcome {
    let model = LinearModel::diagonal(&[2.0], 1, (-0.1, 0.1)).unwrap();
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for n in [2u64, 4, 8, 16] {
        let t0 = Instant::now();
        let params = SnakeParams::new(1, 1, 0.1, n, 0.1).unwrap();
        let h = snake::build_horseshoe(&model, &params).unwrap();
        let cyl_ok = h.cylinder_counts.iter().enumerate().all(|(j, &c)| c == n.pow(j as u32 + 1));
        let ent_ok = (h.entropy - (n as f64).ln() / h.t as f64).abs() < 1e-12;
        let brute = brute_crossings(&params);
        let full = h.full_crossings.iter().all(|&c| c == n as usize) && h.components.iter().all(|&c| c == n as usize);
        if !(full && cyl_ok && ent_ok && h.cylinder_counts.len() == 5 && brute == h.crossings.count && h.crossings.count == n as usize) {
            bad.push(n);
        }
        slowest = slowest.max(t0.elapsed());
    }
    outcome(bad.is_empty() && slowest < Duration::from_secs(60), format!("N in {{2,4,8,16}}, failing N {bad:?}, slowest run {slowest:.2?}"))
}

fn criterion_5() -> Outcome {
    let s = SnakeSettings::default();
    let rep = harness::run_snake_family(&s, &harness::pool(1).unwrap()).unwrap();
    let fit = &rep.norm_fit;
    let holds_after = rep.scan.threshold_log2.map(|j| rep.scan.rows[j as usize - 1..].iter().all(|r| r.holds));
    outcome(
        fit.spread < 4.0 && fit.margins.iter().all(|&m| m > 0.0) && holds_after == Some(true) && s.k == 10,
        format!(
            "K1 in [{:.4}, {:.4}] (spread {:.3}), integer K1 = {}, inequality holds for N >= 2^{} up to 2^{}",
            fit.k1_min,
            fit.k1_max,
            fit.spread,
            fit.k1,
            rep.scan.threshold_log2.map_or("none".into(), |j| j.to_string()),
            s.max_log2
        ),
    )
}

fn criterion_6() -> Outcome {
    let settings = symlab::config::DiagonalizeSettings {
        words: Vec::new(),
        transition: None,
        random: Some(RandomWords { count: 100, max_len: 20, half_dims: vec![1, 2], radius: 1.5, contaminate: true }),
        eps: 0.05,
    };
    let rows = harness::run_diagonalize(&settings, 606, &harness::pool(1).unwrap()).unwrap();
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passes(0.05)).map(|r| r.label.as_str()).collect();
    let dirty = rows.iter().filter(|r| r.contaminated).count();
    let worst = rows.iter().filter_map(|r| r.report.as_ref()).map(|r| r.invariance_defect).fold(0.0, f64::max);
    outcome(
        failed.is_empty() && rows.len() - dirty == 100,
        format!("{} words ({} contaminated), failures {:?}, worst invariance defect {worst:.1e}", rows.len(), dirty, failed),
    )
}

fn criterion_7() -> Outcome {
    let map = MapFamily::cat();
    let orbits = harness::find_orbits(&map, 4, &SearchConfig::default(), &harness::pool(1).unwrap()).unwrap();
    let a = map.toral_matrix().unwrap();
    let found: Vec<usize> = (1..=4).map(|n| dynamics::fixed_point_count(&orbits, n)).collect();
    let expected: Vec<u64> = (1..=4).map(|n| dynamics::lefschetz_count(&a, n)).collect();
    let ok = expected == [1, 5, 16, 45] && found.iter().zip(&expected).all(|(&f, &e)| f as f64 >= 0.95 * e as f64);
    outcome(ok, format!("Fix(f^n) found {found:?}, expected {expected:?}"))
}

fn cat_json() -> MapFamily {
    MapFamily::cat()
}

fn criterion_8() -> Outcome {
    let settings = ScanSettings {
        cells: vec![
            ScanCell { name: "1 cat+cat".into(), map: MapFamily::product(vec![cat_json(), cat_json()]) },
            ScanCell { name: "2 cat+rotation".into(), map: MapFamily::product(vec![cat_json(), MapFamily::Rotation { theta: 1.0 }]) },
            ScanCell { name: "3 std+std".into(), map: MapFamily::product(vec![MapFamily::standard(0.5), MapFamily::standard(0.5)]) },
        ],
        ..ScanSettings::default()
    };
    let cells = harness::run_trichotomy_scan(&settings, &harness::pool(1).unwrap()).unwrap();
    let got: Vec<&str> = cells.iter().map(|c| c.signature.as_str()).collect();
    outcome(got == ["Anosov", "PH(1)+MElliptic(1)", "Elliptic"], format!("signatures {got:?}"))
}

fn criterion_9() -> Outcome {
    let toral = |m: &[&[i64]]| MapFamily::Toral { matrix: m.iter().map(|r| r.to_vec()).collect() };
    let families = vec![
        ("cat", MapFamily::cat(), CenterMode::Full),
        ("cat", MapFamily::cat(), CenterMode::Gap),
        ("[[3,1],[2,1]]", toral(&[&[3, 1], &[2, 1]]), CenterMode::Gap),
        ("cat+cat", MapFamily::product(vec![MapFamily::cat(), MapFamily::cat()]), CenterMode::Gap),
        ("cat+[[3,1],[2,1]]", MapFamily::product(vec![MapFamily::cat(), toral(&[&[3, 1], &[2, 1]])]), CenterMode::Gap),
        ("cat+[[3,1],[2,1]] full", MapFamily::product(vec![MapFamily::cat(), toral(&[&[3, 1], &[2, 1]])]), CenterMode::Full),
        ("cat+rotation", MapFamily::product(vec![MapFamily::cat(), MapFamily::Rotation { theta: 1.0 }]), CenterMode::Gap),
    ];
    let pool = harness::pool(1).unwrap();
    let ent = EntropySettings { eps: vec![0.1, 0.2], n: (1..=8).collect(), budget: 20_000 };
    let search = SearchConfig { seeds_per_axis: 12, ..SearchConfig::default() };
    let mut flagged = Vec::new();
    for (name, map, center) in &families {
        let s = InequalitySettings { max_period: 3, center: *center, tolerance: 0.05 };
        let rep = harness::run_inequality(map, &s, &search, &ent, 9, 16, &pool).unwrap();
        if rep.verdict == Verdict::ViolationFlag || rep.exact.as_ref().is_some_and(|e| !e.holds) {
            flagged.push(*name);
        }
    }
    let coupled = MapFamily::CoupledStandard { k: vec![6.0, 6.0], c: 0.5 };
    let s = InequalitySettings { max_period: 6, center: CenterMode::Gap, tolerance: 0.05 };
    let search = SearchConfig { seeds_per_axis: 12, ..SearchConfig::default() };
    let ent = EntropySettings { eps: vec![0.1, 0.2], n: (1..=6).collect(), budget: 20_000 };
    let rep = harness::run_inequality(&coupled, &s, &search, &ent, 11, 16, &pool).unwrap();
    let populated = rep.orbits_found > 0 && rep.s_statistic.is_some() && rep.margin.is_some() && !rep.rates.is_empty();
    outcome(
        flagged.is_empty() && populated && rep.verdict != Verdict::ViolationFlag,
        format!(
            "{} linear/product runs, flagged {flagged:?}; coupled standard: {} orbits, S = {:.3}, estimate {:.3}, verdict {:?}",
            families.len(),
            rep.orbits_found,
            rep.s_statistic.unwrap_or(f64::NAN),
            rep.entropy_estimate,
            rep.verdict
        ),
    )
}

const DETERMINISM_CONFIGS: &[(&str, &str)] = &[
    ("snake", r#"{"experiment": "snake", "seed": 1}"#),
    (
        "entropy",
        r#"{"experiment": "entropy", "seed": 2, "map": {"kind": "coupled_standard", "params": {"k": [2.0], "c": 0.0}},
            "entropy": {"eps": [0.05, 0.1, 0.2], "n": [1, 2, 3, 4, 5, 6, 7, 8], "budget": 5000}}"#,
    ),
    (
        "orbits",
        r#"{"experiment": "orbits", "seed": 3, "map": {"kind": "coupled_standard", "params": {"k": [1.5, 2.5], "c": 0.3}},
            "orbits": {"max_period": 2, "search": {"seeds_per_axis": 10}, "probe_per_axis": 3}}"#,
    ),
    (
        "scan",
        r#"{"experiment": "scan", "seed": 4, "scan": {"cells": [
            {"name": "b", "map": {"kind": "toral", "params": {"matrix": [[2, 1], [1, 1]]}}},
            {"name": "a", "map": {"kind": "coupled_standard", "params": {"k": [0.5, 0.5], "c": 0.0}}}]}}"#,
    ),
    ("diagonalize", r#"{"experiment": "diagonalize", "seed": 5, "diagonalize": {"random": {"count": 8, "max_len": 8}}}"#),
    (
        "inequality",
        r#"{"experiment": "inequality", "seed": 6, "map": {"kind": "coupled_standard", "params": {"k": [6.0, 6.0], "c": 0.5}},
            "orbits": {"search": {"seeds_per_axis": 6}}, "inequality": {"max_period": 3},
            "entropy": {"eps": [0.1, 0.2], "n": [1, 2, 3, 4], "budget": 3000}}"#,
    ),
];

fn run_cli(cmd: &str, cfg: &str, threads: usize, out: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let path = out.join("config.json");
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(&path, cfg).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_symlab"))
        .args([cmd, "--config", path.to_str().unwrap(), "--threads", &threads.to_string(), "--out", out.join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{cmd}: {}", String::from_utf8_lossy(&status.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out.join("o"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut compared = 0;
    for (cmd, cfg) in DETERMINISM_CONFIGS {
        let one = run_cli(cmd, cfg, 1, &dir.path().join(format!("{cmd}-1")));
        let four = run_cli(cmd, cfg, 4, &dir.path().join(format!("{cmd}-4")));
        compared += one.len();
        if one != four || one.is_empty() {
            differing.push(*cmd);
        }
    }
    outcome(differing.is_empty(), format!("{compared} files from {} experiments, --threads 1 vs 4, differing {differing:?}", DETERMINISM_CONFIGS.len()))
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "symplectic constructions", 30, criterion_1),
    (2, "spectral symmetry", 30, criterion_2),
    (3, "cat map entropy", 120, criterion_3),
    (4, "snake horseshoe", 240, criterion_4),
    (5, "norm bound and closing inequality", 60, criterion_5),
    (6, "cocycle diagonalization", 120, criterion_6),
    (7, "periodic point counts", 60, criterion_7),
    (8, "signature scan", 180, criterion_8),
    (9, "inequality report", 300, criterion_9),
    (10, "thread determinism", 300, criterion_10),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for &(id, name, limit, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let out = run();
        let took = t0.elapsed();
        let pass = out.pass && took < Duration::from_secs(limit);
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s, limit {limit}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
