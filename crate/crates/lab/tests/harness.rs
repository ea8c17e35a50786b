use std::collections::BTreeMap;

use symlab::config::{CenterMode, EntropySettings, ExperimentConfig, InequalitySettings, RandomWords, ScanSettings};
use symlab::harness::*;
use symlab_core::dynamics::{self, MapFamily, OrbitCensus, SearchConfig};
use symlab_core::entropy;
use symlab_core::linalg::{self, Mat};
use symlab_core::symplectic::symplectic_defect;
use symlab_core::{cocycle, SymplecticMatrix};

fn cat() -> MapFamily {
    MapFamily::cat()
}

fn cat_rot() -> MapFamily {
    MapFamily::product(vec![cat(), MapFamily::Rotation { theta: 1.0 }])
}

fn small_entropy() -> EntropySettings {
    EntropySettings { eps: vec![0.1, 0.2], n: (1..=6).collect(), budget: 3000 }
}

#[test]
fn parallel_search_matches_sequential() {
    let cfg = SearchConfig { seeds_per_axis: 20, ..SearchConfig::default() };
    let map = MapFamily::standard(1.3);
    let seq = dynamics::find_periodic_orbits(&map, 3, &cfg).unwrap();
    for threads in [1, 3] {
        let par = find_orbits(&map, 3, &cfg, &pool(threads).unwrap()).unwrap();
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.points, b.points);
            assert_eq!(a.monodromy, b.monodromy);
        }
    }
}

#[test]
fn parallel_entropy_matches_sequential() {
    let s = small_entropy();
    let seq = entropy::estimate_entropy(&cat(), &s.eps, &s.n, s.budget, 5).unwrap();
    for threads in [1, 2] {
        assert_eq!(estimate_entropy(&cat(), &s, 5, &pool(threads).unwrap()).unwrap(), seq);
    }
}

#[test]
fn verdict_is_asymmetric() {
    // far below S, but the width covers the gap
    assert_eq!(verdict(0.5, Some(0.6), Some(1.0), 0.05), Verdict::Inconclusive);
    assert_eq!(verdict(0.5, Some(0.1), Some(1.0), 0.05), Verdict::ViolationFlag);
    // capped estimates never flag
    assert_eq!(verdict(0.0, None, Some(5.0), 0.05), Verdict::Inconclusive);
    assert_eq!(verdict(0.96, Some(0.0), Some(1.0), 0.05), Verdict::Consistent);
    assert_eq!(verdict(1.0, Some(0.0), None, 0.05), Verdict::Inconclusive);
    // boundary of the band
    assert_eq!(verdict(0.951, Some(0.0), Some(1.0), 0.05), Verdict::Consistent);
    assert_eq!(verdict(0.949, Some(0.01), Some(1.0), 0.05), Verdict::Inconclusive);
}

#[test]
fn gap_cut_picks_largest_ratio() {
    let diag = |l: &[f64]| {
        let d = l.len();
        let mut m = Mat::zeros(2 * d, 2 * d);
        for (i, &x) in l.iter().enumerate() {
            m[(i, i)] = x;
            m[(d + i, d + i)] = 1.0 / x;
        }
        SymplecticMatrix::new(m).unwrap()
    };
    assert_eq!(gap_cut(&diag(&[8.0, 1.5])).unwrap(), Some(1));
    assert_eq!(gap_cut(&diag(&[8.0, 7.5])).unwrap(), None);
    assert_eq!(gap_cut(&diag(&[9.0, 2.0, 1.9])).unwrap(), Some(1));
    assert_eq!(gap_cut(&diag(&[9.0, 8.8, 1.9])).unwrap(), Some(2));
    assert_eq!(gap_cut(&diag(&[3.0])).unwrap(), None);
}

#[test]
fn cat_rotation_center_is_the_rotation_plane() {
    let settings = InequalitySettings { max_period: 4, center: CenterMode::Gap, tolerance: 0.05 };
    let search = SearchConfig { seeds_per_axis: 8, ..SearchConfig::default() };
    let rep = run_inequality(&cat_rot(), &settings, &search, &small_entropy(), 3, 16, &pool(1).unwrap()).unwrap();
    assert!(!rep.orbits_used.is_empty());
    assert!(rep.orbits_used.iter().all(|o| o.center_dim == 2 && o.certificate.is_some()));
    assert!(rep.s_statistic.unwrap().abs() < 1e-9);
    assert!(rep.entropy_estimate >= 0.0);
    assert_eq!(rep.verdict, Verdict::Consistent);
    assert!(rep.exact.is_none());
}

#[test]
fn cat_full_center_statistic() {
    let settings = InequalitySettings { max_period: 3, center: CenterMode::Full, tolerance: 0.05 };
    let search = SearchConfig { seeds_per_axis: 16, ..SearchConfig::default() };
    let rep = run_inequality(&cat(), &settings, &search, &small_entropy(), 3, 16, &pool(1).unwrap()).unwrap();
    assert!((rep.s_statistic.unwrap() - 0.9624236501192069).abs() < 1e-9);
    assert_ne!(rep.verdict, Verdict::ViolationFlag);
    let exact = rep.exact.unwrap();
    assert!(exact.holds && (exact.entropy - exact.top_exponent).abs() < 1e-12);
    assert!(rep.note.contains("not a verdict"));
}

#[test]
fn no_orbits_flags_empty_statistic() {
    // irrational translation has no periodic points
    let map = MapFamily::Translation { shift: vec![0.5f64.sqrt(), 0.3f64.sqrt()] };
    let settings = InequalitySettings { max_period: 2, center: CenterMode::Full, tolerance: 0.05 };
    let search = SearchConfig { seeds_per_axis: 4, ..SearchConfig::default() };
    let rep = run_inequality(&map, &settings, &search, &small_entropy(), 1, 4, &pool(1).unwrap()).unwrap();
    assert!(rep.empty_s && rep.s_statistic.is_none() && rep.margin.is_none());
    assert_eq!(rep.verdict, Verdict::Inconclusive);
}

#[test]
fn exact_check_on_toral_matrices() {
    let m = Mat::from_row_slice(2, 2, &[3.0, 1.0, 2.0, 1.0]);
    let c = exact_check(&m).unwrap();
    assert!(c.holds);
    let four = linalg::direct_sum(&m, &Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]));
    let c = exact_check(&four).unwrap();
    assert!(c.holds && c.entropy > c.top_exponent);
}

fn census(counts: &[(&str, usize)], elliptic: usize, m_elliptic: usize) -> OrbitCensus {
    OrbitCensus {
        orbits: counts.iter().map(|c| c.1).sum(),
        counts: counts.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        elliptic_points: elliptic,
        m_elliptic_points: m_elliptic,
        elliptic_covering_radius: None,
        m_elliptic_covering_radius: None,
        probe_per_axis: 4,
    }
}

#[test]
fn signature_decision_tree() {
    let cert = |k| DominationCert { k, l: 1, margin: 0.3 };
    let hyp = census(&[("HyperbolicDiagonalizable", 3)], 0, 0);
    assert_eq!(signature(&hyp, Some(&cert(2)), 2), "Anosov");
    assert_eq!(signature(&hyp, Some(&cert(1)), 2), "Unresolved");
    assert_eq!(signature(&hyp, None, 2), "Unresolved");
    let me = census(&[("MElliptic(1)", 2), ("Hyperbolic", 1)], 0, 2);
    assert_eq!(signature(&me, Some(&cert(1)), 2), "PH(1)+MElliptic(1)");
    assert_eq!(signature(&me, Some(&cert(2)), 2), "Unresolved");
    let ell = census(&[("TotallyElliptic", 1), ("MElliptic(1)", 2)], 1, 3);
    assert_eq!(signature(&ell, None, 2), "Elliptic");
    assert_eq!(signature(&ell, Some(&cert(1)), 2), "PH(1)+MElliptic(1)");
    let me2 = census(&[("MElliptic(2)", 1)], 0, 1);
    assert_eq!(signature(&me2, Some(&cert(1)), 3), "PH(2)+MElliptic(2)");
}

#[test]
fn scan_sorts_cells_and_is_thread_independent() {
    let text = r#"{"experiment": "scan", "seed": 1, "scan": {"cells": [
        {"name": "b", "map": {"kind": "toral", "params": {"matrix": [[2, 1], [1, 1]]}}},
        {"name": "a", "map": {"kind": "coupled_standard", "params": {"k": [0.5], "c": 0.0}}}],
        "search": {"seeds_per_axis": 12}}}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let s: &ScanSettings = &cfg.scan;
    let one = run_trichotomy_scan(s, &pool(1).unwrap()).unwrap();
    let two = run_trichotomy_scan(s, &pool(2).unwrap()).unwrap();
    assert_eq!(one.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    assert_eq!(one[1].signature, "Anosov");
    assert_eq!(one[0].signature, "Elliptic");
    assert_eq!(symlab::io::to_json(&one), symlab::io::to_json(&two));
}

#[test]
fn random_words_are_hyperbolic_and_reproducible() {
    let spec = RandomWords { count: 6, max_len: 5, ..RandomWords::default() };
    let a = random_cases(&spec, 9).unwrap();
    let b = random_cases(&spec, 9).unwrap();
    assert_eq!(a.len(), b.len());
    assert_eq!(a.iter().filter(|c| !c.contaminated).count(), 6);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.word, y.word);
        let cls = symlab_core::spectrum::classify_point(&cocycle::monodromy(&x.word), 1e-6, 1e-6).unwrap();
        assert!(cls.tag.is_hyperbolic());
        assert!(x.word.len() <= 6);
    }
}

#[test]
fn plane_rotation_is_symplectic() {
    for d in 1..=3 {
        let r = plane_rotation(d, 0.7);
        assert!(symplectic_defect(r.matrix()).unwrap() < 1e-15);
        assert_eq!(r.dim(), 2 * d);
    }
}

#[test]
fn snake_family_fit_and_scan() {
    let cfg = ExperimentConfig::from_json(r#"{"experiment": "snake", "seed": 0}"#).unwrap();
    let rep = run_snake_family(&cfg.snake, &pool(2).unwrap()).unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.rows.iter().all(|r| r.horseshoe.is_full_shift()));
    assert!(rep.norm_fit.spread < 4.0);
    assert!(rep.norm_fit.margins.iter().all(|&m| m > 0.0));
    assert!(!rep.never_holds);
    let j = rep.scan.threshold_log2.unwrap() as usize;
    assert!(rep.scan.rows[j - 1..].iter().all(|r| r.holds));
}
