use std::collections::BTreeMap;

use proptest::prelude::*;
use symlab_core::cocycle::*;
use symlab_core::linalg::{self, Mat};
use symlab_core::spectrum::{self, eigenvalues};
use symlab_core::symplectic::{self, random_symplectic, standard_form};
use symlab_core::{DVector, Error, Extended, SymplecticMatrix};

fn sm(m: Mat) -> SymplecticMatrix {
    SymplecticMatrix::new(m).unwrap()
}

fn diag(v: &[f64]) -> SymplecticMatrix {
    sm(Mat::from_diagonal(&DVector::from_vec(v.to_vec())))
}

fn rot(th: f64) -> SymplecticMatrix {
    sm(linalg::rotation(th))
}

fn cat() -> SymplecticMatrix {
    sm(Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]))
}

fn word(ls: &[SymplecticMatrix]) -> Word {
    Word::new(ls.to_vec()).unwrap()
}

const PI: f64 = core::f64::consts::PI;

#[test]
fn monodromy_examples() {
    let w = Word::constant(SymplecticMatrix::identity(2), 5).unwrap();
    assert_eq!(monodromy(&w).matrix(), &Mat::identity(4, 4));
    let j = sm(standard_form(1).unwrap().j);
    assert_eq!(monodromy(&word(&[j.clone(), j])).matrix(), &(-Mat::identity(2, 2)));
    // letter 0 is applied first: rotation after the scaling
    let a = diag(&[2.0, 0.5]);
    let r = rot(PI / 2.0);
    let m = monodromy(&word(&[a, r]));
    let c = (PI / 2.0).cos();
    // hand product [[c,-1],[1,c]]·diag(2,1/2)
    let expect = Mat::from_row_slice(2, 2, &[2.0 * c, -0.5, 2.0, 0.5 * c]);
    assert!(linalg::max_abs(&(m.matrix() - expect)) < 1e-15);
    assert!(Word::new(vec![cat(), SymplecticMatrix::identity(2)]).is_err());
}

#[test]
fn distance_examples() {
    let a = word(&[cat(), rot(0.3)]);
    assert_eq!(word_distance(&a, &a), Extended::Finite(0.0));
    assert_eq!(word_distance(&a, &word(&[cat()])), Extended::Infinite);
    let d = word_distance(&word(&[diag(&[2.0, 0.5])]), &word(&[diag(&[2.1, 1.0 / 2.1])]));
    assert!((d.as_f64() - 0.1).abs() < 1e-12);
}

fn toy_system() -> (PeriodicLinearSystem, Transitions) {
    let mut sys = PeriodicLinearSystem::new(2);
    sys.insert(OrbitId(1), word(&[cat(), cat()]), 2).unwrap();
    sys.insert(OrbitId(2), word(&[diag(&[3.0, 1.0 / 3.0])]), 1).unwrap();
    let mut tr = BTreeMap::new();
    let mk = |a: u32, b: u32, w: Word| Transition { from: OrbitId(a), to: OrbitId(b), word: w, epsilon: 0.1 };
    tr.insert((OrbitId(1), OrbitId(1)), mk(1, 1, Word::empty(2)));
    tr.insert((OrbitId(1), OrbitId(2)), mk(1, 2, word(&[rot(0.2)])));
    tr.insert((OrbitId(2), OrbitId(1)), mk(2, 1, word(&[rot(0.4), rot(0.1), rot(0.3)])));
    (sys, tr)
}

#[test]
fn composition_examples() {
    let (sys, tr) = toy_system();
    let w = compose_with_transitions(&sys, &[(OrbitId(1), 1)], &tr).unwrap();
    assert_eq!(&w, sys.word(OrbitId(1)).unwrap());
    let w = compose_with_transitions(&sys, &[(OrbitId(1), 1), (OrbitId(2), 1)], &tr).unwrap();
    assert_eq!(w.len(), 2 + 1 + 1 + 3);
    assert_eq!(w.letters()[2], rot(0.2));
    let err = compose_with_transitions(&sys, &[(OrbitId(1), 1), (OrbitId(1), 1)], &tr).unwrap_err();
    assert!(matches!(err, Error::NotPrimitive));
    let err = compose_with_transitions(&sys, &[(OrbitId(2), 2)], &tr).unwrap_err();
    assert!(matches!(err, Error::MissingTransition { from: 2, to: 2 }));
    let w = compose_with_transitions(&sys, &[(OrbitId(1), 3), (OrbitId(2), 2)], &tr).unwrap();
    assert_eq!(w.len(), 6 + 1 + 2 + 3);
}

#[test]
fn primitivity() {
    assert!(is_primitive(&[1, 2, 1, 3]));
    assert!(!is_primitive(&[1, 2, 1, 2]));
    assert!(!is_primitive(&[5, 5, 5]));
    assert!(is_primitive(&[5]));
}

#[test]
fn realify_rotation() {
    let eps = 0.1;
    let r = realify_spectrum(&word(&[rot(PI / 4.0)]), eps, Q_MAX).unwrap();
    assert_eq!(r.k, 8);
    assert!(r.distance <= eps);
    let vals = eigenvalues(monodromy(&r.word).matrix()).unwrap();
    assert!(vals.iter().all(|v| v.im == 0.0));
    let (a, b) = (vals[0].re, vals[1].re);
    assert!((a - b).abs() > 1e-6 && (a * b - 1.0).abs() < 1e-9);
    assert!(a.abs().ln().abs() / 8.0 < eps / 2.0);
}

#[test]
fn realify_real_spectrum_is_identity() {
    let w = word(&[diag(&[2.0, 0.5]), cat()]);
    let r = realify_spectrum(&w, 0.1, Q_MAX).unwrap();
    assert_eq!(r.k, 1);
    assert_eq!(r.word, w);
    let th = 0.01;
    let w = word(&[sm(diag(&[2.0, 0.5]).matrix() * linalg::rotation(th))]);
    let r = realify_spectrum(&w, 0.1, Q_MAX).unwrap();
    let top = eigenvalues(monodromy(&r.word).matrix()).unwrap().iter().map(|v| v.re).fold(0.0, f64::max);
    assert!((top.ln() / r.k as f64 - 2f64.ln()).abs() < 0.05);
}

#[test]
fn realify_hyperbolic_quadruple() {
    // complex quadruple: rotation composed with a hyperbolic block on each plane
    let h = diag(&[2.0, 2.0, 0.5, 0.5]);
    let r = sm(linalg::direct_sum(&linalg::rotation(0.3), &linalg::rotation(0.3)));
    let m = h.compose(&sm(Mat::from_row_slice(
        4,
        4,
        &[0.8, -0.6, 0.0, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0, 0.0, 0.8, -0.6, 0.0, 0.0, 0.6, 0.8],
    )));
    let _ = r;
    let w = word(&[m.clone()]);
    let cls = spectrum::classify_point(&m, 1e-6, 1e-6).unwrap();
    assert_eq!(cls.tag, spectrum::SpectralTag::Hyperbolic);
    let eps = 0.1;
    let out = realify_spectrum(&w, eps, Q_MAX).unwrap();
    assert!(out.distance <= eps);
    // contracting eigenvalues are read off the inverse to keep them accurate
    let mono = monodromy(&out.word);
    for mat in [mono.matrix().clone(), mono.inverse().matrix().clone()] {
        let vals = eigenvalues(&mat).unwrap();
        assert!(vals.iter().filter(|v| v.norm() >= 1.0).all(|v| v.im.abs() < 1e-9 * v.norm()), "{vals:?}");
    }
    assert!(out.exponent_gaps.iter().all(|&g| g < eps / 2.0));
}

#[test]
fn realify_shears_when_rotation_is_too_expensive() {
    // loxodromic pair with a small argument in a very skewed basis
    let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, -0.01, 2.0]);
    let mut m = Mat::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(&a);
    m.view_mut((2, 2), (2, 2)).copy_from(&a.clone().try_inverse().unwrap().transpose());
    let w = word(&[sm(m)]);
    let eps = 0.2;
    let out = realify_spectrum(&w, eps, 1).map_err(|e| e.to_string()).unwrap();
    assert_eq!(out.k, 1);
    assert!(out.denominators.is_empty());
    assert!(out.distance <= eps / 4.0, "{}", out.distance);
    assert!(out.exponent_gaps.iter().all(|&g| g < eps / 2.0));
    let cls = spectrum::classify_point(&monodromy(&out.word), 1e-9, 1e-9).unwrap();
    assert_eq!(cls.tag, spectrum::SpectralTag::HyperbolicDiagonalizable);
}

#[test]
fn realify_elliptic_pair_with_hyperbolic() {
    let m = rot(1.0).direct_sum(&cat());
    let eps = 0.2;
    let out = realify_spectrum(&word(&[m]), eps, Q_MAX).unwrap();
    assert!(out.distance <= eps);
    let cls = spectrum::classify_point(&monodromy(&out.word), 1e-9, 1e-9).unwrap();
    assert_eq!(cls.tag, spectrum::SpectralTag::HyperbolicDiagonalizable);
}

fn single_orbit(w: Word) -> PeriodicLinearSystem {
    let mut sys = PeriodicLinearSystem::new(w.dim());
    let n = w.len();
    sys.insert(OrbitId(0), w, n).unwrap();
    sys
}

fn self_transition(w: Word) -> Transition {
    Transition { from: OrbitId(0), to: OrbitId(0), word: w, epsilon: 0.1 }
}

fn assert_lines_preserved(out: &Word, vecs: &[DVector<f64>]) {
    let p = monodromy(out).into_matrix();
    let pinv = linalg::symplectic_inverse(&p);
    for v in vecs {
        let f = &p * v;
        let img = if f.norm() >= 1.0 { f } else { &pinv * v };
        let resid = (&img - v * (img.dot(v) / v.dot(v))).norm() / img.norm();
        assert!(resid <= 1e-6, "residual {resid}");
    }
}

#[test]
fn diagonalize_planar_hyperbolic() {
    let sys = single_orbit(word(&[diag(&[4.0, 0.25])]));
    let eps = 0.1;
    let (out, rep) = diagonalize_with_transition(&sys, OrbitId(0), &self_transition(word(&[rot(0.3)])), eps, 1).unwrap();
    assert_lines_preserved(&out, &[DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])]);
    assert!(rep.top_gap < eps);
    assert!((rep.output_exponents[1] - 4f64.ln()).abs() < eps);
    assert!(rep.letter_distance <= eps);
}

#[test]
fn diagonalize_identity_transition() {
    let x = word(&[diag(&[4.0, 0.25])]);
    let sys = single_orbit(x.clone());
    let (out, rep) = diagonalize_with_transition(&sys, OrbitId(0), &self_transition(Word::empty(2)), 0.1, 1).unwrap();
    assert_eq!(rep.letter_distance, 0.0);
    assert_eq!(out, x.repeat(out.len()));
    let (out, rep) = diagonalize_with_transition(
        &sys,
        OrbitId(0),
        &self_transition(word(&[SymplecticMatrix::identity(1)])),
        0.1,
        1,
    )
    .unwrap();
    assert_eq!(rep.letter_distance, 0.0);
    assert!(out.letters().iter().all(|l| l == &x.letters()[0] || l == &SymplecticMatrix::identity(1)));
}

#[test]
fn diagonalize_four_dimensional() {
    let sys = single_orbit(word(&[diag(&[2.0, 3.0, 0.5, 1.0 / 3.0])]));
    let t = random_symplectic(2, 11, 1.0).unwrap();
    let eps = 0.1;
    let (out, rep) = diagonalize_with_transition(&sys, OrbitId(0), &self_transition(word(&[t])), eps, 5).unwrap();
    let axes: Vec<DVector<f64>> = (0..4).map(|i| DVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    assert_lines_preserved(&out, &axes);
    assert!(rep.rounds.iter().all(|r| r.middle_defect <= 1e-7));
    assert!(rep.invariance_defect <= 1e-6);
    assert!(rep.letter_distance <= eps);
    let cls = spectrum::classify_point(&monodromy(&out), 1e-6, 1e-9).unwrap();
    assert_eq!(cls.tag, spectrum::SpectralTag::HyperbolicDiagonalizable);
}

#[test]
fn diagonalize_cat_with_rotation_transitions() {
    let eps = 0.05;
    for th in [0.1, 0.3] {
        let sys = single_orbit(word(&[cat()]));
        let (_, rep) = diagonalize_with_transition(&sys, OrbitId(0), &self_transition(word(&[rot(th)])), eps, 3).unwrap();
        let top = rep.output_exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((top - 0.9624236501192069).abs() < eps, "θ={th}: {top}");
    }
}

#[test]
fn diagonalize_elliptic_source() {
    let sys = single_orbit(word(&[rot(1.0).direct_sum(&cat())]));
    let t = random_symplectic(2, 4, 0.5).unwrap();
    let eps = 0.2;
    let (out, rep) = diagonalize_with_transition(&sys, OrbitId(0), &self_transition(word(&[t])), eps, 9).unwrap();
    assert!(rep.top_gap < eps);
    assert!(rep.letter_distance <= eps);
    // the raw product overflows here; rely on the flag certificate
    assert!(rep.invariance_defect <= 1e-6);
    assert_eq!(rep.period, out.len());
    let mut ex = rep.output_exponents.clone();
    ex.sort_by(f64::total_cmp);
    assert!(ex.windows(2).all(|w| w[1] - w[0] > 1e-6), "{ex:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monodromy_of_concatenation(seed in any::<u64>(), na in 1usize..10, d in 1usize..3) {
        let letters: Vec<SymplecticMatrix> = (0..10).map(|i| random_symplectic(d, seed.wrapping_add(i), 0.8).unwrap()).collect();
        let a = Word::new(letters[..na].to_vec()).unwrap();
        let b = Word::new(letters[na..].to_vec()).unwrap_or_else(|_| Word::empty(2 * d));
        let lhs = monodromy(&a.concat(&b).unwrap());
        // a is applied first, so the concatenation's monodromy is M(b)·M(a)
        let rhs = monodromy(&b).compose(&monodromy(&a));
        prop_assert!(linalg::max_abs(&(lhs.matrix() - rhs.matrix())) <= 1e-10 * linalg::max_abs(lhs.matrix()).max(1.0));
    }

    #[test]
    fn realify_stays_close(th in 0.2f64..2.9, h in 1.5f64..4.0, eps in 0.05f64..0.3) {
        let m = rot(th).direct_sum(&diag(&[h, 1.0 / h]));
        let w = word(&[m]);
        // arguments without a good enough fraction below q_max are reported
        let out = match realify_spectrum(&w, eps, Q_MAX) {
            Err(Error::Rationalization(_)) => return Ok(()),
            r => r.unwrap(),
        };
        let dist = word_distance(&out.word, &w.repeat(out.k)).as_f64();
        prop_assert!(dist <= eps);
        let mono = monodromy(&out.word);
        let scale = linalg::max_abs(mono.matrix()).max(1.0);
        prop_assert!(symplectic::symplectic_defect(mono.matrix()).unwrap() <= 1e-9 * scale * scale);
    }
}
