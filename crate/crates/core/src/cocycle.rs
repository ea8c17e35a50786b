//! Words of symplectic matrices, periodic linear systems, transitions and
//! the diagonalization pipeline for periodic cocycles.
//!
//! Letter `0` of a word is applied first, so the monodromy of
//! `(A_0, .., A_{n-1})` is `A_{n-1} ⋯ A_0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{self, Mat};
use crate::spectrum::{self, C64};
use crate::symplectic::{self, omega, Extended, MatrixRows};
use crate::{math, DVector, Error, Result, SymplecticMatrix, Subspace};

#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    dim: usize,
    letters: Vec<SymplecticMatrix>,
}

impl Word {
    /// A nonempty word; all letters must share one dimension.
    pub fn new(letters: Vec<SymplecticMatrix>) -> Result<Self> {
        let dim = letters.first().map(|l| l.dim()).ok_or_else(|| Error::InvalidDimension("empty word".into()))?;
        if letters.iter().any(|l| l.dim() != dim) {
            return Err(Error::InvalidDimension("letters have different dimensions".into()));
        }
        Ok(Word { dim, letters })
    }

    /// The empty word, used for trivial transitions.
    pub fn empty(dim: usize) -> Self {
        Word { dim, letters: Vec::new() }
    }

    pub fn constant(letter: SymplecticMatrix, n: usize) -> Result<Self> {
        Self::new(vec![letter; n])
    }

    pub fn letters(&self) -> &[SymplecticMatrix] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `self` followed by `other` in application order.
    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.dim != other.dim {
            return Err(Error::InvalidDimension("cannot concatenate words of different dimension".into()));
        }
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Ok(Word { dim: self.dim, letters })
    }

    pub fn repeat(&self, k: usize) -> Word {
        let mut letters = Vec::with_capacity(self.len() * k);
        for _ in 0..k {
            letters.extend(self.letters.iter().cloned());
        }
        Word { dim: self.dim, letters }
    }

}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.letters.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows: Vec<MatrixRows> = Vec::deserialize(d)?;
        let letters = rows
            .into_iter()
            .map(SymplecticMatrix::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Word::new(letters).map_err(serde::de::Error::custom)
    }
}

/// `A_{n-1} ⋯ A_0`; the identity for the empty word. The cached defect of
/// the result reports accumulated rounding.
pub fn monodromy(w: &Word) -> SymplecticMatrix {
    let mut acc = Mat::identity(w.dim, w.dim);
    for a in &w.letters {
        acc = a.matrix() * acc;
    }
    SymplecticMatrix::trusted(acc)
}

/// Largest entrywise letter difference, or the sentinel for unequal lengths.
pub fn word_distance(a: &Word, b: &Word) -> Extended {
    if a.len() != b.len() || a.dim != b.dim {
        return Extended::Infinite;
    }
    let d = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(x, y)| linalg::max_abs(&(x.matrix() - y.matrix())))
        .fold(0.0, f64::max);
    Extended::Finite(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrbitId(pub u32);

#[derive(Clone, Debug, Default)]
pub struct PeriodicLinearSystem {
    dim: usize,
    words: BTreeMap<OrbitId, Word>,
}

impl PeriodicLinearSystem {
    pub fn new(dim: usize) -> Self {
        PeriodicLinearSystem { dim, words: BTreeMap::new() }
    }

    /// Registers an orbit whose word length must equal `period`.
    pub fn insert(&mut self, id: OrbitId, word: Word, period: usize) -> Result<()> {
        if word.dim() != self.dim {
            return Err(Error::InvalidDimension("orbit word has the wrong dimension".into()));
        }
        if word.len() != period {
            return Err(Error::Precondition(format!("word length {} differs from period {period}", word.len())));
        }
        self.words.insert(id, word);
        Ok(())
    }

    pub fn word(&self, id: OrbitId) -> Result<&Word> {
        self.words.get(&id).ok_or_else(|| Error::Precondition(format!("unknown orbit {}", id.0)))
    }

    pub fn points(&self) -> impl Iterator<Item = OrbitId> + '_ {
        self.words.keys().copied()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub from: OrbitId,
    pub to: OrbitId,
    pub word: Word,
    pub epsilon: f64,
}

pub type Transitions = BTreeMap<(OrbitId, OrbitId), Transition>;

/// True iff the cyclic sequence is not a proper power of a shorter one.
pub fn is_primitive<T: PartialEq>(s: &[T]) -> bool {
    let m = s.len();
    (1..m).filter(|p| m % p == 0).all(|p| (0..m).any(|i| s[i] != s[(i + p) % m]))
}

/// Concatenates orbit blocks and transitions in application order:
/// `M(x_1)^{α_1}`, `t(x_1→x_2)`, …, `M(x_m)^{α_m}`, `t(x_m→x_1)`.
pub fn compose_with_transitions(
    system: &PeriodicLinearSystem,
    itinerary: &[(OrbitId, usize)],
    transitions: &Transitions,
) -> Result<Word> {
    if itinerary.is_empty() {
        return Err(Error::Precondition("empty itinerary".into()));
    }
    if !is_primitive(itinerary) {
        return Err(Error::NotPrimitive);
    }
    let m = itinerary.len();
    let mut out = Word::empty(system.dim());
    for (i, &(id, alpha)) in itinerary.iter().enumerate() {
        out = out.concat(&system.word(id)?.repeat(alpha))?;
        let next = itinerary[(i + 1) % m].0;
        let t = transitions.get(&(id, next)).ok_or(Error::MissingTransition { from: id.0, to: next.0 })?;
        out = out.concat(&t.word)?;
    }
    Ok(out)
}

/// Real basis adapted to a simple spectrum: one column per real
/// eigenvalue, and `(Re v, Im v)` for each eigenvalue with positive
/// imaginary part.
struct RealBasis {
    values: Vec<C64>,
    basis: Mat,
    inverse: Mat,
    /// Column index of the real eigenvector, or of `Re v` for complex ones.
    col: Vec<Option<usize>>,
}

const TOL_REAL: f64 = 1e-9;

fn is_real(v: C64) -> bool {
    v.im.abs() <= TOL_REAL * v.norm().max(1.0)
}

fn real_basis(m: &SymplecticMatrix) -> Result<RealBasis> {
    let ed = spectrum::eigen_quadruples(m, spectrum::TOL_EIG)?;
    let vecs = ed.vectors.ok_or_else(|| Error::Precondition("monodromy spectrum is not simple".into()))?;
    let n = m.dim();
    let mut basis = Mat::zeros(n, n);
    let mut col = vec![None; n];
    let mut c = 0;
    for (i, &v) in ed.values.iter().enumerate() {
        let e = vecs.column(i);
        if is_real(v) {
            // fix the phase so the vector is real
            let (idx, _) = e.iter().enumerate().fold((0, 0.0), |b, (j, z)| if z.norm() > b.1 { (j, z.norm()) } else { b });
            let phase = e[idx].conj() / e[idx].norm();
            for r in 0..n {
                basis[(r, c)] = (e[r] * phase).re;
            }
            col[i] = Some(c);
            c += 1;
        } else if v.im > 0.0 {
            for r in 0..n {
                basis[(r, c)] = e[r].re;
                basis[(r, c + 1)] = e[r].im;
            }
            col[i] = Some(c);
            c += 2;
        }
    }
    if c != n {
        return Err(Error::Numerical("eigenvalues are not conjugation-closed".into()));
    }
    let inverse = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("eigenbasis is singular".into()))?;
    Ok(RealBasis { values: ed.values, basis, inverse, col })
}

impl RealBasis {
    /// `(column, size)` of each invariant block of the real basis.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .values
            .iter()
            .zip(&self.col)
            .filter_map(|(v, c)| c.map(|c| (c, if is_real(*v) { 1 } else { 2 })))
            .collect();
        out.sort_unstable();
        out
    }

    /// Eigenpairs of `post·(pre·M)^k` for `pre`, `post` commuting with the
    /// monodromy `M`. Each invariant block is powered on its own, so small
    /// eigenvalues are not swamped by large ones. Real eigenvalues come with
    /// their eigenvector.
    fn block_power_eigen(&self, pre_m: &Mat, post: &Mat, k: usize) -> Result<Eigenpairs> {
        let a = &self.inverse * pre_m * &self.basis;
        let b = &self.inverse * post * &self.basis;
        let mut out = Vec::new();
        for (c, size) in self.blocks() {
            let blk = a.view((c, c), (size, size)).into_owned();
            let mut pw = Mat::identity(size, size);
            for _ in 0..k {
                pw = &blk * pw;
            }
            if !linalg::max_abs(&pw).is_finite() {
                return Err(Error::Numerical("block power overflows".into()));
            }
            let full = b.view((c, c), (size, size)) * pw;
            if size == 1 {
                out.push((C64::new(full[(0, 0)], 0.0), Some(self.basis.column(c).into_owned())));
                continue;
            }
            let (p, q, r, t) = (full[(0, 0)], full[(0, 1)], full[(1, 0)], full[(1, 1)]);
            let half = (p + t) / 2.0;
            let disc = half * half - (p * t - q * r);
            if disc <= 0.0 {
                let im = math::sqrt(-disc);
                out.push((C64::new(half, im), None));
                out.push((C64::new(half, -im), None));
                continue;
            }
            let root = math::sqrt(disc);
            for lam in [half + root, half - root] {
                // pick the better conditioned of the two kernel rows
                let e = if (lam - t).abs() + r.abs() >= q.abs() + (lam - p).abs() {
                    DVector::from_vec(vec![lam - t, r])
                } else {
                    DVector::from_vec(vec![q, lam - p])
                };
                let v = self.basis.columns(c, 2) * e;
                out.push((C64::new(lam, 0.0), Some(unit(v))));
            }
        }
        Ok(out)
    }

    fn partner(&self, i: usize) -> usize {
        let t = self.values[i].conj().inv();
        (0..self.values.len())
            .filter(|&j| j != i || (self.values[i].norm() - 1.0).abs() < 1e-9)
            .filter(|&j| self.values[j].im > 0.0)
            .min_by(|&a, &b| (self.values[a] - t).norm().total_cmp(&(self.values[b] - t).norm()))
            .unwrap_or(i)
    }

    /// Complex eigenvalues with `Im > 0` and `|ξ| ≥ 1`, each with its
    /// partner plane for `1/ξ̄` (the same index when `|ξ| = 1`).
    fn planes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            if !is_real(*v) && v.im > 0.0 {
                let elliptic = (v.norm() - 1.0).abs() <= 1e-9;
                if elliptic {
                    out.push((i, i));
                } else if v.norm() > 1.0 {
                    out.push((i, self.partner(i)));
                }
            }
        }
        out
    }

    /// Hamiltonian matrix acting by `g` on the plane of `i` (in its
    /// `(Re v, Im v)` coordinates), by the forced block on the partner
    /// plane, and by zero elsewhere.
    fn generator(&self, i: usize, partner: usize, g: &Mat) -> Mat {
        let n = self.basis.nrows();
        let mut d = Mat::zeros(n, n);
        let p = self.col[i].expect("plane column");
        d.view_mut((p, p), (2, 2)).copy_from(g);
        if partner != i {
            let q = self.col[partner].expect("plane column");
            let bp = self.basis.columns(p, 2);
            let bq = self.basis.columns(q, 2);
            let mut om = Mat::zeros(2, 2);
            for r in 0..2 {
                for c in 0..2 {
                    om[(r, c)] = omega(&bp.column(r).into_owned(), &bq.column(c).into_owned());
                }
            }
            let omi = om.clone().try_inverse().expect("partner planes are paired by ω");
            let gq = -(&omi * g.transpose() * &om);
            d.view_mut((q, q), (2, 2)).copy_from(&gq);
        }
        &self.basis * d * &self.inverse
    }
}

/// Output of [`realify_spectrum`].
#[derive(Clone, Debug, Serialize)]
pub struct Realified {
    pub word: Word,
    /// Repetition count of the input word.
    pub k: usize,
    pub denominators: Vec<u64>,
    /// Letter distance of the rotation step, or of the shear when the
    /// fallback ran.
    pub rotation_distance: f64,
    pub split_distance: f64,
    /// `word_distance` to the `k`-fold repetition of the input.
    pub distance: f64,
    /// Per complex input eigenvalue, the best exponent match in the output.
    pub exponent_gaps: Vec<f64>,
    /// Real eigenvalues of the output monodromy with unit eigenvectors.
    #[serde(skip)]
    pub(crate) lines: Vec<(f64, DVector<f64>)>,
}

pub const Q_MAX: u64 = 64;
/// Denominator cap of the second attempt in the diagonalization pipeline,
/// for arguments too close to zero for `Q_MAX`.
pub const Q_MAX_WIDE: u64 = 256;
const K_MAX: usize = 4096;

/// Perturbs the letters so that the monodromy, raised to a power `k`,
/// has only real simple eigenvalues, and returns the `k`-fold word.
///
/// When some argument has no usable rational approximation the complex
/// pairs are first pushed onto the real axis by a shear, and the rest of
/// the pipeline runs on the sheared word.
pub fn realify_spectrum(w: &Word, eps: f64, q_max: u64) -> Result<Realified> {
    let err = match realify_direct(w, eps, q_max) {
        Err(Error::Rationalization(msg)) => msg,
        r => return r,
    };
    let Some(pre) = unfold_planes(w, eps / 8.0)? else {
        return Err(Error::Rationalization(err));
    };
    let mut r = realify_direct(&pre, eps / 2.0, q_max)?;
    let n = w.len();
    let kn = (r.k * n) as f64;
    let rb = real_basis(&monodromy(w))?;
    r.exponent_gaps = rb
        .planes()
        .iter()
        .flat_map(|&(i, p)| [i, p])
        .map(|i| {
            let target = math::ln(rb.values[i].norm()) / n as f64;
            r.lines.iter().map(|v| (target - math::ln(v.0.abs()) / kn).abs()).fold(f64::INFINITY, f64::min)
        })
        .collect();
    if r.exponent_gaps.iter().any(|&g| g >= eps / 2.0) {
        return Err(Error::Rationalization(err));
    }
    r.rotation_distance = word_distance(&pre, w).as_f64();
    r.distance = word_distance(&r.word, &w.repeat(r.k)).as_f64();
    Ok(r)
}

/// Shears every non-unit complex pair of the monodromy into a pair of
/// real eigenvalues `ρe^{±γ}`, spread over the letters, with letter
/// distance at most `budget`. `None` if nothing fits.
fn unfold_planes(w: &Word, budget: f64) -> Result<Option<Word>> {
    let n = w.len();
    let m = monodromy(w);
    let rb = real_basis(&m)?;
    let planes: Vec<(usize, usize)> = rb.planes().into_iter().filter(|&(i, p)| i != p).collect();
    if planes.is_empty() {
        return Ok(None);
    }
    let dim = m.dim();
    let mut tails = vec![Mat::identity(dim, dim); n];
    for j in (0..n - 1).rev() {
        tails[j] = &tails[j + 1] * w.letters[j + 1].matrix();
    }
    let tail_inv: Vec<Mat> = tails.iter().map(linalg::symplectic_inverse).collect();
    let local = &rb.inverse * m.matrix() * &rb.basis;
    // per plane: R from the QR of (Re v, Im v), block N in orthonormal
    // coordinates and the unit traceless direction raising |tr N|
    let mut shapes = Vec::new();
    for &(i, p) in &planes {
        let c = rb.col[i].expect("plane column");
        let qr = rb.basis.columns(c, 2).into_owned().qr();
        let r = qr.r();
        let r_inv = r.clone().try_inverse().ok_or_else(|| Error::Numerical("degenerate plane".into()))?;
        let blk = &r * local.view((c, c), (2, 2)) * &r_inv;
        let half = 0.5 * blk.trace();
        let mut z = blk.transpose() - Mat::identity(2, 2) * half;
        let zn = z.norm();
        if zn == 0.0 {
            return Ok(None);
        }
        z *= if half < 0.0 { -1.0 / zn } else { 1.0 / zn };
        shapes.push((i, p, r, r_inv, blk, z));
    }
    let mut gamma = n as f64 * budget;
    while gamma > 1e-4 {
        let mut gen = Mat::zeros(dim, dim);
        for (i, p, r, r_inv, blk, z) in &shapes {
            let rho = math::sqrt(blk.determinant().abs());
            let goal = 2.0 * rho * math::cosh(gamma);
            let f = |c: f64| (linalg::expm(&(z * c)) * blk).trace().abs() - goal;
            let mut hi = ((goal - blk.trace().abs()) / z.norm()).max(1e-12);
            let mut tries = 0;
            while f(hi) < 0.0 && tries < 60 {
                hi *= 2.0;
                tries += 1;
            }
            if f(hi) < 0.0 {
                return Ok(None);
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            gen += rb.generator(*i, *p, &(r_inv * z * r * hi));
        }
        let lev: Vec<f64> = (0..n)
            .map(|j| {
                let s = linalg::spectral_norm(&(&tail_inv[j] * &gen * &tails[j])) * linalg::spectral_norm(w.letters[j].matrix());
                1.0 / s.max(1e-300)
            })
            .collect();
        let total: f64 = lev.iter().sum();
        let mut out = w.clone();
        let mut dist = 0.0_f64;
        for j in 0..n {
            let y = &tail_inv[j] * &gen * &tails[j] * (lev[j] / total);
            let a = w.letters[j].matrix();
            let moved = linalg::expm(&y) * a;
            dist = dist.max(linalg::max_abs(&(&moved - a)));
            out.letters[j] = SymplecticMatrix::trusted(moved);
        }
        if dist <= budget {
            return Ok(Some(out));
        }
        gamma *= 0.5;
    }
    Ok(None)
}

fn realify_direct(w: &Word, eps: f64, q_max: u64) -> Result<Realified> {
    if w.is_empty() {
        return Err(Error::Precondition("empty word".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let n = w.len();
    let m = monodromy(w);
    let rb = real_basis(&m)?;
    let planes = rb.planes();
    let negative = rb.values.iter().any(|&v| is_real(v) && v.re < 0.0);

    if planes.is_empty() {
        let k = if negative { 2 } else { 1 };
        let out = w.repeat(k);
        let id = Mat::identity(m.dim(), m.dim());
        let lines = check_real_simple(rb.block_power_eigen(m.matrix(), &id, k)?)?;
        return Ok(Realified {
            word: out,
            k,
            denominators: Vec::new(),
            rotation_distance: 0.0,
            split_distance: 0.0,
            distance: 0.0,
            exponent_gaps: Vec::new(),
            lines,
        });
    }

    let k_gen = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let budget = eps / 4.0;
    // exp(cY_j)·A_j with Y_j = P_j⁻¹ X P_j, P_j = A_{n-1}⋯A_{j+1}, moves to
    // exp(cX)·M, so the correction can be shared among all letters
    let mut tails = vec![Mat::identity(m.dim(), m.dim()); n];
    for j in (0..n - 1).rev() {
        tails[j] = &tails[j + 1] * w.letters[j + 1].matrix();
    }
    let tail_inv: Vec<Mat> = tails.iter().map(linalg::symplectic_inverse).collect();
    let leverage = |x: &Mat| -> Vec<f64> {
        (0..n)
            .map(|j| linalg::spectral_norm(&(&tail_inv[j] * x * &tails[j])) * linalg::spectral_norm(w.letters[j].matrix()))
            .collect()
    };
    let mut rot_gen = Mat::zeros(m.dim(), m.dim());
    let mut denominators = Vec::new();
    for &(i, p) in &planes {
        let x = rb.generator(i, p, &k_gen);
        let xs = 1.0 / leverage(&x).iter().map(|s| 1.0 / s.max(1e-300)).sum::<f64>();
        let phi = math::atan2(rb.values[i].im, rb.values[i].re);
        let share = 0.9 * budget / planes.len() as f64;
        let mut chosen = None;
        for q in 1..=q_max {
            let num = math::round(phi * q as f64 / math::TAU);
            let delta = math::TAU * num / q as f64 - phi;
            if delta.abs() * xs <= share {
                let g = math::gcd(num as u64, q);
                chosen = Some((delta, q / g.max(1)));
                break;
            }
        }
        let (delta, q) = chosen.ok_or_else(|| {
            Error::Rationalization(format!("argument {phi} has no rational approximation within budget for q ≤ {q_max}"))
        })?;
        rot_gen += x * delta;
        denominators.push(q);
    }
    let mut k = denominators.iter().fold(1u64, |a, &q| math::lcm(a, q)) as usize;
    if negative && k % 2 == 1 {
        k *= 2;
    }
    if k > K_MAX {
        return Err(Error::Rationalization(format!("power {k} exceeds {K_MAX}")));
    }
    let h_rot = linalg::expm(&rot_gen);
    let inv_lev: Vec<f64> = leverage(&rot_gen).iter().map(|s| 1.0 / s.max(1e-300)).collect();
    let total: f64 = inv_lev.iter().sum();
    let mut base = w.clone();
    let mut rotation_distance = 0.0_f64;
    for j in 0..n {
        let y = &tail_inv[j] * &rot_gen * &tails[j] * (inv_lev[j] / total);
        let a = w.letters[j].matrix();
        let moved = linalg::expm(&y) * a;
        rotation_distance = rotation_distance.max(linalg::max_abs(&(&moved - a)));
        base.letters[j] = SymplecticMatrix::trusted(moved);
    }
    if rotation_distance > budget {
        return Err(Error::Rationalization(format!("rotation correction {rotation_distance:e} exceeds ε/4")));
    }

    let split_gen = {
        let y = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let mut acc = Mat::zeros(m.dim(), m.dim());
        for (idx, &(i, p)) in planes.iter().enumerate() {
            let c = 1.0 + idx as f64 / planes.len() as f64;
            acc += rb.generator(i, p, &y) * c;
        }
        acc
    };
    let c_max = 2.0;
    let kn = (k * n) as f64;
    // The split acts at the front of the k-th power. A share placed at a
    // letter is conjugated by the product of everything after it; copy c
    // sees Q^(k-1-c) with Q the rotated copy. In block-normalized eigen
    // coordinates those powers stay bounded.
    let mut rtails = vec![Mat::identity(m.dim(), m.dim()); n];
    for j in (0..n - 1).rev() {
        rtails[j] = &rtails[j + 1] * base.letters[j + 1].matrix();
    }
    let rtails_inv: Vec<Mat> = rtails.iter().map(linalg::symplectic_inverse).collect();
    let q_full = &rb.inverse * (&h_rot * m.matrix()) * &rb.basis;
    let mut q_hat = Mat::zeros(m.dim(), m.dim());
    for (c, size) in rb.blocks() {
        let blk = q_full.view((c, c), (size, size)).into_owned();
        let scale = if size == 1 {
            blk[(0, 0)].abs()
        } else {
            math::sqrt((blk[(0, 0)] * blk[(1, 1)] - blk[(0, 1)] * blk[(1, 0)]).abs())
        };
        q_hat.view_mut((c, c), (size, size)).copy_from(&(blk / scale));
    }
    let q_hat_inv = q_hat.clone().try_inverse().ok_or_else(|| Error::Numerical("singular block model".into()))?;
    let mut conj = &rb.inverse * &split_gen * &rb.basis;
    let mut parts: Vec<Vec<Mat>> = vec![Vec::new(); k];
    for c in (0..k).rev() {
        let s_c = &rb.basis * &conj * &rb.inverse;
        parts[c] = (0..n).map(|j| &rtails_inv[j] * &s_c * &rtails[j]).collect();
        conj = &q_hat_inv * conj * &q_hat;
    }
    let inv_lev: Vec<Vec<f64>> = parts
        .iter()
        .map(|ps| {
            ps.iter()
                .zip(&base.letters)
                .map(|(y, a)| 1.0 / (linalg::spectral_norm(y) * linalg::spectral_norm(a.matrix())).max(1e-300))
                .collect()
        })
        .collect();
    let split_total: f64 = inv_lev.iter().flatten().sum();
    let mut eta = (0.9 * kn * eps / (2.0 * c_max)).min(0.9 * budget * split_total);
    for _ in 0..40 {
        let h_split = linalg::expm(&(&split_gen * eta));
        let mut letters = Vec::with_capacity(k * n);
        let mut split_distance = 0.0_f64;
        for c in 0..k {
            for j in 0..n {
                let y = &parts[c][j] * (eta * inv_lev[c][j] / split_total);
                let a = base.letters[j].matrix();
                let moved = linalg::expm(&y) * a;
                split_distance = split_distance.max(linalg::max_abs(&(&moved - a)));
                letters.push(SymplecticMatrix::trusted(moved));
            }
        }
        if split_distance > budget {
            eta *= 0.5;
            continue;
        }
        let out = Word::new(letters)?;
        let Ok(lines) = rb.block_power_eigen(&(&h_rot * m.matrix()), &h_split, k).and_then(check_real_simple)
        else {
            eta *= 0.7;
            continue;
        };
        let exponent_gaps: Vec<f64> = planes
            .iter()
            .flat_map(|&(i, p)| [i, p])
            .map(|i| {
                let target = math::ln(rb.values[i].norm()) / n as f64;
                lines
                    .iter()
                    .map(|v| (target - math::ln(v.0.abs()) / kn).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        if exponent_gaps.iter().any(|&g| g >= eps / 2.0) {
            eta *= 0.5;
            continue;
        }
        let distance = word_distance(&out, &w.repeat(k)).as_f64();
        return Ok(Realified { word: out, k, denominators, rotation_distance, split_distance, distance, exponent_gaps, lines });
    }
    Err(Error::Numerical("could not split the repeated eigenvalues within budget".into()))
}

type Eigenpairs = Vec<(C64, Option<DVector<f64>>)>;

/// Real simple eigenpairs, or an error naming what is missing.
fn check_real_simple(pairs: Eigenpairs) -> Result<Vec<(f64, DVector<f64>)>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (v, vec) in pairs {
        match vec {
            Some(e) if is_real(v) => out.push((v.re, e)),
            _ => return Err(Error::Numerical("spectrum is not real".into())),
        }
    }
    let mut re: Vec<f64> = out.iter().map(|p| p.0).collect();
    re.sort_by(f64::total_cmp);
    if re.windows(2).any(|w| (w[1] - w[0]).abs() <= spectrum::TOL_SIMPLE * w[1].abs().max(w[0].abs())) {
        return Err(Error::Numerical("spectrum is not simple".into()));
    }
    Ok(out)
}

/// One alignment round of [`diagonalize_with_transition`].
#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    /// Eigenline indices (ascending modulus) of the aligned pair.
    pub bottom: usize,
    pub top: usize,
    pub j_top: usize,
    pub j_bottom: usize,
    pub top_distance: f64,
    pub bottom_distance: f64,
    /// `"graph"` when the isotropic-graph shear applied directly,
    /// `"darboux"` when the exactly symplectic nilpotent shear was used.
    pub top_method: &'static str,
    pub bottom_method: &'static str,
    /// `max |ω(M̃v, u)|` over unit `v` in the middle block and `u` in the
    /// aligned pair.
    pub middle_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalizationReport {
    pub k: usize,
    pub realify_distance: f64,
    pub nudge_distance: f64,
    pub nudges: usize,
    pub rounds: Vec<RoundReport>,
    pub l: usize,
    pub period: usize,
    /// Largest letter distance to the unperturbed concatenation.
    pub letter_distance: f64,
    pub source_top_exponent: f64,
    /// Per-step exponents of the realified monodromy, ascending.
    pub realified_exponents: Vec<f64>,
    /// Per-step exponents of the output monodromy on each eigenline.
    pub output_exponents: Vec<f64>,
    pub top_gap: f64,
    pub invariance_defect: f64,
}

pub const J_MAX: usize = 10_000;
const L_MAX: usize = 100_000;

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

fn line_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    let s = (a - b * (b.dot(a) / b.dot(b))).norm() / a.norm();
    if c * c < 0.5 {
        math::acos(c)
    } else {
        math::asin(s.min(1.0))
    }
}

/// Symplectic map sending the line `ℓ` onto the line of `t` while fixing
/// `f`, where `ω(f, t) = 1` and `ω(f, ℓ) ≠ 0`. Built as `I + G` with
/// `G² = 0`, so it is symplectic up to rounding.
fn darboux_shear(ell: &DVector<f64>, t: &DVector<f64>, f: &DVector<f64>) -> Mat {
    let ell = ell / omega(f, ell);
    let alpha = -omega(t, &ell);
    let m = &ell - t - f * alpha;
    let n = ell.len();
    let j = linalg::jmat(n / 2);
    // ω(a, ·) as a row: aᵀJ
    let row = |a: &DVector<f64>| a.transpose() * &j;
    let mut l = Mat::identity(n, n);
    l -= f * row(&m);
    l -= &m * row(f);
    l -= f * row(f) * alpha;
    l
}

fn align_line(ell: &DVector<f64>, t: &DVector<f64>, f: &DVector<f64>, others: &[DVector<f64>]) -> Result<(Mat, &'static str)> {
    let n = ell.len();
    let w = Subspace::from_vectors(n, core::slice::from_ref(ell))?;
    let e = Subspace::from_vectors(n, core::slice::from_ref(t))?;
    let fs = Subspace::from_vectors(n, others)?;
    match symplectic::align_isotropic(&w, &e, &fs) {
        Ok(al) => Ok((al.map.into_matrix(), "graph")),
        Err(Error::Precondition(_)) | Err(Error::GraphDegenerate) => Ok((darboux_shear(ell, t, f), "darboux")),
        Err(e) => Err(e),
    }
}

struct Eigenlines {
    /// Unit eigenvectors, ascending modulus.
    v: Vec<DVector<f64>>,
    lambda: Vec<f64>,
}

fn eigenlines(real: &Realified) -> Eigenlines {
    let mut pairs = real.lines.clone();
    pairs.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    Eigenlines { lambda: pairs.iter().map(|p| p.0).collect(), v: pairs.into_iter().map(|p| p.1).collect() }
}

fn nudge(letter: &SymplecticMatrix, seed: u64, budget: f64) -> SymplecticMatrix {
    let n = letter.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Mat::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let x: f64 = rng.random_range(-1.0..1.0);
            s[(r, c)] = x;
            s[(c, r)] = x;
        }
    }
    let g = symplectic::hamiltonian(&s);
    let mut scale = budget / (linalg::spectral_norm(&g) * linalg::spectral_norm(letter.matrix())).max(1e-300);
    loop {
        let out = linalg::expm(&(&g * scale)) * letter.matrix();
        if linalg::max_abs(&(&out - letter.matrix())) <= budget {
            return SymplecticMatrix::trusted(out);
        }
        scale *= 0.5;
    }
}

enum RoundFailure {
    NotGeneric,
    Hard(Error),
}

impl From<Error> for RoundFailure {
    fn from(e: Error) -> Self {
        RoundFailure::Hard(e)
    }
}

/// A word together with the unperturbed word it approximates letter by
/// letter.
#[derive(Clone)]
struct Tracked {
    word: Word,
    reference: Word,
}

impl Tracked {
    fn concat(&self, other: &Tracked) -> Result<Tracked> {
        Ok(Tracked { word: self.word.concat(&other.word)?, reference: self.reference.concat(&other.reference)? })
    }
    fn repeat(&self, k: usize) -> Tracked {
        Tracked { word: self.word.repeat(k), reference: self.reference.repeat(k) }
    }
}

/// Action of the partially built word in the eigenbasis of `M_1`. Lines
/// already aligned carry a scalar (kept as log-modulus and sign); the
/// block still to be aligned is a matrix scaled by `exp(log_scale)`.
struct EigenModel {
    vm: Mat,
    vinv: Mat,
    omega_hat: Mat,
    log_lambda: Vec<f64>,
    sign_lambda: Vec<f64>,
}

impl EigenModel {
    fn new(lines: &Eigenlines) -> Result<Self> {
        let n = lines.v.len();
        let mut vm = Mat::zeros(n, n);
        for (i, v) in lines.v.iter().enumerate() {
            vm.set_column(i, v);
        }
        let vinv = vm.clone().try_inverse().ok_or_else(|| Error::Numerical("eigenlines are dependent".into()))?;
        let omega_hat = vm.transpose() * linalg::jmat(n / 2) * &vm;
        Ok(EigenModel {
            vm,
            vinv,
            omega_hat,
            log_lambda: lines.lambda.iter().map(|l| math::ln(l.abs())).collect(),
            sign_lambda: lines.lambda.iter().map(|l| l.signum()).collect(),
        })
    }

    /// `diag(λ_k / |λ_ref|)^j` over the block starting at `lo`, as factors.
    fn power(&self, lo: usize, b: usize, j: usize, log_ref: f64) -> Vec<f64> {
        (lo..lo + b)
            .map(|k| {
                let s = if j % 2 == 1 { self.sign_lambda[k] } else { 1.0 };
                s * math::exp(j as f64 * (self.log_lambda[k] - log_ref))
            })
            .collect()
    }
}

fn scale_rows(m: &mut Mat, f: &[f64]) {
    for (r, x) in f.iter().enumerate() {
        m.row_mut(r).scale_mut(*x);
    }
}

fn scale_cols(m: &mut Mat, f: &[f64]) {
    for (c, x) in f.iter().enumerate() {
        m.column_mut(c).scale_mut(*x);
    }
}

fn normalize_block(g: &mut Mat, log_scale: &mut f64) -> Result<()> {
    let mx = linalg::max_abs(g);
    if !(mx > 0.0 && mx.is_finite()) {
        return Err(Error::Numerical("degenerate block in the eigen model".into()));
    }
    *g /= mx;
    *log_scale += math::ln(mx);
    Ok(())
}

struct RoundsOutcome {
    core: Tracked,
    rounds: Vec<RoundReport>,
    /// Log-modulus and sign of `M̃` on each eigenline.
    log_c: Vec<f64>,
    sign_c: Vec<f64>,
}

fn run_rounds(lines: &Eigenlines, w1: &Tracked, t: &Tracked, eps: f64) -> core::result::Result<RoundsOutcome, RoundFailure> {
    let n = lines.v.len();
    let d = n / 2;
    let model = EigenModel::new(lines)?;
    let t_mono = monodromy(&t.word).into_matrix();
    let mut g = &model.vinv * t_mono * &model.vm;
    let mut log_scale = 0.0;
    normalize_block(&mut g, &mut log_scale)?;
    let mut log_c = vec![0.0; n];
    let mut sign_c = vec![1.0; n];
    let mut cur = t.clone();
    let mut rounds = Vec::new();
    for r in 0..d {
        let (bot, top) = (r, n - 1 - r);
        let b = top - bot + 1;
        let vb = model.vm.columns(bot, b).into_owned();
        let q = lines.v[bot].clone();
        let p = &lines.v[top] / omega(&lines.v[bot], &lines.v[top]);
        // M̃p and M̃⁻¹q in eigen coordinates; the symplectic inverse avoids
        // inverting the badly scaled block
        let y0 = g.column(b - 1).into_owned();
        let ob = model.omega_hat.view((bot, bot), (b, b)).into_owned();
        let ob_inv = ob.clone().try_inverse().ok_or_else(|| Error::Numerical("eigenblock is not symplectic".into()))?;
        let z0 = (&ob_inv * g.transpose() * &ob).column(0).into_owned();
        if y0[b - 1].abs() <= 1e-8 * y0.norm() || z0[0].abs() <= 1e-8 * z0.norm() {
            return Err(RoundFailure::NotGeneric);
        }
        let others = |skip: usize| -> Vec<DVector<f64>> {
            (0..n).filter(|&i| i != skip).map(|i| lines.v[i].clone()).collect()
        };
        // forward side: M1^j M̃ p → p, fixing q
        let step_up = model.power(bot, b, 1, model.log_lambda[top]);
        let mut y = unit(y0);
        let mut j_top = 0;
        let (l_top, top_method, top_distance) = loop {
            let ell = &vb * &y;
            if line_angle(&ell, &p) < eps / 10.0 {
                let (l, method) = align_line(&ell, &p, &q, &others(top))?;
                let anchor = if j_top > 0 { w1.word.letters().last() } else { cur.word.letters().last() };
                let dist = anchor.map_or(linalg::max_abs(&(&l - Mat::identity(n, n))), |a| {
                    linalg::max_abs(&(&l * a.matrix() - a.matrix()))
                });
                if dist <= eps / 4.0 {
                    break (l, method, dist);
                }
            }
            j_top += 1;
            if j_top > J_MAX {
                return Err(RoundFailure::Hard(Error::AlignmentStalled(J_MAX)));
            }
            y.iter_mut().zip(&step_up).for_each(|(a, f)| *a *= f);
            y = unit(y);
        };
        // backward side: M1^{-j} M̃^{-1} q → q, fixing p
        let step_down: Vec<f64> = model.power(bot, b, 1, model.log_lambda[bot]).iter().map(|f| 1.0 / f).collect();
        let mut z = unit(z0);
        let mut j_bottom = 0;
        let neg_q = -&q;
        let (l_bot, bottom_method, bottom_distance) = loop {
            let ell = &vb * &z;
            if line_angle(&ell, &q) < eps / 10.0 {
                let (l, method) = align_line(&ell, &neg_q, &p, &others(bot))?;
                let lb = linalg::symplectic_inverse(&l);
                let anchor = if j_bottom > 0 { w1.word.letters().first() } else { cur.word.letters().first() };
                let dist = anchor.map_or(linalg::max_abs(&(&lb - Mat::identity(n, n))), |a| {
                    linalg::max_abs(&(a.matrix() * &lb - a.matrix()))
                });
                if dist <= eps / 4.0 {
                    break (lb, method, dist);
                }
            }
            j_bottom += 1;
            if j_bottom > J_MAX {
                return Err(RoundFailure::Hard(Error::AlignmentStalled(J_MAX)));
            }
            z.iter_mut().zip(&step_down).for_each(|(a, f)| *a *= f);
            z = unit(z);
        };
        let mut next = w1.repeat(j_bottom).concat(&cur)?.concat(&w1.repeat(j_top))?;
        let id = Mat::identity(n, n);
        if next.word.is_empty() {
            // nothing to absorb into; insert the maps as letters of their own
            for l in [&l_bot, &l_top] {
                if linalg::max_abs(&(l - &id)) > 0.0 {
                    next.word.letters.push(SymplecticMatrix::trusted(l.clone()));
                    next.reference.letters.push(SymplecticMatrix::identity(d));
                }
            }
        } else {
            let first = &next.word.letters[0];
            next.word.letters[0] = SymplecticMatrix::trusted(first.matrix() * &l_bot);
            let lastk = next.word.len() - 1;
            let last = &next.word.letters[lastk];
            next.word.letters[lastk] = SymplecticMatrix::trusted(&l_top * last.matrix());
        }

        // M̃' = L_top M1^{j_top} M̃ M1^{j_bottom} L_bot on the block
        let lt = (&model.vinv * &l_top * &model.vm).view((bot, bot), (b, b)).into_owned();
        let lbm = (&model.vinv * &l_bot * &model.vm).view((bot, bot), (b, b)).into_owned();
        let mut inner = g.clone();
        scale_rows(&mut inner, &model.power(bot, b, j_top, model.log_lambda[top]));
        scale_cols(&mut inner, &model.power(bot, b, j_bottom, model.log_lambda[top]));
        log_scale += (j_top + j_bottom) as f64 * model.log_lambda[top];
        let mut gn = lt * inner * lbm;
        normalize_block(&mut gn, &mut log_scale)?;

        let mut middle_defect = 0.0_f64;
        for k in 1..b - 1 {
            let img = unit(&vb * gn.column(k));
            for u in [&lines.v[bot], &lines.v[top]] {
                middle_defect = middle_defect.max(omega(&img, u).abs());
            }
        }
        let c_top = gn[(b - 1, b - 1)];
        log_c[top] = log_scale + math::ln(c_top.abs());
        sign_c[top] = c_top.signum();
        // ω(M̃q, M̃p) = ω(q, p) forces c_bot·c_top = 1
        log_c[bot] = -log_c[top];
        sign_c[bot] = sign_c[top];
        if b > 2 {
            g = gn.view((1, 1), (b - 2, b - 2)).into_owned();
            normalize_block(&mut g, &mut log_scale)?;
        }
        rounds.push(RoundReport {
            bottom: bot,
            top,
            j_top,
            j_bottom,
            top_distance,
            bottom_distance,
            top_method,
            bottom_method,
            middle_defect,
        });
        cur = next;
    }
    Ok(RoundsOutcome { core: cur, rounds, log_c, sign_c })
}

/// Pushes the orthonormal flag spanned by the leading columns of `basis`
/// through `letters` with QR steps. Returns the largest angle between each
/// transported flag member and the original, and the accumulated log
/// stretch of every flag direction.
fn flag_transport<'a>(letters: impl Iterator<Item = Mat>, basis: &Mat) -> Result<(f64, Vec<f64>)> {
    let n = basis.ncols();
    let q0 = linalg::orthonormalize(basis, 1e-12);
    if q0.ncols() != n {
        return Err(Error::Numerical("eigenlines are dependent".into()));
    }
    let mut q = q0.clone();
    let mut logs = vec![0.0; n];
    for a in letters {
        let qr = (a * &q).qr();
        let r = qr.r();
        for (i, s) in logs.iter_mut().enumerate() {
            *s += math::ln(r[(i, i)].abs());
        }
        q = qr.q();
    }
    let mut drift = 0.0_f64;
    for i in 1..n {
        let angles = linalg::principal_angles(&q.columns(0, i).into_owned(), &q0.columns(0, i).into_owned());
        drift = drift.max(angles.last().copied().unwrap_or(0.0));
    }
    Ok((drift, logs))
}

/// Builds a word whose monodromy preserves every eigenline of the
/// realified monodromy of `x`, by wrapping the self-transition between
/// powers of the realified word and absorbing alignment maps into the
/// boundary letters. Ends with `M = M_1^l·M̃` for the smallest `l ≥ 1`
/// whose per-step exponents are within `ε/2` of those of `M_1`.
pub fn diagonalize_with_transition(
    system: &PeriodicLinearSystem,
    x: OrbitId,
    transition: &Transition,
    eps: f64,
    seed: u64,
) -> Result<(Word, DiagonalizationReport)> {
    if transition.from != x || transition.to != x {
        return Err(Error::Precondition("transition must go from x to itself".into()));
    }
    let w = system.word(x)?;
    let n0 = w.len();
    let source = monodromy(w);
    let source_top = spectrum::eigenvalues(source.matrix())?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let source_top_exponent = math::ln(source_top) / n0 as f64;

    let real = match realify_spectrum(w, eps, Q_MAX) {
        Err(Error::Rationalization(_)) => realify_spectrum(w, eps, Q_MAX_WIDE)?,
        r => r?,
    };
    let w1 = Tracked { word: real.word.clone(), reference: w.repeat(real.k) };
    let lines = eigenlines(&real);
    let len1 = w1.word.len() as f64;
    let realified_exponents: Vec<f64> = lines.lambda.iter().map(|l| math::ln(l.abs()) / len1).collect();

    let mut nudges = 0;
    let mut nudge_distance = 0.0;
    let outcome = loop {
        let mut t = Tracked { word: transition.word.clone(), reference: transition.word.clone() };
        if nudges > 0 {
            if t.word.is_empty() {
                return Err(Error::Precondition("empty transition is not generic".into()));
            }
            let nudged = nudge(&t.word.letters[0], seed.wrapping_add(nudges as u64), eps / 4.0);
            nudge_distance = linalg::max_abs(&(nudged.matrix() - t.word.letters[0].matrix()));
            t.word.letters[0] = nudged;
        }
        match run_rounds(&lines, &w1, &t, eps) {
            Ok(done) => break done,
            Err(RoundFailure::NotGeneric) if nudges < 16 => nudges += 1,
            Err(RoundFailure::NotGeneric) => {
                return Err(Error::Precondition("transition is not generic within the nudge budget".into()))
            }
            Err(RoundFailure::Hard(e)) => return Err(e),
        }
    };
    let RoundsOutcome { core: core_word, rounds, log_c, sign_c } = outcome;

    let nl = lines.v.len();
    let core_len = core_word.word.len() as f64;
    let log_l: Vec<f64> = lines.lambda.iter().map(|l| math::ln(l.abs())).collect();
    let mut chosen = None;
    for l in 1..=L_MAX {
        let tau = l as f64 * len1 + core_len;
        let logs: Vec<f64> = (0..nl).map(|i| l as f64 * log_l[i] + log_c[i]).collect();
        let close = (0..nl).all(|i| (logs[i] / tau - realified_exponents[i]).abs() < eps / 2.0);
        let mut sorted = logs.clone();
        sorted.sort_by(f64::total_cmp);
        let simple = sorted.windows(2).all(|w| w[1] - w[0] > 1e-9);
        if close && simple {
            chosen = Some((l, logs));
            break;
        }
    }
    let (l, logs) = chosen.ok_or_else(|| Error::Numerical("no power l meets the exponent bound".into()))?;
    let _ = sign_c;
    let out = core_word.concat(&w1.repeat(l))?;
    let period = out.word.len();

    // certify on the letters themselves: the flag of fastest lines is
    // carried forward, the flag of slowest lines backward; both fixed means
    // every eigenline is fixed
    let mut order: Vec<usize> = (0..nl).collect();
    order.sort_by(|&a, &b| logs[b].total_cmp(&logs[a]));
    let basis = |ord: &[usize]| {
        let mut m = Mat::zeros(nl, nl);
        for (c, &i) in ord.iter().enumerate() {
            m.set_column(c, &lines.v[i]);
        }
        m
    };
    let (fwd_drift, fwd_logs) = flag_transport(out.word.letters().iter().map(|a| a.matrix().clone()), &basis(&order))?;
    let rev: Vec<usize> = order.iter().rev().copied().collect();
    let (bwd_drift, _) =
        flag_transport(out.word.letters().iter().rev().map(|a| linalg::symplectic_inverse(a.matrix())), &basis(&rev))?;
    let invariance_defect = fwd_drift.max(bwd_drift);
    let mut output_exponents = vec![0.0; nl];
    for (c, &i) in order.iter().enumerate() {
        output_exponents[i] = fwd_logs[c] / period as f64;
    }
    if invariance_defect > 1e-6 {
        return Err(Error::Numerical(format!("eigenlines drift under the output monodromy ({invariance_defect:e})")));
    }
    let top_gap = (output_exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max) - source_top_exponent).abs();
    if top_gap >= eps {
        return Err(Error::Numerical(format!("top exponent moved by {top_gap} ≥ ε")));
    }
    let letter_distance = word_distance(&out.word, &out.reference).as_f64();
    let report = DiagonalizationReport {
        k: real.k,
        realify_distance: real.distance,
        nudge_distance,
        nudges,
        rounds,
        l,
        period,
        letter_distance,
        source_top_exponent,
        realified_exponents,
        output_exponents,
        top_gap,
        invariance_defect,
    };
    Ok((out.word, report))
}
