//! Eigenstructure of symplectic monodromies: point taxonomy, exponent
//! statistics, strong splittings, domination and the elliptic and shear
//! perturbation matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Serialize, Serializer};

use crate::cocycle::Word;
use crate::linalg::{self, Mat};
use crate::symplectic::{self, classify_subspace, extend_block, symplectic_basis, Subspace, SubspaceKind};
use crate::{math, Error, Result, SymplecticMatrix};

pub type C64 = Complex<f64>;

pub const TOL_EIG: f64 = 1e-7;
pub const TOL_UNIT: f64 = 1e-6;
pub const TOL_SIMPLE: f64 = 1e-6;

/// Eigenvalues from a real Schur decomposition.
pub fn eigenvalues(m: &Mat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n).ok_or_else(|| {
        let sv = linalg::singular_values(m);
        let cond = sv[0] / sv[n - 1].max(f64::MIN_POSITIVE);
        Error::Numerical(format!("Schur iteration failed (condition estimate {cond:e})"))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn by_modulus_then_arg(a: &C64, b: &C64) -> core::cmp::Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then(math::atan2(a.im, a.re).total_cmp(&math::atan2(b.im, b.re)))
}

fn by_modulus_then_parts(a: &C64, b: &C64) -> core::cmp::Ordering {
    a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im))
}

#[derive(Clone, Debug)]
pub struct EigenData {
    /// Eigenvalues sorted by modulus then argument.
    pub values: Vec<C64>,
    /// Unit-norm complex eigenvectors as columns, when the spectrum is simple.
    pub vectors: Option<DMatrix<C64>>,
    /// Indices into `values`, one entry per symmetry class.
    pub quadruple_groups: Vec<Vec<usize>>,
    /// Largest distance between a required partner and the one matched.
    pub symmetry_defect: f64,
    /// `|∏λ − 1|`.
    pub product_defect: f64,
}

/// Groups the spectrum into classes `{λ, 1/λ, λ̄, 1/λ̄}` greedily by
/// modulus then argument.
pub fn eigen_quadruples(m: &SymplecticMatrix, tol: f64) -> Result<EigenData> {
    let mut values = eigenvalues(m.matrix())?;
    values.sort_by(by_modulus_then_arg);
    let n = values.len();
    let mut used = vec![false; n];
    let mut groups = Vec::new();
    let mut defect = 0.0_f64;
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = values[i];
        let real = l.im.abs() <= tol;
        let unit = (l.norm() - 1.0).abs() <= tol;
        let targets: Vec<C64> = match (real, unit) {
            (true, true) => vec![l],
            (true, false) => vec![l.inv()],
            (false, true) => vec![l.conj()],
            (false, false) => vec![l.conj(), l.inv(), l.conj().inv()],
        };
        let mut group = vec![i];
        for t in targets {
            let best = (0..n)
                .filter(|&j| !used[j])
                .min_by(|&a, &b| (values[a] - t).norm().total_cmp(&(values[b] - t).norm()));
            match best {
                Some(j) => {
                    defect = defect.max((values[j] - t).norm());
                    used[j] = true;
                    group.push(j);
                }
                None => defect = f64::INFINITY,
            }
        }
        groups.push(group);
    }
    let prod = values.iter().fold(C64::new(1.0, 0.0), |acc, v| acc * v);
    let vectors = if min_gap(&values) > TOL_SIMPLE { complex_eigenvectors(m.matrix(), &values) } else { None };
    Ok(EigenData {
        values,
        vectors,
        quadruple_groups: groups,
        symmetry_defect: defect,
        product_defect: (prod - C64::new(1.0, 0.0)).norm(),
    })
}

fn complex_eigenvectors(m: &Mat, values: &[C64]) -> Option<DMatrix<C64>> {
    let n = m.nrows();
    let mc: DMatrix<C64> = m.map(|x| C64::new(x, 0.0));
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (c, &l) in values.iter().enumerate() {
        let shifted = &mc - DMatrix::<C64>::identity(n, n) * l;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t?;
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        let v = vt.row(idx).adjoint();
        out.set_column(c, &v);
    }
    Some(out)
}

fn min_gap(values: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            g = g.min((values[i] - values[j]).norm());
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralTag {
    HyperbolicDiagonalizable,
    Hyperbolic,
    MElliptic(usize),
    TotallyElliptic,
    Degenerate,
}

impl SpectralTag {
    pub fn name(&self) -> &'static str {
        match self {
            SpectralTag::HyperbolicDiagonalizable => "HyperbolicDiagonalizable",
            SpectralTag::Hyperbolic => "Hyperbolic",
            SpectralTag::MElliptic(_) => "MElliptic",
            SpectralTag::TotallyElliptic => "TotallyElliptic",
            SpectralTag::Degenerate => "Degenerate",
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, SpectralTag::HyperbolicDiagonalizable | SpectralTag::Hyperbolic)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralClassification {
    pub tag: SpectralTag,
    pub unit_circle_count: usize,
    pub simple: bool,
    /// `log|λ_i|` for the monodromy, descending.
    pub exponents: Vec<f64>,
}

#[derive(Serialize)]
struct ClassificationJson<'a> {
    tag: &'a str,
    m: Option<usize>,
    unit_count: usize,
    exponents: &'a [f64],
}

impl Serialize for SpectralClassification {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let m = match self.tag {
            SpectralTag::MElliptic(m) => Some(m),
            _ => None,
        };
        ClassificationJson { tag: self.tag.name(), m, unit_count: self.unit_circle_count, exponents: &self.exponents }
            .serialize(s)
    }
}

pub fn classify_point(m: &SymplecticMatrix, tol_unit: f64, tol_simple: f64) -> Result<SpectralClassification> {
    let values = eigenvalues(m.matrix())?;
    let d = m.half_dim();
    let mut exponents: Vec<f64> = values.iter().map(|v| math::ln(v.norm())).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let simple = min_gap(&values) > tol_simple;
    let unit: Vec<C64> = values.iter().copied().filter(|v| (v.norm() - 1.0).abs() <= tol_unit).collect();
    let near_pm_one = values
        .iter()
        .any(|v| v.im.abs() <= tol_unit && ((v.re - 1.0).abs() <= tol_unit || (v.re + 1.0).abs() <= tol_unit));
    let tag = if near_pm_one {
        SpectralTag::Degenerate
    } else if unit.is_empty() {
        let positive_real = values.iter().all(|v| v.im.abs() <= tol_simple && v.re > 0.0);
        if positive_real && simple {
            SpectralTag::HyperbolicDiagonalizable
        } else {
            SpectralTag::Hyperbolic
        }
    } else if unit.iter().all(|v| v.im.abs() > tol_unit) && min_gap(&unit) > tol_simple && unit.len() % 2 == 0 {
        if unit.len() == 2 * d {
            SpectralTag::TotallyElliptic
        } else {
            SpectralTag::MElliptic(unit.len() / 2)
        }
    } else {
        SpectralTag::Degenerate
    };
    Ok(SpectralClassification { tag, unit_circle_count: unit.len(), simple, exponents })
}

/// `(1/τ)·log|λ_i|`, descending.
pub fn lyapunov_exponents_periodic(m: &SymplecticMatrix, tau: usize) -> Result<Vec<f64>> {
    if tau == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let values = eigenvalues(m.matrix())?;
    if values.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::Numerical("zero eigenvalue".into()));
    }
    let mut out: Vec<f64> = values.iter().map(|v| math::ln(v.norm()) / tau as f64).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Anything with a monodromy and a period.
pub trait Periodic {
    fn monodromy(&self) -> &SymplecticMatrix;
    fn period(&self) -> usize;
}

/// A bare monodromy/period pair.
#[derive(Clone, Debug)]
pub struct PeriodicSample {
    pub monodromy: SymplecticMatrix,
    pub period: usize,
}

impl Periodic for PeriodicSample {
    fn monodromy(&self) -> &SymplecticMatrix {
        &self.monodromy
    }
    fn period(&self) -> usize {
        self.period
    }
}

/// Supremum over orbits of the smallest positive exponent. `None` on empty
/// input.
pub fn s_statistic<P: Periodic>(orbits: &[P]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for (i, o) in orbits.iter().enumerate() {
        let tau = o.period();
        let values = eigenvalues(o.monodromy().matrix())?;
        if values.iter().any(|v| (v.norm() - 1.0).abs() <= TOL_UNIT) {
            return Err(Error::NotHyperbolic(format!("orbit {i} has a unit-modulus eigenvalue")));
        }
        let lmin = values.iter().map(|v| v.norm()).filter(|&r| r > 1.0).fold(f64::INFINITY, f64::min);
        if lmin.is_finite() {
            let v = math::ln(lmin) / tau.max(1) as f64;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    Ok(best)
}

/// Supremum over orbits of `(1/τ)·log ρ(M|E^c)` with `E^c` supplied per
/// orbit. `None` on empty input.
pub fn central_statistic<P, F>(orbits: &[P], center_of: F) -> Result<Option<f64>>
where
    P: Periodic,
    F: Fn(&P) -> Result<Subspace>,
{
    let mut best: Option<f64> = None;
    for (i, o) in orbits.iter().enumerate() {
        let c = center_of(o)?;
        let m = o.monodromy().matrix();
        let cb = c.basis();
        let r = cb.transpose() * m * cb;
        let defect = linalg::max_abs(&(m * cb - cb * &r)) / linalg::max_abs(m).max(1.0);
        if defect > 1e-6 {
            return Err(Error::Precondition(format!("center of orbit {i} is not invariant (defect {defect:e})")));
        }
        let rho = eigenvalues(&r)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let v = if rho > 0.0 { math::ln(rho) / o.period().max(1) as f64 } else { continue };
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    Ok(best)
}

/// Real invariant subspace for a conjugation-closed set of eigenvalues,
/// computed as the kernel of the product of their real factors.
pub fn spectral_subspace(m: &Mat, block: &[C64]) -> Result<Subspace> {
    let n = m.nrows();
    if block.is_empty() {
        return Subspace::zero(n);
    }
    let id = Mat::identity(n, n);
    let mut p = id.clone();
    let mut seen: Vec<C64> = Vec::new();
    for &l in block {
        let close = |a: &C64| (a - l).norm() <= 1e-6 * l.norm().max(1.0) || (a - l.conj()).norm() <= 1e-6 * l.norm().max(1.0);
        if seen.iter().any(close) {
            continue;
        }
        seen.push(l);
        let factor = if l.im.abs() <= TOL_EIG * l.norm().max(1.0) {
            m - &id * l.re
        } else {
            m * m - m * (2.0 * l.re) + &id * l.norm_sqr()
        };
        p = &factor * p;
        let s = linalg::max_abs(&p);
        if s > 0.0 {
            p /= s;
        }
    }
    let (ker, worst) = linalg::null_space(&p, block.len());
    if worst > 1e-6 {
        return Err(Error::Numerical(format!("eigenvalue block is not semisimple (residual {worst:e})")));
    }
    Subspace::new(ker)
}

fn invariance_defect(m: &Mat, s: &Subspace) -> f64 {
    let b = s.basis();
    if b.ncols() == 0 {
        return 0.0;
    }
    linalg::max_abs(&(m * b - b * (b.transpose() * m * b))) / linalg::max_abs(m).max(1.0)
}

#[derive(Clone, Debug)]
pub struct SplittingData {
    pub ss: Subspace,
    pub c: Subspace,
    pub uu: Subspace,
    pub k: usize,
}

/// Strong stable, center and strong unstable eigenspace sums for the
/// k smallest, middle `2d − 2k` and k largest eigenvalues by modulus.
pub fn strong_splitting(m: &SymplecticMatrix, k: usize) -> Result<SplittingData> {
    let d = m.half_dim();
    if k == 0 || k > d {
        return Err(Error::Precondition(format!("strong dimension {k} outside 1..={d}")));
    }
    let mut values = eigenvalues(m.matrix())?;
    values.sort_by(by_modulus_then_parts);
    let n = 2 * d;
    let gap = |lo: usize| {
        let a = values[lo - 1].norm();
        let b = values[lo].norm();
        b - a > 1e-7 * b.max(1.0)
    };
    if !gap(k) || (k < d && !gap(n - k)) {
        return Err(Error::NoGap(format!("eigenvalue moduli tie at the strong cut k={k}")));
    }
    let mat = m.matrix();
    let ss = spectral_subspace(mat, &values[..k])?;
    let c = spectral_subspace(mat, &values[k..n - k])?;
    let uu = spectral_subspace(mat, &values[n - k..])?;
    for s in [&ss, &c, &uu] {
        let def = invariance_defect(mat, s);
        if def > 1e-7 {
            return Err(Error::Numerical(format!("splitting block not invariant (defect {def:e})")));
        }
    }
    Ok(SplittingData { ss, c, uu, k })
}

/// Outcome of a domination test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domination {
    pub dominated: bool,
    pub margin: f64,
}

fn restricted_norm(a: &Mat, s: &Subspace) -> f64 {
    linalg::spectral_norm(&(a * s.basis()))
}

/// Checks `‖A^(l)|E^i(x)‖·‖(A^(l))⁻¹|E^j(f^l x)‖ ≤ 1/2` at every cyclic
/// position for the pairs (s,c), (s,u), (c,u). The splitting is the one of
/// the monodromy at the first letter.
pub fn domination_test(word: &Word, split: &SplittingData, l: usize) -> Result<Domination> {
    let letters = word.letters();
    let n = letters.len();
    if n == 0 || l == 0 {
        return Err(Error::Precondition("need a nonempty word and l ≥ 1".into()));
    }
    let mut fibers: Vec<[Subspace; 3]> = Vec::with_capacity(n + 1);
    fibers.push([split.ss.clone(), split.c.clone(), split.uu.clone()]);
    for a in letters {
        let prev = fibers.last().expect("nonempty");
        let next = [prev[0].image(a.matrix())?, prev[1].image(a.matrix())?, prev[2].image(a.matrix())?];
        fibers.push(next);
    }
    for b in 0..3 {
        let drift = fibers[n][b].distance(&fibers[0][b]);
        if drift > 1e-7 {
            return Err(Error::Precondition(format!("splitting is not invariant along the word (drift {drift:e})")));
        }
    }
    let pairs: &[(usize, usize)] = if split.c.is_zero() { &[(0, 2)] } else { &[(0, 1), (0, 2), (1, 2)] };
    let dim = letters[0].dim();
    let mut margin = 0.0_f64;
    for x in 0..n {
        let mut p = Mat::identity(dim, dim);
        for step in 0..l {
            p = letters[(x + step) % n].matrix() * p;
        }
        let pinv = linalg::symplectic_inverse(&p);
        let end = (x + l) % n;
        for &(i, j) in pairs {
            let v = restricted_norm(&p, &fibers[x][i]) * restricted_norm(&pinv, &fibers[end][j]);
            margin = margin.max(v);
        }
    }
    Ok(Domination { dominated: margin <= 0.5, margin })
}

fn block_rotation(m: usize, theta: f64) -> Mat {
    let (s, c) = (math::sin(theta), math::cos(theta));
    let mut r = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        r[(i, i)] = c;
        r[(m + i, m + i)] = c;
        r[(i, m + i)] = s;
        r[(m + i, i)] = -s;
    }
    r
}

/// `B·M` where `B` rotates the symplectic subspace `center` by `θ` in each
/// of its symplectic pairs and fixes `center^ω`.
pub fn elliptify(m: &SymplecticMatrix, center: &Subspace, theta: f64) -> Result<SymplecticMatrix> {
    if classify_subspace(center, symplectic::TOL_SYMPL) != SubspaceKind::Symplectic {
        return Err(Error::Precondition("center is not a symplectic subspace".into()));
    }
    let def = invariance_defect(m.matrix(), center);
    if def > 1e-8 {
        return Err(Error::Precondition(format!("center is not invariant (defect {def:e})")));
    }
    if theta == 0.0 {
        return Ok(m.clone());
    }
    let _ = symplectic_basis(center)?;
    let b = extend_block(&block_rotation(center.dim() / 2, theta), center)?;
    Ok(b.map.compose(m))
}

/// `diag(1 − ε_1, …, 1 − ε_m, (1 − ε_1)⁻¹, …, (1 − ε_m)⁻¹)`.
pub fn spectral_shear(eps: &[f64]) -> Result<SymplecticMatrix> {
    if eps.is_empty() {
        return Err(Error::Precondition("need at least one ε".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) || eps.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition("ε must lie in (0,1) and be nonincreasing".into()));
    }
    let m = eps.len();
    let mut a = Mat::zeros(2 * m, 2 * m);
    for (i, &e) in eps.iter().enumerate() {
        a[(i, i)] = 1.0 - e;
        a[(m + i, m + i)] = 1.0 / (1.0 - e);
    }
    SymplecticMatrix::new(a)
}
