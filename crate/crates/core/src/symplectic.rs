//! Standard symplectic form, certified symplectic matrices, subspaces and
//! the two constructive perturbations: aligning an isotropic subspace and
//! extending a block from a symplectic subspace.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{self, Mat};
use crate::{math, Error, Result};

/// Construction tolerance on `‖AᵀJA − J‖_max`.
pub const TOL_SYMPL: f64 = 1e-9;
/// Tolerance for round-trip checks.
pub const TOL_ROUNDTRIP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StandardForm {
    pub d: usize,
    pub j: Mat,
}

pub fn standard_form(d: usize) -> Result<StandardForm> {
    if d == 0 {
        return Err(Error::InvalidDimension("half-dimension must be positive".into()));
    }
    Ok(StandardForm { d, j: linalg::jmat(d) })
}

impl StandardForm {
    pub fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        omega(u, v)
    }
}

fn half(n: usize) -> Result<usize> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidDimension(format!("dimension {n} is not a positive even number")));
    }
    Ok(n / 2)
}

/// `ω(u, v) = uᵀJv` in the standard basis.
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let d = u.len() / 2;
    (0..d).map(|i| u[i] * v[d + i] - u[d + i] * v[i]).sum()
}

/// Gram matrix `aᵀJb` of the form between two column sets.
pub fn omega_gram(a: &Mat, b: &Mat) -> Mat {
    let d = a.nrows() / 2;
    a.transpose() * linalg::jmat(d) * b
}

/// `‖AᵀJA − J‖_max`.
pub fn symplectic_defect(a: &Mat) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidDimension("matrix is not square".into()));
    }
    let d = half(a.nrows())?;
    let j = linalg::jmat(d);
    Ok(linalg::max_abs(&(a.transpose() * &j * a - j)))
}

pub fn is_symplectic(a: &Mat, tol: f64) -> Result<(bool, f64)> {
    let defect = symplectic_defect(a)?;
    Ok((defect <= tol, defect))
}

/// Row-major JSON shape `{"dim": n, "rows": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRows {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&Mat> for MatrixRows {
    fn from(m: &Mat) -> Self {
        let rows = (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
        MatrixRows { dim: m.nrows(), rows }
    }
}

impl MatrixRows {
    pub fn to_matrix(&self) -> Result<Mat> {
        let n = self.dim;
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDimension(format!("expected {n}x{n} rows")));
        }
        Ok(Mat::from_fn(n, n, |r, c| self.rows[r][c]))
    }
}

/// A square matrix of even size that preserves the standard form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixRows", try_from = "MatrixRows")]
pub struct SymplecticMatrix {
    m: Mat,
    defect: f64,
}

impl From<SymplecticMatrix> for MatrixRows {
    fn from(s: SymplecticMatrix) -> Self {
        MatrixRows::from(&s.m)
    }
}

impl TryFrom<MatrixRows> for SymplecticMatrix {
    type Error = Error;
    fn try_from(r: MatrixRows) -> Result<Self> {
        SymplecticMatrix::new(r.to_matrix()?)
    }
}

impl SymplecticMatrix {
    /// Certifies `m` with the default tolerance, scaled by `max(1, ‖m‖_max²)`
    /// so that products of large-norm letters are not rejected by rounding.
    pub fn new(m: Mat) -> Result<Self> {
        Self::with_tol(m, TOL_SYMPL)
    }

    pub fn with_tol(m: Mat, tol: f64) -> Result<Self> {
        let defect = symplectic_defect(&m)?;
        let scale = math::powi(linalg::max_abs(&m), 2).max(1.0);
        if !(defect <= tol * scale) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(SymplecticMatrix { m, defect })
    }

    /// Wraps a matrix known to be symplectic by construction (products,
    /// inverses); the defect is still measured and cached.
    pub fn trusted(m: Mat) -> Self {
        let defect = symplectic_defect(&m).unwrap_or(f64::INFINITY);
        SymplecticMatrix { m, defect }
    }

    pub fn identity(d: usize) -> Self {
        SymplecticMatrix { m: Mat::identity(2 * d, 2 * d), defect: 0.0 }
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn half_dim(&self) -> usize {
        self.m.nrows() / 2
    }

    /// `A⁻¹ = −J Aᵀ J`, exact up to rounding.
    pub fn inverse(&self) -> Self {
        Self::trusted(linalg::symplectic_inverse(&self.m))
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::trusted(&self.m * &other.m)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Mat::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &self.m * acc;
        }
        Self::trusted(acc)
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::trusted(linalg::direct_sum(&self.m, &other.m))
    }
}

/// A linear subspace stored through an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// Spans the columns of `cols`; dependent columns are dropped.
    pub fn new(cols: Mat) -> Result<Self> {
        half(cols.nrows())?;
        Ok(Subspace { basis: linalg::orthonormalize(&cols, 1e-10) })
    }

    pub fn from_vectors(n: usize, vs: &[DVector<f64>]) -> Result<Self> {
        let mut m = Mat::zeros(n, vs.len());
        for (j, v) in vs.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidDimension("vector length mismatch".into()));
            }
            m.set_column(j, v);
        }
        Self::new(m)
    }

    /// Span of standard basis vectors, indices zero-based.
    pub fn coordinate(n: usize, idx: &[usize]) -> Result<Self> {
        let mut m = Mat::zeros(n, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidDimension(format!("index {i} out of range")));
            }
            m[(i, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(Mat::zeros(n, 0))
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(Mat::identity(n, n))
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Image under a linear map.
    pub fn image(&self, a: &Mat) -> Result<Self> {
        Self::new(a * &self.basis)
    }

    /// Largest principal angle to `other` (zero iff equal spans when the
    /// dimensions agree).
    pub fn distance(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return core::f64::consts::FRAC_PI_2;
        }
        linalg::principal_angles(&self.basis, &other.basis)
            .last()
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    Symplectic,
    Isotropic,
    Lagrangian,
    Generic,
}

/// `W^ω = (JW)^⊥`.
pub fn symplectic_orthogonal(w: &Subspace) -> Subspace {
    let d = w.ambient_dim() / 2;
    let jw = linalg::jmat(d) * w.basis();
    let jw = linalg::orthonormalize(&jw, 1e-10);
    Subspace { basis: linalg::orthogonal_complement(&jw) }
}

pub fn classify_subspace(w: &Subspace, tol: f64) -> SubspaceKind {
    let d = w.ambient_dim() / 2;
    let gram = omega_gram(w.basis(), w.basis());
    if linalg::max_abs(&gram) <= tol {
        return if w.dim() == d { SubspaceKind::Lagrangian } else { SubspaceKind::Isotropic };
    }
    let wo = symplectic_orthogonal(w);
    if wo.is_zero() {
        return SubspaceKind::Symplectic;
    }
    let min_angle = linalg::principal_angles(w.basis(), wo.basis())
        .first()
        .copied()
        .unwrap_or(core::f64::consts::FRAC_PI_2);
    if min_angle > tol {
        SubspaceKind::Symplectic
    } else {
        SubspaceKind::Generic
    }
}

/// Result of aligning an isotropic subspace onto a reference one.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub map: SymplecticMatrix,
    /// Operator norm of the recovered graph map `A: E → F`.
    pub graph_norm: f64,
    /// `‖B − Id‖₂`.
    pub deviation: f64,
}

/// Symplectic `B` with `B(W) = E` and `B|F = Id`, built as
/// `B(x, y) = (x, y − A x)` in coordinates of `V = E ⊕ F` where
/// `W = {(x, A x)}`.
pub fn align_isotropic(w: &Subspace, e: &Subspace, f: &Subspace) -> Result<Alignment> {
    let n = e.ambient_dim();
    let k = e.dim();
    if w.ambient_dim() != n || f.ambient_dim() != n || w.dim() != k || k + f.dim() != n {
        return Err(Error::InvalidDimension("need V = E ⊕ F and dim W = dim E".into()));
    }
    if linalg::max_abs(&omega_gram(e.basis(), e.basis())) > TOL_SYMPL {
        return Err(Error::Precondition("E is not isotropic".into()));
    }
    if linalg::max_abs(&omega_gram(w.basis(), w.basis())) > TOL_ROUNDTRIP {
        return Err(Error::Precondition("W is not isotropic".into()));
    }
    let mut q = Mat::zeros(n, n);
    q.view_mut((0, 0), (n, k)).copy_from(e.basis());
    q.view_mut((0, k), (n, n - k)).copy_from(f.basis());
    let qi = q
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("E and F are not complementary".into()))?;
    let c = &qi * w.basis();
    let x = c.rows(0, k).into_owned();
    let y = c.rows(k, n - k).into_owned();
    let sv = linalg::singular_values(&x);
    if k > 0 && sv.last().copied().unwrap_or(0.0) < 1e-12 {
        return Err(Error::GraphDegenerate);
    }
    let xi = x.try_inverse().ok_or(Error::GraphDegenerate)?;
    let a = y * xi;
    let mut shear = Mat::identity(n, n);
    shear.view_mut((k, 0), (n - k, k)).copy_from(&(-&a));
    let b = &q * shear * &qi;
    let defect = symplectic_defect(&b)?;
    if defect > TOL_ROUNDTRIP * math::powi(linalg::max_abs(&b), 2).max(1.0) {
        return Err(Error::Precondition(format!(
            "F is incompatible with the graph construction (defect {defect:e})"
        )));
    }
    let graph_norm = linalg::spectral_norm(&(f.basis() * &a));
    let deviation = linalg::spectral_norm(&(&b - Mat::identity(n, n)));
    Ok(Alignment { map: SymplecticMatrix { m: b, defect }, graph_norm, deviation })
}

/// Symplectic Gram–Schmidt: returns `(u_1..u_m, v_1..v_m)` as columns with
/// `ω(u_i, v_j) = δ_ij` and all other pairings zero.
pub fn symplectic_basis(w: &Subspace) -> Result<Mat> {
    let k = w.dim();
    if k % 2 != 0 {
        return Err(Error::DegenerateRestriction);
    }
    let mut rest: Vec<DVector<f64>> = (0..k).map(|j| w.basis().column(j).into_owned()).collect();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    while !rest.is_empty() {
        let u = rest.remove(0);
        let (idx, val) = rest
            .iter()
            .enumerate()
            .map(|(i, x)| (i, omega(&u, x)))
            .fold((usize::MAX, 0.0_f64), |best, cur| if cur.1.abs() > best.1.abs() { cur } else { best });
        let scale = u.norm() * rest.get(idx).map(|x| x.norm()).unwrap_or(0.0);
        if idx == usize::MAX || val.abs() <= 1e-9 * scale.max(1e-300) {
            return Err(Error::DegenerateRestriction);
        }
        let v = rest.remove(idx) / val;
        for x in rest.iter_mut() {
            let a = omega(x, &v);
            let b = omega(x, &u);
            *x = &*x - &u * a + &v * b;
        }
        us.push(u);
        vs.push(v);
    }
    let m = us.len();
    let mut out = Mat::zeros(w.ambient_dim(), 2 * m);
    for i in 0..m {
        out.set_column(i, &us[i]);
        out.set_column(m + i, &vs[i]);
    }
    Ok(out)
}

/// Result of extending a block from a symplectic subspace.
#[derive(Clone, Debug)]
pub struct Extension {
    pub map: SymplecticMatrix,
    /// Condition number of the adapted symplectic basis `[S | T]`.
    pub conditioning: f64,
}

/// Symplectic `B` with `B|W = A_W` and `B|W^ω = Id`. `A_W` acts on the
/// coordinates of `symplectic_basis(W)`.
pub fn extend_block(a_w: &Mat, w: &Subspace) -> Result<Extension> {
    let n = w.ambient_dim();
    let k = w.dim();
    if a_w.nrows() != k || a_w.ncols() != k {
        return Err(Error::InvalidDimension(format!("block must be {k}x{k}")));
    }
    if classify_subspace(w, TOL_SYMPL) != SubspaceKind::Symplectic {
        return Err(Error::Precondition("W is not a symplectic subspace".into()));
    }
    let (ok, defect) = is_symplectic(a_w, TOL_ROUNDTRIP * math::powi(linalg::max_abs(a_w), 2).max(1.0))?;
    if !ok {
        return Err(Error::Precondition(format!("block is not symplectic on W (defect {defect:e})")));
    }
    let s = symplectic_basis(w)?;
    let wo = symplectic_orthogonal(w);
    let t = if wo.is_zero() { Mat::zeros(n, 0) } else { symplectic_basis(&wo)? };
    let mut p = Mat::zeros(n, n);
    p.view_mut((0, 0), (n, k)).copy_from(&s);
    p.view_mut((0, k), (n, n - k)).copy_from(&t);
    let pi = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("adapted basis is singular".into()))?;
    let mut blk = Mat::identity(n, n);
    blk.view_mut((0, 0), (k, k)).copy_from(a_w);
    let b = &p * blk * &pi;
    let conditioning = linalg::spectral_norm(&p) * linalg::spectral_norm(&pi);
    Ok(Extension { map: SymplecticMatrix::trusted(b), conditioning })
}

/// Nonnegative real or the infinity sentinel. Serializes as a number or
/// the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// Maps the sentinel to `f64::INFINITY` for comparisons.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Extended;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> core::result::Result<Extended, E> {
                Ok(Extended::Finite(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<Extended, E> {
                Ok(Extended::Finite(v as f64))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<Extended, E> {
                Ok(Extended::Finite(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<Extended, E> {
                if v == "inf" {
                    Ok(Extended::Infinite)
                } else {
                    Err(E::custom("expected \"inf\""))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Cosines below this count as orthogonal.
const ORTHO_COS: f64 = 1e-14;

/// `min_{w ∈ E, |w| = 1} |tan ∠(w, F)|`, i.e. the tangent of the smallest
/// principal angle.
pub fn angle(e: &Subspace, f: &Subspace) -> Result<Extended> {
    if e.is_zero() || f.is_zero() {
        return Err(Error::InvalidDimension("angle needs nonzero subspaces".into()));
    }
    let cos_max = linalg::singular_values(&(e.basis().transpose() * f.basis()))[0];
    if cos_max <= ORTHO_COS {
        return Ok(Extended::Infinite);
    }
    let theta = linalg::principal_angles(e.basis(), f.basis())[0];
    Ok(Extended::Finite(math::tan(theta).abs()))
}

/// `‖L‖⁻¹` where `F` is the graph of `L: E^⊥ → E`. Requires complementary
/// dimensions; returns zero when `F` meets `E`.
pub fn graph_angle(e: &Subspace, f: &Subspace) -> Result<Extended> {
    let n = e.ambient_dim();
    if e.is_zero() || f.is_zero() || e.dim() + f.dim() != n {
        return Err(Error::InvalidDimension("graph angle needs complementary nonzero subspaces".into()));
    }
    let p = linalg::orthogonal_complement(e.basis());
    let a = e.basis().transpose() * f.basis();
    let b = p.transpose() * f.basis();
    if linalg::singular_values(&b).last().copied().unwrap_or(0.0) < 1e-12 {
        return Ok(Extended::Finite(0.0));
    }
    let bi = b.try_inverse().ok_or_else(|| Error::Numerical("graph inversion".into()))?;
    let l = linalg::spectral_norm(&(a * bi));
    if l <= ORTHO_COS {
        Ok(Extended::Infinite)
    } else {
        Ok(Extended::Finite(1.0 / l))
    }
}

/// `exp(J S)` for a seeded random symmetric `S` with `‖S‖₂ ≤ radius`.
pub fn random_symplectic(d: usize, seed: u64, radius: f64) -> Result<SymplecticMatrix> {
    half(2 * d)?;
    if !(radius >= 0.0) {
        return Err(Error::Precondition("radius must be nonnegative".into()));
    }
    let n = 2 * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let x: f64 = rng.random_range(-1.0..1.0);
            s[(r, c)] = x;
            s[(c, r)] = x;
        }
    }
    let target = radius * rng.random_range(0.0..=1.0);
    let norm = linalg::spectral_norm(&s);
    if norm > 0.0 {
        s *= target / norm;
    }
    let m = linalg::expm(&(linalg::jmat(d) * s));
    SymplecticMatrix::new(m)
}

/// Builds a Hamiltonian generator `J S` from a symmetric `S`.
pub fn hamiltonian(s: &Mat) -> Mat {
    linalg::jmat(s.nrows() / 2) * s
}

