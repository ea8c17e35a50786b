//! Symplectic maps of the torus `T^{2d}` and their periodic orbits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{monodromy, Word};
use crate::linalg::{self, Mat};
use crate::spectrum::{self, Periodic, SpectralTag};
use crate::symplectic::{self, TOL_SYMPL};
use crate::{math, Error, Result, SymplecticMatrix};

/// A smooth symplectic self-map of the torus, given on the lift.
pub trait TorusMap {
    /// Ambient dimension `2d`.
    fn dim(&self) -> usize;
    /// Image of `x ∈ [0,1)^{2d}` in lifted coordinates (not wrapped).
    fn lift(&self, x: &[f64]) -> Vec<f64>;
    /// Jacobian at `x` in lifted coordinates.
    fn jacobian(&self, x: &[f64]) -> Mat;

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.lift(x).into_iter().map(math::wrap_unit).collect()
    }
}

/// Max-coordinate distance on the torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| math::wrap_signed(x - y).abs()).fold(0.0, f64::max)
}

/// The map families used by the experiments. Serialized as
/// `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MapFamily {
    /// `x ↦ A x` for an integer symplectic matrix.
    Toral { matrix: Vec<Vec<i64>> },
    /// Kicked rotors `p' = p + F(q)`, `q' = q + p'` with
    /// `F_i = K_i/(2π) sin 2πq_i` plus nearest-neighbour coupling from the
    /// potential `c/(4π²) Σ cos 2π(q_i − q_{i+1})`.
    CoupledStandard { k: Vec<f64>, c: f64 },
    /// Rotation by `theta` about the origin of the centred chart
    /// `[-1/2, 1/2)²`, wrapped back to the torus. Locally a rotation with
    /// constant derivative; used as an elliptic factor.
    Rotation { theta: f64 },
    /// Translation `x ↦ x + shift`.
    Translation { shift: Vec<f64> },
    /// Product acting on the coordinate pairs of each factor in turn.
    Product { factors: Vec<MapFamily> },
}

impl MapFamily {
    pub fn cat() -> Self {
        MapFamily::Toral { matrix: vec![vec![2, 1], vec![1, 1]] }
    }

    pub fn standard(k: f64) -> Self {
        MapFamily::CoupledStandard { k: vec![k], c: 0.0 }
    }

    pub fn identity(d: usize) -> Self {
        MapFamily::Translation { shift: vec![0.0; 2 * d] }
    }

    pub fn product(factors: Vec<MapFamily>) -> Self {
        MapFamily::Product { factors }
    }

    pub fn half_dim(&self) -> usize {
        match self {
            MapFamily::Toral { matrix } => matrix.len() / 2,
            MapFamily::CoupledStandard { k, .. } => k.len(),
            MapFamily::Rotation { .. } => 1,
            MapFamily::Translation { shift } => shift.len() / 2,
            MapFamily::Product { factors } => factors.iter().map(|f| f.half_dim()).sum(),
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            MapFamily::Toral { matrix } => format!("toral{:?}", matrix),
            MapFamily::CoupledStandard { k, c } => format!("standard(k={k:?},c={c})"),
            MapFamily::Rotation { theta } => format!("rotation({theta})"),
            MapFamily::Translation { shift } => format!("translation{shift:?}"),
            MapFamily::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|f| f.label()).collect();
                parts.join("+")
            }
        }
    }

    /// Structural checks plus a symplecticity check of the derivative at
    /// 100 seeded random points.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let defect = symplectic::symplectic_defect(&self.jacobian(&x))?;
            if defect > TOL_SYMPL {
                return Err(Error::NotSymplectic { defect });
            }
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<()> {
        match self {
            MapFamily::Toral { matrix } => {
                let n = matrix.len();
                if n == 0 || n % 2 == 1 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidDimension(format!("toral matrix must be square of even size, got {n} rows")));
                }
                let a = self.toral_matrix().expect("toral");
                let defect = symplectic::symplectic_defect(&a)?;
                if defect != 0.0 {
                    return Err(Error::NotSymplectic { defect });
                }
                Ok(())
            }
            MapFamily::CoupledStandard { k, c } => {
                if k.is_empty() || !c.is_finite() || k.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDimension("coupled standard map needs finite kicks for d ≥ 1".into()));
                }
                Ok(())
            }
            MapFamily::Rotation { theta } => {
                if !theta.is_finite() {
                    return Err(Error::Precondition("rotation angle must be finite".into()));
                }
                Ok(())
            }
            MapFamily::Translation { shift } => {
                if shift.is_empty() || shift.len() % 2 == 1 {
                    return Err(Error::InvalidDimension("translation needs an even, nonzero dimension".into()));
                }
                Ok(())
            }
            MapFamily::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidDimension("empty product".into()));
                }
                factors.iter().try_for_each(|f| f.validate_structure())
            }
        }
    }

    /// The integer matrix of a toral automorphism as floats.
    pub fn toral_matrix(&self) -> Option<Mat> {
        match self {
            MapFamily::Toral { matrix } => {
                let n = matrix.len();
                Some(Mat::from_fn(n, n, |r, c| matrix[r][c] as f64))
            }
            _ => None,
        }
    }

    /// Coordinates of factor `i` inside a product: `(q offset, half-dim)`.
    fn factor_offsets(factors: &[MapFamily]) -> Vec<(usize, usize)> {
        let mut off = 0;
        factors
            .iter()
            .map(|f| {
                let h = f.half_dim();
                let o = off;
                off += h;
                (o, h)
            })
            .collect()
    }
}

fn split_factor(x: &[f64], d: usize, off: usize, h: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * h);
    y.extend_from_slice(&x[off..off + h]);
    y.extend_from_slice(&x[d + off..d + off + h]);
    y
}

fn standard_force(k: &[f64], c: f64, q: &[f64]) -> (Vec<f64>, Mat) {
    let d = k.len();
    let mut f = vec![0.0; d];
    let mut h = Mat::zeros(d, d);
    for i in 0..d {
        let a = math::TAU * q[i];
        f[i] += k[i] / math::TAU * math::sin(a);
        h[(i, i)] += k[i] * math::cos(a);
    }
    for i in 0..d.saturating_sub(1) {
        let a = math::TAU * (q[i] - q[i + 1]);
        let s = c / math::TAU * math::sin(a);
        let dc = c * math::cos(a);
        f[i] += s;
        f[i + 1] -= s;
        h[(i, i)] += dc;
        h[(i + 1, i + 1)] += dc;
        h[(i, i + 1)] -= dc;
        h[(i + 1, i)] -= dc;
    }
    (f, h)
}

impl TorusMap for MapFamily {
    fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MapFamily::Toral { matrix } => {
                matrix.iter().map(|row| row.iter().zip(x).map(|(a, v)| *a as f64 * v).sum()).collect()
            }
            MapFamily::CoupledStandard { k, c } => {
                let d = k.len();
                let (f, _) = standard_force(k, *c, &x[..d]);
                let p: Vec<f64> = (0..d).map(|i| x[d + i] + f[i]).collect();
                let mut out: Vec<f64> = (0..d).map(|i| x[i] + p[i]).collect();
                out.extend(p);
                out
            }
            MapFamily::Rotation { theta } => {
                let (s, c) = (math::sin(*theta), math::cos(*theta));
                let (u, v) = (math::wrap_signed(x[0]), math::wrap_signed(x[1]));
                vec![c * u - s * v, s * u + c * v]
            }
            MapFamily::Translation { shift } => x.iter().zip(shift).map(|(a, b)| a + b).collect(),
            MapFamily::Product { factors } => {
                let d = self.half_dim();
                let mut out = vec![0.0; 2 * d];
                for (f, (off, h)) in factors.iter().zip(MapFamily::factor_offsets(factors)) {
                    let y = f.lift(&split_factor(x, d, off, h));
                    out[off..off + h].copy_from_slice(&y[..h]);
                    out[d + off..d + off + h].copy_from_slice(&y[h..]);
                }
                out
            }
        }
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        match self {
            MapFamily::Toral { .. } => self.toral_matrix().expect("toral"),
            MapFamily::CoupledStandard { k, c } => {
                let d = k.len();
                let (_, h) = standard_force(k, *c, &x[..d]);
                let id = Mat::identity(d, d);
                let mut jm = Mat::zeros(2 * d, 2 * d);
                jm.view_mut((0, 0), (d, d)).copy_from(&(&id + &h));
                jm.view_mut((0, d), (d, d)).copy_from(&id);
                jm.view_mut((d, 0), (d, d)).copy_from(&h);
                jm.view_mut((d, d), (d, d)).copy_from(&id);
                jm
            }
            MapFamily::Rotation { theta } => linalg::rotation(*theta),
            MapFamily::Translation { shift } => Mat::identity(shift.len(), shift.len()),
            MapFamily::Product { factors } => {
                let d = self.half_dim();
                let mut jm = Mat::zeros(2 * d, 2 * d);
                for (f, (off, h)) in factors.iter().zip(MapFamily::factor_offsets(factors)) {
                    let jf = f.jacobian(&split_factor(x, d, off, h));
                    for r in 0..2 * h {
                        for c in 0..2 * h {
                            let gr = if r < h { off + r } else { d + off + r - h };
                            let gc = if c < h { off + c } else { d + off + c - h };
                            jm[(gr, gc)] = jf[(r, c)];
                        }
                    }
                }
                jm
            }
        }
    }
}

/// Settings of the grid-seeded Newton search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Seeds per axis of a coordinate pair; `seeds_per_axis²` seeds in all.
    pub seeds_per_axis: usize,
    pub newton_steps: usize,
    /// Residual `‖f^n(x) − x‖` accepted as converged.
    pub tol: f64,
    /// Torus distance under which two orbit points are the same.
    pub dedup: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { seeds_per_axis: 64, newton_steps: 40, tol: 1e-11, dedup: 1e-6 }
    }
}

pub const MAX_PERIOD: usize = 12;

/// A periodic orbit with its derivative word.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicOrbit {
    /// Orbit points in `[0,1)^{2d}`, starting at the canonical point.
    pub points: Vec<Vec<f64>>,
    pub period: usize,
    /// `Df` at each point, in orbit order.
    pub word: Word,
    pub monodromy: SymplecticMatrix,
}

impl Periodic for PeriodicOrbit {
    fn monodromy(&self) -> &SymplecticMatrix {
        &self.monodromy
    }
    fn period(&self) -> usize {
        self.period
    }
}

impl PeriodicOrbit {
    pub fn classify(&self) -> Result<spectrum::SpectralClassification> {
        spectrum::classify_point(&self.monodromy, spectrum::TOL_UNIT, spectrum::TOL_SIMPLE)
    }
}

/// Seeds for the search: a regular grid on `T²`, and a Kronecker sequence
/// with `seeds_per_axis²` points in higher dimension.
pub fn seed_points(dim: usize, cfg: &SearchConfig) -> Vec<Vec<f64>> {
    let g = cfg.seeds_per_axis.max(1);
    if dim == 2 {
        let mut out = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                out.push(vec![(i as f64 + 0.5) / g as f64, (j as f64 + 0.5) / g as f64]);
            }
        }
        return out;
    }
    const PRIMES: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
    let alpha: Vec<f64> = (0..dim).map(|i| math::wrap_unit(math::sqrt(PRIMES[i % PRIMES.len()]) + i as f64 * 0.1)).collect();
    (1..=g * g).map(|k| alpha.iter().map(|a| math::wrap_unit(k as f64 * a + 0.5)).collect()).collect()
}

/// `f^n(x)` on the torus and the Jacobian of `f^n` at `x`.
pub fn iterate_with_jacobian<M: TorusMap + ?Sized>(map: &M, x: &[f64], n: usize) -> (Vec<f64>, Mat) {
    let dim = map.dim();
    let mut y = x.to_vec();
    let mut jac = Mat::identity(dim, dim);
    for _ in 0..n {
        jac = map.jacobian(&y) * jac;
        y = map.evaluate(&y);
    }
    (y, jac)
}

fn residual(fx: &[f64], x: &[f64]) -> crate::DVector<f64> {
    crate::DVector::from_iterator(x.len(), fx.iter().zip(x).map(|(a, b)| math::wrap_signed(a - b)))
}

/// Newton on `f^n(x) − x ≡ 0 (mod Z^{2d})`. The integer winding is the
/// one picked by rounding at each step. Least-squares steps handle
/// degenerate fixed sets. `None` on divergence.
pub fn newton_periodic<M: TorusMap + ?Sized>(map: &M, x0: &[f64], n: usize, cfg: &SearchConfig) -> Option<Vec<f64>> {
    let dim = map.dim();
    let mut x = x0.to_vec();
    for _ in 0..cfg.newton_steps {
        let (fx, jac) = iterate_with_jacobian(map, &x, n);
        let g = residual(&fx, &x);
        if g.amax() <= cfg.tol {
            return Some(x);
        }
        let a = jac - Mat::identity(dim, dim);
        let mut delta = a.svd(true, true).solve(&g, 1e-10).ok()?;
        let step = delta.amax();
        if !step.is_finite() {
            return None;
        }
        if step > 0.25 {
            delta *= 0.25 / step;
        }
        for (xi, di) in x.iter_mut().zip(delta.iter()) {
            *xi = math::wrap_unit(*xi - di);
        }
    }
    let (fx, _) = iterate_with_jacobian(map, &x, n);
    (residual(&fx, &x).amax() <= cfg.tol).then_some(x)
}

fn round_key(x: &[f64], scale: f64) -> Vec<i64> {
    let m = scale as i64;
    x.iter().map(|v| (math::round(v * scale) as i64).rem_euclid(m)).collect()
}

/// Deterministic accumulator of orbits. Candidates must be offered in a
/// fixed order; the first representative of each orbit is kept.
pub struct OrbitCollector<'a, M: TorusMap + ?Sized> {
    map: &'a M,
    cfg: SearchConfig,
    cells: HashMap<Vec<i64>, Vec<(usize, usize)>>,
    orbits: Vec<PeriodicOrbit>,
}

impl<'a, M: TorusMap + ?Sized> OrbitCollector<'a, M> {
    pub fn new(map: &'a M, cfg: &SearchConfig) -> Self {
        OrbitCollector { map, cfg: cfg.clone(), cells: HashMap::new(), orbits: Vec::new() }
    }

    fn cell_scale(&self) -> f64 {
        // cells at least as wide as the dedup radius
        math::floor(1.0 / (self.cfg.dedup * 10.0).max(1e-9)).max(1.0)
    }

    fn known(&self, x: &[f64]) -> bool {
        let scale = self.cell_scale();
        let base: Vec<i64> = x.iter().map(|v| math::floor(v * scale) as i64).collect();
        let m = scale as i64;
        let dim = x.len();
        let mut offs = vec![-1i64; dim];
        loop {
            let key: Vec<i64> = base.iter().zip(&offs).map(|(b, o)| (b + o).rem_euclid(m)).collect();
            if let Some(list) = self.cells.get(&key) {
                for &(oi, pi) in list {
                    if torus_distance(&self.orbits[oi].points[pi], x) < self.cfg.dedup {
                        return true;
                    }
                }
            }
            // odometer over {-1, 0, 1}^dim
            let mut i = 0;
            while i < dim {
                offs[i] += 1;
                if offs[i] <= 1 {
                    break;
                }
                offs[i] = -1;
                i += 1;
            }
            if i == dim {
                return false;
            }
        }
    }

    /// Offers a point with `f^n(x) ≈ x`. Returns whether a new orbit was
    /// recorded.
    pub fn offer(&mut self, x: &[f64], n: usize) -> Result<bool> {
        if self.known(x) {
            return Ok(false);
        }
        let mut pts = vec![x.to_vec()];
        let mut period = None;
        for tau in 1..=n {
            let next = self.map.evaluate(&pts[tau - 1]);
            if n % tau == 0 && torus_distance(&next, x) < 1e-7 {
                period = Some(tau);
                break;
            }
            pts.push(next);
        }
        let Some(tau) = period else { return Ok(false) };
        pts.truncate(tau);
        let closure = torus_distance(&self.map.evaluate(&pts[tau - 1]), &pts[0]);
        if closure > 1e-9 {
            return Ok(false);
        }
        // canonical start: lexicographically smallest rounded point
        let start = (0..tau).min_by(|&a, &b| round_key(&pts[a], 1e8).cmp(&round_key(&pts[b], 1e8))).unwrap_or(0);
        pts.rotate_left(start);
        let letters = pts.iter().map(|p| SymplecticMatrix::new(self.map.jacobian(p))).collect::<Result<Vec<_>>>()?;
        let word = Word::new(letters)?;
        let mono = monodromy(&word);
        let idx = self.orbits.len();
        let scale = self.cell_scale();
        for (pi, p) in pts.iter().enumerate() {
            let key: Vec<i64> = p.iter().map(|v| (math::floor(v * scale) as i64).rem_euclid(scale as i64)).collect();
            self.cells.entry(key).or_default().push((idx, pi));
        }
        self.orbits.push(PeriodicOrbit { points: pts, period: tau, word, monodromy: mono });
        Ok(true)
    }

    /// Orbits sorted by period, then by canonical point.
    pub fn finish(self) -> Vec<PeriodicOrbit> {
        let mut out = self.orbits;
        out.sort_by(|a, b| {
            a.period.cmp(&b.period).then_with(|| round_key(&a.points[0], 1e8).cmp(&round_key(&b.points[0], 1e8)))
        });
        out
    }
}

pub fn check_period(max_period: usize) -> Result<()> {
    if max_period == 0 || max_period > MAX_PERIOD {
        return Err(Error::Precondition(format!("max period must be in 1..={MAX_PERIOD}, got {max_period}")));
    }
    Ok(())
}

/// All periodic orbits of period `≤ max_period` reached from the seed grid.
pub fn find_periodic_orbits<M: TorusMap + ?Sized>(map: &M, max_period: usize, cfg: &SearchConfig) -> Result<Vec<PeriodicOrbit>> {
    check_period(max_period)?;
    let seeds = seed_points(map.dim(), cfg);
    let mut col = OrbitCollector::new(map, cfg);
    for n in 1..=max_period {
        for s in &seeds {
            if let Some(x) = newton_periodic(map, s, n, cfg) {
                col.offer(&x, n)?;
            }
        }
    }
    Ok(col.finish())
}

/// Number of distinct points with `f^n(x) = x` among `orbits`.
pub fn fixed_point_count(orbits: &[PeriodicOrbit], n: usize) -> usize {
    orbits.iter().filter(|o| n % o.period == 0).map(|o| o.period).sum()
}

/// `|det(Aⁿ − I)|`, the number of points fixed by `Aⁿ` on the torus.
pub fn lefschetz_count(a: &Mat, n: usize) -> u64 {
    let dim = a.nrows();
    let mut p = Mat::identity(dim, dim);
    for _ in 0..n {
        p = a * p;
    }
    let det = (p - Mat::identity(dim, dim)).determinant();
    math::round(det.abs()) as u64
}

/// Histogram of orbit classes and a finite density proxy for elliptic
/// points.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitCensus {
    pub orbits: usize,
    /// Orbits per tag name; `MElliptic` is keyed `MElliptic(m)`.
    pub counts: BTreeMap<String, usize>,
    pub elliptic_points: usize,
    pub m_elliptic_points: usize,
    /// Largest distance from a probe point to the nearest totally elliptic
    /// orbit point; `None` when there is none. A finite surrogate for
    /// density, not a convergence statement.
    pub elliptic_covering_radius: Option<f64>,
    /// Same for points with at least one elliptic pair.
    pub m_elliptic_covering_radius: Option<f64>,
    pub probe_per_axis: usize,
}

pub fn tag_key(tag: &SpectralTag) -> String {
    match tag {
        SpectralTag::MElliptic(m) => format!("MElliptic({m})"),
        t => String::from(t.name()),
    }
}

/// Classifies every orbit and measures covering radii over a
/// `probe_per_axis^{2d}` probe grid.
pub fn orbit_census(orbits: &[PeriodicOrbit], dim: usize, probe_per_axis: usize, tol_unit: f64, tol_simple: f64) -> Result<OrbitCensus> {
    let mut counts = BTreeMap::new();
    let mut elliptic: Vec<&[f64]> = Vec::new();
    let mut m_elliptic: Vec<&[f64]> = Vec::new();
    for o in orbits {
        let cls = spectrum::classify_point(&o.monodromy, tol_unit, tol_simple)?;
        *counts.entry(tag_key(&cls.tag)).or_insert(0) += 1;
        match cls.tag {
            SpectralTag::TotallyElliptic => {
                elliptic.extend(o.points.iter().map(|p| p.as_slice()));
                m_elliptic.extend(o.points.iter().map(|p| p.as_slice()));
            }
            SpectralTag::MElliptic(_) => m_elliptic.extend(o.points.iter().map(|p| p.as_slice())),
            _ => {}
        }
    }
    Ok(OrbitCensus {
        orbits: orbits.len(),
        counts,
        elliptic_points: elliptic.len(),
        m_elliptic_points: m_elliptic.len(),
        elliptic_covering_radius: covering_radius(&elliptic, dim, probe_per_axis),
        m_elliptic_covering_radius: covering_radius(&m_elliptic, dim, probe_per_axis),
        probe_per_axis,
    })
}

/// `max_probe min_point torus_distance`, over a regular probe grid.
pub fn covering_radius(points: &[&[f64]], dim: usize, per_axis: usize) -> Option<f64> {
    if points.is_empty() || per_axis == 0 {
        return None;
    }
    let total = per_axis.checked_pow(dim as u32)?;
    let mut worst = 0.0_f64;
    let mut probe = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for c in probe.iter_mut() {
            *c = (r % per_axis) as f64 / per_axis as f64;
            r /= per_axis;
        }
        let near = points.iter().map(|p| torus_distance(p, &probe)).fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
    }
    Some(worst)
}
