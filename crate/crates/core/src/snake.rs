//! Snake perturbations of a linear hyperbolic chart and the horseshoes
//! they create.
//!
//! The chart is `(q_1..q_d, p_1..p_d)` with `Dp = diag(λ_1..λ_d, 1/λ_1..1/λ_d)`
//! and every `λ_i ≥ 1`, so `q_i` expands and `p_i` contracts. The snake acts
//! on one conjugate pair: `x_u = q_i`, `x_s = p_i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::entropy::horseshoe_entropy;
use crate::linalg::Mat;
use crate::spectrum::SplittingData;
use crate::{math, Error, Result, Subspace, SymplecticMatrix};

const PI: f64 = core::f64::consts::PI;

/// Width of the cutoff collar as a fraction of `r`.
pub const COLLAR: f64 = 0.1;
/// Largest return time tried by [`build_horseshoe`].
pub const T_MAX: u64 = 200;
/// Required ratio between the stretched image and the rectangle width.
pub const STRETCH_MARGIN: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnakeParams {
    pub d: usize,
    pub m: usize,
    pub r: f64,
    pub n: u64,
    pub delta: f64,
    /// Chart constant `R`.
    #[serde(default = "one")]
    pub chart: f64,
    /// Transit iterates `K` on each side of the homoclinic point; the
    /// transit contributes `2K` to the return time and no stretching.
    #[serde(default)]
    pub transit: u64,
}

fn one() -> f64 {
    1.0
}

impl SnakeParams {
    pub fn new(d: usize, m: usize, r: f64, n: u64, delta: f64) -> Result<Self> {
        let p = SnakeParams { d, m, r, n, delta, chart: 1.0, transit: 0 };
        p.check_shape()?;
        Ok(p)
    }

    /// `A = 2Rrδ/(πN)`, always recomputed.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.chart * self.r * self.delta / (PI * self.n as f64)
    }

    /// Strong dimension `k = d − m + 1`.
    pub fn strong_dim(&self) -> usize {
        self.d + 1 - self.m
    }

    fn check_shape(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 || self.m > self.d {
            return Err(Error::InvalidDimension(format!("need 1 <= m <= d, got d={} m={}", self.d, self.m)));
        }
        if self.n < 2 {
            return Err(Error::Precondition(format!("oscillation count N={} below 2", self.n)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) || !(self.delta >= 0.0) || !(self.chart > 0.0) {
            return Err(Error::Precondition("r, R must be positive and δ nonnegative".into()));
        }
        Ok(())
    }

    /// Full validity: shape plus `0 < A < r`.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        let a = self.amplitude();
        if !(a > 0.0) {
            return Err(Error::Geometry("amplitude A = 0".into()));
        }
        if a >= self.r {
            return Err(Error::Geometry(format!("amplitude A={a:e} not below r={:e}", self.r)));
        }
        Ok(())
    }
}

/// Linearization at the fixed point together with its strong splitting and
/// the segment of strong homoclinic intersections, given as `x_s` endpoints.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub dp: SymplecticMatrix,
    pub splitting: SplittingData,
    pub segment: (f64, f64),
    expansion: Vec<f64>,
    /// Strong pairs ordered by decreasing `λ`.
    strong: Vec<usize>,
}

impl LinearModel {
    /// `lambdas` are the expanding factors `λ_1..λ_d`.
    pub fn diagonal(lambdas: &[f64], m: usize, segment: (f64, f64)) -> Result<Self> {
        let d = lambdas.len();
        if d == 0 || m == 0 || m > d {
            return Err(Error::InvalidDimension(format!("need 1 <= m <= d, got d={d} m={m}")));
        }
        if lambdas.iter().any(|&l| !(l >= 1.0) || !l.is_finite()) {
            return Err(Error::Precondition("expanding factors must be finite and >= 1".into()));
        }
        if !(segment.0 < segment.1) {
            return Err(Error::Precondition("segment endpoints out of order".into()));
        }
        let k = d + 1 - m;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));
        if k < d && lambdas[order[k - 1]] <= lambdas[order[k]] {
            return Err(Error::NoGap(format!("expanding factors tie at the strong cut k={k}")));
        }
        let n = 2 * d;
        let mut mat = Mat::zeros(n, n);
        for (i, &l) in lambdas.iter().enumerate() {
            mat[(i, i)] = l;
            mat[(d + i, d + i)] = 1.0 / l;
        }
        let strong: Vec<usize> = order[..k].to_vec();
        let uu: Vec<usize> = strong.clone();
        let ss: Vec<usize> = strong.iter().map(|&i| d + i).collect();
        let c: Vec<usize> = order[k..].iter().flat_map(|&i| [i, d + i]).collect();
        let splitting = SplittingData {
            ss: Subspace::coordinate(n, &ss)?,
            c: Subspace::coordinate(n, &c)?,
            uu: Subspace::coordinate(n, &uu)?,
            k,
        };
        Ok(LinearModel { dp: SymplecticMatrix::new(mat)?, splitting, segment, expansion: lambdas.to_vec(), strong })
    }

    pub fn half_dim(&self) -> usize {
        self.expansion.len()
    }

    /// Strong pair with the weakest expansion; the snake acts there.
    pub fn designated_pair(&self) -> usize {
        *self.strong.last().expect("k >= 1")
    }

    /// `σ_uu`, the weakest strong expansion.
    pub fn weakest_strong(&self) -> f64 {
        self.expansion[self.designated_pair()]
    }

    /// Smallest positive exponent on `E^ss ⊕ E^uu`.
    pub fn smallest_strong_exponent(&self) -> f64 {
        math::ln(self.weakest_strong())
    }

    /// `‖Dp^{−t}|E^uu‖` and `‖Dp^t|E^ss‖`, read off the splitting bases.
    pub fn strong_norms(&self, t: u64) -> (f64, f64) {
        let dp = self.dp.matrix();
        let power = |e: f64| {
            let diag: Vec<f64> = (0..dp.nrows()).map(|i| math::exp(e * math::ln(dp[(i, i)]))).collect();
            Mat::from_diagonal(&nalgebra::DVector::from_vec(diag))
        };
        let t = t as f64;
        let uu = crate::linalg::spectral_norm(&(power(-t) * self.splitting.uu.basis()));
        let ss = crate::linalg::spectral_norm(&(power(t) * self.splitting.ss.basis()));
        (uu, ss)
    }
}

/// `S(u)`: smooth step from 0 at `u ≤ 0` to 1 at `u ≥ 1`, and its derivative.
fn smooth_step(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    let phi = |x: f64| math::exp(-1.0 / x);
    let (a, b) = (phi(u), phi(1.0 - u));
    let (da, db) = (a / (u * u), b / ((1.0 - u) * (1.0 - u)));
    let s = a + b;
    (a / s, (da * b + a * db) / (s * s))
}

/// The shear `x_u ↦ x_u + g(x_s)` with `g(s) = χ(s)·A·cos(πNs/(2r))`, where
/// the cutoff `χ` is 1 on `|s| ≤ r` and vanishes from `|s| ≥ (1+COLLAR)r`.
/// The cutoff depends on `x_s` only, which keeps the map an exact shear in
/// a conjugate pair.
#[derive(Clone, Debug)]
pub struct SnakeMap {
    d: usize,
    pair: usize,
    r: f64,
    n: f64,
    amplitude: f64,
}

impl SnakeMap {
    pub fn new(params: &SnakeParams, pair: usize) -> Result<Self> {
        params.validate()?;
        if pair >= params.d {
            return Err(Error::InvalidDimension(format!("pair {pair} outside 0..{}", params.d)));
        }
        Ok(SnakeMap { d: params.d, pair, r: params.r, n: params.n as f64, amplitude: params.amplitude() })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `g(s)` and `g'(s)`.
    pub fn profile(&self, s: f64) -> (f64, f64) {
        let w = PI * self.n / (2.0 * self.r);
        let (c, sn) = (math::cos(w * s), math::sin(w * s));
        let collar = COLLAR * self.r;
        let (chi, dchi) = if s.abs() <= self.r {
            (1.0, 0.0)
        } else {
            let (v, dv) = smooth_step((self.r + collar - s.abs()) / collar);
            (v, -dv * s.signum() / collar)
        };
        let a = self.amplitude;
        (chi * a * c, a * (dchi * c - chi * w * sn))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[self.pair] += self.profile(x[self.d + self.pair]).0;
        y
    }

    pub fn jacobian(&self, x: &[f64]) -> Mat {
        let n = 2 * self.d;
        let mut j = Mat::identity(n, n);
        j[(self.pair, self.d + self.pair)] = self.profile(x[self.d + self.pair]).1;
        j
    }

    /// Sampled `sup |g|` and `sup |g'|` over `|s| ≤ (1+COLLAR)r`.
    pub fn c1_distance(&self, samples: usize) -> (f64, f64) {
        let span = (1.0 + COLLAR) * self.r;
        let samples = samples.max(2);
        let mut c0 = 0.0_f64;
        let mut c1 = 0.0_f64;
        for i in 0..samples {
            let s = -span + 2.0 * span * i as f64 / (samples - 1) as f64;
            let (g, dg) = self.profile(s);
            c0 = c0.max(g.abs());
            c1 = c1.max(dg.abs());
        }
        (c0, c1)
    }
}

/// `Θ` on the designated pair of the model.
pub fn snake_map(model: &LinearModel, params: &SnakeParams) -> Result<SnakeMap> {
    if params.d != model.half_dim() {
        return Err(Error::InvalidDimension("params and model disagree on d".into()));
    }
    SnakeMap::new(params, model.designated_pair())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossings {
    /// Transversal zeros in the open segment; zero when degenerate.
    pub count: usize,
    pub points: Vec<f64>,
    /// `A = 0`: the whole segment is an intersection and nothing is counted.
    pub degenerate: bool,
    pub refinements: u32,
}

/// Crossings of the snaked line `x_u = 0` with the segment `[−r, r]`.
pub fn count_crossings(params: &SnakeParams) -> Result<Crossings> {
    count_crossings_on(params, (-params.r, params.r))
}

/// Sign-change scan of `g` over the open `segment` at resolution `r/(100N)`,
/// halving the cell up to three times when a cell may hide two zeros.
pub fn count_crossings_on(params: &SnakeParams, segment: (f64, f64)) -> Result<Crossings> {
    params.check_shape()?;
    if !(segment.0 < segment.1) {
        return Err(Error::Precondition("segment endpoints out of order".into()));
    }
    let a = params.amplitude();
    if a == 0.0 {
        return Ok(Crossings { count: 0, points: Vec::new(), degenerate: true, refinements: 0 });
    }
    if a >= params.r {
        return Err(Error::Geometry(format!("amplitude A={a:e} not below r={:e}", params.r)));
    }
    let snake = SnakeMap { d: 1, pair: 0, r: params.r, n: params.n as f64, amplitude: a };
    let mut h = params.r / (100.0 * params.n as f64);
    for refinements in 0..=3u32 {
        if let Some(points) = scan_zeros(&snake, segment, h) {
            return Ok(Crossings { count: points.len(), points, degenerate: false, refinements });
        }
        h *= 0.5;
    }
    Err(Error::Numerical("crossing scan unresolved after 3 refinements".into()))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `None` when some cell may contain two zeros.
fn scan_zeros(snake: &SnakeMap, (lo, hi): (f64, f64), h: f64) -> Option<Vec<f64>> {
    let g = |s: f64| snake.profile(s).0;
    let dg = |s: f64| snake.profile(s).1;
    let cells = math::ceil((hi - lo) / h).max(1.0) as usize;
    let step = (hi - lo) / cells as f64;
    let edge = 1e-12 * (hi - lo);
    let slope_floor = 1e-12 * snake.amplitude * PI * snake.n / (2.0 * snake.r);
    let mut out = Vec::new();
    for i in 0..cells {
        let a = lo + step * i as f64;
        let b = if i + 1 == cells { hi } else { lo + step * (i + 1) as f64 };
        let (ga, gb) = (g(a), g(b));
        let root = if ga == 0.0 {
            (i > 0).then_some(a)
        } else if (ga > 0.0) != (gb > 0.0) && gb != 0.0 {
            Some(bisect(g, a, b))
        } else {
            if (dg(a) > 0.0) != (dg(b) > 0.0) {
                let ext = bisect(dg, a, b);
                if (g(ext) > 0.0) != (ga > 0.0) {
                    return None;
                }
            }
            None
        };
        if let Some(z) = root {
            if z - lo > edge && hi - z > edge && dg(z).abs() > slope_floor {
                out.push(z);
            }
        }
    }
    Some(out)
}

/// Return map of the rectangle `D = [−r, r] × [−A/2, A/2]` in the
/// designated `(x_s, x_u)` chart: `L` linear steps, the transit carrying the
/// local unstable line onto the segment (a quarter turn), then `Θ`.
#[derive(Clone, Debug)]
pub struct ReturnMap {
    snake: SnakeMap,
    stretch: f64,
    linear_steps: u64,
    half_height: f64,
}

impl ReturnMap {
    pub fn apply(&self, (s, u): (f64, f64)) -> (f64, f64) {
        let s_new = u * self.stretch;
        (s_new, -s / self.stretch + self.snake.profile(s_new).0)
    }

    pub fn in_rect(&self, (s, u): (f64, f64)) -> bool {
        s.abs() <= self.snake.r && u.abs() <= self.half_height
    }

    fn center(&self, a: usize) -> f64 {
        let n = self.snake.n;
        (2.0 * a as f64 + 1.0 - n) / n
    }

    /// Index of the strip of `D ∩ g⁻¹(D)` containing `p`.
    pub fn symbol(&self, p: (f64, f64)) -> Option<usize> {
        if !self.in_rect(p) || !self.in_rect(self.apply(p)) {
            return None;
        }
        let n = self.snake.n;
        let y = p.1 * self.stretch / self.snake.r;
        let a = math::round((y * n + n - 1.0) / 2.0).clamp(0.0, n - 1.0) as usize;
        ((y - self.center(a)).abs() < 1.0 / n).then_some(a)
    }

    pub fn linear_steps(&self) -> u64 {
        self.linear_steps
    }
}

/// Smallest number of linear steps after which the image of `D` is longer
/// than `STRETCH_MARGIN` times its width and thinner than its height by the
/// same factor, found by pushing the corners of `D` through `Dp`.
pub fn linear_steps(model: &LinearModel, r: f64, amplitude: f64) -> Option<u64> {
    let d = model.half_dim();
    let i = model.designated_pair();
    let dp = model.dp.matrix();
    let h = 0.5 * amplitude;
    let mut corners: Vec<nalgebra::DVector<f64>> = [(r, h), (-r, h), (r, -h), (-r, -h)]
        .iter()
        .map(|&(s, u)| {
            let mut v = nalgebra::DVector::zeros(2 * d);
            v[d + i] = s;
            v[i] = u;
            v
        })
        .collect();
    for steps in 0..=T_MAX {
        let ext = |k: usize| corners.iter().fold(0.0_f64, |m, v| m.max(v[k].abs()));
        if ext(i) >= STRETCH_MARGIN * r && STRETCH_MARGIN * ext(d + i) <= h {
            return Some(steps);
        }
        for v in corners.iter_mut() {
            *v = dp * &*v;
        }
    }
    None
}

/// `ceil(log(r/A)/log σ_uu)`; `None` without expansion.
pub fn predicted_steps(model: &LinearModel, r: f64, amplitude: f64) -> Option<u64> {
    let s = model.weakest_strong();
    (s > 1.0).then(|| math::ceil(math::ln(r / amplitude) / math::ln(s)).max(0.0) as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorseshoeReport {
    pub n: u64,
    pub amplitude: f64,
    /// Return time: linear steps plus `2K` transit iterates.
    pub t: u64,
    pub linear_steps: u64,
    pub predicted_t: u64,
    /// Image length over rectangle width; at least `STRETCH_MARGIN`.
    pub stretch_margin: f64,
    pub crossings: Crossings,
    /// Components of `g(D) ∩ D` along the lines `x_s = −r, 0, r`.
    pub components: [usize; 3],
    pub full_crossings: [usize; 3],
    pub transitions: Vec<Vec<bool>>,
    /// Admissible words of length `1..=5`.
    pub cylinder_counts: Vec<u64>,
    pub entropy: f64,
}

impl HorseshoeReport {
    pub fn is_full_shift(&self) -> bool {
        let n = self.n as usize;
        self.components.iter().all(|&c| c == n)
            && self.full_crossings.iter().all(|&c| c == n)
            && self.transitions.iter().all(|row| row.iter().all(|&x| x))
    }
}

fn return_map(model: &LinearModel, params: &SnakeParams) -> Result<ReturnMap> {
    let snake = snake_map(model, params)?;
    let a = snake.amplitude;
    let sigma = model.weakest_strong();
    let Some(steps) = linear_steps(model, params.r, a) else {
        let need = match predicted_steps(model, params.r, a) {
            Some(p) => format!("about {p} steps"),
            None => "infinitely many steps (no strong expansion)".into(),
        };
        return Err(Error::ModelTooWeak(format!("no full stretch within {T_MAX} steps; σ_uu={sigma} needs {need}")));
    };
    let stretch = math::exp(steps as f64 * math::ln(sigma));
    Ok(ReturnMap { snake, stretch, linear_steps: steps, half_height: 0.5 * a })
}

/// Runs of `g(D) ∩ D` along `x_s = s0` and how many of them cross `D` from
/// bottom to top.
fn components_on_line(g: &ReturnMap, s0: f64) -> (usize, usize) {
    let n = g.snake.n;
    let samples = (100.0 * n) as usize + 1;
    let r = g.snake.r;
    let point = |y: f64| (s0, y * r / g.stretch);
    let inside = |y: f64| g.in_rect(g.apply(point(y)));
    let u_of = |y: f64| g.apply(point(y)).1;
    let (mut runs, mut full) = (0, 0);
    let mut start: Option<f64> = None;
    let mut prev = -1.0;
    for i in 0..samples {
        let y = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
        let now = inside(y);
        match (start, now) {
            (None, true) => start = Some(if i == 0 { y } else { bisect_edge(&inside, prev, y) }),
            (Some(a), false) => {
                let b = bisect_edge(&inside, y, prev);
                runs += 1;
                full += usize::from(crosses(g, u_of(a), u_of(b)));
                start = None;
            }
            _ => {}
        }
        prev = y;
    }
    if let Some(a) = start {
        runs += 1;
        full += usize::from(crosses(g, u_of(a), u_of(1.0)));
    }
    (runs, full)
}

/// Last point of `out` side before `inside` flips, between `out` and `in_`.
fn bisect_edge(inside: &impl Fn(f64) -> bool, mut out: f64, mut in_: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (out + in_);
        if inside(mid) {
            in_ = mid;
        } else {
            out = mid;
        }
    }
    in_
}

fn crosses(g: &ReturnMap, ua: f64, ub: f64) -> bool {
    let h = g.half_height;
    let tol = 1e-6 * h;
    (ua.abs() - h).abs() < tol && (ub.abs() - h).abs() < tol && ua * ub < 0.0
}

/// Witness point of strip `a` whose image lies in strip `b`.
fn transition_witness(g: &ReturnMap, a: usize, b: usize) -> Option<(f64, f64)> {
    let n = g.snake.n;
    let r = g.snake.r;
    let target = g.center(b) * r / g.stretch;
    let f = |y: f64| g.apply((0.0, y * r / g.stretch)).1 - target;
    let (lo, hi) = (g.center(a) - 1.0 / n, g.center(a) + 1.0 / n);
    if (f(lo) > 0.0) == (f(hi) > 0.0) {
        return None;
    }
    let y = bisect(f, lo, hi);
    let z = (0.0, y * r / g.stretch);
    (g.symbol(z) == Some(a) && g.symbol(g.apply(z)) == Some(b)).then_some(z)
}

fn count_words(transitions: &[Vec<bool>], max_len: usize) -> Vec<u64> {
    let n = transitions.len();
    let mut ends = vec![1u64; n];
    let mut out = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        if len > 1 {
            let mut next = vec![0u64; n];
            for (a, &c) in ends.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    if transitions[a][b] {
                        *slot = slot.saturating_add(c);
                    }
                }
            }
            ends = next;
        }
        out.push(ends.iter().fold(0u64, |s, &c| s.saturating_add(c)));
    }
    out
}

/// Builds the rectangle, finds the return time and checks that the return
/// map is a full shift on `N` symbols.
pub fn build_horseshoe(model: &LinearModel, params: &SnakeParams) -> Result<HorseshoeReport> {
    params.validate()?;
    let crossings = count_crossings_on(params, model.segment)?;
    if crossings.count as u64 != params.n {
        return Err(Error::Precondition(format!(
            "segment carries {} crossings, expected N={}",
            crossings.count, params.n
        )));
    }
    let g = return_map(model, params)?;
    let a = g.snake.amplitude;
    let r = params.r;
    let mut components = [0; 3];
    let mut full_crossings = [0; 3];
    for (k, s0) in [-r, 0.0, r].into_iter().enumerate() {
        (components[k], full_crossings[k]) = components_on_line(&g, s0);
    }
    let n = params.n as usize;
    let transitions: Vec<Vec<bool>> =
        (0..n).map(|a| (0..n).map(|b| transition_witness(&g, a, b).is_some()).collect()).collect();
    let cylinder_counts = count_words(&transitions, 5);
    let t = g.linear_steps + 2 * params.transit;
    Ok(HorseshoeReport {
        n: params.n,
        amplitude: a,
        t,
        linear_steps: g.linear_steps,
        predicted_t: predicted_steps(model, r, a).unwrap_or(u64::MAX).saturating_add(2 * params.transit),
        stretch_margin: g.half_height * g.stretch / r,
        crossings,
        components,
        full_crossings,
        transitions,
        cylinder_counts,
        entropy: horseshoe_entropy(params.n, t),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormBound {
    pub n: u64,
    pub amplitude: f64,
    pub t: u64,
    pub norm_uu: f64,
    pub norm_ss: f64,
    /// Smallest `K₁` with `A ≤ K₁·max{norm_uu, norm_ss}` for this run.
    pub k1: f64,
}

impl NormBound {
    /// `K₁·max − A` for a given constant; positive when the bound holds.
    pub fn margin(&self, k1: f64) -> f64 {
        k1 * self.norm_uu.max(self.norm_ss) - self.amplitude
    }
}

/// Both strong norms at the return time of one run. For `t = 0` the norms
/// are 1 and `K₁ = A`.
pub fn check_norm_bound(model: &LinearModel, params: &SnakeParams, t: u64) -> NormBound {
    let (norm_uu, norm_ss) = model.strong_norms(t);
    let a = params.amplitude();
    NormBound { n: params.n, amplitude: a, t, norm_uu, norm_ss, k1: a / norm_uu.max(norm_ss) }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormFit {
    /// Smallest integer constant valid for every run, strictly.
    pub k1: u64,
    pub k1_min: f64,
    pub k1_max: f64,
    /// `k1_max / k1_min`.
    pub spread: f64,
    pub margins: Vec<f64>,
}

/// Fits one constant over a family of runs.
pub fn fit_norm_bound(runs: &[NormBound]) -> Result<NormFit> {
    if runs.is_empty() {
        return Err(Error::Precondition("no runs to fit".into()));
    }
    let k1_min = runs.iter().map(|b| b.k1).fold(f64::INFINITY, f64::min);
    let k1_max = runs.iter().map(|b| b.k1).fold(0.0, f64::max);
    let k1 = math::floor(k1_max) as u64 + 1;
    let margins = runs.iter().map(|b| b.margin(k1 as f64)).collect();
    Ok(NormFit { k1, k1_min, k1_max, spread: k1_max / k1_min, margins })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyComparison {
    pub log_n: f64,
    pub t: u64,
    /// `(1/t)·log N`.
    pub lhs: f64,
    /// `min{(1/t) log‖Dp^{−t}|E^uu‖⁻¹, (1/t) log‖Dp^t|E^ss‖⁻¹}`.
    pub min_term: f64,
    pub slack: f64,
    pub smallest_strong_exponent: f64,
    pub holds: bool,
    /// `lhs − (min_term − slack)`.
    pub margin: f64,
}

fn compare(model: &LinearModel, log_n: f64, t: u64, k: u32) -> EntropyComparison {
    let (uu, ss) = model.strong_norms(t);
    let tf = t.max(1) as f64;
    let min_term = (-math::ln(uu) / tf).min(-math::ln(ss) / tf);
    let lhs = log_n / tf;
    let slack = 1.0 / (2.0 * k.max(1) as f64);
    let margin = lhs - (min_term - slack);
    EntropyComparison {
        log_n,
        t,
        lhs,
        min_term,
        slack,
        smallest_strong_exponent: model.smallest_strong_exponent(),
        holds: margin > 0.0,
        margin,
    }
}

/// Closing inequality for one built horseshoe.
pub fn verify_entropy_comparison(model: &LinearModel, horseshoe: &HorseshoeReport, k: u32) -> EntropyComparison {
    compare(model, math::ln(horseshoe.n as f64), horseshoe.t, k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonScan {
    /// One row per `N = 2^j`, `j = 1..`.
    pub rows: Vec<EntropyComparison>,
    /// Smallest tested `j` from which on every tested `N = 2^j` satisfies
    /// the inequality.
    pub threshold_log2: Option<u32>,
}

impl ComparisonScan {
    /// Loud flag: the inequality failed for every tested `N`.
    pub fn never_holds(&self) -> bool {
        !self.rows.iter().any(|r| r.holds)
    }
}

/// Evaluates the inequality for `N = 2, 4, .., 2^max_log2` at fixed
/// `(R, r, δ, K)`. Return times come from the same stretching simulation as
/// [`build_horseshoe`]; the crossing scan is skipped since its cost grows
/// with `N`.
pub fn comparison_scan(model: &LinearModel, base: &SnakeParams, k: u32, max_log2: u32) -> Result<ComparisonScan> {
    base.check_shape()?;
    let mut rows = Vec::new();
    for j in 1..=max_log2 {
        let n = math::exp(j as f64 * core::f64::consts::LN_2);
        let a = 2.0 * base.chart * base.r * base.delta / (PI * n);
        if !(a > 0.0 && a < base.r) {
            return Err(Error::Geometry(format!("amplitude {a:e} outside (0, r) at N=2^{j}")));
        }
        let steps = linear_steps(model, base.r, a)
            .ok_or_else(|| Error::ModelTooWeak(format!("no full stretch within {T_MAX} steps at N=2^{j}")))?;
        rows.push(compare(model, j as f64 * core::f64::consts::LN_2, steps + 2 * base.transit, k));
    }
    let threshold_log2 = match rows.iter().rposition(|r| !r.holds) {
        None => Some(1),
        Some(last) if last + 1 < rows.len() => Some(last as u32 + 2),
        Some(_) => None,
    };
    Ok(ComparisonScan { rows, threshold_log2 })
}

/// Entropy of the union of `τ` shifted copies of a horseshoe of `g^τ`.
pub fn periodic_entropy(h_power: f64, tau: u64) -> f64 {
    if tau == 0 {
        return 0.0;
    }
    h_power / tau as f64
}
