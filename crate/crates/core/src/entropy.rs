//! Topological entropy: `(n, ε)`-separated sets, the toral oracle and the
//! horseshoe formula.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{torus_distance, TorusMap};
use crate::linalg::Mat;
use crate::{math, spectrum, Error, Result};

/// Orbit segments `x, f(x), .., f^{n_max}(x)` of seeded uniform samples.
pub struct SampleOrbits {
    dim: usize,
    n_max: usize,
    /// `budget × (n_max + 1) × dim`, row-major by sample then time.
    data: Vec<f64>,
}

impl SampleOrbits {
    /// Sample `i` depends only on `(seed, i)`, so a smaller budget gives a
    /// prefix of a larger one.
    pub fn new<M: TorusMap + ?Sized>(map: &M, n_max: usize, budget: usize, seed: u64) -> Self {
        let dim = map.dim();
        let stride = (n_max + 1) * dim;
        let mut data = vec![0.0; budget * stride];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in 0..budget {
            let base = s * stride;
            for c in 0..dim {
                data[base + c] = rng.random::<f64>();
            }
            for t in 0..n_max {
                let x = &data[base + t * dim..base + (t + 1) * dim];
                let y = map.evaluate(x);
                data[base + (t + 1) * dim..base + (t + 2) * dim].copy_from_slice(&y);
            }
        }
        SampleOrbits { dim, n_max, data }
    }

    pub fn budget(&self) -> usize {
        self.data.len() / ((self.n_max + 1) * self.dim)
    }

    fn point(&self, s: usize, t: usize) -> &[f64] {
        let base = s * (self.n_max + 1) * self.dim + t * self.dim;
        &self.data[base..base + self.dim]
    }

    /// `d_n(x_a, x_b) = max_{0 ≤ i ≤ n} d(f^i x_a, f^i x_b)`, with early exit
    /// once `bound` is reached.
    fn dn_at_least(&self, a: usize, b: usize, n: usize, bound: f64) -> bool {
        (0..=n).any(|t| torus_distance(self.point(a, t), self.point(b, t)) >= bound)
    }

    /// Greedy `(n, ε)`-separated subset over the first `budget` samples.
    /// Accepted points are indexed by their cells at times `0` and `n`: a
    /// conflicting pair is within `ε` at both times, so only neighbouring
    /// cells need checking.
    pub fn greedy_count(&self, n: usize, eps: f64, budget: usize) -> Result<usize> {
        if n > self.n_max {
            return Err(Error::Precondition(format!("n = {n} beyond the sampled horizon {}", self.n_max)));
        }
        if !(eps > 0.0) {
            return Err(Error::Precondition("ε must be positive".into()));
        }
        let budget = budget.min(self.budget());
        let cells = (math::floor(1.0 / eps).max(1.0) as i64).min(1 << 15);
        // index entries are (time, coordinate) pairs; any subset of the
        // constraints gives a valid filter. At most six, so a lookup visits
        // at most 3^6 cells; the last time spreads points the most
        let times: Vec<usize> = if n == 0 { vec![0] } else { vec![n, 0] };
        let entries: Vec<(usize, usize)> =
            times.iter().flat_map(|&t| (0..self.dim).map(move |c| (t, c))).take(6).collect();
        let k = entries.len();
        let cell_of = |s: usize| -> [i64; 8] {
            let mut out = [0i64; 8];
            for (o, &(t, c)) in out.iter_mut().zip(&entries) {
                *o = (math::floor(self.point(s, t)[c] * cells as f64) as i64).rem_euclid(cells);
            }
            out
        };
        let pack = |cell: &[i64; 8], offs: &[i64; 8]| -> u128 {
            let mut key = 0u128;
            for i in 0..k {
                key = (key << 16) | (cell[i] + offs[i]).rem_euclid(cells) as u128;
            }
            key
        };
        // with fewer than three cells per axis the offsets alias
        let top = if cells >= 3 { 1 } else { cells - 2 };
        let mut index: HashMap<u128, Vec<usize>> = HashMap::new();
        let mut count = 0;
        for s in 0..budget {
            let base = cell_of(s);
            let mut offs = [-1i64; 8];
            let mut separated = true;
            'scan: loop {
                if let Some(list) = index.get(&pack(&base, &offs)) {
                    for &a in list {
                        if !self.dn_at_least(a, s, n, eps) {
                            separated = false;
                            break 'scan;
                        }
                    }
                }
                let mut i = 0;
                while i < k {
                    offs[i] += 1;
                    if offs[i] <= top {
                        break;
                    }
                    offs[i] = -1;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
            if separated {
                index.entry(pack(&base, &[0; 8])).or_default().push(s);
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Lower bound on the maximal cardinality of an `(n, ε)`-separated set,
/// from a greedy pass over `budget` seeded orbit segments.
pub fn count_separated<M: TorusMap + ?Sized>(map: &M, n: usize, eps: f64, budget: usize, seed: u64) -> Result<usize> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    SampleOrbits::new(map, n, budget, seed).greedy_count(n, eps, budget)
}

/// Counts, per-ε growth rates and the resulting lower-bound estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub eps_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// `counts[i][j]` bounds `N(n_grid[j], eps_grid[i])` from below, after
    /// making the table monotone.
    pub counts: Vec<Vec<u64>>,
    /// Greedy counts before stabilization.
    pub raw_counts: Vec<Vec<u64>>,
    /// Fitted slope of `log N` against `n` for each ε.
    pub rates: Vec<f64>,
    /// `(n_lo, n_hi)` of the window each rate was fitted on.
    pub windows: Vec<(usize, usize)>,
    pub estimate: f64,
    pub sample_budget: usize,
    /// Set when the fit window is short or runs into the sample budget.
    pub low_confidence: bool,
    /// Set when a rate reached `log(budget)` over its window length.
    pub capped: bool,
}

pub fn validate_grids(eps_grid: &[f64], n_grid: &[usize]) -> Result<()> {
    if eps_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::Precondition("empty grid".into()));
    }
    if eps_grid.windows(2).any(|w| !(w[0] < w[1])) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("grids must be strictly increasing".into()));
    }
    if eps_grid[0] <= 0.0 || n_grid[0] == 0 {
        return Err(Error::Precondition("ε must be positive and n at least 1".into()));
    }
    Ok(())
}

/// Makes the table nondecreasing in `n` and nonincreasing in `ε`. Each
/// entry becomes a max of lower bounds for cells it dominates, so it stays
/// a lower bound.
pub fn stabilize(raw: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = raw.to_vec();
    let rows = out.len();
    for i in (0..rows).rev() {
        for j in 0..out[i].len() {
            let mut v = out[i][j];
            if j > 0 {
                v = v.max(out[i][j - 1]);
            }
            if i + 1 < rows {
                v = v.max(out[i + 1][j]);
            }
            out[i][j] = v;
        }
    }
    out
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Picks the longest run of grid points whose successive local slopes
/// change by less than 10% (or 0.02 absolute), among points whose count is
/// below a quarter of the budget, and fits `log N` on it.
fn fit_rate(n_grid: &[usize], counts: &[u64], budget: usize) -> (f64, (usize, usize), bool) {
    let usable: Vec<usize> = (0..n_grid.len()).take_while(|&j| (counts[j] as f64) < budget as f64 / 4.0).collect();
    let pts: Vec<usize> = if usable.len() >= 2 { usable } else { (0..n_grid.len().min(2)).collect() };
    if pts.len() < 2 {
        return (0.0, (n_grid[0], n_grid[0]), true);
    }
    let logn = |j: usize| math::ln(counts[j].max(1) as f64);
    let slopes: Vec<f64> = pts.windows(2).map(|w| (logn(w[1]) - logn(w[0])) / (n_grid[w[1]] - n_grid[w[0]]) as f64).collect();
    // longest run of slopes with small successive changes
    let (mut best_lo, mut best_hi) = (0, 0);
    let mut lo = 0;
    for i in 1..slopes.len() {
        let (a, b) = (slopes[i - 1], slopes[i]);
        if (b - a).abs() > (0.1 * a.abs().max(b.abs())).max(0.02) {
            lo = i;
        }
        if i - lo > best_hi - best_lo {
            best_lo = lo;
            best_hi = i;
        }
    }
    let idx: Vec<usize> = pts[best_lo..=best_hi + 1].to_vec();
    let xs: Vec<f64> = idx.iter().map(|&j| n_grid[j] as f64).collect();
    let ys: Vec<f64> = idx.iter().map(|&j| logn(j)).collect();
    let rate = least_squares_slope(&xs, &ys);
    let short = idx.len() < 3 || pts.len() < n_grid.len().min(3);
    (rate, (n_grid[idx[0]], n_grid[*idx.last().expect("nonempty")]), short)
}

/// Builds the report from a table of greedy counts `raw[ε][n]`.
pub fn report_from_counts(eps_grid: &[f64], n_grid: &[usize], raw: Vec<Vec<u64>>, budget: usize) -> Result<EntropyReport> {
    validate_grids(eps_grid, n_grid)?;
    if raw.len() != eps_grid.len() || raw.iter().any(|r| r.len() != n_grid.len()) {
        return Err(Error::InvalidDimension("count table does not match the grids".into()));
    }
    let counts = stabilize(&raw);
    let log_budget = math::ln(budget.max(1) as f64);
    let mut rates = Vec::new();
    let mut windows = Vec::new();
    let mut low_confidence = false;
    let mut capped = false;
    for row in &counts {
        let (mut rate, win, short) = fit_rate(n_grid, row, budget);
        // the budget cannot show more growth than log(budget) over the window
        let span = (win.1 - win.0).max(1) as f64;
        if rate >= log_budget / span {
            capped = true;
            rate = log_budget / span;
        }
        low_confidence |= short;
        rates.push(rate.max(0.0));
        windows.push(win);
    }
    let estimate = rates.iter().copied().fold(0.0, f64::max);
    Ok(EntropyReport {
        eps_grid: eps_grid.to_vec(),
        n_grid: n_grid.to_vec(),
        counts,
        raw_counts: raw,
        rates,
        windows,
        estimate,
        sample_budget: budget,
        low_confidence,
        capped,
    })
}

/// Greedy counts for one ε over all of `n_grid`, sharing the sampled orbits.
/// Once a count reaches a quarter of the budget the rate fit ignores the
/// rest of the row, so later entries carry that count forward (still a
/// lower bound, as `N(n, ε)` is nondecreasing in `n`).
pub fn count_row(samples: &SampleOrbits, n_grid: &[usize], eps: f64, budget: usize) -> Result<Vec<u64>> {
    let mut row = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let c = match row.last() {
            Some(&last) if last as f64 >= budget as f64 / 4.0 => last,
            _ => samples.greedy_count(n, eps, budget)? as u64,
        };
        row.push(c);
    }
    Ok(row)
}

/// Separated-set entropy estimate: the largest per-ε growth rate.
pub fn estimate_entropy<M: TorusMap + ?Sized>(map: &M, eps_grid: &[f64], n_grid: &[usize], budget: usize, seed: u64) -> Result<EntropyReport> {
    validate_grids(eps_grid, n_grid)?;
    let samples = SampleOrbits::new(map, *n_grid.last().expect("nonempty"), budget, seed);
    let raw = eps_grid.iter().map(|&e| count_row(&samples, n_grid, e, budget)).collect::<Result<Vec<_>>>()?;
    report_from_counts(eps_grid, n_grid, raw, budget)
}

/// `Σ_{|λ|>1} log|λ|` for an integer hyperbolic matrix.
pub fn exact_entropy_toral(a: &Mat) -> Result<f64> {
    if a.iter().any(|v| math::round(*v) != *v) {
        return Err(Error::Precondition("toral automorphism must be an integer matrix".into()));
    }
    let vals = spectrum::eigenvalues(a)?;
    if vals.iter().any(|v| (v.norm() - 1.0).abs() <= 1e-9) {
        return Err(Error::NotHyperbolic("eigenvalue on the unit circle".into()));
    }
    Ok(vals.iter().filter(|v| v.norm() > 1.0).map(|v| math::ln(v.norm())).sum())
}

/// `(1/t)·log N`, the entropy of the full shift on `N` symbols seen at
/// return time `t`. Degenerate inputs (`N < 2` or `t = 0`) give 0; see
/// [`horseshoe_is_degenerate`].
pub fn horseshoe_entropy(symbols: u64, t: u64) -> f64 {
    if horseshoe_is_degenerate(symbols, t) {
        return 0.0;
    }
    math::ln(symbols as f64) / t as f64
}

pub fn horseshoe_is_degenerate(symbols: u64, t: u64) -> bool {
    symbols < 2 || t == 0
}
