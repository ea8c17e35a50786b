//! Experiment drivers. Work is spread over a rayon pool but every result is
//! merged in a fixed order, so outputs do not depend on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use symlab_core::cocycle::{self, DiagonalizationReport, OrbitId, PeriodicLinearSystem, Transition, Word};
use symlab_core::dynamics::{self, MapFamily, OrbitCensus, OrbitCollector, PeriodicOrbit, SearchConfig, TorusMap};
use symlab_core::entropy::{self, EntropyReport, SampleOrbits};
use symlab_core::linalg;
use symlab_core::snake::{self, ComparisonScan, EntropyComparison, HorseshoeReport, LinearModel, NormFit, SnakeParams};
use symlab_core::spectrum::{self, Periodic, SpectralClassification, SpectralTag, SplittingData, TOL_SIMPLE, TOL_UNIT};
use symlab_core::symplectic::{random_symplectic, MatrixRows};
use symlab_core::{Error, Subspace, SymplecticMatrix};

use crate::config::{CenterMode, DiagonalizeSettings, EntropySettings, InequalitySettings, RandomWords, ScanSettings, SnakeSettings};

pub fn pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

/// Same result as `dynamics::find_periodic_orbits`, with the Newton runs of
/// each period done in parallel.
pub fn find_orbits<M: TorusMap + Sync + ?Sized>(
    map: &M,
    max_period: usize,
    cfg: &SearchConfig,
    pool: &rayon::ThreadPool,
) -> Result<Vec<PeriodicOrbit>, Error> {
    dynamics::check_period(max_period)?;
    let seeds = dynamics::seed_points(map.dim(), cfg);
    let mut collector = OrbitCollector::new(map, cfg);
    for n in 1..=max_period {
        let hits: Vec<Option<Vec<f64>>> =
            pool.install(|| seeds.par_iter().map(|s| dynamics::newton_periodic(map, s, n, cfg)).collect());
        for x in hits.into_iter().flatten() {
            collector.offer(&x, n)?;
        }
    }
    Ok(collector.finish())
}

/// Same result as `entropy::estimate_entropy`, one ε row per task.
pub fn estimate_entropy<M: TorusMap + ?Sized>(
    map: &M,
    settings: &EntropySettings,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<EntropyReport, Error> {
    entropy::validate_grids(&settings.eps, &settings.n)?;
    let n_max = *settings.n.last().expect("validated non-empty");
    let samples = SampleOrbits::new(map, n_max, settings.budget, seed);
    let raw: Vec<Vec<u64>> = pool.install(|| {
        settings
            .eps
            .par_iter()
            .map(|&e| entropy::count_row(&samples, &settings.n, e, settings.budget))
            .collect::<Result<_, _>>()
    })?;
    entropy::report_from_counts(&settings.eps, &settings.n, raw, settings.budget)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyRow {
    pub index: usize,
    pub defect: f64,
    pub classification: SpectralClassification,
}

pub fn run_classify(matrices: &[MatrixRows]) -> Result<Vec<ClassifyRow>, Error> {
    matrices
        .iter()
        .enumerate()
        .map(|(index, rows)| {
            let m = SymplecticMatrix::new(rows.to_matrix()?)?;
            let classification = spectrum::classify_point(&m, TOL_UNIT, TOL_SIMPLE)?;
            Ok(ClassifyRow { index, defect: m.defect(), classification })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub period: usize,
    pub points: Vec<Vec<f64>>,
    pub classification: SpectralClassification,
    /// Per-step exponents `(1/τ)·log|λ|`, descending.
    pub lyapunov: Vec<f64>,
    pub monodromy: MatrixRows,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitsReport {
    pub map: String,
    pub max_period: usize,
    pub orbits: Vec<OrbitRecord>,
    pub census: OrbitCensus,
    /// `|det(Aⁿ − I)|` for toral maps, `n = 1..=max_period`.
    pub lefschetz: Option<Vec<u64>>,
    /// Fixed points of `fⁿ` found by the search.
    pub fixed_point_counts: Vec<usize>,
}

pub fn orbit_record(o: &PeriodicOrbit) -> Result<OrbitRecord, Error> {
    let classification = o.classify()?;
    let tau = o.period.max(1) as f64;
    let lyapunov = classification.exponents.iter().map(|e| e / tau).collect();
    Ok(OrbitRecord {
        period: o.period,
        points: o.points.clone(),
        classification,
        lyapunov,
        monodromy: MatrixRows::from(o.monodromy.matrix()),
    })
}

pub fn run_orbits(
    map: &MapFamily,
    max_period: usize,
    search: &SearchConfig,
    probe_per_axis: usize,
    pool: &rayon::ThreadPool,
) -> Result<OrbitsReport, Error> {
    let found = find_orbits(map, max_period, search, pool)?;
    let census = dynamics::orbit_census(&found, map.dim(), probe_per_axis, TOL_UNIT, TOL_SIMPLE)?;
    let lefschetz = map.toral_matrix().map(|a| (1..=max_period).map(|n| dynamics::lefschetz_count(&a, n)).collect());
    let fixed_point_counts = (1..=max_period).map(|n| dynamics::fixed_point_count(&found, n)).collect();
    let orbits = found.iter().map(orbit_record).collect::<Result<_, _>>()?;
    Ok(OrbitsReport { map: map.label(), max_period, orbits, census, lefschetz, fixed_point_counts })
}

/// Largest multiplicative gap accepted as a strong/center cut.
pub const GAP_RATIO: f64 = 1.2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationCert {
    pub k: usize,
    pub l: usize,
    pub margin: f64,
}

/// Tries `l = 1, 2, 4, .. ≤ max_l` on the orbit word with the `k`-strong
/// splitting of its monodromy.
pub fn certify(orbit: &PeriodicOrbit, k: usize, max_l: usize) -> Option<(SplittingData, DominationCert)> {
    let split = spectrum::strong_splitting(&orbit.monodromy, k).ok()?;
    let mut l = 1;
    while l <= max_l.max(1) {
        if let Ok(d) = spectrum::domination_test(&orbit.word, &split, l) {
            if d.dominated {
                return Some((split, DominationCert { k, l, margin: d.margin }));
            }
        }
        l *= 2;
    }
    None
}

/// Strong dimension at the largest eigen-modulus gap with nonempty
/// center, if that gap exceeds [`GAP_RATIO`].
pub fn gap_cut(m: &SymplecticMatrix) -> Result<Option<usize>, Error> {
    let d = m.half_dim();
    let mut moduli: Vec<f64> = spectrum::eigenvalues(m.matrix())?.iter().map(|v| v.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<(usize, f64)> = None;
    for k in 1..d {
        let ratio = moduli[k - 1] / moduli[k];
        if ratio > GAP_RATIO && best.map_or(true, |(_, r)| ratio > r) {
            best = Some((k, ratio));
        }
    }
    Ok(best.map(|(k, _)| k))
}

struct Centered<'a> {
    orbit: &'a PeriodicOrbit,
    center: Subspace,
}

impl Periodic for Centered<'_> {
    fn monodromy(&self) -> &SymplecticMatrix {
        &self.orbit.monodromy
    }
    fn period(&self) -> usize {
        self.orbit.period
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconclusive,
    ViolationFlag,
}

/// Both sides from the eigenvalues of a toral matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactCheck {
    /// `Σ_{|λ|>1} log|λ|`.
    pub entropy: f64,
    /// `max log|λ|`.
    pub top_exponent: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitUse {
    pub period: usize,
    pub tag: String,
    /// Center dimension used; the full space when no certified gap.
    pub center_dim: usize,
    pub certificate: Option<DominationCert>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub map: String,
    pub max_period: usize,
    pub center_mode: CenterMode,
    pub entropy_estimate: f64,
    /// Spread of the per-ε rates; `None` when the estimate is capped or
    /// low-confidence, in which case it bounds nothing from above.
    pub confidence_width: Option<f64>,
    pub entropy_low_confidence: bool,
    pub orbits_found: usize,
    pub orbits_used: Vec<OrbitUse>,
    pub s_statistic: Option<f64>,
    pub empty_s: bool,
    pub margin: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub exact: Option<ExactCheck>,
    pub rates: Vec<f64>,
    pub note: &'static str,
}

const INEQUALITY_NOTE: &str =
    "finite-sample signature: both sides are lower bounds of their true values; not a verdict on the theorem";

pub fn exact_check(a: &linalg::Mat) -> Result<ExactCheck, Error> {
    let entropy = entropy::exact_entropy_toral(a)?;
    let top_exponent = spectrum::eigenvalues(a)?.iter().map(|v| v.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExactCheck { entropy, top_exponent, holds: entropy >= top_exponent - 1e-12 })
}

pub fn verdict(estimate: f64, width: Option<f64>, s: Option<f64>, tol: f64) -> Verdict {
    let Some(s) = s else { return Verdict::Inconclusive };
    if let Some(w) = width {
        if estimate + w < s - tol {
            return Verdict::ViolationFlag;
        }
    }
    if estimate - s >= -tol {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    }
}

pub fn run_inequality(
    map: &MapFamily,
    settings: &InequalitySettings,
    search: &SearchConfig,
    entropy_settings: &EntropySettings,
    seed: u64,
    max_l: usize,
    pool: &rayon::ThreadPool,
) -> Result<InequalityReport, Error> {
    let found = find_orbits(map, settings.max_period, search, pool)?;
    let d = map.half_dim();
    let mut used = Vec::new();
    let mut centered = Vec::new();
    for o in &found {
        let cls = o.classify()?;
        let gap = match settings.center {
            CenterMode::Gap => match gap_cut(&o.monodromy)? {
                Some(k) => certify(o, k, max_l),
                None => None,
            },
            CenterMode::Full => None,
        };
        let (center, certificate) = match gap {
            Some((split, cert)) => (split.c, Some(cert)),
            None => (Subspace::full(2 * d)?, None),
        };
        // unit-modulus eigenvalues must sit inside the center
        let eligible = match (&certificate, cls.tag) {
            (_, SpectralTag::Degenerate) => false,
            (_, t) if t.is_hyperbolic() => true,
            (Some(_), _) => cls.unit_circle_count <= center.dim(),
            (None, _) => false,
        };
        if eligible {
            used.push(OrbitUse { period: o.period, tag: dynamics::tag_key(&cls.tag), center_dim: center.dim(), certificate });
            centered.push(Centered { orbit: o, center });
        }
    }
    let s_statistic = spectrum::central_statistic(&centered, |c| Ok(c.center.clone()))?;
    let report = estimate_entropy(map, entropy_settings, seed, pool)?;
    let spread = report.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - report.rates.iter().copied().fold(f64::INFINITY, f64::min);
    let confidence_width = if report.capped || report.low_confidence { None } else { Some(spread.max(0.0)) };
    let margin = s_statistic.map(|s| report.estimate - s);
    let exact = map.toral_matrix().map(|a| exact_check(&a)).transpose()?;
    Ok(InequalityReport {
        map: map.label(),
        max_period: settings.max_period,
        center_mode: settings.center,
        entropy_estimate: report.estimate,
        confidence_width,
        entropy_low_confidence: report.low_confidence,
        orbits_found: found.len(),
        orbits_used: used,
        s_statistic,
        empty_s: s_statistic.is_none(),
        margin,
        tolerance: settings.tolerance,
        verdict: verdict(report.estimate, confidence_width, s_statistic, settings.tolerance),
        exact,
        rates: report.rates,
        note: INEQUALITY_NOTE,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub name: String,
    pub map: String,
    pub orbits: usize,
    pub census: OrbitCensus,
    /// Largest strong dimension certified on every orbit word.
    pub certified: Option<DominationCert>,
    pub signature: String,
    pub note: &'static str,
}

const SCAN_NOTE: &str = "signature of the orbits found up to the search period; not a genericity statement";

/// Largest `k` such that every orbit admits a dominated `k`-strong
/// splitting. Reports the worst `l` and margin over orbits.
fn certify_all(orbits: &[PeriodicOrbit], d: usize, max_l: usize) -> Option<DominationCert> {
    if orbits.is_empty() {
        return None;
    }
    (1..=d).rev().find_map(|k| {
        let mut worst = DominationCert { k, l: 1, margin: 0.0 };
        for o in orbits {
            let (_, c) = certify(o, k, max_l)?;
            worst.l = worst.l.max(c.l);
            worst.margin = worst.margin.max(c.margin);
        }
        Some(worst)
    })
}

/// Exactly one of `Anosov`, `PH(m)+MElliptic(m)`, `Elliptic`, or
/// `Unresolved`.
pub fn signature(census: &OrbitCensus, certified: Option<&DominationCert>, d: usize) -> String {
    let count = |key: &str| census.counts.get(key).copied().unwrap_or(0);
    match certified {
        Some(c) if c.k == d && census.m_elliptic_points == 0 => "Anosov".into(),
        Some(c) if c.k < d => {
            let m = d - c.k;
            if count(&format!("MElliptic({m})")) > 0 {
                format!("PH({m})+MElliptic({m})")
            } else {
                "Unresolved".into()
            }
        }
        None if count("TotallyElliptic") > 0 => "Elliptic".into(),
        _ => "Unresolved".into(),
    }
}

pub fn run_cell(name: &str, map: &MapFamily, settings: &ScanSettings) -> Result<CellReport, Error> {
    let orbits = dynamics::find_periodic_orbits(map, settings.max_period, &settings.search)?;
    let census = dynamics::orbit_census(&orbits, map.dim(), settings.probe_per_axis, TOL_UNIT, TOL_SIMPLE)?;
    let d = map.half_dim();
    let certified = certify_all(&orbits, d, settings.max_l);
    let signature = signature(&census, certified.as_ref(), d);
    Ok(CellReport { name: name.into(), map: map.label(), orbits: orbits.len(), census, certified, signature, note: SCAN_NOTE })
}

/// Cells run in parallel; the table is sorted by cell name.
pub fn run_trichotomy_scan(settings: &ScanSettings, pool: &rayon::ThreadPool) -> Result<Vec<CellReport>, Error> {
    let mut cells: Vec<CellReport> = pool.install(|| {
        settings.cells.par_iter().map(|c| run_cell(&c.name, &c.map, settings)).collect::<Result<_, _>>()
    })?;
    cells.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(cells)
}

#[derive(Clone, Debug, Serialize)]
pub struct SnakeRow {
    pub n: u64,
    pub delta: f64,
    pub amplitude: f64,
    pub horseshoe: HorseshoeReport,
    pub bound: snake::NormBound,
    pub comparison: EntropyComparison,
}

#[derive(Clone, Debug, Serialize)]
pub struct SnakeFamilyReport {
    pub settings: SnakeSettings,
    pub smallest_strong_exponent: f64,
    pub rows: Vec<SnakeRow>,
    pub norm_fit: NormFit,
    pub scan: ComparisonScan,
    /// Set when the closing inequality failed at every scanned `N`.
    pub never_holds: bool,
}

pub fn snake_model(s: &SnakeSettings) -> Result<LinearModel, Error> {
    LinearModel::diagonal(&s.lambdas, s.m, (-s.r, s.r))
}

fn snake_params(s: &SnakeSettings, n: u64) -> Result<SnakeParams, Error> {
    let mut p = SnakeParams::new(s.lambdas.len(), s.m, s.r, n, s.delta)?;
    p.chart = s.chart;
    p.transit = s.transit;
    p.validate()?;
    Ok(p)
}

/// One horseshoe per `N`, the K₁ fit over the family and the closing
/// inequality scan over `N = 2^j`.
pub fn run_snake_family(s: &SnakeSettings, pool: &rayon::ThreadPool) -> Result<SnakeFamilyReport, Error> {
    let model = snake_model(s)?;
    let rows: Vec<SnakeRow> = pool.install(|| {
        s.n_values
            .par_iter()
            .map(|&n| {
                let params = snake_params(s, n)?;
                let horseshoe = snake::build_horseshoe(&model, &params)?;
                let bound = snake::check_norm_bound(&model, &params, horseshoe.t);
                let comparison = snake::verify_entropy_comparison(&model, &horseshoe, s.k);
                Ok(SnakeRow { n, delta: s.delta, amplitude: params.amplitude(), horseshoe, bound, comparison })
            })
            .collect::<Result<_, Error>>()
    })?;
    let bounds: Vec<_> = rows.iter().map(|r| r.bound.clone()).collect();
    let norm_fit = snake::fit_norm_bound(&bounds)?;
    let base = snake_params(s, s.n_values.first().copied().unwrap_or(2))?;
    let scan = snake::comparison_scan(&model, &base, s.k, s.max_log2)?;
    Ok(SnakeFamilyReport {
        settings: s.clone(),
        smallest_strong_exponent: model.smallest_strong_exponent(),
        never_holds: scan.never_holds(),
        rows,
        norm_fit,
        scan,
    })
}

/// Rotation by `theta` in every `(q_i, p_i)` plane.
pub fn plane_rotation(d: usize, theta: f64) -> SymplecticMatrix {
    let mut m = linalg::rotation(theta);
    for _ in 1..d {
        m = linalg::direct_sum(&m, &linalg::rotation(theta));
    }
    SymplecticMatrix::trusted(m)
}

/// A word with its self-transition and the seed handed to the pipeline.
#[derive(Clone, Debug)]
pub struct DiagCase {
    pub label: String,
    pub contaminated: bool,
    pub word: Word,
    pub transition: Word,
    pub seed: u64,
}

fn is_hyperbolic(w: &Word) -> Result<bool, Error> {
    let m = cocycle::monodromy(w);
    Ok(spectrum::classify_point(&m, TOL_UNIT, TOL_SIMPLE)?.tag.is_hyperbolic())
}

/// Draws `count` words with hyperbolic monodromy and, optionally, a
/// variant of each with a rotation letter appended (kept when still
/// hyperbolic).
pub fn random_cases(spec: &RandomWords, seed: u64) -> Result<Vec<DiagCase>, Error> {
    use rand::{Rng, SeedableRng};
    if spec.half_dims.is_empty() || spec.max_len == 0 {
        return Err(Error::Precondition("random words need half_dims and max_len >= 1".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < spec.count {
        attempts += 1;
        if attempts > 100 * spec.count.max(1) {
            return Err(Error::Numerical(format!("only {accepted} hyperbolic words in {} draws", attempts - 1)));
        }
        let d = spec.half_dims[accepted % spec.half_dims.len()];
        let len = rng.random_range(1..=spec.max_len);
        let letters = (0..len)
            .map(|_| random_symplectic(d, rng.random(), spec.radius))
            .collect::<Result<Vec<_>, _>>()?;
        let word = Word::new(letters)?;
        let transition = Word::new(vec![random_symplectic(d, rng.random(), 0.5)?])?;
        let theta = rng.random_range(0.3..1.2);
        let case_seed: u64 = rng.random();
        if !is_hyperbolic(&word)? {
            continue;
        }
        let label = format!("random-{accepted}");
        if spec.contaminate {
            let mut letters = word.letters().to_vec();
            letters.push(plane_rotation(d, theta));
            let dirty = Word::new(letters)?;
            if is_hyperbolic(&dirty)? {
                out.push(DiagCase {
                    label: format!("{label}-rot"),
                    contaminated: true,
                    word: dirty,
                    transition: transition.clone(),
                    seed: case_seed ^ 1,
                });
            }
        }
        out.push(DiagCase { label, contaminated: false, word, transition, seed: case_seed });
        accepted += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagRow {
    pub label: String,
    pub half_dim: usize,
    pub length: usize,
    pub contaminated: bool,
    /// Pipeline error, if any.
    pub error: Option<String>,
    pub output_length: Option<usize>,
    /// Real, pairwise distinct eigenvalues of the output monodromy.
    pub simple_real: Option<bool>,
    pub report: Option<DiagonalizationReport>,
}

impl DiagRow {
    pub fn passes(&self, eps: f64) -> bool {
        match (&self.report, self.simple_real) {
            (Some(r), Some(true)) => r.invariance_defect <= 1e-6 && r.top_gap < eps,
            _ => false,
        }
    }
}

/// Real, pairwise distinct eigenvalues. The output word preserves `2d`
/// independent lines (checked by the pipeline), so its monodromy is real
/// diagonalizable and the line exponents give the moduli. When the product
/// is small enough, the `d` largest eigenvalues are also checked directly
/// (the rest are reciprocals that drown in rounding).
pub fn simple_real_spectrum(out: &Word, rep: &DiagonalizationReport) -> Result<bool, Error> {
    let mut e = rep.output_exponents.clone();
    e.sort_by(f64::total_cmp);
    let lines_ok = rep.invariance_defect <= 1e-6 && e.windows(2).all(|w| w[1] - w[0] > 1e-9);
    let m = cocycle::monodromy(out);
    if m.matrix().iter().any(|x| !x.is_finite()) || linalg::max_abs(m.matrix()) >= 1e12 {
        return Ok(lines_ok);
    }
    let mut values = spectrum::eigenvalues(m.matrix())?;
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    values.truncate(m.half_dim());
    let real = values.iter().all(|v| v.im.abs() <= 1e-6 * v.norm());
    let distinct = values.windows(2).all(|w| w[0].norm() - w[1].norm() > 1e-6 * w[0].norm());
    Ok(lines_ok && real && distinct && values.last().is_some_and(|v| v.norm() > 1.0))
}

pub fn run_case(case: &DiagCase, eps: f64) -> DiagRow {
    let dim = case.word.dim();
    let mut row = DiagRow {
        label: case.label.clone(),
        half_dim: dim / 2,
        length: case.word.len(),
        contaminated: case.contaminated,
        error: None,
        output_length: None,
        simple_real: None,
        report: None,
    };
    let result = (|| {
        let mut sys = PeriodicLinearSystem::new(dim);
        sys.insert(OrbitId(0), case.word.clone(), case.word.len())?;
        let tr = Transition { from: OrbitId(0), to: OrbitId(0), word: case.transition.clone(), epsilon: eps };
        let (out, rep) = cocycle::diagonalize_with_transition(&sys, OrbitId(0), &tr, eps, case.seed)?;
        let simple = simple_real_spectrum(&out, &rep)?;
        Ok::<_, Error>((out.len(), simple, rep))
    })();
    match result {
        Ok((len, simple, rep)) => {
            row.output_length = Some(len);
            row.simple_real = Some(simple);
            row.report = Some(rep);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Explicit words use the configured transition, or a seeded near-identity
/// letter when none is given.
pub fn diagonalize_cases(s: &DiagonalizeSettings, seed: u64) -> Result<Vec<DiagCase>, Error> {
    let mut cases = Vec::new();
    for (i, w) in s.words.iter().enumerate() {
        let transition = match &s.transition {
            Some(t) => t.clone(),
            None => Word::new(vec![random_symplectic(w.dim() / 2, seed.wrapping_add(i as u64), 0.5)?])?,
        };
        if transition.dim() != w.dim() {
            return Err(Error::InvalidDimension(format!("transition and word {i} differ in dimension")));
        }
        cases.push(DiagCase { label: format!("word-{i}"), contaminated: false, word: w.clone(), transition, seed: seed ^ i as u64 });
    }
    if let Some(r) = &s.random {
        cases.extend(random_cases(r, seed)?);
    }
    Ok(cases)
}

pub fn run_diagonalize(s: &DiagonalizeSettings, seed: u64, pool: &rayon::ThreadPool) -> Result<Vec<DiagRow>, Error> {
    let cases = diagonalize_cases(s, seed)?;
    Ok(pool.install(|| cases.par_iter().map(|c| run_case(c, s.eps)).collect()))
}

/// Counts per key, for summaries.
pub fn tally<'a>(keys: impl Iterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k.to_string()).or_insert(0) += 1;
    }
    m
}
