//! The G^(m)(N,p) random hypergraph: exact pattern prevalence, sampling,
//! Monte Carlo estimation, extreme patterns and crossing points.
//!
//! For a fixed set of `m` focal nodes, an `i`-subset of them is covered by some
//! hyperedge reaching outside the set with probability
//! `p_i = 1 - (1 - p)^{c_i}`, `c_i = C(N - m, m - i)`. The prevalence of a
//! pattern with `x_i` present and `y_i` uncovered `i`-subsets is
//! `gamma * prod_i p_i^{x_i} (1 - p_i)^{y_i}`. All products are evaluated in
//! log space with `ln(1 - p_i) = c_i * ln(1 - p)` taken directly from `ln_1p`.

use rand::distr::Distribution;
use rand_distr::{Binomial, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::census::{census_counts, CensusOptions};
use crate::combin::{binomial, binomial_f64, BinomialTable};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId};
use crate::pattern::{MPattern, PatternId, PatternSpace, MAX_PATTERN_SLOTS};
use crate::rng::{stream2, task_rng, TaskRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: u64,
    pub m: usize,
    pub p: f64,
}

impl ModelParams {
    pub fn new(n: u64, m: usize, p: f64) -> Result<Self> {
        if m == 0 || m > MAX_PATTERN_SLOTS {
            return Err(Error::Contract(format!(
                "hyperedge size must be in 1..={MAX_PATTERN_SLOTS}, got {m}"
            )));
        }
        if n < m as u64 {
            return Err(Error::Contract(format!("need N >= m, got N={n}, m={m}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { n, m, p })
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.n, self.m, p)
    }
}

/// `c_i = C(N - m, m - i)`, the number of hyperedges that cover a given
/// `i`-subset of the focal nodes and no other focal node.
pub fn subset_multiplicity(n: u64, m: usize, i: usize) -> f64 {
    binomial_f64(n - m as u64, (m - i) as u64)
}

/// `p_i` together with `c_i` and `ln(1 - p_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetConnection {
    pub c: f64,
    pub p_i: f64,
    pub ln_miss: f64,
}

pub fn subset_connection(params: &ModelParams, i: usize) -> Result<SubsetConnection> {
    if i == 0 || i > params.m {
        return Err(Error::Contract(format!(
            "subset size must be in 1..={}, got {i}",
            params.m
        )));
    }
    Ok(connection_unchecked(params, i))
}

fn connection_unchecked(params: &ModelParams, i: usize) -> SubsetConnection {
    let c = subset_multiplicity(params.n, params.m, i);
    let ln_miss = if c == 0.0 {
        0.0
    } else {
        c * (-params.p).ln_1p()
    };
    SubsetConnection {
        c,
        p_i: -ln_miss.exp_m1(),
        ln_miss,
    }
}

/// `p_i = 1 - (1 - p)^{c_i}`.
pub fn subset_connection_prob(params: &ModelParams, i: usize) -> Result<f64> {
    Ok(subset_connection(params, i)?.p_i)
}

/// The `p` at which `p_l` equals `a`.
pub fn p_for_target(n: u64, m: usize, l: usize, a: f64) -> Result<f64> {
    ModelParams::new(n, m, 0.0)?;
    if l == 0 || l > m {
        return Err(Error::Contract(format!("subset size must be in 1..={m}, got {l}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("target must lie in (0, 1), got {a}")));
    }
    let c = subset_multiplicity(n, m, l);
    if c == 0.0 {
        return Err(Error::Singular(format!(
            "c_{l} = 0 for N={n}, m={m}: p_{l} is identically zero"
        )));
    }
    Ok(-((-a).ln_1p() / c).exp_m1())
}

/// Natural log of the prevalence; `-inf` when the prevalence is zero.
pub fn ln_analytic_prevalence(x: &MPattern, params: &ModelParams, labelled: bool) -> Result<f64> {
    if x.m() != params.m {
        return Err(Error::Contract(format!(
            "pattern has m={} but the model has m={}",
            x.m(),
            params.m
        )));
    }
    let gamma = if labelled { 1 } else { x.gamma() };
    Ok(ln_prevalence_from_counts(
        x.counts().xs(),
        x.counts().ys(),
        gamma,
        &connections(params),
    ))
}

fn connections(params: &ModelParams) -> Vec<SubsetConnection> {
    (1..=params.m).map(|i| connection_unchecked(params, i)).collect()
}

fn ln_prevalence_from_counts(xs: &[u32], ys: &[u32], gamma: u64, conn: &[SubsetConnection]) -> f64 {
    let mut acc = (gamma as f64).ln();
    for ((&x, &y), c) in xs.iter().zip(ys).zip(conn) {
        if x > 0 {
            if c.p_i == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += f64::from(x) * c.p_i.ln();
        }
        if y > 0 {
            if c.ln_miss == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += f64::from(y) * c.ln_miss;
        }
    }
    acc
}

/// Probability that a fixed set of `m` nodes realizes `x` (or, when
/// `labelled`, one specific labelled copy of `x`).
pub fn analytic_prevalence(x: &MPattern, params: &ModelParams, labelled: bool) -> Result<f64> {
    Ok(ln_analytic_prevalence(x, params, labelled)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrevalenceKind {
    Analytic,
    MonteCarlo,
}

impl PrevalenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrevalenceKind::Analytic => "analytic",
            PrevalenceKind::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceEntry {
    pub id: PatternId,
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceTable {
    pub params: ModelParams,
    pub kind: PrevalenceKind,
    pub labelled: bool,
    pub entries: Vec<PrevalenceEntry>,
}

impl PrevalenceTable {
    pub fn get(&self, id: &PatternId) -> Option<&PrevalenceEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceCurve {
    pub p_grid: Vec<f64>,
    pub tables: Vec<PrevalenceTable>,
}

/// Analytic prevalence of every m-pattern (m <= 5) at one `p`.
pub fn analytic_table(params: &ModelParams, labelled: bool) -> Result<PrevalenceTable> {
    let space = PatternSpace::get(params.m)?;
    let conn = connections(params);
    let entries = (0..space.len())
        .map(|i| {
            let c = space.counts(i);
            let gamma = if labelled { 1 } else { space.gamma(i) };
            PrevalenceEntry {
                id: space.id(i).clone(),
                name: space.name(i).to_owned(),
                value: ln_prevalence_from_counts(c.xs(), c.ys(), gamma, &conn).exp(),
                stderr: None,
            }
        })
        .collect();
    Ok(PrevalenceTable {
        params: *params,
        kind: PrevalenceKind::Analytic,
        labelled,
        entries,
    })
}

pub fn analytic_curve(n: u64, m: usize, grid: &[f64], labelled: bool) -> Result<PrevalenceCurve> {
    check_grid(grid, false)?;
    let tables = grid
        .iter()
        .map(|&p| analytic_table(&ModelParams::new(n, m, p)?, labelled))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrevalenceCurve {
        p_grid: grid.to_vec(),
        tables,
    })
}

fn check_grid(grid: &[f64], open: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("empty p grid".into()));
    }
    if grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Input("p grid must be strictly increasing".into()));
    }
    let ok = |p: f64| if open { p > 0.0 && p < 1.0 } else { (0.0..=1.0).contains(&p) };
    if let Some(bad) = grid.iter().find(|&&p| !ok(p)) {
        let range = if open { "(0, 1)" } else { "[0, 1]" };
        return Err(Error::Domain(format!("grid point {bad} outside {range}")));
    }
    Ok(())
}

/// Logarithmic grid from `lo` to `hi` with `per_decade` points per decade.
/// The last point is the largest grid value not exceeding `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: u32) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && per_decade > 0) {
        return Err(Error::Input(format!(
            "log grid needs 0 < lo <= hi and a positive density, got {lo}, {hi}, {per_decade}"
        )));
    }
    let start = lo.log10();
    let steps = ((hi.log10() - start) * f64::from(per_decade) + 1e-9).floor() as u32;
    Ok((0..=steps)
        .map(|j| 10f64.powf(start + f64::from(j) / f64::from(per_decade)).min(hi))
        .collect())
}

/// Parse `log:LO:HI:PER_DECADE`, `lin:LO:HI:COUNT` or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Input(format!("bad number {s:?} in grid {spec:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        ["log", lo, hi, k] => {
            let k = k
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad density in grid {spec:?}")))?;
            log_grid(num(lo)?, num(hi)?, k)?
        }
        ["lin", lo, hi, k] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad count in grid {spec:?}")))?;
            match k {
                0 => Vec::new(),
                1 => vec![lo],
                _ => (0..k)
                    .map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64)
                    .collect(),
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Input(format!("unrecognised grid {spec:?}"))),
    };
    check_grid(&grid, false)?;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Candidate counts up to this size use a per-edge Bernoulli sweep.
    pub sweep_threshold: u64,
    /// Above the threshold, draw the edge count and choose that many distinct edges.
    pub allow_sparse: bool,
    /// Upper bound on the number of sampled edges.
    pub max_edges: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            sweep_threshold: 10_000_000,
            allow_sparse: true,
            max_edges: 100_000_000,
        }
    }
}

/// Draw one G^(m)(N,p) hypergraph. Edges come out in colex order.
pub fn sample(params: &ModelParams, seed: u64) -> Result<Hypergraph> {
    sample_with(params, &SampleOptions::default(), &mut task_rng(seed, 0))
}

pub fn sample_with(params: &ModelParams, opts: &SampleOptions, rng: &mut TaskRng) -> Result<Hypergraph> {
    let n = usize::try_from(params.n)
        .ok()
        .filter(|&n| n <= NodeId::MAX as usize)
        .ok_or_else(|| Error::Capacity(format!("N={} exceeds the node id range", params.n)))?;
    let m = params.m;
    let total = binomial(params.n, m as u64)
        .ok_or_else(|| Error::Capacity(format!("C({n}, {m}) overflows 64 bits")))?;
    if total > opts.sweep_threshold && !opts.allow_sparse {
        return Err(Error::Capacity(format!(
            "C({n}, {m}) = {total} candidate edges exceeds the sweep budget {}",
            opts.sweep_threshold
        )));
    }
    let p = params.p;
    let ranks: Vec<u64> = if p == 0.0 || total == 0 {
        Vec::new()
    } else if p == 1.0 {
        check_edge_budget(total, opts)?;
        (0..total).collect()
    } else if total <= opts.sweep_threshold {
        let skip = Geometric::new(p).map_err(|e| Error::Numeric(e.to_string()))?;
        let mut out = Vec::with_capacity((total as f64 * p * 1.1) as usize + 16);
        let mut pos: u64 = 0;
        loop {
            match pos.checked_add(skip.sample(rng)) {
                Some(next) if next < total => {
                    out.push(next);
                    pos = next + 1;
                }
                _ => break,
            }
        }
        out
    } else {
        let count = Binomial::new(total, p)
            .map_err(|e| Error::Numeric(e.to_string()))?
            .sample(rng);
        check_edge_budget(count, opts)?;
        let len = usize::try_from(total)
            .map_err(|_| Error::Capacity(format!("{total} candidates exceed the address space")))?;
        let mut ranks: Vec<u64> = rand::seq::index::sample(rng, len, count as usize)
            .into_iter()
            .map(|r| r as u64)
            .collect();
        ranks.sort_unstable();
        ranks
    };
    let table = BinomialTable::new(n, m);
    let mut members = vec![0 as NodeId; ranks.len() * m];
    for (chunk, &r) in members.chunks_exact_mut(m).zip(&ranks) {
        table.unrank(r, chunk);
    }
    Ok(Hypergraph::from_uniform_sorted(n, m, members))
}

fn check_edge_budget(count: u64, opts: &SampleOptions) -> Result<()> {
    if count > opts.max_edges {
        return Err(Error::Capacity(format!(
            "{count} sampled edges exceed the edge budget {}",
            opts.max_edges
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct McOptions {
    pub sample: SampleOptions,
    pub census: CensusOptions,
}

/// Monte Carlo prevalence at one `p`: mean census frequency over `replicates`
/// samples with its standard error.
pub fn mc_prevalence(params: &ModelParams, replicates: usize, seed: u64) -> Result<PrevalenceTable> {
    mc_prevalence_with(params, replicates, seed, &McOptions::default())
}

pub fn mc_prevalence_with(
    params: &ModelParams,
    replicates: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<PrevalenceTable> {
    let curve = mc_curve_with(params.n, params.m, &[params.p], replicates, seed, opts)?;
    Ok(curve.tables.into_iter().next().expect("one grid point"))
}

/// Monte Carlo curve. Replicate `r` at grid index `g` uses stream `(g, r)`.
pub fn mc_curve(n: u64, m: usize, grid: &[f64], replicates: usize, seed: u64) -> Result<PrevalenceCurve> {
    mc_curve_with(n, m, grid, replicates, seed, &McOptions::default())
}

pub fn mc_curve_with(
    n: u64,
    m: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<PrevalenceCurve> {
    if replicates == 0 {
        return Err(Error::Contract("at least one replicate is required".into()));
    }
    check_grid(grid, false)?;
    let space = PatternSpace::get(m)?;
    let params: Vec<ModelParams> = grid
        .iter()
        .map(|&p| ModelParams::new(n, m, p))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..replicates).map(move |r| (g, r)))
        .collect();
    let freqs: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(g, r)| {
            let mut rng = task_rng(seed, stream2(g as u64, r as u64));
            let h = sample_with(&params[g], &opts.sample, &mut rng)?;
            let counts = census_counts(&h, m, &opts.census)?;
            let total: u64 = counts.iter().sum();
            Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
        })
        .collect::<Result<_>>()?;

    let tables = params
        .iter()
        .enumerate()
        .map(|(g, prm)| {
            let reps = &freqs[g * replicates..(g + 1) * replicates];
            let entries = (0..space.len())
                .map(|i| {
                    let (mean, se) = mean_stderr(reps.iter().map(|f| f[i]));
                    PrevalenceEntry {
                        id: space.id(i).clone(),
                        name: space.name(i).to_owned(),
                        value: mean,
                        stderr: Some(se),
                    }
                })
                .collect();
            PrevalenceTable {
                params: *prm,
                kind: PrevalenceKind::MonteCarlo,
                labelled: false,
                entries,
            }
        })
        .collect();
    Ok(PrevalenceCurve {
        p_grid: grid.to_vec(),
        tables,
    })
}

/// Sample mean and standard error of the mean (zero for a single value).
pub(crate) fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// A pattern that is the most prevalent at some grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeEntry {
    pub id: PatternId,
    pub name: String,
    /// Maximal runs of consecutive grid points where the pattern is an argmax,
    /// as `(first p, last p)`.
    pub intervals: Vec<(f64, f64)>,
    pub grid_points: usize,
}

/// Patterns attaining the maximum analytic prevalence at one or more grid
/// points, in pattern-space order. Values within relative `1e-12` of the
/// maximum count as ties.
pub fn extreme_set(m: usize, n: u64, grid: &[f64], labelled: bool) -> Result<Vec<ExtremeEntry>> {
    check_grid(grid, true)?;
    let space = PatternSpace::get(m)?;
    let mut hits: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
    for (g, &p) in grid.iter().enumerate() {
        let conn = connections(&ModelParams::new(n, m, p)?);
        let ln: Vec<f64> = (0..space.len())
            .map(|i| {
                let c = space.counts(i);
                let gamma = if labelled { 1 } else { space.gamma(i) };
                ln_prevalence_from_counts(c.xs(), c.ys(), gamma, &conn)
            })
            .collect();
        let best = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, &v) in ln.iter().enumerate() {
            if v >= best - 1e-12 {
                hits[i].push(g);
            }
        }
    }
    Ok(hits
        .into_iter()
        .enumerate()
        .filter(|(_, h)| !h.is_empty())
        .map(|(i, h)| {
            let mut intervals = Vec::new();
            let mut start = h[0];
            for w in h.windows(2) {
                if w[1] != w[0] + 1 {
                    intervals.push((grid[start], grid[w[0]]));
                    start = w[1];
                }
            }
            intervals.push((grid[start], grid[*h.last().unwrap()]));
            ExtremeEntry {
                id: space.id(i).clone(),
                name: space.name(i).to_owned(),
                intervals,
                grid_points: h.len(),
            }
        })
        .collect())
}

/// Root of `P_a(p) - P_b(p)` inside `bracket`, by bisection on
/// `ln P_a - ln P_b` over `ln p` to relative tolerance `1e-10` or better.
pub fn crossing_point(
    a: &MPattern,
    b: &MPattern,
    n: u64,
    bracket: (f64, f64),
    labelled: bool,
) -> Result<f64> {
    if a.m() != b.m() {
        return Err(Error::Contract("patterns have different m".into()));
    }
    let (lo, hi) = bracket;
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::Domain(format!("bracket must satisfy 0 < lo < hi <= 1, got ({lo}, {hi})")));
    }
    let m = a.m();
    let (ca, cb) = (a.counts(), b.counts());
    let (ga, gb) = if labelled { (1, 1) } else { (a.gamma(), b.gamma()) };
    let diff = |p: f64| -> Result<f64> {
        let conn = connections(&ModelParams::new(n, m, p)?);
        let la = ln_prevalence_from_counts(ca.xs(), ca.ys(), ga, &conn);
        let lb = ln_prevalence_from_counts(cb.xs(), cb.ys(), gb, &conn);
        if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let d = la - lb;
        if d.is_nan() {
            return Err(Error::Numeric(format!("prevalence difference undefined at p={p}")));
        }
        Ok(d)
    };
    let (mut f_lo, f_hi) = (diff(lo)?, diff(hi)?);
    if f_lo == 0.0 && f_hi == 0.0 || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::Bracket(format!(
            "prevalence difference has no sign change on ({lo}, {hi})"
        )));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let (mut x_lo, mut x_hi) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (x_lo + x_hi);
        if (x_hi - x_lo).exp_m1() <= 1e-13 || mid == x_lo || mid == x_hi {
            break;
        }
        let f_mid = diff(mid.exp())?;
        if f_mid == 0.0 {
            return Ok(mid.exp());
        }
        if f_mid.signum() == f_lo.signum() {
            x_lo = mid;
            f_lo = f_mid;
        } else {
            x_hi = mid;
        }
    }
    Ok((0.5 * (x_lo + x_hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::enumerate_patterns;
    use proptest::prelude::*;

    fn params(n: u64, m: usize, p: f64) -> ModelParams {
        ModelParams::new(n, m, p).unwrap()
    }

    #[test]
    fn p_m_equals_p() {
        for n in [4, 50, 10_000] {
            assert_eq!(subset_connection_prob(&params(n, 4, 0.0123), 4).unwrap(), 0.0123);
        }
    }

    #[test]
    fn no_outside_nodes_means_no_coverage() {
        for i in 1..3 {
            assert_eq!(subset_connection_prob(&params(3, 3, 0.7), i).unwrap(), 0.0);
        }
    }

    #[test]
    fn half_coverage_target() {
        let p = 1.0 - 2f64.powf(-1.0 / 47.0);
        assert!((subset_connection_prob(&params(50, 3, p), 2).unwrap() - 0.5).abs() < 1e-12);
        assert!((p_for_target(50, 3, 2, 0.5).unwrap() - p).abs() < 1e-15);
        assert!((p - 0.014637).abs() < 5e-6);
    }

    #[test]
    fn target_errors() {
        assert_eq!(p_for_target(50, 3, 2, 0.0).unwrap_err().category(), "domain");
        assert_eq!(p_for_target(50, 3, 2, 1.0).unwrap_err().category(), "domain");
        assert_eq!(p_for_target(3, 3, 1, 0.5).unwrap_err().category(), "singular");
    }

    #[test]
    fn half_points_at_crossings() {
        for k in 1..=4usize {
            let c = binomial_f64(96, (4 - k) as u64);
            let p = p_for_target(100, 4, k, 0.5).unwrap();
            assert!((p - (1.0 - 2f64.powf(-1.0 / c))).abs() <= 1e-10 * p);
        }
    }

    #[test]
    fn repeat_prevalence_is_p() {
        for m in 1..=5 {
            let x = MPattern::repeat(m).unwrap();
            for n in [m as u64, 50, 1000] {
                for p in [0.0, 1e-9, 0.3, 1.0] {
                    let v = analytic_prevalence(&x, &params(n, m, p), false).unwrap();
                    assert!((v - p).abs() <= 1e-15, "m={m} n={n} p={p} v={v}");
                }
            }
        }
    }

    #[test]
    fn zero_p_is_all_empty() {
        for x in enumerate_patterns(3).unwrap() {
            let v = analytic_prevalence(&x, &params(50, 3, 0.0), false).unwrap();
            assert_eq!(v, if x.is_empty() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn labelled_consistency() {
        let prm = params(60, 4, 0.002);
        for x in enumerate_patterns(4).unwrap() {
            let u = analytic_prevalence(&x, &prm, false).unwrap();
            let l = analytic_prevalence(&x, &prm, true).unwrap();
            assert!((u - x.gamma() as f64 * l).abs() <= 1e-13 * u);
        }
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1e-5, 1.0, 25).unwrap();
        assert_eq!(g.len(), 126);
        assert_eq!(g[0], 1e-5);
        assert!((g[125] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("log:1e-5:1:25").unwrap(), g);
        assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("0.2,0.1").is_err());
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn sampling_edge_cases() {
        let full = sample(&params(12, 3, 1.0), 1).unwrap();
        assert_eq!(full.num_edges(), 220);
        let none = sample(&params(12, 3, 0.0), 1).unwrap();
        assert_eq!(none.num_edges(), 0);
        let a = sample(&params(30, 3, 0.05), 9).unwrap();
        let b = sample(&params(30, 3, 0.05), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_path_and_budget() {
        let opts = SampleOptions {
            sweep_threshold: 100,
            allow_sparse: true,
            max_edges: 1_000,
        };
        let h = sample_with(&params(40, 3, 0.01), &opts, &mut task_rng(3, 0)).unwrap();
        let mut seen: Vec<Vec<NodeId>> = h.edges().map(|e| e.nodes.to_vec()).collect();
        let len = seen.len();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), len);
        let strict = SampleOptions {
            allow_sparse: false,
            ..opts
        };
        let err = sample_with(&params(40, 3, 0.01), &strict, &mut task_rng(3, 0)).unwrap_err();
        assert_eq!(err.category(), "capacity");
    }

    #[test]
    fn crossing_of_identical_patterns_is_a_bracket_error() {
        let x = MPattern::pure(3, 2).unwrap();
        let err = crossing_point(&x, &x, 50, (1e-6, 0.5), false).unwrap_err();
        assert_eq!(err.category(), "bracket");
    }

    proptest! {
        #[test]
        fn target_round_trip(n in 5u64..5000, m in 2usize..5, a in 0.001f64..0.999) {
            for l in 1..=m {
                let p = p_for_target(n, m, l, a).unwrap();
                let back = subset_connection_prob(&params(n, m, p), l).unwrap();
                prop_assert!((back - a).abs() < 1e-12);
            }
        }

        #[test]
        fn prevalences_sum_to_one(n in 4u64..200, lp in -8.0f64..0.0, m in 2usize..5) {
            let t = analytic_table(&params(n.max(m as u64), m, 10f64.powf(lp)), false).unwrap();
            let total: f64 = t.entries.iter().map(|e| e.value).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
