//! Pattern censuses: classify every (or a sample of) m-node subset by the
//! m-pattern of its maximal induced subhypergraph, and extract formation-time
//! patterns of new hyperedges in temporal hypergraphs.
//!
//! Two engines produce exhaustive censuses:
//!
//! * the cover-table engine (m <= 5) precomputes, for every j-subset with
//!   j <= m, whether some hyperedge contains it. The down-closed family of
//!   covered subsets of a focal set has the same maximal elements as its
//!   maximal induced subhypergraph, so the covered bits classify the set.
//! * the incidence engine (m <= 8) gathers the edges incident to each focal set
//!   and intersects them directly.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::combin::{binomial, next_colex, BinomialTable};
use crate::error::{Error, Result};
use crate::hypergraph::{local_mask, maximal_masks, Hypergraph, NodeId, NodeSubset};
use crate::pattern::{MPattern, PatternId, PatternSpace, SlotMask, MAX_ENUMERATED_SLOTS, MAX_PATTERN_SLOTS};
use crate::rng::task_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusEngine {
    #[default]
    Auto,
    CoverTable,
    Incidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusOptions {
    pub engine: CensusEngine,
    /// Largest number of m-subsets an exhaustive census may visit.
    pub max_subsets: u64,
    /// Memory cap for the cover tables.
    pub max_table_bytes: u64,
    /// Cap on subset insertions while building the cover tables.
    pub max_expansion: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            engine: CensusEngine::Auto,
            max_subsets: 100_000_000,
            max_table_bytes: 1 << 30,
            max_expansion: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusEntry {
    pub id: PatternId,
    pub name: String,
    pub count: u64,
}

/// Pattern counts over node subsets. For m <= 5 every pattern is listed (in
/// pattern-space order, zeros included); for larger m only observed patterns
/// appear, ordered by PatternId.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCensus {
    pub m: usize,
    pub mode: CensusMode,
    pub total: u64,
    pub entries: Vec<CensusEntry>,
}

impl PatternCensus {
    pub fn count(&self, id: &PatternId) -> u64 {
        self.entries
            .iter()
            .find(|e| &e.id == id)
            .map_or(0, |e| e.count)
    }

    pub fn frequency(&self, id: &PatternId) -> f64 {
        self.count(id) as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.count as f64 / self.total as f64)
            .collect()
    }

    fn from_space_counts(m: usize, mode: CensusMode, counts: Vec<u64>) -> Result<Self> {
        let space = PatternSpace::get(m)?;
        let total = counts.iter().sum();
        let entries = counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| CensusEntry {
                id: space.id(i).clone(),
                name: space.name(i).to_owned(),
                count,
            })
            .collect();
        Ok(Self {
            m,
            mode,
            total,
            entries,
        })
    }

    fn from_labelled_counts(m: usize, mode: CensusMode, labelled: HashMap<Vec<SlotMask>, u64>) -> Result<Self> {
        let mut by_id: BTreeMap<PatternId, u64> = BTreeMap::new();
        for (masks, count) in labelled {
            *by_id.entry(MPattern::labelled(m, masks)?.id()).or_default() += count;
        }
        let total = by_id.values().sum();
        let entries = by_id
            .into_iter()
            .map(|(id, count)| CensusEntry {
                name: id.pattern().name(),
                id,
                count,
            })
            .collect();
        Ok(Self {
            m,
            mode,
            total,
            entries,
        })
    }
}

fn check_m(h: &Hypergraph, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Contract("m must be positive".into()));
    }
    if m > MAX_PATTERN_SLOTS {
        return Err(Error::Capacity(format!(
            "pattern tracking supports m <= {MAX_PATTERN_SLOTS}, got {m}"
        )));
    }
    if h.num_nodes() < m {
        return Err(Error::Input(format!(
            "hypergraph has {} nodes, fewer than m={m}",
            h.num_nodes()
        )));
    }
    Ok(())
}

/// Labelled slot masks of the edges touching `subset` (not yet maximal).
fn touching_masks(h: &Hypergraph, subset: &[NodeId], out: &mut Vec<SlotMask>) {
    out.clear();
    for &v in subset {
        for &e in h.incident_edges(v) {
            out.push(local_mask(h.edge_nodes(e as usize), subset) as SlotMask);
        }
    }
}

#[inline]
fn presence_bits(masks: &[SlotMask]) -> u32 {
    masks.iter().fold(0u32, |acc, &t| acc | 1 << t)
}

fn maximal_labelled(masks: &[SlotMask]) -> Vec<SlotMask> {
    maximal_masks(masks.iter().map(|&t| u64::from(t)).collect())
        .into_iter()
        .map(|t| t as SlotMask)
        .collect()
}

/// Pattern of the maximal induced subhypergraph on `subset`.
pub fn subset_pattern(h: &Hypergraph, subset: &NodeSubset) -> Result<PatternId> {
    let m = subset.len();
    if m > MAX_PATTERN_SLOTS {
        return Err(Error::Capacity(format!(
            "pattern tracking supports m <= {MAX_PATTERN_SLOTS}, got {m}"
        )));
    }
    let masks: Vec<SlotMask> = h
        .induced_masks(subset)?
        .into_iter()
        .map(|t| t as SlotMask)
        .collect();
    Ok(MPattern::labelled(m, maximal_labelled(&masks))?.id())
}

/// Exhaustive census of all `C(N, m)` subsets with default options.
pub fn census_all(h: &Hypergraph, m: usize) -> Result<PatternCensus> {
    census_all_with(h, m, &CensusOptions::default())
}

pub fn census_all_with(h: &Hypergraph, m: usize, opts: &CensusOptions) -> Result<PatternCensus> {
    check_m(h, m)?;
    check_subset_budget(h, m, opts)?;
    if m <= MAX_ENUMERATED_SLOTS {
        let counts = census_counts(h, m, opts)?;
        PatternCensus::from_space_counts(m, CensusMode::Exhaustive, counts)
    } else {
        if opts.engine == CensusEngine::CoverTable {
            return Err(Error::Capacity(format!(
                "the cover-table engine supports m <= {MAX_ENUMERATED_SLOTS}"
            )));
        }
        let labelled = incidence_labelled_counts(h, m);
        PatternCensus::from_labelled_counts(m, CensusMode::Exhaustive, labelled)
    }
}

fn check_subset_budget(h: &Hypergraph, m: usize, opts: &CensusOptions) -> Result<u64> {
    let total = binomial(h.num_nodes() as u64, m as u64).unwrap_or(u64::MAX);
    if total > opts.max_subsets {
        return Err(Error::Capacity(format!(
            "C({}, {m}) = {total} subsets exceeds the census budget {}; use a sampled census",
            h.num_nodes(),
            opts.max_subsets
        )));
    }
    Ok(total)
}

/// Exhaustive counts indexed by pattern-space position (m <= 5).
pub(crate) fn census_counts(h: &Hypergraph, m: usize, opts: &CensusOptions) -> Result<Vec<u64>> {
    check_m(h, m)?;
    check_subset_budget(h, m, opts)?;
    let space = PatternSpace::get(m)?;
    let counts = match opts.engine {
        CensusEngine::Incidence => incidence_counts(h, m, space),
        CensusEngine::CoverTable => CoverTables::build(h, m, opts)?.census(space),
        CensusEngine::Auto => match CoverTables::build(h, m, opts) {
            Ok(t) => t.census(space),
            Err(Error::Capacity(_)) => incidence_counts(h, m, space),
            Err(e) => return Err(e),
        },
    };
    Ok(counts)
}

/// Visit every m-subset grouped by its largest element, in parallel.
fn for_each_top<T, F>(n: usize, m: usize, init: impl Fn() -> T + Sync + Send, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut T, &[NodeId]) + Sync + Send,
{
    (m - 1..n)
        .into_par_iter()
        .map(|top| {
            let mut acc = init();
            let mut subset: Vec<NodeId> = (0..m as NodeId).collect();
            subset[m - 1] = top as NodeId;
            loop {
                visit(&mut acc, &subset);
                if !next_colex(&mut subset[..m - 1], top as u32) {
                    break;
                }
            }
            acc
        })
        .collect()
}

fn incidence_counts(h: &Hypergraph, m: usize, space: &PatternSpace) -> Vec<u64> {
    let parts = for_each_top(
        h.num_nodes(),
        m,
        || (vec![0u64; space.len()], Vec::new()),
        |(counts, scratch), subset| {
            touching_masks(h, subset, scratch);
            counts[space.classify_presence(presence_bits(scratch))] += 1;
        },
    );
    let mut total = vec![0u64; space.len()];
    for (counts, _) in parts {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    total
}

fn incidence_labelled_counts(h: &Hypergraph, m: usize) -> HashMap<Vec<SlotMask>, u64> {
    let parts = for_each_top(
        h.num_nodes(),
        m,
        || (HashMap::<Vec<SlotMask>, u64>::new(), Vec::new()),
        |(counts, scratch), subset| {
            touching_masks(h, subset, scratch);
            *counts.entry(maximal_labelled(scratch)).or_default() += 1;
        },
    );
    let mut total: HashMap<Vec<SlotMask>, u64> = HashMap::new();
    for (counts, _) in parts {
        for (k, c) in counts {
            *total.entry(k).or_default() += c;
        }
    }
    total
}

/// Fixed-size bit set.
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Self(vec![0; len.div_ceil(64)])
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Call `f` with every set index in `lo..hi`.
    #[inline]
    fn for_each_set(&self, lo: usize, hi: usize, mut f: impl FnMut(usize)) {
        if lo >= hi {
            return;
        }
        let (first, last) = (lo >> 6, (hi - 1) >> 6);
        for w in first..=last {
            let mut word = self.0[w];
            if w == first {
                word &= !0u64 << (lo & 63);
            }
            if w == last && hi & 63 != 0 {
                word &= !(!0u64 << (hi & 63));
            }
            while word != 0 {
                f(w << 6 | word.trailing_zeros() as usize);
                word &= word - 1;
            }
        }
    }
}

/// Coverage tables: bit `rank(first j - 1) * n + last` of `levels[j - 1]` is
/// set when the sorted j-subset lies inside some edge.
struct CoverTables {
    n: usize,
    m: usize,
    binom: BinomialTable,
    levels: Vec<Bits>,
}

impl CoverTables {
    fn build(h: &Hypergraph, m: usize, opts: &CensusOptions) -> Result<Self> {
        if m > MAX_ENUMERATED_SLOTS {
            return Err(Error::Capacity(format!(
                "the cover-table engine supports m <= {MAX_ENUMERATED_SLOTS}"
            )));
        }
        let n = h.num_nodes();
        let binom = BinomialTable::new(n, m);
        let level_bits: Vec<u64> = (1..=m)
            .map(|j| binom.get(n, j - 1).saturating_mul(n as u64))
            .collect();
        let bytes = level_bits
            .iter()
            .fold(0u64, |a, &b| a.saturating_add(b.div_ceil(64).saturating_mul(8)));
        if bytes > opts.max_table_bytes {
            return Err(Error::Capacity(format!(
                "cover tables need {bytes} bytes, over the {} byte budget",
                opts.max_table_bytes
            )));
        }
        let expansion = h.edges().fold(0u64, |acc, e| {
            let s = e.nodes.len();
            acc.saturating_add(if s >= m { binom_u64(s, m) } else { 1 })
        });
        if expansion > opts.max_expansion {
            return Err(Error::Capacity(format!(
                "cover tables need {expansion} subset insertions, over the budget {}",
                opts.max_expansion
            )));
        }

        let mut levels: Vec<Bits> = level_bits.iter().map(|&b| Bits::new(b as usize)).collect();
        let key = |t: &[NodeId]| {
            let j = t.len();
            binom.rank(&t[..j - 1]) as usize * n + t[j - 1] as usize
        };
        let mut pos: Vec<u32> = Vec::with_capacity(m);
        let mut picked: Vec<NodeId> = Vec::with_capacity(m);
        for e in h.edges() {
            let s = e.nodes.len();
            if s < m {
                levels[s - 1].set(key(e.nodes));
                continue;
            }
            pos.clear();
            pos.extend(0..m as u32);
            loop {
                picked.clear();
                picked.extend(pos.iter().map(|&i| e.nodes[i as usize]));
                levels[m - 1].set(key(&picked));
                if !next_colex(&mut pos, s as u32) {
                    break;
                }
            }
        }

        // downward closure: every (j-1)-subset of a covered j-subset is covered
        let mut drop_one: Vec<usize> = Vec::with_capacity(m);
        for j in (2..=m).rev() {
            let (lower, upper) = levels.split_at_mut(j - 1);
            let (lower, upper) = (&mut lower[j - 2], &upper[0]);
            let mut prefix: Vec<NodeId> = (0..(j - 1) as NodeId).collect();
            loop {
                let top = prefix[j - 2] as usize;
                let row = binom.rank(&prefix) as usize * n;
                let own = key(&prefix);
                drop_one.clear();
                for i in 0..j - 1 {
                    picked.clear();
                    picked.extend(prefix.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &v)| v));
                    drop_one.push(binom.rank(&picked) as usize * n);
                }
                let mut any = false;
                upper.for_each_set(row + top + 1, row + n, |idx| {
                    let last = idx - row;
                    any = true;
                    for &r in &drop_one {
                        lower.set(r + last);
                    }
                });
                if any {
                    lower.set(own);
                }
                if !next_colex(&mut prefix, n as u32) {
                    break;
                }
            }
        }
        Ok(Self { n, m, binom, levels })
    }

    fn census(&self, space: &PatternSpace) -> Vec<u64> {
        let (n, m) = (self.n, self.m);
        if m == 1 {
            let covered = self.levels[0].count();
            let mut counts = vec![0u64; space.len()];
            counts[space.classify_presence(0b10)] += covered;
            counts[space.classify_presence(0)] += n as u64 - covered;
            return counts;
        }
        let half = 1usize << (m - 1);
        let last_bit = 1u32 << (m - 1);
        // for each prefix subset s: its element positions within the prefix
        let members: Vec<Vec<usize>> = (0..half)
            .map(|s| (0..m - 1).filter(|&b| s >> b & 1 == 1).collect())
            .collect();

        let parts = (m - 2..n.saturating_sub(1)).into_par_iter().map(|top| {
            let mut counts = vec![0u64; space.len()];
            let mut prefix: Vec<NodeId> = (0..(m - 1) as NodeId).collect();
            prefix[m - 2] = top as NodeId;
            let mut picked: Vec<NodeId> = Vec::with_capacity(m);
            let mut buf = vec![0u32; n];
            loop {
                let mut fixed = 0u32;
                for (s, elems) in members.iter().enumerate().skip(1) {
                    picked.clear();
                    picked.extend(elems.iter().map(|&b| prefix[b]));
                    let j = picked.len();
                    let key = self.binom.rank(&picked[..j - 1]) as usize * n + picked[j - 1] as usize;
                    if self.levels[j - 1].get(key) {
                        fixed |= 1 << s;
                    }
                }
                buf[top + 1..].fill(fixed);
                for (s, elems) in members.iter().enumerate() {
                    picked.clear();
                    picked.extend(elems.iter().map(|&b| prefix[b]));
                    let offset = self.binom.rank(&picked) as usize * n;
                    let bit = 1u32 << (s as u32 | last_bit);
                    self.levels[picked.len()].for_each_set(offset + top + 1, offset + n, |i| {
                        buf[i - offset] |= bit;
                    });
                }
                for &bits in &buf[top + 1..] {
                    counts[space.classify_presence(bits)] += 1;
                }
                if m == 2 || !next_colex(&mut prefix[..m - 2], top as u32) {
                    break;
                }
            }
            counts
        });
        parts.reduce(
            || vec![0u64; space.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
    }
}

fn binom_u64(n: usize, k: usize) -> u64 {
    binomial(n as u64, k as u64).unwrap_or(u64::MAX)
}

/// Census of `samples` uniformly drawn m-subsets (with replacement between
/// draws). Draw `i` uses stream `i / 4096`, so results are independent of the
/// worker count.
pub fn census_sampled(h: &Hypergraph, m: usize, samples: u64, seed: u64) -> Result<PatternCensus> {
    check_m(h, m)?;
    if samples == 0 {
        return Err(Error::Contract("at least one sample is required".into()));
    }
    const BLOCK: u64 = 4096;
    let n = h.num_nodes();
    let blocks = samples.div_ceil(BLOCK);
    let draw_block = |b: u64, visit: &mut dyn FnMut(&[NodeId])| {
        let mut rng = task_rng(seed, b);
        let count = BLOCK.min(samples - b * BLOCK);
        let mut subset: Vec<NodeId> = Vec::with_capacity(m);
        for _ in 0..count {
            subset.clear();
            subset.extend(index::sample(&mut rng, n, m).into_iter().map(|v| v as NodeId));
            subset.sort_unstable();
            visit(&subset);
        }
    };
    if m <= MAX_ENUMERATED_SLOTS {
        let space = PatternSpace::get(m)?;
        let counts = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut counts = vec![0u64; space.len()];
                let mut scratch = Vec::new();
                draw_block(b, &mut |subset| {
                    touching_masks(h, subset, &mut scratch);
                    counts[space.classify_presence(presence_bits(&scratch))] += 1;
                });
                counts
            })
            .reduce(
                || vec![0u64; space.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        PatternCensus::from_space_counts(m, CensusMode::Sampled, counts)
    } else {
        let parts: Vec<HashMap<Vec<SlotMask>, u64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut counts: HashMap<Vec<SlotMask>, u64> = HashMap::new();
                let mut scratch = Vec::new();
                draw_block(b, &mut |subset| {
                    touching_masks(h, subset, &mut scratch);
                    *counts.entry(maximal_labelled(&scratch)).or_default() += 1;
                });
                counts
            })
            .collect();
        let mut merged: HashMap<Vec<SlotMask>, u64> = HashMap::new();
        for part in parts {
            for (k, c) in part {
                *merged.entry(k).or_default() += c;
            }
        }
        PatternCensus::from_labelled_counts(m, CensusMode::Sampled, merged)
    }
}

/// Pattern formed by a new m-node edge with the collaboration history before it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationEvent {
    pub time: i64,
    pub edge_index: usize,
    pub nodes: Vec<NodeId>,
    pub pattern: PatternId,
    pub name: String,
    pub flags: BTreeMap<String, bool>,
}

/// For every edge of size exactly `m`, in time order (ties by ingestion
/// order), the pattern of its node set against edges with strictly earlier
/// timestamps.
pub fn formation_patterns(h: &Hypergraph, m: usize) -> Result<Vec<FormationEvent>> {
    if !h.is_timestamped() {
        return Err(Error::Input("formation patterns need timestamped edges".into()));
    }
    if m == 0 || m > MAX_PATTERN_SLOTS {
        return Err(Error::Capacity(format!(
            "pattern tracking supports 1 <= m <= {MAX_PATTERN_SLOTS}, got {m}"
        )));
    }
    let space = if m <= MAX_ENUMERATED_SLOTS {
        Some(PatternSpace::get(m)?)
    } else {
        None
    };
    let time = |i: usize| h.edge(i).timestamp.expect("timestamped");
    let mut order: Vec<usize> = (0..h.num_edges()).collect();
    order.sort_by_key(|&i| (time(i), i));

    let mut history: Vec<Vec<u32>> = vec![Vec::new(); h.num_nodes()];
    let mut events = Vec::new();
    let mut scratch: Vec<SlotMask> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let t = time(order[start]);
        let end = start + order[start..].partition_point(|&i| time(i) == t);
        for &i in &order[start..end] {
            let nodes = h.edge_nodes(i);
            if nodes.len() != m {
                continue;
            }
            scratch.clear();
            for &v in nodes {
                for &e in &history[v as usize] {
                    scratch.push(local_mask(h.edge_nodes(e as usize), nodes) as SlotMask);
                }
            }
            let (pattern, name) = match space {
                Some(space) => {
                    let k = space.classify_presence(presence_bits(&scratch));
                    (space.id(k).clone(), space.name(k).to_owned())
                }
                None => {
                    let p = MPattern::labelled(m, maximal_labelled(&scratch))?.canonical_form();
                    (p.id(), p.name())
                }
            };
            events.push(FormationEvent {
                time: t,
                edge_index: i,
                nodes: nodes.to_vec(),
                pattern,
                name,
                flags: BTreeMap::new(),
            });
        }
        for &i in &order[start..end] {
            for &v in h.edge_nodes(i) {
                history[v as usize].push(i as u32);
            }
        }
        start = end;
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthRow {
    pub month: i64,
    pub n_events: usize,
    /// Frequencies aligned with the series universe; `None` for a month
    /// without events.
    pub frequencies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlySeries {
    pub universe: Vec<PatternId>,
    pub names: Vec<String>,
    pub rows: Vec<MonthRow>,
}

/// Per-month pattern frequencies. Event times are month indices; every month
/// between the first and last event appears, empty months as gaps.
pub fn monthly_frequencies(events: &[FormationEvent], universe: &[PatternId]) -> MonthlySeries {
    let names = universe.iter().map(|id| id.pattern().name()).collect();
    let mut by_month: BTreeMap<i64, Vec<&FormationEvent>> = BTreeMap::new();
    for e in events {
        by_month.entry(e.time).or_default().push(e);
    }
    let rows = match (by_month.keys().next(), by_month.keys().next_back()) {
        (Some(&first), Some(&last)) => (first..=last)
            .map(|month| match by_month.get(&month) {
                Some(evs) => MonthRow {
                    month,
                    n_events: evs.len(),
                    frequencies: Some(
                        universe
                            .iter()
                            .map(|id| {
                                evs.iter().filter(|e| &e.pattern == id).count() as f64 / evs.len() as f64
                            })
                            .collect(),
                    ),
                },
                None => MonthRow {
                    month,
                    n_events: 0,
                    frequencies: None,
                },
            })
            .collect(),
        _ => Vec::new(),
    };
    MonthlySeries {
        universe: universe.to_vec(),
        names,
        rows,
    }
}
