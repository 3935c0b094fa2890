//! m-patterns: simple hypergraphs on m slots, their canonical forms,
//! enumeration, combinatorial factors and names.
//!
//! An edge on `m` slots is a bit mask (bit `j` = slot `j`). Edge lists are kept
//! sorted by size, largest first, then by mask value. The canonical form of a
//! pattern is the lexicographically smallest sorted mask list over all `m!`
//! slot relabelings.
//!
//! # PatternId format (version 1)
//!
//! `m=<m>:[<mask>,<mask>,...]` where every mask is written `0b` followed by
//! exactly `m` binary digits (slot `m-1` first) and masks appear in canonical
//! order. The empty pattern is `m=<m>:[]`. Example: `m=3:[0b011,0b100]` is a
//! 2-node edge plus a 1-node edge on the remaining slot.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combin::binomial;
use crate::error::{Error, Result};

pub type SlotMask = u32;

/// Largest slot count accepted by [`canonicalize`] and [`MPattern`].
pub const MAX_PATTERN_SLOTS: usize = 8;
/// Largest slot count for which the full pattern space is enumerated.
pub const MAX_ENUMERATED_SLOTS: usize = 5;
pub const PATTERN_ID_FORMAT_VERSION: u32 = 1;

#[inline]
fn mask_order(a: &SlotMask, b: &SlotMask) -> Ordering {
    b.count_ones().cmp(&a.count_ones()).then(a.cmp(b))
}

fn permutations(m: usize) -> &'static [[u8; MAX_PATTERN_SLOTS]] {
    static CACHE: [OnceLock<Vec<[u8; MAX_PATTERN_SLOTS]>>; MAX_PATTERN_SLOTS + 1] =
        [const { OnceLock::new() }; MAX_PATTERN_SLOTS + 1];
    CACHE[m].get_or_init(|| {
        let mut out = Vec::new();
        let mut current = [0u8; MAX_PATTERN_SLOTS];
        let mut used = [false; MAX_PATTERN_SLOTS];
        fn rec(
            depth: usize,
            m: usize,
            cur: &mut [u8; MAX_PATTERN_SLOTS],
            used: &mut [bool; MAX_PATTERN_SLOTS],
            out: &mut Vec<[u8; MAX_PATTERN_SLOTS]>,
        ) {
            if depth == m {
                out.push(*cur);
                return;
            }
            for v in 0..m {
                if !used[v] {
                    used[v] = true;
                    cur[depth] = v as u8;
                    rec(depth + 1, m, cur, used, out);
                    used[v] = false;
                }
            }
        }
        rec(0, m, &mut current, &mut used, &mut out);
        out
    })
}

#[inline]
fn permute_mask(mask: SlotMask, perm: &[u8; MAX_PATTERN_SLOTS]) -> SlotMask {
    let mut out = 0;
    let mut rest = mask;
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        out |= 1 << perm[j];
        rest &= rest - 1;
    }
    out
}

fn is_antichain(masks: &[SlotMask]) -> bool {
    masks.iter().enumerate().all(|(i, &a)| {
        masks
            .iter()
            .enumerate()
            .all(|(j, &b)| i == j || a & b != a)
    })
}

/// A simple hypergraph on `m` labelled slots, optionally in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MPattern {
    m: u8,
    edges: Vec<SlotMask>,
    canonical: bool,
}

impl MPattern {
    /// A labelled pattern from slot masks. Masks must be nonzero, fit in `m`
    /// bits, be distinct and form an antichain.
    pub fn labelled(m: usize, mut masks: Vec<SlotMask>) -> Result<Self> {
        check_slots(m)?;
        let full: SlotMask = (1 << m) - 1;
        if let Some(bad) = masks.iter().find(|&&e| e == 0 || e & !full != 0) {
            return Err(Error::Contract(format!(
                "mask {bad:#b} is not a nonempty subset of {m} slots"
            )));
        }
        masks.sort_by(mask_order);
        if masks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("duplicate edge in pattern".into()));
        }
        if !is_antichain(&masks) {
            return Err(Error::Contract(
                "edge set is not an antichain: an edge is contained in another".into(),
            ));
        }
        Ok(Self {
            m: m as u8,
            edges: masks,
            canonical: false,
        })
    }

    /// A labelled pattern from node subsets over slots `0..m`.
    pub fn from_edge_set<S: AsRef<[usize]>>(m: usize, edge_set: &[S]) -> Result<Self> {
        check_slots(m)?;
        let masks = edge_set
            .iter()
            .map(|e| {
                e.as_ref().iter().try_fold(0 as SlotMask, |acc, &s| {
                    if s >= m {
                        Err(Error::Contract(format!("slot {s} out of range for m={m}")))
                    } else {
                        Ok(acc | 1 << s)
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::labelled(m, masks)
    }

    pub fn empty(m: usize) -> Result<Self> {
        Ok(Self::labelled(m, Vec::new())?.canonical_form())
    }

    /// The pattern holding every k-node edge on m slots.
    pub fn pure(m: usize, k: usize) -> Result<Self> {
        check_slots(m)?;
        if k == 0 || k > m {
            return Err(Error::Contract(format!("pure pattern needs 1 <= k <= m, got k={k}")));
        }
        let masks = (1..(1 << m) as SlotMask)
            .filter(|s| s.count_ones() as usize == k)
            .collect();
        Ok(Self::labelled(m, masks)?.canonical_form())
    }

    /// The single m-node edge (a repeat collaboration).
    pub fn repeat(m: usize) -> Result<Self> {
        Self::pure(m, m)
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn edges(&self) -> &[SlotMask] {
        &self.edges
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `Some(k)` when the pattern is the pure k-pattern.
    pub fn pure_order(&self) -> Option<usize> {
        let k = self.edges.first()?.count_ones() as usize;
        let all_k = self.edges.iter().all(|e| e.count_ones() as usize == k);
        let expected = binomial(self.m as u64, k as u64).unwrap_or(0) as usize;
        (all_k && self.edges.len() == expected).then_some(k)
    }

    pub fn is_pure(&self) -> bool {
        self.pure_order().is_some()
    }

    /// Apply a slot permutation (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let m = self.m();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Contract(format!("not a permutation of {m} slots")));
        }
        let mut p = [0u8; MAX_PATTERN_SLOTS];
        for (i, &v) in perm.iter().enumerate() {
            p[i] = v as u8;
        }
        let masks = self.edges.iter().map(|&e| permute_mask(e, &p)).collect();
        Self::labelled(m, masks)
    }

    /// Canonical representative: minimum sorted mask list over all `m!`
    /// relabelings.
    pub fn canonical_form(&self) -> Self {
        if self.canonical {
            return self.clone();
        }
        let mut best = self.edges.clone();
        let mut scratch = Vec::with_capacity(self.edges.len());
        for perm in permutations(self.m()) {
            scratch.clear();
            scratch.extend(self.edges.iter().map(|&e| permute_mask(e, perm)));
            scratch.sort_by(mask_order);
            if scratch < best {
                best.clone_from(&scratch);
            }
        }
        Self {
            m: self.m,
            edges: best,
            canonical: true,
        }
    }

    pub fn id(&self) -> PatternId {
        let c = self.canonical_form();
        PatternId {
            m: c.m,
            masks: c.edges,
        }
    }

    pub fn counts(&self) -> PatternCounts {
        PatternCounts::of(self)
    }

    /// Number of distinct labelled edge sets isomorphic to this pattern,
    /// `m! / |Aut|`.
    pub fn gamma(&self) -> u64 {
        let perms = permutations(self.m());
        let mut scratch = Vec::with_capacity(self.edges.len());
        let automorphisms = perms
            .iter()
            .filter(|perm| {
                scratch.clear();
                scratch.extend(self.edges.iter().map(|&e| permute_mask(e, perm)));
                scratch.sort_by(mask_order);
                scratch == self.edges
            })
            .count() as u64;
        perms.len() as u64 / automorphisms
    }

    /// Sufficient condition for a pattern never being extreme in the limit:
    /// some edge size `H` is present while some smaller size `l + 1 <= H - 1`
    /// has a subset covered by no edge. `false` does not imply extremeness.
    pub fn not_extreme_in_limit(&self) -> bool {
        let c = self.counts();
        let m = self.m();
        (1..=m).any(|h| {
            c.x(h) > 0 && (1..=m).any(|missing| c.y(missing) > 0 && h as i64 - (missing as i64 - 1) >= 2)
        })
    }

    /// Human-readable name: `3^i-2^j-1^k` for m <= 3, the seven-digit
    /// `1ABCDEF` form for m = 4 (with `-a`/`-b` where two classes share
    /// digits), the PatternId otherwise.
    pub fn name(&self) -> String {
        let c = self.canonical_form();
        match c.m() {
            1..=3 => exponent_name(&c.counts()),
            4 => {
                let base = digit_name(&c.counts());
                match PatternSpace::get(4) {
                    Ok(space) => space
                        .index_of(&c)
                        .map(|i| space.names[i].clone())
                        .unwrap_or(base),
                    Err(_) => base,
                }
            }
            _ => c.id().to_string(),
        }
    }

    /// Edges as slot lists, in stored order.
    pub fn edge_slots(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|&e| (0..self.m()).filter(|&j| e >> j & 1 == 1).collect())
            .collect()
    }
}

fn check_slots(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Contract("pattern needs at least one slot".into()));
    }
    if m > MAX_PATTERN_SLOTS {
        return Err(Error::Capacity(format!(
            "patterns support at most {MAX_PATTERN_SLOTS} slots, got {m}"
        )));
    }
    Ok(())
}

fn exponent_name(c: &PatternCounts) -> String {
    (1..=c.m())
        .rev()
        .map(|i| format!("{i}^{}", c.x(i)))
        .collect::<Vec<_>>()
        .join("-")
}

fn digit_name(c: &PatternCounts) -> String {
    format!(
        "1{}{}{}{}{}{}",
        c.x(3),
        c.y(3),
        c.x(2),
        c.y(2),
        c.x(1),
        c.y(1)
    )
}

/// Canonicalize an antichain of node subsets on slots `0..m`.
pub fn canonicalize<S: AsRef<[usize]>>(m: usize, edge_set: &[S]) -> Result<MPattern> {
    Ok(MPattern::from_edge_set(m, edge_set)?.canonical_form())
}

/// Stable string key of a canonical pattern; see the module docs for the format.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternId {
    m: u8,
    masks: Vec<SlotMask>,
}

impl PatternId {
    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn pattern(&self) -> MPattern {
        MPattern {
            m: self.m,
            edges: self.masks.clone(),
            canonical: true,
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={}:[", self.m)?;
        for (i, mask) in self.masks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "0b{:0width$b}", mask, width = self.m as usize)?;
        }
        f.write_str("]")
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Naming(format!("malformed PatternId {s:?}"));
        let rest = s.strip_prefix("m=").ok_or_else(bad)?;
        let (m, list) = rest.split_once(':').ok_or_else(bad)?;
        let m: usize = m.parse().map_err(|_| bad())?;
        let list = list
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(bad)?;
        let masks = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',')
                .map(|tok| {
                    let digits = tok.strip_prefix("0b").ok_or_else(bad)?;
                    if digits.len() != m {
                        return Err(bad());
                    }
                    SlotMask::from_str_radix(digits, 2).map_err(|_| bad())
                })
                .collect::<Result<Vec<_>>>()?
        };
        let pattern =
            MPattern::labelled(m, masks.clone()).map_err(|e| Error::Naming(e.to_string()))?;
        let id = pattern.id();
        if id.masks != masks {
            return Err(Error::Naming(format!("{s:?} is not in canonical form")));
        }
        Ok(id)
    }
}

impl Serialize for PatternId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Present (`x_i`) and missing (`y_i`) edge counts by size.
///
/// `y_i` counts the i-subsets of slots contained in no edge (containment
/// includes equality).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternCounts {
    x: Vec<u32>,
    y: Vec<u32>,
}

impl PatternCounts {
    pub fn of(pattern: &MPattern) -> Self {
        let m = pattern.m();
        let mut x = vec![0u32; m];
        let mut y = vec![0u32; m];
        for &e in pattern.edges() {
            x[e.count_ones() as usize - 1] += 1;
        }
        for s in 1..(1 as SlotMask) << m {
            if !pattern.edges().iter().any(|&e| e & s == s) {
                y[s.count_ones() as usize - 1] += 1;
            }
        }
        Self { x, y }
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    /// Present edges of size `i` (1-based).
    pub fn x(&self, i: usize) -> u32 {
        self.x[i - 1]
    }

    /// Uncovered subsets of size `i` (1-based).
    pub fn y(&self, i: usize) -> u32 {
        self.y[i - 1]
    }

    pub fn xs(&self) -> &[u32] {
        &self.x
    }

    pub fn ys(&self) -> &[u32] {
        &self.y
    }
}

/// Every labelled antichain of nonempty subsets of `m` slots (including the
/// empty one), each as a mask list sorted in edge order.
pub fn labelled_antichains(m: usize) -> Result<Vec<Vec<SlotMask>>> {
    check_slots(m)?;
    if m > MAX_ENUMERATED_SLOTS {
        return Err(Error::Capacity(format!(
            "antichain enumeration supports m <= {MAX_ENUMERATED_SLOTS}, got {m}"
        )));
    }
    let mut out = if m <= 4 {
        antichains_by_filter(m)
    } else {
        antichains_recursive(m)
    };
    for a in &mut out {
        a.sort_by(mask_order);
    }
    Ok(out)
}

/// Test every subset of the `2^m - 1` candidate masks.
fn antichains_by_filter(m: usize) -> Vec<Vec<SlotMask>> {
    let candidates: Vec<SlotMask> = (1..(1 << m) as SlotMask).collect();
    let total: u64 = 1 << candidates.len();
    (0..total)
        .map(|pick| {
            candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| pick >> i & 1 == 1)
                .map(|(_, &c)| c)
                .collect::<Vec<_>>()
        })
        .filter(|set| is_antichain(set))
        .collect()
}

/// Depth-first extension, pruning candidates comparable to a chosen mask.
fn antichains_recursive(m: usize) -> Vec<Vec<SlotMask>> {
    fn rec(candidates: &[SlotMask], chosen: &mut Vec<SlotMask>, out: &mut Vec<Vec<SlotMask>>) {
        out.push(chosen.clone());
        for (i, &c) in candidates.iter().enumerate() {
            let rest: Vec<SlotMask> = candidates[i + 1..]
                .iter()
                .copied()
                .filter(|&d| d & c != c && d & c != d)
                .collect();
            chosen.push(c);
            rec(&rest, chosen, out);
            chosen.pop();
        }
    }
    let candidates: Vec<SlotMask> = (1..(1 << m) as SlotMask).collect();
    let mut out = Vec::new();
    rec(&candidates, &mut Vec::new(), &mut out);
    out
}

/// All m-patterns up to isomorphism, canonical and deterministically ordered.
pub fn enumerate_patterns(m: usize) -> Result<Vec<MPattern>> {
    Ok(PatternSpace::get(m)?.patterns().to_vec())
}

/// Parse a pattern name (or PatternId string) for `m` slots.
pub fn parse_name(s: &str, m: usize) -> Result<MPattern> {
    if s.starts_with("m=") {
        let id: PatternId = s.parse()?;
        if id.m() != m {
            return Err(Error::Naming(format!("{s:?} has m={}, expected {m}", id.m())));
        }
        return Ok(id.pattern());
    }
    if m > 4 {
        return Err(Error::Naming(format!(
            "names are only defined for m <= 4; use a PatternId for m={m}"
        )));
    }
    let space = PatternSpace::get(m)?;
    if let Some(i) = space.names.iter().position(|n| n == s) {
        return Ok(space.patterns[i].clone());
    }
    if space.names.iter().any(|n| n.strip_prefix(s).is_some_and(|r| r.starts_with('-'))) {
        return Err(Error::Naming(format!(
            "{s:?} names several {m}-patterns; add the -a/-b suffix"
        )));
    }
    Err(Error::Naming(format!("unknown {m}-pattern name {s:?}")))
}

/// The enumerated pattern space for one `m`, with lookup tables for fast
/// classification of labelled edge sets.
///
/// A labelled configuration is summarized as a presence bit set: bit `T` is
/// set when the slot subset `T` occurs as a (possibly dominated) induced edge.
#[derive(Debug)]
pub struct PatternSpace {
    m: usize,
    patterns: Vec<MPattern>,
    names: Vec<String>,
    ids: Vec<PatternId>,
    gammas: Vec<u64>,
    counts: Vec<PatternCounts>,
    by_canonical: HashMap<Vec<SlotMask>, usize>,
    by_labelled: HashMap<u32, usize>,
    presence_table: Option<Vec<u16>>,
}

impl PatternSpace {
    /// Shared, lazily built space for `1 <= m <= 5`.
    pub fn get(m: usize) -> Result<&'static PatternSpace> {
        static SPACES: [OnceLock<PatternSpace>; MAX_ENUMERATED_SLOTS + 1] =
            [const { OnceLock::new() }; MAX_ENUMERATED_SLOTS + 1];
        if m == 0 || m > MAX_ENUMERATED_SLOTS {
            return Err(Error::Capacity(format!(
                "pattern enumeration supports 1 <= m <= {MAX_ENUMERATED_SLOTS}, got {m}"
            )));
        }
        Ok(SPACES[m].get_or_init(|| PatternSpace::build(m)))
    }

    fn build(m: usize) -> Self {
        let labelled = labelled_antichains(m).expect("m checked by caller");
        let mut canon_of: Vec<Vec<SlotMask>> = Vec::with_capacity(labelled.len());
        let mut distinct: HashMap<Vec<SlotMask>, ()> = HashMap::new();
        for masks in &labelled {
            let p = MPattern {
                m: m as u8,
                edges: masks.clone(),
                canonical: false,
            }
            .canonical_form();
            distinct.insert(p.edges.clone(), ());
            canon_of.push(p.edges);
        }
        let mut patterns: Vec<MPattern> = distinct
            .into_keys()
            .map(|edges| MPattern {
                m: m as u8,
                edges,
                canonical: true,
            })
            .collect();
        patterns.sort_by_cached_key(|p| {
            let c = p.counts();
            let profile: Vec<std::cmp::Reverse<u32>> =
                (1..=m).rev().map(|i| std::cmp::Reverse(c.x(i))).collect();
            (profile, p.edges.clone())
        });
        let by_canonical: HashMap<Vec<SlotMask>, usize> = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.edges.clone(), i))
            .collect();
        let by_labelled: HashMap<u32, usize> = labelled
            .iter()
            .zip(&canon_of)
            .map(|(masks, canon)| (mask_set_bits(masks), by_canonical[canon]))
            .collect();

        let counts: Vec<PatternCounts> = patterns.iter().map(PatternCounts::of).collect();
        let names = match m {
            4 => disambiguated_digit_names(&counts),
            1..=3 => counts.iter().map(exponent_name).collect(),
            _ => patterns.iter().map(|p| p.id().to_string()).collect(),
        };
        let ids = patterns.iter().map(|p| p.id()).collect();
        let gammas = patterns.iter().map(MPattern::gamma).collect();

        let mut space = Self {
            m,
            patterns,
            names,
            ids,
            gammas,
            counts,
            by_canonical,
            by_labelled,
            presence_table: None,
        };
        if m <= 4 {
            let size = 1usize << ((1 << m) - 1);
            let table = (0..size)
                .map(|half| space.classify_slow((half as u32) << 1) as u16)
                .collect();
            space.presence_table = Some(table);
        }
        space
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[MPattern] {
        &self.patterns
    }

    pub fn pattern(&self, i: usize) -> &MPattern {
        &self.patterns[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, i: usize) -> &PatternId {
        &self.ids[i]
    }

    pub fn gamma(&self, i: usize) -> u64 {
        self.gammas[i]
    }

    pub fn counts(&self, i: usize) -> &PatternCounts {
        &self.counts[i]
    }

    /// Position of a pattern (any labelling) in this space.
    pub fn index_of(&self, pattern: &MPattern) -> Option<usize> {
        if pattern.m() != self.m {
            return None;
        }
        if pattern.canonical {
            self.by_canonical.get(&pattern.edges).copied()
        } else {
            self.by_labelled.get(&mask_set_bits(&pattern.edges)).copied()
        }
    }

    pub fn index_of_id(&self, id: &PatternId) -> Option<usize> {
        if id.m() != self.m {
            return None;
        }
        self.by_canonical.get(&id.masks).copied()
    }

    /// Resolve a name or PatternId string to an index.
    pub fn resolve(&self, name_or_id: &str) -> Result<usize> {
        let p = parse_name(name_or_id, self.m)?;
        self.index_of(&p)
            .ok_or_else(|| Error::Naming(format!("{name_or_id:?} not in the {}-pattern space", self.m)))
    }

    /// Pattern index for a presence bit set (see the type docs).
    #[inline]
    pub fn classify_presence(&self, presence: u32) -> usize {
        match &self.presence_table {
            Some(table) => table[(presence >> 1) as usize] as usize,
            None => self.classify_slow(presence),
        }
    }

    fn classify_slow(&self, presence: u32) -> usize {
        self.by_labelled[&maximal_presence(presence)]
    }
}

/// Bit set over masks (bit `T` for mask `T`).
#[inline]
fn mask_set_bits(masks: &[SlotMask]) -> u32 {
    masks.iter().fold(0u32, |acc, &e| acc | 1 << e)
}

/// Drop every mask that is a proper subset of another present mask.
pub(crate) fn maximal_presence(presence: u32) -> u32 {
    let mut dominated = 0u32;
    let mut rest = presence & !1;
    while rest != 0 {
        let u = rest.trailing_zeros();
        rest &= rest - 1;
        // proper nonempty submasks of u
        let mut s = (u - 1) & u;
        while s != 0 {
            dominated |= 1 << s;
            s = (s - 1) & u;
        }
    }
    presence & !dominated & !1
}

fn disambiguated_digit_names(counts: &[PatternCounts]) -> Vec<String> {
    let bases: Vec<String> = counts.iter().map(digit_name).collect();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::with_capacity(bases.len());
    for base in &bases {
        let total = bases.iter().filter(|b| *b == base).count();
        if total == 1 {
            out.push(base.clone());
        } else {
            let k = seen.entry(base).or_insert(0);
            out.push(format!("{base}-{}", (b'a' + *k as u8) as char));
            *k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pat(m: usize, edges: &[&[usize]]) -> MPattern {
        MPattern::from_edge_set(m, edges).unwrap()
    }

    #[test]
    fn relabelled_inputs_share_an_id() {
        let a = canonicalize(3, &[vec![0, 1], vec![2]]).unwrap();
        let b = canonicalize(3, &[vec![1, 2], vec![0]]).unwrap();
        assert_eq!(a.id(), b.id());
        assert_eq!(a.id().to_string(), "m=3:[0b011,0b100]");
    }

    #[test]
    fn symmetric_pattern_is_its_own_form() {
        let p = canonicalize(3, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(p.edges(), &[0b111]);
    }

    #[test]
    fn linked_and_parallel_pairs_differ() {
        let linked = canonicalize(4, &[vec![0, 1], vec![1, 2], vec![3]]).unwrap();
        let parallel = canonicalize(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_ne!(linked.id(), parallel.id());
    }

    #[test]
    fn canonicalize_rejects_bad_input() {
        let err = canonicalize(3, &[vec![0, 1], vec![0]]).unwrap_err();
        assert_eq!(err.category(), "contract");
        let err = canonicalize(9, &[vec![0]]).unwrap_err();
        assert_eq!(err.category(), "capacity");
        assert!(MPattern::labelled(3, vec![0b011, 0b011]).is_err());
    }

    #[test]
    fn enumeration_sizes() {
        let sizes: Vec<usize> = (1..=5).map(|m| enumerate_patterns(m).unwrap().len()).collect();
        assert_eq!(sizes, vec![2, 4, 9, 29, 209]);
        assert!(enumerate_patterns(0).is_err());
        assert_eq!(enumerate_patterns(6).unwrap_err().category(), "capacity");
    }

    #[test]
    fn labelled_antichain_counts_follow_dedekind_minus_one() {
        let counts: Vec<usize> = (1..=5).map(|m| labelled_antichains(m).unwrap().len()).collect();
        assert_eq!(counts, vec![2, 5, 19, 167, 7580]);
    }

    #[test]
    fn filter_and_recursive_enumerations_agree() {
        for m in 1..=4 {
            let mut a = antichains_by_filter(m);
            let mut b = antichains_recursive(m);
            for x in a.iter_mut().chain(b.iter_mut()) {
                x.sort_unstable();
            }
            a.sort();
            b.sort();
            assert_eq!(a, b, "m={m}");
        }
    }

    #[test]
    fn gamma_examples() {
        for m in 1..=5 {
            for k in 1..=m {
                assert_eq!(MPattern::pure(m, k).unwrap().gamma(), 1);
            }
        }
        assert_eq!(pat(3, &[&[0, 1], &[2]]).gamma(), 3);
        let linked = pat(7, &[&[0, 1], &[1, 2], &[3], &[4], &[5], &[6]]);
        let parallel = pat(7, &[&[0, 1], &[2, 3], &[4], &[5], &[6]]);
        assert_eq!(linked.gamma(), 105);
        assert_eq!(parallel.gamma(), 105);
    }

    #[test]
    fn counts_examples() {
        let c = pat(3, &[&[0, 1], &[2]]).counts();
        assert_eq!(c.xs(), &[1, 1, 0]);
        assert_eq!(c.ys(), &[0, 2, 1]);
        let c = MPattern::repeat(4).unwrap().counts();
        assert!(c.ys().iter().all(|&y| y == 0));
        let c = MPattern::empty(4).unwrap().counts();
        assert_eq!(c.xs(), &[0, 0, 0, 0]);
        assert_eq!(c.ys(), &[4, 6, 4, 1]);
    }

    #[test]
    fn extreme_in_limit_condition() {
        assert!(pat(4, &[&[0, 1, 2], &[3]]).not_extreme_in_limit());
        assert!(!pat(3, &[&[0, 1], &[2]]).not_extreme_in_limit());
        for m in 1..=5 {
            assert!(!MPattern::empty(m).unwrap().not_extreme_in_limit());
            for k in 1..=m {
                assert!(!MPattern::pure(m, k).unwrap().not_extreme_in_limit(), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn names_for_small_m() {
        assert_eq!(MPattern::repeat(3).unwrap().name(), "3^1-2^0-1^0");
        assert_eq!(pat(2, &[&[0], &[1]]).name(), "2^0-1^2");
        assert_eq!(MPattern::repeat(2).unwrap().name(), "2^1-1^0");
        assert_eq!(MPattern::empty(1).unwrap().name(), "1^0");
        let names = PatternSpace::get(3).unwrap().names().to_vec();
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 9);
    }

    #[test]
    fn four_pattern_digit_names() {
        assert_eq!(MPattern::repeat(4).unwrap().name(), "1000000");
        let cycle = pat(4, &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]]).name();
        let paw = pat(4, &[&[0, 1], &[1, 2], &[0, 2], &[2, 3]]).name();
        let mut pair = [cycle, paw];
        pair.sort();
        assert_eq!(pair, ["1044200-a".to_string(), "1044200-b".to_string()]);
        let err = parse_name("1044200", 4).unwrap_err();
        assert_eq!(err.category(), "naming");
        assert!(parse_name("1044200-a", 4).is_ok());
        let space = PatternSpace::get(4).unwrap();
        let mut names = space.names().to_vec();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 29);
    }

    #[test]
    fn five_patterns_are_named_by_id() {
        let p = MPattern::repeat(5).unwrap();
        assert_eq!(p.name(), "m=5:[0b11111]");
        assert_eq!(parse_name("m=5:[0b11111]", 5).unwrap(), p);
        assert!(parse_name("5^1", 5).is_err());
    }

    #[test]
    fn parse_round_trips_names() {
        for m in 1..=4 {
            let space = PatternSpace::get(m).unwrap();
            for (i, p) in space.patterns().iter().enumerate() {
                assert_eq!(&parse_name(space.name(i), m).unwrap(), p);
                assert_eq!(&parse_name(&p.id().to_string(), m).unwrap(), p);
            }
        }
        assert!(parse_name("3^1-2^0", 3).is_err());
        assert!(parse_name("m=3:[0b100,0b011]", 3).is_err());
    }

    #[test]
    fn pattern_id_parse_and_serde() {
        let id: PatternId = "m=3:[0b011,0b100]".parse().unwrap();
        assert_eq!(id.to_string(), "m=3:[0b011,0b100]");
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, "\"m=3:[0b011,0b100]\"");
        let back: PatternId = serde_json::from_str(&json).unwrap();
        assert_eq!(back, id);
        assert_eq!("m=2:[]".parse::<PatternId>().unwrap().to_string(), "m=2:[]");
        assert!("m=3:[0b11]".parse::<PatternId>().is_err());
    }

    #[test]
    fn presence_classification_matches_canonicalize() {
        for m in 1..=4 {
            let space = PatternSpace::get(m).unwrap();
            let full = (1u32 << ((1 << m) - 1)) as u64;
            for half in 0..full {
                let presence = (half as u32) << 1;
                let max = maximal_presence(presence);
                let masks: Vec<SlotMask> = (1..32).filter(|t| max >> t & 1 == 1).collect();
                let expected = MPattern::labelled(m, masks).unwrap().canonical_form();
                assert_eq!(space.pattern(space.classify_presence(presence)), &expected);
            }
        }
    }

    fn arb_antichain(m: usize) -> impl Strategy<Value = Vec<SlotMask>> {
        proptest::collection::vec(1..(1u32 << m), 0..8).prop_map(move |cands| {
            let mut chosen: Vec<SlotMask> = Vec::new();
            for c in cands {
                if chosen.iter().all(|&d| d & c != c && d & c != d) {
                    chosen.push(c);
                }
            }
            chosen
        })
    }

    proptest! {
        #[test]
        fn canonical_form_is_permutation_invariant(
            masks in arb_antichain(5),
            perm_idx in 0usize..120,
        ) {
            let p = MPattern::labelled(5, masks).unwrap();
            let perm: Vec<usize> = permutations(5)[perm_idx][..5].iter().map(|&v| v as usize).collect();
            let q = p.relabel(&perm).unwrap();
            let c = p.canonical_form();
            prop_assert_eq!(&c, &q.canonical_form());
            prop_assert_eq!(&c, &c.canonical_form());
        }

        #[test]
        fn counts_partition_every_level(masks in arb_antichain(5)) {
            let p = MPattern::labelled(5, masks).unwrap();
            let c = p.counts();
            for i in 1..=5usize {
                let strictly_inside = (1u32..32)
                    .filter(|s| s.count_ones() as usize == i)
                    .filter(|&s| p.edges().iter().any(|&e| e & s == s && e != s))
                    .count() as u32;
                prop_assert_eq!(
                    c.x(i) + c.y(i) + strictly_inside,
                    binomial(5, i as u64).unwrap() as u32
                );
            }
        }
    }
}
