//! Hypergraph storage and the induced / maximal induced subhypergraph operations.

use std::cmp::Ordering;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based node index.
pub type NodeId = u32;

/// An owned hyperedge: strictly increasing node ids plus an optional timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub nodes: Vec<NodeId>,
    pub timestamp: Option<i64>,
}

impl HyperEdge {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>, timestamp: Option<i64>) -> Self {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        Self { nodes, timestamp }
    }
}

/// Borrowed view of one edge of a [`Hypergraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef<'a> {
    pub index: usize,
    pub nodes: &'a [NodeId],
    pub timestamp: Option<i64>,
}

impl EdgeRef<'_> {
    pub fn to_owned(&self) -> HyperEdge {
        HyperEdge {
            nodes: self.nodes.to_vec(),
            timestamp: self.timestamp,
        }
    }
}

/// A nonempty, strictly increasing set of node ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeSubset(Vec<NodeId>);

impl NodeSubset {
    /// Build from arbitrary ids; sorts and rejects duplicates or emptiness.
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        if nodes.is_empty() {
            return Err(Error::Input("node subset must be nonempty".into()));
        }
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("node subset contains duplicate ids".into()));
        }
        Ok(Self(nodes))
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<NodeId> {
        self.0
    }
}

#[derive(Debug)]
struct Incidence {
    offsets: Vec<usize>,
    edges: Vec<u32>,
}

/// Immutable hypergraph with parallel edges allowed.
///
/// Edges are stored in ingestion order in a flat CSR layout. Either every
/// edge carries a timestamp or none does.
#[derive(Debug)]
pub struct Hypergraph {
    num_nodes: usize,
    offsets: Vec<usize>,
    members: Vec<NodeId>,
    timestamps: Option<Vec<i64>>,
    labels: Option<Vec<String>>,
    duplicates_removed: usize,
    empty_dropped: usize,
    incidence: OnceLock<Incidence>,
}

impl Clone for Hypergraph {
    fn clone(&self) -> Self {
        Self {
            num_nodes: self.num_nodes,
            offsets: self.offsets.clone(),
            members: self.members.clone(),
            timestamps: self.timestamps.clone(),
            labels: self.labels.clone(),
            duplicates_removed: self.duplicates_removed,
            empty_dropped: self.empty_dropped,
            incidence: OnceLock::new(),
        }
    }
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.num_nodes == other.num_nodes
            && self.offsets == other.offsets
            && self.members == other.members
            && self.timestamps == other.timestamps
            && self.labels == other.labels
    }
}

/// Single-owner builder for [`Hypergraph`].
#[derive(Debug, Default)]
pub struct HypergraphBuilder {
    num_nodes: usize,
    offsets: Vec<usize>,
    members: Vec<NodeId>,
    timestamps: Vec<Option<i64>>,
    labels: Option<Vec<String>>,
    duplicates_removed: usize,
    empty_dropped: usize,
}

impl HypergraphBuilder {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            offsets: vec![0],
            ..Default::default()
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::Input(format!(
                "label map has {} entries for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Append an edge. Repeated ids are collapsed (and counted); an edge
    /// left empty is dropped.
    pub fn push_edge(
        &mut self,
        nodes: impl IntoIterator<Item = NodeId>,
        timestamp: Option<i64>,
    ) -> Result<&mut Self> {
        let start = self.members.len();
        self.members.extend(nodes);
        let slice = &mut self.members[start..];
        if let Some(&bad) = slice.iter().find(|&&v| v as usize >= self.num_nodes) {
            self.members.truncate(start);
            return Err(Error::Input(format!(
                "node id {bad} out of range for {} nodes",
                self.num_nodes
            )));
        }
        slice.sort_unstable();
        let before = slice.len();
        let mut write = 0;
        for read in 0..slice.len() {
            if write == 0 || slice[read] != slice[write - 1] {
                slice[write] = slice[read];
                write += 1;
            }
        }
        self.duplicates_removed += before - write;
        self.members.truncate(start + write);
        if write == 0 {
            self.empty_dropped += 1;
            return Ok(self);
        }
        self.offsets.push(self.members.len());
        self.timestamps.push(timestamp);
        Ok(self)
    }

    pub fn push(&mut self, edge: &HyperEdge) -> Result<&mut Self> {
        self.push_edge(edge.nodes.iter().copied(), edge.timestamp)
    }

    pub fn build(self) -> Result<Hypergraph> {
        let stamped = self.timestamps.iter().filter(|t| t.is_some()).count();
        let timestamps = if stamped == 0 {
            None
        } else if stamped == self.timestamps.len() {
            Some(self.timestamps.into_iter().map(|t| t.unwrap_or_default()).collect())
        } else {
            return Err(Error::Input(format!(
                "{stamped} of {} edges carry timestamps; either all or none must",
                self.timestamps.len()
            )));
        };
        Ok(Hypergraph {
            num_nodes: self.num_nodes,
            offsets: self.offsets,
            members: self.members,
            timestamps,
            labels: self.labels,
            duplicates_removed: self.duplicates_removed,
            empty_dropped: self.empty_dropped,
            incidence: OnceLock::new(),
        })
    }
}

impl Hypergraph {
    /// Convenience constructor from untimed edge lists.
    pub fn from_edges<I, E>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: IntoIterator<Item = NodeId>,
    {
        let mut b = HypergraphBuilder::new(num_nodes);
        for e in edges {
            b.push_edge(e, None)?;
        }
        b.build()
    }

    /// Uniform hypergraph from already sorted, duplicate-free `m`-sets laid
    /// out back to back in `members`.
    pub(crate) fn from_uniform_sorted(num_nodes: usize, m: usize, members: Vec<NodeId>) -> Self {
        debug_assert!(m > 0 && members.len().is_multiple_of(m));
        let offsets = (0..=members.len() / m).map(|i| i * m).collect();
        Self {
            num_nodes,
            offsets,
            members,
            timestamps: None,
            labels: None,
            duplicates_removed: 0,
            empty_dropped: 0,
            incidence: OnceLock::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_timestamped(&self) -> bool {
        self.timestamps.is_some()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: NodeId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v as usize].as_str())
    }

    /// Number of repeated node ids collapsed during construction.
    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }

    /// Number of input edges dropped because they were empty.
    pub fn empty_edges_dropped(&self) -> usize {
        self.empty_dropped
    }

    #[inline]
    pub fn edge_nodes(&self, i: usize) -> &[NodeId] {
        &self.members[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn edge(&self, i: usize) -> EdgeRef<'_> {
        EdgeRef {
            index: i,
            nodes: self.edge_nodes(i),
            timestamp: self.timestamps.as_ref().map(|t| t[i]),
        }
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = EdgeRef<'_>> + '_ {
        (0..self.num_edges()).map(move |i| self.edge(i))
    }

    fn incidence(&self) -> &Incidence {
        self.incidence.get_or_init(|| {
            let mut offsets = vec![0usize; self.num_nodes + 1];
            for &v in &self.members {
                offsets[v as usize + 1] += 1;
            }
            for i in 0..self.num_nodes {
                offsets[i + 1] += offsets[i];
            }
            let mut cursor = offsets.clone();
            let mut edges = vec![0u32; self.members.len()];
            for e in 0..self.num_edges() {
                for &v in self.edge_nodes(e) {
                    edges[cursor[v as usize]] = e as u32;
                    cursor[v as usize] += 1;
                }
            }
            Incidence { offsets, edges }
        })
    }

    /// Indices of the edges containing `v`, ascending.
    pub fn incident_edges(&self, v: NodeId) -> &[u32] {
        let inc = self.incidence();
        &inc.edges[inc.offsets[v as usize]..inc.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.incident_edges(v).len()
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.num_nodes {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "node id {v} out of range for {} nodes",
                self.num_nodes
            )))
        }
    }

    fn check_subset(&self, subset: &NodeSubset) -> Result<()> {
        subset.as_slice().iter().try_for_each(|&v| self.check_node(v))
    }

    fn touching_edges(&self, subset: &[NodeId]) -> Vec<u32> {
        let mut touching: Vec<u32> = subset
            .iter()
            .flat_map(|&v| self.incident_edges(v).iter().copied())
            .collect();
        touching.sort_unstable();
        touching.dedup();
        touching
    }

    /// Restriction `e ∩ V_I` of every edge touching `V_I`, in edge order,
    /// duplicates kept.
    pub fn induced_subhypergraph(&self, subset: &NodeSubset) -> Result<Vec<Vec<NodeId>>> {
        self.check_subset(subset)?;
        let s = subset.as_slice();
        Ok(self
            .touching_edges(s)
            .into_iter()
            .map(|e| intersect_sorted(self.edge_nodes(e as usize), s))
            .collect())
    }

    /// Local bit masks of the induced edges over the positions of `subset`
    /// (bit `j` = `subset[j]`). Requires `|subset| <= 64`.
    pub fn induced_masks(&self, subset: &NodeSubset) -> Result<Vec<u64>> {
        self.check_subset(subset)?;
        let s = subset.as_slice();
        if s.len() > 64 {
            return Err(Error::Capacity(format!(
                "bit-mask encoding supports at most 64 nodes, got {}",
                s.len()
            )));
        }
        Ok(self
            .touching_edges(s)
            .into_iter()
            .map(|e| local_mask(self.edge_nodes(e as usize), s))
            .collect())
    }

    /// Induced subhypergraph with duplicates and dominated subsets removed,
    /// sorted by size (largest first) then lexicographically.
    pub fn maximal_induced_subhypergraph(&self, subset: &NodeSubset) -> Result<Vec<Vec<NodeId>>> {
        let s = subset.as_slice();
        if s.len() <= 64 {
            let masks = maximal_masks(self.induced_masks(subset)?);
            let mut out: Vec<Vec<NodeId>> = masks
                .into_iter()
                .map(|mask| {
                    (0..s.len())
                        .filter(|&j| mask >> j & 1 == 1)
                        .map(|j| s[j])
                        .collect()
                })
                .collect();
            out.sort_by(|a, b| canonical_subset_order(a, b));
            Ok(out)
        } else {
            Ok(maximal_sets(self.induced_subhypergraph(subset)?))
        }
    }

    /// All nodes sharing at least one edge with `v`, excluding `v`.
    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(v)?;
        let mut out: Vec<NodeId> = self
            .incident_edges(v)
            .iter()
            .flat_map(|&e| self.edge_nodes(e as usize).iter().copied())
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Size descending, then lexicographic.
pub fn canonical_subset_order(a: &[NodeId], b: &[NodeId]) -> Ordering {
    b.len().cmp(&a.len()).then_with(|| a.cmp(b))
}

/// True iff no set is contained in (or equal to) another distinct entry.
pub fn is_simple<S: AsRef<[NodeId]>>(edge_set: &[S]) -> bool {
    let sets: Vec<Vec<NodeId>> = edge_set
        .iter()
        .map(|e| {
            let mut v = e.as_ref().to_vec();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    for (i, a) in sets.iter().enumerate() {
        for (j, b) in sets.iter().enumerate() {
            if i != j && is_subset_sorted(a, b) {
                return false;
            }
        }
    }
    true
}

fn intersect_sorted(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn is_subset_sorted(small: &[NodeId], big: &[NodeId]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Bit mask of `edge ∩ subset` over subset positions.
#[inline]
pub(crate) fn local_mask(edge: &[NodeId], subset: &[NodeId]) -> u64 {
    let mut mask = 0u64;
    let (mut i, mut j) = (0, 0);
    while i < edge.len() && j < subset.len() {
        match edge[i].cmp(&subset[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                mask |= 1 << j;
                i += 1;
                j += 1;
            }
        }
    }
    mask
}

/// Deduplicate and drop masks contained in another mask.
pub(crate) fn maximal_masks(mut masks: Vec<u64>) -> Vec<u64> {
    masks.retain(|&m| m != 0);
    masks.sort_unstable();
    masks.dedup();
    let keep: Vec<u64> = masks
        .iter()
        .copied()
        .filter(|&a| !masks.iter().any(|&b| b != a && a & b == a))
        .collect();
    keep
}

fn maximal_sets(mut sets: Vec<Vec<NodeId>>) -> Vec<Vec<NodeId>> {
    sets.retain(|s| !s.is_empty());
    sets.sort_by(|a, b| canonical_subset_order(a, b));
    sets.dedup();
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    // larger sets come first, so a set can only be dominated by one already kept
    for s in sets {
        if !out.iter().any(|big| is_subset_sorted(&s, big)) {
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> Hypergraph {
        Hypergraph::from_edges(5, vec![vec![0, 1, 2], vec![1, 2], vec![2, 3], vec![4]]).unwrap()
    }

    fn subset(v: &[NodeId]) -> NodeSubset {
        NodeSubset::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn induced_keeps_fragments_in_edge_order() {
        let h = fixture();
        let got = h.induced_subhypergraph(&subset(&[0, 1, 2])).unwrap();
        assert_eq!(got, vec![vec![0, 1, 2], vec![1, 2], vec![2]]);
    }

    #[test]
    fn induced_on_all_nodes_is_identity() {
        let h = fixture();
        let got = h.induced_subhypergraph(&subset(&[0, 1, 2, 3, 4])).unwrap();
        let edges: Vec<Vec<NodeId>> = h.edges().map(|e| e.nodes.to_vec()).collect();
        assert_eq!(got, edges);
    }

    #[test]
    fn induced_on_untouched_node_is_empty() {
        let h = Hypergraph::from_edges(6, vec![vec![0, 1]]).unwrap();
        assert!(h.induced_subhypergraph(&subset(&[5])).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_subset_is_input_error() {
        let h = fixture();
        let err = h.induced_subhypergraph(&subset(&[0, 9])).unwrap_err();
        assert_eq!(err.category(), "input");
        assert!(h.maximal_induced_subhypergraph(&subset(&[7])).is_err());
    }

    #[test]
    fn maximal_drops_dominated_fragments() {
        let h = fixture();
        let got = h.maximal_induced_subhypergraph(&subset(&[0, 1, 2])).unwrap();
        assert_eq!(got, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn maximal_collapses_identical_fragments() {
        let h = Hypergraph::from_edges(5, vec![vec![0, 3], vec![0, 4]]).unwrap();
        let got = h.maximal_induced_subhypergraph(&subset(&[0, 1])).unwrap();
        assert_eq!(got, vec![vec![0]]);
    }

    #[test]
    fn maximal_of_antichain_is_unchanged() {
        let h = Hypergraph::from_edges(4, vec![vec![0, 1], vec![1, 2], vec![3]]).unwrap();
        let got = h.maximal_induced_subhypergraph(&subset(&[0, 1, 2, 3])).unwrap();
        assert_eq!(got, vec![vec![0, 1], vec![1, 2], vec![3]]);
    }

    #[test]
    fn maximal_over_64_nodes_uses_set_path() {
        let h = Hypergraph::from_edges(70, vec![(0..70).collect::<Vec<_>>(), vec![3, 4]]).unwrap();
        let all = subset(&(0..70).collect::<Vec<_>>());
        let got = h.maximal_induced_subhypergraph(&all).unwrap();
        assert_eq!(got, vec![(0..70).collect::<Vec<_>>()]);
    }

    #[test]
    fn simplicity() {
        assert!(is_simple(&[vec![0, 1], vec![1, 2]]));
        assert!(!is_simple(&[vec![0, 1], vec![0, 1, 2]]));
        assert!(is_simple(&[vec![0]]));
        assert!(!is_simple(&[vec![0, 1], vec![1, 0]]));
        assert!(is_simple::<Vec<NodeId>>(&[]));
    }

    #[test]
    fn neighbors_union_of_comembers() {
        let h = Hypergraph::from_edges(5, vec![vec![0, 1], vec![0, 2, 3]]).unwrap();
        assert_eq!(h.neighbors(0).unwrap(), vec![1, 2, 3]);
        assert!(h.neighbors(4).unwrap().is_empty());
        let selfloop = Hypergraph::from_edges(2, vec![vec![0]]).unwrap();
        assert!(selfloop.neighbors(0).unwrap().is_empty());
        assert!(h.neighbors(5).is_err());
    }

    #[test]
    fn builder_dedups_and_counts() {
        let mut b = HypergraphBuilder::new(4);
        b.push_edge([2, 1, 2], Some(5)).unwrap();
        b.push_edge(Vec::<NodeId>::new(), Some(6)).unwrap();
        let h = b.build().unwrap();
        assert_eq!(h.num_edges(), 1);
        assert_eq!(h.edge_nodes(0), &[1, 2]);
        assert_eq!(h.duplicates_removed(), 1);
        assert_eq!(h.empty_edges_dropped(), 1);
    }

    #[test]
    fn builder_rejects_partial_timestamps() {
        let mut b = HypergraphBuilder::new(3);
        b.push_edge([0, 1], Some(1)).unwrap();
        b.push_edge([1, 2], None).unwrap();
        assert!(b.build().is_err());
    }

    #[test]
    fn builder_rejects_out_of_range() {
        let mut b = HypergraphBuilder::new(3);
        assert!(b.push_edge([0, 3], None).is_err());
        assert_eq!(b.build().unwrap().num_edges(), 0);
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<Vec<NodeId>>)> {
        (3usize..9).prop_flat_map(|n| {
            let edge = proptest::collection::vec(0..n as NodeId, 1..5);
            (Just(n), proptest::collection::vec(edge, 0..10))
        })
    }

    proptest! {
        #[test]
        fn maximal_is_simple_and_order_invariant(
            (n, edges) in arb_graph(),
            pick in proptest::collection::vec(any::<bool>(), 9),
            rot in 0usize..10,
        ) {
            let nodes: Vec<NodeId> = (0..n as NodeId).filter(|&v| pick[v as usize]).collect();
            prop_assume!(!nodes.is_empty());
            let s = NodeSubset::new(nodes.clone()).unwrap();
            let h = Hypergraph::from_edges(n, edges.clone()).unwrap();
            let max = h.maximal_induced_subhypergraph(&s).unwrap();
            prop_assert!(is_simple(&max));
            prop_assert!(max.iter().all(|e| e.len() <= nodes.len()));

            let mut rotated = edges.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            let h2 = Hypergraph::from_edges(n, rotated).unwrap();
            prop_assert_eq!(&max, &h2.maximal_induced_subhypergraph(&s).unwrap());

            // maximalizing the induced list directly gives the same answer
            let induced = h.induced_subhypergraph(&s).unwrap();
            prop_assert_eq!(&max, &maximal_sets(induced));
        }

        #[test]
        fn adding_an_edge_never_shrinks_covered_nodes(
            (n, edges) in arb_graph(),
            extra in proptest::collection::vec(0u32..3, 1..4),
        ) {
            let s = NodeSubset::new([0, 1, 2]).unwrap();
            let covered = |h: &Hypergraph| {
                let mut c: Vec<NodeId> = h.maximal_induced_subhypergraph(&s).unwrap().concat();
                c.sort_unstable();
                c.dedup();
                c
            };
            let before = covered(&Hypergraph::from_edges(n, edges.clone()).unwrap());
            let mut more = edges.clone();
            more.push(extra);
            let after = covered(&Hypergraph::from_edges(n, more).unwrap());
            prop_assert!(before.iter().all(|v| after.contains(v)));
        }
    }
}
