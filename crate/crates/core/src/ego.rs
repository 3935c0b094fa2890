//! Ego hypergraphs, their densities and censuses, log-binned rolling
//! averages, model counterparts and the data-versus-model discrepancy.
//!
//! The ego density is `p_e = (#distinct m-node edges) / C(N_e, m)`, the
//! fraction of possible m-node edges present in the ego hypergraph.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::census::{census_all_with, CensusOptions, PatternCensus};
use crate::combin::binomial_f64;
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, HypergraphBuilder, NodeId};
use crate::null_model::{analytic_table, ModelParams, PrevalenceTable};
use crate::pattern::PatternId;

/// An ego hypergraph with the original ids of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoHypergraph {
    pub ego: NodeId,
    /// `members[i]` is the original id of local node `i`.
    pub members: Vec<NodeId>,
    pub hypergraph: Hypergraph,
}

/// Hypergraph on the neighbors of `v`. Edges avoiding `v` contribute their
/// intersection with the neighborhood; edges containing `v` contribute
/// `e \ {v}` only when `include_ego_edges` is set. Local node `i` carries the
/// label of original node `members[i]` (or its id when unlabelled).
pub fn ego_hypergraph(h: &Hypergraph, v: NodeId, include_ego_edges: bool) -> Result<EgoHypergraph> {
    let members = h.neighbors(v)?;
    let local = |u: NodeId| members.binary_search(&u).ok().map(|i| i as NodeId);
    let touching: BTreeSet<u32> = members
        .iter()
        .flat_map(|&u| h.incident_edges(u).iter().copied())
        .collect();

    let labels = members
        .iter()
        .map(|&u| h.label(u).map_or_else(|| u.to_string(), str::to_owned))
        .collect();
    let mut b = HypergraphBuilder::new(members.len()).with_labels(labels)?;
    let mut restricted: Vec<NodeId> = Vec::new();
    for e in touching {
        let edge = h.edge(e as usize);
        if edge.nodes.binary_search(&v).is_ok() && !include_ego_edges {
            continue;
        }
        restricted.clear();
        restricted.extend(edge.nodes.iter().filter_map(|&u| local(u)));
        if !restricted.is_empty() {
            b.push_edge(restricted.iter().copied(), edge.timestamp)?;
        }
    }
    Ok(EgoHypergraph {
        ego: v,
        members,
        hypergraph: b.build()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgoSummary {
    pub ego: NodeId,
    pub n_e: usize,
    pub distinct_m_edges: u64,
    pub p_e: f64,
    pub census: PatternCensus,
}

/// Number of distinct m-node edges and the ego density `p_e`.
pub fn ego_density(h: &Hypergraph, m: usize) -> (u64, f64) {
    let distinct: BTreeSet<&[NodeId]> = h.edges().filter(|e| e.nodes.len() == m).map(|e| e.nodes).collect();
    let possible = binomial_f64(h.num_nodes() as u64, m as u64);
    let count = distinct.len() as u64;
    let p = if possible == 0.0 { 0.0 } else { count as f64 / possible };
    (count, p)
}

pub fn summarize_ego(ego: &EgoHypergraph, m: usize, opts: &CensusOptions) -> Result<EgoSummary> {
    let (distinct_m_edges, p_e) = ego_density(&ego.hypergraph, m);
    Ok(EgoSummary {
        ego: ego.ego,
        n_e: ego.hypergraph.num_nodes(),
        distinct_m_edges,
        p_e,
        census: census_all_with(&ego.hypergraph, m, opts)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoSweep {
    pub size_min: usize,
    pub size_max: usize,
    pub include_ego_edges: bool,
    pub census: CensusOptions,
}

impl Default for EgoSweep {
    fn default() -> Self {
        Self {
            size_min: 10,
            size_max: 50,
            include_ego_edges: false,
            census: CensusOptions::default(),
        }
    }
}

/// Summaries of every ego whose size lies in `[size_min, size_max]`, ordered
/// by ego id.
pub fn sweep_egos(h: &Hypergraph, m: usize, sweep: &EgoSweep) -> Result<Vec<EgoSummary>> {
    if sweep.size_min < m {
        return Err(Error::Contract(format!(
            "minimum ego size {} is below m={m}",
            sweep.size_min
        )));
    }
    let out: Vec<Option<EgoSummary>> = (0..h.num_nodes() as NodeId)
        .into_par_iter()
        .map(|v| {
            let size = h.neighbors(v)?.len();
            if size < sweep.size_min || size > sweep.size_max {
                return Ok(None);
            }
            let ego = ego_hypergraph(h, v, sweep.include_ego_edges)?;
            summarize_ego(&ego, m, &sweep.census).map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Analytic prevalence table at each ego's `(N_e, p_e)`.
pub fn model_counterpart(egos: &[EgoSummary], m: usize) -> Result<Vec<(f64, PrevalenceTable)>> {
    egos.iter()
        .map(|e| {
            let params = ModelParams::new(e.n_e as u64, m, e.p_e)?;
            Ok((e.p_e, analytic_table(&params, false)?))
        })
        .collect()
}

/// One log-spaced segment of a rolling average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    /// Segment `j` spans `[10^(j/b), 10^((j+1)/b))`.
    pub index: i64,
    pub center: f64,
    /// Points in the `j-1 ..= j+1` window.
    pub points: usize,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub bins_per_decade: u32,
    pub segments: Vec<Segment>,
}

/// Segment index of `p`: `floor(b * log10 p)`, with values within `1e-9` of
/// an edge snapped onto it.
pub fn segment_index(p: f64, bins_per_decade: u32) -> i64 {
    let x = f64::from(bins_per_decade) * p.log10();
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Rolling average of `values[k]` (one vector of series values per point)
/// over log-spaced segments. A segment is reported when it holds at least one
/// point; its mean covers the points of the neighbouring segments too.
pub fn rolling_average(p: &[f64], values: &[Vec<f64>], bins_per_decade: u32) -> Result<BinnedCurve> {
    if p.len() != values.len() {
        return Err(Error::Input(format!(
            "{} p values but {} value rows",
            p.len(),
            values.len()
        )));
    }
    if bins_per_decade == 0 {
        return Err(Error::Input("bins per decade must be positive".into()));
    }
    if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Input(format!("rolling average needs positive p, got {bad}")));
    }
    let width = values.first().map_or(0, Vec::len);
    if values.iter().any(|v| v.len() != width) {
        return Err(Error::Input("value rows have different lengths".into()));
    }
    let bins: Vec<i64> = p.iter().map(|&x| segment_index(x, bins_per_decade)).collect();
    let occupied: BTreeSet<i64> = bins.iter().copied().collect();
    let segments = occupied
        .into_iter()
        .map(|j| {
            let mut sums = vec![0.0; width];
            let mut points = 0;
            for (row, &b) in values.iter().zip(&bins) {
                if (b - j).abs() <= 1 {
                    points += 1;
                    for (s, v) in sums.iter_mut().zip(row) {
                        *s += v;
                    }
                }
            }
            Segment {
                index: j,
                center: 10f64.powf((j as f64 + 0.5) / f64::from(bins_per_decade)),
                points,
                means: sums.into_iter().map(|s| s / points as f64).collect(),
            }
        })
        .collect();
    Ok(BinnedCurve {
        bins_per_decade,
        segments,
    })
}

/// `(P_data - P_model) / min(P_data, P_model)`; 0 when both vanish and
/// `±inf` when exactly one does.
pub fn delta_f(p_data: f64, p_model: f64) -> f64 {
    match (p_data == 0.0, p_model == 0.0) {
        (true, true) => 0.0,
        (false, true) => f64::INFINITY,
        (true, false) => f64::NEG_INFINITY,
        (false, false) => (p_data - p_model) / p_data.min(p_model),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub id: PatternId,
    pub name: String,
    pub p_data: f64,
    pub p_model: f64,
    pub delta_f: f64,
    /// Exactly one of the two prevalences is zero.
    pub one_sided: bool,
}

/// Dataset-level discrepancy per pattern: unweighted means of per-ego data
/// frequencies and per-ego model prevalences.
pub fn dataset_delta_f(egos: &[EgoSummary], m: usize) -> Result<Vec<DeltaRow>> {
    if egos.is_empty() {
        return Err(Error::InsufficientData("no egos to aggregate".into()));
    }
    let models = model_counterpart(egos, m)?;
    let first = &egos[0].census;
    let k = egos.len() as f64;
    Ok(first
        .entries
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let p_data = egos
                .iter()
                .map(|e| e.census.entries[i].count as f64 / e.census.total as f64)
                .sum::<f64>()
                / k;
            let p_model = models.iter().map(|(_, t)| t.entries[i].value).sum::<f64>() / k;
            let d = delta_f(p_data, p_model);
            DeltaRow {
                id: entry.id.clone(),
                name: entry.name.clone(),
                p_data,
                p_model,
                delta_f: d,
                one_sided: d.is_infinite(),
            }
        })
        .collect())
}
