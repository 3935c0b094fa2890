//! Cohort comparison: keyword flagging and a month-stratified resampling band
//! for the pattern frequencies of a flagged cohort.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pattern::{PatternId, PatternSpace, MAX_ENUMERATED_SLOTS};
use crate::rng::task_rng;

pub const COVID_TERMS: [&str; 5] = ["covid", "covid19", "covid-19", "sars-cov-2", "sars-cov2"];

/// True when a whitespace token of `text`, stripped of surrounding
/// punctuation and lowercased, is one of [`COVID_TERMS`].
pub fn covid_flag(text: &str) -> bool {
    text.split_whitespace().any(|tok| {
        let t = tok
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        COVID_TERMS.contains(&t.as_str())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortRecord {
    pub id: String,
    pub month: i64,
    pub pattern: PatternId,
    pub covid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleOptions {
    pub replicates: usize,
    pub with_replacement: bool,
}

impl Default for ResampleOptions {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            with_replacement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub id: PatternId,
    pub name: String,
    pub mean: f64,
    pub p2_5: f64,
    pub p97_5: f64,
    pub observed: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleBand {
    pub replicates: usize,
    pub cohort_size: usize,
    pub rows: Vec<BandRow>,
}

/// Nearest-rank percentile of sorted values: the element of 1-based rank
/// `ceil(q * n)`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Band of pattern frequencies under the null that the flagged cohort is a
/// month-matched random draw from all records. Each replicate draws, for each
/// month, as many records as the cohort has in that month and pools them.
pub fn resample_band(records: &[CohortRecord], opts: &ResampleOptions, seed: u64) -> Result<ResampleBand> {
    if opts.replicates == 0 {
        return Err(Error::Contract("at least one replicate is required".into()));
    }
    let m = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no records".into()))?
        .pattern
        .m();
    if records.iter().any(|r| r.pattern.m() != m) {
        return Err(Error::Contract("records mix patterns of different m".into()));
    }
    let universe: Vec<(PatternId, String)> = if m <= MAX_ENUMERATED_SLOTS {
        let space = PatternSpace::get(m)?;
        (0..space.len())
            .map(|i| (space.id(i).clone(), space.name(i).to_owned()))
            .collect()
    } else {
        let mut ids: Vec<PatternId> = records.iter().map(|r| r.pattern.clone()).collect();
        ids.sort();
        ids.dedup();
        ids.into_iter()
            .map(|id| {
                let name = id.pattern().name();
                (id, name)
            })
            .collect()
    };
    let slot: BTreeMap<&PatternId, usize> = universe.iter().enumerate().map(|(i, (id, _))| (id, i)).collect();
    let code: Vec<usize> = records.iter().map(|r| slot[&r.pattern]).collect();

    let mut months: BTreeMap<i64, (Vec<usize>, usize)> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let entry = months.entry(r.month).or_default();
        entry.0.push(i);
        entry.1 += usize::from(r.covid);
    }
    let strata: Vec<(Vec<usize>, usize)> = months
        .into_iter()
        .filter(|(_, (_, k))| *k > 0)
        .map(|(month, (pool, k))| {
            if k > pool.len() {
                Err(Error::Input(format!(
                    "month {month} needs {k} draws from a pool of {}",
                    pool.len()
                )))
            } else {
                Ok((pool, k))
            }
        })
        .collect::<Result<_>>()?;
    let cohort_size: usize = strata.iter().map(|(_, k)| k).sum();
    if cohort_size == 0 {
        return Err(Error::InsufficientData("no flagged records".into()));
    }

    let k = universe.len();
    let replicate_freqs: Vec<Vec<f64>> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = task_rng(seed, r as u64);
            let mut counts = vec![0u64; k];
            for (pool, n_i) in &strata {
                if opts.with_replacement {
                    for _ in 0..*n_i {
                        counts[code[pool[rng.random_range(0..pool.len())]]] += 1;
                    }
                } else {
                    for j in index::sample(&mut rng, pool.len(), *n_i) {
                        counts[code[pool[j]]] += 1;
                    }
                }
            }
            counts.iter().map(|&c| c as f64 / cohort_size as f64).collect()
        })
        .collect();

    let mut observed = vec![0u64; k];
    for (r, &c) in records.iter().zip(&code) {
        if r.covid {
            observed[c] += 1;
        }
    }
    let rows = universe
        .into_iter()
        .enumerate()
        .map(|(i, (id, name))| {
            let mut col: Vec<f64> = replicate_freqs.iter().map(|f| f[i]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.sort_by(f64::total_cmp);
            let (lo, hi) = (nearest_rank(&col, 0.025), nearest_rank(&col, 0.975));
            let obs = observed[i] as f64 / cohort_size as f64;
            BandRow {
                id,
                name,
                mean,
                p2_5: lo,
                p97_5: hi,
                observed: obs,
                significant: obs < lo || obs > hi,
            }
        })
        .collect();
    Ok(ResampleBand {
        replicates: opts.replicates,
        cohort_size,
        rows,
    })
}
