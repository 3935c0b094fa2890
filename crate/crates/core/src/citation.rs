//! Team structure versus citation performance: author-history features,
//! year-balanced sampling, least-squares citation prediction, fractional
//! prediction errors and the two-sample z-score.

use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector};
use rand::seq::{index, SliceRandom};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::NodeId;
use crate::pattern::PatternId;
use crate::rng::{task_rng, TaskRng};

pub const NUM_FEATURES: usize = 4;

/// Regressors for one paper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaperFeatures {
    /// Years between publication and the dataset snapshot.
    pub age: f64,
    pub mean_author_citations: f64,
    pub mean_author_publications: f64,
    /// Mean years since each author's first paper.
    pub mean_career_length: f64,
}

impl PaperFeatures {
    pub fn as_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.age,
            self.mean_author_citations,
            self.mean_author_publications,
            self.mean_career_length,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Author totals over the whole dataset; career length up to the snapshot.
    #[default]
    Snapshot,
    /// Author totals over strictly earlier papers; career length up to the
    /// paper's own publication.
    AsOfPublication,
}

/// Features for every paper. `months` are month indices, `authors` dense
/// author ids, `citations` the citation counts at the snapshot, which is the
/// latest month in the data.
pub fn build_features(
    months: &[i64],
    authors: &[Vec<NodeId>],
    citations: &[f64],
    mode: FeatureMode,
) -> Result<Vec<PaperFeatures>> {
    let n = months.len();
    if authors.len() != n || citations.len() != n {
        return Err(Error::Input("feature inputs have different lengths".into()));
    }
    let Some(&snapshot) = months.iter().max() else {
        return Ok(Vec::new());
    };
    let num_authors = authors.iter().flatten().map(|&a| a as usize + 1).max().unwrap_or(0);
    let mut first = vec![i64::MAX; num_authors];
    for (t, team) in months.iter().zip(authors) {
        for &a in team {
            first[a as usize] = first[a as usize].min(*t);
        }
    }
    let mean = |team: &[NodeId], f: &dyn Fn(usize) -> f64| -> f64 {
        if team.is_empty() {
            0.0
        } else {
            team.iter().map(|&a| f(a as usize)).sum::<f64>() / team.len() as f64
        }
    };
    match mode {
        FeatureMode::Snapshot => {
            let mut cites = vec![0.0; num_authors];
            let mut pubs = vec![0.0; num_authors];
            for (team, &c) in authors.iter().zip(citations) {
                for &a in team {
                    cites[a as usize] += c;
                    pubs[a as usize] += 1.0;
                }
            }
            Ok(months
                .iter()
                .zip(authors)
                .map(|(&t, team)| PaperFeatures {
                    age: (snapshot - t) as f64 / 12.0,
                    mean_author_citations: mean(team, &|a| cites[a]),
                    mean_author_publications: mean(team, &|a| pubs[a]),
                    mean_career_length: mean(team, &|a| (snapshot - first[a]) as f64 / 12.0),
                })
                .collect())
        }
        FeatureMode::AsOfPublication => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (months[i], i));
            let mut cites = vec![0.0; num_authors];
            let mut pubs = vec![0.0; num_authors];
            let mut out = vec![
                PaperFeatures {
                    age: 0.0,
                    mean_author_citations: 0.0,
                    mean_author_publications: 0.0,
                    mean_career_length: 0.0,
                };
                n
            ];
            let mut start = 0;
            while start < n {
                let t = months[order[start]];
                let end = start + order[start..].partition_point(|&i| months[i] == t);
                for &i in &order[start..end] {
                    let team = &authors[i];
                    out[i] = PaperFeatures {
                        age: (snapshot - t) as f64 / 12.0,
                        mean_author_citations: mean(team, &|a| cites[a]),
                        mean_author_publications: mean(team, &|a| pubs[a]),
                        mean_career_length: mean(team, &|a| (t - first[a]) as f64 / 12.0),
                    };
                }
                for &i in &order[start..end] {
                    for &a in &authors[i] {
                        cites[a as usize] += citations[i];
                        pubs[a as usize] += 1.0;
                    }
                }
                start = end;
            }
            Ok(out)
        }
    }
}

/// Per year, keep `min(A(y), B(y))` items of each side, drawn uniformly without
/// replacement. Returns kept indices in their original order.
pub fn balanced_sample(
    years_a: &[i32],
    years_b: &[i32],
    rng: &mut TaskRng,
) -> (Vec<usize>, Vec<usize>) {
    let group = |years: &[i32]| {
        let mut by: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, &y) in years.iter().enumerate() {
            by.entry(y).or_default().push(i);
        }
        by
    };
    let (ga, gb) = (group(years_a), group(years_b));
    let (mut out_a, mut out_b) = (Vec::new(), Vec::new());
    for (year, a) in &ga {
        let Some(b) = gb.get(year) else { continue };
        let k = a.len().min(b.len());
        for (side, out) in [(a, &mut out_a), (b, &mut out_b)] {
            let mut pick: Vec<usize> = index::sample(rng, side.len(), k).into_iter().map(|j| side[j]).collect();
            pick.sort_unstable();
            out.extend(pick);
        }
    }
    out_a.sort_unstable();
    out_b.sort_unstable();
    (out_a, out_b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// The pseudo-inverse fallback was used.
    pub rank_deficient: bool,
}

impl RegressionModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OlsOptions {
    /// Solve rank-deficient systems with the SVD pseudo-inverse (minimum-norm
    /// solution) instead of failing.
    pub pinv_fallback: bool,
}

/// Ordinary least squares with an intercept. Columns are centred and scaled
/// before the normal equations are solved by Cholesky factorization.
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<RegressionModel> {
    fit_ols_with(x, y, &OlsOptions::default())
}

pub fn fit_ols_with(x: &[Vec<f64>], y: &[f64], opts: &OlsOptions) -> Result<RegressionModel> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Input(format!("{n} feature rows but {} targets", y.len())));
    }
    let k = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != k) {
        return Err(Error::Input("feature rows have different lengths".into()));
    }
    if n < k + 2 {
        return Err(Error::Contract(format!("need at least {} rows for {k} features, got {n}", k + 2)));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite regression input".into()));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..k).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let scales: Vec<f64> = (0..k)
        .map(|j| (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let z = DMatrix::from_fn(n, k, |i, j| {
        if scales[j] > 0.0 {
            (x[i][j] - means[j]) / scales[j]
        } else {
            0.0
        }
    });
    let yc = DVector::from_fn(n, |i, _| y[i] - y_mean);
    let gram = z.transpose() * &z;
    let rhs = z.transpose() * &yc;

    let degenerate_column = scales.contains(&0.0);
    let chol = if degenerate_column {
        None
    } else {
        gram.clone().cholesky().filter(|c| {
            let l = c.l_dirty();
            (0..k).all(|i| l[(i, i)] * l[(i, i)] > 1e-10 * n as f64)
        })
    };
    let (beta, rank_deficient) = match chol {
        Some(c) => (c.solve(&rhs), false),
        None if opts.pinv_fallback => {
            let pinv = gram
                .pseudo_inverse(1e-10 * n as f64)
                .map_err(|e| Error::Numeric(e.to_string()))?;
            (pinv * rhs, true)
        }
        None => {
            return Err(Error::Numeric(
                "design matrix is rank deficient; enable the pseudo-inverse fallback".into(),
            ))
        }
    };
    let weights: Vec<f64> = (0..k)
        .map(|j| if scales[j] > 0.0 { beta[j] / scales[j] } else { 0.0 })
        .collect();
    let intercept = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("least-squares solution is not finite".into()));
    }
    Ok(RegressionModel {
        intercept,
        weights,
        rank_deficient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalErrors {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// Mean of `(actual - predicted) / actual` with its standard error; papers
/// with zero citations are excluded.
pub fn fractional_errors(model: &RegressionModel, x: &[Vec<f64>], actual: &[f64]) -> Result<FractionalErrors> {
    if x.is_empty() {
        return Err(Error::Contract("empty test set".into()));
    }
    let errs: Vec<f64> = x
        .iter()
        .zip(actual)
        .filter(|(_, &a)| a != 0.0)
        .map(|(row, &a)| (a - model.predict(row)) / a)
        .collect();
    let n_excluded = x.len() - errs.len();
    if errs.is_empty() {
        return Err(Error::Statistic("every test paper has zero citations".into()));
    }
    let n = errs.len() as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let stderr = if errs.len() < 2 {
        0.0
    } else {
        (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    };
    Ok(FractionalErrors {
        mean,
        stderr,
        n_used: errs.len(),
        n_excluded,
    })
}

/// `|mu1 - mu2| / sqrt(s1^2 + s2^2)`.
pub fn z_score(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Result<f64> {
    let denom = (s1 * s1 + s2 * s2).sqrt();
    if denom == 0.0 {
        return Err(Error::Statistic("z is undefined when both standard errors are zero".into()));
    }
    Ok((mu1 - mu2).abs() / denom)
}

/// A paper entering the structure comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitationPaper {
    pub year: i32,
    pub pattern: PatternId,
    pub features: PaperFeatures,
    pub citations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub train_fraction: f64,
    pub min_test: usize,
    pub ols: OlsOptions,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            min_test: 30,
            ols: OlsOptions { pinv_fallback: true },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupComparison {
    pub seed: u64,
    pub selected1: usize,
    pub selected2: usize,
    pub balanced: usize,
    pub train_size: usize,
    pub test1: FractionalErrors,
    pub test2: FractionalErrors,
    pub z: f64,
    pub model: RegressionModel,
}

/// Contrast prediction errors of two pattern classes.
///
/// Papers of each class are year-balanced, each class is shuffled and split
/// into train and test parts, one model is fitted on the pooled training
/// parts, and fractional errors are measured per class on its test part. Both
/// classes are shuffled with the same generator state, so identical classes
/// give identical test sets.
pub fn compare_structures(
    papers: &[CitationPaper],
    class1: &[PatternId],
    class2: &[PatternId],
    seed: u64,
    opts: &CompareOptions,
) -> Result<GroupComparison> {
    let set1: HashSet<&PatternId> = class1.iter().collect();
    let set2: HashSet<&PatternId> = class2.iter().collect();
    let sel1: Vec<usize> = (0..papers.len()).filter(|&i| set1.contains(&papers[i].pattern)).collect();
    let sel2: Vec<usize> = (0..papers.len()).filter(|&i| set2.contains(&papers[i].pattern)).collect();
    let years = |sel: &[usize]| sel.iter().map(|&i| papers[i].year).collect::<Vec<_>>();
    let (keep1, keep2) = balanced_sample(&years(&sel1), &years(&sel2), &mut task_rng(seed, 0));
    let mut bal1: Vec<usize> = keep1.iter().map(|&j| sel1[j]).collect();
    let mut bal2: Vec<usize> = keep2.iter().map(|&j| sel2[j]).collect();

    let n_train = (bal1.len() as f64 * opts.train_fraction).round() as usize;
    bal1.shuffle(&mut task_rng(seed, 1));
    bal2.shuffle(&mut task_rng(seed, 1));
    let (train1, test1) = bal1.split_at(n_train.min(bal1.len()));
    let (train2, test2) = bal2.split_at(n_train.min(bal2.len()));
    if test1.len() < opts.min_test || test2.len() < opts.min_test {
        return Err(Error::InsufficientData(format!(
            "test sets of {} and {} papers; at least {} each are required",
            test1.len(),
            test2.len(),
            opts.min_test
        )));
    }
    let rows = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        idx.iter()
            .map(|&i| (papers[i].features.as_array().to_vec(), papers[i].citations))
            .unzip()
    };
    let train: Vec<usize> = train1.iter().chain(train2).copied().collect();
    let (xt, yt) = rows(&train);
    let model = fit_ols_with(&xt, &yt, &opts.ols)?;
    let (x1, y1) = rows(test1);
    let (x2, y2) = rows(test2);
    let e1 = fractional_errors(&model, &x1, &y1)?;
    let e2 = fractional_errors(&model, &x2, &y2)?;
    let z = z_score(e1.mean, e1.stderr, e2.mean, e2.stderr)?;
    Ok(GroupComparison {
        seed,
        selected1: sel1.len(),
        selected2: sel2.len(),
        balanced: bal1.len(),
        train_size: train.len(),
        test1: e1,
        test2: e2,
        z,
        model,
    })
}

/// Default contrast for a team size: first-time collaborations against repeat
/// collaborations, as pattern names.
pub fn default_classes(m: usize) -> Result<(Vec<&'static str>, Vec<&'static str>)> {
    match m {
        2 => Ok((vec!["2^0-1^2"], vec!["2^1-1^0"])),
        3 => Ok((
            vec!["3^0-2^0-1^3", "3^0-2^1-1^1", "3^0-2^2-1^0", "3^0-2^3-1^0"],
            vec!["3^1-2^0-1^0"],
        )),
        _ => Err(Error::Contract(format!(
            "default classes exist for m = 2 or 3, got {m}; pass explicit classes"
        ))),
    }
}
