mod common;

use common::{fixture, ols_oracle, read};
use mpatterns::census::{census_all_with, formation_patterns, monthly_frequencies, CensusEngine, CensusOptions};
use mpatterns::citation::{
    balanced_sample, build_features, compare_structures, default_classes, CitationPaper, CompareOptions,
    FeatureMode, PaperFeatures,
};
use mpatterns::cohort::{covid_flag, resample_band, CohortRecord, ResampleOptions};
use mpatterns::ego::{ego_hypergraph, model_counterpart, sweep_egos, EgoSweep};
use mpatterns::io::{self, Corpus};
use mpatterns::null_model::analytic_prevalence;
use mpatterns::rng::task_rng;
use mpatterns::{parse_name, ModelParams, PatternId, PatternSpace};
use rand::seq::SliceRandom;
use rand::Rng;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> mpatterns::Result<()>) -> String {
    let mut buf = Vec::new();
    f(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn triples() -> mpatterns::Hypergraph {
    io::parse_benson(
        &fixture("triples/nverts.txt"),
        &fixture("triples/simplices.txt"),
        Some(&fixture("triples/times.txt")),
    )
    .unwrap()
}

#[test]
fn census_of_ten_triples() {
    let h = triples();
    for engine in [CensusEngine::CoverTable, CensusEngine::Incidence] {
        let opts = CensusOptions {
            engine,
            ..Default::default()
        };
        let c = census_all_with(&h, 3, &opts).unwrap();
        assert_eq!(c.total, 10);
        let out = csv_bytes(|w| io::write_census_csv(w, &c));
        assert_eq!(out, read("triples/census_m3.csv"), "{engine:?}");
    }
}

#[test]
fn benson_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("nv"), "2\n3\n").unwrap();
    std::fs::write(dir.path().join("sx"), "7\n9\n7\n8\n11\n").unwrap();
    std::fs::write(dir.path().join("tm"), "100\n200\n").unwrap();
    let h = io::parse_benson(&dir.path().join("nv"), &dir.path().join("sx"), Some(&dir.path().join("tm"))).unwrap();
    assert_eq!(h.num_nodes(), 4);
    let edges: Vec<(Vec<&str>, Option<i64>)> = h
        .edges()
        .map(|e| (e.nodes.iter().map(|&v| h.label(v).unwrap()).collect(), e.timestamp))
        .collect();
    assert_eq!(edges, vec![(vec!["7", "9"], Some(100)), (vec!["7", "8", "11"], Some(200))]);

    let files = io::write_benson(&h, dir.path(), "copy").unwrap();
    let back = io::parse_benson(&files[0], &files[1], Some(&files[2])).unwrap();
    assert_eq!(back.num_edges(), h.num_edges());
    for (a, b) in h.edges().zip(back.edges()) {
        let la: Vec<_> = a.nodes.iter().map(|&v| h.label(v)).collect();
        let lb: Vec<_> = b.nodes.iter().map(|&v| back.label(v)).collect();
        assert_eq!((la, a.timestamp), (lb, b.timestamp));
    }

    std::fs::write(dir.path().join("sx"), "7\n9\n7\n8\n").unwrap();
    let err = io::parse_benson(&dir.path().join("nv"), &dir.path().join("sx"), None).unwrap_err();
    assert_eq!(err.category(), "format");
}

#[test]
fn formation_and_monthly_series() {
    let corpus = Corpus::from_records(io::parse_paper_records(&fixture("formation.jsonl")).unwrap()).unwrap();
    assert_eq!(corpus.names.authors, 5);
    assert_eq!(corpus.names.merged_names, 1);
    let events = formation_patterns(&corpus.hypergraph, 3).unwrap();
    let got: Vec<(i64, usize, String, bool)> = events
        .iter()
        .map(|e| {
            let text = corpus.records[e.edge_index].abstract_text.as_deref().unwrap_or("");
            (e.time, e.edge_index, e.name.clone(), covid_flag(text))
        })
        .collect();
    let expected_events: Vec<(i64, usize, String, bool)> = read("formation_events_m3.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(l.as_bytes());
            let rec = r.records().next().unwrap().unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap(), rec[3].to_owned(), &rec[4] == "true")
        })
        .collect();
    assert_eq!(got, expected_events);

    let space = PatternSpace::get(3).unwrap();
    let universe: Vec<PatternId> = (0..space.len()).map(|i| space.id(i).clone()).collect();
    let series = monthly_frequencies(&events, &universe);
    let out = csv_bytes(|w| io::write_series_csv(w, &series));
    assert_eq!(out, read("formation_series_m3.csv"));
}

#[test]
fn twelve_node_ego() {
    let h = io::parse_benson(&fixture("ego/nverts.txt"), &fixture("ego/simplices.txt"), None).unwrap();
    let ego = ego_hypergraph(&h, 0, false).unwrap();
    assert_eq!(ego.hypergraph.num_nodes(), 12);
    assert_eq!(ego.hypergraph.num_edges(), 4);

    let egos = sweep_egos(&h, 3, &EgoSweep::default()).unwrap();
    assert_eq!(egos.len(), 1);
    assert_eq!(egos[0].distinct_m_edges, 2);
    let out = csv_bytes(|w| io::write_egos_csv(w, &h, &egos, 3));
    assert_eq!(out, read("ego/egos_m3.csv"));

    let (p, table) = &model_counterpart(&egos, 3).unwrap()[0];
    let params = ModelParams::new(12, 3, *p).unwrap();
    let space = PatternSpace::get(3).unwrap();
    for (i, e) in table.entries.iter().enumerate() {
        assert_eq!(e.value, analytic_prevalence(space.pattern(i), &params, false).unwrap());
    }
}

fn cohort_records(path: &str, m: usize) -> Vec<CohortRecord> {
    let corpus = Corpus::from_records(io::parse_paper_records(&fixture(path)).unwrap()).unwrap();
    formation_patterns(&corpus.hypergraph, m)
        .unwrap()
        .into_iter()
        .map(|e| {
            let r = &corpus.records[e.edge_index];
            CohortRecord {
                id: r.id.clone(),
                month: r.month,
                pattern: e.pattern,
                covid: covid_flag(r.abstract_text.as_deref().unwrap_or("")),
            }
        })
        .collect()
}

#[test]
fn cohort_band_fixture() {
    let records = cohort_records("cohort.jsonl", 2);
    let opts = ResampleOptions {
        replicates: 1000,
        with_replacement: false,
    };
    for seed in [3, 4] {
        let band = resample_band(&records, &opts, seed).unwrap();
        assert_eq!(band.cohort_size, 3);
        let out = csv_bytes(|w| io::write_band_csv(w, &band));
        assert_eq!(out, read("cohort_band_m2.csv"));
    }
}

#[test]
fn mixed_month_band_spans_the_support() {
    // one month, pool of 10 repeats and 10 first-time pairs, cohort of 1
    let a = parse_name("2^1-1^0", 2).unwrap().id();
    let b = parse_name("2^0-1^0", 2).unwrap().id();
    let records: Vec<CohortRecord> = (0..20)
        .map(|i| CohortRecord {
            id: i.to_string(),
            month: 0,
            pattern: if i < 10 { a.clone() } else { b.clone() },
            covid: i == 0,
        })
        .collect();
    let band = resample_band(&records, &ResampleOptions { replicates: 1000, with_replacement: false }, 9).unwrap();
    let row = band.rows.iter().find(|r| r.id == a).unwrap();
    assert_eq!((row.p2_5, row.p97_5, row.observed), (0.0, 1.0, 1.0));
    assert!(!row.significant);
    assert!((row.mean - 0.5).abs() < 4.0 * (0.25f64 / 1000.0).sqrt());
}

#[test]
fn band_coverage_on_unbiased_cohorts() {
    let ids: Vec<PatternId> = ["2^1-1^0", "2^0-1^2", "2^0-1^1", "2^0-1^0"]
        .iter()
        .map(|n| parse_name(n, 2).unwrap().id())
        .collect();
    let weights = [0.1, 0.2, 0.3, 0.4];
    let opts = ResampleOptions {
        replicates: 1000,
        with_replacement: false,
    };
    let seeds = 200;
    let mut covered = 0;
    for s in 0..seeds {
        let mut rng = task_rng(0xC0FFEE, s);
        let mut records = Vec::new();
        for month in 0..6 {
            let pool: usize = 150;
            let flagged = rand::seq::index::sample(&mut rng, pool, 40).into_vec();
            for j in 0..pool {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let k = weights.iter().position(|w| {
                    acc += w;
                    u < acc
                });
                records.push(CohortRecord {
                    id: format!("{month}-{j}"),
                    month,
                    pattern: ids[k.unwrap_or(3)].clone(),
                    covid: flagged.contains(&j),
                });
            }
        }
        let band = resample_band(&records, &opts, 1000 + s).unwrap();
        let row = band.rows.iter().find(|r| r.id == ids[2]).unwrap();
        if row.observed >= row.p2_5 && row.observed <= row.p97_5 {
            covered += 1;
        }
    }
    let rate = covered as f64 / seeds as f64;
    let sigma = (0.95 * 0.05 / seeds as f64).sqrt();
    assert!((rate - 0.95).abs() <= 4.0 * sigma, "coverage {rate}");
}

fn synthetic_papers(n: usize, boost: f64, seed: u64) -> Vec<CitationPaper> {
    let first = parse_name("2^0-1^2", 2).unwrap().id();
    let repeat = parse_name("2^1-1^0", 2).unwrap().id();
    let mut rng = task_rng(seed, 0);
    (0..n)
        .map(|i| {
            let features = PaperFeatures {
                age: rng.random_range(1.0..10.0),
                mean_author_citations: rng.random_range(0.0..200.0),
                mean_author_publications: rng.random_range(1.0..40.0),
                mean_career_length: rng.random_range(1.0..30.0),
            };
            let base = 5.0 + 3.0 * features.age + 0.2 * features.mean_author_citations + features.mean_author_publications;
            let noise = rng.random_range(0.8..1.2);
            let is_repeat = i % 2 == 1;
            CitationPaper {
                year: 2000 + rng.random_range(0..10),
                pattern: if is_repeat { repeat.clone() } else { first.clone() },
                features,
                citations: base * noise * if is_repeat { boost } else { 1.0 },
            }
        })
        .collect()
}

fn classes() -> (Vec<PatternId>, Vec<PatternId>) {
    let (a, b) = default_classes(2).unwrap();
    let ids = |v: Vec<&str>| v.iter().map(|s| parse_name(s, 2).unwrap().id()).collect();
    (ids(a), ids(b))
}

#[test]
fn injected_citation_boost_is_detected() {
    let papers = synthetic_papers(10_000, 1.5, 5);
    let (c1, c2) = classes();
    let cmp = compare_structures(&papers, &c1, &c2, 11, &CompareOptions::default()).unwrap();
    assert!(cmp.z > 2.0, "z = {}", cmp.z);
    let null = synthetic_papers(10_000, 1.0, 5);
    let cmp = compare_structures(&null, &c1, &c2, 11, &CompareOptions::default()).unwrap();
    assert!(cmp.z < 4.0, "null z = {}", cmp.z);
}

#[test]
fn compare_structures_matches_exact_recomputation() {
    let papers = synthetic_papers(400, 1.3, 8);
    let (c1, c2) = classes();
    let seed = 21;
    let got = compare_structures(&papers, &c1, &c2, seed, &CompareOptions::default()).unwrap();

    let sel = |c: &[PatternId]| -> Vec<usize> { (0..papers.len()).filter(|&i| c.contains(&papers[i].pattern)).collect() };
    let (s1, s2) = (sel(&c1), sel(&c2));
    let years = |s: &[usize]| s.iter().map(|&i| papers[i].year).collect::<Vec<_>>();
    let (k1, k2) = balanced_sample(&years(&s1), &years(&s2), &mut task_rng(seed, 0));
    let mut b1: Vec<usize> = k1.iter().map(|&j| s1[j]).collect();
    let mut b2: Vec<usize> = k2.iter().map(|&j| s2[j]).collect();
    b1.shuffle(&mut task_rng(seed, 1));
    b2.shuffle(&mut task_rng(seed, 1));
    let n_train = (b1.len() as f64 * 0.8).round() as usize;
    let train: Vec<usize> = b1[..n_train].iter().chain(&b2[..n_train]).copied().collect();
    let x: Vec<Vec<f64>> = train.iter().map(|&i| papers[i].features.as_array().to_vec()).collect();
    let y: Vec<f64> = train.iter().map(|&i| papers[i].citations).collect();
    let (b0, w) = ols_oracle(&x, &y);
    let stats = |test: &[usize]| {
        let e: Vec<f64> = test
            .iter()
            .map(|&i| {
                let f = papers[i].features.as_array();
                let pred = b0 + w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
                (papers[i].citations - pred) / papers[i].citations
            })
            .collect();
        let n = e.len() as f64;
        let mean = e.iter().sum::<f64>() / n;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (m1, se1) = stats(&b1[n_train..]);
    let (m2, se2) = stats(&b2[n_train..]);
    let z = (m1 - m2).abs() / (se1 * se1 + se2 * se2).sqrt();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
    assert!(close(got.test1.mean, m1) && close(got.test2.mean, m2));
    assert!(close(got.test1.stderr, se1) && close(got.test2.stderr, se2));
    assert!(close(got.z, z), "{} vs {z}", got.z);
}

#[test]
fn cite_fixture_features_are_hand_checkable() {
    let corpus = Corpus::from_records(io::parse_paper_records(&fixture("cite.jsonl")).unwrap()).unwrap();
    let months: Vec<i64> = corpus.records.iter().map(|r| r.month).collect();
    let cites: Vec<f64> = corpus.records.iter().map(|r| r.citations.unwrap()).collect();
    let feats = build_features(&months, &corpus.authors, &cites, FeatureMode::Snapshot).unwrap();
    let snapshot = *months.iter().max().unwrap();
    for (f, &t) in feats.iter().zip(&months) {
        assert_eq!(f.age, (snapshot - t) as f64 / 12.0);
    }
}
