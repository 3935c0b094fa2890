//! Dataset readers and CSV writers.
//!
//! * Simplicial triple: an `nverts` file (one simplex size per line), a
//!   `simplices` file (node ids, one per line, consumed in order) and an
//!   optional `times` file (one integer timestamp per simplex). Node ids are
//!   remapped densely in order of first appearance; the original ids become
//!   node labels.
//! * Paper records: JSON lines with `id`, `time` (`"YYYY-MM"`, `"YYYY-MM-DD"`
//!   or integer Unix seconds), `authors`, and optional `abstract`,
//!   `citations` and `fields`. Times become month indices `12 * year + month - 1`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike};
use serde::{Deserialize, Serialize};

use crate::census::{MonthlySeries, PatternCensus};
use crate::cohort::ResampleBand;
use crate::ego::{BinnedCurve, DeltaRow, EgoSummary};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, HypergraphBuilder, NodeId};
use crate::null_model::{ExtremeEntry, PrevalenceCurve};
use crate::pattern::PatternSpace;

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path)?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(Error::from))
        .collect::<Result<Vec<_>>>()
        .map(|lines| {
            let mut lines = lines;
            while lines.last().is_some_and(|l| l.trim().is_empty()) {
                lines.pop();
            }
            lines
        })
}

fn parse_int<T: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::format(path, line, format!("expected an integer, found {:?}", text.trim())))
}

/// Read a simplicial triple.
pub fn parse_benson(nverts: &Path, simplices: &Path, times: Option<&Path>) -> Result<Hypergraph> {
    let sizes: Vec<usize> = read_lines(nverts)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_int(nverts, i + 1, l))
        .collect::<Result<_>>()?;
    let nodes: Vec<i64> = read_lines(simplices)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_int(simplices, i + 1, l))
        .collect::<Result<_>>()?;
    let total: usize = sizes.iter().sum();
    if total != nodes.len() {
        return Err(Error::format(
            simplices,
            nodes.len(),
            format!("simplex sizes sum to {total} but the file has {} node lines", nodes.len()),
        ));
    }
    let stamps: Option<Vec<i64>> = match times {
        Some(path) => {
            let t: Vec<i64> = read_lines(path)?
                .iter()
                .enumerate()
                .map(|(i, l)| parse_int(path, i + 1, l))
                .collect::<Result<_>>()?;
            if t.len() != sizes.len() {
                return Err(Error::format(
                    path,
                    t.len(),
                    format!("{} timestamps for {} simplices", t.len(), sizes.len()),
                ));
            }
            Some(t)
        }
        None => None,
    };

    let mut dense: HashMap<i64, NodeId> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<Vec<NodeId>> = Vec::with_capacity(sizes.len());
    let mut pos = 0;
    for &s in &sizes {
        let edge = nodes[pos..pos + s]
            .iter()
            .map(|&raw| {
                *dense.entry(raw).or_insert_with(|| {
                    labels.push(raw.to_string());
                    (labels.len() - 1) as NodeId
                })
            })
            .collect();
        edges.push(edge);
        pos += s;
    }
    let mut b = HypergraphBuilder::new(labels.len()).with_labels(labels)?;
    for (i, e) in edges.into_iter().enumerate() {
        b.push_edge(e, stamps.as_ref().map(|t| t[i]))?;
    }
    b.build()
}

/// Write a hypergraph as a simplicial triple `<prefix>-nverts.txt`,
/// `<prefix>-simplices.txt` and, when timestamped, `<prefix>-times.txt`.
/// Nodes are written by label when labelled.
pub fn write_benson(h: &Hypergraph, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let path = |kind: &str| dir.join(format!("{prefix}-{kind}.txt"));
    let mut nv = Vec::new();
    let mut sx = Vec::new();
    let mut tm = Vec::new();
    for e in h.edges() {
        writeln!(nv, "{}", e.nodes.len())?;
        for &v in e.nodes {
            match h.label(v) {
                Some(l) => writeln!(sx, "{l}")?,
                None => writeln!(sx, "{v}")?,
            }
        }
        if let Some(t) = e.timestamp {
            writeln!(tm, "{t}")?;
        }
    }
    let mut written = vec![path("nverts"), path("simplices")];
    std::fs::write(&written[0], nv)?;
    std::fs::write(&written[1], sx)?;
    if h.is_timestamped() {
        written.push(path("times"));
        std::fs::write(&written[2], tm)?;
    }
    Ok(written)
}

/// Month index `12 * year + month - 1`.
pub fn month_index(year: i32, month: u32) -> i64 {
    i64::from(year) * 12 + i64::from(month) - 1
}

/// `"YYYY-MM"` for a month index.
pub fn format_month(index: i64) -> String {
    format!("{:04}-{:02}", index.div_euclid(12), index.rem_euclid(12) + 1)
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RawTime {
    Text(String),
    Epoch(i64),
}

/// Month index of a record time.
pub fn parse_time(raw: &RawTime) -> std::result::Result<i64, String> {
    match raw {
        RawTime::Epoch(secs) => DateTime::from_timestamp(*secs, 0)
            .map(|d| month_index(d.year(), d.month()))
            .ok_or_else(|| format!("epoch {secs} out of range")),
        RawTime::Text(s) => {
            let bad = || format!("time {s:?} is not YYYY-MM");
            let mut parts = s.trim().splitn(3, '-');
            let year: i32 = parts.next().and_then(|y| y.parse().ok()).ok_or_else(bad)?;
            let month: u32 = parts
                .next()
                .filter(|m| m.len() == 2)
                .and_then(|m| m.parse().ok())
                .ok_or_else(bad)?;
            if !(1..=12).contains(&month) {
                return Err(bad());
            }
            if let Some(day) = parts.next() {
                let ok = day.len() == 2 && day.parse::<u32>().is_ok_and(|d| (1..=31).contains(&d));
                if !ok {
                    return Err(bad());
                }
            }
            Ok(month_index(year, month))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct PaperRecordLine {
    pub id: String,
    pub time: RawTime,
    pub authors: Vec<String>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub citations: Option<f64>,
    #[serde(default)]
    pub fields: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperRecord {
    pub id: String,
    pub month: i64,
    pub authors: Vec<String>,
    pub abstract_text: Option<String>,
    pub citations: Option<f64>,
    pub fields: Vec<String>,
}

/// Read JSON-lines paper records; blank lines are skipped.
pub fn parse_paper_records(path: &Path) -> Result<Vec<PaperRecord>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: PaperRecordLine =
            serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        if raw.authors.is_empty() {
            return Err(Error::format(path, i + 1, "record has no authors"));
        }
        let month = parse_time(&raw.time).map_err(|e| Error::format(path, i + 1, e))?;
        out.push(PaperRecord {
            id: raw.id,
            month,
            authors: raw.authors,
            abstract_text: raw.abstract_text,
            citations: raw.citations,
            fields: raw.fields.unwrap_or_default(),
        });
    }
    Ok(out)
}

/// Lowercase and collapse internal whitespace.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NameStats {
    pub raw_spellings: usize,
    pub authors: usize,
    /// Normalized names reached from more than one raw spelling.
    pub merged_names: usize,
    /// Papers whose author list shrank after normalization.
    pub papers_with_repeated_authors: usize,
}

/// Paper records as a temporal hypergraph: one edge per record (month-index
/// timestamps), nodes are normalized author names.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<PaperRecord>,
    pub authors: Vec<Vec<NodeId>>,
    pub hypergraph: Hypergraph,
    pub names: NameStats,
}

impl Corpus {
    pub fn from_records(records: Vec<PaperRecord>) -> Result<Self> {
        let mut ids: HashMap<String, NodeId> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut spellings: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
        let mut repeated = 0;
        let authors: Vec<Vec<NodeId>> = records
            .iter()
            .map(|r| {
                let mut team: Vec<NodeId> = r
                    .authors
                    .iter()
                    .map(|raw| {
                        let norm = normalize_name(raw);
                        spellings.entry(norm.clone()).or_default().insert(raw.clone());
                        *ids.entry(norm.clone()).or_insert_with(|| {
                            labels.push(norm);
                            (labels.len() - 1) as NodeId
                        })
                    })
                    .collect();
                let before = team.len();
                team.sort_unstable();
                team.dedup();
                if team.len() < before {
                    repeated += 1;
                }
                team
            })
            .collect();
        let names = NameStats {
            raw_spellings: spellings.values().map(|s| s.len()).sum(),
            authors: labels.len(),
            merged_names: spellings.values().filter(|s| s.len() > 1).count(),
            papers_with_repeated_authors: repeated,
        };
        let mut b = HypergraphBuilder::new(labels.len()).with_labels(labels)?;
        for (r, team) in records.iter().zip(&authors) {
            b.push_edge(team.iter().copied(), Some(r.month))?;
        }
        Ok(Self {
            hypergraph: b.build()?,
            records,
            authors,
            names,
        })
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_curve_csv<W: Write>(out: W, curve: &PrevalenceCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "pattern_id", "pattern_name", "value", "stderr", "kind"])?;
    for (p, table) in curve.p_grid.iter().zip(&curve.tables) {
        for e in &table.entries {
            w.write_record([
                p.to_string(),
                e.id.to_string(),
                e.name.clone(),
                e.value.to_string(),
                fmt_opt(e.stderr),
                table.kind.as_str().to_owned(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_census_csv<W: Write>(out: W, census: &PatternCensus) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern_id", "pattern_name", "count", "frequency"])?;
    for e in &census.entries {
        w.write_record([
            e.id.to_string(),
            e.name.clone(),
            e.count.to_string(),
            (e.count as f64 / census.total as f64).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format series; months without events have an empty frequency.
pub fn write_series_csv<W: Write>(out: W, series: &MonthlySeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["month", "n_events", "pattern_id", "pattern_name", "frequency"])?;
    for row in &series.rows {
        for (i, (id, name)) in series.universe.iter().zip(&series.names).enumerate() {
            w.write_record([
                format_month(row.month),
                row.n_events.to_string(),
                id.to_string(),
                name.clone(),
                fmt_opt(row.frequencies.as_ref().map(|f| f[i])),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_band_csv<W: Write>(out: W, band: &ResampleBand) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern", "mean", "p2.5", "p97.5", "observed", "significant"])?;
    for r in &band.rows {
        w.write_record([
            r.name.clone(),
            r.mean.to_string(),
            r.p2_5.to_string(),
            r.p97_5.to_string(),
            r.observed.to_string(),
            r.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per ego: id, label, size, density, then one frequency column per
/// pattern (named by pattern name).
pub fn write_egos_csv<W: Write>(out: W, h: &Hypergraph, egos: &[EgoSummary], m: usize) -> Result<()> {
    let space = PatternSpace::get(m)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["ego".to_owned(), "label".into(), "n_e".into(), "p_e".into()];
    header.extend(space.names().iter().cloned());
    w.write_record(&header)?;
    for e in egos {
        let mut row = vec![
            e.ego.to_string(),
            h.label(e.ego).map_or_else(|| e.ego.to_string(), str::to_owned),
            e.n_e.to_string(),
            e.p_e.to_string(),
        ];
        row.extend(e.census.frequencies().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Binned rows for one or more labelled curves (`source` is e.g. `data` or
/// `model`); `names` label the value columns of each segment.
pub fn write_binned_csv<W: Write>(out: W, curves: &[(&str, &BinnedCurve)], names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "segment", "center", "points", "pattern_name", "mean"])?;
    for (source, curve) in curves {
        for s in &curve.segments {
            for (name, mean) in names.iter().zip(&s.means) {
                w.write_record([
                    source.to_string(),
                    s.index.to_string(),
                    s.center.to_string(),
                    s.points.to_string(),
                    name.clone(),
                    mean.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_delta_csv<W: Write>(out: W, rows: &[DeltaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern_id", "pattern_name", "p_data", "p_model", "delta_f", "one_sided"])?;
    for r in rows {
        w.write_record([
            r.id.to_string(),
            r.name.clone(),
            r.p_data.to_string(),
            r.p_model.to_string(),
            r.delta_f.to_string(),
            r.one_sided.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_extreme_csv<W: Write>(out: W, n: u64, entries: &[ExtremeEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "pattern_id", "pattern_name", "grid_points", "p_first", "p_last"])?;
    for e in entries {
        for (lo, hi) in &e.intervals {
            w.write_record([
                n.to_string(),
                e.id.to_string(),
                e.name.clone(),
                e.grid_points.to_string(),
                lo.to_string(),
                hi.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A row of the citation comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub field: String,
    pub team_size: usize,
    pub mu1: f64,
    pub se1: f64,
    pub mu2: f64,
    pub se2: f64,
    pub z: f64,
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["field", "team_size", "mu1", "se1", "mu2", "se2", "z"])?;
    for r in rows {
        w.write_record([
            r.field.clone(),
            r.team_size.to_string(),
            r.mu1.to_string(),
            r.se1.to_string(),
            r.mu2.to_string(),
            r.se2.to_string(),
            r.z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn benson_example() {
        let dir = tempfile::tempdir().unwrap();
        let nv = write(dir.path(), "nv", "2\n3\n");
        let sx = write(dir.path(), "sx", "7\n9\n7\n8\n11\n");
        let tm = write(dir.path(), "tm", "100\n200\n");
        let h = parse_benson(&nv, &sx, Some(&tm)).unwrap();
        assert_eq!(h.num_nodes(), 4);
        assert_eq!(h.labels().unwrap(), &["7", "9", "8", "11"]);
        assert_eq!(h.edge_nodes(0), &[0, 1]);
        assert_eq!(h.edge_nodes(1), &[0, 2, 3]);
        assert_eq!(h.edge(1).timestamp, Some(200));

        let out = tempfile::tempdir().unwrap();
        let files = write_benson(&h, out.path(), "rt").unwrap();
        let back = parse_benson(&files[0], &files[1], Some(&files[2])).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn benson_errors_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let nv = write(dir.path(), "nv", "2\n3\n");
        let sx = write(dir.path(), "sx", "7\n9\n7\n8\n");
        let err = parse_benson(&nv, &sx, None).unwrap_err();
        assert_eq!(err.category(), "format");
        let bad = write(dir.path(), "bad", "2\nx\n");
        match parse_benson(&bad, &sx, None).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let empty = write(dir.path(), "empty", "");
        let h = parse_benson(&empty, &empty, Some(&empty)).unwrap();
        assert_eq!((h.num_nodes(), h.num_edges()), (0, 0));
    }

    #[test]
    fn times_and_months() {
        assert_eq!(parse_time(&RawTime::Text("2020-03".into())).unwrap(), month_index(2020, 3));
        assert_eq!(parse_time(&RawTime::Text("2020-03-17".into())).unwrap(), month_index(2020, 3));
        assert_eq!(parse_time(&RawTime::Epoch(1_583_020_800)).unwrap(), month_index(2020, 3));
        assert!(parse_time(&RawTime::Text("2020-13".into())).is_err());
        assert!(parse_time(&RawTime::Text("March".into())).is_err());
        assert_eq!(format_month(month_index(2020, 1)), "2020-01");
        assert_eq!(format_month(month_index(1999, 12)), "1999-12");
    }

    #[test]
    fn records_and_names() {
        let dir = tempfile::tempdir().unwrap();
        let body = concat!(
            r#"{"id":"a","time":"2020-01","authors":["Ada  Lovelace","ada lovelace"],"citations":3}"#,
            "\n\n",
            r#"{"id":"b","time":1583020800,"authors":["B. Smith","Ada Lovelace"],"abstract":"on covid-19"}"#,
            "\n"
        );
        let p = write(dir.path(), "r.jsonl", body);
        let recs = parse_paper_records(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].month, month_index(2020, 3));
        let corpus = Corpus::from_records(recs).unwrap();
        assert_eq!(corpus.authors[0], vec![0]);
        assert_eq!(corpus.names.authors, 2);
        assert_eq!(corpus.names.merged_names, 1);
        assert_eq!(corpus.names.papers_with_repeated_authors, 1);
        assert_eq!(corpus.hypergraph.edge(1).timestamp, Some(month_index(2020, 3)));

        let bad = write(dir.path(), "bad.jsonl", "{\"id\":\"x\",\"time\":\"2020-01\",\"authors\":[]}\n");
        assert_eq!(parse_paper_records(&bad).unwrap_err().category(), "format");
    }
}
