use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpatterns::census::{census_all_with, census_sampled, formation_patterns, monthly_frequencies};
use mpatterns::citation::{build_features, compare_structures, default_classes, CitationPaper, CompareOptions, FeatureMode};
use mpatterns::cohort::{covid_flag, resample_band, CohortRecord, ResampleOptions};
use mpatterns::ego::{dataset_delta_f, model_counterpart, rolling_average, sweep_egos, EgoSweep};
use mpatterns::io::{self, ComparisonRow, Corpus, PaperRecord};
use mpatterns::null_model::{analytic_curve, extreme_set, mc_curve_with, parse_grid, McOptions};
use mpatterns::pattern::PATTERN_ID_FORMAT_VERSION;
use mpatterns::{CensusEngine, CensusOptions, Error, Hypergraph, PatternId, PatternSpace, Result};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "mpatterns", version, about = "Collaboration pattern census and null-model tools")]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    out_format: OutFormat,
    /// Cap on enumerated subsets and sampled edges.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    Auto,
    Cover,
    Incidence,
}

impl From<Engine> for CensusEngine {
    fn from(e: Engine) -> Self {
        match e {
            Engine::Auto => CensusEngine::Auto,
            Engine::Cover => CensusEngine::CoverTable,
            Engine::Incidence => CensusEngine::Incidence,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Features {
    Snapshot,
    AsOfPublication,
}

#[derive(Args, Debug)]
struct Dataset {
    /// Simplex sizes, one per line.
    #[arg(long, requires = "simplices")]
    nverts: Option<PathBuf>,
    /// Node ids of all simplices, one per line.
    #[arg(long, requires = "nverts")]
    simplices: Option<PathBuf>,
    /// Simplex timestamps, one per line.
    #[arg(long, requires = "nverts")]
    times: Option<PathBuf>,
    /// JSON-lines paper records.
    #[arg(long, conflicts_with_all = ["nverts", "simplices", "times"])]
    records: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Model {
    #[arg(short, long)]
    m: usize,
    #[arg(short = 'N', long = "nodes")]
    n: u64,
    #[arg(long, default_value = "log:1e-5:1:25")]
    grid: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the m-patterns with their combinatorial factors.
    Enumerate {
        #[arg(short, long)]
        m: usize,
    },
    /// Analytic prevalence curves of the random hypergraph model.
    Prevalence {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        labelled: bool,
    },
    /// Monte Carlo prevalence curves of the random hypergraph model.
    Simulate {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
    },
    /// Patterns that are the most prevalent somewhere on the grid.
    Extreme {
        #[arg(short, long)]
        m: usize,
        #[arg(short = 'N', long = "nodes")]
        n: u64,
        #[arg(long, default_value = "log:1e-16:0.9:25")]
        grid: String,
        #[arg(long)]
        labelled: bool,
    },
    /// Pattern census of a dataset.
    Census {
        #[command(flatten)]
        data: Dataset,
        #[arg(short, long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Engine::Auto)]
        engine: Engine,
        /// Estimate from this many random subsets instead of counting all.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Ego hypergraph sweep with binned curves and model discrepancies.
    Ego {
        #[command(flatten)]
        data: Dataset,
        #[arg(short, long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        size_min: usize,
        #[arg(long, default_value_t = 50)]
        size_max: usize,
        #[arg(long)]
        include_ego_edges: bool,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: u32,
    },
    /// Patterns formed by new m-node edges, as a monthly series.
    Formation {
        #[command(flatten)]
        data: Dataset,
        #[arg(short, long)]
        m: usize,
    },
    /// Month-matched resampling band for the keyword-flagged cohort.
    Cohort {
        #[arg(long)]
        records: PathBuf,
        #[arg(short, long)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        #[arg(long)]
        with_replacement: bool,
    },
    /// Citation prediction errors of two team-structure classes.
    Cite {
        #[arg(long)]
        records: PathBuf,
        #[arg(short, long)]
        m: usize,
        /// Restrict to one field; default is every field in the records.
        #[arg(long)]
        field: Option<String>,
        /// Pattern names or ids of the first class (repeatable).
        #[arg(long = "class1")]
        class1: Vec<String>,
        #[arg(long = "class2")]
        class2: Vec<String>,
        #[arg(long, value_enum, default_value_t = Features::Snapshot)]
        features: Features,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 30)]
        min_test: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Enumerate { .. } => "enumerate",
            Command::Prevalence { .. } => "prevalence",
            Command::Simulate { .. } => "simulate",
            Command::Extreme { .. } => "extreme",
            Command::Census { .. } => "census",
            Command::Ego { .. } => "ego",
            Command::Formation { .. } => "formation",
            Command::Cohort { .. } => "cohort",
            Command::Cite { .. } => "cite",
        }
    }
}

/// Output files of one run plus the inputs they came from.
struct Run {
    dir: PathBuf,
    format: OutFormat,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl Run {
    fn create(&mut self, file: String) -> Result<BufWriter<File>> {
        let f = File::create(self.dir.join(&file))?;
        self.outputs.push(file);
        Ok(BufWriter::new(f))
    }

    /// Write `value` as `<stem>.json`, or through `csv` as `<stem>.csv`.
    fn emit<T: Serialize>(
        &mut self,
        stem: &str,
        value: &T,
        csv: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        match self.format {
            OutFormat::Csv => {
                let mut w = self.create(format!("{stem}.csv"))?;
                csv(&mut w)?;
                w.flush()?;
            }
            OutFormat::Json => {
                let mut w = self.create(format!("{stem}.json"))?;
                serde_json::to_writer_pretty(&mut w, value)?;
                writeln!(w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

struct Loaded {
    hypergraph: Hypergraph,
    records: Option<Vec<PaperRecord>>,
    authors: Vec<Vec<u32>>,
}

fn load(data: &Dataset, run: &mut Run) -> Result<Loaded> {
    if let Some(path) = &data.records {
        run.inputs.push(path.clone());
        return load_records(path);
    }
    match (&data.nverts, &data.simplices) {
        (Some(nv), Some(sx)) => {
            run.inputs.extend([nv.clone(), sx.clone()]);
            run.inputs.extend(data.times.clone());
            Ok(Loaded {
                hypergraph: io::parse_benson(nv, sx, data.times.as_deref())?,
                records: None,
                authors: Vec::new(),
            })
        }
        _ => Err(Error::Input("pass --records or --nverts with --simplices".into())),
    }
}

fn load_records(path: &Path) -> Result<Loaded> {
    let corpus = Corpus::from_records(io::parse_paper_records(path)?)?;
    Ok(Loaded {
        hypergraph: corpus.hypergraph,
        records: Some(corpus.records),
        authors: corpus.authors,
    })
}

fn census_options(budget: Option<u64>, engine: CensusEngine) -> CensusOptions {
    let mut opts = CensusOptions {
        engine,
        ..Default::default()
    };
    if let Some(b) = budget {
        opts.max_subsets = b;
    }
    opts
}

fn universe(m: usize, seen: impl IntoIterator<Item = PatternId>) -> Result<Vec<PatternId>> {
    if let Ok(space) = PatternSpace::get(m) {
        return Ok((0..space.len()).map(|i| space.id(i).clone()).collect());
    }
    Ok(seen.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
}

fn resolve_class(m: usize, names: &[String]) -> Result<Vec<PatternId>> {
    names
        .iter()
        .map(|s| Ok(mpatterns::parse_name(s, m)?.id()))
        .collect()
}

fn execute(cli: &Cli, run: &mut Run) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Enumerate { m } => {
            #[derive(Serialize)]
            struct Row {
                pattern_id: String,
                pattern_name: String,
                gamma: u64,
                edges: String,
            }
            let space = PatternSpace::get(*m)?;
            let rows: Vec<Row> = space
                .patterns()
                .iter()
                .enumerate()
                .map(|(i, p)| Row {
                    pattern_id: space.id(i).to_string(),
                    pattern_name: space.name(i).to_owned(),
                    gamma: space.gamma(i),
                    edges: p
                        .edge_slots()
                        .iter()
                        .map(|e| e.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
                        .collect::<Vec<_>>()
                        .join("|"),
                })
                .collect();
            run.emit("patterns", &rows, |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["pattern_id", "pattern_name", "gamma", "edges"])?;
                for r in &rows {
                    c.write_record([&r.pattern_id, &r.pattern_name, &r.gamma.to_string(), &r.edges])?;
                }
                c.flush()?;
                Ok(())
            })
        }
        Command::Prevalence { model, labelled } => {
            let grid = parse_grid(&model.grid)?;
            let curve = analytic_curve(model.n, model.m, &grid, *labelled)?;
            run.emit("prevalence", &curve, |w| io::write_curve_csv(w, &curve))
        }
        Command::Simulate { model, replicates } => {
            let grid = parse_grid(&model.grid)?;
            let mut opts = McOptions {
                census: census_options(cli.budget, CensusEngine::Auto),
                ..Default::default()
            };
            if let Some(b) = cli.budget {
                opts.sample.max_edges = b;
            }
            let curve = mc_curve_with(model.n, model.m, &grid, *replicates, seed, &opts)?;
            run.emit("simulation", &curve, |w| io::write_curve_csv(w, &curve))
        }
        Command::Extreme { m, n, grid, labelled } => {
            let grid = parse_grid(grid)?;
            let entries = extreme_set(*m, *n, &grid, *labelled)?;
            run.emit("extreme", &entries, |w| io::write_extreme_csv(w, *n, &entries))
        }
        Command::Census { data, m, engine, samples } => {
            let h = load(data, run)?.hypergraph;
            let census = match samples {
                Some(k) => census_sampled(&h, *m, *k, seed)?,
                None => census_all_with(&h, *m, &census_options(cli.budget, (*engine).into()))?,
            };
            run.emit("census", &census, |w| io::write_census_csv(w, &census))
        }
        Command::Ego {
            data,
            m,
            size_min,
            size_max,
            include_ego_edges,
            bins_per_decade,
        } => {
            let h = load(data, run)?.hypergraph;
            let sweep = EgoSweep {
                size_min: *size_min,
                size_max: *size_max,
                include_ego_edges: *include_ego_edges,
                census: census_options(cli.budget, CensusEngine::Auto),
            };
            let egos = sweep_egos(&h, *m, &sweep)?;
            let space = PatternSpace::get(*m)?;
            let names = space.names().to_vec();
            let positive: Vec<_> = egos.iter().filter(|e| e.p_e > 0.0).collect();
            let p: Vec<f64> = positive.iter().map(|e| e.p_e).collect();
            let data_rows: Vec<Vec<f64>> = positive.iter().map(|e| e.census.frequencies()).collect();
            let model: Vec<Vec<f64>> = model_counterpart(&egos, *m)?
                .into_iter()
                .filter(|(p, _)| *p > 0.0)
                .map(|(_, t)| t.entries.iter().map(|e| e.value).collect())
                .collect();
            let data_curve = rolling_average(&p, &data_rows, *bins_per_decade)?;
            let model_curve = rolling_average(&p, &model, *bins_per_decade)?;
            let delta = dataset_delta_f(&egos, *m)?;
            if run.format == OutFormat::Json {
                let value = json!({
                    "egos": &egos,
                    "binned": { "data": &data_curve, "model": &model_curve, "names": &names },
                    "delta_f": &delta,
                });
                return run.emit("ego", &value, |_| Ok(()));
            }
            run.emit("egos", &(), |w| io::write_egos_csv(w, &h, &egos, *m))?;
            run.emit("binned", &(), |w| {
                io::write_binned_csv(w, &[("data", &data_curve), ("model", &model_curve)], &names)
            })?;
            run.emit("delta_f", &(), |w| io::write_delta_csv(w, &delta))
        }
        Command::Formation { data, m } => {
            let loaded = load(data, run)?;
            let mut events = formation_patterns(&loaded.hypergraph, *m)?;
            if let Some(records) = &loaded.records {
                for e in &mut events {
                    let text = records[e.edge_index].abstract_text.as_deref().unwrap_or("");
                    e.flags.insert("covid".into(), covid_flag(text));
                }
            }
            let uni = universe(*m, events.iter().map(|e| e.pattern.clone()))?;
            let series = monthly_frequencies(&events, &uni);
            if run.format == OutFormat::Json {
                let value = json!({ "events": &events, "series": &series });
                return run.emit("formation", &value, |_| Ok(()));
            }
            run.emit("events", &(), |w| {
                let mut c = csv::Writer::from_writer(w);
                let flags: Vec<String> = events.first().map_or_else(Vec::new, |e| e.flags.keys().cloned().collect());
                let mut header = vec!["time".to_owned(), "edge_index".into(), "pattern_id".into(), "pattern_name".into()];
                header.extend(flags.iter().cloned());
                c.write_record(&header)?;
                for e in &events {
                    let mut row = vec![
                        e.time.to_string(),
                        e.edge_index.to_string(),
                        e.pattern.to_string(),
                        e.name.clone(),
                    ];
                    row.extend(flags.iter().map(|f| e.flags.get(f).copied().unwrap_or(false).to_string()));
                    c.write_record(&row)?;
                }
                c.flush()?;
                Ok(())
            })?;
            run.emit("series", &(), |w| io::write_series_csv(w, &series))
        }
        Command::Cohort {
            records,
            m,
            replicates,
            with_replacement,
        } => {
            run.inputs.push(records.clone());
            let loaded = load_records(records)?;
            let papers = loaded.records.expect("records input");
            let events = formation_patterns(&loaded.hypergraph, *m)?;
            let cohort: Vec<CohortRecord> = events
                .iter()
                .map(|e| {
                    let r = &papers[e.edge_index];
                    CohortRecord {
                        id: r.id.clone(),
                        month: r.month,
                        pattern: e.pattern.clone(),
                        covid: covid_flag(r.abstract_text.as_deref().unwrap_or("")),
                    }
                })
                .collect();
            let opts = ResampleOptions {
                replicates: *replicates,
                with_replacement: *with_replacement,
            };
            let band = resample_band(&cohort, &opts, seed)?;
            run.emit("band", &band, |w| io::write_band_csv(w, &band))
        }
        Command::Cite {
            records,
            m,
            field,
            class1,
            class2,
            features,
            train_fraction,
            min_test,
        } => {
            run.inputs.push(records.clone());
            let loaded = load_records(records)?;
            let papers = loaded.records.expect("records input");
            let citations: Vec<f64> = papers
                .iter()
                .map(|r| {
                    r.citations
                        .ok_or_else(|| Error::Input(format!("record {} has no citation count", r.id)))
                })
                .collect::<Result<_>>()?;
            let months: Vec<i64> = papers.iter().map(|r| r.month).collect();
            let mode = match features {
                Features::Snapshot => FeatureMode::Snapshot,
                Features::AsOfPublication => FeatureMode::AsOfPublication,
            };
            let feats = build_features(&months, &loaded.authors, &citations, mode)?;
            let (c1, c2) = if class1.is_empty() && class2.is_empty() {
                let (a, b) = default_classes(*m)?;
                let own = |v: Vec<&str>| v.into_iter().map(str::to_owned).collect::<Vec<_>>();
                (resolve_class(*m, &own(a))?, resolve_class(*m, &own(b))?)
            } else if class1.is_empty() || class2.is_empty() {
                return Err(Error::Input("pass both --class1 and --class2, or neither".into()));
            } else {
                (resolve_class(*m, class1)?, resolve_class(*m, class2)?)
            };
            let events = formation_patterns(&loaded.hypergraph, *m)?;
            let fields: Vec<String> = match field {
                Some(f) => vec![f.clone()],
                None => {
                    let all: BTreeSet<&String> = papers.iter().flat_map(|r| &r.fields).collect();
                    if all.is_empty() {
                        vec!["all".to_owned()]
                    } else {
                        all.into_iter().cloned().collect()
                    }
                }
            };
            let opts = CompareOptions {
                train_fraction: *train_fraction,
                min_test: *min_test,
                ..Default::default()
            };
            let mut rows = Vec::new();
            let mut comparisons = Vec::new();
            for f in &fields {
                let selected: Vec<CitationPaper> = events
                    .iter()
                    .filter(|e| f == "all" && field.is_none() || papers[e.edge_index].fields.contains(f))
                    .map(|e| CitationPaper {
                        year: months[e.edge_index].div_euclid(12) as i32,
                        pattern: e.pattern.clone(),
                        features: feats[e.edge_index],
                        citations: citations[e.edge_index],
                    })
                    .collect();
                let cmp = compare_structures(&selected, &c1, &c2, seed, &opts)?;
                rows.push(ComparisonRow {
                    field: f.clone(),
                    team_size: *m,
                    mu1: cmp.test1.mean,
                    se1: cmp.test1.stderr,
                    mu2: cmp.test2.mean,
                    se2: cmp.test2.stderr,
                    z: cmp.z,
                });
                comparisons.push(json!({ "field": f, "comparison": cmp }));
            }
            run.emit("comparison", &comparisons, |w| io::write_comparison_csv(w, &rows))
        }
    }
}

fn write_manifest(cli: &Cli, run: &Run, argv: &[String]) -> Result<()> {
    let inputs = run
        .inputs
        .iter()
        .map(|p| Ok(json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? })))
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "tool": "mpatterns",
        "version": env!("CARGO_PKG_VERSION"),
        "pattern_id_format": PATTERN_ID_FORMAT_VERSION,
        "command": cli.command.name(),
        "args": argv,
        "seed": cli.seed,
        "inputs": inputs,
        "outputs": run.outputs,
    });
    let mut w = BufWriter::new(File::create(run.dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    if let Some(k) = cli.parallelism {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Input(format!("cannot start {k} workers: {e}")))?;
    }
    fs::create_dir_all(&cli.out)?;
    let mut run = Run {
        dir: cli.out.clone(),
        format: cli.out_format,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    execute(cli, &mut run)?;
    write_manifest(cli, &run, argv)
}

fn report(category: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "category": category, "message": message } }));
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(1);
        }
    };
    match run(&cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.category(), &e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
