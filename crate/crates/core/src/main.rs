use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use stlmine::config::RunConfig;
use stlmine::embed::ReferenceSet;
use stlmine::eval::retrieval_effectiveness;
use stlmine::miner::cross_validate;
use stlmine::stl::parse_formula;
use stlmine::traj::{load_dataset, save_dataset};
use stlmine::vecdb::{build_db, QueryOptions, SearchMode, SemanticDb, ShardKey};
use stlmine::{Error, Result};

#[derive(Parser)]
#[command(name = "stlmine", version, about = "Mine signal temporal logic requirements from labelled trajectories")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (all cores by default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labelled benchmark dataset as CSV.
    GenData {
        kind: DataKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the reference set and the formula database.
    BuildDb {
        /// Database file (defaults to paths.db).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArg,
    },
    /// Mine a formula with cross-validation and write a JSON report.
    Mine {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// One stratified 80/20 split instead of k folds.
        #[arg(long)]
        single_fold: bool,
        /// Node budget of the shards searched.
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Print the stored formulae nearest to a formula.
    Query {
        formula: String,
        #[arg(long)]
        db: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArg,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        /// Restrict search to shards with this node budget.
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Probe this many inverted lists instead of scanning.
        #[arg(long)]
        nprobe: Option<usize>,
    },
    /// Run the retrieval-effectiveness experiment.
    EvalRetrieval {
        #[arg(long)]
        db: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArg,
        /// Per-query rows as CSV.
        #[arg(long)]
        out: PathBuf,
        /// Quantile summary; printed to stdout as well.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        n_queries: Option<usize>,
    },
}

#[derive(Args)]
struct ReferenceArg {
    /// Reference set file (defaults to paths.reference).
    #[arg(long = "reference")]
    path: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Linear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.retrieval.seed = s;
    }
    match cli.cmd {
        Cmd::GenData { kind: DataKind::Linear, out } => gen_data(&cfg, &out),
        Cmd::BuildDb { out, reference } => {
            let db = out.unwrap_or_else(|| cfg.paths.db.clone());
            let r = reference.path.unwrap_or_else(|| cfg.paths.reference.clone());
            cmd_build_db(&cfg, &db, &r)
        }
        Cmd::Mine { data, db, report, single_fold, max_nodes } => {
            if single_fold {
                cfg.cv.single_split = true;
            }
            if let Some(m) = max_nodes {
                cfg.bo.shard_budget = m;
            }
            cfg.validate()?;
            cmd_mine(&cfg, &data, &db.unwrap_or_else(|| cfg.paths.db.clone()), report.as_deref())
        }
        Cmd::Query { formula, db, reference, k, max_nodes, nprobe } => {
            let db = db.unwrap_or_else(|| cfg.paths.db.clone());
            let r = reference.path.unwrap_or_else(|| cfg.paths.reference.clone());
            cmd_query(&cfg, &db, &r, &formula, k, max_nodes, nprobe)
        }
        Cmd::EvalRetrieval { db, reference, out, summary, n_queries } => {
            if let Some(n) = n_queries {
                cfg.retrieval.n_queries = n;
            }
            cfg.validate()?;
            let db = db.unwrap_or_else(|| cfg.paths.db.clone());
            let r = reference.path.unwrap_or_else(|| cfg.paths.reference.clone());
            cmd_eval_retrieval(&cfg, &db, &r, &out, summary.as_deref())
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn manifest_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct DataManifest<'a> {
    kind: &'static str,
    seed: u64,
    linear: &'a stlmine::config::LinearConfig,
}

fn gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    let l = &cfg.linear;
    let d = l.system.generate(l.n_pos, l.n_neg, l.n_points, cfg.seed)?;
    save_dataset(&d, out)?;
    write_json(&DataManifest { kind: "linear", seed: cfg.seed, linear: l }, &manifest_path(out))?;
    println!("wrote {} trajectories of {} points to {}", d.len(), l.n_points, out.display());
    Ok(())
}

fn cmd_build_db(cfg: &RunConfig, db_path: &Path, ref_path: &Path) -> Result<()> {
    let t0 = Instant::now();
    let r = cfg.reference.build()?;
    r.save(ref_path)?;
    info!("reference set ({} anchors, {} trajectories) in {:.1?}", r.n_train(), r.n_mc(), t0.elapsed());
    let mut db = build_db(&cfg.build, &r)?;
    if let Some(nlist) = cfg.ivf.nlist {
        db.train_ivf(nlist, cfg.ivf.iterations, cfg.build.seed)?;
    }
    db.save(db_path)?;
    for s in db.shards() {
        println!("shard {}: {} formulae", s.key(), s.len());
    }
    println!("{} formulae in {:.1?}; wrote {} and {}", db.len(), t0.elapsed(), db_path.display(), ref_path.display());
    Ok(())
}

fn cmd_mine(cfg: &RunConfig, data: &Path, db_path: &Path, report: Option<&Path>) -> Result<()> {
    let d = load_dataset(data)?;
    let db = SemanticDb::load(db_path)?;
    let t0 = Instant::now();
    let rep = cross_validate(&d, &db, &cfg.bo, &cfg.cv, cfg.seed)?;
    print!("{}", rep.summary_text());
    eprintln!("mined in {:.1?}", t0.elapsed());
    if let Some(p) = report {
        write_json(&rep, p)?;
    }
    Ok(())
}

fn cmd_query(
    cfg: &RunConfig,
    db_path: &Path,
    ref_path: &Path,
    text: &str,
    k: usize,
    max_nodes: Option<usize>,
    nprobe: Option<usize>,
) -> Result<()> {
    let f = parse_formula(text)?;
    let db = SemanticDb::load(db_path)?;
    let r = ReferenceSet::load(ref_path)?;
    db.check_reference(&r)?;
    let keys: Vec<ShardKey> = match max_nodes {
        Some(m) => db.keys().into_iter().filter(|key| key.max_nodes == m).collect(),
        None => {
            let top = db.keys().iter().map(|key| key.max_nodes).max().unwrap_or(0);
            db.keys().into_iter().filter(|key| key.max_nodes == top).collect()
        }
    };
    if keys.is_empty() {
        return Err(Error::NoCandidates("no shard matches the requested node budget".into()));
    }
    let e = r.embed(&f)?;
    let mode = match nprobe.or(cfg.ivf.nprobe) {
        Some(n) => SearchMode::Ivf { nprobe: n },
        None => SearchMode::Exact,
    };
    let hits = db.query_with(&e, &QueryOptions { mode, ..QueryOptions::exact(k, keys) })?;
    for h in hits {
        println!("{:>3}  {:.6}  {}  {}", h.rank, h.distance, h.key, h.text);
    }
    Ok(())
}

fn cmd_eval_retrieval(cfg: &RunConfig, db_path: &Path, ref_path: &Path, out: &Path, summary: Option<&Path>) -> Result<()> {
    let db = SemanticDb::load(db_path)?;
    let r = ReferenceSet::load(ref_path)?;
    let t0 = Instant::now();
    let rep = retrieval_effectiveness(&db, &r, &cfg.retrieval)?;
    rep.write_csv(BufWriter::new(File::create(out)?))?;
    let text = rep.summary_text();
    print!("{text}");
    if let Some(p) = summary {
        std::fs::write(p, &text)?;
    }
    eprintln!("{} queries in {:.1?}", cfg.retrieval.n_queries, t0.elapsed());
    Ok(())
}
