use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Local;
use clap::{Args, Parser, Subcommand};

use lapsearch::certificate::{parse_export_block, verify_counterexample, Certification, DEFAULT_STRICT_TOL};
use lapsearch::conjecture::{list_conjectures, ConjectureId};
use lapsearch::engine::ConjectureObjective;
use lapsearch::format::{from_adjacency_text, from_graph6};
use lapsearch::parallel::{run_parallel_with, SearchConfig};
use lapsearch::run::{self, DEFAULT_OUT_ROOT, OUT_ENV};
use lapsearch::{Error, Graph};

const EXIT_FOUND: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

#[derive(Parser)]
#[command(name = "lapsearch", version, about = "Search for and verify Laplacian spectral radius counterexamples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parallel cross-entropy search. Exit 0 on a certified find, 3 when the budget runs out.
    Search(SearchArgs),
    /// Check a graph against one or more conjectures. Exit 0 iff all requested are violated.
    Verify(VerifyArgs),
    /// Average generations.csv files into reward curves.
    Plotdata(PlotArgs),
    /// Print the conjecture catalog.
    ListConjectures,
}

#[derive(Args)]
struct SearchArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    conjecture: Option<u32>,
    /// Vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Total batch size, split across instances.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Share of each batch seeded from the incumbent graph.
    #[arg(long)]
    seed_fraction: Option<f64>,
    /// Share of each batch built with uniform-random actions.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Keep searching after a certified counterexample.
    #[arg(long)]
    keep_going: bool,
    /// Output root; each run gets a new timestamped directory inside it.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Suppress progress lines on stderr.
    #[arg(short, long)]
    quiet: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Adjacency text, graph6, or a counterexample export block.
    file: PathBuf,
    /// Conjecture id; repeatable. Defaults to the id inside an export block.
    #[arg(long = "conjecture", short = 'c')]
    conjectures: Vec<u32>,
    /// Check every catalog conjecture; exit 0 if at least one is violated.
    #[arg(long, conflicts_with = "conjectures")]
    all: bool,
    /// Margin a violation must exceed.
    #[arg(long, default_value_t = DEFAULT_STRICT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// generations.csv files, one per run.
    files: Vec<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search(a) => search(a),
        Command::Verify(a) => verify(a),
        Command::Plotdata(a) => plotdata(a),
        Command::ListConjectures => list().map(|()| EXIT_FOUND),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::from(EXIT_FOUND),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::UnknownConjecture { .. } | Error::Parse { .. } => EXIT_USAGE,
                _ => EXIT_FAILURE,
            })
        }
    }
}

fn search_config(a: &SearchArgs) -> Result<SearchConfig, Error> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<SearchConfig>(&text).map_err(|e| Error::config("config", e.message().to_string()))?
        }
        None => {
            let id = a
                .conjecture
                .ok_or_else(|| Error::config("conjecture", "required without --config"))?;
            let n = a.n.ok_or_else(|| Error::config("n", "required without --config"))?;
            SearchConfig::new(n, ConjectureId::new(id)?)
        }
    };
    if let Some(id) = a.conjecture {
        cfg.conjecture = ConjectureId::new(id)?;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(v) = a.batch {
        cfg.total_batch = v;
    }
    if let Some(v) = a.instances {
        cfg.instances = v;
    }
    if let Some(v) = a.generations {
        cfg.max_generations = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.seed_fraction {
        cfg.generation.seed_fraction = v;
    }
    if let Some(v) = a.epsilon {
        cfg.generation.epsilon_random_frac = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.generation.learning_rate = v;
    }
    if let Some(v) = &a.hidden {
        cfg.generation.hidden_sizes = v.clone();
    }
    if a.keep_going {
        cfg.halt_on_counterexample = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn search(a: SearchArgs) -> Result<u8, Error> {
    let cfg = search_config(&a)?;
    let root = a.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    let started = Local::now();
    let dir = run::create_run_dir(&root, started, cfg.master_seed)?;
    eprintln!("run directory: {}", dir.display());

    let quiet = a.quiet;
    let observer = move |i: usize, s: &lapsearch::engine::GenerationStats| {
        if !quiet && (s.generation % 10 == 0 || s.counterexample_found) {
            eprintln!(
                "instance {i} generation {}: best {:.6} mean {:.6} incumbent {:.6}{}",
                s.generation,
                s.best_reward,
                s.mean_reward,
                s.global_best_reward,
                if s.counterexample_found { " (counterexample)" } else { "" }
            );
        }
    };
    let objective = Arc::new(ConjectureObjective::new(cfg.conjecture));
    let result = run_parallel_with(&cfg, objective, Some(&observer))?;
    let manifest = run::write_run(&dir, &cfg, &result, started, Local::now())?;

    print!("{}", run::summary_text(&cfg, &manifest.result));
    println!("{}", dir.display());
    if result.instances.iter().all(|r| r.failure.is_some()) {
        return Err(Error::Numerical {
            message: "every instance failed".into(),
            best_estimate: None,
        });
    }
    Ok(if result.found_counterexample() { EXIT_FOUND } else { EXIT_EXHAUSTED })
}

/// Reads a graph from adjacency text, an export block, or graph6.
fn read_graph(path: &Path) -> Result<(Graph, Option<ConjectureId>), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::config("file", format!("cannot read {}: {e}", path.display())))?;
    if text.contains('[') {
        if text.lines().any(|l| l.trim_start().starts_with("conjecture:")) {
            let block = parse_export_block(&text)?;
            return Ok((block.graph, Some(block.conjecture)));
        }
        return Ok((from_adjacency_text(&text)?, None));
    }
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Parse {
            location: "byte 0".into(),
            message: "empty input".into(),
        })?;
    Ok((from_graph6(line)?, None))
}

fn verify(a: VerifyArgs) -> Result<u8, Error> {
    let (graph, embedded) = read_graph(&a.file)?;
    let ids: Vec<ConjectureId> = if a.all {
        ConjectureId::all().collect()
    } else if !a.conjectures.is_empty() {
        a.conjectures.iter().map(|&id| ConjectureId::new(id)).collect::<Result<_, _>>()?
    } else if let Some(id) = embedded {
        vec![id]
    } else {
        return Err(Error::config("conjecture", "give --conjecture or --all"));
    };

    let mut violated = Vec::new();
    for id in &ids {
        let c = verify_counterexample(&graph, *id, a.tol)?;
        match &c {
            Certification::Certified(r) => {
                violated.push(*id);
                println!(
                    "conjecture {id} ({}): violated mu = {:.12} bound = {:.12} margin = {:.6e} residual = {:.1e} witness {}",
                    id.spec().form,
                    r.mu,
                    r.bound,
                    r.margin,
                    r.residual,
                    r.witness
                );
            }
            Certification::Rejected(why) => println!("conjecture {id} ({}): holds, {why}", id.spec().form),
        }
    }
    if a.all {
        let list: Vec<String> = violated.iter().map(ToString::to_string).collect();
        println!("violated: {}", list.join(" "));
    }
    let ok = if a.all { !violated.is_empty() } else { violated.len() == ids.len() };
    Ok(if ok { EXIT_FOUND } else { EXIT_FAILURE })
}

fn plotdata(a: PlotArgs) -> Result<u8, Error> {
    if a.files.is_empty() {
        return Err(Error::config("inputs", "at least one generations.csv is required"));
    }
    let mut runs = Vec::with_capacity(a.files.len());
    for path in &a.files {
        let text = fs::read_to_string(path).map_err(|e| Error::config("inputs", format!("cannot read {}: {e}", path.display())))?;
        runs.push(run::read_csv(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })?);
    }
    let series = run::aggregate(&runs)?;
    match &a.out {
        Some(path) => run::write_plot_csv(io::BufWriter::new(fs::File::create(path)?), &series)?,
        None => run::write_plot_csv(io::stdout().lock(), &series)?,
    }
    Ok(EXIT_FOUND)
}

fn list() -> Result<(), Error> {
    let mut out = io::stdout().lock();
    for e in list_conjectures() {
        writeln!(out, "{:>2}  {:<10}  {}", e.id, e.form.to_string(), e.formula)?;
    }
    Ok(())
}
