//! Run configuration files, output directories, CSV logs and plot data.
//!
//! A run directory holds:
//!
//! ```text
//! config.toml             the search configuration, loadable with --config
//! generations.csv         one row per instance per generation
//! summary.txt             human-readable outcome
//! counterexample-<i>.txt  export block of instance i's certified find
//! instance-<i>.ckpt       final policy network of instance i
//! manifest.toml           written last, atomically
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Local};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::to_graph6;
use crate::parallel::{SearchConfig, SearchResult};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LAPSEARCH_OUT";
pub const DEFAULT_OUT_ROOT: &str = "runs";

pub const CSV_COLUMNS: [&str; 7] = [
    "generation",
    "instance_id",
    "best_reward",
    "mean_reward",
    "global_best_reward",
    "edges_in_best",
    "wall_ms",
];

pub fn parse_config(text: &str) -> Result<SearchConfig> {
    let cfg: SearchConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SearchConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn config_to_toml(cfg: &SearchConfig) -> String {
    toml::to_string(cfg).expect("search config serializes to TOML")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub generation: usize,
    pub instance_id: usize,
    pub best_reward: f64,
    pub mean_reward: f64,
    pub global_best_reward: f64,
    pub edges_in_best: usize,
    pub wall_ms: f64,
}

/// Rows ordered by generation, then instance.
pub fn csv_rows(result: &SearchResult) -> Vec<CsvRow> {
    let mut rows: Vec<CsvRow> = result
        .instances
        .iter()
        .flat_map(|r| {
            r.stats.iter().map(move |s| CsvRow {
                generation: s.generation,
                instance_id: r.index,
                best_reward: s.best_reward,
                mean_reward: s.mean_reward,
                global_best_reward: s.global_best_reward,
                edges_in_best: s.edges_in_best,
                wall_ms: s.wall_time.as_secs_f64() * 1e3,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.generation, r.instance_id));
    rows
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_io)?;
    for r in rows {
        w.serialize(r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Reads a generations CSV, insisting on the exact column set and order.
pub fn read_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    for (k, want) in CSV_COLUMNS.iter().enumerate() {
        match headers.get(k) {
            Some(got) if got.trim() == *want => {}
            Some(got) => {
                return Err(Error::parse(
                    format!("column `{got}`"),
                    format!("expected column {k} to be `{want}`"),
                ))
            }
            None => return Err(Error::parse(format!("column `{want}`"), "missing column")),
        }
    }
    if let Some(extra) = headers.get(CSV_COLUMNS.len()) {
        return Err(Error::parse(format!("column `{extra}`"), "unexpected extra column"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse("record", e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, name) in CSV_COLUMNS.iter().enumerate() {
            let v = rec.get(k).unwrap_or("").trim();
            let ok = if k < 2 || k == 5 { v.parse::<usize>().is_ok() } else { v.parse::<f64>().is_ok() };
            if !ok {
                return Err(Error::parse(format!("line {line}, column `{name}`"), format!("bad value `{v}`")));
            }
        }
        rows.push(rec.deserialize(Some(&headers)).map_err(|e| Error::parse(format!("line {line}"), e.to_string()))?);
    }
    Ok(rows)
}

/// Averaged reward curves over several runs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub runs: usize,
    /// Per generation: mean over runs of the run-wide global best.
    pub mean_global_best: Vec<f64>,
    /// `per_instance[i][g]`: mean over runs that have instance `i`.
    pub per_instance: Vec<Vec<Option<f64>>>,
}

/// A run's global best at generation `g` is the max over its instances. Runs
/// that stopped early hold their last value.
pub fn aggregate(runs: &[Vec<CsvRow>]) -> Result<PlotSeries> {
    if runs.is_empty() {
        return Err(Error::config("inputs", "at least one run CSV is required"));
    }
    let generations = runs
        .iter()
        .flat_map(|r| r.iter().map(|row| row.generation + 1))
        .max()
        .unwrap_or(0);
    let instances = runs
        .iter()
        .flat_map(|r| r.iter().map(|row| row.instance_id + 1))
        .max()
        .unwrap_or(0);

    let mut total = vec![0.0; generations];
    let mut inst_sum = vec![vec![0.0; generations]; instances];
    let mut inst_count = vec![0usize; instances];
    for (k, run) in runs.iter().enumerate() {
        if run.is_empty() {
            return Err(Error::parse(format!("input {k}"), "no data rows"));
        }
        let mut per: Vec<Vec<Option<f64>>> = vec![vec![None; generations]; instances];
        for row in run {
            per[row.instance_id][row.generation] = Some(row.global_best_reward);
        }
        let mut run_best = vec![f64::NEG_INFINITY; generations];
        for (i, series) in per.iter().enumerate() {
            if series.iter().all(Option::is_none) {
                continue;
            }
            inst_count[i] += 1;
            let mut last = f64::NEG_INFINITY;
            for (g, v) in series.iter().enumerate() {
                if let Some(v) = v {
                    last = *v;
                }
                inst_sum[i][g] += last;
                run_best[g] = run_best[g].max(last);
            }
        }
        for (t, b) in total.iter_mut().zip(&run_best) {
            *t += b;
        }
    }
    let r = runs.len() as f64;
    Ok(PlotSeries {
        runs: runs.len(),
        mean_global_best: total.into_iter().map(|t| t / r).collect(),
        per_instance: inst_sum
            .into_iter()
            .zip(&inst_count)
            .map(|(s, &c)| s.into_iter().map(|v| (c > 0).then(|| v / c as f64)).collect())
            .collect(),
    })
}

pub fn write_plot_csv<W: Write>(mut out: W, series: &PlotSeries) -> Result<()> {
    write!(out, "generation,mean_global_best_reward")?;
    for i in 0..series.per_instance.len() {
        write!(out, ",instance_{i}_global_best_reward")?;
    }
    writeln!(out)?;
    for (g, m) in series.mean_global_best.iter().enumerate() {
        write!(out, "{g},{m}")?;
        for inst in &series.per_instance {
            match inst[g] {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub found_counterexample: bool,
    pub best_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_instance: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_graph6: Option<String>,
    pub generations_run: Vec<usize>,
    pub failures: Vec<String>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub started: String,
    pub finished: String,
    pub files: Vec<String>,
    pub result: ResultSummary,
    pub config: SearchConfig,
}

/// Creates a fresh timestamped directory under `root`; existing runs are never reused.
pub fn create_run_dir(root: &Path, started: DateTime<Local>, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let base = format!("{}-seed{seed}", started.format("%Y%m%d-%H%M%S"));
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes every artifact of a finished search into `dir`, manifest last.
pub fn write_run(
    dir: &Path,
    cfg: &SearchConfig,
    result: &SearchResult,
    started: DateTime<Local>,
    finished: DateTime<Local>,
) -> Result<RunManifest> {
    let mut files = Vec::new();
    let put = |name: String, bytes: &[u8], files: &mut Vec<String>| -> Result<()> {
        write_atomic(&dir.join(&name), bytes)?;
        files.push(name);
        Ok(())
    };

    put("config.toml".into(), config_to_toml(cfg).as_bytes(), &mut files)?;

    let mut csv_bytes = Vec::new();
    write_csv(&mut csv_bytes, &csv_rows(result))?;
    put("generations.csv".into(), &csv_bytes, &mut files)?;

    for rep in &result.instances {
        if let Some(rec) = &rep.counterexample {
            put(format!("counterexample-{}.txt", rep.index), rec.export_block().as_bytes(), &mut files)?;
        }
        if let Some(net) = &rep.network {
            let mut bytes = Vec::new();
            net.write_checkpoint(&mut bytes)?;
            put(format!("instance-{}.ckpt", rep.index), &bytes, &mut files)?;
        }
    }

    let summary = ResultSummary {
        found_counterexample: result.found_counterexample(),
        best_reward: result.best_reward,
        best_instance: result.best_instance,
        best_graph6: result.best_graph.as_ref().and_then(|g| to_graph6(g).ok()),
        generations_run: result.instances.iter().map(|r| r.stats.len()).collect(),
        failures: result
            .instances
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| format!("instance {}: {f}", r.index)))
            .collect(),
        wall_ms: result.wall_time.as_millis() as u64,
    };
    put("summary.txt".into(), summary_text(cfg, &summary).as_bytes(), &mut files)?;

    files.push("manifest.toml".into());
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        started: started.to_rfc3339(),
        finished: finished.to_rfc3339(),
        files,
        result: summary,
        config: cfg.clone(),
    };
    let text = toml::to_string(&manifest).expect("manifest serializes to TOML");
    write_atomic(&dir.join("manifest.toml"), text.as_bytes())?;
    Ok(manifest)
}

pub fn summary_text(cfg: &SearchConfig, s: &ResultSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "conjecture {} on n = {}: {} instances, total batch {}, master seed {}\n",
        cfg.conjecture, cfg.n, cfg.instances, cfg.total_batch, cfg.master_seed
    ));
    out.push_str(if s.found_counterexample {
        "outcome: counterexample found\n"
    } else {
        "outcome: budget exhausted\n"
    });
    out.push_str(&format!("best reward: {}\n", s.best_reward));
    if let (Some(i), Some(g6)) = (s.best_instance, &s.best_graph6) {
        out.push_str(&format!("best graph (instance {i}): {g6}\n"));
    }
    out.push_str(&format!("generations per instance: {:?}\n", s.generations_run));
    for f in &s.failures {
        out.push_str(&format!("failure: {f}\n"));
    }
    out.push_str(&format!("wall time: {} ms\n", s.wall_ms));
    out
}
