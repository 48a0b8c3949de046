//! Decentralized search: independent instances over a split batch.
//!
//! Instance `i` seeds ChaCha8 with the master seed on stream `i`, so its
//! trajectory never depends on thread scheduling. The shared best record is
//! written at generation boundaries and read only for reporting.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::certificate::CounterexampleRecord;
use crate::conjecture::ConjectureId;
use crate::engine::{CeInstance, ConjectureObjective, GenerationConfig, GenerationStats, Objective};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::PolicyNetwork;

/// Hyperparameters that may differ per instance. Unset fields fall back to
/// the search-wide [`GenerationConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceOverride {
    pub instance: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elite_learn_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elite_survive_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_random_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub conjecture: ConjectureId,
    pub total_batch: usize,
    pub instances: usize,
    pub max_generations: usize,
    pub master_seed: u64,
    pub halt_on_counterexample: bool,
    /// Shared settings; `batch_size` and `rng_seed` are filled in per instance.
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<InstanceOverride>,
}

impl SearchConfig {
    pub fn new(n: usize, conjecture: ConjectureId) -> Self {
        Self {
            n,
            conjecture,
            total_batch: 1000,
            instances: 5,
            max_generations: 400,
            master_seed: 0,
            halt_on_counterexample: true,
            generation: GenerationConfig::default(),
            overrides: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("n", format!("need at least 2 vertices, got {}", self.n)));
        }
        if self.instances == 0 {
            return Err(Error::config("instances", "must be at least 1"));
        }
        if self.total_batch < self.instances {
            return Err(Error::config(
                "total_batch",
                format!("{} is smaller than the instance count {}", self.total_batch, self.instances),
            ));
        }
        for o in &self.overrides {
            if o.instance >= self.instances {
                return Err(Error::config(
                    "overrides.instance",
                    format!("instance {} does not exist (instances = {})", o.instance, self.instances),
                ));
            }
        }
        for i in 0..self.instances {
            self.instance_config(i)?.validate()?;
        }
        Ok(())
    }

    /// The full generation config of instance `i`.
    pub fn instance_config(&self, i: usize) -> Result<GenerationConfig> {
        let sizes = split_batch(self.total_batch, self.instances)?;
        let mut c = self.generation.clone();
        c.batch_size = sizes[i];
        c.rng_seed = self.master_seed;
        c.halt_on_counterexample = self.halt_on_counterexample;
        for o in self.overrides.iter().filter(|o| o.instance == i) {
            if let Some(v) = o.elite_learn_frac {
                c.elite_learn_frac = v;
            }
            if let Some(v) = o.elite_survive_frac {
                c.elite_survive_frac = v;
            }
            if let Some(v) = o.seed_fraction {
                c.seed_fraction = v;
            }
            if let Some(v) = o.epsilon_random_frac {
                c.epsilon_random_frac = v;
            }
            if let Some(v) = o.learning_rate {
                c.learning_rate = v;
            }
            if let Some(v) = &o.hidden_sizes {
                c.hidden_sizes = v.clone();
            }
        }
        Ok(c)
    }
}

/// Splits `total` into `instances` shares differing by at most one, larger first.
pub fn split_batch(total: usize, instances: usize) -> Result<Vec<usize>> {
    if instances == 0 {
        return Err(Error::config("instances", "must be at least 1"));
    }
    if total < instances {
        return Err(Error::config(
            "total_batch",
            format!("{total} is smaller than the instance count {instances}"),
        ));
    }
    let (q, r) = (total / instances, total % instances);
    Ok((0..instances).map(|i| q + usize::from(i < r)).collect())
}

#[derive(Clone, Debug)]
pub struct InstanceReport {
    pub index: usize,
    pub batch_size: usize,
    pub stats: Vec<GenerationStats>,
    /// Best graph and reward this instance found.
    pub best: Option<(Graph, f64)>,
    pub counterexample: Option<CounterexampleRecord>,
    pub network: Option<PolicyNetwork>,
    pub failure: Option<String>,
}

/// One write to the shared best record.
#[derive(Clone, Debug, PartialEq)]
pub struct BestUpdate {
    pub instance: usize,
    pub generation: usize,
    pub instance_best: f64,
    pub global_best: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_graph: Option<Graph>,
    pub best_reward: f64,
    pub best_instance: Option<usize>,
    pub counterexamples: Vec<CounterexampleRecord>,
    pub instances: Vec<InstanceReport>,
    /// Every write to the shared best record, in the order it happened.
    pub history: Vec<BestUpdate>,
    pub wall_time: Duration,
}

impl SearchResult {
    pub fn found_counterexample(&self) -> bool {
        !self.counterexamples.is_empty()
    }
}

#[derive(Default)]
struct Shared {
    best: Option<(Graph, f64, usize)>,
    history: Vec<BestUpdate>,
}

/// Called after each generation with the instance index and its stats.
pub type Observer<'a> = &'a (dyn Fn(usize, &GenerationStats) + Sync);

pub fn run_parallel(cfg: &SearchConfig) -> Result<SearchResult> {
    let objective = Arc::new(ConjectureObjective::new(cfg.conjecture));
    run_parallel_with(cfg, objective, None)
}

/// Runs the search with an arbitrary objective. The conjecture id in `cfg`
/// is ignored here.
pub fn run_parallel_with(
    cfg: &SearchConfig,
    objective: Arc<dyn Objective>,
    observer: Option<Observer<'_>>,
) -> Result<SearchResult> {
    cfg.validate()?;
    let started = Instant::now();
    let stop = AtomicBool::new(false);
    let shared = Mutex::new(Shared::default());

    let reports: Vec<InstanceReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.instances)
            .map(|i| {
                let objective = Arc::clone(&objective);
                let (stop, shared) = (&stop, &shared);
                scope.spawn(move || run_instance(cfg, i, objective, stop, shared, observer))
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(i, h)| {
                h.join().unwrap_or_else(|_| InstanceReport {
                    index: i,
                    batch_size: 0,
                    stats: Vec::new(),
                    best: None,
                    counterexample: None,
                    network: None,
                    failure: Some("instance thread panicked".into()),
                })
            })
            .collect()
    });

    let shared = shared.into_inner().unwrap_or_else(|e| e.into_inner());
    let (best_graph, best_reward, best_instance) = match shared.best {
        Some((g, r, i)) => (Some(g), r, Some(i)),
        None => (None, f64::NEG_INFINITY, None),
    };
    let counterexamples = reports.iter().filter_map(|r| r.counterexample.clone()).collect();
    Ok(SearchResult {
        best_graph,
        best_reward,
        best_instance,
        counterexamples,
        instances: reports,
        history: shared.history,
        wall_time: started.elapsed(),
    })
}

fn run_instance(
    cfg: &SearchConfig,
    i: usize,
    objective: Arc<dyn Objective>,
    stop: &AtomicBool,
    shared: &Mutex<Shared>,
    observer: Option<Observer<'_>>,
) -> InstanceReport {
    let mut report = InstanceReport {
        index: i,
        batch_size: 0,
        stats: Vec::new(),
        best: None,
        counterexample: None,
        network: None,
        failure: None,
    };
    let mut inst = match cfg
        .instance_config(i)
        .and_then(|c| CeInstance::new(cfg.n, c, objective, i as u64))
    {
        Ok(inst) => inst,
        Err(e) => {
            report.failure = Some(e.to_string());
            return report;
        }
    };
    report.batch_size = inst.config().batch_size;

    for _ in 0..cfg.max_generations {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stats = match inst.run_generation() {
            Ok(s) => s,
            Err(e) => {
                report.failure = Some(format!("generation {}: {e}", inst.generation()));
                break;
            }
        };
        if let Some(inc) = inst.incumbent() {
            let mut sh = shared.lock().unwrap_or_else(|e| e.into_inner());
            if sh.best.as_ref().is_none_or(|b| inc.reward > b.1) {
                sh.best = Some((inc.rollout.graph.clone(), inc.reward, i));
            }
            let global_best = sh.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1);
            sh.history.push(BestUpdate {
                instance: i,
                generation: stats.generation,
                instance_best: inc.reward,
                global_best,
            });
        }
        if let Some(obs) = observer {
            obs(i, &stats);
        }
        report.stats.push(stats);
        if inst.halted() {
            stop.store(true, Ordering::SeqCst);
            break;
        }
    }

    report.best = inst.incumbent().map(|s| (s.rollout.graph.clone(), s.reward));
    report.counterexample = inst.counterexample().cloned();
    report.network = Some(inst.network().clone());
    report
}
