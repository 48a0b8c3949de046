//! Single-instance cross-entropy generation loop.
//!
//! A rollout builds a graph one edge slot at a time. At step `t` the policy
//! sees `edge_bits ‖ one_hot(t)` and its boolean action is XOR-ed into slot
//! `t`. Starting from all-zero bits this is plain edge insertion; starting from
//! the incumbent graph the policy edits that graph instead.
//!
//! Each generation is composed of, in batch order:
//!
//! 1. the survivors of the previous generation (rewards cached),
//! 2. `⌈seed_fraction·batch⌉` rollouts starting at the incumbent's bits,
//! 3. `⌈epsilon_random_frac·batch⌉` rollouts with uniform-random actions,
//! 4. the remainder starting at zero bits.
//!
//! Earlier batch index wins reward ties.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{verify_counterexample, CounterexampleRecord, DEFAULT_STRICT_TOL};
use crate::conjecture::{reward, ConjectureId};
use crate::error::{Error, Result};
use crate::graph::{edge_slots, Graph};
use crate::policy::{NetworkArchitecture, PolicyNetwork, TrainBatch, DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE};

/// Scores graphs for the search. Higher is better.
pub trait Objective: Send + Sync {
    fn score(&self, g: &Graph) -> Result<f64>;

    /// Rewards above this are checked with [`Objective::certify`].
    fn certify_threshold(&self) -> Option<f64> {
        None
    }

    fn certify(&self, _g: &Graph) -> Result<Option<CounterexampleRecord>> {
        Ok(None)
    }
}

/// `µ(L) − bound` for one catalog conjecture.
#[derive(Clone, Copy, Debug)]
pub struct ConjectureObjective {
    pub id: ConjectureId,
    pub strict_tol: f64,
}

impl ConjectureObjective {
    pub fn new(id: ConjectureId) -> Self {
        Self {
            id,
            strict_tol: DEFAULT_STRICT_TOL,
        }
    }
}

impl Objective for ConjectureObjective {
    fn score(&self, g: &Graph) -> Result<f64> {
        reward(self.id, g)
    }

    fn certify_threshold(&self) -> Option<f64> {
        Some(self.strict_tol)
    }

    fn certify(&self, g: &Graph) -> Result<Option<CounterexampleRecord>> {
        Ok(verify_counterexample(g, self.id, self.strict_tol)?.record().cloned())
    }
}

/// Number of edges. Used to smoke-test the optimiser: the optimum is `K_n`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeCountObjective;

impl Objective for EdgeCountObjective {
    fn score(&self, g: &Graph) -> Result<f64> {
        Ok(g.edge_count() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolloutState {
    bits: Vec<bool>,
    position: usize,
}

impl RolloutState {
    pub fn new(initial_bits: Vec<bool>) -> Self {
        Self {
            bits: initial_bits,
            position: 0,
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_done(&self) -> bool {
        self.position >= self.bits.len()
    }

    /// Writes `bits ‖ one_hot(position)` into `out` (length `2·E_max`).
    pub fn write_observation(&self, out: &mut [f64]) -> Result<()> {
        if self.is_done() {
            return Err(Error::Lifecycle("observation requested from a finished rollout"));
        }
        let e = self.bits.len();
        if out.len() != 2 * e {
            return Err(Error::Shape {
                what: "observation buffer",
                expected: 2 * e,
                got: out.len(),
            });
        }
        for (o, &b) in out[..e].iter_mut().zip(&self.bits) {
            *o = b as u8 as f64;
        }
        out[e..].fill(0.0);
        out[e + self.position] = 1.0;
        Ok(())
    }

    pub fn observation(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; 2 * self.bits.len()];
        self.write_observation(&mut out)?;
        Ok(out)
    }

    /// XORs `action` into the current slot and advances.
    pub fn apply_action(&mut self, action: bool) -> Result<()> {
        if self.is_done() {
            return Err(Error::Lifecycle("action applied to a finished rollout"));
        }
        self.bits[self.position] ^= action;
        self.position += 1;
        Ok(())
    }
}

/// A finished rollout: where it started and what it did.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub start: Vec<bool>,
    pub actions: Vec<bool>,
    pub graph: Graph,
}

impl Rollout {
    /// Replays the rollout, yielding each `(observation, action)` pair.
    pub fn append_training_pairs(&self, batch: &mut TrainBatch) {
        let mut state = RolloutState::new(self.start.clone());
        for &a in &self.actions {
            let obs = state.observation().expect("replay stays within the rollout");
            batch.push(obs, a);
            state.apply_action(a).expect("replay stays within the rollout");
        }
    }
}

/// Runs a rollout on `n` vertices, asking `choose` for the action at each step.
pub fn rollout_with<F>(n: usize, initial_bits: &[bool], mut choose: F) -> Result<Rollout>
where
    F: FnMut(&RolloutState, &[f64]) -> Result<bool>,
{
    let slots = edge_slots(n);
    if initial_bits.len() != slots {
        return Err(Error::Shape {
            what: "initial bits",
            expected: slots,
            got: initial_bits.len(),
        });
    }
    let mut state = RolloutState::new(initial_bits.to_vec());
    let mut obs = vec![0.0; 2 * slots];
    let mut actions = Vec::with_capacity(slots);
    while !state.is_done() {
        state.write_observation(&mut obs)?;
        let a = choose(&state, &obs)?;
        actions.push(a);
        state.apply_action(a)?;
    }
    Ok(Rollout {
        start: initial_bits.to_vec(),
        actions,
        graph: Graph::from_bits(n, state.bits)?,
    })
}

/// Samples a rollout from the policy, or with uniform-random actions when
/// `epsilon_active` is set.
pub fn rollout<R: Rng>(
    net: &PolicyNetwork,
    n: usize,
    initial_bits: &[bool],
    epsilon_active: bool,
    rng: &mut R,
) -> Result<Rollout> {
    rollout_with(n, initial_bits, |_, obs| {
        if epsilon_active {
            Ok(rng.gen::<bool>())
        } else {
            let p = net.forward(obs)?;
            Ok(rng.gen::<f64>() < p[1])
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Set per instance by the parallel layer; not part of config files.
    #[serde(skip)]
    pub batch_size: usize,
    /// Share of the batch the policy is trained on.
    pub elite_learn_frac: f64,
    /// Share of the batch carried unchanged into the next generation.
    pub elite_survive_frac: f64,
    /// Share of rollouts that start from the incumbent graph.
    pub seed_fraction: f64,
    /// Share of rollouts with uniform-random actions.
    pub epsilon_random_frac: f64,
    pub learning_rate: f64,
    pub hidden_sizes: Vec<usize>,
    #[serde(skip)]
    pub rng_seed: u64,
    /// Stop after the generation in which a certified counterexample appears.
    #[serde(skip)]
    pub halt_on_counterexample: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            batch_size: 200,
            elite_learn_frac: 0.10,
            elite_survive_frac: 0.05,
            seed_fraction: 0.0,
            epsilon_random_frac: 0.0005,
            learning_rate: DEFAULT_LEARNING_RATE,
            hidden_sizes: DEFAULT_HIDDEN.to_vec(),
            rng_seed: 0,
            halt_on_counterexample: true,
        }
    }
}

/// Seed fraction used when incumbent seeding is switched on.
pub const DEFAULT_SEED_FRACTION: f64 = 0.25;

/// `⌈frac·total⌉`, ignoring floating-point noise just above an integer.
pub fn fraction_count(frac: f64, total: usize) -> usize {
    if frac <= 0.0 {
        return 0;
    }
    ((frac * total as f64) - 1e-9).ceil().max(1.0) as usize
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        for (name, v) in [
            ("elite_learn_frac", self.elite_learn_frac),
            ("elite_survive_frac", self.elite_survive_frac),
            ("seed_fraction", self.seed_fraction),
            ("epsilon_random_frac", self.epsilon_random_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.elite_survive_frac > 0.0 && self.elite_survive_frac <= self.elite_learn_frac && self.elite_learn_frac < 1.0) {
            return Err(Error::config(
                "elite_survive_frac",
                "need 0 < elite_survive_frac <= elite_learn_frac < 1",
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be finite and non-negative"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden_sizes", "layer widths must be positive"));
        }
        Ok(())
    }

    pub fn learn_count(&self) -> usize {
        fraction_count(self.elite_learn_frac, self.batch_size)
    }

    pub fn survivor_count(&self) -> usize {
        fraction_count(self.elite_survive_frac, self.batch_size)
    }

    pub fn seeded_count(&self) -> usize {
        fraction_count(self.seed_fraction, self.batch_size)
    }

    pub fn random_count(&self) -> usize {
        fraction_count(self.epsilon_random_frac, self.batch_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub rollout: Rollout,
    pub reward: f64,
}

/// Indices into `scored` of the learning set and the survivors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliteSelection {
    pub learn: Vec<usize>,
    pub survivors: Vec<usize>,
}

/// Ranks by reward (descending, earlier index first on ties). The learning set
/// is the top `⌈learn·batch⌉`, the survivors the top `⌈survive·batch⌉`; the
/// survivors are therefore part of the learning set.
pub fn select_elites(rewards: &[f64], cfg: &GenerationConfig) -> EliteSelection {
    assert!(!rewards.is_empty(), "cannot select elites from an empty batch");
    let mut order: Vec<usize> = (0..rewards.len()).collect();
    order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
    let learn = cfg.learn_count().min(order.len());
    let survive = cfg.survivor_count().min(learn);
    EliteSelection {
        learn: order[..learn].to_vec(),
        survivors: order[..survive].to_vec(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best reward among this generation's fresh rollouts.
    pub best_reward: f64,
    /// Mean reward of this generation's fresh rollouts.
    pub mean_reward: f64,
    /// Reward of the incumbent after this generation.
    pub global_best_reward: f64,
    pub edges_in_best: usize,
    pub loss: f64,
    pub counterexample_found: bool,
    pub wall_time: Duration,
}

impl GenerationStats {
    /// Everything except the wall time, for reproducibility checks.
    pub fn trajectory_key(&self) -> (usize, u64, u64, u64, usize, u64, bool) {
        (
            self.generation,
            self.best_reward.to_bits(),
            self.mean_reward.to_bits(),
            self.global_best_reward.to_bits(),
            self.edges_in_best,
            self.loss.to_bits(),
            self.counterexample_found,
        )
    }
}

/// One independent cross-entropy learner.
pub struct CeInstance {
    n: usize,
    cfg: GenerationConfig,
    objective: Arc<dyn Objective>,
    net: PolicyNetwork,
    rng: ChaCha8Rng,
    survivors: Vec<Scored>,
    incumbent: Option<Scored>,
    generation: usize,
    counterexample: Option<CounterexampleRecord>,
}

impl CeInstance {
    /// The RNG is ChaCha8 seeded with `cfg.rng_seed` on stream `stream`; the
    /// network seed is its first draw.
    pub fn new(n: usize, cfg: GenerationConfig, objective: Arc<dyn Objective>, stream: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("n", "need at least two vertices"));
        }
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(stream);
        let net_seed: u64 = rng.gen();
        let net = PolicyNetwork::new(NetworkArchitecture::for_vertices(n, &cfg.hidden_sizes), net_seed)?;
        Ok(Self {
            n,
            cfg,
            objective,
            net,
            rng,
            survivors: Vec::new(),
            incumbent: None,
            generation: 0,
            counterexample: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.cfg
    }

    pub fn network(&self) -> &PolicyNetwork {
        &self.net
    }

    pub fn incumbent(&self) -> Option<&Scored> {
        self.incumbent.as_ref()
    }

    pub fn survivors(&self) -> &[Scored] {
        &self.survivors
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn counterexample(&self) -> Option<&CounterexampleRecord> {
        self.counterexample.as_ref()
    }

    /// True once a counterexample is recorded and the config asks to halt.
    pub fn halted(&self) -> bool {
        self.counterexample.is_some() && self.cfg.halt_on_counterexample
    }

    /// Runs one generation. On error the instance keeps its previous state.
    pub fn run_generation(&mut self) -> Result<GenerationStats> {
        let started = Instant::now();
        let mut rng = self.rng.clone();
        let mut net = self.net.clone();
        let batch = self.cfg.batch_size;
        let zeros = vec![false; edge_slots(self.n)];

        let random = self.cfg.random_count().min(batch);
        let seeded = match &self.incumbent {
            Some(_) => self.cfg.seeded_count().min(batch - random),
            None => 0,
        };

        let mut fresh = Vec::with_capacity(batch);
        if let Some(inc) = &self.incumbent {
            let start = inc.rollout.graph.bits().to_vec();
            for _ in 0..seeded {
                fresh.push(rollout(&net, self.n, &start, false, &mut rng)?);
            }
        }
        for _ in 0..random {
            fresh.push(rollout(&net, self.n, &zeros, true, &mut rng)?);
        }
        while fresh.len() < batch {
            fresh.push(rollout(&net, self.n, &zeros, false, &mut rng)?);
        }

        let mut population: Vec<Scored> = self.survivors.clone();
        let fresh_offset = population.len();
        for r in fresh {
            let reward = self.objective.score(&r.graph)?;
            if !reward.is_finite() {
                return Err(Error::Numerical {
                    message: format!("objective returned {reward}"),
                    best_estimate: None,
                });
            }
            population.push(Scored { rollout: r, reward });
        }
        let rewards: Vec<f64> = population.iter().map(|s| s.reward).collect();
        let fresh_rewards = &rewards[fresh_offset..];
        let best_reward = fresh_rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean_reward = fresh_rewards.iter().sum::<f64>() / fresh_rewards.len() as f64;

        let selection = select_elites(&rewards, &self.cfg);
        let mut train = TrainBatch::default();
        for &i in &selection.learn {
            population[i].rollout.append_training_pairs(&mut train);
        }
        let loss = if train.is_empty() {
            0.0
        } else {
            net.train_step(&train, self.cfg.learning_rate)?
        };

        let top = &population[selection.learn[0]];
        let incumbent = match &self.incumbent {
            Some(inc) if inc.reward >= top.reward => inc.clone(),
            _ => top.clone(),
        };

        let mut counterexample = None;
        if self.counterexample.is_none() {
            if let Some(threshold) = self.objective.certify_threshold() {
                let mut candidates: Vec<usize> = (0..population.len()).filter(|&i| rewards[i] > threshold).collect();
                candidates.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
                for i in candidates {
                    if let Some(rec) = self.objective.certify(&population[i].rollout.graph)? {
                        counterexample = Some(rec);
                        break;
                    }
                }
            }
        }

        let survivors = selection.survivors.iter().map(|&i| population[i].clone()).collect();

        self.rng = rng;
        self.net = net;
        self.survivors = survivors;
        let stats = GenerationStats {
            generation: self.generation,
            best_reward,
            mean_reward,
            global_best_reward: incumbent.reward,
            edges_in_best: incumbent.rollout.graph.edge_count(),
            loss,
            counterexample_found: counterexample.is_some() || self.counterexample.is_some(),
            wall_time: started.elapsed(),
        };
        self.incumbent = Some(incumbent);
        if counterexample.is_some() {
            self.counterexample = counterexample;
        }
        self.generation += 1;
        Ok(stats)
    }
}
