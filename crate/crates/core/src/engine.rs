//! The generation loop.
//!
//! Per iteration the run generator is consumed in this order: new
//! architecture draws, crossover, mutation of the first offspring, mutation
//! of the second, then any shortfall draws during anabolism (leader first).

use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::arch_search::{self, ArchSearchConfig};
use crate::assimilation::{self, Agent};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{self, init_zero_params, ArchSolution, Architecture, Dataset};
use crate::report::{FinalState, IterationLog, Method, RunRecord, SolutionResult, StopReason};
use crate::variation::{self, MutationConfig};
use crate::RunRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Solutions per agent.
    pub size: usize,
    pub max_iter: usize,
    /// The run stops once the leader's best cost is below this.
    pub stop_cost: f64,
    pub max_dims: Architecture,
    pub mutation: MutationConfig,
    /// Its `max_dims` must equal the field above.
    pub arch_search: ArchSearchConfig,
    pub seed: u64,
}

impl EvolutionConfig {
    pub fn new(max_dims: Architecture, stop_cost: f64) -> Self {
        Self {
            size: 5,
            max_iter: 20_000,
            stop_cost,
            arch_search: ArchSearchConfig::new(max_dims.clone()),
            max_dims,
            mutation: MutationConfig::default(),
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::config("size must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        if !(self.stop_cost > 0.0 && self.stop_cost.is_finite()) {
            return Err(Error::config(format!(
                "stop_cost must be positive, got {}",
                self.stop_cost
            )));
        }
        if self.arch_search.max_dims != self.max_dims {
            return Err(Error::config(format!(
                "architecture search bound {} differs from max_dims {}",
                self.arch_search.max_dims, self.max_dims
            )));
        }
        let space = self
            .max_dims
            .hidden()
            .iter()
            .try_fold(1usize, |acc, &w| acc.checked_mul(w))
            .unwrap_or(usize::MAX);
        if space < self.size {
            return Err(Error::config(format!(
                "max_dims {} allows only {space} architectures, fewer than size {}",
                self.max_dims, self.size
            )));
        }
        self.mutation.validate()?;
        self.arch_search.validate()
    }
}

/// A run in progress. [`Evolution::step`] advances it by one iteration.
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    config: EvolutionConfig,
    train: &'a Dataset,
    rng: RunRng,
    leader: Agent,
    follower: Agent,
    iteration: usize,
    log: Vec<IterationLog>,
    stopped: Option<StopReason>,
}

impl<'a> Evolution<'a> {
    /// Both agents start from zero parameters and `size` distinct
    /// architectures proposed from the single donor `max_dims`.
    pub fn new(config: EvolutionConfig, train: &'a Dataset) -> Result<Self> {
        config.validate()?;
        if train.features() != config.max_dims.input() {
            return Err(Error::config(format!(
                "training data has {} features but max_dims {} expects {}",
                train.features(),
                config.max_dims,
                config.max_dims.input()
            )));
        }
        let mut rng = RunRng::seed_from_u64(config.seed);
        let params = init_zero_params(&config.max_dims);
        let seed_pool = [ArchSolution::new(
            config.max_dims.clone(),
            std::f64::consts::LN_2,
        )];
        let agent = |rng: &mut RunRng| -> Result<Agent> {
            let archs = arch_search::create_new_solutions(
                &seed_pool,
                &[],
                &config.arch_search,
                config.size,
                rng,
            )?;
            let solutions = arch_search::update_and_sort(&archs, &params, train)?;
            Ok(Agent::new(params.clone(), solutions))
        };
        let leader = agent(&mut rng)?;
        let follower = agent(&mut rng)?;
        Ok(Self {
            config,
            train,
            rng,
            leader,
            follower,
            iteration: 0,
            log: Vec::new(),
            stopped: None,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn leader(&self) -> &Agent {
        &self.leader
    }

    pub fn follower(&self) -> &Agent {
        &self.follower
    }

    /// Next iteration to run.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn log(&self) -> &[IterationLog] {
        &self.log
    }

    pub fn stopped(&self) -> Option<StopReason> {
        self.stopped
    }

    fn best(&self) -> f64 {
        self.leader.solutions[0].cost
    }

    fn push_log(&mut self, rate: f64, swapped: bool) {
        self.log.push(IterationLog {
            iteration: self.iteration,
            best_cost: self.best(),
            leader_best: self.leader.best_cost(),
            follower_best: Some(self.follower.best_cost()),
            mutation_rate: Some(rate),
            swapped: Some(swapped),
        });
    }

    /// Runs one iteration, logging one row. Returns the stop reason once the
    /// run has ended; further calls do nothing.
    ///
    /// When the leader's best cost is already below `stop_cost` the row
    /// records the unchanged state and no variation happens.
    pub fn step(&mut self) -> Result<Option<StopReason>> {
        if self.stopped.is_some() {
            return Ok(self.stopped);
        }
        if self.iteration >= self.config.max_iter {
            self.stopped = Some(StopReason::MaxIter);
            return Ok(self.stopped);
        }
        let rate = variation::mutation_rate_at(self.iteration, &self.config.mutation);
        if self.best() < self.config.stop_cost {
            self.push_log(rate, false);
            self.stopped = Some(StopReason::StopCost);
            return Ok(self.stopped);
        }

        let cfg = &self.config;
        let rng = &mut self.rng;
        let archs = arch_search::create_new_solutions(
            &self.leader.solutions,
            &self.follower.solutions,
            &cfg.arch_search,
            cfg.size,
            rng,
        )?;
        let (mut off1, mut off2) =
            variation::crossover_rows(&self.leader.params, &self.follower.params, rng)?;
        variation::mutate_in_place(&mut off1, rate, cfg.mutation.scale, rng);
        variation::mutate_in_place(&mut off2, rate, cfg.mutation.scale, rng);
        let l1 = arch_search::update_and_sort(&archs, &off1, self.train)?;
        let l2 = arch_search::update_and_sort(&archs, &off2, self.train)?;
        let (off_p, off_l) = assimilation::merge_two_offs(&off1, &off2, &l1, &l2, self.train)?;
        let offspring = Agent::new(off_p, off_l);
        let (mut leader, mut follower) = assimilation::anabolism(
            &self.leader,
            &self.follower,
            &offspring,
            &cfg.arch_search,
            self.train,
            rng,
        )?;
        let swapped = assimilation::update_lead_foll(&mut leader, &mut follower, self.train)?;
        if !leader.solutions[0].cost.is_finite() || !leader.params.is_finite() {
            return Err(Error::Numeric {
                iteration: self.iteration,
                last_finite_cost: Some(self.best()),
            });
        }
        self.leader = leader;
        self.follower = follower;
        self.push_log(rate, swapped);
        self.iteration += 1;
        if self.iteration >= self.config.max_iter {
            self.stopped = Some(StopReason::MaxIter);
        }
        Ok(self.stopped)
    }

    /// Steps until the run ends.
    pub fn run_to_end(&mut self) -> Result<StopReason> {
        loop {
            if let Some(reason) = self.step()? {
                return Ok(reason);
            }
        }
    }

    /// Scores every solution of both agents and closes the record.
    pub fn finish(self, test: Option<&Dataset>, wall_time_secs: f64) -> Result<RunRecord> {
        let stop_reason = self.stopped.unwrap_or(StopReason::MaxIter);
        let leader = score(&self.leader, self.train, test)?;
        let follower = score(&self.follower, self.train, test)?;
        Ok(RunRecord {
            method: Method::Diga,
            log: self.log,
            final_state: Some(FinalState {
                leader,
                follower,
                iterations: self.iteration,
                stop_reason,
                wall_time_secs,
            }),
        })
    }
}

fn accuracy(agent: &Agent, arch: &Architecture, data: &Dataset) -> Result<f64> {
    Ok(model::predict(&agent.params, arch, data.x(), data.y())?.accuracy)
}

fn score(agent: &Agent, train: &Dataset, test: Option<&Dataset>) -> Result<Vec<SolutionResult>> {
    agent
        .solutions
        .iter()
        .map(|s| {
            Ok(SolutionResult {
                arch: s.arch.clone(),
                cost: s.cost,
                train_accuracy: accuracy(agent, &s.arch, train)?,
                test_accuracy: test.map(|t| accuracy(agent, &s.arch, t)).transpose()?,
            })
        })
        .collect()
}

/// Runs one evolution to completion.
pub fn run_evolution(
    config: EvolutionConfig,
    train: &Dataset,
    test: Option<&Dataset>,
) -> Result<RunRecord> {
    if let Some(t) = test {
        if t.features() != train.features() {
            return Err(Error::config(format!(
                "test data has {} features, training data {}",
                t.features(),
                train.features()
            )));
        }
    }
    let start = Instant::now();
    let mut evo = Evolution::new(config, train)?;
    evo.run_to_end()?;
    evo.finish(test, start.elapsed().as_secs_f64())
}

/// Runs independent evolutions, one per config, in parallel when enabled.
/// Results come back in config order.
pub fn run_sweep(
    configs: &[EvolutionConfig],
    train: &Dataset,
    test: Option<&Dataset>,
) -> Vec<Result<RunRecord>> {
    exec::map(configs, |c| run_evolution(c.clone(), train, test))
}
