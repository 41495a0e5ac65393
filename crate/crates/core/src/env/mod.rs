//! Deterministic control tasks and the episode runner that turns a genome
//! into a fitness value.

mod cartpole;
mod mountain_car;
mod xor;

use serde::{Deserialize, Serialize};

pub use cartpole::CartPole;
pub use mountain_car::MountainCar;
pub use xor::Xor;

use crate::adam::Network;
use crate::error::{Error, Result};
use crate::gene::Genome;
use crate::interconnect::HwConfig;
use crate::prng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Binary,
    Discrete(usize),
    Continuous(usize),
}

impl ActionKind {
    /// Network outputs needed to drive this action.
    pub fn output_count(self) -> usize {
        match self {
            ActionKind::Binary => 1,
            ActionKind::Discrete(n) | ActionKind::Continuous(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub observation_size: usize,
    pub action_kind: ActionKind,
    pub max_steps: u32,
    pub target_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Binary(bool),
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    fn expect_binary(&self) -> Result<bool> {
        match self {
            Action::Binary(b) => Ok(*b),
            other => Err(Error::InvalidAction(format!(
                "expected binary action, got {other:?}"
            ))),
        }
    }

    fn expect_discrete(&self, n: usize) -> Result<usize> {
        match self {
            Action::Discrete(a) if *a < n => Ok(*a),
            other => Err(Error::InvalidAction(format!(
                "expected discrete action below {n}, got {other:?}"
            ))),
        }
    }

    fn expect_continuous(&self, n: usize) -> Result<&[f64]> {
        match self {
            Action::Continuous(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
            other => Err(Error::InvalidAction(format!(
                "expected {n} finite values, got {other:?}"
            ))),
        }
    }
}

/// Reads network outputs as an action: binary thresholds at 0.5, discrete
/// takes the argmax with ties going to the lowest index.
pub fn outputs_to_action(kind: ActionKind, outputs: &[f64]) -> Result<Action> {
    if outputs.len() != kind.output_count() {
        return Err(Error::InvalidAction(format!(
            "{kind:?} needs {} outputs, network produced {}",
            kind.output_count(),
            outputs.len()
        )));
    }
    Ok(match kind {
        ActionKind::Binary => Action::Binary(outputs[0] >= 0.5),
        ActionKind::Discrete(_) => {
            let mut best = 0;
            for (i, &v) in outputs.iter().enumerate().skip(1) {
                if v > outputs[best] {
                    best = i;
                }
            }
            Action::Discrete(best)
        }
        ActionKind::Continuous(_) => Action::Continuous(outputs.to_vec()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Failure,
    Goal,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub termination: Option<Termination>,
}

pub trait Environment {
    fn spec(&self) -> EnvSpec;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &Action) -> Result<Step>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Cartpole,
    Mountaincar,
    Xor,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Cartpole, EnvKind::Mountaincar, EnvKind::Xor];

    pub fn spec(self) -> EnvSpec {
        match self {
            EnvKind::Cartpole => CartPole::spec(),
            EnvKind::Mountaincar => MountainCar::spec(),
            EnvKind::Xor => Xor::spec(),
        }
    }

    pub fn make(self) -> Box<dyn Environment + Send> {
        match self {
            EnvKind::Cartpole => Box::new(CartPole::default()),
            EnvKind::Mountaincar => Box::new(MountainCar::default()),
            EnvKind::Xor => Box::new(Xor::default()),
        }
    }

    /// Network shape that fits this task: `(inputs, outputs)`.
    pub fn io_shape(self) -> (u16, u16) {
        let spec = self.spec();
        (
            spec.observation_size as u16,
            spec.action_kind.output_count() as u16,
        )
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvKind::Cartpole),
            "mountaincar" => Ok(EnvKind::Mountaincar),
            "xor" => Ok(EnvKind::Xor),
            other => Err(Error::Config(format!("unknown environment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub total_reward: f64,
    pub steps: u32,
    pub terminated: Termination,
}

pub fn run_episode(net: &Network, env: &mut dyn Environment, seed: u64) -> Result<EpisodeResult> {
    let spec = env.spec();
    let mut obs = env.reset(seed);
    let mut total_reward = 0.0;
    for steps in 1..=spec.max_steps {
        let action = outputs_to_action(spec.action_kind, &net.activate(&obs)?)?;
        let step = env.step(&action)?;
        total_reward += step.reward;
        if let Some(terminated) = step.termination {
            return Ok(EpisodeResult {
                total_reward,
                steps,
                terminated,
            });
        }
        obs = step.observation;
    }
    Ok(EpisodeResult {
        total_reward,
        steps: spec.max_steps,
        terminated: Termination::TimeLimit,
    })
}

/// Fitness of one genome together with the inference work it cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub fitness: f64,
    pub inferences: u64,
    pub adam_cycles: u64,
    pub mac_count: u64,
}

/// Seed of episode `index` for a given evaluation seed.
pub fn episode_seed(seed: u64, index: u32) -> u64 {
    derive_seed(seed, index as u64)
}

/// Mean episode return over `episodes` seeded episodes.
pub fn evaluate_fitness(
    genome: &Genome,
    env: EnvKind,
    episodes: u32,
    seed: u64,
    hw: &HwConfig,
) -> Result<FitnessReport> {
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    let (inputs, outputs) = env.io_shape();
    if genome.num_inputs != inputs || genome.num_outputs != outputs {
        return Err(Error::DimensionMismatch(format!(
            "genome {} is {}x{}, {:?} needs {inputs}x{outputs}",
            genome.genome_id, genome.num_inputs, genome.num_outputs, env
        )));
    }
    let net = Network::compile(genome, hw)?;
    let mut instance = env.make();
    let mut total = 0.0;
    let mut inferences = 0;
    for e in 0..episodes {
        let r = run_episode(&net, instance.as_mut(), episode_seed(seed, e))?;
        total += r.total_reward;
        inferences += r.steps as u64;
    }
    Ok(FitnessReport {
        fitness: total / episodes as f64,
        inferences,
        adam_cycles: inferences * net.cycles(),
        mac_count: inferences * net.mac_count(),
    })
}
