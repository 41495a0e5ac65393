use super::{Action, ActionKind, EnvSpec, Environment, Step, Termination};
use crate::error::Result;
use crate::prng::seed_stream;

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;
const GOAL_BONUS: f64 = 100.0;

/// Under-powered car in a valley. Observation is `[position, velocity]`;
/// actions 0, 1, 2 push left, coast, push right. Each step costs 1 and
/// reaching the flag pays a one-off bonus, so a return of -10 means the flag
/// was reached in 110 steps.
#[derive(Debug, Clone, Default)]
pub struct MountainCar {
    position: f64,
    velocity: f64,
    steps: u32,
}

impl MountainCar {
    pub const MAX_STEPS: u32 = 200;
    pub const TARGET: f64 = -10.0;

    pub fn spec() -> EnvSpec {
        EnvSpec {
            name: "mountaincar".into(),
            observation_size: 2,
            action_kind: ActionKind::Discrete(3),
            max_steps: Self::MAX_STEPS,
            target_fitness: Self::TARGET,
        }
    }

    pub fn set_state(&mut self, position: f64, velocity: f64) {
        self.position = position;
        self.velocity = velocity;
    }
}

impl Environment for MountainCar {
    fn spec(&self) -> EnvSpec {
        Self::spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = seed_stream(seed, 0);
        self.position = -0.6 + 0.2 * rng.next_unit();
        self.velocity = 0.0;
        self.steps = 0;
        vec![self.position, self.velocity]
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        let a = action.expect_discrete(3)?;
        self.velocity += (a as f64 - 1.0) * FORCE - (3.0 * self.position).cos() * GRAVITY;
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position = (self.position + self.velocity).clamp(MIN_POSITION, MAX_POSITION);
        if self.position == MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
        self.steps += 1;

        let mut reward = -1.0;
        let termination = if self.position >= GOAL_POSITION {
            reward += GOAL_BONUS;
            Some(Termination::Goal)
        } else if self.steps >= Self::MAX_STEPS {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        Ok(Step {
            observation: vec![self.position, self.velocity],
            reward,
            termination,
        })
    }
}
