use super::{Action, ActionKind, EnvSpec, Environment, Step, Termination};
use crate::error::Result;

const CASES: [([f64; 2], f64); 4] = [
    ([0.0, 0.0], 0.0),
    ([0.0, 1.0], 1.0),
    ([1.0, 0.0], 1.0),
    ([1.0, 1.0], 0.0),
];

/// The four XOR cases presented one per step. Each step pays
/// `1 - (output - expected)^2`, so a perfect network scores 4.
#[derive(Debug, Clone, Default)]
pub struct Xor {
    case: usize,
}

impl Xor {
    pub const MAX_FITNESS: f64 = 4.0;
    pub const TARGET: f64 = 3.9;

    pub fn spec() -> EnvSpec {
        EnvSpec {
            name: "xor".into(),
            observation_size: 2,
            action_kind: ActionKind::Continuous(1),
            max_steps: CASES.len() as u32,
            target_fitness: Self::TARGET,
        }
    }
}

impl Environment for Xor {
    fn spec(&self) -> EnvSpec {
        Self::spec()
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.case = 0;
        CASES[0].0.to_vec()
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        let out = action.expect_continuous(1)?[0];
        let err = out - CASES[self.case].1;
        self.case += 1;
        let (observation, termination) = match CASES.get(self.case) {
            Some((inputs, _)) => (inputs.to_vec(), None),
            None => (vec![0.0; 2], Some(Termination::TimeLimit)),
        };
        Ok(Step {
            observation,
            reward: 1.0 - err * err,
            termination,
        })
    }
}
