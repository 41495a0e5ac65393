use super::{Action, ActionKind, EnvSpec, Environment, Step, Termination};
use crate::error::Result;
use crate::prng::seed_stream;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole length.
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_LIMIT: f64 = 2.4;
const RESET_RANGE: f64 = 0.05;

/// Pole balancing on a cart with explicit Euler integration. Observation is
/// `[x, x_dot, theta, theta_dot]`; action 1 pushes right, 0 pushes left.
/// Every step, including the failing one, earns +1.
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    state: [f64; 4],
    steps: u32,
}

impl CartPole {
    pub const MAX_STEPS: u32 = 200;
    pub const TARGET: f64 = 195.0;

    pub fn spec() -> EnvSpec {
        EnvSpec {
            name: "cartpole".into(),
            observation_size: 4,
            action_kind: ActionKind::Binary,
            max_steps: Self::MAX_STEPS,
            target_fitness: Self::TARGET,
        }
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
    }
}

impl Environment for CartPole {
    fn spec(&self) -> EnvSpec {
        Self::spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = seed_stream(seed, 0);
        self.state = [0.0; 4].map(|_| RESET_RANGE * (2.0 * rng.next_unit() - 1.0));
        self.steps = 0;
        self.state.to_vec()
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        let push_right = action.expect_binary()?;
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if push_right { FORCE_MAG } else { -FORCE_MAG };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        self.steps += 1;

        let [x, _, theta, _] = self.state;
        let termination = if x.abs() > X_LIMIT || theta.abs() > THETA_LIMIT {
            Some(Termination::Failure)
        } else if self.steps >= Self::MAX_STEPS {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        Ok(Step {
            observation: self.state.to_vec(),
            reward: 1.0,
            termination,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_seeded_and_small() {
        let mut a = CartPole::default();
        let mut b = CartPole::default();
        let oa = a.reset(17);
        assert_eq!(oa, b.reset(17));
        assert_eq!(oa.len(), 4);
        assert!(oa.iter().all(|v| v.abs() <= RESET_RANGE));
        assert_ne!(oa, a.reset(18));
    }

    #[test]
    fn one_euler_step_by_hand() {
        let mut env = CartPole::default();
        env.set_state([0.0; 4]);
        let s = env.step(&Action::Binary(true)).unwrap();
        // upright pole: temp = 10/1.1, theta_acc = -temp / (0.5 * (4/3 - 0.1/1.1))
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        assert_eq!(s.observation[0], 0.0);
        assert!((s.observation[1] - 0.02 * x_acc).abs() < 1e-15);
        assert_eq!(s.observation[2], 0.0);
        assert!((s.observation[3] - 0.02 * theta_acc).abs() < 1e-15);
        assert_eq!(s.reward, 1.0);
        assert_eq!(s.termination, None);
    }

    #[test]
    fn tilted_pole_fails() {
        let mut env = CartPole::default();
        env.set_state([0.0, 0.0, 0.25, 0.0]);
        assert_eq!(
            env.step(&Action::Binary(false)).unwrap().termination,
            Some(Termination::Failure)
        );
        env.set_state([2.5, 0.0, 0.0, 0.0]);
        assert_eq!(
            env.step(&Action::Binary(false)).unwrap().termination,
            Some(Termination::Failure)
        );
    }

    #[test]
    fn rejects_non_binary_action() {
        let mut env = CartPole::default();
        env.reset(0);
        assert!(env.step(&Action::Discrete(1)).is_err());
    }
}
