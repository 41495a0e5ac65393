//! Reference NEAT: speciation, fitness sharing, parent selection and the
//! whole-genome reproduction oracle.

mod generation;
mod reproduce;
mod select;
mod species;

pub use generation::{step_generation, EvolutionState, GenStats, ReferenceReproducer, Reproducer};
pub use reproduce::{
    reproduce_reference, ChildStreams, ReproStats, Stage, ATTRIBUTE_LIMIT, REPLACE_RANGE,
};
pub use select::{select_parents, Mating, MatingPlan};
pub use species::{
    compatibility_distance, remove_stagnant, share_fitness, speciate, Species, SpeciesPartition,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gene::Activation;

/// Probabilities and coefficients steering reproduction and speciation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeatParams {
    /// Chance that a matched attribute is taken from the fitter parent.
    pub crossover_bias: f64,
    pub perturb_rate: f64,
    pub perturb_power: f64,
    pub replace_rate: f64,
    pub add_node_prob: f64,
    pub add_conn_prob: f64,
    pub delete_node_prob: f64,
    pub delete_conn_prob: f64,
    pub max_node_deletions: u32,
    pub survival_fraction: f64,
    pub compat_coeff_unmatched: f64,
    pub compat_coeff_weight: f64,
    pub compat_threshold: f64,
    /// Generations without improvement before a species is dropped; 0 disables.
    pub species_stagnation: u32,
    pub elitism: usize,
    /// Activation given to nodes created by splitting a connection.
    pub default_activation: Activation,
}

impl Default for NeatParams {
    fn default() -> Self {
        NeatParams {
            crossover_bias: 0.5,
            perturb_rate: 0.8,
            perturb_power: 0.5,
            replace_rate: 0.1,
            add_node_prob: 0.03,
            add_conn_prob: 0.05,
            delete_node_prob: 0.02,
            delete_conn_prob: 0.05,
            max_node_deletions: 2,
            survival_fraction: 0.2,
            compat_coeff_unmatched: 1.0,
            compat_coeff_weight: 0.5,
            compat_threshold: 3.0,
            species_stagnation: 15,
            elitism: 2,
            default_activation: Activation::Sigmoid,
        }
    }
}

impl NeatParams {
    /// Every mutation disabled; crossover untouched.
    pub fn without_mutation(self) -> Self {
        NeatParams {
            perturb_rate: 0.0,
            replace_rate: 0.0,
            add_node_prob: 0.0,
            add_conn_prob: 0.0,
            delete_node_prob: 0.0,
            delete_conn_prob: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("crossover_bias", self.crossover_bias),
            ("perturb_rate", self.perturb_rate),
            ("replace_rate", self.replace_rate),
            ("add_node_prob", self.add_node_prob),
            ("add_conn_prob", self.add_conn_prob),
            ("delete_node_prob", self.delete_node_prob),
            ("delete_conn_prob", self.delete_conn_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.perturb_rate + self.replace_rate > 1.0 {
            return Err(Error::Config(
                "perturb_rate + replace_rate exceeds 1".into(),
            ));
        }
        if !(self.survival_fraction > 0.0 && self.survival_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "survival_fraction = {} not in (0, 1]",
                self.survival_fraction
            )));
        }
        let reals = [
            ("perturb_power", self.perturb_power),
            ("compat_coeff_unmatched", self.compat_coeff_unmatched),
            ("compat_coeff_weight", self.compat_coeff_weight),
            ("compat_threshold", self.compat_threshold),
        ];
        for (name, x) in reals {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} = {x} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}
