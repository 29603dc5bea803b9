use serde::{Deserialize, Serialize};

use crate::error::AgentError;
use crate::physics::NoiseConfig;

/// Horizontal slack added on each side of an object's box by the prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMargin {
    /// A fixed length in world units.
    Fixed(f64),
    /// A fraction of the anchoring object's width.
    WidthFraction(f64),
}

impl PriorMargin {
    pub fn for_width(&self, width: f64) -> f64 {
        match *self {
            PriorMargin::Fixed(m) => m,
            PriorMargin::WidthFraction(f) => f * width,
        }
    }
}

/// How the policy means are moved by an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanStep {
    /// Plain score-function gradient, `(x - mu) / sigma^2`.
    Vanilla,
    /// Gradient preconditioned by the inverse Fisher information, `x - mu`.
    Fisher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsupConfig {
    /// Noisy rollouts per proposal.
    pub n_sims: usize,
    /// Proposals considered before acting on the best one.
    pub max_proposals: usize,
    pub act_threshold: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    /// Prior samples per tool used to initialize the policy.
    pub init_samples: usize,
    pub max_attempts: usize,
    pub noise: NoiseConfig,
    pub prior_margin: PriorMargin,
    /// Floor on every policy standard deviation, world units.
    pub sigma_min: f64,
    /// Weight kept by the reward baseline on each update.
    pub baseline_decay: f64,
    pub mean_step: MeanStep,
    /// Rejection-sampling budget when looking for a legal placement.
    pub placement_tries: usize,
}

impl Default for SsupConfig {
    fn default() -> Self {
        SsupConfig {
            n_sims: 4,
            max_proposals: 5,
            act_threshold: 0.8,
            epsilon: 0.1,
            learning_rate: 0.1,
            init_samples: 10,
            max_attempts: 25,
            noise: NoiseConfig::new(0.2, 0.2),
            prior_margin: PriorMargin::WidthFraction(0.5),
            sigma_min: 5.0,
            baseline_decay: 0.9,
            mean_step: MeanStep::Fisher,
            placement_tries: 2000,
        }
    }
}

impl SsupConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |m: &str| Err(AgentError::Config(m.to_string()));
        if self.n_sims == 0 {
            return fail("n_sims must be >= 1");
        }
        if self.max_proposals == 0 {
            return fail("max_proposals must be >= 1");
        }
        if self.max_attempts == 0 {
            return fail("max_attempts must be >= 1");
        }
        if self.init_samples == 0 {
            return fail("init_samples must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail("epsilon must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.act_threshold) {
            return fail("act_threshold must lie in [0, 1]");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be > 0");
        }
        if !(self.sigma_min.is_finite() && self.sigma_min > 0.0) {
            return fail("sigma_min must be > 0");
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return fail("baseline_decay must lie in [0, 1)");
        }
        if self.placement_tries == 0 {
            return fail("placement_tries must be >= 1");
        }
        self.noise.validate().map_err(|e| AgentError::Config(e.to_string()))
    }
}
