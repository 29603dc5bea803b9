//! The sample-simulate-update agent and its ablations.
//!
//! Between real attempts the agent proposes actions (policy mixed with the
//! object prior), scores each with a few noisy rollouts of its internal
//! model, learns from those imagined rewards, and acts once a proposal looks
//! good enough or it has considered `max_proposals` of them. Real attempts
//! run on the noiseless engine and feed the same policy update.

mod config;
mod policy;
mod prior;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{MeanStep, PriorMargin, SsupConfig};
pub use policy::{sample_policy, PolicyGradient, PolicyState, ProposalSource, ToolGaussian};
pub use prior::{sample_prior, sample_uniform, AnchorBox, PriorSampler, ProposalPrior};

use crate::error::AgentError;
use crate::level::{Action, LevelSpec};
use crate::physics::NoiseConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoPrior,
    NoSimulation,
    NoUpdating,
    Guessing,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Full, Variant::NoPrior, Variant::NoSimulation, Variant::NoUpdating, Variant::Guessing];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoPrior => "no-prior",
            Variant::NoSimulation => "no-simulation",
            Variant::NoUpdating => "no-updating",
            Variant::Guessing => "guessing",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected one of full, no-prior, no-simulation, no-updating, guessing)"))
    }
}

/// An imagined action and its estimated reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub action: Action,
    pub est_reward: f64,
    pub source: ProposalSource,
    pub sim_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptEntry {
    pub action: Action,
    pub reward: f64,
    pub solved: bool,
    pub min_goal_distance: f64,
    /// Proposals evaluated in simulation before this attempt was made.
    pub proposals: Vec<ProposalRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub level: String,
    pub variant: Variant,
    pub seed: u64,
    pub attempts: Vec<AttemptEntry>,
    pub solved: bool,
    pub attempts_used: usize,
    /// Internal-model rollouts run over the whole episode.
    pub simulations: usize,
}

/// Scores `action` by the mean reward of `n_sims` noisy rollouts.
pub fn evaluate<R: Rng + ?Sized>(
    level: &LevelSpec,
    action: &Action,
    source: ProposalSource,
    cfg: &SsupConfig,
    rng: &mut R,
) -> Result<ProposalRecord, AgentError> {
    let mut total = 0.0;
    for _ in 0..cfg.n_sims {
        total += level.attempt(Some(action), cfg.noise, rng.next_u64())?.reward;
    }
    Ok(ProposalRecord { action: *action, est_reward: total / cfg.n_sims as f64, source, sim_count: cfg.n_sims })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    ThinkMore,
    Act(Action),
}

/// Acts on the latest proposal if it clears the threshold, otherwise on the
/// best one once `max_proposals` have been considered.
pub fn decide(proposals: &[ProposalRecord], cfg: &SsupConfig) -> Decision {
    let Some(latest) = proposals.last() else {
        return Decision::ThinkMore;
    };
    if latest.est_reward >= cfg.act_threshold {
        return Decision::Act(latest.action);
    }
    if proposals.len() >= cfg.max_proposals {
        let mut best = &proposals[0];
        for p in &proposals[1..] {
            if p.est_reward > best.est_reward {
                best = p;
            }
        }
        return Decision::Act(best.action);
    }
    Decision::ThinkMore
}

/// Fits the initial policy from the object prior (or the uniform
/// distribution when `prior` says so).
pub fn init_policy<R: Rng + ?Sized>(
    level: &LevelSpec,
    prior: &ProposalPrior,
    cfg: &SsupConfig,
    rng: &mut R,
) -> Result<PolicyState, AgentError> {
    PolicyState::init(level, prior, cfg, rng)
}

pub fn update_policy(policy: &PolicyState, action: &Action, reward: f64, cfg: &SsupConfig) -> PolicyState {
    policy.update(action, reward, cfg)
}

/// Plays one level until it is solved or `max_attempts` is reached.
pub fn run_episode(level: &LevelSpec, cfg: &SsupConfig, variant: Variant, seed: u64) -> Result<EpisodeLog, AgentError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = match variant {
        Variant::NoPrior | Variant::Guessing => ProposalPrior::Uniform,
        _ => ProposalPrior::Object(PriorSampler::new(level, cfg)?),
    };
    let mut policy = match variant {
        Variant::Full | Variant::NoPrior | Variant::NoSimulation => Some(init_policy(level, &prior, cfg, &mut rng)?),
        Variant::NoUpdating | Variant::Guessing => None,
    };

    let mut log = EpisodeLog {
        level: level.name.clone(),
        variant,
        seed,
        attempts: Vec::new(),
        solved: false,
        attempts_used: 0,
        simulations: 0,
    };

    while log.attempts.len() < cfg.max_attempts {
        let mut proposals = Vec::new();
        let action = match variant {
            Variant::Guessing => sample_uniform(level, cfg, &mut rng)?,
            Variant::NoSimulation => {
                let policy = policy.as_ref().expect("policy variants keep a policy");
                sample_policy(policy, &prior, level, cfg, &mut rng)?.0
            }
            Variant::Full | Variant::NoPrior | Variant::NoUpdating => loop {
                let (action, source) = match &policy {
                    Some(p) => sample_policy(p, &prior, level, cfg, &mut rng)?,
                    None => (prior.sample(level, cfg, &mut rng)?, ProposalSource::Prior),
                };
                let record = evaluate(level, &action, source, cfg, &mut rng)?;
                log.simulations += record.sim_count;
                if let Some(p) = policy.as_mut() {
                    *p = p.update(&record.action, record.est_reward, cfg);
                }
                proposals.push(record);
                if let Decision::Act(a) = decide(&proposals, cfg) {
                    break a;
                }
            },
        };

        let outcome = level.attempt(Some(&action), NoiseConfig::NONE, 0)?;
        if let Some(p) = policy.as_mut() {
            *p = p.update(&action, outcome.reward, cfg);
        }
        log.attempts.push(AttemptEntry {
            action,
            reward: outcome.reward,
            solved: outcome.solved,
            min_goal_distance: outcome.min_goal_distance,
            proposals,
        });
        if outcome.solved {
            log.solved = true;
            break;
        }
    }
    log.attempts_used = log.attempts.len();
    Ok(log)
}
