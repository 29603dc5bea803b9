//! Gaussian-mixture policy over (tool, x, y) with a REINFORCE-style update.
//!
//! Each tool has a diagonal Gaussian over placement positions and a mixture
//! logit; tool weights are the softmax of the logits.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{MeanStep, SsupConfig};
use super::prior::{sample_legal, ProposalPrior};
use crate::error::AgentError;
use crate::level::{Action, LevelSpec};
use crate::math::Vec2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolGaussian {
    pub mean: Vec2,
    pub log_std: Vec2,
    pub logit: f64,
}

impl ToolGaussian {
    pub fn std(&self) -> Vec2 {
        Vec2::new(self.log_std.x.exp(), self.log_std.y.exp())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub tools: Vec<ToolGaussian>,
    /// Running mean of observed rewards.
    pub reward_baseline: f64,
    /// Upper clamp for standard deviations (the larger world extent).
    pub max_std: f64,
}

/// Derivatives of `log pi(action)` with respect to every policy parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGradient {
    pub mean: Vec<Vec2>,
    pub log_std: Vec<Vec2>,
    pub logit: Vec<f64>,
}

fn softmax(logits: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let max = logits.clone().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl PolicyState {
    /// Fits each tool's Gaussian to `init_samples` draws from `prior`.
    pub fn init<R: Rng + ?Sized>(
        level: &LevelSpec,
        prior: &ProposalPrior,
        cfg: &SsupConfig,
        rng: &mut R,
    ) -> Result<PolicyState, AgentError> {
        let bounds = level.bounds();
        let max_std = bounds.width().max(bounds.height());
        let mut tools = Vec::with_capacity(level.tools().len());
        for tool in 0..level.tools().len() {
            let samples: Vec<Vec2> = (0..cfg.init_samples)
                .map(|_| prior.sample_for_tool(level, tool, cfg, rng).map(|a| a.position))
                .collect::<Result<_, _>>()?;
            let n = samples.len() as f64;
            let mean = samples.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / n);
            let var = if samples.len() > 1 {
                samples.iter().fold(Vec2::ZERO, |acc, &p| {
                    let d = p - mean;
                    acc + Vec2::new(d.x * d.x, d.y * d.y)
                }) * (1.0 / (n - 1.0))
            } else {
                Vec2::ZERO
            };
            let log_std = |v: f64| v.sqrt().clamp(cfg.sigma_min, max_std).ln();
            tools.push(ToolGaussian { mean, log_std: Vec2::new(log_std(var.x), log_std(var.y)), logit: 0.0 });
        }
        Ok(PolicyState { tools, reward_baseline: 0.0, max_std })
    }

    pub fn weights(&self) -> Vec<f64> {
        softmax(self.tools.iter().map(|t| t.logit))
    }

    pub fn log_prob(&self, action: &Action) -> f64 {
        let w = self.weights();
        let t = &self.tools[action.tool];
        let std = t.std();
        let z = Vec2::new((action.position.x - t.mean.x) / std.x, (action.position.y - t.mean.y) / std.y);
        w[action.tool].ln() - 0.5 * z.length_squared() - t.log_std.x - t.log_std.y - 2.0 * LN_SQRT_2PI
    }

    pub fn grad_log_prob(&self, action: &Action) -> PolicyGradient {
        let w = self.weights();
        let k = action.tool;
        let n = self.tools.len();
        let mut g = PolicyGradient { mean: vec![Vec2::ZERO; n], log_std: vec![Vec2::ZERO; n], logit: vec![0.0; n] };
        let t = &self.tools[k];
        let std = t.std();
        let d = action.position - t.mean;
        g.mean[k] = Vec2::new(d.x / (std.x * std.x), d.y / (std.y * std.y));
        g.log_std[k] = Vec2::new((d.x / std.x).powi(2) - 1.0, (d.y / std.y).powi(2) - 1.0);
        for (j, gl) in g.logit.iter_mut().enumerate() {
            *gl = if j == k { 1.0 } else { 0.0 } - w[j];
        }
        g
    }

    /// Draws a tool from the mixture and a position from its Gaussian,
    /// redrawing until the placement is legal.
    pub fn sample<R: Rng + ?Sized>(&self, level: &LevelSpec, cfg: &SsupConfig, rng: &mut R) -> Result<Action, AgentError> {
        let weights = self.weights();
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        sample_legal(level, cfg.placement_tries, rng, |rng| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut tool = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    tool = i;
                    break;
                }
            }
            let t = &self.tools[tool];
            let std = t.std();
            let x = t.mean.x + std.x * unit.sample(rng);
            let y = t.mean.y + std.y * unit.sample(rng);
            Action { tool, position: Vec2::new(x, y) }
        })
    }

    /// One policy-gradient step on `(action, reward)`. A reward equal to the
    /// baseline leaves the state untouched.
    pub fn update(&self, action: &Action, reward: f64, cfg: &SsupConfig) -> PolicyState {
        let advantage = reward - self.reward_baseline;
        if advantage == 0.0 {
            return self.clone();
        }
        let g = self.grad_log_prob(action);
        let step = cfg.learning_rate * advantage;
        let (lo, hi) = (cfg.sigma_min.ln(), self.max_std.ln());
        let mut next = self.clone();
        for (k, t) in next.tools.iter_mut().enumerate() {
            let var = {
                let s = self.tools[k].std();
                Vec2::new(s.x * s.x, s.y * s.y)
            };
            let dm = match cfg.mean_step {
                MeanStep::Vanilla => g.mean[k],
                MeanStep::Fisher => Vec2::new(g.mean[k].x * var.x, g.mean[k].y * var.y),
            };
            t.mean += dm * step;
            t.log_std.x = (t.log_std.x + step * g.log_std[k].x).clamp(lo, hi);
            t.log_std.y = (t.log_std.y + step * g.log_std[k].y).clamp(lo, hi);
            t.logit += step * g.logit[k];
        }
        next.reward_baseline += (1.0 - cfg.baseline_decay) * advantage;
        next
    }
}

/// Where a proposal came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    Prior,
    Policy,
}

/// Epsilon-greedy proposal: the prior with probability `epsilon`, otherwise
/// the policy. Falls back to the prior if the policy has no legal mass.
pub fn sample_policy<R: Rng + ?Sized>(
    policy: &PolicyState,
    prior: &ProposalPrior,
    level: &LevelSpec,
    cfg: &SsupConfig,
    rng: &mut R,
) -> Result<(Action, ProposalSource), AgentError> {
    if rng.random_bool(cfg.epsilon) {
        return Ok((prior.sample(level, cfg, rng)?, ProposalSource::Prior));
    }
    match policy.sample(level, cfg, rng) {
        Ok(a) => Ok((a, ProposalSource::Policy)),
        Err(AgentError::NoValidPlacement(_)) => Ok((prior.sample(level, cfg, rng)?, ProposalSource::Prior)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> PolicyState {
        PolicyState {
            tools: vec![
                ToolGaussian { mean: Vec2::new(100.0, 200.0), log_std: Vec2::new(3.0, 2.5), logit: 0.3 },
                ToolGaussian { mean: Vec2::new(300.0, 100.0), log_std: Vec2::new(2.0, 4.0), logit: -0.2 },
                ToolGaussian { mean: Vec2::new(500.0, 400.0), log_std: Vec2::new(3.5, 3.5), logit: 0.0 },
            ],
            reward_baseline: 0.4,
            max_std: 600.0,
        }
    }

    #[test]
    fn weights_form_a_simplex() {
        let w = state().weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let uniform = PolicyState { tools: state().tools.iter().map(|t| ToolGaussian { logit: 0.0, ..*t }).collect(), ..state() };
        for w in uniform.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_advantage_is_identity() {
        let s = state();
        let next = s.update(&Action::new(1, 0.0, 0.0), s.reward_baseline, &SsupConfig::default());
        assert_eq!(next, s);
    }

    #[test]
    fn positive_advantage_moves_mean_toward_sample() {
        let s = state();
        for step in [MeanStep::Fisher, MeanStep::Vanilla] {
            let cfg = SsupConfig { mean_step: step, ..SsupConfig::default() };
            let next = s.update(&Action::new(0, 130.0, 180.0), 0.9, &cfg);
            assert!(next.tools[0].mean.x > s.tools[0].mean.x);
            assert!(next.tools[0].mean.y < s.tools[0].mean.y);
            assert!(next.tools[0].logit > s.tools[0].logit);
            assert_eq!(next.tools[1].mean, s.tools[1].mean);
            assert!(next.reward_baseline > s.reward_baseline);
        }
    }

    #[test]
    fn stddev_floor_survives_updates() {
        let cfg = SsupConfig::default();
        let mut s = state();
        for i in 0..200 {
            // samples right at the mean shrink the spread
            let mean = s.tools[2].mean;
            s = s.update(&Action { tool: 2, position: mean }, 1.0 - (i % 2) as f64 * 0.01, &cfg);
        }
        for t in &s.tools {
            assert!(t.std().x >= cfg.sigma_min - 1e-9 && t.std().y >= cfg.sigma_min - 1e-9);
        }
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
