use serde::{Deserialize, Serialize};

use crate::agent::{EpisodeLog, Variant};
use crate::level::Action;

/// Aggregates for one (level, variant) cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: String,
    pub variant: Variant,
    pub runs: usize,
    pub solution_rate: f64,
    /// Unsolved runs count as `max_attempts`.
    pub mean_attempts: f64,
    /// `cumulative_curve[x - 1]` is the fraction solved within `x` attempts.
    pub cumulative_curve: Vec<f64>,
    pub first_actions: Vec<Action>,
    pub last_actions: Vec<Action>,
}

/// Fraction of runs solved within `x` attempts, for `x = 1..=max_attempts`.
pub fn cumulative_curve(logs: &[EpisodeLog], max_attempts: usize) -> Vec<f64> {
    let mut solved_at = vec![0usize; max_attempts + 1];
    for log in logs.iter().filter(|l| l.solved) {
        solved_at[log.attempts_used.min(max_attempts)] += 1;
    }
    let n = logs.len() as f64;
    let mut acc = 0;
    (1..=max_attempts)
        .map(|x| {
            acc += solved_at[x];
            acc as f64 / n
        })
        .collect()
}

/// Mean height of the cumulative curve.
pub fn curve_area(curve: &[f64]) -> f64 {
    curve.iter().sum::<f64>() / curve.len() as f64
}

/// One run's contribution to [`curve_area`]; averaging these over runs
/// gives the area of their cumulative curve.
pub fn run_area(log: &EpisodeLog, max_attempts: usize) -> f64 {
    if log.solved && log.attempts_used <= max_attempts {
        (max_attempts + 1 - log.attempts_used) as f64 / max_attempts as f64
    } else {
        0.0
    }
}

impl LevelMetrics {
    /// Metrics of `logs`, which must all come from one level and variant.
    pub fn from_logs(logs: &[EpisodeLog], max_attempts: usize) -> LevelMetrics {
        assert!(!logs.is_empty(), "metrics need at least one run");
        let n = logs.len() as f64;
        let attempts = |l: &EpisodeLog| if l.solved { l.attempts_used } else { max_attempts };
        LevelMetrics {
            level: logs[0].level.clone(),
            variant: logs[0].variant,
            runs: logs.len(),
            solution_rate: logs.iter().filter(|l| l.solved).count() as f64 / n,
            mean_attempts: logs.iter().map(|l| attempts(l) as f64).sum::<f64>() / n,
            cumulative_curve: cumulative_curve(logs, max_attempts),
            first_actions: logs.iter().filter_map(|l| l.attempts.first().map(|a| a.action)).collect(),
            last_actions: logs.iter().filter_map(|l| l.attempts.last().map(|a| a.action)).collect(),
        }
    }

    pub fn curve_area(&self) -> f64 {
        curve_area(&self.cumulative_curve)
    }
}
