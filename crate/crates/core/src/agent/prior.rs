//! Object-based action prior and the uniform placement distribution used by
//! the ablations.
//!
//! The prior picks a movable object, then an x inside the object's extent
//! widened by the margin on both sides, then a y in either the band above the
//! object (up to the top of the world) or the band below it (down to the
//! bottom). Tools are uniform; an illegal position is redrawn for the same tool.

use rand::Rng;

use super::config::SsupConfig;
use crate::error::{AgentError, AttemptError};
use crate::level::{Action, LevelSpec};
use crate::math::{Aabb, Vec2};

/// Sampling boxes anchored on one movable object.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorBox {
    pub object: String,
    pub x_range: (f64, f64),
    /// `None` when the object touches the top of the world.
    pub above: Option<(f64, f64)>,
    /// `None` when the object touches the bottom of the world.
    pub below: Option<(f64, f64)>,
}

impl AnchorBox {
    pub fn contains(&self, p: Vec2) -> bool {
        let in_band = |band: Option<(f64, f64)>| band.is_some_and(|(lo, hi)| p.y >= lo && p.y <= hi);
        p.x >= self.x_range.0 && p.x <= self.x_range.1 && (in_band(self.above) || in_band(self.below))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorSampler {
    pub anchors: Vec<AnchorBox>,
}

impl PriorSampler {
    pub fn new(level: &LevelSpec, cfg: &SsupConfig) -> Result<PriorSampler, AgentError> {
        let bounds = level.bounds();
        let anchors: Vec<AnchorBox> = level
            .movable_bodies()
            .map(|b| {
                let bb = b.aabb();
                let margin = cfg.prior_margin.for_width(bb.width());
                let band = |lo: f64, hi: f64| (hi > lo).then_some((lo, hi));
                AnchorBox {
                    object: b.id.clone(),
                    x_range: (bb.min.x - margin, bb.max.x + margin),
                    above: band(bb.max.y, bounds.max.y),
                    below: band(bounds.min.y, bb.min.y),
                }
            })
            .filter(|a| a.above.is_some() || a.below.is_some())
            .collect();
        if anchors.is_empty() {
            return Err(AgentError::NoMovableObjects);
        }
        Ok(PriorSampler { anchors })
    }

    /// True when `p` lies in the union of the anchor boxes.
    pub fn supports(&self, p: Vec2) -> bool {
        self.anchors.iter().any(|a| a.contains(p))
    }

    /// One draw from the box union, ignoring legality.
    pub fn draw_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let anchor = &self.anchors[rng.random_range(0..self.anchors.len())];
        let x = uniform(rng, anchor.x_range);
        let band = match (anchor.above, anchor.below) {
            (Some(a), Some(b)) => {
                if rng.random_bool(0.5) {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("anchors without bands are filtered out"),
        };
        Vec2::new(x, uniform(rng, band))
    }

    /// A legal action with a uniformly chosen tool. Only the position is
    /// redrawn on rejection, so tools that fit more easily are not favored.
    pub fn sample<R: Rng + ?Sized>(&self, level: &LevelSpec, cfg: &SsupConfig, rng: &mut R) -> Result<Action, AgentError> {
        let tool = rng.random_range(0..level.tools().len());
        self.sample_for_tool(level, tool, cfg, rng)
    }

    /// A legal action for a fixed tool.
    pub fn sample_for_tool<R: Rng + ?Sized>(
        &self,
        level: &LevelSpec,
        tool: usize,
        cfg: &SsupConfig,
        rng: &mut R,
    ) -> Result<Action, AgentError> {
        sample_legal(level, cfg.placement_tries, rng, |rng| Action { tool, position: self.draw_position(rng) })
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Redraws until the level accepts the placement.
pub(crate) fn sample_legal<R, F>(level: &LevelSpec, tries: usize, rng: &mut R, mut draw: F) -> Result<Action, AgentError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Action,
{
    for _ in 0..tries {
        let action = draw(rng);
        match level.validate_action(&action) {
            Ok(()) => return Ok(action),
            Err(AttemptError::Rejected(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(AgentError::NoValidPlacement(tries))
}

/// Tool uniform, then a centroid uniform over that tool's legal positions.
pub fn sample_uniform<R: Rng + ?Sized>(level: &LevelSpec, cfg: &SsupConfig, rng: &mut R) -> Result<Action, AgentError> {
    let tool = rng.random_range(0..level.tools().len());
    sample_uniform_for_tool(level, tool, cfg, rng)
}

pub(crate) fn sample_uniform_for_tool<R: Rng + ?Sized>(
    level: &LevelSpec,
    tool: usize,
    cfg: &SsupConfig,
    rng: &mut R,
) -> Result<Action, AgentError> {
    let bounds = level.bounds();
    sample_legal(level, cfg.placement_tries, rng, |rng| Action { tool, position: uniform_in(rng, &bounds) })
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, b: &Aabb) -> Vec2 {
    Vec2::new(uniform(rng, (b.min.x, b.max.x)), uniform(rng, (b.min.y, b.max.y)))
}

/// Where the agent's non-policy proposals come from.
#[derive(Clone, Debug)]
pub enum ProposalPrior {
    Object(PriorSampler),
    Uniform,
}

impl ProposalPrior {
    pub fn sample<R: Rng + ?Sized>(&self, level: &LevelSpec, cfg: &SsupConfig, rng: &mut R) -> Result<Action, AgentError> {
        match self {
            ProposalPrior::Object(p) => p.sample(level, cfg, rng),
            ProposalPrior::Uniform => sample_uniform(level, cfg, rng),
        }
    }

    pub fn sample_for_tool<R: Rng + ?Sized>(
        &self,
        level: &LevelSpec,
        tool: usize,
        cfg: &SsupConfig,
        rng: &mut R,
    ) -> Result<Action, AgentError> {
        match self {
            ProposalPrior::Object(p) => p.sample_for_tool(level, tool, cfg, rng),
            ProposalPrior::Uniform => sample_uniform_for_tool(level, tool, cfg, rng),
        }
    }
}

/// One draw from the object-based prior.
pub fn sample_prior<R: Rng + ?Sized>(level: &LevelSpec, cfg: &SsupConfig, rng: &mut R) -> Result<Action, AgentError> {
    PriorSampler::new(level, cfg)?.sample(level, cfg, rng)
}
