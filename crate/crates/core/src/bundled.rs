//! Levels compiled into the binary.

use crate::error::LevelError;
use crate::level::{Action, LevelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Recreates one of the published puzzle concepts.
    Archetype,
    /// Small scene whose rewards can be checked by hand.
    Calibration,
}

#[derive(Clone, Copy, Debug)]
pub struct BundledLevel {
    pub name: &'static str,
    pub category: Category,
    pub document: &'static str,
}

impl BundledLevel {
    pub fn load(&self) -> Result<LevelSpec, LevelError> {
        LevelSpec::load(self.document.as_bytes())
    }
}

macro_rules! bundled {
    ($($name:literal => $cat:ident),* $(,)?) => {
        &[$(BundledLevel {
            name: $name,
            category: Category::$cat,
            document: include_str!(concat!("../levels/", $name, ".json")),
        }),*]
    };
}

pub const LEVELS: &[BundledLevel] = bundled! {
    "calibration_wall" => Calibration,
    "easy_table" => Calibration,
    "launch_ramp" => Archetype,
    "launch_ramp_b" => Archetype,
    "catapult" => Archetype,
    "seesaw" => Archetype,
    "bridge" => Archetype,
    "prevention_a" => Archetype,
    "prevention_b" => Archetype,
    "falling_a" => Archetype,
    "falling_b" => Archetype,
    "shafts" => Archetype,
};

/// Placement in `calibration_wall` that pins the ball against the wall,
/// exactly halving its no-tool distance to the goal.
pub const CALIBRATION_HALVING_ACTION: Action = Action { tool: 0, position: crate::math::Vec2 { x: 40.0, y: 230.0 } };

pub fn find(name: &str) -> Option<&'static BundledLevel> {
    LEVELS.iter().find(|l| l.name == name)
}

pub fn load(name: &str) -> Option<Result<LevelSpec, LevelError>> {
    find(name).map(BundledLevel::load)
}

pub fn archetypes() -> impl Iterator<Item = &'static BundledLevel> {
    LEVELS.iter().filter(|l| l.category == Category::Archetype)
}

/// Every bundled level, parsed.
pub fn load_all() -> Result<Vec<LevelSpec>, LevelError> {
    LEVELS.iter().map(BundledLevel::load).collect()
}
