//! Fixtures shared by the benchmarks.

use vtools_core::bundled;
use vtools_core::level::{Action, LevelSpec};

/// A bundled level and a placement that sets most of its bodies moving.
pub fn busy_scene() -> (LevelSpec, Action) {
    let level = bundled::load("falling_b").expect("bundled").expect("valid");
    (level, Action::new(0, 395.0, 215.0))
}
