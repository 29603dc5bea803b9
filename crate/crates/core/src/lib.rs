//! Virtual Tools: a deterministic 2D physics puzzle platform and the
//! sample-simulate-update agent that plays it.

pub mod agent;
pub mod bundled;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod level;
pub mod math;
pub mod physics;
pub mod trajectory;

pub use error::{AgentError, AttemptError, HarnessError, LevelError, PhysicsError, Rejection, ShapeError};
pub use math::{Aabb, Vec2};
pub use physics::{Body, BodyKind, BodyRole, Material, NoiseConfig, Trajectory, World};
