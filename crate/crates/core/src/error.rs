use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polygon vertices must be counter-clockwise with positive area")]
    NotCounterClockwise,
    #[error("polygon has a zero-length edge")]
    Degenerate,
    #[error("polygon is not strictly convex")]
    NotConvex,
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("compound shape has no parts")]
    EmptyCompound,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("simulation diverged: body `{body}` has non-finite state at t = {time}")]
    Diverged { body: String, time: f64 },
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}

/// Why a tool placement was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    #[error("prohibited-zone")]
    ProhibitedZone,
    #[error("body-overlap")]
    BodyOverlap,
    #[error("out-of-bounds")]
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevelError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported level format `{0}`")]
    Format(String),
    #[error("level must have exactly 3 tools, got {0}")]
    ToolCount(usize),
    #[error("shape of `{id}`: {source}")]
    Shape {
        id: String,
        #[source]
        source: ShapeError,
    },
    #[error("duplicate body id `{0}`")]
    DuplicateId(String),
    #[error("goal object list is empty")]
    NoGoalObjects,
    #[error("goal object `{0}` is not a dynamic body of the level")]
    BadGoalObject(String),
    #[error("goal object `{0}` starts inside the goal region")]
    GoalStartsSolved(String),
    #[error("degenerate level: the no-tool rollout reaches the goal (baseline distance is zero)")]
    ZeroBaseline,
    #[error("prohibited region {0} lies outside the world bounds")]
    ProhibitedOutOfBounds(usize),
    #[error("tool {index} does not fit in a {limit}x{limit} box")]
    ToolTooLarge { index: usize, limit: f64 },
    #[error("invalid material on `{id}`: {reason}")]
    Material { id: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttemptError {
    #[error("placement rejected: {0}")]
    Rejected(Rejection),
    #[error("tool index {0} out of range")]
    BadTool(usize),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("no valid placement found after {0} tries")]
    NoValidPlacement(usize),
    #[error("level has no movable objects to anchor the prior")]
    NoMovableObjects,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Attempt(#[from] AttemptError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("level `{path}`: {source}")]
    Level {
        path: String,
        #[source]
        source: LevelError,
    },
    #[error("episode on `{level}` ({variant}, run {run}): {source}")]
    Episode {
        level: String,
        variant: String,
        run: usize,
        #[source]
        source: AgentError,
    },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0} vector has zero variance; correlation is undefined")]
    DegenerateVariance(&'static str),
    #[error("bad sweep parameter: {0}")]
    Param(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}, line {line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}
