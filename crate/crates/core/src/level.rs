//! Level documents, placement legality, and scoring of attempts.
//!
//! A level is loaded from a `vtools-level/1` JSON document. Loading runs the
//! no-tool rollout once to find the baseline goal distance; a level whose
//! goal object already reaches the goal without help is rejected.

use serde::{Deserialize, Serialize};

use crate::error::{AttemptError, LevelError, Rejection};
use crate::geometry::{ConvexPolygon, PartDoc, Shape, ShapeDoc, WorldPart};
use crate::math::{Aabb, Vec2};
use crate::physics::{
    step_budget, Body, BodyKind, BodyRole, Frame, Material, NoiseConfig, Simulator, Trajectory, World,
    DEFAULT_DT, DEFAULT_GRAVITY,
};

pub const FORMAT: &str = "vtools-level/1";
/// Id given to the placed tool inside attempt worlds.
pub const TOOL_BODY_ID: &str = "tool";
pub const DEFAULT_TIME_LIMIT: f64 = 120.0;
pub const DEFAULT_DWELL: f64 = 0.5;
pub const DEFAULT_HORIZON: f64 = 20.0;
/// Tools must fit inside a square of this side.
pub const MAX_TOOL_EXTENT: f64 = 100.0;

fn default_gravity() -> Vec2 {
    DEFAULT_GRAVITY
}
fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT
}
fn default_dwell() -> f64 {
    DEFAULT_DWELL
}
fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_tool_material() -> Material {
    Material { density: 1.0, friction: 0.5, elasticity: 0.2 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub format: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub bounds: Aabb,
    #[serde(default = "default_gravity")]
    pub gravity: Vec2,
    pub bodies: Vec<BodyDoc>,
    pub goal: GoalDoc,
    #[serde(default)]
    pub prohibited: Vec<Vec<Vec2>>,
    pub tools: Vec<ToolDoc>,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Matched-pair partner and the documented geometric delta.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDoc {
    pub id: String,
    pub kind: BodyKind,
    #[serde(default)]
    pub role: BodyRole,
    pub shape: ShapeDoc,
    pub position: Vec2,
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub velocity: Vec2,
    #[serde(default)]
    pub angular_velocity: f64,
    #[serde(default)]
    pub material: Material,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub region: Vec<Vec2>,
    pub objects: Vec<String>,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolDoc {
    pub name: String,
    pub parts: Vec<PartDoc>,
    #[serde(default = "default_tool_material")]
    pub material: Material,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub partner: String,
    pub delta: String,
}

/// A placeable tool; its local origin is the area centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct Tool {
    pub name: String,
    shape: Shape,
    pub material: Material,
}

impl Tool {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn local_aabb(&self) -> Aabb {
        self.shape.local_aabb()
    }
}

/// A tool placement: which tool and where its centroid goes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub tool: usize,
    pub position: Vec2,
}

impl Action {
    pub fn new(tool: usize, x: f64, y: f64) -> Action {
        Action { tool, position: Vec2::new(x, y) }
    }
}

/// Result of running one attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct AttemptOutcome {
    /// Present when recording was requested.
    pub trajectory: Option<Trajectory>,
    pub solved: bool,
    pub min_goal_distance: f64,
    pub normalized_distance: f64,
    pub reward: f64,
}

#[derive(Clone, Debug)]
pub struct LevelSpec {
    pub name: String,
    pub description: Option<String>,
    world: World,
    goal_region: ConvexPolygon,
    goal_objects: Vec<String>,
    prohibited: Vec<ConvexPolygon>,
    tools: Vec<Tool>,
    pub time_limit: f64,
    pub dwell: f64,
    pub horizon: f64,
    pub pair: Option<PairDoc>,
    baseline: f64,
}

fn schema_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> LevelError {
    LevelError::Schema { path: err.path().to_string(), message: err.inner().to_string() }
}

impl LevelSpec {
    /// Parses and validates a level document.
    pub fn load(document: &[u8]) -> Result<LevelSpec, LevelError> {
        let de = &mut serde_json::Deserializer::from_slice(document);
        let doc: LevelDoc = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        LevelSpec::from_doc(&doc)
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<LevelSpec, LevelError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| LevelError::Invalid(format!("{}: {e}", path.display())))?;
        LevelSpec::load(&bytes)
    }

    pub fn from_doc(doc: &LevelDoc) -> Result<LevelSpec, LevelError> {
        if doc.format != FORMAT {
            return Err(LevelError::Format(doc.format.clone()));
        }
        if doc.tools.len() != 3 {
            return Err(LevelError::ToolCount(doc.tools.len()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(doc.time_limit) || !positive(doc.horizon) || !(doc.goal.dwell.is_finite() && doc.goal.dwell >= 0.0) {
            return Err(LevelError::Invalid("time_limit and horizon must be > 0, dwell >= 0".into()));
        }

        let mut world = World::new(doc.gravity, doc.bounds, DEFAULT_DT)?;
        for b in &doc.bodies {
            if b.id == TOOL_BODY_ID {
                return Err(LevelError::Invalid(format!("body id `{TOOL_BODY_ID}` is reserved for placed tools")));
            }
            if b.role == BodyRole::Tool {
                return Err(LevelError::Invalid(format!("body `{}` cannot have the tool role", b.id)));
            }
            if world.body(&b.id).is_some() {
                return Err(LevelError::DuplicateId(b.id.clone()));
            }
            b.material
                .validate(b.kind)
                .map_err(|reason| LevelError::Material { id: b.id.clone(), reason })?;
            let shape = b.shape.build().map_err(|source| LevelError::Shape { id: b.id.clone(), source })?;
            let role = if doc.goal.objects.contains(&b.id) { BodyRole::GoalObject } else { b.role };
            let body = Body::new(b.id.clone(), shape, b.position, b.angle, b.material, b.kind, role)?
                .with_velocity(b.velocity, b.angular_velocity);
            world.add_body(body)?;
        }

        if doc.goal.objects.is_empty() {
            return Err(LevelError::NoGoalObjects);
        }
        for id in &doc.goal.objects {
            match world.body(id) {
                Some(b) if b.is_dynamic() => {}
                _ => return Err(LevelError::BadGoalObject(id.clone())),
            }
        }
        if let Some(b) = world.bodies().iter().find(|b| b.role == BodyRole::GoalObject && !doc.goal.objects.contains(&b.id)) {
            return Err(LevelError::Invalid(format!("body `{}` has the goal role but is not listed in goal.objects", b.id)));
        }
        let goal_region = ConvexPolygon::new(doc.goal.region.clone())
            .map_err(|source| LevelError::Shape { id: "goal.region".into(), source })?;

        let mut prohibited = Vec::with_capacity(doc.prohibited.len());
        for (i, poly) in doc.prohibited.iter().enumerate() {
            let p = ConvexPolygon::new(poly.clone())
                .map_err(|source| LevelError::Shape { id: format!("prohibited[{i}]"), source })?;
            if !doc.bounds.contains(&p.aabb()) {
                return Err(LevelError::ProhibitedOutOfBounds(i));
            }
            prohibited.push(p);
        }

        let mut tools = Vec::with_capacity(3);
        for (index, t) in doc.tools.iter().enumerate() {
            let shape = ShapeDoc::Compound { parts: t.parts.clone() }
                .build()
                .map_err(|source| LevelError::Shape { id: format!("tools[{index}]"), source })?;
            t.material
                .validate(BodyKind::Dynamic)
                .map_err(|reason| LevelError::Material { id: format!("tools[{index}]"), reason })?;
            let centroid = shape.area_properties().centroid;
            let shape = shape.translated(-centroid);
            let bb = shape.local_aabb();
            if bb.width() > MAX_TOOL_EXTENT || bb.height() > MAX_TOOL_EXTENT {
                return Err(LevelError::ToolTooLarge { index, limit: MAX_TOOL_EXTENT });
            }
            tools.push(Tool { name: t.name.clone(), shape, material: t.material });
        }

        let mut level = LevelSpec {
            name: doc.name.clone(),
            description: doc.description.clone(),
            world,
            goal_region,
            goal_objects: doc.goal.objects.clone(),
            prohibited,
            tools,
            time_limit: doc.time_limit,
            dwell: doc.goal.dwell,
            horizon: doc.horizon,
            pair: doc.pair.clone(),
            baseline: f64::NAN,
        };
        for id in &level.goal_objects {
            let body = level.world.body(id).expect("checked above");
            if level.goal_region.contains_point(body.position) {
                return Err(LevelError::GoalStartsSolved(id.clone()));
            }
        }
        let outcome = level.rollout(None, NoiseConfig::NONE, 0, false).map_err(|e| match e {
            AttemptError::Physics(p) => LevelError::Physics(p),
            other => LevelError::Invalid(other.to_string()),
        })?;
        if outcome.solved || outcome.min_goal_distance <= 0.0 {
            return Err(LevelError::ZeroBaseline);
        }
        level.baseline = outcome.min_goal_distance;
        Ok(level)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn bounds(&self) -> Aabb {
        self.world.bounds
    }

    pub fn goal_region(&self) -> &ConvexPolygon {
        &self.goal_region
    }

    pub fn goal_object_ids(&self) -> &[String] {
        &self.goal_objects
    }

    pub fn prohibited_regions(&self) -> &[ConvexPolygon] {
        &self.prohibited
    }

    pub fn tools(&self) -> &[Tool] {
        &self.tools
    }

    /// Dynamic bodies of the level, in world order.
    pub fn movable_bodies(&self) -> impl Iterator<Item = &Body> {
        self.world.bodies().iter().filter(|b| b.is_dynamic())
    }

    /// Minimum goal distance of the noiseless no-tool rollout.
    pub fn baseline_distance(&self) -> f64 {
        self.baseline
    }

    /// Checks a placement without simulating anything.
    pub fn validate_action(&self, action: &Action) -> Result<(), AttemptError> {
        let tool = self.tools.get(action.tool).ok_or(AttemptError::BadTool(action.tool))?;
        if !action.position.is_finite() {
            return Err(AttemptError::Rejected(Rejection::OutOfBounds));
        }
        let parts = tool.shape.world_parts(action.position, 0.0);
        let bounds = self.world.bounds;
        if parts.iter().any(|p| !bounds.contains(&p.aabb())) {
            return Err(AttemptError::Rejected(Rejection::OutOfBounds));
        }
        let in_prohibited = self.prohibited.iter().any(|zone| {
            let zone = WorldPart::Polygon(zone.clone());
            parts.iter().any(|p| p.overlaps(&zone))
        });
        if in_prohibited {
            return Err(AttemptError::Rejected(Rejection::ProhibitedZone));
        }
        if !self.world.overlap_test(&tool.shape, action.position, 0.0).is_empty() {
            return Err(AttemptError::Rejected(Rejection::BodyOverlap));
        }
        Ok(())
    }

    /// The level world with `action`'s tool inserted.
    pub fn world_with(&self, action: Option<&Action>) -> Result<World, AttemptError> {
        let mut world = self.world.clone();
        if let Some(a) = action {
            self.validate_action(a)?;
            let tool = &self.tools[a.tool];
            let body = Body::new(TOOL_BODY_ID, tool.shape.clone(), a.position, 0.0, tool.material, BodyKind::Dynamic, BodyRole::Tool)?;
            world.add_body(body)?;
        }
        Ok(world)
    }

    /// Places the tool (if any) and runs the physics, scoring the result.
    pub fn attempt(&self, action: Option<&Action>, noise: NoiseConfig, seed: u64) -> Result<AttemptOutcome, AttemptError> {
        self.attempt_with(action, noise, seed, false)
    }

    /// As [`LevelSpec::attempt`], keeping the full trajectory.
    pub fn attempt_recorded(&self, action: Option<&Action>, noise: NoiseConfig, seed: u64) -> Result<AttemptOutcome, AttemptError> {
        self.attempt_with(action, noise, seed, true)
    }

    fn attempt_with(&self, action: Option<&Action>, noise: NoiseConfig, seed: u64, record: bool) -> Result<AttemptOutcome, AttemptError> {
        let mut outcome = self.rollout(action, noise, seed, record)?;
        outcome.normalized_distance = outcome.min_goal_distance / self.baseline;
        outcome.reward = if outcome.solved { 1.0 } else { 1.0 - outcome.normalized_distance.min(1.0) };
        Ok(outcome)
    }

    fn rollout(&self, action: Option<&Action>, noise: NoiseConfig, seed: u64, record: bool) -> Result<AttemptOutcome, AttemptError> {
        let world = self.world_with(action)?;
        let goal_indices: Vec<usize> =
            self.goal_objects.iter().map(|id| world.body_index(id).expect("validated at load")).collect();
        let dwell_steps = step_budget(self.dwell, world.dt());
        let budget = step_budget(self.horizon, world.dt());
        let mut sim = Simulator::new(world, noise, seed)?;

        let mut frames = Vec::new();
        let mut events = Vec::new();
        let mut inside_steps = vec![0u64; goal_indices.len()];
        let mut min_distance = f64::INFINITY;
        let mut solved = false;
        let mut parts = Vec::new();

        let mut observe = |w: &World, frames: &mut Vec<Frame>| -> bool {
            if record {
                frames.push(Frame::capture(w));
            }
            let mut done = false;
            for (slot, &i) in goal_indices.iter().enumerate() {
                let body = &w.bodies()[i];
                body.write_world_parts(&mut parts);
                let d = parts
                    .iter()
                    .map(|p| p.distance_to_polygon(&self.goal_region))
                    .fold(f64::INFINITY, f64::min);
                min_distance = min_distance.min(d);
                if self.goal_region.contains_point(body.position) {
                    inside_steps[slot] += 1;
                    // the count includes the entry frame, so dwell spans count - 1 steps
                    if inside_steps[slot] > dwell_steps {
                        done = true;
                    }
                } else {
                    inside_steps[slot] = 0;
                }
            }
            done
        };

        solved = observe(sim.world(), &mut frames) || solved;
        let mut steps = 0;
        while !solved && steps < budget {
            events.extend(sim.step()?);
            steps += 1;
            solved = observe(sim.world(), &mut frames);
            if sim.is_settled() {
                break;
            }
        }
        if solved {
            min_distance = 0.0;
        }
        let trajectory = record.then(|| {
            let terminal = sim.into_world();
            Trajectory {
                dt: terminal.dt(),
                body_ids: terminal.dynamic_ids(),
                frames,
                collision_events: events,
                terminal_world: terminal,
            }
        });
        Ok(AttemptOutcome { trajectory, solved, min_goal_distance: min_distance, normalized_distance: 0.0, reward: 0.0 })
    }
}
