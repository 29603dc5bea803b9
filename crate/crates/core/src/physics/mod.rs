//! Fixed-timestep 2D rigid-body engine.
//!
//! Semi-implicit Euler integration, speculative contacts solved with
//! sequential impulses, and a split position-correction pass. An optional
//! [`NoiseConfig`] perturbs the impulse of every newly started collision.
//! Bodies and contacts are always processed in list order, so a run is a
//! pure function of the world, the noise parameters and the seed.

mod collide;
mod simulate;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::PhysicsError;
use crate::geometry::{Shape, WorldPart};
use crate::math::{Aabb, Rot, Vec2};

pub(crate) use simulate::step_budget;
pub use simulate::{simulate, step, CollisionEvent, Frame, Pose, Simulator, Trajectory};

/// Default fixed timestep, seconds.
pub const DEFAULT_DT: f64 = 0.01;
/// Default gravity in world units per second squared.
pub const DEFAULT_GRAVITY: Vec2 = Vec2::new(0.0, -200.0);

/// Bodies slower than this (u/s) count as resting.
pub const SETTLE_LINEAR_SPEED: f64 = 0.5;
/// Angular rate (rad/s) below which bodies count as resting.
pub const SETTLE_ANGULAR_SPEED: f64 = 0.05;
/// Continuous rest time required before a rollout may stop early.
pub const SETTLE_WINDOW: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub density: f64,
    pub friction: f64,
    pub elasticity: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { density: 1.0, friction: 0.5, elasticity: 0.5 }
    }
}

impl Material {
    pub fn validate(&self, kind: BodyKind) -> Result<(), String> {
        if kind == BodyKind::Dynamic && !(self.density.is_finite() && self.density > 0.0) {
            return Err(format!("density must be > 0 for dynamic bodies, got {}", self.density));
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(format!("friction must be >= 0, got {}", self.friction));
        }
        if !(0.0..=1.0).contains(&self.elasticity) {
            return Err(format!("elasticity must lie in [0, 1], got {}", self.elasticity));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BodyRole {
    GoalObject,
    #[default]
    Plain,
    Tool,
}

/// Standard deviations of the collision-impulse perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Rotation applied to the impulse direction, radians.
    pub impulse_direction_sd: f64,
    /// Multiplicative factor sd: impulses are scaled by `max(0, 1 + N(0, sd))`.
    pub impulse_magnitude_sd: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig { impulse_direction_sd: 0.0, impulse_magnitude_sd: 0.0 };

    pub fn new(direction_sd: f64, magnitude_sd: f64) -> Self {
        NoiseConfig { impulse_direction_sd: direction_sd, impulse_magnitude_sd: magnitude_sd }
    }

    pub fn is_none(&self) -> bool {
        self.impulse_direction_sd == 0.0 && self.impulse_magnitude_sd == 0.0
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.impulse_direction_sd) && ok(self.impulse_magnitude_sd) {
            Ok(())
        } else {
            Err(PhysicsError::InvalidWorld(format!("noise standard deviations must be >= 0: {self:?}")))
        }
    }
}

/// A rigid body. `position` is the center of mass for dynamic bodies.
#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub id: String,
    shape: Shape,
    pub position: Vec2,
    pub angle: f64,
    pub velocity: Vec2,
    pub angular_velocity: f64,
    pub material: Material,
    kind: BodyKind,
    pub role: BodyRole,
    inv_mass: f64,
    inv_inertia: f64,
}

impl Body {
    /// Builds a body. Dynamic shapes are re-centered on their centroid and
    /// `position` is shifted so the body occupies the same region.
    pub fn new(
        id: impl Into<String>,
        shape: Shape,
        position: Vec2,
        angle: f64,
        material: Material,
        kind: BodyKind,
        role: BodyRole,
    ) -> Result<Body, PhysicsError> {
        let id = id.into();
        if !position.is_finite() || !angle.is_finite() {
            return Err(PhysicsError::InvalidWorld(format!("body `{id}` has a non-finite pose")));
        }
        material.validate(kind).map_err(|e| PhysicsError::InvalidWorld(format!("body `{id}`: {e}")))?;
        let (shape, position, inv_mass, inv_inertia) = match kind {
            BodyKind::Static => (shape, position, 0.0, 0.0),
            BodyKind::Dynamic => {
                let props = shape.area_properties();
                let shape = shape.translated(-props.centroid);
                let position = position + props.centroid.rotate(Rot::new(angle));
                let mass = props.area * material.density;
                let inertia = props.polar_moment * material.density;
                (shape, position, 1.0 / mass, 1.0 / inertia)
            }
        };
        Ok(Body {
            id,
            shape,
            position,
            angle,
            velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            material,
            kind,
            role,
            inv_mass,
            inv_inertia,
        })
    }

    pub fn with_velocity(mut self, velocity: Vec2, angular_velocity: f64) -> Body {
        if self.kind == BodyKind::Dynamic {
            self.velocity = velocity;
            self.angular_velocity = angular_velocity;
        }
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn is_dynamic(&self) -> bool {
        self.kind == BodyKind::Dynamic
    }

    pub fn mass(&self) -> f64 {
        if self.inv_mass > 0.0 {
            1.0 / self.inv_mass
        } else {
            f64::INFINITY
        }
    }

    pub fn inertia(&self) -> f64 {
        if self.inv_inertia > 0.0 {
            1.0 / self.inv_inertia
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn inv_mass(&self) -> f64 {
        self.inv_mass
    }

    pub(crate) fn inv_inertia(&self) -> f64 {
        self.inv_inertia
    }

    pub fn world_parts(&self) -> Vec<WorldPart> {
        self.shape.world_parts(self.position, self.angle)
    }

    /// Current world-space parts written into a reusable buffer.
    pub fn write_world_parts(&self, out: &mut Vec<WorldPart>) {
        self.shape.write_world_parts(self.position, self.angle, out)
    }

    pub fn aabb(&self) -> Aabb {
        self.world_parts()
            .iter()
            .map(WorldPart::aabb)
            .reduce(|a, b| a.union(&b))
            .expect("shapes have at least one part")
    }

    pub fn kinetic_energy(&self) -> f64 {
        if !self.is_dynamic() {
            return 0.0;
        }
        0.5 * self.mass() * self.velocity.length_squared() + 0.5 * self.inertia() * self.angular_velocity.powi(2)
    }

    pub(crate) fn is_resting(&self) -> bool {
        self.velocity.length() < SETTLE_LINEAR_SPEED && self.angular_velocity.abs() < SETTLE_ANGULAR_SPEED
    }

    fn check_finite(&self) -> bool {
        self.position.is_finite() && self.angle.is_finite() && self.velocity.is_finite() && self.angular_velocity.is_finite()
    }
}

/// A collection of bodies advanced with a fixed timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    bodies: Vec<Body>,
    pub gravity: Vec2,
    pub bounds: Aabb,
    dt: f64,
    steps: u64,
    /// Body index pairs that exchanged a positive normal impulse last step.
    touching: Vec<(usize, usize)>,
    /// Contact impulses from the last step, reused as a warm start.
    contacts: Vec<solver::CachedContact>,
}

impl World {
    pub fn new(gravity: Vec2, bounds: Aabb, dt: f64) -> Result<World, PhysicsError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(PhysicsError::InvalidWorld(format!("dt must be positive, got {dt}")));
        }
        if !gravity.is_finite() || !bounds.min.is_finite() || !bounds.max.is_finite() {
            return Err(PhysicsError::InvalidWorld("non-finite gravity or bounds".into()));
        }
        if bounds.width() <= 0.0 || bounds.height() <= 0.0 {
            return Err(PhysicsError::InvalidWorld("empty bounds".into()));
        }
        Ok(World { bodies: Vec::new(), gravity, bounds, dt, steps: 0, touching: Vec::new(), contacts: Vec::new() })
    }

    /// A world with the default canvas, gravity and timestep.
    pub fn standard() -> World {
        World::new(DEFAULT_GRAVITY, Aabb::new(Vec2::ZERO, Vec2::new(600.0, 600.0)), DEFAULT_DT)
            .expect("default world parameters are valid")
    }

    pub fn with_bodies(mut self, bodies: impl IntoIterator<Item = Body>) -> Result<World, PhysicsError> {
        for b in bodies {
            self.add_body(b)?;
        }
        Ok(self)
    }

    pub fn add_body(&mut self, body: Body) -> Result<usize, PhysicsError> {
        if self.bodies.iter().any(|b| b.id == body.id) {
            return Err(PhysicsError::InvalidWorld(format!("duplicate body id `{}`", body.id)));
        }
        if !body.check_finite() {
            return Err(PhysicsError::InvalidWorld(format!("body `{}` has non-finite state", body.id)));
        }
        self.bodies.push(body);
        Ok(self.bodies.len() - 1)
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn body(&self, id: &str) -> Option<&Body> {
        self.bodies.iter().find(|b| b.id == id)
    }

    pub fn body_index(&self, id: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.id == id)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dynamic_ids(&self) -> Vec<String> {
        self.bodies.iter().filter(|b| b.is_dynamic()).map(|b| b.id.clone()).collect()
    }

    /// Kinetic plus gravitational potential energy of all dynamic bodies.
    pub fn total_energy(&self) -> f64 {
        self.bodies
            .iter()
            .filter(|b| b.is_dynamic())
            .map(|b| b.kinetic_energy() - b.mass() * self.gravity.dot(b.position))
            .sum()
    }

    /// Ids of bodies whose interior intersects `shape` placed at the pose.
    pub fn overlap_test(&self, shape: &Shape, position: Vec2, angle: f64) -> Vec<String> {
        let probe = shape.world_parts(position, angle);
        self.bodies
            .iter()
            .filter(|b| {
                let parts = b.world_parts();
                probe.iter().any(|p| parts.iter().any(|q| p.overlaps(q)))
            })
            .map(|b| b.id.clone())
            .collect()
    }

    /// Dynamic bodies well outside the bounds no longer take part in settle detection.
    pub(crate) fn in_play(&self, body: &Body) -> bool {
        self.bounds.expanded(OUT_OF_PLAY_MARGIN).contains_point(body.position)
    }

    pub(crate) fn is_at_rest(&self) -> bool {
        self.bodies.iter().filter(|b| b.is_dynamic() && self.in_play(b)).all(Body::is_resting)
    }

    fn check_finite(&self) -> Result<(), PhysicsError> {
        match self.bodies.iter().find(|b| !b.check_finite()) {
            Some(b) => Err(PhysicsError::Diverged { body: b.id.clone(), time: self.time() }),
            None => Ok(()),
        }
    }
}

const OUT_OF_PLAY_MARGIN: f64 = 200.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;

    #[test]
    fn dynamic_bodies_are_recentered() {
        let off_center = ConvexPolygon::rect(10.0, 10.0).unwrap().translated(Vec2::new(5.0, 0.0));
        let b = Body::new(
            "b",
            Shape::Polygon(off_center),
            Vec2::new(100.0, 100.0),
            0.0,
            Material::default(),
            BodyKind::Dynamic,
            BodyRole::Plain,
        )
        .unwrap();
        assert!((b.position - Vec2::new(105.0, 100.0)).length() < 1e-12);
        let aabb = b.aabb();
        assert!((aabb.min - Vec2::new(100.0, 95.0)).length() < 1e-9);
        assert!((b.mass() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mk = || {
            Body::new("x", Shape::circle(1.0).unwrap(), Vec2::ZERO, 0.0, Material::default(), BodyKind::Static, BodyRole::Plain)
                .unwrap()
        };
        let err = World::standard().with_bodies([mk(), mk()]).unwrap_err();
        assert!(matches!(err, PhysicsError::InvalidWorld(_)));
    }

    #[test]
    fn material_limits() {
        let bad = Material { density: 0.0, ..Material::default() };
        assert!(bad.validate(BodyKind::Dynamic).is_err());
        assert!(bad.validate(BodyKind::Static).is_ok());
        let bouncy = Material { elasticity: 1.5, ..Material::default() };
        assert!(bouncy.validate(BodyKind::Static).is_err());
    }
}
