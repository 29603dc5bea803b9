use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::solver::{step_in_place, Scratch};
use super::{NoiseConfig, World, SETTLE_WINDOW};
use crate::error::PhysicsError;

/// Pose of one dynamic body in a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub time: f64,
    /// Dynamic bodies in world order.
    pub poses: Vec<Pose>,
}

impl Frame {
    pub fn capture(world: &World) -> Frame {
        Frame {
            time: world.time(),
            poses: world
                .bodies()
                .iter()
                .filter(|b| b.is_dynamic())
                .map(|b| Pose { x: b.position.x, y: b.position.y, angle: b.angle })
                .collect(),
        }
    }
}

/// Start of contact between two bodies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub bodies: (String, String),
}

/// Every step of one rollout, starting with the initial world.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub body_ids: Vec<String>,
    pub frames: Vec<Frame>,
    pub collision_events: Vec<CollisionEvent>,
    pub terminal_world: World,
}

/// Steps a world forward while tracking settle state and collision events.
pub struct Simulator {
    world: World,
    noise: NoiseConfig,
    rng: ChaCha8Rng,
    scratch: Scratch,
    rest_steps: u64,
    pending: Vec<(usize, usize)>,
}

impl Simulator {
    pub fn new(world: World, noise: NoiseConfig, seed: u64) -> Result<Simulator, PhysicsError> {
        noise.validate()?;
        Ok(Simulator {
            world,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scratch: Scratch::default(),
            rest_steps: 0,
            pending: Vec::new(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn into_world(self) -> World {
        self.world
    }

    /// Advances one timestep and returns the collisions that started in it.
    pub fn step(&mut self) -> Result<Vec<CollisionEvent>, PhysicsError> {
        self.pending.clear();
        step_in_place(&mut self.world, &self.noise, &mut self.rng, &mut self.scratch, &mut self.pending)?;
        if self.world.is_at_rest() {
            self.rest_steps += 1;
        } else {
            self.rest_steps = 0;
        }
        let time = self.world.time();
        let bodies = self.world.bodies();
        Ok(self
            .pending
            .iter()
            .map(|&(a, b)| CollisionEvent { time, bodies: (bodies[a].id.clone(), bodies[b].id.clone()) })
            .collect())
    }

    /// True once every dynamic body has been resting for the settle window.
    pub fn is_settled(&self) -> bool {
        self.rest_steps as f64 * self.world.dt() >= SETTLE_WINDOW - 1e-9
    }
}

/// One timestep as a pure function of its inputs.
pub fn step<R: rand::Rng + ?Sized>(world: &World, noise: &NoiseConfig, rng: &mut R) -> Result<World, PhysicsError> {
    noise.validate()?;
    let mut next = world.clone();
    let mut events = Vec::new();
    step_in_place(&mut next, noise, rng, &mut Scratch::default(), &mut events)?;
    Ok(next)
}

pub(crate) fn step_budget(duration: f64, dt: f64) -> u64 {
    // tolerate representation error, e.g. 0.3 / 0.01
    (duration / dt - 1e-9).ceil().max(0.0) as u64
}

/// Runs `ceil(duration / dt)` steps, stopping early once the scene has settled.
pub fn simulate(world: &World, duration: f64, noise: NoiseConfig, seed: u64) -> Result<Trajectory, PhysicsError> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(PhysicsError::InvalidWorld(format!("duration must be >= 0, got {duration}")));
    }
    let budget = step_budget(duration, world.dt());
    let mut sim = Simulator::new(world.clone(), noise, seed)?;
    let mut frames = vec![Frame::capture(sim.world())];
    let mut collision_events = Vec::new();
    for _ in 0..budget {
        collision_events.extend(sim.step()?);
        frames.push(Frame::capture(sim.world()));
        if sim.is_settled() {
            break;
        }
    }
    Ok(Trajectory {
        dt: world.dt(),
        body_ids: world.dynamic_ids(),
        frames,
        collision_events,
        terminal_world: sim.into_world(),
    })
}
