//! One fixed timestep: contact generation, sequential-impulse velocity
//! solve, restitution, collision noise, integration and position correction.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::collide::collide;
use super::{NoiseConfig, World};
use crate::error::PhysicsError;
use crate::geometry::WorldPart;
use crate::math::{Aabb, Rot, Vec2};

const VELOCITY_ITERATIONS: usize = 10;
const POSITION_ITERATIONS: usize = 3;
/// Contacts approaching slower than this (u/s) do not bounce.
const RESTITUTION_THRESHOLD: f64 = 10.0;
/// Penetration allowed before position correction kicks in.
const LINEAR_SLOP: f64 = 0.25;
const BAUMGARTE: f64 = 0.2;
const MAX_CORRECTION: f64 = 4.0;
const MIN_SPECULATIVE_DISTANCE: f64 = 2.0;

#[derive(Clone, Copy, Debug, Default)]
struct PointConstraint {
    ra: Vec2,
    rb: Vec2,
    separation: f64,
    normal_mass: f64,
    tangent_mass: f64,
    /// Normal relative velocity before the solve, for restitution.
    approach: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
    max_normal_impulse: f64,
}

#[derive(Clone, Debug)]
struct Constraint {
    a: usize,
    b: usize,
    normal: Vec2,
    friction: f64,
    restitution: f64,
    slots: [PointConstraint; 2],
    count: usize,
}

impl Constraint {
    fn points(&self) -> &[PointConstraint] {
        &self.slots[..self.count]
    }
}

/// Contact points closer than this (body-local, world units) to one from the
/// previous step inherit its impulses.
const WARM_MATCH_DISTANCE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct CachedContact {
    a: usize,
    b: usize,
    /// Contact point in body `a`'s frame.
    local: Vec2,
    normal: Vec2,
    normal_impulse: f64,
    tangent_impulse: f64,
}

/// Reusable per-rollout buffers.
#[derive(Default)]
pub(crate) struct Scratch {
    parts: Vec<Vec<WorldPart>>,
    aabbs: Vec<Aabb>,
    radii: Vec<f64>,
    statics_ready: bool,
    constraints: Vec<Constraint>,
    velocities: Vec<Vec2>,
    spins: Vec<f64>,
    inv: Vec<(f64, f64)>,
    touching: Vec<(usize, usize)>,
    pairs: Vec<(usize, usize)>,
    parts_a: Vec<WorldPart>,
    parts_b: Vec<WorldPart>,
    cache: Vec<CachedContact>,
}

impl Scratch {
    fn refresh_geometry(&mut self, world: &World) {
        let n = world.bodies.len();
        if self.parts.len() != n {
            self.parts = vec![Vec::new(); n];
            self.aabbs = vec![Aabb::new(Vec2::ZERO, Vec2::ZERO); n];
            self.radii = world
                .bodies
                .iter()
                .map(|b| {
                    let bb = b.shape().local_aabb();
                    bb.min.length().max(bb.max.length())
                })
                .collect();
            self.statics_ready = false;
        }
        for (i, body) in world.bodies.iter().enumerate() {
            if body.is_dynamic() || !self.statics_ready {
                body.write_world_parts(&mut self.parts[i]);
                self.aabbs[i] = self.parts[i].iter().map(WorldPart::aabb).reduce(|a, b| a.union(&b)).unwrap();
            }
        }
        self.statics_ready = true;
    }
}

fn speculative_margin(world: &World, radii: &[f64], a: usize, b: usize) -> f64 {
    let motion = |i: usize| {
        let body = &world.bodies[i];
        body.velocity.length() + body.angular_velocity.abs() * radii[i]
    };
    MIN_SPECULATIVE_DISTANCE + world.dt * (motion(a) + motion(b) + world.gravity.length() * world.dt)
}

fn find_contacts(world: &World, scratch: &mut Scratch) {
    scratch.constraints.clear();
    let bodies = &world.bodies;
    for a in 0..bodies.len() {
        for b in a + 1..bodies.len() {
            if !bodies[a].is_dynamic() && !bodies[b].is_dynamic() {
                continue;
            }
            if !world.in_play(&bodies[a]) && bodies[a].is_dynamic() || !world.in_play(&bodies[b]) && bodies[b].is_dynamic() {
                continue;
            }
            let margin = speculative_margin(world, &scratch.radii, a, b);
            if !scratch.aabbs[a].expanded(margin).overlaps(&scratch.aabbs[b]) {
                continue;
            }
            let friction = (bodies[a].material.friction * bodies[b].material.friction).sqrt();
            let restitution = bodies[a].material.elasticity.max(bodies[b].material.elasticity);
            for pa in &scratch.parts[a] {
                for pb in &scratch.parts[b] {
                    if !pa.aabb().expanded(margin).overlaps(&pb.aabb()) {
                        continue;
                    }
                    if let Some(m) = collide(pa, pb, margin) {
                        let mut c = Constraint {
                            a,
                            b,
                            normal: m.normal,
                            friction,
                            restitution,
                            slots: [PointConstraint::default(); 2],
                            count: m.points().len(),
                        };
                        for (slot, p) in c.slots.iter_mut().zip(m.points()) {
                            slot.ra = p.point - bodies[a].position;
                            slot.rb = p.point - bodies[b].position;
                            slot.separation = p.separation;
                        }
                        scratch.constraints.push(c);
                    }
                }
            }
        }
    }
}

#[inline]
fn relative_velocity(v: &[Vec2], w: &[f64], a: usize, b: usize, ra: Vec2, rb: Vec2) -> Vec2 {
    v[b] + Vec2::cross_scalar_left(w[b], rb) - v[a] - Vec2::cross_scalar_left(w[a], ra)
}

#[inline]
fn effective_mass(ima: f64, iia: f64, imb: f64, iib: f64, ra: Vec2, rb: Vec2, dir: Vec2) -> f64 {
    let rna = ra.cross(dir);
    let rnb = rb.cross(dir);
    let k = ima + imb + iia * rna * rna + iib * rnb * rnb;
    if k > 0.0 {
        1.0 / k
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn apply_impulse(
    v: &mut [Vec2],
    w: &mut [f64],
    inv: &[(f64, f64)],
    a: usize,
    b: usize,
    ra: Vec2,
    rb: Vec2,
    p: Vec2,
) {
    let (ima, iia) = inv[a];
    let (imb, iib) = inv[b];
    v[a] -= p * ima;
    w[a] -= iia * ra.cross(p);
    v[b] += p * imb;
    w[b] += iib * rb.cross(p);
}

/// Advances `world` by one timestep in place. Newly started collisions are
/// appended to `events` as body index pairs.
pub(crate) fn step_in_place<R: Rng + ?Sized>(
    world: &mut World,
    noise: &NoiseConfig,
    rng: &mut R,
    scratch: &mut Scratch,
    events: &mut Vec<(usize, usize)>,
) -> Result<(), PhysicsError> {
    let dt = world.dt;
    scratch.refresh_geometry(world);
    find_contacts(world, scratch);

    scratch.inv.clear();
    scratch.inv.extend(world.bodies.iter().map(|b| (b.inv_mass(), b.inv_inertia())));
    let inv = &scratch.inv;
    scratch.velocities.clear();
    scratch.spins.clear();
    for body in &world.bodies {
        let mut v = body.velocity;
        if body.is_dynamic() {
            v += world.gravity * dt;
        }
        scratch.velocities.push(v);
        scratch.spins.push(body.angular_velocity);
    }
    let v = &mut scratch.velocities;
    let w = &mut scratch.spins;
    let constraints = &mut scratch.constraints;

    for c in constraints.iter_mut() {
        let (ima, iia) = inv[c.a];
        let (imb, iib) = inv[c.b];
        let tangent = c.normal.perp() * -1.0;
        for p in &mut c.slots[..c.count] {
            p.normal_mass = effective_mass(ima, iia, imb, iib, p.ra, p.rb, c.normal);
            p.tangent_mass = effective_mass(ima, iia, imb, iib, p.ra, p.rb, tangent);
            p.approach = relative_velocity(v, w, c.a, c.b, p.ra, p.rb).dot(c.normal);
        }
    }
    warm_start(world, constraints, v, w, inv);

    for _ in 0..VELOCITY_ITERATIONS {
        for c in constraints.iter_mut() {
            let tangent = c.normal.perp() * -1.0;
            for p in &mut c.slots[..c.count] {
                let vt = relative_velocity(v, w, c.a, c.b, p.ra, p.rb).dot(tangent);
                let max_friction = c.friction * p.normal_impulse;
                let new = (p.tangent_impulse - p.tangent_mass * vt).clamp(-max_friction, max_friction);
                let delta = new - p.tangent_impulse;
                p.tangent_impulse = new;
                apply_impulse(v, w, inv, c.a, c.b, p.ra, p.rb, tangent * delta);
            }
            for p in &mut c.slots[..c.count] {
                let vn = relative_velocity(v, w, c.a, c.b, p.ra, p.rb).dot(c.normal);
                // speculative contacts may close their gap this step, no more
                let bias = if p.separation > 0.0 { p.separation / dt } else { 0.0 };
                let new = (p.normal_impulse - p.normal_mass * (vn + bias)).max(0.0);
                let delta = new - p.normal_impulse;
                p.normal_impulse = new;
                p.max_normal_impulse = p.max_normal_impulse.max(new);
                apply_impulse(v, w, inv, c.a, c.b, p.ra, p.rb, c.normal * delta);
            }
        }
    }

    for c in constraints.iter_mut() {
        if c.restitution == 0.0 {
            continue;
        }
        for p in &mut c.slots[..c.count] {
            if p.approach > -RESTITUTION_THRESHOLD || p.max_normal_impulse == 0.0 {
                continue;
            }
            let vn = relative_velocity(v, w, c.a, c.b, p.ra, p.rb).dot(c.normal);
            let new = (p.normal_impulse - p.normal_mass * (vn + c.restitution * p.approach)).max(0.0);
            let delta = new - p.normal_impulse;
            p.normal_impulse = new;
            apply_impulse(v, w, inv, c.a, c.b, p.ra, p.rb, c.normal * delta);
        }
    }

    // Pairs pushing on each other this step; constraints are grouped by pair
    // because contact generation walks pairs in order.
    let touching = &mut scratch.touching;
    touching.clear();
    let mut start = 0;
    while start < constraints.len() {
        let key = (constraints[start].a, constraints[start].b);
        let mut end = start;
        while end < constraints.len() && (constraints[end].a, constraints[end].b) == key {
            end += 1;
        }
        let pushing = constraints[start..end].iter().flat_map(|c| c.points()).any(|p| p.normal_impulse > 0.0);
        if pushing {
            touching.push(key);
            if world.touching.binary_search(&key).is_err() {
                events.push(key);
                if !noise.is_none() {
                    perturb_pair(&mut constraints[start..end], v, w, inv, noise, rng);
                }
            }
        }
        start = end;
    }
    std::mem::swap(&mut world.touching, touching);

    let cache = &mut scratch.cache;
    cache.clear();
    for c in constraints.iter() {
        let rot = Rot::new(world.bodies[c.a].angle);
        for p in c.points() {
            if p.normal_impulse > 0.0 {
                cache.push(CachedContact {
                    a: c.a,
                    b: c.b,
                    local: p.ra.inv_rotate(rot),
                    normal: c.normal,
                    normal_impulse: p.normal_impulse,
                    tangent_impulse: p.tangent_impulse,
                });
            }
        }
    }
    std::mem::swap(&mut world.contacts, cache);

    for (i, body) in world.bodies.iter_mut().enumerate() {
        if !body.is_dynamic() {
            continue;
        }
        body.velocity = v[i];
        body.angular_velocity = w[i];
        body.position += v[i] * dt;
        body.angle += w[i] * dt;
    }

    correct_positions(world, scratch);

    world.steps += 1;
    world.check_finite()
}

/// Seeds each point with the impulse of the matching contact from the
/// previous step and applies it.
fn warm_start(world: &World, constraints: &mut [Constraint], v: &mut [Vec2], w: &mut [f64], inv: &[(f64, f64)]) {
    let cache = &world.contacts;
    if cache.is_empty() {
        return;
    }
    for c in constraints.iter_mut() {
        let lo = cache.partition_point(|k| (k.a, k.b) < (c.a, c.b));
        let hi = lo + cache[lo..].partition_point(|k| (k.a, k.b) == (c.a, c.b));
        if lo == hi {
            continue;
        }
        let rot = Rot::new(world.bodies[c.a].angle);
        let tangent = c.normal.perp() * -1.0;
        for p in &mut c.slots[..c.count] {
            let local = p.ra.inv_rotate(rot);
            let mut best = WARM_MATCH_DISTANCE * WARM_MATCH_DISTANCE;
            let mut found = None;
            for k in &cache[lo..hi] {
                let d = (k.local - local).length_squared();
                if d < best && k.normal.dot(c.normal) > 0.95 {
                    best = d;
                    found = Some(k);
                }
            }
            if let Some(k) = found {
                p.normal_impulse = k.normal_impulse;
                p.tangent_impulse = k.tangent_impulse.clamp(-c.friction * k.normal_impulse, c.friction * k.normal_impulse);
                apply_impulse(v, w, inv, c.a, c.b, p.ra, p.rb, c.normal * p.normal_impulse + tangent * p.tangent_impulse);
            }
        }
    }
}

/// Rotates and rescales the impulses of one freshly started collision.
fn perturb_pair<R: Rng + ?Sized>(
    constraints: &mut [Constraint],
    v: &mut [Vec2],
    w: &mut [f64],
    inv: &[(f64, f64)],
    noise: &NoiseConfig,
    rng: &mut R,
) {
    let angle = if noise.impulse_direction_sd > 0.0 {
        Normal::new(0.0, noise.impulse_direction_sd).expect("sd validated").sample(rng)
    } else {
        0.0
    };
    let scale = if noise.impulse_magnitude_sd > 0.0 {
        (1.0 + Normal::new(0.0, noise.impulse_magnitude_sd).expect("sd validated").sample(rng)).max(0.0)
    } else {
        1.0
    };
    let rot = Rot::new(angle);
    for c in constraints {
        let tangent = c.normal.perp() * -1.0;
        for p in c.points() {
            let impulse = c.normal * p.normal_impulse + tangent * p.tangent_impulse;
            let perturbed = impulse.rotate(rot) * scale;
            apply_impulse(v, w, inv, c.a, c.b, p.ra, p.rb, perturbed - impulse);
        }
    }
}

fn correct_positions(world: &mut World, scratch: &mut Scratch) {
    let dt = world.dt;
    // only pairs predicted to end up penetrating beyond the slop
    let pairs = &mut scratch.pairs;
    pairs.clear();
    for c in &scratch.constraints {
        let deep = c.points().iter().any(|p| {
            let vn = relative_velocity(&scratch.velocities, &scratch.spins, c.a, c.b, p.ra, p.rb).dot(c.normal);
            p.separation + vn * dt < -LINEAR_SLOP
        });
        if deep && pairs.last() != Some(&(c.a, c.b)) {
            pairs.push((c.a, c.b));
        }
    }
    if pairs.is_empty() {
        return;
    }
    let inv = &scratch.inv;
    for _ in 0..POSITION_ITERATIONS {
        let mut worst: f64 = 0.0;
        for &(a, b) in pairs.iter() {
            world.bodies[a].write_world_parts(&mut scratch.parts_a);
            world.bodies[b].write_world_parts(&mut scratch.parts_b);
            for pa in &scratch.parts_a {
                for pb in &scratch.parts_b {
                    let Some(m) = collide(pa, pb, 0.0) else { continue };
                    for cp in m.points() {
                        worst = worst.min(cp.separation);
                        let correction = (BAUMGARTE * (cp.separation + LINEAR_SLOP)).clamp(-MAX_CORRECTION, 0.0);
                        if correction == 0.0 {
                            continue;
                        }
                        let (ima, iia) = inv[a];
                        let (imb, iib) = inv[b];
                        let ra = cp.point - world.bodies[a].position;
                        let rb = cp.point - world.bodies[b].position;
                        let k = effective_mass(ima, iia, imb, iib, ra, rb, m.normal);
                        let p = m.normal * (-correction * k);
                        let body_a = &mut world.bodies[a];
                        body_a.position -= p * ima;
                        body_a.angle -= iia * ra.cross(p);
                        let body_b = &mut world.bodies[b];
                        body_b.position += p * imb;
                        body_b.angle += iib * rb.cross(p);
                    }
                }
            }
        }
        if worst >= -3.0 * LINEAR_SLOP {
            break;
        }
    }
}
