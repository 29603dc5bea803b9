#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtools_core::geometry::{ConvexPolygon, Shape};
use vtools_core::{Body, BodyKind, BodyRole, Material, Vec2, World};

pub fn wall(id: &str, cx: f64, cy: f64, w: f64, h: f64) -> Body {
    let shape = Shape::Polygon(ConvexPolygon::rect(w, h).unwrap());
    Body::new(id, shape, Vec2::new(cx, cy), 0.0, Material { density: 1.0, friction: 0.5, elasticity: 0.2 }, BodyKind::Static, BodyRole::Plain)
        .unwrap()
}

pub fn ball(id: &str, x: f64, y: f64, r: f64, material: Material) -> Body {
    Body::new(id, Shape::circle(r).unwrap(), Vec2::new(x, y), 0.0, material, BodyKind::Dynamic, BodyRole::Plain).unwrap()
}

pub fn block(id: &str, x: f64, y: f64, w: f64, h: f64, angle: f64, material: Material) -> Body {
    let shape = Shape::Polygon(ConvexPolygon::rect(w, h).unwrap());
    Body::new(id, shape, Vec2::new(x, y), angle, material, BodyKind::Dynamic, BodyRole::Plain).unwrap()
}

/// A walled 600x600 box.
pub fn container() -> World {
    World::standard()
        .with_bodies([
            wall("floor", 300.0, 5.0, 600.0, 10.0),
            wall("left", 5.0, 300.0, 10.0, 600.0),
            wall("right", 595.0, 300.0, 10.0, 600.0),
        ])
        .unwrap()
}

/// A container with a random assortment of non-overlapping balls and blocks.
pub fn random_world(seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = container();
    let n = rng.random_range(2..7);
    let mut placed = 0;
    let mut tries = 0;
    while placed < n && tries < 200 {
        tries += 1;
        let material = Material {
            density: rng.random_range(0.5..3.0),
            friction: rng.random_range(0.0..1.0),
            elasticity: rng.random_range(0.0..0.9),
        };
        let x = rng.random_range(60.0..540.0);
        let y = rng.random_range(40.0..520.0);
        let body = if rng.random_bool(0.5) {
            ball(&format!("b{placed}"), x, y, rng.random_range(8.0..30.0), material)
        } else {
            block(
                &format!("b{placed}"),
                x,
                y,
                rng.random_range(10.0..60.0),
                rng.random_range(10.0..60.0),
                rng.random_range(-1.0..1.0),
                material,
            )
        };
        if world.overlap_test(body.shape(), body.position, body.angle).is_empty() {
            let vx = rng.random_range(-150.0..150.0);
            let vy = rng.random_range(-150.0..150.0);
            world.add_body(body.with_velocity(Vec2::new(vx, vy), rng.random_range(-2.0..2.0))).unwrap();
            placed += 1;
        }
    }
    world
}
