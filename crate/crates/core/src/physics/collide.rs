//! Narrow-phase contact generation between convex parts.
//!
//! Manifolds are produced for shapes closer than a speculative margin, so the
//! solver can stop approaching bodies before they penetrate. Normals point
//! from the first part to the second.

use crate::geometry::{ConvexPolygon, WorldPart};
use crate::math::Vec2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ContactPoint {
    pub point: Vec2,
    /// Signed gap along the normal; negative means penetration.
    pub separation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Manifold {
    pub normal: Vec2,
    pub points: [ContactPoint; 2],
    pub count: usize,
}

impl Manifold {
    fn single(normal: Vec2, point: Vec2, separation: f64) -> Manifold {
        let p = ContactPoint { point, separation };
        Manifold { normal, points: [p, p], count: 1 }
    }

    pub fn points(&self) -> &[ContactPoint] {
        &self.points[..self.count]
    }

    fn flipped(mut self) -> Manifold {
        self.normal = -self.normal;
        self
    }
}

pub(crate) fn collide(a: &WorldPart, b: &WorldPart, margin: f64) -> Option<Manifold> {
    match (a, b) {
        (WorldPart::Circle { center: ca, radius: ra }, WorldPart::Circle { center: cb, radius: rb }) => {
            circles(*ca, *ra, *cb, *rb, margin)
        }
        (WorldPart::Polygon(p), WorldPart::Circle { center, radius }) => polygon_circle(p, *center, *radius, margin),
        (WorldPart::Circle { center, radius }, WorldPart::Polygon(p)) => {
            polygon_circle(p, *center, *radius, margin).map(Manifold::flipped)
        }
        (WorldPart::Polygon(pa), WorldPart::Polygon(pb)) => polygons(pa, pb, margin),
    }
}

fn circles(ca: Vec2, ra: f64, cb: Vec2, rb: f64, margin: f64) -> Option<Manifold> {
    let d = cb - ca;
    let dist = d.length();
    let separation = dist - ra - rb;
    if separation > margin {
        return None;
    }
    let normal = d.normalized().unwrap_or(Vec2::new(0.0, 1.0));
    let point = ca + normal * (ra + 0.5 * separation);
    Some(Manifold::single(normal, point, separation))
}

/// Polygon is the first shape, circle the second.
fn polygon_circle(poly: &ConvexPolygon, center: Vec2, radius: f64, margin: f64) -> Option<Manifold> {
    let verts = poly.vertices();
    let normals = poly.normals();
    let n = verts.len();
    let mut best = 0;
    let mut max_sep = f64::NEG_INFINITY;
    for i in 0..n {
        let s = normals[i].dot(center - verts[i]);
        if s > radius + margin {
            return None;
        }
        if s > max_sep {
            max_sep = s;
            best = i;
        }
    }
    let v1 = verts[best];
    let v2 = verts[(best + 1) % n];
    let (normal, closest) = if max_sep <= 0.0 {
        (normals[best], center - normals[best] * max_sep)
    } else if (center - v1).dot(v2 - v1) <= 0.0 {
        ((center - v1).normalized()?, v1)
    } else if (center - v2).dot(v1 - v2) <= 0.0 {
        ((center - v2).normalized()?, v2)
    } else {
        (normals[best], center - normals[best] * max_sep)
    };
    let separation = (center - closest).dot(normal) - radius;
    if separation > margin {
        return None;
    }
    Some(Manifold::single(normal, closest + normal * (0.5 * separation), separation))
}

fn max_separation(p1: &ConvexPolygon, p2: &ConvexPolygon) -> (usize, f64) {
    let mut best = 0;
    let mut max_sep = f64::NEG_INFINITY;
    for (i, (v, n)) in p1.vertices().iter().zip(p1.normals()).enumerate() {
        let s = p2.vertices().iter().map(|w| n.dot(*w - *v)).fold(f64::INFINITY, f64::min);
        if s > max_sep {
            max_sep = s;
            best = i;
        }
    }
    (best, max_sep)
}

fn clip_segment(input: &[Vec2], normal: Vec2, offset: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(2);
    let d0 = normal.dot(input[0]) - offset;
    let d1 = normal.dot(input[1]) - offset;
    if d0 <= 0.0 {
        out.push(input[0]);
    }
    if d1 <= 0.0 {
        out.push(input[1]);
    }
    if d0 * d1 < 0.0 {
        let t = d0 / (d0 - d1);
        out.push(input[0] + (input[1] - input[0]) * t);
    }
    out
}

fn polygons(pa: &ConvexPolygon, pb: &ConvexPolygon, margin: f64) -> Option<Manifold> {
    let (edge_a, sep_a) = max_separation(pa, pb);
    if sep_a > margin {
        return None;
    }
    let (edge_b, sep_b) = max_separation(pb, pa);
    if sep_b > margin {
        return None;
    }
    // prefer A as the reference face unless B is clearly better
    const REFERENCE_TOLERANCE: f64 = 1e-3;
    let (reference, incident, edge, flip) = if sep_b > sep_a + REFERENCE_TOLERANCE {
        (pb, pa, edge_b, true)
    } else {
        (pa, pb, edge_a, false)
    };

    let ref_normal = reference.normals()[edge];
    let inc_normals = incident.normals();
    let mut inc_edge = 0;
    let mut min_dot = f64::INFINITY;
    for (i, n) in inc_normals.iter().enumerate() {
        let d = ref_normal.dot(*n);
        if d < min_dot {
            min_dot = d;
            inc_edge = i;
        }
    }
    let iv = incident.vertices();
    let incident_seg = [iv[inc_edge], iv[(inc_edge + 1) % iv.len()]];

    let rv = reference.vertices();
    let v11 = rv[edge];
    let v12 = rv[(edge + 1) % rv.len()];
    let tangent = (v12 - v11).normalized()?;

    let clipped = clip_segment(&incident_seg, -tangent, -tangent.dot(v11));
    if clipped.len() < 2 {
        return None;
    }
    let clipped = clip_segment(&clipped, tangent, tangent.dot(v12));
    if clipped.len() < 2 {
        return None;
    }

    let normal = if flip { -ref_normal } else { ref_normal };
    let mut m = Manifold { normal, points: [ContactPoint { point: Vec2::ZERO, separation: 0.0 }; 2], count: 0 };
    for &cp in &clipped {
        let separation = ref_normal.dot(cp - v11);
        if separation <= margin {
            m.points[m.count] = ContactPoint { point: cp - ref_normal * (0.5 * separation), separation };
            m.count += 1;
        }
    }
    (m.count > 0).then_some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(cx: f64, cy: f64, w: f64, h: f64) -> WorldPart {
        WorldPart::Polygon(ConvexPolygon::rect(w, h).unwrap().translated(Vec2::new(cx, cy)))
    }

    #[test]
    fn box_on_floor_has_two_points() {
        let floor = boxed(0.0, -5.0, 100.0, 10.0);
        let crate_ = boxed(0.0, 4.0, 10.0, 10.0); // 1 unit of penetration
        let m = collide(&floor, &crate_, 1.0).unwrap();
        assert_eq!(m.count, 2);
        assert!((m.normal - Vec2::new(0.0, 1.0)).length() < 1e-12);
        for p in m.points() {
            assert!((p.separation + 1.0).abs() < 1e-12);
        }
        // reversed order flips the normal
        let r = collide(&crate_, &floor, 1.0).unwrap();
        assert!((r.normal - Vec2::new(0.0, -1.0)).length() < 1e-12);
    }

    #[test]
    fn speculative_margin() {
        let floor = boxed(0.0, -5.0, 100.0, 10.0);
        let ball = WorldPart::Circle { center: Vec2::new(0.0, 12.0), radius: 10.0 };
        let m = collide(&floor, &ball, 4.0).unwrap();
        assert!((m.points()[0].separation - 2.0).abs() < 1e-12);
        assert!(collide(&floor, &ball, 1.0).is_none());
    }

    #[test]
    fn circle_against_polygon_corner() {
        let sq = boxed(0.0, 0.0, 2.0, 2.0);
        let ball = WorldPart::Circle { center: Vec2::new(2.0, 2.0), radius: 1.0 };
        let m = collide(&sq, &ball, 1.0).unwrap();
        let expected = 2f64.sqrt() - 1.0;
        assert!((m.points()[0].separation - expected).abs() < 1e-12);
        let diag = Vec2::new(1.0, 1.0).normalized().unwrap();
        assert!((m.normal - diag).length() < 1e-12);
    }
}
