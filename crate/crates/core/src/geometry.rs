//! Shapes, mass properties and exact geometric queries.
//!
//! Overlap uses a strict-interior convention: shapes that only touch along a
//! boundary (zero gap) do not overlap. Distances are zero whenever the closed
//! shapes intersect.

use serde::{Deserialize, Serialize};

use crate::error::ShapeError;
use crate::math::{Aabb, Rot, Vec2};

/// Penetration depth below which two shapes are considered merely touching.
pub const OVERLAP_TOLERANCE: f64 = 1e-9;

/// A convex polygon with counter-clockwise vertices and outward edge normals.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, ShapeError> {
        let n = vertices.len();
        if n < 3 {
            return Err(ShapeError::TooFewVertices(n));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(ShapeError::NonFinite);
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(ShapeError::NotCounterClockwise);
        }
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let edge = b - a;
            let Some(dir) = edge.normalized() else {
                return Err(ShapeError::Degenerate);
            };
            // strictly convex turn at every vertex
            if edge.cross(c - b) <= 0.0 {
                return Err(ShapeError::NotConvex);
            }
            normals.push(Vec2::new(dir.y, -dir.x));
        }
        Ok(ConvexPolygon { vertices, normals })
    }

    /// Axis-aligned box polygon centered at the origin.
    pub fn rect(width: f64, height: f64) -> Result<Self, ShapeError> {
        let (hw, hh) = (width * 0.5, height * 0.5);
        ConvexPolygon::new(vec![
            Vec2::new(-hw, -hh),
            Vec2::new(hw, -hh),
            Vec2::new(hw, hh),
            Vec2::new(-hw, hh),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area, centroid and polar moment of area about the centroid.
    pub fn area_properties(&self) -> (f64, Vec2, f64) {
        // Triangle fan about the first vertex keeps the sums well conditioned.
        let origin = self.vertices[0];
        let mut area = 0.0;
        let mut center = Vec2::ZERO;
        let mut inertia = 0.0;
        for i in 1..self.vertices.len() - 1 {
            let e1 = self.vertices[i] - origin;
            let e2 = self.vertices[i + 1] - origin;
            let d = e1.cross(e2);
            let tri = 0.5 * d;
            area += tri;
            center += (e1 + e2) * (tri / 3.0);
            let intx2 = e1.x * e1.x + e2.x * e1.x + e2.x * e2.x;
            let inty2 = e1.y * e1.y + e2.y * e1.y + e2.y * e2.y;
            inertia += (0.25 / 3.0) * d * (intx2 + inty2);
        }
        let c = center * (1.0 / area);
        // shift the moment from `origin` to the centroid
        let inertia_c = inertia - area * c.length_squared();
        (area, origin + c, inertia_c)
    }

    pub fn translated(&self, offset: Vec2) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
            normals: self.normals.clone(),
        }
    }

    pub fn transformed(&self, pos: Vec2, rot: Rot) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v.rotate(rot) + pos).collect(),
            normals: self.normals.iter().map(|&n| n.rotate(rot)).collect(),
        }
    }

    /// Writes this polygon at the given pose into `out`, reusing its buffers.
    pub fn transform_into(&self, pos: Vec2, rot: Rot, out: &mut ConvexPolygon) {
        out.vertices.clear();
        out.vertices.extend(self.vertices.iter().map(|&v| v.rotate(rot) + pos));
        out.normals.clear();
        out.normals.extend(self.normals.iter().map(|&n| n.rotate(rot)));
    }

    pub fn aabb(&self) -> Aabb {
        let mut b = Aabb::new(self.vertices[0], self.vertices[0]);
        for &v in &self.vertices[1..] {
            b.min = b.min.min(v);
            b.max = b.max.max(v);
        }
        b
    }

    /// Signed distance from `p` to the boundary; negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let mut max_sep = f64::NEG_INFINITY;
        for (v, n) in self.vertices.iter().zip(&self.normals) {
            max_sep = max_sep.max(n.dot(p - *v));
        }
        if max_sep <= 0.0 {
            return max_sep;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| point_segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Largest separation of `other` from this polygon along this polygon's edge normals.
    fn max_separation(&self, other: &ConvexPolygon) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (v, n) in self.vertices.iter().zip(&self.normals) {
            let mut min_proj = f64::INFINITY;
            for w in &other.vertices {
                min_proj = min_proj.min(n.dot(*w - *v));
            }
            best = best.max(min_proj);
        }
        best
    }

    /// Separating-axis gap between two polygons; negative means penetration depth.
    pub fn sat_separation(&self, other: &ConvexPolygon) -> f64 {
        self.max_separation(other).max(other.max_separation(self))
    }
}

pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += vertices[i].cross(vertices[(i + 1) % n]);
    }
    0.5 * twice
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_point_on_segment(p, a, b)).length()
}

pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.length_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// A rigid shape in body-local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Circle { radius: f64 },
    Polygon(ConvexPolygon),
    Compound(Vec<ConvexPolygon>),
}

/// Mass-independent geometric properties of a shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaProperties {
    pub area: f64,
    pub centroid: Vec2,
    /// Polar second moment of area about the centroid.
    pub polar_moment: f64,
}

impl Shape {
    pub fn circle(radius: f64) -> Result<Shape, ShapeError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ShapeError::BadRadius(radius));
        }
        Ok(Shape::Circle { radius })
    }

    pub fn compound(parts: Vec<ConvexPolygon>) -> Result<Shape, ShapeError> {
        if parts.is_empty() {
            return Err(ShapeError::EmptyCompound);
        }
        Ok(Shape::Compound(parts))
    }

    pub fn area_properties(&self) -> AreaProperties {
        match self {
            Shape::Circle { radius } => {
                let area = std::f64::consts::PI * radius * radius;
                AreaProperties { area, centroid: Vec2::ZERO, polar_moment: 0.5 * area * radius * radius }
            }
            Shape::Polygon(p) => {
                let (area, centroid, polar_moment) = p.area_properties();
                AreaProperties { area, centroid, polar_moment }
            }
            Shape::Compound(parts) => {
                let props: Vec<_> = parts.iter().map(ConvexPolygon::area_properties).collect();
                let area: f64 = props.iter().map(|p| p.0).sum();
                let centroid = props.iter().fold(Vec2::ZERO, |acc, p| acc + p.1 * p.0) * (1.0 / area);
                let polar_moment = props
                    .iter()
                    .map(|(a, c, i)| i + a * (*c - centroid).length_squared())
                    .sum();
                AreaProperties { area, centroid, polar_moment }
            }
        }
    }

    /// The same shape with every vertex shifted by `offset`. Circles are
    /// always centered on the body origin and are returned unchanged.
    pub fn translated(&self, offset: Vec2) -> Shape {
        match self {
            Shape::Circle { .. } => self.clone(),
            Shape::Polygon(p) => Shape::Polygon(p.translated(offset)),
            Shape::Compound(parts) => Shape::Compound(parts.iter().map(|p| p.translated(offset)).collect()),
        }
    }

    /// World-space convex pieces of this shape at the given pose.
    pub fn world_parts(&self, pos: Vec2, angle: f64) -> Vec<WorldPart> {
        let rot = Rot::new(angle);
        match self {
            Shape::Circle { radius } => vec![WorldPart::Circle { center: pos, radius: *radius }],
            Shape::Polygon(p) => vec![WorldPart::Polygon(p.transformed(pos, rot))],
            Shape::Compound(parts) => parts.iter().map(|p| WorldPart::Polygon(p.transformed(pos, rot))).collect(),
        }
    }

    /// As [`Shape::world_parts`], overwriting `out` and reusing its storage.
    pub fn write_world_parts(&self, pos: Vec2, angle: f64, out: &mut Vec<WorldPart>) {
        let rot = Rot::new(angle);
        match self {
            Shape::Circle { radius } => {
                out.clear();
                out.push(WorldPart::Circle { center: pos, radius: *radius });
            }
            Shape::Polygon(p) => write_polygons(std::slice::from_ref(p), pos, rot, out),
            Shape::Compound(parts) => write_polygons(parts, pos, rot, out),
        }
    }

    pub fn local_aabb(&self) -> Aabb {
        self.world_parts(Vec2::ZERO, 0.0)
            .iter()
            .map(WorldPart::aabb)
            .reduce(|a, b| a.union(&b))
            .expect("shapes have at least one part")
    }
}

fn write_polygons(local: &[ConvexPolygon], pos: Vec2, rot: Rot, out: &mut Vec<WorldPart>) {
    if out.len() != local.len() || out.iter().any(|p| !matches!(p, WorldPart::Polygon(_))) {
        *out = local.iter().map(|p| WorldPart::Polygon(p.transformed(pos, rot))).collect();
        return;
    }
    for (src, dst) in local.iter().zip(out.iter_mut()) {
        if let WorldPart::Polygon(dst) = dst {
            src.transform_into(pos, rot, dst);
        }
    }
}

/// One convex piece of a shape placed in the world.
#[derive(Clone, Debug, PartialEq)]
pub enum WorldPart {
    Circle { center: Vec2, radius: f64 },
    Polygon(ConvexPolygon),
}

impl WorldPart {
    pub fn aabb(&self) -> Aabb {
        match self {
            WorldPart::Circle { center, radius } => Aabb::new(*center, *center).expanded(*radius),
            WorldPart::Polygon(p) => p.aabb(),
        }
    }

    /// Signed gap between two parts: positive is clearance, negative is
    /// penetration depth (along the separating axis for polygons).
    pub fn gap(&self, other: &WorldPart) -> f64 {
        match (self, other) {
            (WorldPart::Circle { center: a, radius: ra }, WorldPart::Circle { center: b, radius: rb }) => {
                (*b - *a).length() - ra - rb
            }
            (WorldPart::Circle { center, radius }, WorldPart::Polygon(p))
            | (WorldPart::Polygon(p), WorldPart::Circle { center, radius }) => p.signed_distance(*center) - radius,
            (WorldPart::Polygon(a), WorldPart::Polygon(b)) => {
                let sep = a.sat_separation(b);
                if sep < 0.0 {
                    sep
                } else {
                    polygon_distance(a, b)
                }
            }
        }
    }

    /// Strict interior intersection.
    pub fn overlaps(&self, other: &WorldPart) -> bool {
        if !self.aabb().overlaps(&other.aabb()) {
            return false;
        }
        self.gap(other) < -OVERLAP_TOLERANCE
    }

    /// Euclidean distance between the closed parts, zero when they intersect.
    pub fn distance(&self, other: &WorldPart) -> f64 {
        self.gap(other).max(0.0)
    }

    pub fn distance_to_polygon(&self, region: &ConvexPolygon) -> f64 {
        match self {
            WorldPart::Circle { center, radius } => (region.signed_distance(*center) - radius).max(0.0),
            WorldPart::Polygon(p) => {
                if p.sat_separation(region) <= 0.0 {
                    0.0
                } else {
                    polygon_distance(p, region)
                }
            }
        }
    }
}

/// Distance between two disjoint convex polygons.
fn polygon_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let mut best = f64::INFINITY;
    for (x, y) in [(a, b), (b, a)] {
        let ys = y.vertices();
        let n = ys.len();
        for &p in x.vertices() {
            for i in 0..n {
                best = best.min(point_segment_distance(p, ys[i], ys[(i + 1) % n]));
            }
        }
    }
    best
}

/// Tagged-union document form of a shape, as used in level files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeDoc {
    Circle { radius: f64 },
    Polygon { vertices: Vec<Vec2> },
    Compound { parts: Vec<PartDoc> },
}

/// One convex part of a compound, with an optional offset added to its vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDoc {
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: Vec2,
    pub vertices: Vec<Vec2>,
}

fn is_zero(v: &Vec2) -> bool {
    *v == Vec2::ZERO
}

impl ShapeDoc {
    pub fn build(&self) -> Result<Shape, ShapeError> {
        match self {
            ShapeDoc::Circle { radius } => Shape::circle(*radius),
            ShapeDoc::Polygon { vertices } => Ok(Shape::Polygon(ConvexPolygon::new(vertices.clone())?)),
            ShapeDoc::Compound { parts } => Shape::compound(
                parts
                    .iter()
                    .map(|p| ConvexPolygon::new(p.vertices.iter().map(|&v| v + p.offset).collect()))
                    .collect::<Result<_, _>>()?,
            ),
        }
    }
}
