//! Hyperboloid-model helpers. Geodesics are represented by spacelike normals,
//! ideal points by null vectors, so common perpendiculars and intersections
//! are single cross products.

use crate::error::GeometryError;
use crate::hyperbolic::{BoundaryPoint, Geodesic, Point};

pub type Vec3 = [f64; 3];

/// `-x0 y0 + x1 y1 + x2 y2`.
pub fn inner(x: Vec3, y: Vec3) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// Lorentzian cross product, orthogonal to both factors for [`inner`].
pub fn cross(x: Vec3, y: Vec3) -> Vec3 {
    [
        -(x[1] * y[2] - x[2] * y[1]),
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]
}

pub fn ideal(p: BoundaryPoint) -> Vec3 {
    match p {
        BoundaryPoint::Real(t) => [(t * t + 1.0) / 2.0, (t * t - 1.0) / 2.0, t],
        BoundaryPoint::Infinity => [0.5, 0.5, 0.0],
    }
}

pub fn point(z: Point) -> Vec3 {
    let r2 = z.x * z.x + z.y * z.y;
    [(r2 + 1.0) / (2.0 * z.y), (r2 - 1.0) / (2.0 * z.y), z.x / z.y]
}

fn scale(x: Vec3, s: f64) -> Vec3 {
    [x[0] * s, x[1] * s, x[2] * s]
}

/// Unit spacelike normal of a geodesic.
pub fn normal(g: &Geodesic) -> Vec3 {
    unit_spacelike(cross(ideal(g.p), ideal(g.q)))
}

pub fn unit_spacelike(m: Vec3) -> Vec3 {
    scale(m, 1.0 / inner(m, m).sqrt())
}

/// Endpoints of the geodesic with spacelike normal `m`.
pub fn endpoints(m: Vec3) -> Result<Geodesic, GeometryError> {
    // ⟨m, ideal(t)⟩ = a t² + b t + c
    let a = (m[1] - m[0]) / 2.0;
    let b = m[2];
    let c = -(m[0] + m[1]) / 2.0;
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-15 * scale {
        return Geodesic::new(BoundaryPoint::Real(-c / b), BoundaryPoint::Infinity);
    }
    let disc = b * b - 4.0 * a * c;
    if !(disc > 0.0) {
        return Err(GeometryError::OutOfDomain {
            what: "normal is not spacelike",
            value: inner(m, m),
        });
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Geodesic::new(BoundaryPoint::Real(r1), BoundaryPoint::Real(r2))
}

/// Point of `ℍ²` represented by a timelike vector (either sheet).
pub fn to_point(x: Vec3) -> Result<Point, GeometryError> {
    let n = -inner(x, x);
    if !(n > 0.0) {
        return Err(GeometryError::Disjoint);
    }
    let mut x = scale(x, 1.0 / n.sqrt());
    if x[0] < 0.0 {
        x = scale(x, -1.0);
    }
    let y = 1.0 / (x[0] - x[1]);
    Point::new(x[2] * y, y)
}

/// Intersection point of two crossing geodesics given by normals.
pub fn intersection(m1: Vec3, m2: Vec3) -> Result<Point, GeometryError> {
    to_point(cross(m1, m2))
}

/// Normal of the common perpendicular of two objects, each a geodesic normal
/// or an ideal point (null vector).
pub fn perpendicular(u: Vec3, v: Vec3) -> Vec3 {
    unit_spacelike(cross(u, v))
}

/// Distance between ultraparallel geodesics given by unit normals.
pub fn normal_distance(m1: Vec3, m2: Vec3) -> f64 {
    inner(m1, m2).abs().acosh()
}
