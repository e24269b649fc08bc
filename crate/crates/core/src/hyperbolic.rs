//! Upper half-plane primitives: Möbius maps, ideal points, geodesics, ideal
//! triangles and the shear of two ideal triangles along a common edge.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Classification tolerance on `|trace| - 2`.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Residual tolerance for geometric constructions.
pub const GEOMETRIC_TOL: f64 = 1e-9;
/// Trace defect allowed in [`Isometry::parabolic_fixed_point`], relative to
/// the squared size of the entries.
pub const PARABOLIC_REL_TOL: f64 = 1e-9;

/// Radius of the inscribed circle of any ideal triangle, `log(3)/2`.
pub fn inradius() -> f64 {
    3f64.ln() / 2.0
}

/// A point of `∂ℍ² = ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Real(f64),
    Infinity,
}

impl BoundaryPoint {
    pub fn is_infinite(self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    pub fn real(self) -> Option<f64> {
        match self {
            BoundaryPoint::Real(x) => Some(x),
            BoundaryPoint::Infinity => None,
        }
    }

    /// Coincidence test; finite points compare with an absolute/relative tolerance.
    pub fn approx_eq(self, other: BoundaryPoint, tol: f64) -> bool {
        match (self, other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => true,
            (BoundaryPoint::Real(a), BoundaryPoint::Real(b)) => {
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            }
            // a huge finite coordinate is numerically at infinity
            (BoundaryPoint::Real(a), BoundaryPoint::Infinity)
            | (BoundaryPoint::Infinity, BoundaryPoint::Real(a)) => a.abs() * tol > 1.0,
        }
    }

    /// Distance on the circle `∂ℍ²` seen through the Cayley map, in `[0, 2]`.
    /// Used for residuals that must treat `∞` like any other point.
    pub fn chordal_distance(self, other: BoundaryPoint) -> f64 {
        let angle = |p: BoundaryPoint| match p {
            BoundaryPoint::Infinity => (0.0, -1.0),
            BoundaryPoint::Real(x) => {
                let d = 1.0 + x * x;
                (2.0 * x / d, (1.0 - x * x) / d)
            }
        };
        let (a0, a1) = angle(self);
        let (b0, b1) = angle(other);
        ((a0 - b0).powi(2) + (a1 - b1).powi(2)).sqrt()
    }
}

impl From<f64> for BoundaryPoint {
    fn from(x: f64) -> Self {
        BoundaryPoint::Real(x)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Real(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => write!(f, "∞"),
        }
    }
}

/// Sign of the cyclic order of three distinct boundary points: `+1` when
/// `(p, q, r)` runs in the increasing direction of `ℝ ∪ {∞}`, `-1` otherwise.
pub fn cyclic_orientation(p: BoundaryPoint, q: BoundaryPoint, r: BoundaryPoint) -> i8 {
    use BoundaryPoint::*;
    match (p, q, r) {
        (Infinity, Real(b), Real(c)) | (Real(b), Real(c), Infinity) | (Real(c), Infinity, Real(b)) => {
            if b < c {
                1
            } else {
                -1
            }
        }
        (Real(a), Real(b), Real(c)) => {
            let s = (b - a) * (c - b) * (c - a);
            if s > 0.0 {
                1
            } else {
                -1
            }
        }
        _ => 0,
    }
}

/// A point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::InvalidPoint { x, y });
        }
        Ok(Point { x, y })
    }
}

/// Orientation-preserving isometry of `ℍ²`, a unit-determinant real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Fixed points of a non-elliptic isometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPoints {
    Parabolic(BoundaryPoint),
    Hyperbolic {
        attracting: BoundaryPoint,
        repelling: BoundaryPoint,
    },
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds an isometry from any matrix with positive determinant,
    /// rescaling it to determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, GeometryError> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(GeometryError::NonPositiveDeterminant(det));
        }
        let s = det.sqrt();
        Ok(Isometry {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Translation of length `len` along the imaginary axis, towards `∞`.
    pub fn axial_translation(len: f64) -> Self {
        let h = (len / 2.0).exp();
        Isometry {
            a: h,
            b: 0.0,
            c: 0.0,
            d: 1.0 / h,
        }
    }

    /// Rotation by angle `theta` about `i`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Isometry {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    fn renormalized(self) -> Self {
        let det = self.det();
        if det > 0.0 && (det - 1.0).abs() > 1e-15 {
            let s = det.sqrt();
            Isometry {
                a: self.a / s,
                b: self.b / s,
                c: self.c / s,
                d: self.d / s,
            }
        } else {
            self
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .renormalized()
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self ∘ other ∘ self⁻¹`.
    pub fn conjugate(&self, other: &Isometry) -> Isometry {
        self.compose(other).compose(&self.inverse())
    }

    pub fn pow(&self, exponent: i32) -> Isometry {
        let base = if exponent < 0 { self.inverse() } else { *self };
        (0..exponent.unsigned_abs()).fold(Isometry::IDENTITY, |acc, _| acc.compose(&base))
    }

    /// Entrywise distance in `PSL(2,ℝ)`, minimised over the sign ambiguity.
    pub fn distance(&self, other: &Isometry) -> f64 {
        let diff = |s: f64| {
            (self.a - s * other.a)
                .abs()
                .max((self.b - s * other.b).abs())
                .max((self.c - s * other.c).abs())
                .max((self.d - s * other.d).abs())
        };
        diff(1.0).min(diff(-1.0))
    }

    pub fn apply(&self, p: Point) -> Point {
        // (a z + b) / (c z + d) with z = x + iy
        let (nr, ni) = (self.a * p.x + self.b, self.a * p.y);
        let (dr, di) = (self.c * p.x + self.d, self.c * p.y);
        let den = dr * dr + di * di;
        Point {
            x: (nr * dr + ni * di) / den,
            y: (ni * dr - nr * di) / den,
        }
    }

    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        match p {
            BoundaryPoint::Real(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real((self.a * x + self.b) / den)
                }
            }
            BoundaryPoint::Infinity => {
                if self.c == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real(self.a / self.c)
                }
            }
        }
    }

    pub fn apply_geodesic(&self, g: &Geodesic) -> Geodesic {
        Geodesic {
            p: self.apply_boundary(g.p),
            q: self.apply_boundary(g.q),
            oriented: g.oriented,
        }
    }

    pub fn classify(&self) -> IsometryKind {
        let t = self.trace().abs();
        if (t - 2.0).abs() <= CLASSIFY_TOL {
            let off = self.b.abs().max(self.c.abs()).max((self.a - self.d).abs());
            if off <= CLASSIFY_TOL {
                IsometryKind::Identity
            } else {
                IsometryKind::Parabolic
            }
        } else if t < 2.0 {
            IsometryKind::Elliptic
        } else {
            IsometryKind::Hyperbolic
        }
    }

    /// `2 arccosh(|tr|/2)`; non-hyperbolic input (including traces within
    /// the classification tolerance of 2) is an error rather than zero.
    pub fn translation_length(&self) -> Result<f64, GeometryError> {
        match self.classify() {
            IsometryKind::Hyperbolic => Ok(2.0 * (self.trace().abs() / 2.0).acosh()),
            kind => Err(GeometryError::NotHyperbolic(kind)),
        }
    }

    /// Fixed point of an isometry known to be parabolic. Conjugating by
    /// large matrices leaves a trace defect of order `ε · |entries|²`, which
    /// is tolerated here.
    pub fn parabolic_fixed_point(&self) -> Result<BoundaryPoint, GeometryError> {
        let size = self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs()).max(1.0);
        if (self.trace().abs() - 2.0).abs() > PARABOLIC_REL_TOL * size * size {
            return Err(GeometryError::NotParabolic);
        }
        let off = self.b.abs().max(self.c.abs()).max((self.a - self.d).abs());
        if off <= CLASSIFY_TOL * size {
            return Err(GeometryError::NoBoundaryFixedPoint(IsometryKind::Identity));
        }
        Ok(if self.c.abs() <= CLASSIFY_TOL * (self.a.abs() + self.d.abs()) {
            BoundaryPoint::Infinity
        } else {
            BoundaryPoint::Real((self.a - self.d) / (2.0 * self.c))
        })
    }

    pub fn fixed_points(&self) -> Result<FixedPoints, GeometryError> {
        let kind = self.classify();
        match kind {
            IsometryKind::Identity | IsometryKind::Elliptic => Err(GeometryError::NoBoundaryFixedPoint(kind)),
            IsometryKind::Parabolic => {
                let p = if self.c.abs() <= CLASSIFY_TOL * (self.a.abs() + self.d.abs()) {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real((self.a - self.d) / (2.0 * self.c))
                };
                Ok(FixedPoints::Parabolic(p))
            }
            IsometryKind::Hyperbolic => {
                // roots of c z² + (d - a) z - b = 0
                let (a, b, c, d) = (self.a, self.b, self.c, self.d);
                let t = self.trace();
                let root = (t * t - 4.0).sqrt();
                let e = d - a;
                let q = -0.5 * (e + if e >= 0.0 { root } else { -root });
                let z1 = if c == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real(q / c)
                };
                let z2 = BoundaryPoint::Real(-b / q);
                // the derivative at a fixed point z is (cz + d)^-2
                let attracts = |z: BoundaryPoint| match z {
                    BoundaryPoint::Infinity => a.abs() > d.abs(),
                    BoundaryPoint::Real(x) => (c * x + d).abs() > 1.0,
                };
                let (attracting, repelling) = if attracts(z1) { (z1, z2) } else { (z2, z1) };
                Ok(FixedPoints::Hyperbolic { attracting, repelling })
            }
        }
    }

    /// Orientation-preserving map sending `from0` to `0` and `to_inf` to `∞`.
    pub fn sending_to_zero_infinity(
        from0: BoundaryPoint,
        to_inf: BoundaryPoint,
    ) -> Result<Isometry, GeometryError> {
        use BoundaryPoint::*;
        match (from0, to_inf) {
            (Real(u), Real(v)) => {
                if u == v {
                    return Err(GeometryError::CoincidentPoints);
                }
                if u > v {
                    Isometry::new(1.0, -u, 1.0, -v)
                } else {
                    Isometry::new(-1.0, u, 1.0, -v)
                }
            }
            (Infinity, Real(v)) => Isometry::new(0.0, -1.0, 1.0, -v),
            (Real(u), Infinity) => Isometry::new(1.0, -u, 0.0, 1.0),
            (Infinity, Infinity) => Err(GeometryError::CoincidentPoints),
        }
    }

    /// Orientation-preserving map sending the oriented geodesic `from → to`
    /// onto the imaginary axis (`from ↦ 0`, `to ↦ ∞`) with `base ↦ i`.
    pub fn normalizing_axis(
        from: BoundaryPoint,
        to: BoundaryPoint,
        base: Point,
    ) -> Result<Isometry, GeometryError> {
        let g = Isometry::sending_to_zero_infinity(from, to)?;
        let y = g.apply(base).y;
        let s = y.sqrt();
        Ok(Isometry {
            a: 1.0 / s,
            b: 0.0,
            c: 0.0,
            d: s,
        }
        .compose(&g))
    }
}

impl std::ops::Mul for Isometry {
    type Output = Isometry;
    fn mul(self, rhs: Isometry) -> Isometry {
        self.compose(&rhs)
    }
}

/// Complete geodesic with distinct ideal endpoints; when `oriented` it runs
/// from `p` to `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub p: BoundaryPoint,
    pub q: BoundaryPoint,
    pub oriented: bool,
}

impl Geodesic {
    pub fn new(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self, GeometryError> {
        if p.approx_eq(q, 1e-14) {
            return Err(GeometryError::CoincidentPoints);
        }
        Ok(Geodesic { p, q, oriented: false })
    }

    pub fn oriented(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self, GeometryError> {
        Ok(Geodesic {
            oriented: true,
            ..Geodesic::new(p, q)?
        })
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic {
            p: self.q,
            q: self.p,
            oriented: self.oriented,
        }
    }

    pub fn has_endpoint(&self, v: BoundaryPoint, tol: f64) -> bool {
        self.p.approx_eq(v, tol) || self.q.approx_eq(v, tol)
    }

    /// Reflection of a boundary point in this geodesic.
    pub fn reflect_boundary(&self, t: BoundaryPoint) -> BoundaryPoint {
        use BoundaryPoint::*;
        match (self.p, self.q) {
            (Real(a), Real(b)) => {
                let m = (a + b) / 2.0;
                let r = (b - a) / 2.0;
                match t {
                    Infinity => Real(m),
                    Real(x) if x == m => Infinity,
                    Real(x) => Real(m + r * r / (x - m)),
                }
            }
            (Real(e), Infinity) | (Infinity, Real(e)) => match t {
                Infinity => Infinity,
                Real(x) => Real(2.0 * e - x),
            },
            (Infinity, Infinity) => t,
        }
    }

    /// Reflection of an interior point in this geodesic.
    pub fn reflect_point(&self, z: Point) -> Point {
        use BoundaryPoint::*;
        match (self.p, self.q) {
            (Real(a), Real(b)) => {
                let m = (a + b) / 2.0;
                let r2 = ((b - a) / 2.0).powi(2);
                let (dx, dy) = (z.x - m, z.y);
                let n = dx * dx + dy * dy;
                Point {
                    x: m + r2 * dx / n,
                    y: r2 * dy / n,
                }
            }
            (Real(e), Infinity) | (Infinity, Real(e)) => Point { x: 2.0 * e - z.x, y: z.y },
            (Infinity, Infinity) => z,
        }
    }
}

/// Hyperbolic distance.
pub fn dist(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    // 2 arcsinh(|p - q| / (2 sqrt(y_p y_q))) is stable for nearby points
    2.0 * ((dx * dx + dy * dy).sqrt() / (2.0 * (p.y * q.y).sqrt())).asinh()
}

/// Unsigned distance from a point to a geodesic.
pub fn dist_to_geodesic(p: Point, g: &Geodesic) -> f64 {
    signed_dist_to_geodesic(p, g).abs()
}

/// Distance to a geodesic, positive on the left of `g.p → g.q`.
pub fn signed_dist_to_geodesic(p: Point, g: &Geodesic) -> f64 {
    use BoundaryPoint::*;
    match (g.p, g.q) {
        (Real(a), Infinity) => ((a - p.x) / p.y).asinh(),
        (Infinity, Real(a)) => ((p.x - a) / p.y).asinh(),
        (Real(a), Real(b)) => {
            // (x - c)² - r² = (x - a)(x - b) avoids cancellation for far endpoints
            let w = (b - a).abs();
            let s = (p.x - a) / w * ((p.x - b) / p.y) + p.y / w;
            // for a < b the left side is the outside of the semicircle
            if a < b {
                s.asinh()
            } else {
                (-s).asinh()
            }
        }
        (Infinity, Infinity) => f64::NAN,
    }
}

/// Signed position of a point's projection along an oriented geodesic,
/// measured from the projection of `i` under the normalising map.
fn axial_coordinate(p: Point, g: &Geodesic) -> Result<f64, GeometryError> {
    let h = Isometry::sending_to_zero_infinity(g.p, g.q)?;
    let z = h.apply(p);
    Ok(0.5 * (z.x * z.x + z.y * z.y).ln())
}

/// Cross ratio `((p1−p3)(p2−p4)) / ((p1−p4)(p2−p3))`, with factors involving
/// `∞` dropped (the limit value).
pub fn cross_ratio(
    p1: BoundaryPoint,
    p2: BoundaryPoint,
    p3: BoundaryPoint,
    p4: BoundaryPoint,
) -> Result<f64, GeometryError> {
    let pts = [p1, p2, p3, p4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            if pts[i].approx_eq(pts[j], 1e-14) {
                return Err(GeometryError::CoincidentPoints);
            }
        }
    }
    let factor = |u: BoundaryPoint, v: BoundaryPoint| -> f64 {
        match (u, v) {
            (BoundaryPoint::Real(x), BoundaryPoint::Real(y)) => x - y,
            _ => 1.0,
        }
    };
    // each factor containing ∞ pairs with another one in the ratio whose limit is 1
    let num = factor(p1, p3) * factor(p2, p4);
    let den = factor(p1, p4) * factor(p2, p3);
    Ok(num / den)
}

/// Ideal triangle with vertices listed in positive cyclic order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealTriangle {
    pub v: [BoundaryPoint; 3],
}

impl IdealTriangle {
    /// Orders the vertices positively; rejects coincident vertices.
    pub fn new(v1: BoundaryPoint, v2: BoundaryPoint, v3: BoundaryPoint) -> Result<Self, GeometryError> {
        if v1.approx_eq(v2, 1e-14) || v2.approx_eq(v3, 1e-14) || v1.approx_eq(v3, 1e-14) {
            return Err(GeometryError::CoincidentPoints);
        }
        let v = if cyclic_orientation(v1, v2, v3) > 0 {
            [v1, v2, v3]
        } else {
            [v1, v3, v2]
        };
        Ok(IdealTriangle { v })
    }

    /// Index of the vertex opposite to the side `{p, q}`, if that side exists.
    pub fn apex_opposite(&self, p: BoundaryPoint, q: BoundaryPoint, tol: f64) -> Option<usize> {
        (0..3).find(|&k| {
            let s = [self.v[(k + 1) % 3], self.v[(k + 2) % 3]];
            (s[0].approx_eq(p, tol) && s[1].approx_eq(q, tol)) || (s[0].approx_eq(q, tol) && s[1].approx_eq(p, tol))
        })
    }

    /// Side `k` is the geodesic opposite vertex `k`, oriented in the
    /// triangle's positive direction.
    pub fn side(&self, k: usize) -> Geodesic {
        Geodesic {
            p: self.v[(k + 1) % 3],
            q: self.v[(k + 2) % 3],
            oriented: true,
        }
    }
}

/// Inscribed circle: centre and radius (always `log(3)/2`).
pub fn incircle(t: &IdealTriangle) -> Result<(Point, f64), GeometryError> {
    // send v0 ↦ 0, v1 ↦ ∞; v2 lands at some real a and the triangle is (0, a, ∞)
    let h = Isometry::sending_to_zero_infinity(t.v[0], t.v[1])?;
    let a = h.apply_boundary(t.v[2]).real().ok_or(GeometryError::CoincidentPoints)?;
    let centre = Point {
        x: a / 2.0,
        y: a.abs() * 3f64.sqrt() / 2.0,
    };
    Ok((h.inverse().apply(centre), inradius()))
}

/// Foot of the perpendicular from the ideal vertex `apex` onto the geodesic `side`.
pub fn perpendicular_foot(apex: BoundaryPoint, side: &Geodesic) -> Result<Point, GeometryError> {
    let h = Isometry::sending_to_zero_infinity(side.p, side.q)?;
    let a = h.apply_boundary(apex).real().ok_or(GeometryError::CoincidentPoints)?;
    if a == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    Ok(h.inverse().apply(Point { x: 0.0, y: a.abs() }))
}

/// Shear points; entry `k` lies on side `k` (opposite vertex `k`).
pub fn shear_points(t: &IdealTriangle) -> Result<[Point; 3], GeometryError> {
    let mut out = [Point { x: 0.0, y: 1.0 }; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = perpendicular_foot(t.v[k], &t.side(k))?;
    }
    Ok(out)
}

fn adjacent_apexes(
    ta: &IdealTriangle,
    tb: &IdealTriangle,
    edge: &Geodesic,
) -> Result<(BoundaryPoint, BoundaryPoint), GeometryError> {
    if !edge.oriented {
        return Err(GeometryError::UnorientedEdge);
    }
    let tol = 1e-9;
    let ka = ta.apex_opposite(edge.p, edge.q, tol).ok_or(GeometryError::NotAdjacent)?;
    let kb = tb.apex_opposite(edge.p, edge.q, tol).ok_or(GeometryError::NotAdjacent)?;
    let (wa, wb) = (ta.v[ka], tb.v[kb]);
    if wa.approx_eq(wb, tol) {
        return Err(GeometryError::NotAdjacent);
    }
    Ok((wa, wb))
}

/// Shear of `tb` relative to `ta` along the oriented common edge: the signed
/// distance, in the edge's direction, from the shear point of `ta` to the
/// shear point of `tb`. Log-cross-ratio evaluation.
pub fn shear(ta: &IdealTriangle, tb: &IdealTriangle, edge: &Geodesic) -> Result<f64, GeometryError> {
    let (wa, wb) = adjacent_apexes(ta, tb, edge)?;
    shear_from_quad(edge.p, edge.q, wa, wb)
}

/// Same quantity as [`shear`] from the four ideal points directly.
pub fn shear_from_quad(
    tail: BoundaryPoint,
    head: BoundaryPoint,
    apex_a: BoundaryPoint,
    apex_b: BoundaryPoint,
) -> Result<f64, GeometryError> {
    let cr = cross_ratio(tail, head, apex_b, apex_a)?;
    if !(cr < 0.0) {
        return Err(GeometryError::NotAdjacent);
    }
    Ok((-cr).ln())
}

/// [`shear`] computed from the two shear points and their distance.
pub fn shear_via_shear_points(
    ta: &IdealTriangle,
    tb: &IdealTriangle,
    edge: &Geodesic,
) -> Result<f64, GeometryError> {
    let (wa, wb) = adjacent_apexes(ta, tb, edge)?;
    let sa = perpendicular_foot(wa, edge)?;
    let sb = perpendicular_foot(wb, edge)?;
    let magnitude = dist(sa, sb);
    let ahead = axial_coordinate(sb, edge)? >= axial_coordinate(sa, edge)?;
    Ok(if ahead { magnitude } else { -magnitude })
}

/// Length of the horocycle through a point at injectivity radius `r` in a cusp.
pub fn horocycle_length_at_radius(r: f64) -> Result<f64, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::OutOfDomain {
            what: "injectivity radius",
            value: r,
        });
    }
    Ok(2.0 * r.sinh())
}

/// Length of the horocycle through `z` centred at the fixed point of the
/// parabolic `cusp`, measured modulo `cusp` (i.e. on the quotient cusp).
pub fn horocycle_length(cusp: &Isometry, z: Point) -> Result<f64, GeometryError> {
    let q = cusp.parabolic_fixed_point()?;
    let g = match q {
        BoundaryPoint::Infinity => Isometry::IDENTITY,
        BoundaryPoint::Real(q) => Isometry::new(0.0, -1.0, 1.0, -q)?,
    };
    let t = g.conjugate(cusp);
    // t = ±[[1, w], [0, 1]]
    let w = if t.a < 0.0 { -t.b } else { t.b };
    Ok(w.abs() / g.apply(z).y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryPoint::{Infinity, Real};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn compose_identity_and_diagonal() {
        let a = Isometry::new(2.0, 1.0, 3.0, 2.0).unwrap();
        assert!(Isometry::IDENTITY.compose(&a).distance(&a) < 1e-15);
        let h = Isometry::axial_translation(1.0);
        let hh = h.compose(&h);
        assert!(hh.distance(&Isometry::new(1f64.exp(), 0.0, 0.0, (-1f64).exp()).unwrap()) < 1e-14);
    }

    #[test]
    fn classification() {
        assert_eq!(Isometry::new(1.0, 1.0, 0.0, 1.0).unwrap().classify(), IsometryKind::Parabolic);
        assert_eq!(Isometry::new(2.0, 0.0, 0.0, 0.5).unwrap().classify(), IsometryKind::Hyperbolic);
        let rot = Isometry::rotation(std::f64::consts::FRAC_PI_2);
        assert!(close(rot.trace(), 2f64.sqrt(), 1e-15));
        assert_eq!(rot.classify(), IsometryKind::Elliptic);
        assert_eq!(Isometry::IDENTITY.classify(), IsometryKind::Identity);
    }

    #[test]
    fn translation_lengths() {
        assert!(close(Isometry::axial_translation(1.0).translation_length().unwrap(), 1.0, 1e-14));
        let m = Isometry::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!(close(m.translation_length().unwrap(), 1.386_294_361_119_890_6, 1e-14));
        let near = Isometry::new(1.0 + 1e-11, 1.0, 0.0, 1.0 / (1.0 + 1e-11)).unwrap();
        assert!(near.translation_length().is_err());
        assert!(Isometry::rotation(0.3).translation_length().is_err());
    }

    #[test]
    fn fixed_points_of_standard_maps() {
        let m = Isometry::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(
            m.fixed_points().unwrap(),
            FixedPoints::Hyperbolic {
                attracting: Infinity,
                repelling: Real(0.0)
            }
        );
        let p = Isometry::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.fixed_points().unwrap(), FixedPoints::Parabolic(Infinity));
        let q = Isometry::new(1.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(q.fixed_points().unwrap(), FixedPoints::Parabolic(Real(0.0)));
        assert!(Isometry::rotation(1.0).fixed_points().is_err());
    }

    #[test]
    fn cross_ratio_values() {
        assert!(close(cross_ratio(Real(0.0), Real(1.0), Real(2.0), Real(3.0)).unwrap(), 4.0 / 3.0, 1e-15));
        let (b, c, d) = (0.3, -1.7, 2.5);
        let v = cross_ratio(Infinity, Real(b), Real(c), Real(d)).unwrap();
        assert!(close(v, (b - d) / (b - c), 1e-15));
        assert!(cross_ratio(Real(0.0), Real(0.0), Real(2.0), Real(3.0)).is_err());
    }

    #[test]
    fn incircle_of_symmetric_triangle() {
        let t = IdealTriangle::new(Real(-1.0), Real(1.0), Infinity).unwrap();
        let (c, r) = incircle(&t).unwrap();
        assert!(close(c.x, 0.0, 1e-12) && close(c.y, 3f64.sqrt(), 1e-12));
        assert_eq!(r, 3f64.ln() / 2.0);
        for k in 0..3 {
            assert!(close(dist_to_geodesic(c, &t.side(k)), r, 1e-9));
        }
    }

    #[test]
    fn incircle_centre_fixed_by_order_three_symmetry() {
        let t = IdealTriangle::new(Real(0.0), Real(1.0), Infinity).unwrap();
        let (c, _) = incircle(&t).unwrap();
        // z ↦ 1/(1 - z) permutes 0 → 1 → ∞ → 0
        let rot = Isometry::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let c2 = rot.apply(c);
        assert!(dist(c, c2) < 1e-12);
    }

    #[test]
    fn shear_points_of_symmetric_triangle() {
        let t = IdealTriangle::new(Real(-1.0), Real(1.0), Infinity).unwrap();
        let pts = shear_points(&t).unwrap();
        let expected = [Point { x: 0.0, y: 1.0 }, Point { x: 1.0, y: 2.0 }, Point { x: -1.0, y: 2.0 }];
        for e in expected {
            assert!(pts.iter().any(|p| dist(*p, e) < 1e-12), "missing {e:?}");
        }
        let (c, r) = incircle(&t).unwrap();
        for (k, p) in pts.iter().enumerate() {
            assert!(dist_to_geodesic(*p, &t.side(k)) < 1e-9);
            assert!(close(dist(*p, c), r, 1e-9));
        }
    }

    #[test]
    fn shear_sign_calibration() {
        let edge = Geodesic::oriented(Real(0.0), Infinity).unwrap();
        let ta = IdealTriangle::new(Real(-1.0), Real(0.0), Infinity).unwrap();
        let tb = IdealTriangle::new(Real(0.0), Real(1.0), Infinity).unwrap();
        assert!(shear(&ta, &tb, &edge).unwrap().abs() < 1e-15);
        let ta3 = IdealTriangle::new(Real(-3.0), Real(0.0), Infinity).unwrap();
        let s = shear(&ta3, &tb, &edge).unwrap();
        assert!(close(s, -3f64.ln(), 1e-14));
        assert!(close(shear_via_shear_points(&ta3, &tb, &edge).unwrap(), s, 1e-12));
        // apex of tb moving towards the head of the edge increases the shear
        let tb5 = IdealTriangle::new(Real(0.0), Real(5.0), Infinity).unwrap();
        assert!(shear(&ta, &tb5, &edge).unwrap() > 0.0);
    }

    #[test]
    fn shear_rejects_bad_input() {
        let ta = IdealTriangle::new(Real(-1.0), Real(0.0), Infinity).unwrap();
        let tb = IdealTriangle::new(Real(0.0), Real(1.0), Infinity).unwrap();
        let unoriented = Geodesic::new(Real(0.0), Infinity).unwrap();
        assert!(matches!(shear(&ta, &tb, &unoriented), Err(GeometryError::UnorientedEdge)));
        let far = IdealTriangle::new(Real(2.0), Real(3.0), Infinity).unwrap();
        let edge = Geodesic::oriented(Real(0.0), Infinity).unwrap();
        assert!(matches!(shear(&ta, &far, &edge), Err(GeometryError::NotAdjacent)));
        let same_side = IdealTriangle::new(Real(-2.0), Real(0.0), Infinity).unwrap();
        assert!(shear(&ta, &same_side, &edge).is_err());
    }

    #[test]
    fn distances() {
        let p = Point::new(0.0, 1.0).unwrap();
        assert!(close(dist(p, Point::new(0.0, 1f64.exp()).unwrap()), 1.0, 1e-15));
        let g = Geodesic::new(Real(1.0), Infinity).unwrap();
        assert!(close(dist_to_geodesic(p, &g), 1f64.asinh(), 1e-15));
        let circle = Geodesic::new(Real(-1.0), Real(1.0)).unwrap();
        assert!(close(dist_to_geodesic(Point::new(0.0, 2.0).unwrap(), &circle), 2f64.ln(), 1e-14));
    }

    #[test]
    fn signed_distance_sides() {
        let up = Geodesic::oriented(Real(0.0), Infinity).unwrap();
        assert!(signed_dist_to_geodesic(Point { x: -1.0, y: 1.0 }, &up) > 0.0);
        let arc = Geodesic::oriented(Real(-1.0), Real(1.0)).unwrap();
        // travelling from -1 to 1 over the top, the inside is on the right
        assert!(signed_dist_to_geodesic(Point { x: 0.0, y: 0.5 }, &arc) < 0.0);
        assert!(signed_dist_to_geodesic(Point { x: 0.0, y: 0.5 }, &arc.reversed()) > 0.0);
    }

    #[test]
    fn horocycle_lengths() {
        assert!(close(horocycle_length_at_radius(1f64.asinh()).unwrap(), 2.0, 1e-15));
        let rho = 3f64.ln() / 4.0;
        assert!(close(horocycle_length_at_radius(rho).unwrap(), 0.556_238_327_300_899_9, 1e-14));
        assert!(horocycle_length_at_radius(0.0).is_err());
        let cusp = Isometry::new(1.0, 2.0, 0.0, 1.0).unwrap();
        assert!(close(horocycle_length(&cusp, Point { x: 0.3, y: 1.0 }).unwrap(), 2.0, 1e-15));
        let at_zero = Isometry::new(1.0, 0.0, 2.0, 1.0).unwrap();
        // horoball of length 2 at 0 has Euclidean diameter 1
        assert!(close(horocycle_length(&at_zero, Point { x: 0.0, y: 1.0 }).unwrap(), 2.0, 1e-14));
    }

    #[test]
    fn cyclic_orientation_cases() {
        assert_eq!(cyclic_orientation(Real(0.0), Real(1.0), Infinity), 1);
        assert_eq!(cyclic_orientation(Real(0.0), Infinity, Real(-1.0)), 1);
        assert_eq!(cyclic_orientation(Real(1.0), Real(0.0), Infinity), -1);
        assert_eq!(cyclic_orientation(Infinity, Real(2.0), Real(1.0)), -1);
    }

    #[test]
    fn reflection_in_geodesics() {
        let unit = Geodesic::new(Real(-1.0), Real(1.0)).unwrap();
        assert_eq!(unit.reflect_boundary(Infinity), Real(0.0));
        assert!(close(unit.reflect_boundary(Real(2.0)).real().unwrap(), 0.5, 1e-15));
        let vertical = Geodesic::new(Real(1.0), Infinity).unwrap();
        assert_eq!(vertical.reflect_boundary(Real(3.0)), Real(-1.0));
    }

    #[test]
    fn point_reflection_doubles_distance() {
        for g in [
            Geodesic::new(Real(-1.0), Real(3.0)).unwrap(),
            Geodesic::new(Real(0.5), Infinity).unwrap(),
        ] {
            let z = Point { x: 0.2, y: 0.7 };
            let r = g.reflect_point(z);
            assert!((dist(z, r) - 2.0 * dist_to_geodesic(z, &g)).abs() < 1e-12);
            assert!((signed_dist_to_geodesic(z, &g) + signed_dist_to_geodesic(r, &g)).abs() < 1e-12);
        }
    }
}
