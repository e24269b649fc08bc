//! Spiralling ideal triangulations built from seam decompositions, their
//! developing maps, shear vectors and the shear-point audit.

use serde::{Deserialize, Serialize};

use crate::constants::{short_threshold, truncated_collar_width, ShearFreeParams, Signature};
use crate::decomposition::{ArcEndpoint, HexagonDecomposition};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    cyclic_orientation, dist_to_geodesic, horocycle_length, perpendicular_foot, shear_from_quad,
    signed_dist_to_geodesic, BoundaryPoint, FixedPoints, Geodesic, Isometry, Point,
};
use crate::surface::{PantsFrame, Side, Surface};

/// Residual above which developing aborts.
pub const FIXED_POINT_ABORT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeEnd {
    Cusp {
        cusp: u32,
    },
    /// Spirals towards the attracting fixed point of `X^direction`, where `X`
    /// is the boundary generator of the slot (pants on its left).
    Spiral {
        curve: u32,
        side: Side,
        direction: i8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriEdge {
    pub id: usize,
    pub pants: usize,
    pub seam: usize,
    /// Local slots of the ends; the edge is oriented from `slots[0]` to `slots[1]`.
    pub slots: [usize; 2],
    pub ends: [EdgeEnd; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub id: usize,
    pub pants: usize,
    pub front: bool,
    /// Edge `k` is opposite the slot-`k` vertex.
    pub edges: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpirallingTriangulation {
    pub signature: Signature,
    pub edges: Vec<TriEdge>,
    pub triangles: Vec<Triangle>,
    pub closed_leaves: Vec<u32>,
    /// `+1` keeps a curve's reference orientation, `-1` reverses it.
    pub orientations: Vec<i8>,
}

impl SpirallingTriangulation {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }
}

pub fn spiral(hd: &HexagonDecomposition, orientations: &[i8]) -> Result<SpirallingTriangulation> {
    if orientations.len() != hd.curves.len() || orientations.iter().any(|o| o.abs() != 1) {
        return Err(Error::InvalidParameter(format!(
            "need one orientation (+1 or -1) per curve, {} curves",
            hd.curves.len()
        )));
    }
    let mut closed = std::collections::BTreeSet::new();
    let edges = hd
        .arcs
        .iter()
        .map(|arc| {
            let ends = arc.endpoints.map(|e| match e {
                ArcEndpoint::AtCusp { cusp } => EdgeEnd::Cusp { cusp },
                ArcEndpoint::OnCurve { curve, side } => {
                    closed.insert(curve);
                    EdgeEnd::Spiral {
                        curve,
                        side,
                        direction: orientations[curve as usize],
                    }
                }
            });
            TriEdge {
                id: arc.id,
                pants: arc.pants,
                seam: arc.seam,
                slots: arc.slots,
                ends,
            }
        })
        .collect();
    let np = hd.hexagons.len() / 2;
    let triangles = (0..2 * np)
        .map(|t| {
            let p = t / 2;
            Triangle {
                id: t,
                pants: p,
                front: t % 2 == 0,
                edges: [3 * p, 3 * p + 1, 3 * p + 2],
            }
        })
        .collect();
    Ok(SpirallingTriangulation {
        signature: hd.signature,
        edges,
        triangles,
        closed_leaves: closed.into_iter().collect(),
        orientations: orientations.to_vec(),
    })
}

/// Orientation choice with every curve kept as is.
pub fn default_orientations(hd: &HexagonDecomposition) -> Vec<i8> {
    vec![1; hd.curves.len()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopedTriangle {
    pub id: usize,
    pub pants: usize,
    /// Vertex `k` is the end at slot `k`, in the pants' local frame.
    pub vertices: [BoundaryPoint; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopedEdge {
    pub id: usize,
    pub pants: usize,
    pub tail: BoundaryPoint,
    pub head: BoundaryPoint,
    pub front_apex: BoundaryPoint,
    pub back_apex: BoundaryPoint,
    /// Deck element carrying the stored back-triangle lift to the lift
    /// adjacent to the front triangle across this edge.
    pub deck: Isometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopedComplex {
    pub triangulation: SpirallingTriangulation,
    /// Local frame of each pants to the global frame.
    pub placements: Vec<Isometry>,
    pub triangles: Vec<DevelopedTriangle>,
    pub edges: Vec<DevelopedEdge>,
    pub fixed_point_residual: f64,
    pub deck_residual: f64,
    pub cycle_residual: f64,
    #[serde(skip)]
    frames: Vec<PantsFrame>,
    #[serde(skip)]
    lengths: Vec<f64>,
}

fn spiral_vertex(frame: &PantsFrame, m: usize, direction: i8) -> Result<BoundaryPoint> {
    let x = if direction > 0 { frame.gens[m] } else { frame.gens[m].inverse() };
    match x.fixed_points()? {
        FixedPoints::Hyperbolic { attracting, .. } => Ok(attracting),
        FixedPoints::Parabolic(p) => Ok(p),
    }
}

/// The axis endpoint of slot `m` other than `v`, or the cusp itself.
fn other_end(frame: &PantsFrame, m: usize, v: BoundaryPoint) -> BoundaryPoint {
    match frame.axes[m] {
        Some(a) => {
            if a.p.chordal_distance(v) < a.q.chordal_distance(v) {
                a.q
            } else {
                a.p
            }
        }
        None => v,
    }
}

fn vertex_directions(st: &SpirallingTriangulation, p: usize) -> [i8; 3] {
    let mut dirs = [1i8; 3];
    for e in &st.edges[3 * p..3 * p + 3] {
        for (s, end) in e.slots.iter().zip(e.ends.iter()) {
            if let EdgeEnd::Spiral { direction, .. } = end {
                dirs[*s] = *direction;
            }
        }
    }
    dirs
}

/// Image of `v` under the reflection-conjugate `r X r`.
/// [`FIXED_POINT_ABORT`], widened for frames whose generators are so large
/// that applying them loses more than `1e-6` to rounding (about `ε·|entries|²`).
fn fixed_point_limit(frame: &PantsFrame) -> f64 {
    let size = frame
        .gens
        .iter()
        .map(|g| g.a.abs().max(g.b.abs()).max(g.c.abs()).max(g.d.abs()))
        .fold(1.0, f64::max);
    FIXED_POINT_ABORT.max(1e3 * f64::EPSILON * size * size)
}

fn reflected_action(r: &Geodesic, x: &Isometry, v: BoundaryPoint) -> BoundaryPoint {
    r.reflect_boundary(x.apply_boundary(r.reflect_boundary(v)))
}

fn set_residual(a: &[BoundaryPoint; 3], b: &[BoundaryPoint; 3]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| p.chordal_distance(*q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn develop(surface: &Surface, st: &SpirallingTriangulation) -> Result<DevelopedComplex> {
    let h = &surface.holonomy;
    if st.triangles.len() != 2 * h.frames.len() || st.edges.len() != 3 * h.frames.len() {
        return Err(Error::InvalidParameter("triangulation was built over another surface".into()));
    }
    let mut triangles = Vec::with_capacity(st.triangles.len());
    let mut edges = Vec::with_capacity(st.edges.len());
    let mut fp_res: f64 = 0.0;
    let mut deck_res: f64 = 0.0;
    let mut cycle_res: f64 = 0.0;
    for (p, frame) in h.frames.iter().enumerate() {
        let dirs = vertex_directions(st, p);
        let mut v = [BoundaryPoint::Infinity; 3];
        for m in 0..3 {
            v[m] = spiral_vertex(frame, m, dirs[m])?;
            let r = frame.gens[m].apply_boundary(v[m]).chordal_distance(v[m]);
            fp_res = fp_res.max(r);
        }
        // back lift across seam k: (v_i, v_j, r_k(v̄_k))
        let back = |k: usize| -> [BoundaryPoint; 3] {
            let mut t = v;
            t[k] = frame.seams[k].reflect_boundary(other_end(frame, k, v[k]));
            t
        };
        for k in 0..3 {
            let w = back(k)[k];
            let r = reflected_action(&frame.seams[k], &frame.gens[k], w).chordal_distance(w);
            fp_res = fp_res.max(r);
        }
        if fp_res > fixed_point_limit(frame) {
            return Err(Error::Invariant(format!(
                "fixed-point residual {fp_res:e} at an edge of pants {p}"
            )));
        }
        // r_k r_0 is the boundary loop at the slot shared by seams 0 and k
        let base = back(0);
        let mut decks = [Isometry::IDENTITY; 3];
        for k in 1..3 {
            let shared = 3 - k;
            let target = back(k);
            let (best, res) = [1, -1]
                .into_iter()
                .map(|s| {
                    let g = frame.gens[shared].pow(s);
                    (g, set_residual(&base.map(|x| g.apply_boundary(x)), &target))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("two candidates");
            decks[k] = best;
            deck_res = deck_res.max(res);
        }
        // r_0 r_2 · r_2 r_1 · r_1 r_0 = 1
        let around = decks[2] * decks[1].inverse();
        let direct = {
            let g = frame.gens[0];
            let t1 = back(1);
            let t2 = back(2);
            [1, -1]
                .into_iter()
                .map(|s| set_residual(&t1.map(|x| g.pow(s).apply_boundary(x)), &t2))
                .fold(f64::INFINITY, f64::min)
        };
        deck_res = deck_res.max(direct);
        cycle_res = cycle_res.max(
            [1, -1]
                .into_iter()
                .map(|s| around.distance(&frame.gens[0].pow(s)))
                .fold(f64::INFINITY, f64::min),
        );
        triangles.push(DevelopedTriangle {
            id: 2 * p,
            pants: p,
            vertices: v,
        });
        triangles.push(DevelopedTriangle {
            id: 2 * p + 1,
            pants: p,
            vertices: base,
        });
        for k in 0..3 {
            let e = &st.edges[3 * p + k];
            let [a, b] = e.slots;
            edges.push(DevelopedEdge {
                id: e.id,
                pants: p,
                tail: v[a],
                head: v[b],
                front_apex: v[k],
                back_apex: back(k)[k],
                deck: decks[k],
            });
        }
    }
    Ok(DevelopedComplex {
        triangulation: st.clone(),
        placements: h.placements.clone(),
        triangles,
        edges,
        fixed_point_residual: fp_res,
        deck_residual: deck_res,
        cycle_residual: cycle_res,
        frames: h.frames.clone(),
        lengths: (0..surface.graph.curve_count() as u32)
            .map(|c| surface.coordinates.length(c))
            .collect(),
    })
}

impl DevelopedComplex {
    /// Quadrilateral `(tail, head, front apex, back apex)` of an edge moved by `g`.
    pub fn quad(&self, e: usize, g: &Isometry) -> [BoundaryPoint; 4] {
        let d = &self.edges[e];
        [d.tail, d.head, d.front_apex, d.back_apex].map(|x| g.apply_boundary(x))
    }

    /// Vertices of a triangle in the global frame.
    pub fn global_triangle(&self, t: usize) -> [BoundaryPoint; 3] {
        let tri = &self.triangles[t];
        tri.vertices.map(|x| self.placements[tri.pants].apply_boundary(x))
    }

    pub fn frames(&self) -> &[PantsFrame] {
        &self.frames
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    /// Cusp id, or curve id for side sets.
    pub target: u32,
    pub side: Option<Side>,
    pub pants: usize,
    pub slot: usize,
    /// `(edge, sign)` pairs; the relation sums `sign · values[edge]`.
    pub terms: Vec<(usize, i8)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearVector {
    /// Shear of the back triangle relative to the front one along the edge
    /// oriented from its lower slot to its higher slot.
    pub values: Vec<f64>,
    /// `+1` where the front triangle lies on the left of that orientation.
    pub front_left: Vec<i8>,
    pub cusp_sets: Vec<IndexSet>,
    pub side_sets: Vec<IndexSet>,
    pub curve_lengths: Vec<f64>,
}

impl ShearVector {
    /// Orientation-free shear: left triangle to right triangle.
    pub fn canonical(&self, e: usize) -> f64 {
        self.front_left[e] as f64 * self.values[e]
    }

    fn sum(&self, set: &IndexSet) -> f64 {
        set.terms.iter().map(|&(e, s)| s as f64 * self.values[e]).sum()
    }

    pub fn cusp_sums(&self) -> Vec<f64> {
        self.cusp_sets.iter().map(|s| self.sum(s)).collect()
    }

    pub fn side_sums(&self) -> Vec<f64> {
        self.side_sets.iter().map(|s| self.sum(s)).collect()
    }

    pub fn cusp_residual(&self) -> f64 {
        self.cusp_sums().into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    /// Largest deviation of a side sum from its curve's length.
    pub fn side_residual(&self) -> f64 {
        self.side_sets
            .iter()
            .map(|s| (self.sum(s) - self.curve_lengths[s.target as usize]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs_shear(self)
    }
}

pub fn max_abs_shear(sv: &ShearVector) -> f64 {
    sv.values.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn shear_vector(dc: &DevelopedComplex) -> Result<ShearVector> {
    let st = &dc.triangulation;
    let mut values = Vec::with_capacity(dc.edges.len());
    let mut front_left = Vec::with_capacity(dc.edges.len());
    for d in &dc.edges {
        values.push(shear_from_quad(d.tail, d.head, d.front_apex, d.back_apex)?);
        front_left.push(if cyclic_orientation(d.tail, d.head, d.front_apex) > 0 { 1 } else { -1 });
    }
    let mut cusp_sets = Vec::new();
    let mut side_sets = Vec::new();
    for p in 0..dc.frames.len() {
        for m in 0..3 {
            let at_slot: Vec<&TriEdge> = st.edges[3 * p..3 * p + 3]
                .iter()
                .filter(|e| e.slots.contains(&m))
                .collect();
            let end = {
                let e = at_slot[0];
                e.ends[if e.slots[0] == m { 0 } else { 1 }]
            };
            match end {
                EdgeEnd::Cusp { cusp } => cusp_sets.push(IndexSet {
                    target: cusp,
                    side: None,
                    pants: p,
                    slot: m,
                    terms: at_slot.iter().map(|e| (e.id, front_left[e.id])).collect(),
                }),
                EdgeEnd::Spiral { curve, side, direction } => side_sets.push(IndexSet {
                    target: curve,
                    side: Some(side),
                    pants: p,
                    slot: m,
                    terms: at_slot
                        .iter()
                        .map(|e| (e.id, SIDE_SIGN * direction * front_left[e.id]))
                        .collect(),
                }),
            }
        }
    }
    Ok(ShearVector {
        values,
        front_left,
        cusp_sets,
        side_sets,
        curve_lengths: dc.lengths.clone(),
    })
}

/// Sign turning the left-to-right shears at a curve side, weighted by the
/// spiral direction, into the curve's length.
const SIDE_SIGN: i8 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditedPoint {
    pub edge: usize,
    pub front: bool,
    pub point: Point,
    /// Horocycle length minus `δ₂`, over the cusps of the pants.
    pub cusp_margin: Option<f64>,
    /// Distance minus `wᵀ`, over the short boundary curves of the pants.
    pub collar_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearPointAudit {
    pub points: Vec<AuditedPoint>,
    pub min_cusp_margin: Option<f64>,
    pub min_collar_margin: Option<f64>,
    pub violations: Vec<String>,
}

impl ShearPointAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn min_margin(&self) -> Option<f64> {
        match (self.min_cusp_margin, self.min_collar_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Moves `z` by seam reflections into the region bounded by the three seams
/// (the side of each seam holding the opposite boundary), then returns its
/// images under reflection words of length at most 2. Seam reflections
/// preserve the set of boundary lifts, so distances to the lifts through
/// these images cover the nearby lifts from every direction.
fn reflected_probes(frame: &PantsFrame, z: Point) -> Vec<Point> {
    let seams = frame.seams.map(|g| Geodesic { oriented: true, ..g });
    let inside: [bool; 3] = std::array::from_fn(|k| {
        let object = match (frame.axes[k], frame.cusps[k]) {
            (Some(a), _) => a.p,
            (None, Some(c)) => c,
            _ => unreachable!("every slot is an axis or a cusp"),
        };
        cyclic_orientation(seams[k].p, seams[k].q, object) > 0
    });
    let mut z = z;
    for _ in 0..10_000 {
        let wrong = (0..3).find(|&k| (signed_dist_to_geodesic(z, &seams[k]) > 0.0) != inside[k]);
        match wrong {
            Some(k) => z = seams[k].reflect_point(z),
            None => break,
        }
    }
    let mut out = vec![z];
    let mut layer = vec![(z, usize::MAX)];
    for _ in 0..PROBE_DEPTH {
        layer = layer
            .iter()
            .flat_map(|&(x, last)| {
                (0..3)
                    .filter(move |&k| k != last)
                    .map(move |k| (seams[k].reflect_point(x), k))
            })
            .collect();
        out.extend(layer.iter().map(|&(x, _)| x));
    }
    out
}

const PROBE_DEPTH: usize = 6;

fn min_opt(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.min(x)))
}

pub fn shear_point_free_audit(dc: &DevelopedComplex, params: &ShearFreeParams) -> Result<ShearPointAudit> {
    let mut points = Vec::new();
    let mut violations = Vec::new();
    for (p, frame) in dc.frames.iter().enumerate() {
        let mut widths = [None; 3];
        for m in 0..3 {
            let len = frame.lengths[m];
            if frame.axes[m].is_some() && len <= short_threshold() {
                widths[m] = Some(truncated_collar_width(len, params)?);
            }
        }
        for k in 0..3 {
            let d = &dc.edges[3 * p + k];
            let edge = Geodesic::oriented(d.tail, d.head)?;
            for (front, apex) in [(true, d.front_apex), (false, d.back_apex)] {
                let z = perpendicular_foot(apex, &edge)?;
                let mut cusp_margin = None;
                let mut collar_margin = None;
                for probe in reflected_probes(frame, z) {
                    for m in 0..3 {
                        if frame.cusps[m].is_some() {
                            let h = horocycle_length(&frame.gens[m], probe)?;
                            cusp_margin = min_opt(cusp_margin, h - params.delta2);
                        }
                        if let (Some(axis), Some(wt)) = (frame.axes[m], widths[m]) {
                            collar_margin = min_opt(collar_margin, dist_to_geodesic(probe, &axis) - wt);
                        }
                    }
                }
                for (what, m) in [("cusp neighbourhood", cusp_margin), ("truncated collar", collar_margin)] {
                    if let Some(m) = m {
                        if !(m > 0.0) {
                            violations.push(format!(
                                "shear point of edge {} ({} side) inside a {what}, margin {m:e}",
                                d.id,
                                if front { "front" } else { "back" }
                            ));
                        }
                    }
                }
                points.push(AuditedPoint {
                    edge: d.id,
                    front,
                    point: z,
                    cusp_margin,
                    collar_margin,
                });
            }
        }
    }
    let min = |f: fn(&AuditedPoint) -> Option<f64>| points.iter().filter_map(f).fold(None, min_opt);
    Ok(ShearPointAudit {
        min_cusp_margin: min(|a| a.cusp_margin),
        min_collar_margin: min(|a| a.collar_margin),
        points,
        violations,
    })
}

/// Seam decomposition, spiralling triangulation with the given orientations,
/// developing map and shears.
pub fn shears_of(surface: &Surface, orientations: Option<&[i8]>) -> Result<(DevelopedComplex, ShearVector)> {
    let hd = crate::decomposition::seam_decomposition(surface)?;
    let default = default_orientations(&hd);
    let st = spiral(&hd, orientations.unwrap_or(&default))?;
    let dc = develop(surface, &st)?;
    let sv = shear_vector(&dc)?;
    Ok((dc, sv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::seam_decomposition;
    use crate::hyperbolic::{shear, IdealTriangle};
    use crate::surface::{sample_fn, FNCoordinates, FnEntry, PantsGraph, TwistRange};

    fn surface(g: u32, n: u32, entries: &[(f64, f64)]) -> Surface {
        let sig = Signature::new(g, n).unwrap();
        let pg = PantsGraph::canonical(sig);
        let fnc = FNCoordinates::new(
            entries
                .iter()
                .enumerate()
                .map(|(c, &(length, twist))| FnEntry {
                    curve: c as u32,
                    length,
                    twist,
                })
                .collect(),
            pg.curve_count(),
        )
        .unwrap();
        Surface::new(sig, pg, fnc).unwrap()
    }

    fn sampled(g: u32, n: u32, seed: u64) -> Surface {
        let sig = Signature::new(g, n).unwrap();
        let (pg, fnc) = sample_fn(sig, seed, (0.1, 4.0), TwistRange::default()).unwrap();
        Surface::new(sig, pg, fnc).unwrap()
    }

    #[test]
    fn sphere_is_identity_with_zero_shears() {
        let s = surface(0, 3, &[]);
        let hd = seam_decomposition(&s).unwrap();
        let st = spiral(&hd, &[]).unwrap();
        assert!(st.closed_leaves.is_empty());
        assert!(st.edges.iter().all(|e| e.ends.iter().all(|x| matches!(x, EdgeEnd::Cusp { .. }))));
        let dc = develop(&s, &st).unwrap();
        let sv = shear_vector(&dc).unwrap();
        assert!(sv.values.iter().all(|x| x.abs() < 1e-9), "{:?}", sv.values);
        assert_eq!(max_abs_shear(&sv), sv.values.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    }

    #[test]
    fn torus_counts() {
        let s = surface(1, 1, &[(1.2, 0.4)]);
        let hd = seam_decomposition(&s).unwrap();
        let st = spiral(&hd, &[1]).unwrap();
        assert_eq!((st.edge_count(), st.triangle_count()), (3, 2));
        assert_eq!(st.closed_leaves, vec![0]);
    }

    #[test]
    fn every_edge_borders_two_triangle_slots() {
        let s = sampled(2, 1, 4);
        let hd = seam_decomposition(&s).unwrap();
        let st = spiral(&hd, &default_orientations(&hd)).unwrap();
        assert_eq!(st.edge_count(), s.signature.edge_count() as usize);
        assert_eq!(st.triangle_count(), s.signature.triangle_count() as usize);
        for e in &st.edges {
            let uses: usize = st
                .triangles
                .iter()
                .map(|t| t.edges.iter().filter(|&&x| x == e.id).count())
                .sum();
            assert_eq!(uses, 2);
        }
    }

    #[test]
    fn orientation_flip_is_local() {
        let s = sampled(2, 0, 1);
        let hd = seam_decomposition(&s).unwrap();
        let a = spiral(&hd, &[1, 1, 1]).unwrap();
        let b = spiral(&hd, &[1, -1, 1]).unwrap();
        for (x, y) in a.edges.iter().zip(b.edges.iter()) {
            for (ex, ey) in x.ends.iter().zip(y.ends.iter()) {
                match (ex, ey) {
                    (
                        EdgeEnd::Spiral { curve, direction: d1, .. },
                        EdgeEnd::Spiral { direction: d2, .. },
                    ) => assert_eq!(d1 != d2, *curve == 1),
                    _ => assert_eq!(ex, ey),
                }
            }
        }
    }

    #[test]
    fn developed_complex_is_consistent() {
        for (g, n, seed) in [(1, 1, 0), (2, 0, 3), (0, 5, 2), (2, 2, 7)] {
            let s = sampled(g, n, seed);
            let (dc, _) = shears_of(&s, None).unwrap();
            assert!(dc.fixed_point_residual <= 1e-9);
            assert!(dc.deck_residual <= 1e-8 && dc.cycle_residual <= 1e-8);
            for d in &dc.edges {
                // front and back apexes on opposite sides of the edge
                let f = cyclic_orientation(d.tail, d.head, d.front_apex);
                let b = cyclic_orientation(d.tail, d.head, d.back_apex);
                assert_eq!(f, -b);
            }
        }
    }

    #[test]
    fn relations_hold_for_all_orientations() {
        let s = sampled(2, 1, 11);
        for mask in 0..8u8 {
            let o: Vec<i8> = (0..4).map(|c| if mask >> (c % 3) & 1 == 1 { -1 } else { 1 }).collect();
            let (_, sv) = shears_of(&s, Some(&o)).unwrap();
            assert!(sv.cusp_residual() < 1e-9 && sv.side_residual() < 1e-9);
        }
    }

    #[test]
    fn closed_form_per_pants() {
        // σ_k = ±(ε_i l_i + ε_j l_j - ε_k l_k) / 2 up to the left/right orientation
        let s = sampled(2, 0, 5);
        let (dc, sv) = shears_of(&s, Some(&[1, -1, 1])).unwrap();
        for (p, frame) in dc.frames().iter().enumerate() {
            let dirs = vertex_directions(&dc.triangulation, p);
            let l: Vec<f64> = (0..3).map(|m| dirs[m] as f64 * frame.lengths[m]).collect();
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let expected = (l[i] + l[j] - l[k]) / 2.0;
                let got = sv.canonical(3 * p + k);
                assert!((got.abs() - expected.abs()).abs() < 1e-9, "{got} vs {expected}");
            }
        }
    }

    #[test]
    fn shears_do_not_depend_on_the_lift() {
        let s = sampled(1, 2, 3);
        let (dc, sv) = shears_of(&s, None).unwrap();
        let g = Isometry::new(2.0, 1.0, 3.0, 2.0).unwrap();
        for e in 0..dc.edges.len() {
            let placed = dc.placements[dc.edges[e].pants] * g;
            let [t, h, a, b] = dc.quad(e, &placed);
            let moved = shear_from_quad(t, h, a, b).unwrap();
            assert!((moved - sv.values[e]).abs() < 1e-9);
        }
    }

    #[test]
    fn reversing_an_edge_negates_its_shear() {
        let s = sampled(1, 1, 2);
        let (dc, sv) = shears_of(&s, None).unwrap();
        for (e, d) in dc.edges.iter().enumerate() {
            let r = shear_from_quad(d.head, d.tail, d.front_apex, d.back_apex).unwrap();
            assert!((r + sv.values[e]).abs() < 1e-12);
            let fa = IdealTriangle::new(d.tail, d.head, d.front_apex).unwrap();
            let fb = IdealTriangle::new(d.tail, d.head, d.back_apex).unwrap();
            let via_points = shear(&fa, &fb, &Geodesic::oriented(d.tail, d.head).unwrap()).unwrap();
            assert!((via_points - sv.values[e]).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_audit_passes() {
        let s = surface(0, 3, &[]);
        let (dc, _) = shears_of(&s, None).unwrap();
        let a = shear_point_free_audit(&dc, &ShearFreeParams::default()).unwrap();
        assert!(a.passed(), "{:?}", a.violations);
        assert!(a.min_cusp_margin.unwrap() > 0.0);
        assert_eq!(a.points.len(), 6);
    }

    #[test]
    fn audit_margins_stay_positive_as_a_curve_shrinks() {
        // the absolute margin levels off (distance and wᵀ both grow like
        // log(1/ℓ)); relative to the distance it shrinks
        let params = ShearFreeParams::default();
        let mut last = f64::INFINITY;
        for l in [0.2, 0.1, 0.05, 0.02, 0.01] {
            let s = surface(1, 1, &[(l, 0.3 * l)]);
            let (dc, _) = shears_of(&s, None).unwrap();
            let a = shear_point_free_audit(&dc, &params).unwrap();
            assert!(a.passed(), "{l}: {:?}", a.violations);
            let m = a.min_collar_margin.unwrap();
            let wt = truncated_collar_width(l, &params).unwrap();
            let relative = m / (m + wt);
            assert!(m > 0.0 && relative < last, "{l}: {relative} after {last}");
            last = relative;
        }
    }

    #[test]
    fn audit_matches_lift_enumeration() {
        let params = ShearFreeParams::default();
        let s = surface(1, 1, &[(0.05, 0.01)]);
        let (dc, _) = shears_of(&s, None).unwrap();
        let f = &dc.frames()[0];
        let wt = truncated_collar_width(0.05, &params).unwrap();
        let letters: Vec<Isometry> = f.gens.iter().flat_map(|g| [*g, g.inverse()]).collect();
        let mut words = vec![Isometry::IDENTITY];
        let mut layer = words.clone();
        for _ in 0..4 {
            layer = layer.iter().flat_map(|w| letters.iter().map(move |x| *w * *x)).collect();
            words.extend(layer.iter().copied());
        }
        let a = shear_point_free_audit(&dc, &params).unwrap();
        for p in &a.points {
            let mut best = f64::INFINITY;
            for axis in f.axes.iter().flatten() {
                for g in &words {
                    best = best.min(dist_to_geodesic(p.point, &g.apply_geodesic(axis)) - wt);
                }
            }
            assert!(p.collar_margin.unwrap() <= best + 1e-9);
            assert!((p.collar_margin.unwrap() - best).abs() < 1e-6, "{:?} vs {best}", p.collar_margin);
        }
    }
}
