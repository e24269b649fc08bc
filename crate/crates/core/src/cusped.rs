//! Ideal triangulations with all vertices at cusps: shear coordinates, flips,
//! developing from shears and the minimax flip search.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{shear_from_quad, BoundaryPoint, Isometry, IsometryKind};
use crate::surface::{Slot, Surface};

/// Tolerance on cusp sums for a complete structure.
pub const COMPLETENESS_TOL: f64 = 1e-6;

/// Triangles list their edges by side: side `k` is opposite corner `k`, and
/// corners run in positive cyclic order. Glued sides reverse orientation, so
/// side `k` of `t` runs from corner `k+1` to corner `k+2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspedTriangulation {
    pub cusp_count: usize,
    pub edge_count: usize,
    pub triangles: Vec<[usize; 3]>,
    pub corners: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipMove {
    pub edge: usize,
    /// Outer sides of the quadrilateral in positive cyclic order, starting
    /// after the first triangle's apex.
    pub surrounding: [usize; 4],
}

/// Closed path in the dual graph: starts in `start` and crosses `crossings` in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPath {
    pub start: usize,
    pub crossings: Vec<usize>,
}

impl CuspedTriangulation {
    /// The two `(triangle, side)` slots of edge `e`.
    pub fn sides(&self, e: usize) -> [(usize, usize); 2] {
        let mut out = [(usize::MAX, 0); 2];
        let mut n = 0;
        for (t, edges) in self.triangles.iter().enumerate() {
            for (k, &x) in edges.iter().enumerate() {
                if x == e && n < 2 {
                    out[n] = (t, k);
                    n += 1;
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![0usize; self.edge_count];
        for edges in &self.triangles {
            for &e in edges {
                if e >= self.edge_count {
                    return Err(Error::InvalidGraph(format!("edge {e} out of range")));
                }
                seen[e] += 1;
            }
        }
        if let Some(e) = seen.iter().position(|&c| c != 2) {
            return Err(Error::InvalidGraph(format!("edge {e} borders {} triangle sides", seen[e])));
        }
        for e in 0..self.edge_count {
            let [(t, k), (u, j)] = self.sides(e);
            let (c, d) = (&self.corners[t], &self.corners[u]);
            if c[(k + 1) % 3] != d[(j + 2) % 3] || c[(k + 2) % 3] != d[(j + 1) % 3] {
                return Err(Error::InvalidGraph(format!("edge {e} joins mismatched cusps")));
            }
        }
        Ok(())
    }

    /// Distinct triangles sharing only this edge.
    pub fn is_flippable(&self, e: usize) -> bool {
        let [(t, _), (u, _)] = self.sides(e);
        if t == u {
            return false;
        }
        let shared = self.triangles[t].iter().filter(|x| self.triangles[u].contains(x)).count();
        shared == 1 && self.triangles[t].iter().all(|x| self.triangles[t].iter().filter(|y| *y == x).count() == 1)
    }

    pub fn flippable_edges(&self) -> Vec<usize> {
        (0..self.edge_count).filter(|&e| self.is_flippable(e)).collect()
    }

    /// Edges ending at each cusp, once per end.
    pub fn cusp_terms(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cusp_count];
        for e in 0..self.edge_count {
            let [(t, k), _] = self.sides(e);
            let c = self.corners[t];
            out[c[(k + 1) % 3] as usize].push(e);
            out[c[(k + 2) % 3] as usize].push(e);
        }
        out
    }
}

pub fn cusp_sums(tri: &CuspedTriangulation, shears: &[f64]) -> Vec<f64> {
    tri.cusp_terms()
        .iter()
        .map(|terms| terms.iter().map(|&e| shears[e]).sum())
        .collect()
}

/// Nearest shears (least squares) with every cusp sum zero. Needs a cusp
/// graph with an odd cycle, which every triangulation here has.
pub fn complete_shears(tri: &CuspedTriangulation, shears: &[f64]) -> Result<Vec<f64>> {
    let mut a = DMatrix::<f64>::zeros(tri.cusp_count, tri.edge_count);
    for (c, terms) in tri.cusp_terms().iter().enumerate() {
        for &e in terms {
            a[(c, e)] += 1.0;
        }
    }
    let gram = (&a * a.transpose()).lu();
    let mut out = DVector::from_column_slice(shears);
    // a second pass removes the rounding left by the first
    for _ in 0..2 {
        let z = gram
            .solve(&(&a * &out))
            .ok_or_else(|| Error::Invariant("cusp relations are degenerate".into()))?;
        out -= a.transpose() * z;
    }
    Ok(out.as_slice().to_vec())
}

/// Sphere with `n ≥ 3` cusps as two ideal `n`-gons glued along their sides,
/// each fanned from cusp 0. Side `i` joins cusps `i` and `i+1 (mod n)`.
pub fn fan_sphere(n: usize) -> CuspedTriangulation {
    assert!(n >= 3, "a sphere needs at least three cusps");
    let side = |i: usize| i % n;
    let top_diag = |i: usize| n + i - 2;
    let bottom_diag = |i: usize| n + (n - 3) + i - 2;
    let mut triangles = Vec::new();
    let mut corners = Vec::new();
    // top: (0, i+1, i); bottom: (0, i, i+1), i = 1..=n-2
    for i in 1..=n - 2 {
        let back = if i == 1 { side(0) } else { top_diag(i) };
        let front = if i == n - 2 { side(n - 1) } else { top_diag(i + 1) };
        triangles.push([side(i), back, front]);
        corners.push([0, (i + 1) as u32, i as u32]);
    }
    for i in 1..=n - 2 {
        let back = if i == 1 { side(0) } else { bottom_diag(i) };
        let front = if i == n - 2 { side(n - 1) } else { bottom_diag(i + 1) };
        triangles.push([side(i), front, back]);
        corners.push([0, i as u32, (i + 1) as u32]);
    }
    CuspedTriangulation {
        cusp_count: n,
        edge_count: 3 * n - 6,
        triangles,
        corners,
    }
}

/// Two triangles glued along all three sides.
pub fn punctured_torus() -> CuspedTriangulation {
    CuspedTriangulation {
        cusp_count: 1,
        edge_count: 3,
        triangles: vec![[0, 1, 2], [0, 1, 2]],
        corners: vec![[0; 3]; 2],
    }
}

/// Loop in [`fan_sphere`] separating cusps `0..=j` from the rest.
pub fn fan_separating_path(n: usize, j: usize) -> DualPath {
    assert!(j >= 1 && j <= n - 2);
    let top = |i: usize| i - 1;
    let mut crossings = Vec::new();
    // from top triangle n-2 down to top triangle j, across e_j, back up the bottom
    for i in (j + 1..=n - 2).rev() {
        crossings.push(n + i - 2);
    }
    crossings.push(j);
    for i in j + 1..=n - 2 {
        crossings.push(n + (n - 3) + i - 2);
    }
    crossings.push(n - 1);
    DualPath {
        start: top(n - 2),
        crossings,
    }
}

/// Möbius map sending `(0, ∞, -1)` to a positively ordered triple.
fn frame_map(t: [BoundaryPoint; 3]) -> Result<Isometry> {
    let h = Isometry::sending_to_zero_infinity(t[0], t[1])?;
    let s = h
        .apply_boundary(t[2])
        .real()
        .ok_or_else(|| Error::Invariant("degenerate developed triangle".into()))?;
    if !(s < 0.0) {
        return Err(Error::Invariant("developed triangle is negatively oriented".into()));
    }
    let r = (-s).sqrt();
    Ok(h.inverse() * Isometry::new(r, 0.0, 0.0, 1.0 / r)?)
}

/// Corners of the triangle across side `k` of a placed triangle.
fn develop_across(
    tri: &CuspedTriangulation,
    shears: &[f64],
    t: usize,
    k: usize,
    placed: [BoundaryPoint; 3],
) -> Result<(usize, [BoundaryPoint; 3])> {
    let e = tri.triangles[t][k];
    let [s0, s1] = tri.sides(e);
    let (u, j) = if s0 == (t, k) { s1 } else { s0 };
    let (tail, head, apex) = (placed[(k + 1) % 3], placed[(k + 2) % 3], placed[k]);
    let h = Isometry::sending_to_zero_infinity(tail, head)?;
    let a = h
        .apply_boundary(apex)
        .real()
        .ok_or_else(|| Error::Invariant("apex on the edge".into()))?;
    let x = h.inverse().apply_boundary(BoundaryPoint::Real(-a * shears[e].exp()));
    let mut out = [x; 3];
    out[(j + 1) % 3] = head;
    out[(j + 2) % 3] = tail;
    out[j] = x;
    Ok((u, out))
}

pub const BASE_TRIANGLE: [BoundaryPoint; 3] =
    [BoundaryPoint::Real(0.0), BoundaryPoint::Infinity, BoundaryPoint::Real(-1.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearDevelopment {
    /// Tree placement of every triangle, triangle 0 at `(0, ∞, -1)`.
    pub placements: Vec<[BoundaryPoint; 3]>,
    /// Edge crossed to reach each triangle from its tree parent.
    pub parent_edge: Vec<Option<usize>>,
    /// Deck element per edge outside the tree: the map from the tree
    /// placement of the far triangle to its lift across the edge.
    pub generators: Vec<(usize, Isometry)>,
}

pub fn develop_from_shears(tri: &CuspedTriangulation, shears: &[f64]) -> Result<ShearDevelopment> {
    tri.validate()?;
    if shears.len() != tri.edge_count {
        return Err(Error::InvalidCoordinates(format!(
            "{} shears for {} edges",
            shears.len(),
            tri.edge_count
        )));
    }
    if let Some((c, s)) = cusp_sums(tri, shears)
        .into_iter()
        .enumerate()
        .find(|(_, s)| s.abs() > COMPLETENESS_TOL)
    {
        return Err(Error::InvalidCoordinates(format!(
            "incomplete structure: shears at cusp {c} sum to {s:e}"
        )));
    }
    let nt = tri.triangles.len();
    let mut placements: Vec<Option<[BoundaryPoint; 3]>> = vec![None; nt];
    let mut parent_edge = vec![None; nt];
    let mut tree = vec![false; tri.edge_count];
    placements[0] = Some(BASE_TRIANGLE);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(t) = queue.pop_front() {
        for k in 0..3 {
            let e = tri.triangles[t][k];
            if tree[e] {
                continue;
            }
            let (u, pts) = develop_across(tri, shears, t, k, placements[t].expect("queued triangles are placed"))?;
            if placements[u].is_none() {
                placements[u] = Some(pts);
                parent_edge[u] = Some(e);
                tree[e] = true;
                queue.push_back(u);
            }
        }
    }
    let placements: Vec<[BoundaryPoint; 3]> = placements
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::InvalidGraph("dual graph is not connected".into())))
        .collect::<Result<_>>()?;
    let mut generators = Vec::new();
    for e in 0..tri.edge_count {
        if tree[e] {
            continue;
        }
        let [(t, k), _] = tri.sides(e);
        let (u, pts) = develop_across(tri, shears, t, k, placements[t])?;
        let g = frame_map(pts)? * frame_map(placements[u])?.inverse();
        generators.push((e, g));
    }
    Ok(ShearDevelopment {
        placements,
        parent_edge,
        generators,
    })
}

/// Holonomy of a closed dual path, as the map from the start triangle's
/// base placement to its developed image at the end of the path.
pub fn path_holonomy(tri: &CuspedTriangulation, shears: &[f64], path: &DualPath) -> Result<Isometry> {
    let mut t = path.start;
    let mut placed = BASE_TRIANGLE;
    for &e in &path.crossings {
        let k = tri.triangles[t]
            .iter()
            .position(|&x| x == e)
            .ok_or_else(|| Error::InvalidParameter(format!("edge {e} is not a side of triangle {t}")))?;
        let (u, pts) = develop_across(tri, shears, t, k, placed)?;
        t = u;
        placed = pts;
    }
    if t != path.start {
        return Err(Error::InvalidParameter("dual path is not closed".into()));
    }
    frame_map(placed)
}

/// Translation length of a dual path's holonomy, `0` when parabolic.
pub fn path_length(tri: &CuspedTriangulation, shears: &[f64], path: &DualPath) -> Result<f64> {
    let g = path_holonomy(tri, shears, path)?;
    Ok(match g.classify() {
        IsometryKind::Hyperbolic => g.translation_length()?,
        _ => 0.0,
    })
}

/// Flips `e`. The flipped edge's shear changes sign; on each side of the
/// quadrilateral, the side following the edge in its triangle gains
/// `log(1 + e^σ)` and the side preceding it loses `log(1 + e^{-σ})`.
pub fn flip(tri: &CuspedTriangulation, shears: &[f64], e: usize) -> Result<(CuspedTriangulation, Vec<f64>, FlipMove)> {
    if !tri.is_flippable(e) {
        return Err(Error::InvalidParameter(format!("edge {e} is not flippable")));
    }
    let [(t, k), (u, j)] = tri.sides(e);
    let (te, ue) = (tri.triangles[t], tri.triangles[u]);
    let (tc, uc) = (tri.corners[t], tri.corners[u]);
    // quad (a, b, d, c): t = (a, b, c), u = (d, c, b)
    let (a, b, c, d) = (tc[k], tc[(k + 1) % 3], tc[(k + 2) % 3], uc[j]);
    let alpha = te[(k + 2) % 3];
    let beta = te[(k + 1) % 3];
    let gamma = ue[(j + 1) % 3];
    let delta = ue[(j + 2) % 3];
    let sigma = shears[e];
    let mut out = shears.to_vec();
    out[e] = -sigma;
    let gain = sigma.exp().ln_1p();
    let loss = (-sigma).exp().ln_1p();
    out[beta] += gain;
    out[gamma] += gain;
    out[alpha] -= loss;
    out[delta] -= loss;
    let mut next = tri.clone();
    next.triangles[t] = [gamma, e, alpha];
    next.corners[t] = [a, b, d];
    next.triangles[u] = [beta, e, delta];
    next.corners[u] = [d, c, a];
    Ok((
        next,
        out,
        FlipMove {
            edge: e,
            surrounding: [alpha, gamma, delta, beta],
        },
    ))
}

/// Rewrites a dual path for the triangulation obtained by flipping `e`.
pub fn flip_path(tri: &CuspedTriangulation, e: usize, path: &DualPath) -> Result<DualPath> {
    let [(t, k), (u, j)] = tri.sides(e);
    let in_quad = |x: usize| x == t || x == u;
    // triangle reached after each crossing
    let mut visits = Vec::with_capacity(path.crossings.len());
    let mut at = path.start;
    for &x in &path.crossings {
        let [s0, s1] = tri.sides(x);
        at = if s0.0 == at { s1.0 } else if s1.0 == at { s0.0 } else {
            return Err(Error::InvalidParameter(format!("edge {x} is not a side of triangle {at}")));
        };
        visits.push(at);
    }
    let Some(outside) = visits.iter().position(|&v| !in_quad(v)) else {
        // the loop never leaves the quadrilateral
        return Ok(DualPath { start: t, crossings: Vec::new() });
    };
    let m = path.crossings.len();
    let start = visits[outside];
    let order: Vec<usize> = (1..=m).map(|i| path.crossings[(outside + i) % m]).collect();
    // new triangles: t holds the sides {γ, α}, u holds {β, δ}
    let (te, ue) = (tri.triangles[t], tri.triangles[u]);
    let new_t = [te[(k + 2) % 3], ue[(j + 1) % 3]];
    let side_of = |x: usize| new_t.contains(&x);
    let mut crossings = Vec::with_capacity(m + 2);
    let mut entry: Option<usize> = None;
    for x in order {
        match entry {
            None => {
                crossings.push(x);
                if te.contains(&x) || ue.contains(&x) {
                    entry = Some(x);
                }
            }
            Some(enter) => {
                if x == e {
                    continue;
                }
                if side_of(enter) != side_of(x) {
                    crossings.push(e);
                }
                crossings.push(x);
                entry = None;
            }
        }
    }
    Ok(DualPath { start, crossings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspedStart {
    pub triangulation: CuspedTriangulation,
    pub shears: Vec<f64>,
    /// Largest cusp sum of the holonomy shears before projecting onto the
    /// complete structures.
    pub raw_cusp_residual: f64,
    /// Developed corners of each triangle in the global frame.
    pub points: Vec<[BoundaryPoint; 3]>,
    /// Dual path of each pants curve, by curve id.
    pub curve_paths: Vec<DualPath>,
}

/// Fan triangulation of a punctured sphere realised by its holonomy: the
/// cusp generators `P_0 ⋯ P_{n-1} = 1` of the canonical chain have fixed
/// points bounding the top polygon; the bottom polygon sits across side 0.
pub fn cusped_start(surface: &Surface) -> Result<CuspedStart> {
    let sig = surface.signature;
    if sig.g != 0 {
        return Err(Error::NotFlipSearchable);
    }
    let n = sig.n as usize;
    let graph = &surface.graph;
    if *graph != crate::surface::PantsGraph::canonical(sig) {
        return Err(Error::NotFlipSearchable);
    }
    // work in the middle pants' frame: far pants then sit fewer curves away
    let hol = &surface.holonomy;
    let base = (graph.pants.len() - 1) / 2;
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for k in 0..n as u32 {
        let (pp, slot) = graph
            .pants
            .iter()
            .enumerate()
            .find_map(|(i, pa)| pa.slots.iter().position(|x| *x == Slot::Cusp(k)).map(|j| (i, j)))
            .ok_or_else(|| Error::InvalidGraph(format!("cusp {k} missing")))?;
        let t = hol.transport(base, pp);
        let local = hol.frames[pp].cusps[slot].ok_or_else(|| Error::Invariant(format!("cusp {k} has no fixed point")))?;
        let g = t.conjugate(&hol.frames[pp].gens[slot]);
        g.parabolic_fixed_point()?;
        p.push(g);
        q.push(t.apply_boundary(local));
    }
    // β_k = W_k q_k with W_k = P_0⁻¹ P_{n-1}⁻¹ ⋯ P_{k+1}⁻¹; β_1 = q_1
    let mut w = vec![Isometry::IDENTITY; n];
    let mut acc = p[0].inverse();
    for k in (1..n).rev() {
        w[k] = acc;
        acc = acc * p[k].inverse();
    }
    let beta: Vec<BoundaryPoint> = (0..n).map(|k| if k == 0 { q[0] } else { w[k].apply_boundary(q[k]) }).collect();
    let tri = fan_sphere(n);
    let mut points = Vec::with_capacity(tri.triangles.len());
    for i in 1..=n - 2 {
        points.push([q[0], q[i + 1], q[i]]);
    }
    for i in 1..=n - 2 {
        points.push([q[0], beta[i], beta[i + 1]]);
    }
    let mut shears = vec![0.0; tri.edge_count];
    for (e, shear) in shears.iter_mut().enumerate() {
        let [(t, k), (u, j)] = tri.sides(e);
        let (tail, head, apex) = (points[t][(k + 1) % 3], points[t][(k + 2) % 3], points[t][k]);
        // deck element bringing u next to t: W_i⁻¹ for polygon side i ≥ 1
        let g = if e >= 1 && e < n { w[e].inverse() } else { Isometry::IDENTITY };
        let far = points[u].map(|x| g.apply_boundary(x));
        let residual = far[(j + 1) % 3]
            .chordal_distance(head)
            .max(far[(j + 2) % 3].chordal_distance(tail));
        if residual > 1e-6 {
            return Err(Error::Invariant(format!("edge {e} does not close up, residual {residual:e}")));
        }
        *shear = shear_from_quad(tail, head, apex, far[j])?;
    }
    let raw_cusp_residual = max_abs(&cusp_sums(&tri, &shears));
    let shears = complete_shears(&tri, &shears)?;
    // curve c_m separates cusps 0..=m+1
    let curve_paths = (0..graph.curve_count()).map(|m| fan_separating_path(n, m + 1)).collect();
    Ok(CuspedStart {
        triangulation: tri,
        shears,
        raw_cusp_residual,
        points,
        curve_paths,
    })
}

pub fn max_abs(shears: &[f64]) -> f64 {
    shears.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipSearchResult {
    pub triangulation: CuspedTriangulation,
    pub shears: Vec<f64>,
    pub start_max: f64,
    pub best_max: f64,
    /// Flips taking the start to the best triangulation.
    pub flips: Vec<usize>,
}

/// Greedy descent on the largest absolute shear; at a local minimum, restart
/// from the best triangulation after a few random flips. `budget` counts flips.
pub fn minimax_flip_search(
    tri: &CuspedTriangulation,
    shears: &[f64],
    budget: usize,
    seed: u64,
) -> Result<FlipSearchResult> {
    let start_max = max_abs(shears);
    let mut best = (tri.clone(), shears.to_vec(), start_max, Vec::<usize>::new());
    let mut cur = best.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0;
    if tri.flippable_edges().is_empty() {
        used = budget;
    }
    while used < budget {
        let mut step: Option<(CuspedTriangulation, Vec<f64>, f64, usize)> = None;
        for e in cur.0.flippable_edges() {
            let (t, s, _) = flip(&cur.0, &cur.1, e)?;
            let m = max_abs(&s);
            if m < cur.2 - 1e-12 && step.as_ref().is_none_or(|x| m < x.2) {
                step = Some((t, s, m, e));
            }
        }
        match step {
            Some((t, s, m, e)) => {
                used += 1;
                cur.3.push(e);
                cur = (t, s, m, cur.3);
                if m < best.2 {
                    best = cur.clone();
                }
            }
            None => {
                cur = best.clone();
                let kicks = 1 + (used % 3);
                for _ in 0..kicks {
                    if used >= budget {
                        break;
                    }
                    let Some(&e) = cur.0.flippable_edges().choose(&mut rng) else { break };
                    let (t, s, _) = flip(&cur.0, &cur.1, e)?;
                    used += 1;
                    cur.3.push(e);
                    let m = max_abs(&s);
                    cur = (t, s, m, cur.3);
                }
            }
        }
    }
    Ok(FlipSearchResult {
        triangulation: best.0,
        shears: best.1,
        start_max,
        best_max: best.2,
        flips: best.3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Signature;
    use crate::surface::{sample_fn, TwistRange};
    use rand::Rng;

    fn sphere(n: u32, seed: u64) -> Surface {
        let sig = Signature::new(0, n).unwrap();
        let (pg, fnc) = sample_fn(sig, seed, (0.3, 3.0), TwistRange::Absolute { min: -1.0, max: 1.0 }).unwrap();
        Surface::new(sig, pg, fnc).unwrap()
    }

    #[test]
    fn fan_spheres_are_valid() {
        for n in 3..9 {
            let t = fan_sphere(n);
            t.validate().unwrap();
            assert_eq!(t.triangles.len(), 2 * n - 4);
            assert_eq!(t.cusp_terms().iter().map(Vec::len).sum::<usize>(), 2 * t.edge_count);
        }
        punctured_torus().validate().unwrap();
    }

    #[test]
    fn torus_has_nothing_to_flip() {
        assert!(punctured_torus().flippable_edges().is_empty());
        assert!(fan_sphere(3).flippable_edges().is_empty());
    }

    #[test]
    fn zero_shears_on_the_torus_give_the_modular_torus() {
        let t = punctured_torus();
        let z = [0.0; 3];
        let expect = 2.0 * 1.5f64.acosh();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let p = DualPath { start: 0, crossings: vec![a, b] };
            assert!((path_holonomy(&t, &z, &p).unwrap().trace().abs() - 3.0).abs() < 1e-12);
            assert!((path_length(&t, &z, &p).unwrap() - expect).abs() < 1e-12);
        }
        let dev = develop_from_shears(&t, &z).unwrap();
        let [(_, g), (_, h)] = [dev.generators[0], dev.generators[1]];
        let comm = g * h * g.inverse() * h.inverse();
        assert!((comm.trace().abs() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn completion_zeroes_cusp_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for tri in [punctured_torus(), fan_sphere(3), fan_sphere(6), fan_sphere(9)] {
            let s: Vec<f64> = (0..tri.edge_count).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let c = complete_shears(&tri, &s).unwrap();
            assert!(max_abs(&cusp_sums(&tri, &c)) < 1e-13);
            let again = complete_shears(&tri, &c).unwrap();
            assert!(again.iter().zip(&c).all(|(x, y)| (x - y).abs() < 1e-13));
        }
    }

    #[test]
    fn generators_reproduce_the_shears() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for tri in [punctured_torus(), fan_sphere(5)] {
            let raw: Vec<f64> = (0..tri.edge_count).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for s in [vec![0.0; tri.edge_count], complete_shears(&tri, &raw).unwrap()] {
                let dev = develop_from_shears(&tri, &s).unwrap();
                for &(e, g) in &dev.generators {
                    let [(t, k), (u, j)] = tri.sides(e);
                    let p = dev.placements[t];
                    let q = dev.placements[u].map(|x| g.apply_boundary(x));
                    assert!(q[(j + 1) % 3].chordal_distance(p[(k + 2) % 3]) < 1e-9);
                    let got = shear_from_quad(p[(k + 1) % 3], p[(k + 2) % 3], p[k], q[j]).unwrap();
                    assert!((got - s[e]).abs() < 1e-9, "edge {e}: {got} vs {}", s[e]);
                }
            }
        }
    }

    #[test]
    fn incomplete_shears_are_rejected() {
        let t = fan_sphere(4);
        let mut s = vec![0.0; t.edge_count];
        s[0] = 0.1;
        assert!(develop_from_shears(&t, &s).is_err());
        s[0] = 0.0;
        assert!(develop_from_shears(&t, &s).is_ok());
    }

    #[test]
    fn three_cusp_zero_shears_give_parabolic_cusps() {
        let t = fan_sphere(3);
        let dev = develop_from_shears(&t, &[0.0; 3]).unwrap();
        for (_, g) in &dev.generators {
            assert!((g.trace().abs() - 2.0).abs() < 1e-9);
        }
    }

    fn across(tri: &CuspedTriangulation, s: &[f64], t: usize, k: usize, p: [BoundaryPoint; 3]) -> BoundaryPoint {
        let [s0, s1] = tri.sides(tri.triangles[t][k]);
        let (_, j) = if s0 == (t, k) { s1 } else { s0 };
        develop_across(tri, s, t, k, p).unwrap().1[j]
    }

    #[test]
    fn flip_matches_developed_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100 {
            let tri = fan_sphere(4 + case % 5);
            let s: Vec<f64> = (0..tri.edge_count).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let edges = tri.flippable_edges();
            let e = edges[rng.gen_range(0..edges.len())];
            let (t, k) = tri.sides(e)[0];
            // place t, then read off the quad and its four outer apexes
            let p = BASE_TRIANGLE;
            let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let d = across(&tri, &s, t, k, p);
            let (_, q) = develop_across(&tri, &s, t, k, p).unwrap();
            let (u, j) = tri.sides(e)[1];
            let xa = across(&tri, &s, t, (k + 2) % 3, p);
            let xb = across(&tri, &s, t, (k + 1) % 3, p);
            let xg = across(&tri, &s, u, (j + 1) % 3, q);
            let xd = across(&tri, &s, u, (j + 2) % 3, q);
            let (next, out, mv) = flip(&tri, &s, e).unwrap();
            next.validate().unwrap();
            let [alpha, gamma, delta, beta] = mv.surrounding;
            let sfq = |w, x, y, z| shear_from_quad(w, x, y, z).unwrap();
            let expect = [
                (e, sfq(d, a, b, c)),
                (alpha, sfq(a, b, d, xa)),
                (beta, sfq(c, a, d, xb)),
                (gamma, sfq(b, d, a, xg)),
                (delta, sfq(d, c, a, xd)),
            ];
            for (x, v) in expect {
                assert!((out[x] - v).abs() < 1e-9, "case {case} edge {x}: {} vs {v}", out[x]);
            }
            for x in (0..tri.edge_count).filter(|x| ![e, alpha, beta, gamma, delta].contains(x)) {
                assert_eq!(out[x], s[x]);
            }
        }
    }

    #[test]
    fn flipping_twice_restores_shears() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tri = fan_sphere(6);
        let s: Vec<f64> = (0..tri.edge_count).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for e in tri.flippable_edges() {
            let (t1, s1, _) = flip(&tri, &s, e).unwrap();
            let (_, s2, _) = flip(&t1, &s1, e).unwrap();
            for (x, y) in s.iter().zip(&s2) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cusped_start_recovers_pants_lengths() {
        for n in [4, 5] {
            for seed in 0..5 {
                let surf = sphere(n, seed);
                let st = cusped_start(&surf).unwrap();
                assert!(st.raw_cusp_residual < 1e-7);
                assert!(max_abs(&cusp_sums(&st.triangulation, &st.shears)) < 1e-13);
                for (c, path) in st.curve_paths.iter().enumerate() {
                    let l = path_length(&st.triangulation, &st.shears, path).unwrap();
                    let want = surf.coordinates.length(c as u32);
                    assert!((l - want).abs() < 1e-7, "n={n} seed={seed} curve {c}: {l} vs {want}");
                }
            }
        }
    }

    #[test]
    fn flips_preserve_curve_lengths() {
        let surf = sphere(6, 11);
        let st = cusped_start(&surf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut tri, mut s, mut paths) = (st.triangulation, st.shears, st.curve_paths);
        let before: Vec<f64> = paths.iter().map(|p| path_length(&tri, &s, p).unwrap()).collect();
        // large shears amplify the start's rounding, so stay in a moderate range
        for _ in 0..30 {
            let edges = tri.flippable_edges();
            let e = edges[rng.gen_range(0..edges.len())];
            let (t2, s2, _) = flip(&tri, &s, e).unwrap();
            if max_abs(&s2) > 8.0 {
                continue;
            }
            paths = paths.iter().map(|p| flip_path(&tri, e, p).unwrap()).collect();
            (tri, s) = (t2, s2);
            tri.validate().unwrap();
        }
        assert!(max_abs(&cusp_sums(&tri, &s)) < 1e-6);
        for (p, l) in paths.iter().zip(before) {
            let now = path_length(&tri, &s, p).unwrap();
            assert!((now - l).abs() < 1e-7, "{now} vs {l}");
        }
    }

    #[test]
    fn search_never_gets_worse() {
        let st = cusped_start(&sphere(6, 2)).unwrap();
        let none = minimax_flip_search(&st.triangulation, &st.shears, 0, 1).unwrap();
        assert_eq!(none.triangulation, st.triangulation);
        assert_eq!(none.shears, st.shears);
        let r = minimax_flip_search(&st.triangulation, &st.shears, 50, 1).unwrap();
        assert!(r.best_max <= r.start_max);
        assert!((max_abs(&r.shears) - r.best_max).abs() < 1e-12);
        let mut t = st.triangulation.clone();
        let mut s = st.shears.clone();
        for &e in &r.flips {
            (t, s, _) = flip(&t, &s, e).unwrap();
        }
        assert_eq!(t, r.triangulation);
        assert!((max_abs(&s) - r.best_max).abs() < 1e-9);
    }

    #[test]
    fn search_on_three_cusps_returns_at_once() {
        let st = cusped_start(&sphere(3, 0)).unwrap();
        let r = minimax_flip_search(&st.triangulation, &st.shears, 100, 0).unwrap();
        assert!(r.flips.is_empty() && r.best_max < 1e-12);
    }

    #[test]
    fn cusped_start_needs_genus_zero() {
        let sig = Signature::new(1, 1).unwrap();
        let (pg, fnc) = sample_fn(sig, 0, (0.5, 2.0), TwistRange::Absolute { min: 0.0, max: 0.0 }).unwrap();
        let surf = Surface::new(sig, pg, fnc).unwrap();
        assert!(matches!(cusped_start(&surf), Err(Error::NotFlipSearchable)));
    }
}
