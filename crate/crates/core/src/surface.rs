//! Surfaces glued from pairs of pants with Fenchel-Nielsen coordinates, and
//! their holonomy representations.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{area, Signature};
use crate::error::{Error, GeometryError, Result};
use crate::hyperbolic::{cyclic_orientation, BoundaryPoint, FixedPoints, Geodesic, Isometry, Point};
use crate::lorentz::{self, Vec3};

/// A boundary slot of a pair of pants: a cusp or one side of an internal curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Cusp(u32),
    Curve(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pants {
    pub slots: [Slot; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub pants: usize,
    pub slot: usize,
}

/// Which side of an internal curve a slot is on. `A` is the first slot in
/// pants-major, slot-minor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PantsGraph {
    pub pants: Vec<Pants>,
}

impl PantsGraph {
    fn curve_table(&self) -> BTreeMap<u32, Vec<SlotRef>> {
        let mut map: BTreeMap<u32, Vec<SlotRef>> = BTreeMap::new();
        for (p, pants) in self.pants.iter().enumerate() {
            for (s, slot) in pants.slots.iter().enumerate() {
                if let Slot::Curve(c) = slot {
                    map.entry(*c).or_default().push(SlotRef { pants: p, slot: s });
                }
            }
        }
        map
    }

    pub fn curve_count(&self) -> usize {
        self.curve_table().len()
    }

    pub fn cusp_count(&self) -> usize {
        self.pants
            .iter()
            .flat_map(|p| p.slots.iter())
            .filter(|s| matches!(s, Slot::Cusp(_)))
            .count()
    }

    pub fn slot(&self, r: SlotRef) -> Slot {
        self.pants[r.pants].slots[r.slot]
    }

    /// The two sides of curve `c` as `(A, B)`. Panics on an unvalidated graph.
    pub fn curve_sides(&self, c: u32) -> (SlotRef, SlotRef) {
        let v = &self.curve_table()[&c];
        (v[0], v[1])
    }

    /// Side of the curve occupying a slot, `None` for a cusp.
    pub fn side(&self, r: SlotRef) -> Option<Side> {
        match self.slot(r) {
            Slot::Cusp(_) => None,
            Slot::Curve(c) => {
                let (a, _) = self.curve_sides(c);
                Some(if a == r { Side::A } else { Side::B })
            }
        }
    }

    pub fn partner(&self, r: SlotRef) -> Option<SlotRef> {
        match self.slot(r) {
            Slot::Cusp(_) => None,
            Slot::Curve(c) => {
                let (a, b) = self.curve_sides(c);
                Some(if a == r { b } else { a })
            }
        }
    }

    /// Canonical graph: one handle pants `(out, c, c)` per genus, then a
    /// chain joining handles and cusps.
    pub fn canonical(sig: Signature) -> PantsGraph {
        let mut next_curve = 0u32;
        let mut fresh = || {
            let c = next_curve;
            next_curve += 1;
            c
        };
        let mut pants = Vec::new();
        // leaf slots still to be attached: a handle's out-slot or a cusp
        let mut leaves: Vec<Leaf> = Vec::new();
        for _ in 0..sig.g {
            let c = fresh();
            pants.push([Slot::Cusp(u32::MAX), Slot::Curve(c), Slot::Curve(c)]);
            leaves.push(Leaf::Handle(pants.len() - 1));
        }
        for k in 0..sig.n {
            leaves.push(Leaf::Cusp(k));
        }
        let attach = |pants: &mut Vec<[Slot; 3]>, leaf: Leaf, fresh: &mut dyn FnMut() -> u32| -> Slot {
            match leaf {
                Leaf::Cusp(k) => Slot::Cusp(k),
                Leaf::Handle(p) => {
                    let c = fresh();
                    pants[p][0] = Slot::Curve(c);
                    Slot::Curve(c)
                }
            }
        };
        let l = leaves.len();
        if l == 2 {
            match (leaves[0], leaves[1]) {
                (Leaf::Handle(p), Leaf::Cusp(k)) => pants[p][0] = Slot::Cusp(k),
                (Leaf::Handle(p), Leaf::Handle(q)) => {
                    let c = fresh();
                    pants[p][0] = Slot::Curve(c);
                    pants[q][0] = Slot::Curve(c);
                }
                _ => unreachable!("signature has positive complexity"),
            }
        } else if l >= 3 {
            let mut incoming: Option<Slot> = None;
            for m in 0..(l - 2) {
                let first = match incoming {
                    None => attach(&mut pants, leaves[0], &mut fresh),
                    Some(s) => s,
                };
                let leaf_index = if m == 0 { 1 } else { m + 1 };
                let second = attach(&mut pants, leaves[leaf_index], &mut fresh);
                let third = if m == l - 3 {
                    attach(&mut pants, leaves[l - 1], &mut fresh)
                } else {
                    let c = fresh();
                    incoming = Some(Slot::Curve(c));
                    Slot::Curve(c)
                };
                pants.push([first, second, third]);
            }
        }
        PantsGraph {
            pants: pants.into_iter().map(|slots| Pants { slots }).collect(),
        }
    }
}

#[derive(Clone, Copy)]
enum Leaf {
    Handle(usize),
    Cusp(u32),
}

/// Every violated graph invariant, empty when the graph is valid for `sig`.
pub fn diagnostics(pg: &PantsGraph, sig: Signature) -> Vec<String> {
    let mut out = Vec::new();
    let np = sig.complexity() as usize;
    if pg.pants.len() != np {
        out.push(format!("expected {np} pants, found {}", pg.pants.len()));
    }
    let table = pg.curve_table();
    let nc = sig.internal_curves() as usize;
    if table.len() != nc {
        out.push(format!("expected {nc} internal curves, found {}", table.len()));
    }
    for (c, slots) in &table {
        if slots.len() != 2 {
            out.push(format!("curve {c} appears in {} slots, expected 2", slots.len()));
        }
        if *c as usize >= nc {
            out.push(format!("curve id {c} out of range 0..{nc}"));
        }
    }
    let mut cusps: Vec<u32> = pg
        .pants
        .iter()
        .flat_map(|p| p.slots.iter())
        .filter_map(|s| match s {
            Slot::Cusp(k) => Some(*k),
            _ => None,
        })
        .collect();
    cusps.sort_unstable();
    if cusps != (0..sig.n).collect::<Vec<_>>() {
        out.push(format!("cusp ids must be exactly 0..{}, found {cusps:?}", sig.n));
    }
    if !pg.pants.is_empty() {
        let mut seen = vec![false; pg.pants.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(p) = queue.pop_front() {
            for s in 0..3 {
                if let Slot::Curve(c) = pg.pants[p].slots[s] {
                    for r in table.get(&c).into_iter().flatten() {
                        if !seen[r.pants] {
                            seen[r.pants] = true;
                            queue.push_back(r.pants);
                        }
                    }
                }
            }
        }
        if seen.iter().any(|v| !v) {
            out.push("gluing graph is not connected".into());
        }
    }
    out
}

pub fn validate(pg: &PantsGraph, sig: Signature) -> Result<()> {
    let d = diagnostics(pg, sig);
    if d.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidGraph(d.join("; ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnEntry {
    pub curve: u32,
    pub length: f64,
    pub twist: f64,
}

/// Length and twist per internal curve, indexed by curve id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FNCoordinates {
    pub entries: Vec<FnEntry>,
}

impl FNCoordinates {
    /// Sorts by curve id and checks that ids are `0..count` with valid values.
    pub fn new(mut entries: Vec<FnEntry>, count: usize) -> Result<Self> {
        entries.sort_by_key(|e| e.curve);
        if entries.len() != count || entries.iter().enumerate().any(|(k, e)| e.curve as usize != k) {
            return Err(Error::InvalidCoordinates(format!(
                "need exactly one entry for each curve 0..{count}"
            )));
        }
        for e in &entries {
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidCoordinates(format!(
                    "curve {} has invalid length {}",
                    e.curve, e.length
                )));
            }
            if !e.twist.is_finite() {
                return Err(Error::InvalidCoordinates(format!("curve {} has invalid twist", e.curve)));
            }
        }
        Ok(FNCoordinates { entries })
    }

    pub fn length(&self, c: u32) -> f64 {
        self.entries[c as usize].length
    }

    pub fn twist(&self, c: u32) -> f64 {
        self.entries[c as usize].twist
    }
}

/// Seam lengths of a pants with boundary lengths `l` (`0` for a cusp).
/// Entry `k` is the seam between the other two boundaries; `None` when that
/// seam ends in a cusp.
pub fn seam_lengths(l: [f64; 3]) -> Result<[Option<f64>; 3]> {
    if l.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("boundary lengths must be nonnegative, got {l:?}")));
    }
    let mut out = [None; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        if l[i] > 0.0 && l[j] > 0.0 {
            let h = |x: f64| x / 2.0;
            let c = (h(l[i]).cosh() * h(l[j]).cosh() + h(l[k]).cosh()) / (h(l[i]).sinh() * h(l[j]).sinh());
            *slot = Some(c.acosh());
        }
    }
    Ok(out)
}

/// A pair of pants in standard position: boundary generators with
/// `X0 X1 X2 = 1`, each with the pants on the left of its axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PantsFrame {
    pub lengths: [f64; 3],
    pub gens: [Isometry; 3],
    /// Oriented axis (repelling to attracting) of each hyperbolic boundary.
    pub axes: [Option<Geodesic>; 3],
    /// Fixed point of each parabolic boundary.
    pub cusps: [Option<BoundaryPoint>; 3],
    /// Seam `k` joins boundaries `k+1` and `k+2`.
    pub seams: [Geodesic; 3],
    /// `feet[i][k]`: foot of seam `k` on the axis of boundary `i` (`k != i`).
    pub feet: [[Option<Point>; 3]; 3],
}

fn raw_generators(l: [f64; 3]) -> Result<[Isometry; 3]> {
    let x = 2.0 * (l[0] / 2.0).cosh();
    let y = 2.0 * (l[1] / 2.0).cosh();
    let z = -(l[2] / 2.0).exp();
    let a = Isometry::new(x, 1.0, -1.0, 0.0)?;
    let b = Isometry::new(0.0, -z, 1.0 / z, y)?;
    let ab = Isometry::new(1.0 / z, y - x * z, 0.0, z)?;
    Ok([a, b, ab.inverse()])
}

fn mirror(m: &Isometry) -> Isometry {
    Isometry {
        a: m.a,
        b: -m.b,
        c: -m.c,
        d: m.d,
    }
}

fn some_fixed_point(m: &Isometry) -> Result<BoundaryPoint> {
    Ok(match m.fixed_points()? {
        FixedPoints::Parabolic(p) => p,
        FixedPoints::Hyperbolic { attracting, .. } => attracting,
    })
}

/// Whether the other boundaries lie on the left of boundary `i`'s axis.
fn pants_on_left(gens: &[Isometry; 3], i: usize) -> Result<bool> {
    let (att, rep) = match gens[i].fixed_points()? {
        FixedPoints::Hyperbolic { attracting, repelling } => (attracting, repelling),
        FixedPoints::Parabolic(_) => return Err(GeometryError::NotHyperbolic(gens[i].classify()).into()),
    };
    let q = some_fixed_point(&gens[(i + 1) % 3])?;
    Ok(cyclic_orientation(rep, att, q) > 0)
}

fn needs_mirror(l: [f64; 3]) -> Result<bool> {
    match (0..3).find(|&i| l[i] > 0.0) {
        Some(i) => Ok(!pants_on_left(&raw_generators(l)?, i)?),
        None => needs_mirror([1.0, 1.0, 1.0]),
    }
}

pub fn pants_frame(l: [f64; 3]) -> Result<PantsFrame> {
    if l.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("boundary lengths must be nonnegative, got {l:?}")));
    }
    let mut gens = raw_generators(l)?;
    if needs_mirror(l)? {
        gens = gens.map(|g| mirror(&g));
    }
    // move the hexagon near i so that generator entries stay small
    let rough = frame_from_gens(l, gens)?;
    let mut centre = [0.0; 3];
    for p in rough.feet.iter().flatten().flatten() {
        let v = lorentz::point(*p);
        centre = [centre[0] + v[0], centre[1] + v[1], centre[2] + v[2]];
    }
    if centre == [0.0; 3] {
        return Ok(rough);
    }
    let c = lorentz::to_point(centre)?;
    let s = c.y.sqrt();
    let h = Isometry::new(1.0 / s, -c.x / s, 0.0, s)?;
    frame_from_gens(l, gens.map(|g| h.conjugate(&g)))
}

fn frame_from_gens(l: [f64; 3], gens: [Isometry; 3]) -> Result<PantsFrame> {
    let mut axes = [None; 3];
    let mut cusps = [None; 3];
    let mut objects: [Vec3; 3] = [[0.0; 3]; 3];
    for i in 0..3 {
        if l[i] > 0.0 {
            match gens[i].fixed_points()? {
                FixedPoints::Hyperbolic { attracting, repelling } => {
                    let g = Geodesic::oriented(repelling, attracting)?;
                    objects[i] = lorentz::normal(&g);
                    axes[i] = Some(g);
                }
                FixedPoints::Parabolic(_) => {
                    return Err(Error::Invariant(format!("boundary {i} of length {} is parabolic", l[i])))
                }
            }
        } else {
            match gens[i].fixed_points()? {
                FixedPoints::Parabolic(p) => {
                    objects[i] = lorentz::ideal(p);
                    cusps[i] = Some(p);
                }
                FixedPoints::Hyperbolic { .. } => {
                    return Err(Error::Invariant(format!("cusp boundary {i} is not parabolic")))
                }
            }
        }
    }
    let mut seams = Vec::with_capacity(3);
    let mut normals = [[0.0; 3]; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        normals[k] = lorentz::perpendicular(objects[i], objects[j]);
        seams.push(lorentz::endpoints(normals[k])?);
    }
    let mut feet = [[None; 3]; 3];
    for i in 0..3 {
        if axes[i].is_some() {
            for k in 0..3 {
                if k != i {
                    feet[i][k] = Some(lorentz::intersection(normals[k], objects[i])?);
                }
            }
        }
    }
    Ok(PantsFrame {
        lengths: l,
        gens,
        axes,
        cusps,
        seams: [seams[0], seams[1], seams[2]],
        feet,
    })
}

impl PantsFrame {
    /// Map sending boundary `i`'s axis to `0 → ∞` with the foot of the seam
    /// between boundaries `i` and `i+1` at `i`.
    pub fn normalizer(&self, i: usize) -> Result<Isometry> {
        let axis = self.axes[i].ok_or_else(|| Error::Invariant(format!("boundary {i} is a cusp")))?;
        let foot = self.feet[i][(i + 2) % 3].expect("hyperbolic boundary has feet");
        Ok(Isometry::normalizing_axis(axis.p, axis.q, foot)?)
    }

    /// Boundary object of slot `i` as an ideal point or an axis endpoint pair.
    pub fn boundary_fixed_points(&self, i: usize) -> Vec<BoundaryPoint> {
        match (self.axes[i], self.cusps[i]) {
            (Some(a), _) => vec![a.p, a.q],
            (None, Some(p)) => vec![p],
            _ => vec![],
        }
    }
}

/// Generator of the holonomy group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Boundary loop of a pants slot.
    Slot { pants: usize, slot: usize },
    /// Stable letter of a gluing outside the spanning tree.
    Stable { curve: u32 },
}

/// Free homotopy class given by a reduced word in the generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveClass {
    pub word: Vec<(Generator, i8)>,
}

impl CurveClass {
    /// Reduces the word; rejects words that reduce to the identity.
    pub fn new(word: Vec<(Generator, i8)>) -> Result<Self> {
        let mut out: Vec<(Generator, i8)> = Vec::with_capacity(word.len());
        for (g, e) in word {
            if e != 1 && e != -1 {
                return Err(Error::InvalidParameter(format!("exponent {e} must be ±1")));
            }
            match out.last() {
                Some(&(h, f)) if h == g && f == -e => {
                    out.pop();
                }
                _ => out.push((g, e)),
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("curve word reduces to the identity".into()));
        }
        Ok(CurveClass { word: out })
    }

    pub fn single(g: Generator) -> Self {
        CurveClass { word: vec![(g, 1)] }
    }

    pub fn inverse(&self) -> CurveClass {
        CurveClass {
            word: self.word.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// `self · other`, reduced.
    pub fn concat(&self, other: &CurveClass) -> Result<CurveClass> {
        CurveClass::new(self.word.iter().chain(other.word.iter()).copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableLetter {
    pub curve: u32,
    pub element: Isometry,
    /// Pants on the A and B sides of the curve.
    pub a_pants: usize,
    pub b_pants: usize,
}

/// Holonomy of a glued surface in a single global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyRep {
    pub frames: Vec<PantsFrame>,
    /// Map from each pants' local frame to the global frame.
    pub placements: Vec<Isometry>,
    /// Boundary generators conjugated into the global frame.
    pub slot_gens: Vec<[Isometry; 3]>,
    pub stable: Vec<StableLetter>,
    /// Gluing map per curve, from the B-side frame into the A-side frame.
    pub gluings: Vec<Isometry>,
    /// Spanning-tree parent of each pants with `placement = placement(parent) · step`.
    pub parent: Vec<Option<(usize, Isometry)>>,
    pub depth: Vec<usize>,
}

impl HolonomyRep {
    pub fn generator(&self, g: Generator) -> Result<Isometry> {
        match g {
            Generator::Slot { pants, slot } => self
                .slot_gens
                .get(pants)
                .map(|s| s[slot % 3])
                .ok_or_else(|| Error::InvalidParameter(format!("no pants {pants}"))),
            Generator::Stable { curve } => self
                .stable
                .iter()
                .find(|s| s.curve == curve)
                .map(|s| s.element)
                .ok_or_else(|| Error::InvalidParameter(format!("no stable letter for curve {curve}"))),
        }
    }

    /// `placement(from)⁻¹ · placement(to)`, multiplied along the tree path so
    /// that nothing passes through the (possibly far away) global frame.
    pub fn transport(&self, from: usize, to: usize) -> Isometry {
        let (mut u, mut v) = (from, to);
        let mut left = Isometry::IDENTITY;
        let mut right = Isometry::IDENTITY;
        while u != v {
            if self.depth[u] >= self.depth[v] {
                let (p, step) = self.parent[u].expect("non-root pants has a parent");
                left = left * step.inverse();
                u = p;
            } else {
                let (p, step) = self.parent[v].expect("non-root pants has a parent");
                right = step * right;
                v = p;
            }
        }
        left * right
    }

    /// A letter as `placement(u) · local · placement(v)⁻¹`.
    fn letter(&self, g: Generator, e: i8) -> Result<(usize, Isometry, usize)> {
        match g {
            Generator::Slot { pants, slot } => {
                let f = self
                    .frames
                    .get(pants)
                    .ok_or_else(|| Error::InvalidParameter(format!("no pants {pants}")))?;
                let x = f.gens[slot % 3];
                Ok((pants, if e > 0 { x } else { x.inverse() }, pants))
            }
            Generator::Stable { curve } => {
                let s = self
                    .stable
                    .iter()
                    .find(|s| s.curve == curve)
                    .ok_or_else(|| Error::InvalidParameter(format!("no stable letter for curve {curve}")))?;
                let m = self.gluings[curve as usize];
                Ok(if e > 0 {
                    (s.a_pants, m, s.b_pants)
                } else {
                    (s.b_pants, m.inverse(), s.a_pants)
                })
            }
        }
    }

    /// The word conjugated into the frame of the pants of its first letter.
    /// Same conjugacy class as [`HolonomyRep::evaluate`], better conditioned.
    pub fn evaluate_local(&self, c: &CurveClass) -> Result<(usize, Isometry)> {
        let letters = c
            .word
            .iter()
            .map(|&(g, e)| self.letter(g, e))
            .collect::<Result<Vec<_>>>()?;
        let base = letters[0].0;
        let mut acc = Isometry::IDENTITY;
        let mut at = base;
        for (u, l, v) in letters {
            acc = acc * self.transport(at, u) * l;
            at = v;
        }
        Ok((base, acc * self.transport(at, base)))
    }

    pub fn evaluate(&self, c: &CurveClass) -> Result<Isometry> {
        c.word.iter().try_fold(Isometry::IDENTITY, |acc, &(g, e)| {
            let m = self.generator(g)?;
            Ok(acc.compose(&if e > 0 { m } else { m.inverse() }))
        })
    }

    pub fn generators(&self) -> Vec<Generator> {
        let mut out: Vec<Generator> = (0..self.slot_gens.len())
            .flat_map(|p| (0..3).map(move |s| Generator::Slot { pants: p, slot: s }))
            .collect();
        out.extend(self.stable.iter().map(|s| Generator::Stable { curve: s.curve }));
        out
    }
}

/// Class of the pants curve `c`, read from its A side.
pub fn curve_word(pg: &PantsGraph, c: u32) -> CurveClass {
    let (a, _) = pg.curve_sides(c);
    CurveClass::single(Generator::Slot {
        pants: a.pants,
        slot: a.slot,
    })
}

/// Class of the loop around cusp `k`.
pub fn cusp_word(pg: &PantsGraph, k: u32) -> Option<CurveClass> {
    pg.pants.iter().enumerate().find_map(|(p, pants)| {
        pants
            .slots
            .iter()
            .position(|s| *s == Slot::Cusp(k))
            .map(|s| CurveClass::single(Generator::Slot { pants: p, slot: s }))
    })
}

pub fn curve_length(h: &HolonomyRep, c: &CurveClass) -> Result<f64> {
    Ok(h.evaluate_local(c)?.1.translation_length()?)
}

pub fn boundary_lengths(pg: &PantsGraph, fnc: &FNCoordinates, p: usize) -> [f64; 3] {
    pg.pants[p].slots.map(|s| match s {
        Slot::Cusp(_) => 0.0,
        Slot::Curve(c) => fnc.length(c),
    })
}

pub fn holonomy_from_fn(pg: &PantsGraph, fnc: &FNCoordinates) -> Result<HolonomyRep> {
    let np = pg.pants.len();
    let nc = pg.curve_count();
    if fnc.entries.len() != nc {
        return Err(Error::InvalidCoordinates(format!(
            "{} coordinates for {nc} curves",
            fnc.entries.len()
        )));
    }
    let frames = (0..np)
        .map(|p| pants_frame(boundary_lengths(pg, fnc, p)))
        .collect::<Result<Vec<_>>>()?;
    let flip = Isometry::new(0.0, -1.0, 1.0, 0.0)?;
    let mut gluings = Vec::with_capacity(nc);
    for c in 0..nc as u32 {
        let (a, b) = pg.curve_sides(c);
        let ga = frames[a.pants].normalizer(a.slot)?;
        let gb = frames[b.pants].normalizer(b.slot)?;
        let t = Isometry::axial_translation(fnc.twist(c));
        gluings.push(ga.inverse() * t * flip * gb);
    }

    let mut placements: Vec<Option<Isometry>> = vec![None; np];
    let mut parent: Vec<Option<(usize, Isometry)>> = vec![None; np];
    let mut depth = vec![0usize; np];
    let mut tree = vec![false; nc];
    placements[0] = Some(Isometry::IDENTITY);
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let fp = placements[p].expect("queued pants are placed");
        for s in 0..3 {
            let Slot::Curve(c) = pg.pants[p].slots[s] else { continue };
            let (a, b) = pg.curve_sides(c);
            let (here_is_a, other) = if a.pants == p && a.slot == s { (true, b) } else { (false, a) };
            if placements[other.pants].is_some() {
                continue;
            }
            let m = if here_is_a { gluings[c as usize] } else { gluings[c as usize].inverse() };
            placements[other.pants] = Some(fp * m);
            parent[other.pants] = Some((p, m));
            depth[other.pants] = depth[p] + 1;
            tree[c as usize] = true;
            queue.push_back(other.pants);
        }
    }
    let placements: Vec<Isometry> = placements
        .into_iter()
        .map(|f| f.ok_or_else(|| Error::InvalidGraph("gluing graph is not connected".into())))
        .collect::<Result<_>>()?;
    let slot_gens = (0..np)
        .map(|p| frames[p].gens.map(|x| placements[p].conjugate(&x)))
        .collect();
    let stable = (0..nc as u32)
        .filter(|c| !tree[*c as usize])
        .map(|c| {
            let (a, b) = pg.curve_sides(c);
            StableLetter {
                curve: c,
                element: placements[a.pants] * gluings[c as usize] * placements[b.pants].inverse(),
                a_pants: a.pants,
                b_pants: b.pants,
            }
        })
        .collect();
    let rep = HolonomyRep {
        frames,
        placements,
        slot_gens,
        stable,
        gluings,
        parent,
        depth,
    };
    check_holonomy(pg, fnc, &rep)?;
    Ok(rep)
}

/// Length recovery and cusp parabolicity.
fn check_holonomy(pg: &PantsGraph, fnc: &FNCoordinates, h: &HolonomyRep) -> Result<()> {
    for e in &fnc.entries {
        let len = curve_length(h, &curve_word(pg, e.curve))?;
        if (len - e.length).abs() > 1e-9 * e.length.max(1.0) {
            return Err(Error::Invariant(format!(
                "curve {} has holonomy length {len}, expected {}",
                e.curve, e.length
            )));
        }
    }
    for (p, pants) in pg.pants.iter().enumerate() {
        for (s, slot) in pants.slots.iter().enumerate() {
            if let Slot::Cusp(k) = slot {
                let t = h.frames[p].gens[s].trace().abs();
                if (t - 2.0).abs() > 1e-9 {
                    return Err(Error::Invariant(format!("cusp {k} has trace {t}")));
                }
            }
        }
    }
    Ok(())
}

/// Twist ranges are absolute lengths or fractions of each curve's length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TwistRange {
    Absolute { min: f64, max: f64 },
    Fractional { min: f64, max: f64 },
}

impl Default for TwistRange {
    fn default() -> Self {
        TwistRange::Fractional { min: 0.0, max: 1.0 }
    }
}

/// Upper end of the default length range, `2 log(4 area)`.
pub fn default_length_max(sig: Signature) -> f64 {
    2.0 * (4.0 * area(sig)).ln()
}

pub const DEFAULT_LENGTH_MIN: f64 = 0.05;

/// Generator for sample `index` of a campaign seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random FN coordinates on the canonical graph; lengths uniform in
/// `(min, max]`.
pub fn sample_fn_with<R: Rng>(
    sig: Signature,
    rng: &mut R,
    length_range: (f64, f64),
    twist_range: TwistRange,
) -> Result<(PantsGraph, FNCoordinates)> {
    let (lo, hi) = length_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid length range ({lo}, {hi}]")));
    }
    let pg = PantsGraph::canonical(sig);
    let entries = (0..pg.curve_count() as u32)
        .map(|c| {
            let length = hi - rng.gen::<f64>() * (hi - lo);
            let twist = match twist_range {
                TwistRange::Absolute { min, max } => min + rng.gen::<f64>() * (max - min),
                TwistRange::Fractional { min, max } => (min + rng.gen::<f64>() * (max - min)) * length,
            };
            FnEntry { curve: c, length, twist }
        })
        .collect();
    let fnc = FNCoordinates::new(entries, pg.curve_count())?;
    Ok((pg, fnc))
}

pub fn sample_fn(
    sig: Signature,
    seed: u64,
    length_range: (f64, f64),
    twist_range: TwistRange,
) -> Result<(PantsGraph, FNCoordinates)> {
    sample_fn_with(sig, &mut sample_rng(seed, 0), length_range, twist_range)
}

/// Surface input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub signature: Signature,
    pub pants: PantsGraph,
    #[serde(rename = "fn")]
    pub coordinates: Vec<FnEntry>,
}

/// A validated surface: graph, coordinates and holonomy.
#[derive(Debug, Clone)]
pub struct Surface {
    pub signature: Signature,
    pub graph: PantsGraph,
    pub coordinates: FNCoordinates,
    pub holonomy: HolonomyRep,
}

impl Surface {
    pub fn new(signature: Signature, graph: PantsGraph, coordinates: FNCoordinates) -> Result<Self> {
        validate(&graph, signature)?;
        let holonomy = holonomy_from_fn(&graph, &coordinates)?;
        Ok(Surface {
            signature,
            graph,
            coordinates,
            holonomy,
        })
    }

    pub fn from_file(file: &SurfaceFile) -> Result<Self> {
        let sig = Signature::new(file.signature.g, file.signature.n)?;
        validate(&file.pants, sig)?;
        let fnc = FNCoordinates::new(file.coordinates.clone(), file.pants.curve_count())?;
        Surface::new(sig, file.pants.clone(), fnc)
    }

    pub fn to_file(&self) -> SurfaceFile {
        SurfaceFile {
            signature: self.signature,
            pants: self.graph.clone(),
            coordinates: self.coordinates.entries.clone(),
        }
    }

    pub fn parse(json: &str) -> Result<Self> {
        let file: SurfaceFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        Surface::from_file(&file)
    }
}
