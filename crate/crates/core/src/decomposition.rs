//! Hexagon decompositions built from pants seams, the doubled curves `γ_a`,
//! truncated arc lengths and the shortness certificate.

use serde::{Deserialize, Serialize};

use crate::constants::{area, collar_width, intermediate_threshold, Signature};
use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, Geodesic, Isometry};
use crate::surface::{
    curve_length, seam_lengths, CurveClass, Generator, PantsFrame, Side, Slot, SlotRef, Surface,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcEndpoint {
    /// `side` is `A` on the left of the curve's reference orientation.
    OnCurve { curve: u32, side: Side },
    AtCusp { cusp: u32 },
}

impl ArcEndpoint {
    fn of_slot(surface: &Surface, r: SlotRef) -> ArcEndpoint {
        match surface.graph.slot(r) {
            Slot::Cusp(k) => ArcEndpoint::AtCusp { cusp: k },
            Slot::Curve(c) => ArcEndpoint::OnCurve {
                curve: c,
                side: surface.graph.side(r).expect("curve slot has a side"),
            },
        }
    }

    pub fn is_cusp(&self) -> bool {
        matches!(self, ArcEndpoint::AtCusp { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoArc {
    pub id: usize,
    pub pants: usize,
    /// Seam index inside the pants; the seam joins the other two slots.
    pub seam: usize,
    /// Local slots of the two ends, in increasing order.
    pub slots: [usize; 2],
    pub endpoints: [ArcEndpoint; 2],
    /// `None` when an end is at a cusp.
    pub length: Option<f64>,
    pub gamma_word: CurveClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveInfo {
    pub id: u32,
    pub length: f64,
    pub a_side: SlotRef,
    pub b_side: SlotRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HexSide {
    Boundary { slot: usize },
    Arc { id: usize },
}

/// Right-angled hexagon, or a degenerate one with ideal vertices at cusp slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hexagon {
    pub pants: usize,
    pub front: bool,
    pub sides: [HexSide; 6],
    pub ideal_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexagonDecomposition {
    pub signature: Signature,
    pub curves: Vec<CurveInfo>,
    pub arcs: Vec<OrthoArc>,
    pub hexagons: Vec<Hexagon>,
}

/// Arc id of seam `k` of pants `p`.
pub fn arc_id(p: usize, k: usize) -> usize {
    3 * p + k
}

/// Exponent of a slot's boundary loop inside `γ_a`.
fn gamma_exponent(surface: &Surface, r: SlotRef) -> i8 {
    match surface.graph.side(r) {
        Some(Side::B) => -1,
        _ => 1,
    }
}

pub fn seam_decomposition(surface: &Surface) -> Result<HexagonDecomposition> {
    let pg = &surface.graph;
    let curves = (0..pg.curve_count() as u32)
        .map(|c| {
            let (a, b) = pg.curve_sides(c);
            CurveInfo {
                id: c,
                length: surface.coordinates.length(c),
                a_side: a,
                b_side: b,
            }
        })
        .collect();
    let mut arcs = Vec::new();
    let mut hexagons = Vec::new();
    for (p, frame) in surface.holonomy.frames.iter().enumerate() {
        let seams = seam_lengths(frame.lengths)?;
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let slots = [i.min(j), i.max(j)];
            let refs = slots.map(|s| SlotRef { pants: p, slot: s });
            let word = CurveClass::new(
                refs.iter()
                    .map(|r| {
                        (
                            Generator::Slot {
                                pants: r.pants,
                                slot: r.slot,
                            },
                            gamma_exponent(surface, *r),
                        )
                    })
                    .collect(),
            )?;
            arcs.push(OrthoArc {
                id: arc_id(p, k),
                pants: p,
                seam: k,
                slots,
                endpoints: refs.map(|r| ArcEndpoint::of_slot(surface, r)),
                length: seams[k],
                gamma_word: word,
            });
        }
        let ideal_vertices = pg.pants[p].slots.iter().filter(|s| matches!(s, Slot::Cusp(_))).count();
        for front in [true, false] {
            hexagons.push(Hexagon {
                pants: p,
                front,
                // boundary 0, seam 2, boundary 1, seam 0, boundary 2, seam 1
                sides: [
                    HexSide::Boundary { slot: 0 },
                    HexSide::Arc { id: arc_id(p, 2) },
                    HexSide::Boundary { slot: 1 },
                    HexSide::Arc { id: arc_id(p, 0) },
                    HexSide::Boundary { slot: 2 },
                    HexSide::Arc { id: arc_id(p, 1) },
                ],
                ideal_vertices,
            });
        }
    }
    Ok(HexagonDecomposition {
        signature: surface.signature,
        curves,
        arcs,
        hexagons,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaA {
    pub word: CurveClass,
    /// `None` when the doubled curve is parabolic.
    pub length: Option<f64>,
    pub parabolic: bool,
}

pub fn gamma_a(arc: &OrthoArc, surface: &Surface) -> Result<GammaA> {
    let (_, m) = surface.holonomy.evaluate_local(&arc.gamma_word)?;
    let parabolic = m.classify() == crate::hyperbolic::IsometryKind::Parabolic;
    let length = if parabolic {
        None
    } else {
        Some(curve_length(&surface.holonomy, &arc.gamma_word)?)
    };
    Ok(GammaA {
        word: arc.gamma_word.clone(),
        length,
        parabolic,
    })
}

/// Horocycle length used for standard cusp neighbourhoods.
pub const STANDARD_HOROCYCLE: f64 = 2.0;

/// An interval `[lo, hi]` of arclength along an arc, with its source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub source: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub arc: usize,
    pub length: f64,
    pub regions: Vec<Region>,
    pub diagnostics: Vec<String>,
}

/// Seam `k` of a pants frame placed on the imaginary axis, with the
/// arclength coordinate `t = log u` of points `i u`.
pub(crate) struct SeamChart {
    pub to_axis: Isometry,
    pub ends: [f64; 2],
}

pub(crate) fn seam_chart(frame: &PantsFrame, k: usize) -> Result<SeamChart> {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let seam = frame.seams[k];
    // a cusp end must go to 0 (slot i) or ∞ (slot j)
    let flip = match (frame.cusps[i], frame.cusps[j]) {
        (Some(p), _) => !p.approx_eq(seam.p, 1e-12),
        (None, Some(q)) => q.approx_eq(seam.p, 1e-12),
        (None, None) => false,
    };
    let (from, to) = if flip { (seam.q, seam.p) } else { (seam.p, seam.q) };
    let to_axis = Isometry::sending_to_zero_infinity(from, to)?;
    let coord = |m: usize, default: f64| -> f64 {
        match frame.feet[m][k] {
            Some(f) => {
                let z = to_axis.apply(f);
                0.5 * (z.x * z.x + z.y * z.y).ln()
            }
            None => default,
        }
    };
    let (a, b) = (coord(i, f64::NEG_INFINITY), coord(j, f64::INFINITY));
    Ok(SeamChart {
        to_axis,
        ends: [a.min(b), a.max(b)],
    })
}

/// `u`-interval of points `i u` within distance `w` of geodesic `g`.
pub(crate) fn collar_interval(g: &Geodesic, w: f64) -> Option<(f64, f64)> {
    let s = w.sinh();
    match (g.p, g.q) {
        (BoundaryPoint::Real(c), BoundaryPoint::Infinity) | (BoundaryPoint::Infinity, BoundaryPoint::Real(c)) => {
            // sinh d = |c| / u
            if c == 0.0 {
                Some((0.0, f64::INFINITY))
            } else {
                Some((c.abs() / s, f64::INFINITY))
            }
        }
        (BoundaryPoint::Real(a), BoundaryPoint::Real(b)) => {
            let c = (a + b) / 2.0;
            let r = (b - a).abs() / 2.0;
            let k = c * c - r * r;
            let disc = r * r * s * s - k;
            if disc < 0.0 {
                return None;
            }
            let root = disc.sqrt();
            if k > 0.0 {
                Some(((r * s - root).max(0.0), r * s + root))
            } else {
                Some((-r * s + root, r * s + root))
            }
        }
        _ => None,
    }
}

/// `u`-interval of points `i u` inside the horoball where the cusp
/// `parabolic` has horocycle length at most `delta`.
pub(crate) fn horoball_interval(parabolic: &Isometry, delta: f64) -> Result<Option<(f64, f64)>> {
    let q = parabolic.parabolic_fixed_point()?;
    let g = match q {
        BoundaryPoint::Infinity => Isometry::IDENTITY,
        BoundaryPoint::Real(q) => Isometry::new(0.0, -1.0, 1.0, -q)?,
    };
    let t = g.conjugate(parabolic);
    let w = (if t.a < 0.0 { -t.b } else { t.b }).abs();
    let k = delta / w;
    Ok(match q {
        BoundaryPoint::Infinity => Some((w / delta, f64::INFINITY)),
        BoundaryPoint::Real(q) if q == 0.0 => Some((0.0, k)),
        BoundaryPoint::Real(q) => {
            let disc = k * k - 4.0 * q * q;
            if disc < 0.0 {
                None
            } else {
                let root = disc.sqrt();
                Some(((k - root) / 2.0, (k + root) / 2.0))
            }
        }
    })
}

fn to_t(iv: (f64, f64)) -> (f64, f64) {
    let f = |u: f64| if u <= 0.0 { f64::NEG_INFINITY } else { u.ln() };
    (f(iv.0), f(iv.1))
}

/// Measure of `[lo, hi]` minus the union of `regions`; errors if infinite.
pub(crate) fn uncovered_length(lo: f64, hi: f64, regions: &[(f64, f64)]) -> Option<f64> {
    let mut clipped: Vec<(f64, f64)> = regions
        .iter()
        .map(|&(a, b)| (a.max(lo), b.min(hi)))
        .filter(|(a, b)| a < b)
        .collect();
    clipped.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cursor = lo;
    let mut total = 0.0;
    for (a, b) in clipped {
        if a > cursor {
            total += a - cursor;
        }
        cursor = cursor.max(b);
    }
    if hi > cursor {
        total += hi - cursor;
    }
    total.is_finite().then_some(total)
}

/// Overlap tolerance between truncation regions.
pub const REGION_OVERLAP_TOL: f64 = 1e-9;

/// Length of the seam outside the standard cusp neighbourhoods and the full
/// collars of curves no longer than `2 arcsinh 1`.
pub fn truncate_arc(arc: &OrthoArc, surface: &Surface) -> Result<Truncation> {
    let frame = &surface.holonomy.frames[arc.pants];
    let chart = seam_chart(frame, arc.seam)?;
    let (lo, hi) = (chart.ends[0], chart.ends[1]);
    let mut regions = Vec::new();
    for m in 0..3 {
        let slot = surface.graph.pants[arc.pants].slots[m];
        match slot {
            Slot::Curve(c) => {
                let len = frame.lengths[m];
                if len <= intermediate_threshold() {
                    let axis = frame.axes[m].expect("curve slot has an axis");
                    let image = chart.to_axis.apply_geodesic(&axis);
                    if let Some(iv) = collar_interval(&image, collar_width(len)?) {
                        let (a, b) = to_t(iv);
                        regions.push(Region {
                            source: format!("collar:curve{c}"),
                            lo: a,
                            hi: b,
                        });
                    }
                }
            }
            Slot::Cusp(k) => {
                let par = chart.to_axis.conjugate(&frame.gens[m]);
                if let Some(iv) = horoball_interval(&par, STANDARD_HOROCYCLE)? {
                    let (a, b) = to_t(iv);
                    regions.push(Region {
                        source: format!("horoball:cusp{k}"),
                        lo: a,
                        hi: b,
                    });
                }
            }
        }
    }
    let mut diagnostics = Vec::new();
    let clip = |r: &Region| (r.lo.max(lo), r.hi.min(hi));
    for x in 0..regions.len() {
        for y in (x + 1)..regions.len() {
            let (a1, b1) = clip(&regions[x]);
            let (a2, b2) = clip(&regions[y]);
            let overlap = b1.min(b2) - a1.max(a2);
            if overlap > REGION_OVERLAP_TOL {
                diagnostics.push(format!(
                    "{} and {} overlap by {overlap:e} along arc {}",
                    regions[x].source, regions[y].source, arc.id
                ));
            }
        }
    }
    let spans: Vec<(f64, f64)> = regions.iter().map(|r| (r.lo, r.hi)).collect();
    let length = uncovered_length(lo, hi, &spans).ok_or_else(|| {
        Error::Invariant(format!("arc {} has an unbounded part outside cusp neighbourhoods", arc.id))
    })?;
    Ok(Truncation {
        arc: arc.id,
        length,
        regions,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub subject: String,
    pub check: String,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortnessReport {
    pub rows: Vec<CheckRow>,
    pub truncations: Vec<Truncation>,
    pub certified: bool,
}

fn row(subject: String, check: &str, value: f64, limit: f64) -> CheckRow {
    CheckRow {
        subject,
        check: check.into(),
        value,
        limit,
        holds: value <= limit,
    }
}

pub fn certify_short(hd: &HexagonDecomposition, surface: &Surface) -> Result<ShortnessReport> {
    let log4a = (4.0 * area(hd.signature)).ln();
    let mut rows = Vec::new();
    for c in &hd.curves {
        rows.push(row(format!("curve{}", c.id), "length", c.length, 2.0 * log4a));
    }
    let mut truncations = Vec::new();
    for arc in &hd.arcs {
        let subject = format!("arc{}", arc.id);
        let curve_ends: Vec<u32> = arc
            .endpoints
            .iter()
            .filter_map(|e| match e {
                ArcEndpoint::OnCurve { curve, .. } => Some(*curve),
                ArcEndpoint::AtCusp { .. } => None,
            })
            .collect();
        if curve_ends.len() == 2 {
            let g = gamma_a(arc, surface)?;
            rows.push(row(subject.clone(), "gamma_a_length", g.length.unwrap_or(0.0), 8.0 * log4a));
            let extra: f64 = curve_ends
                .iter()
                .map(|&c| {
                    let len = surface.coordinates.length(c);
                    if len <= intermediate_threshold() {
                        collar_width(len)
                    } else {
                        Ok(0.0)
                    }
                })
                .sum::<Result<f64>>()?;
            let len = arc.length.expect("arcs between curves are finite");
            rows.push(row(subject.clone(), "arc_length", len, 6.0 * log4a + extra));
        }
        let t = truncate_arc(arc, surface)?;
        rows.push(row(subject, "truncated_length", t.length, 6.0 * log4a));
        truncations.push(t);
    }
    let certified = rows.iter().all(|r| r.holds);
    Ok(ShortnessReport {
        rows,
        truncations,
        certified,
    })
}
