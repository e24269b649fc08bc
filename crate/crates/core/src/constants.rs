//! Named constants and closed-form bounds, plus an audit that re-derives the
//! numeric inequalities they are supposed to satisfy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ρ = log(3)/4`, half the inradius of an ideal triangle.
pub fn rho() -> f64 {
    3f64.ln() / 4.0
}

/// Default `ρ′`, just below `ρ`.
pub fn default_rho_prime() -> f64 {
    rho() * (1.0 - 1e-6)
}

/// `2 tanh ρ`, the upper end of the short regime.
pub fn short_threshold() -> f64 {
    2.0 * rho().tanh()
}

/// `2 arcsinh 1`, the upper end of the intermediate regime.
pub fn intermediate_threshold() -> f64 {
    2.0 * 1f64.asinh()
}

/// Topological type `(g, n)` with `2g - 2 + n > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub g: u32,
    pub n: u32,
}

impl Signature {
    pub fn new(g: u32, n: u32) -> Result<Self> {
        if 2 * g as i64 - 2 + n as i64 <= 0 {
            return Err(Error::InvalidSignature { g, n });
        }
        Ok(Signature { g, n })
    }

    /// `2g - 2 + n`, also the number of pants.
    pub fn complexity(&self) -> u32 {
        2 * self.g + self.n - 2
    }

    pub fn internal_curves(&self) -> u32 {
        3 * self.g + self.n - 3
    }

    pub fn edge_count(&self) -> u32 {
        3 * self.complexity()
    }

    pub fn triangle_count(&self) -> u32 {
        2 * self.complexity()
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "g{}n{}", self.g, self.n)
    }
}

pub fn area(sig: Signature) -> f64 {
    2.0 * PI * sig.complexity() as f64
}

/// Collar half-width `w(ℓ) = arcsinh(1/sinh(ℓ/2))`.
pub fn collar_width(len: f64) -> Result<f64> {
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidParameter(format!("collar width needs a positive length, got {len}")));
    }
    Ok((1.0 / (len / 2.0).sinh()).asinh())
}

fn w(len: f64) -> f64 {
    (1.0 / (len / 2.0).sinh()).asinh()
}

/// `R = arccosh(1 / (2 sin(π/(12g - 6 + 6n))))`.
pub fn bavard_bound(sig: Signature) -> f64 {
    let k = 12.0 * sig.g as f64 - 6.0 + 6.0 * sig.n as f64;
    (1.0 / (2.0 * (PI / k).sin())).acosh()
}

/// `δ₁`, the area left over in a disk of radius `2ρ` once the ideal-triangle
/// sectors are removed: `(2π(cosh 2ρ - 1) - (π - 3)) / 3`.
pub fn delta1() -> f64 {
    (2.0 * PI * ((2.0 * rho()).cosh() - 1.0) - (PI - 3.0)) / 3.0
}

/// Lower estimate of `δ₁` used in the cusped area count.
pub const DELTA1_PRIME: f64 = 0.27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearFreeParams {
    pub rho: f64,
    pub rho_prime: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl Default for ShearFreeParams {
    fn default() -> Self {
        shear_free_params(default_rho_prime()).expect("default ρ′ is admissible")
    }
}

pub fn shear_free_params(rho_prime: f64) -> Result<ShearFreeParams> {
    let rho = rho();
    if !(rho_prime > 0.0 && rho_prime < rho) {
        return Err(Error::InvalidParameter(format!(
            "rho_prime must lie in (0, {rho}), got {rho_prime}"
        )));
    }
    Ok(ShearFreeParams {
        rho,
        rho_prime,
        delta2: 2.0 * rho_prime.sinh() / rho.exp(),
        delta3: rho_prime.asinh(),
    })
}

/// `arccosh(2 sinh δ₃ / ℓ) - ρ` without clamping. Negative just below `2 tanh ρ`.
pub fn truncated_collar_width_raw(len: f64, params: &ShearFreeParams) -> Result<f64> {
    if !(len > 0.0 && len <= short_threshold()) {
        return Err(Error::InvalidParameter(format!(
            "truncated collar needs 0 < len <= 2 tanh(rho), got {len}"
        )));
    }
    let arg = 2.0 * params.delta3.sinh() / len;
    if arg < 1.0 {
        return Err(Error::InvalidParameter(format!("arccosh argument {arg} < 1")));
    }
    Ok(arg.acosh() - params.rho)
}

/// Half-width `wᵀ` of the truncated collar, clamped at `0` (empty collar)
/// where the raw value is negative.
pub fn truncated_collar_width(len: f64, params: &ShearFreeParams) -> Result<f64> {
    let raw = truncated_collar_width_raw(len, params)?;
    let wt = raw.max(0.0);
    if !(wt + params.rho < w(len)) {
        return Err(Error::Invariant(format!("w^T + rho >= w at length {len}")));
    }
    Ok(wt)
}

/// Length below which the raw truncated width is nonnegative, `2 sinh δ₃ / cosh ρ`.
pub fn truncated_collar_threshold(params: &ShearFreeParams) -> f64 {
    2.0 * params.delta3.sinh() / params.rho.cosh()
}

/// `32 log(8π(2g-2+n)) + 23`.
pub fn main_bound(sig: Signature) -> f64 {
    32.0 * (8.0 * PI * sig.complexity() as f64).ln() + 23.0
}

/// `D = 16 log(4 area) + 8.7`.
pub fn claim_distance_constant(sig: Signature) -> f64 {
    16.0 * (4.0 * area(sig)).ln() + 8.7
}

/// Shear bound for punctured surfaces in terms of the systole:
/// `(area - 0.27 n - π(cosh(sys/4) - 1)) / (2 sinh(sys/4))`.
pub fn rough_cusped_bound(sig: Signature, sys: f64) -> Result<f64> {
    if sig.n == 0 {
        return Err(Error::InvalidParameter("rough cusped bound needs n >= 1".into()));
    }
    if !(sys > 0.0) {
        return Err(Error::InvalidParameter(format!("systole must be positive, got {sys}")));
    }
    let num = area(sig) - DELTA1_PRIME * sig.n as f64 - PI * ((sys / 4.0).cosh() - 1.0);
    if !(num > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "numerator {num} is not positive; the bound is vacuous here"
        )));
    }
    Ok(num / (2.0 * (sys / 4.0).sinh()))
}

/// `log(sinh(ℓ/2))`, the distance bound from a collar boundary for long curves.
pub fn boundlength0(len: f64) -> Result<f64> {
    if !(len > intermediate_threshold()) {
        return Err(Error::InvalidParameter(format!(
            "boundlength0 applies to lengths above 2 arcsinh 1, got {len}"
        )));
    }
    Ok((len / 2.0).sinh().ln())
}

/// Endpoint type of an arc, for the spike constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regime {
    Cusp,
    Short { length: f64 },
    Intermediate,
    Long,
}

impl Regime {
    /// Regime of a closed curve; ties go to the shorter regime.
    pub fn of_curve(len: f64) -> Regime {
        if len <= short_threshold() {
            Regime::Short { length: len }
        } else if len <= intermediate_threshold() {
            Regime::Intermediate
        } else {
            Regime::Long
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Regime::Cusp => 0,
            Regime::Short { .. } => 1,
            Regime::Intermediate => 2,
            Regime::Long => 3,
        }
    }
}

/// `w(ℓ) - wᵀ(ℓ)` for a short curve.
pub fn collar_gap(len: f64, params: &ShearFreeParams) -> Result<f64> {
    Ok(w(len) - truncated_collar_width(len, params)?)
}

/// Additive constant `C` in the arc-length bound, by endpoint regimes.
pub fn spike_constant(a: Regime, b: Regime, params: &ShearFreeParams) -> Result<f64> {
    let (a, b) = if a.rank() <= b.rank() { (a, b) } else { (b, a) };
    let log2d = (2.0 / params.delta2).ln();
    let w_mid = w(short_threshold());
    let gap = |r: Regime| -> Result<f64> {
        match r {
            Regime::Short { length } => collar_gap(length, params),
            _ => unreachable!(),
        }
    };
    use Regime::*;
    Ok(match (a, b) {
        (Cusp, Cusp) => 2.0 * log2d,
        (Cusp, Short { .. }) => log2d + gap(b)?,
        (Cusp, Intermediate) => log2d + w_mid,
        (Cusp, Long) => log2d,
        (Short { .. }, Short { .. }) => gap(a)? + gap(b)?,
        (Short { .. }, Intermediate) => gap(a)? + w_mid,
        (Short { .. }, Long) => gap(a)?,
        (Intermediate, Intermediate) => 2.0 * w_mid,
        (Intermediate, Long) => w_mid,
        (Long, Long) => 0.0,
        _ => unreachable!("pairs are sorted by rank"),
    })
}

/// One row per regime pair, each maximised over admissible short lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeEntry {
    pub pair: String,
    pub value: f64,
    pub witness_lengths: Vec<f64>,
}

/// Supremum of `w - wᵀ` over the short regime and the length attaining it.
pub fn sup_collar_gap(params: &ShearFreeParams) -> (f64, f64) {
    short_grid(params)
        .into_iter()
        .map(|l| (collar_gap(l, params).unwrap_or(f64::NAN), l))
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

pub fn spike_table(params: &ShearFreeParams) -> Vec<SpikeEntry> {
    let (_, at) = sup_collar_gap(params);
    let short = Regime::Short { length: at };
    let rows: [(&str, Regime, Regime); 10] = [
        ("cusp/cusp", Regime::Cusp, Regime::Cusp),
        ("cusp/short", Regime::Cusp, short),
        ("cusp/intermediate", Regime::Cusp, Regime::Intermediate),
        ("cusp/long", Regime::Cusp, Regime::Long),
        ("short/short", short, short),
        ("short/intermediate", short, Regime::Intermediate),
        ("short/long", short, Regime::Long),
        ("intermediate/intermediate", Regime::Intermediate, Regime::Intermediate),
        ("intermediate/long", Regime::Intermediate, Regime::Long),
        ("long/long", Regime::Long, Regime::Long),
    ];
    rows.iter()
        .map(|(name, a, b)| {
            let witnesses = [a, b]
                .iter()
                .filter_map(|r| match r {
                    Regime::Short { length } => Some(*length),
                    _ => None,
                })
                .collect();
            SpikeEntry {
                pair: name.to_string(),
                value: spike_constant(*a, *b, params).expect("grid lengths are admissible"),
                witness_lengths: witnesses,
            }
        })
        .collect()
}

/// Log-spaced grid on the short regime plus the clamp kink and the endpoint.
fn short_grid(params: &ShearFreeParams) -> Vec<f64> {
    const N: usize = 10_000;
    let hi = short_threshold();
    let lo = hi * 1e-8;
    let mut grid: Vec<f64> = (0..N)
        .map(|k| lo * (hi / lo).powf(k as f64 / (N - 1) as f64))
        .collect();
    grid.push(truncated_collar_threshold(params).min(hi));
    grid.push(hi);
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub passed: bool,
}

impl AuditReport {
    pub fn row(&self, name: &str) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn row_below(name: &str, value: f64, limit: f64, witness: Option<f64>) -> AuditRow {
    AuditRow {
        name: name.into(),
        value,
        limit,
        holds: value < limit,
        witness,
    }
}

/// Tolerance on the `log(2/δ₂)` limit value.
pub const LOG_TWO_OVER_DELTA2_TOL: f64 = 1e-3;

pub fn constants_audit(params: &ShearFreeParams) -> AuditReport {
    let mut rows = Vec::new();
    rows.push(row_below("two_tanh_rho", short_threshold(), 0.536, None));

    let (gap, gap_at) = sup_collar_gap(params);
    let analytic = (1.0 / rho().tanh().sinh()).asinh();
    rows.push(row_below("sup_collar_gap_vs_2.02", gap, 2.02, Some(gap_at)));
    rows.push(AuditRow {
        name: "sup_collar_gap_vs_arcsinh".into(),
        value: gap,
        limit: analytic,
        holds: gap <= analytic,
        witness: Some(gap_at),
    });
    rows.push(row_below("arcsinh_bound_vs_2.02", analytic, 2.02, None));

    let (boundary, boundary_at) = short_grid(params)
        .into_iter()
        .map(|l| (l * truncated_collar_width(l, params).unwrap_or(f64::NAN).cosh(), l))
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    rows.push(row_below("sup_collar_boundary_length", boundary, 0.54, Some(boundary_at)));

    let (c_max, c_pair) = spike_table(params)
        .into_iter()
        .map(|e| (e.value, e.witness_lengths.first().copied()))
        .fold((f64::NEG_INFINITY, None), |acc, x| if x.0 > acc.0 { x } else { acc });
    rows.push(AuditRow {
        name: "spike_constant_max".into(),
        value: c_max,
        limit: 4.04,
        holds: c_max <= 4.04,
        witness: c_pair,
    });

    let log2d = (2.0 / params.delta2).ln();
    rows.push(AuditRow {
        name: "log_two_over_delta2".into(),
        value: log2d,
        limit: 1.5545,
        holds: (log2d - 1.5545).abs() <= LOG_TWO_OVER_DELTA2_TOL,
        witness: None,
    });

    let worst_margin = short_grid(params)
        .into_iter()
        .map(|l| (w(l) - truncated_collar_width_raw(l, params).unwrap_or(f64::NAN).max(0.0) - params.rho, l))
        .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
    rows.push(AuditRow {
        name: "truncated_collar_inside_collar".into(),
        value: worst_margin.0,
        limit: 0.0,
        holds: worst_margin.0 > 0.0,
        witness: Some(worst_margin.1),
    });

    let passed = rows.iter().all(|r| r.holds);
    AuditReport { rows, passed }
}

/// Every constant attached to a signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConstants {
    pub signature: Signature,
    pub area: f64,
    #[serde(rename = "R")]
    pub bavard: f64,
    #[serde(rename = "D")]
    pub claim_distance: f64,
    pub main_bound: f64,
    pub delta1: f64,
    pub rho: f64,
    pub rho_prime: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub two_tanh_rho: f64,
    pub short_hexagon_curve_bound: f64,
    pub spike_table: Vec<SpikeEntry>,
}

pub fn topology_constants(sig: Signature, params: &ShearFreeParams) -> TopologyConstants {
    TopologyConstants {
        signature: sig,
        area: area(sig),
        bavard: bavard_bound(sig),
        claim_distance: claim_distance_constant(sig),
        main_bound: main_bound(sig),
        delta1: delta1(),
        rho: params.rho,
        rho_prime: params.rho_prime,
        delta2: params.delta2,
        delta3: params.delta3,
        two_tanh_rho: short_threshold(),
        short_hexagon_curve_bound: 2.0 * (4.0 * area(sig)).ln(),
        spike_table: spike_table(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_validation() {
        assert!(Signature::new(0, 2).is_err());
        assert!(Signature::new(1, 0).is_err());
        assert_eq!(Signature::new(2, 0).unwrap().complexity(), 2);
        assert_eq!(Signature::new(1, 1).unwrap().edge_count(), 3);
    }

    #[test]
    fn areas() {
        assert_eq!(area(Signature::new(2, 0).unwrap()), 4.0 * PI);
        assert_eq!(area(Signature::new(0, 3).unwrap()), 2.0 * PI);
        assert_eq!(area(Signature::new(1, 1).unwrap()), 2.0 * PI);
    }

    #[test]
    fn collar_widths() {
        let l = 2.0 * 1f64.asinh();
        assert!((collar_width(l).unwrap() - 1f64.asinh()).abs() < 1e-15);
        assert!((collar_width(1.0).unwrap() - 1.406_829_113_747_295).abs() < 1e-12);
        assert!(collar_width(0.0).is_err());
    }

    #[test]
    fn bavard_values() {
        let r20 = bavard_bound(Signature::new(2, 0).unwrap());
        assert!((r20 - 1.719_107_120_615).abs() < 1e-11);
        let r11 = bavard_bound(Signature::new(1, 1).unwrap());
        assert!((r11 - 1.276_686_868_380).abs() < 1e-11);
    }

    #[test]
    fn delta1_value() {
        assert!((delta1() - 0.276_806_498_722).abs() < 1e-11);
        assert!(delta1() > DELTA1_PRIME);
    }

    #[test]
    fn shear_free_defaults() {
        let p = ShearFreeParams::default();
        assert!((p.delta2 - 0.422_649_3).abs() < 1e-6);
        assert!((p.delta3 - rho().asinh()).abs() < 1e-6);
        assert!(shear_free_params(rho()).is_err());
        assert!(shear_free_params(0.0).is_err());
        for rp in [0.01, 0.1, 0.2] {
            let q = shear_free_params(rp).unwrap();
            assert!(q.delta3 < rp + rp.powi(3) / 6.0);
        }
    }

    #[test]
    fn truncated_width_boundary_and_identity() {
        let p = ShearFreeParams::default();
        let l0 = truncated_collar_threshold(&p);
        assert!(truncated_collar_width(l0, &p).unwrap().abs() < 1e-12);
        let wt = truncated_collar_width(0.1, &p).unwrap();
        assert!((wt - 2.113_588_568_175).abs() < 1e-6);
        for k in 1..100 {
            let l = l0 * k as f64 / 100.0;
            let wt = truncated_collar_width_raw(l, &p).unwrap();
            assert!((l * (wt + p.rho).cosh() - 2.0 * p.delta3.sinh()).abs() < 1e-12);
        }
        assert!(truncated_collar_width(0.6, &p).is_err());
        // above l0 the raw value is negative and the clamp applies
        assert!(truncated_collar_width_raw(short_threshold(), &p).unwrap() < 0.0);
        assert_eq!(truncated_collar_width(short_threshold(), &p).unwrap(), 0.0);
    }

    #[test]
    fn main_bound_values() {
        let b = main_bound(Signature::new(2, 0).unwrap());
        assert!((b - 148.354_195).abs() < 1e-5);
        let area4 = 32.0 * (4.0 * area(Signature::new(2, 0).unwrap())).ln() + 23.0;
        assert!((b - area4).abs() < 1e-12);
        assert!((main_bound(Signature::new(0, 3).unwrap()) - 126.173_485_681).abs() < 1e-8);
    }

    #[test]
    fn rough_bound() {
        let sig = Signature::new(1, 1).unwrap();
        assert!((rough_cusped_bound(sig, 1.0).unwrap() - 11.706_670_161_817).abs() < 1e-10);
        assert!(rough_cusped_bound(sig, 2.0).unwrap() < rough_cusped_bound(sig, 1.0).unwrap());
        assert!(rough_cusped_bound(Signature::new(2, 0).unwrap(), 1.0).is_err());
        assert!(rough_cusped_bound(sig, 40.0).is_err());
    }

    #[test]
    fn spike_cases() {
        let p = ShearFreeParams::default();
        assert_eq!(spike_constant(Regime::Long, Regime::Long, &p).unwrap(), 0.0);
        let cc = spike_constant(Regime::Cusp, Regime::Cusp, &p).unwrap();
        assert!((cc - 3.109).abs() < 1e-3);
        let s = Regime::Short { length: 0.2 };
        let a = spike_constant(s, Regime::Intermediate, &p).unwrap();
        let b = spike_constant(Regime::Intermediate, s, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regimes_close_on_the_left() {
        assert!(matches!(Regime::of_curve(short_threshold()), Regime::Short { .. }));
        assert_eq!(Regime::of_curve(intermediate_threshold()), Regime::Intermediate);
        assert_eq!(Regime::of_curve(2.0), Regime::Long);
    }

    #[test]
    fn bavard_below_log_area() {
        for c in 1..=100u32 {
            for g in 0..=(c + 2) / 2 {
                let n = c as i64 + 2 - 2 * g as i64;
                if n < 0 {
                    continue;
                }
                let sig = Signature::new(g, n as u32).unwrap();
                assert!(bavard_bound(sig) <= (4.0 * area(sig)).ln());
            }
        }
    }
}
