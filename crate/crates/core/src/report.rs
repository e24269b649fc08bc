//! Seeded sampling campaigns and the JSON/CSV reports built from them.
//!
//! Sample `i` of a campaign draws from the ChaCha8 stream `i` of the
//! campaign seed (see [`sample_rng`]), so records do not depend on how
//! samples are scheduled. Records are assembled in sample order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{
    constants_audit, main_bound, shear_free_params, topology_constants, AuditReport, ShearFreeParams, Signature,
    TopologyConstants,
};
use crate::cusped::{cusped_start, flip, flip_path, minimax_flip_search, path_length};
use crate::decomposition::{certify_short, seam_decomposition};
use crate::error::{Error, Result};
use crate::hyperbolic::{Isometry, IsometryKind};
use crate::surface::{Generator, HolonomyRep, default_length_max, sample_fn_with, sample_rng, FnEntry, Surface, TwistRange, DEFAULT_LENGTH_MIN};
use crate::triangulation::{default_orientations, develop, shear_point_free_audit, shear_vector, spiral};

pub const SCHEMA: &str = "shearlab-report/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_RELATION_TOL: f64 = 1e-6;
pub const CSV_HEADER: &str = "sample,gn,seed,certified,max_shear,bound,ratio,cusp_residual,spiral_residual,min_margin";

/// Relation tolerance, overridable through `SHEARLAB_TOL`.
pub fn relation_tolerance() -> Result<f64> {
    match std::env::var("SHEARLAB_TOL") {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && t.is_finite())
            .ok_or_else(|| Error::InvalidParameter(format!("SHEARLAB_TOL must be a positive number, got {v:?}"))),
        Err(_) => Ok(DEFAULT_RELATION_TOL),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub signature: Signature,
    pub seed: u64,
    pub count: u64,
    pub length_min: f64,
    pub length_max: f64,
    /// Twists are uniform in `[0, twist_max · ℓ)`.
    pub twist_max: f64,
    pub rho_prime: f64,
    pub format: Format,
    pub budget: usize,
    pub relation_tol: f64,
    /// SHA-256 of the surface file, for commands reading one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input_sha256: Option<String>,
    /// Where the report goes; does not enter the hash.
    #[serde(skip)]
    pub out: Option<String>,
}

impl RunConfig {
    pub fn new(command: &str, signature: Signature) -> RunConfig {
        RunConfig {
            command: command.into(),
            signature,
            seed: 0,
            count: 1,
            length_min: DEFAULT_LENGTH_MIN,
            length_max: default_length_max(signature),
            twist_max: 1.0,
            rho_prime: crate::constants::default_rho_prime(),
            format: Format::Json,
            budget: 200,
            relation_tol: DEFAULT_RELATION_TOL,
            input_sha256: None,
            out: None,
        }
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn params(&self) -> Result<ShearFreeParams> {
        shear_free_params(self.rho_prime)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pipeline output for one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub certified: bool,
    pub failed_checks: Vec<String>,
    pub shears: Vec<f64>,
    pub max_shear: f64,
    pub bound: f64,
    pub ratio: f64,
    pub cusp_residual: f64,
    pub spiral_residual: f64,
    pub relations_hold: bool,
    pub min_cusp_margin: Option<f64>,
    pub min_collar_margin: Option<f64>,
    pub min_margin: Option<f64>,
    pub audit_violations: Vec<String>,
    /// Shortest closed geodesic among words of length at most
    /// [`SYSTOLE_WORD_LENGTH`] in the holonomy generators. An estimate: it is
    /// only an upper bound for the systole.
    pub systole_estimate: Option<f64>,
}

impl Outcome {
    pub fn audit_passed(&self) -> bool {
        self.audit_violations.is_empty()
    }
}

/// Decomposition, certification, spiralling triangulation, shears and audit.
pub fn evaluate(surface: &Surface, params: &ShearFreeParams, relation_tol: f64) -> Result<Outcome> {
    let hd = seam_decomposition(surface)?;
    let cert = certify_short(&hd, surface)?;
    let st = spiral(&hd, &default_orientations(&hd))?;
    let dc = develop(surface, &st)?;
    let sv = shear_vector(&dc)?;
    let audit = shear_point_free_audit(&dc, params)?;
    let bound = main_bound(surface.signature);
    let max_shear = sv.max_abs();
    let (cusp_residual, spiral_residual) = (sv.cusp_residual(), sv.side_residual());
    Ok(Outcome {
        certified: cert.certified,
        failed_checks: cert
            .rows
            .iter()
            .filter(|r| !r.holds)
            .map(|r| format!("{}:{}", r.subject, r.check))
            .collect(),
        max_shear,
        bound,
        ratio: max_shear / bound,
        cusp_residual,
        spiral_residual,
        relations_hold: cusp_residual < relation_tol && spiral_residual < relation_tol,
        min_cusp_margin: audit.min_cusp_margin,
        min_collar_margin: audit.min_collar_margin,
        min_margin: audit.min_margin(),
        audit_violations: audit.violations,
        shears: sv.values,
        systole_estimate: systole_estimate(&surface.holonomy, SYSTOLE_WORD_LENGTH),
    })
}

pub const SYSTOLE_WORD_LENGTH: usize = 3;

/// Minimal translation length over reduced words of length at most
/// `max_len` in the generators; `None` if no such word is hyperbolic.
pub fn systole_estimate(h: &HolonomyRep, max_len: usize) -> Option<f64> {
    let letters: Vec<(Generator, i8, Isometry)> = h
        .generators()
        .into_iter()
        .filter_map(|g| h.generator(g).ok().map(|m| (g, m)))
        .flat_map(|(g, m)| [(g, 1, m), (g, -1, m.inverse())])
        .collect();
    let mut best: Option<f64> = None;
    let mut layer: Vec<(usize, Isometry)> = (0..letters.len()).map(|i| (i, letters[i].2)).collect();
    for len in 1..=max_len {
        for (_, m) in &layer {
            if m.classify() == IsometryKind::Hyperbolic {
                if let Ok(l) = m.translation_length() {
                    best = Some(best.map_or(l, |b: f64| b.min(l)));
                }
            }
        }
        if len == max_len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|&(last, m)| {
                let letters = &letters;
                (0..letters.len())
                    .filter(move |&j| !(letters[j].0 == letters[last].0 && letters[j].1 == -letters[last].1))
                    .map(move |j| (j, m.compose(&letters[j].2)))
            })
            .collect();
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub sample: u64,
    pub gn: String,
    pub seed: u64,
    #[serde(rename = "fn")]
    pub coordinates: Vec<FnEntry>,
    #[serde(flatten)]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub config_hash: String,
    pub version: String,
}

pub fn gn_label(sig: Signature) -> String {
    format!("g{}n{}", sig.g, sig.n)
}

fn record(cfg: &RunConfig, hash: &str, sample: u64, fnc: Vec<FnEntry>, outcome: Result<Outcome>) -> SurfaceRecord {
    let (outcome, error) = match outcome {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e.to_string())),
    };
    SurfaceRecord {
        sample,
        gn: gn_label(cfg.signature),
        seed: cfg.seed,
        coordinates: fnc,
        outcome,
        error,
        config_hash: hash.into(),
        version: VERSION.into(),
    }
}

pub fn sample_surface(cfg: &RunConfig, index: u64) -> Result<Surface> {
    let mut rng = sample_rng(cfg.seed, index);
    let twists = TwistRange::Fractional {
        min: 0.0,
        max: cfg.twist_max,
    };
    let (pg, fnc) = sample_fn_with(cfg.signature, &mut rng, (cfg.length_min, cfg.length_max), twists)?;
    Surface::new(cfg.signature, pg, fnc)
}

fn sample_record(cfg: &RunConfig, params: &ShearFreeParams, hash: &str, index: u64) -> SurfaceRecord {
    match sample_surface(cfg, index) {
        Ok(s) => record(cfg, hash, index, s.coordinates.entries.clone(), evaluate(&s, params, cfg.relation_tol)),
        Err(e) => record(cfg, hash, index, Vec::new(), Err(e)),
    }
}

pub fn run_samples_sequential(cfg: &RunConfig) -> Result<Vec<SurfaceRecord>> {
    let params = cfg.params()?;
    let hash = cfg.hash();
    Ok((0..cfg.count).map(|i| sample_record(cfg, &params, &hash, i)).collect())
}

#[cfg(feature = "parallel")]
pub fn run_samples_parallel(cfg: &RunConfig) -> Result<Vec<SurfaceRecord>> {
    let params = cfg.params()?;
    let hash = cfg.hash();
    Ok((0..cfg.count)
        .into_par_iter()
        .map(|i| sample_record(cfg, &params, &hash, i))
        .collect())
}

pub fn run_samples(cfg: &RunConfig) -> Result<Vec<SurfaceRecord>> {
    #[cfg(feature = "parallel")]
    return run_samples_parallel(cfg);
    #[cfg(not(feature = "parallel"))]
    return run_samples_sequential(cfg);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: u64,
    pub certified: u64,
    pub uncertified: u64,
    pub failed: u64,
    pub bound: f64,
    pub max_ratio_certified: Option<f64>,
    pub max_ratio_uncertified: Option<f64>,
    /// Certified samples with `max |shear| ≥ bound`.
    pub bound_violations: Vec<u64>,
    pub audit_failures: Vec<u64>,
    pub relation_failures: Vec<u64>,
    pub max_cusp_residual: f64,
    pub max_spiral_residual: f64,
    pub min_margin: Option<f64>,
    pub config_hash: String,
}

fn fold_max(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.max(x)))
}

pub fn summarize(cfg: &RunConfig, records: &[SurfaceRecord]) -> Summary {
    let mut s = Summary {
        samples: records.len() as u64,
        certified: 0,
        uncertified: 0,
        failed: 0,
        bound: main_bound(cfg.signature),
        max_ratio_certified: None,
        max_ratio_uncertified: None,
        bound_violations: Vec::new(),
        audit_failures: Vec::new(),
        relation_failures: Vec::new(),
        max_cusp_residual: 0.0,
        max_spiral_residual: 0.0,
        min_margin: None,
        config_hash: cfg.hash(),
    };
    for r in records {
        let Some(o) = &r.outcome else {
            s.failed += 1;
            continue;
        };
        if o.certified {
            s.certified += 1;
            s.max_ratio_certified = fold_max(s.max_ratio_certified, o.ratio);
            if !(o.ratio < 1.0) {
                s.bound_violations.push(r.sample);
            }
        } else {
            s.uncertified += 1;
            s.max_ratio_uncertified = fold_max(s.max_ratio_uncertified, o.ratio);
        }
        if !o.audit_passed() {
            s.audit_failures.push(r.sample);
        }
        if !o.relations_hold {
            s.relation_failures.push(r.sample);
        }
        s.max_cusp_residual = s.max_cusp_residual.max(o.cusp_residual);
        s.max_spiral_residual = s.max_spiral_residual.max(o.spiral_residual);
        if let Some(m) = o.min_margin {
            s.min_margin = Some(s.min_margin.map_or(m, |x: f64| x.min(m)));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R, S> {
    pub schema: String,
    pub config: RunConfig,
    pub records: Vec<R>,
    pub summary: S,
}

pub type SampleReport = Report<SurfaceRecord, Summary>;

pub fn sample_report(cfg: &RunConfig) -> Result<SampleReport> {
    let records = run_samples(cfg)?;
    let summary = summarize(cfg, &records);
    Ok(Report {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Report for a single surface read from a file.
pub fn compute_report(cfg: &RunConfig, surface: &Surface) -> Result<SampleReport> {
    let params = cfg.params()?;
    let hash = cfg.hash();
    let outcome = evaluate(surface, &params, cfg.relation_tol)?;
    let records = vec![record(cfg, &hash, 0, surface.coordinates.entries.clone(), Ok(outcome))];
    let summary = summarize(cfg, &records);
    Ok(Report {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Shortest round-trip form, as in the JSON reports.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("floats serialize")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn render(report: &SampleReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(render_json(report)),
        Format::Csv => render_csv(&report.records),
    }
}

pub fn render_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// Columns as in [`CSV_HEADER`]; numeric cells are empty for failed samples.
pub fn render_csv(records: &[SurfaceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for r in records {
        let o = r.outcome.as_ref();
        let f = |g: fn(&Outcome) -> f64| o.map(|o| num(g(o))).unwrap_or_default();
        w.write_record([
            r.sample.to_string(),
            r.gn.clone(),
            r.seed.to_string(),
            o.map(|o| o.certified.to_string()).unwrap_or_default(),
            f(|o| o.max_shear),
            f(|o| o.bound),
            f(|o| o.ratio),
            f(|o| o.cusp_residual),
            f(|o| o.spiral_residual),
            opt(o.and_then(|o| o.min_margin)),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub schema: String,
    pub config: RunConfig,
    #[serde(flatten)]
    pub constants: TopologyConstants,
    pub audit: AuditReport,
    pub config_hash: String,
    pub version: String,
}

pub fn constants_report(cfg: &RunConfig) -> Result<ConstantsReport> {
    let params = cfg.params()?;
    Ok(ConstantsReport {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        constants: topology_constants(cfg.signature, &params),
        audit: constants_audit(&params),
        config_hash: cfg.hash(),
        version: VERSION.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRecord {
    pub gn: String,
    pub start_max: f64,
    pub best_max: f64,
    pub bound: f64,
    pub flips: Vec<usize>,
    pub shears: Vec<f64>,
    /// Largest cusp sum of the start before completing it.
    pub start_cusp_residual: f64,
    /// Pants-curve lengths read off the best triangulation.
    pub curve_lengths: Vec<f64>,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub start_max: f64,
    pub best_max: f64,
    pub flip_count: usize,
}

pub type OptimizeReport = Report<OptimizeRecord, OptimizeSummary>;

pub fn optimize_report(cfg: &RunConfig, surface: &Surface) -> Result<OptimizeReport> {
    let start = cusped_start(surface)?;
    let found = minimax_flip_search(&start.triangulation, &start.shears, cfg.budget, cfg.seed)?;
    let (mut tri, mut shears) = (start.triangulation.clone(), start.shears.clone());
    let mut paths = start.curve_paths.clone();
    for &e in &found.flips {
        paths = paths.iter().map(|p| flip_path(&tri, e, p)).collect::<Result<_>>()?;
        (tri, shears, _) = flip(&tri, &shears, e)?;
    }
    debug_assert_eq!(tri, found.triangulation);
    debug_assert_eq!(shears, found.shears);
    let curve_lengths = paths
        .iter()
        .map(|p| path_length(&found.triangulation, &found.shears, p))
        .collect::<Result<_>>()?;
    let summary = OptimizeSummary {
        start_max: found.start_max,
        best_max: found.best_max,
        flip_count: found.flips.len(),
    };
    Ok(Report {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        records: vec![OptimizeRecord {
            gn: gn_label(cfg.signature),
            start_max: found.start_max,
            best_max: found.best_max,
            bound: main_bound(cfg.signature),
            flips: found.flips,
            shears: found.shears,
            start_cusp_residual: start.raw_cusp_residual,
            curve_lengths,
            config_hash: cfg.hash(),
            version: VERSION.into(),
        }],
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(g: u32, n: u32, count: u64) -> RunConfig {
        let mut c = RunConfig::new("sample", Signature::new(g, n).unwrap());
        c.count = count;
        c.seed = 42;
        c
    }

    #[test]
    fn systole_estimate_is_at_most_the_pants_lengths() {
        let c = cfg(2, 1, 1);
        let s = sample_surface(&c, 0).unwrap();
        let est = systole_estimate(&s.holonomy, SYSTOLE_WORD_LENGTH).unwrap();
        let shortest = s.coordinates.entries.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
        assert!(est > 0.0 && est <= shortest + 1e-9);
    }

    #[test]
    fn hash_ignores_the_output_path() {
        let mut a = cfg(1, 1, 3);
        let h = a.hash();
        a.out = Some("x.json".into());
        assert_eq!(a.hash(), h);
        a.seed += 1;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn records_do_not_depend_on_scheduling() {
        let c = cfg(1, 1, 6);
        let a = run_samples_sequential(&c).unwrap();
        let b = run_samples(&c).unwrap();
        assert_eq!(render_json(&a), render_json(&b));
    }

    #[test]
    fn csv_has_the_fixed_header() {
        let c = cfg(0, 4, 2);
        let r = sample_report(&c).unwrap();
        let csv = render(&r, Format::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn thrice_punctured_sphere_report() {
        let c = cfg(0, 3, 1);
        let r = sample_report(&c).unwrap();
        let o = r.records[0].outcome.as_ref().unwrap();
        assert!(o.certified && o.max_shear < 1e-9 && o.audit_passed());
        assert_eq!(r.summary.certified, 1);
    }

    #[test]
    fn json_report_has_the_top_level_keys() {
        let r = sample_report(&cfg(1, 1, 1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&render_json(&r)).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["config", "records", "schema", "summary"]);
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["records"][0]["version"], VERSION);
    }
}
