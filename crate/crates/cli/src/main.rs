//! `shear`: constants, single-surface pipeline, seeded sampling and flip search.
//!
//! Exit codes: 0 success, 1 bad input, 2 constants audit failed, 3 geometry
//! invariant failed, 4 surface not flip-searchable, 5 a certified sample
//! exceeded the bound.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shearlab::constants::{default_rho_prime, Signature};
use shearlab::report::{
    compute_report, constants_report, optimize_report, relation_tolerance, render, render_json, sample_report,
    sha256_hex, Format, RunConfig,
};
use shearlab::surface::Surface;
use shearlab::Error;

#[derive(Parser, Debug)]
#[command(name = "shear", version, about = "Shear parameters of spiralling ideal triangulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print every constant for a signature together with the constants audit.
    Constants {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full pipeline on a surface file.
    Compute {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run seeded samples through the full pipeline.
    Sample {
        #[command(flatten)]
        sig: SigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long)]
        length_min: Option<f64>,
        /// Defaults to 2 log(4 area).
        #[arg(long)]
        length_max: Option<f64>,
        /// Twists are uniform in [0, twist_max · length).
        #[arg(long, default_value_t = 1.0)]
        twist_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Flip search for a small maximal shear (genus 0 only).
    Optimize {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct SigArgs {
    #[arg(long)]
    g: u32,
    #[arg(long)]
    n: u32,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    rho_prime: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Input and configuration problems exit 1; anything else is geometric.
fn classify(e: Error) -> Failure {
    let code = match e {
        Error::InvalidSignature { .. }
        | Error::InvalidGraph(_)
        | Error::InvalidCoordinates(_)
        | Error::InvalidParameter(_)
        | Error::Parse(_) => 1,
        Error::NotFlipSearchable => 4,
        Error::Geometry(_) | Error::Invariant(_) => 3,
    };
    fail(code, e.to_string())
}

fn config(command: &str, sig: Signature, common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::new(command, sig);
    cfg.rho_prime = common.rho_prime.unwrap_or_else(default_rho_prime);
    cfg.format = common.format.into();
    cfg.relation_tol = relation_tolerance().map_err(classify)?;
    cfg.out = common.out.as_ref().map(|p| p.display().to_string());
    Ok(cfg)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| fail(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_surface(file: &PathBuf) -> Result<(Surface, String), Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| fail(1, format!("cannot read {}: {e}", file.display())))?;
    let surface = Surface::parse(&text).map_err(|e| fail(1, e.to_string()))?;
    Ok((surface, sha256_hex(text.as_bytes())))
}

fn json_only(common: &Common, what: &str) -> Result<(), Failure> {
    match common.format {
        OutFormat::Json => Ok(()),
        OutFormat::Csv => Err(fail(1, format!("{what} reports are JSON only"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Constants { sig, common } => {
            json_only(&common, "constants")?;
            let sig = Signature::new(sig.g, sig.n).map_err(classify)?;
            let cfg = config("constants", sig, &common)?;
            let report = constants_report(&cfg).map_err(classify)?;
            emit(&render_json(&report), &common.out)?;
            if !report.audit.passed {
                let failed: Vec<&str> = report.audit.rows.iter().filter(|r| !r.holds).map(|r| r.name.as_str()).collect();
                return Err(fail(2, format!("constants audit failed: {}", failed.join(", "))));
            }
            Ok(())
        }
        Command::Compute { file, common } => {
            let (surface, digest) = read_surface(&file)?;
            let mut cfg = config("compute", surface.signature, &common)?;
            cfg.input_sha256 = Some(digest);
            let report = compute_report(&cfg, &surface).map_err(classify)?;
            emit(&render(&report, cfg.format).map_err(classify)?, &common.out)?;
            let o = report.records[0].outcome.as_ref().expect("compute records carry an outcome");
            if !o.audit_passed() {
                return Err(fail(3, format!("shear-point audit failed: {}", o.audit_violations.join("; "))));
            }
            if !o.relations_hold {
                return Err(fail(
                    3,
                    format!(
                        "shear relations off: cusp residual {:e}, side residual {:e}",
                        o.cusp_residual, o.spiral_residual
                    ),
                ));
            }
            Ok(())
        }
        Command::Sample {
            sig,
            seed,
            count,
            length_min,
            length_max,
            twist_max,
            common,
        } => {
            let sig = Signature::new(sig.g, sig.n).map_err(classify)?;
            let mut cfg = config("sample", sig, &common)?;
            cfg.seed = seed;
            cfg.count = count;
            cfg.length_min = length_min.unwrap_or(cfg.length_min);
            cfg.length_max = length_max.unwrap_or(cfg.length_max);
            cfg.twist_max = twist_max;
            let report = sample_report(&cfg).map_err(classify)?;
            emit(&render(&report, cfg.format).map_err(classify)?, &common.out)?;
            let s = &report.summary;
            eprintln!(
                "{} samples: {} certified, {} uncertified, {} failed; max ratio over certified {}",
                s.samples,
                s.certified,
                s.uncertified,
                s.failed,
                s.max_ratio_certified.map_or("n/a".to_string(), |r| format!("{r:.4}"))
            );
            if !s.bound_violations.is_empty() {
                return Err(fail(5, format!("certified samples above the bound: {:?}", s.bound_violations)));
            }
            Ok(())
        }
        Command::Optimize {
            file,
            budget,
            seed,
            common,
        } => {
            json_only(&common, "optimize")?;
            let (surface, digest) = read_surface(&file)?;
            let mut cfg = config("optimize", surface.signature, &common)?;
            cfg.input_sha256 = Some(digest);
            cfg.budget = budget;
            cfg.seed = seed;
            cfg.count = 1;
            let report = optimize_report(&cfg, &surface).map_err(classify)?;
            emit(&render_json(&report), &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(cli);
    // timings stay out of the report so that reports are reproducible
    eprintln!("elapsed {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
