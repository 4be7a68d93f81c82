use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wkgs_core::balance::{fit_decay, verify_balance};
use wkgs_core::config::{sha256_hex, ConvergenceConfig, RunConfig};
use wkgs_core::energies::CsvMeta;
use wkgs_core::identity_lab::{run_suite, Precision};
use wkgs_core::multipliers::MultiplierKind;
use wkgs_core::pipeline::{convergence, run, series_from_csv, stamped_json, write_convergence, write_outputs, SeriesSelector};
use wkgs_core::Error;

const PASS: u8 = 0;
const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "wkgs", version, about = "Hyperboloidal energy lab for wave/Klein-Gordon systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Randomized pointwise check of the multiplier identities.
    CheckIdentities {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to 1e-10 (f64) or 1e-25 (extended).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Prec::F64)]
        precision: Prec,
    },
    /// Evolves a run config and writes its energies, trackers and manifest.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integral balance of one multiplier between two hyperboloids.
    VerifyBalance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_multiplier)]
        multiplier: MultiplierKind,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        s0: f64,
        #[arg(long)]
        s1: f64,
    },
    /// Power-law fit of one CSV series; COL is `NAME[/field][@a]`.
    FitDecay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long)]
        smin: f64,
        #[arg(long)]
        smax: f64,
    },
    /// Runs a refinement study and writes the observed-order table.
    Convergence {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Prec {
    F64,
    Extended,
}

fn parse_multiplier(s: &str) -> Result<MultiplierKind, String> {
    MultiplierKind::parse(s).ok_or_else(|| format!("unknown multiplier {s:?} (expected T, Ka, Ya or Kconf)"))
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::InvalidData(_)
            | Error::Format(_)
            | Error::Version { .. }
            | Error::Truncated
            | Error::Cfl { .. }
            | Error::ExponentOutOfRange { .. } => USAGE,
            _ => NUMERICAL,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure { code: USAGE, msg: format!("{}: {e}", path.display()) })
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("WKGS_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure { code: USAGE, msg: format!("WKGS_THREADS must be a positive integer, got {v:?}") }),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: USAGE, msg: e.to_string() })
}

#[derive(Serialize)]
struct SuiteArgs {
    samples: usize,
    seed: u64,
    tol: f64,
    precision: Precision,
}

#[derive(Serialize)]
struct Written {
    files: Vec<String>,
}

fn dispatch(cmd: Cmd) -> Result<u8, Failure> {
    match cmd {
        Cmd::CheckIdentities { samples, seed, tol, precision } => {
            let precision = match precision {
                Prec::F64 => Precision::F64,
                Prec::Extended => Precision::Extended,
            };
            let tol = tol.unwrap_or(precision.default_tolerance());
            if !(tol >= 0.0) {
                return Err(Failure { code: USAGE, msg: format!("--tol must be non-negative, got {tol}") });
            }
            if samples == 0 {
                eprintln!("warning: --samples 0 makes every check vacuously pass");
            }
            let args = SuiteArgs { samples, seed, tol, precision };
            let hash = sha256_hex(serde_json::to_string(&args).expect("args serialize").as_bytes());
            let reports = run_suite(samples, seed, tol, precision);
            for r in &reports {
                println!("{}", stamped_json(r, &hash));
            }
            Ok(if reports.iter().all(|r| r.passed()) { PASS } else { CHECK_FAILED })
        }
        Cmd::Evolve { config } => {
            let cfg = RunConfig::from_json(&read(&config)?).map_err(with_path(&config))?;
            let out = run(&cfg)?;
            let files = write_outputs(&cfg, &out, Path::new(&cfg.outputs.dir))?;
            let files = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", stamped_json(&Written { files }, &cfg.sha256()));
            Ok(PASS)
        }
        Cmd::VerifyBalance { config, multiplier, a, s0, s1 } => {
            let cfg = RunConfig::from_json(&read(&config)?).map_err(with_path(&config))?;
            cfg.validate()?;
            let setup = cfg.setup();
            let field = setup.model.field_names()[0];
            let report = verify_balance(&setup, field, multiplier, a, s0, s1)?;
            println!("{}", stamped_json(&report, &cfg.sha256()));
            Ok(PASS)
        }
        Cmd::FitDecay { input, column, smin, smax } => {
            let text = read(&input)?;
            let sel = SeriesSelector::parse(&column)?;
            let pts = series_from_csv(&text, &sel, smin, smax).map_err(with_path(&input))?;
            let fit = fit_decay(&column, &pts)?;
            let (meta, _) = wkgs_core::energies::read_meta(&text);
            let hash = meta.map_or_else(|| sha256_hex(text.as_bytes()), |m: CsvMeta| m.config_sha256);
            println!("{}", stamped_json(&fit, &hash));
            Ok(PASS)
        }
        Cmd::Convergence { config } => {
            let cfg = ConvergenceConfig::from_json(&read(&config)?).map_err(with_path(&config))?;
            let rows = convergence(&cfg)?;
            let hash = cfg.sha256();
            let dir = Path::new(&cfg.run.outputs.dir);
            std::fs::create_dir_all(dir)?;
            let path = dir.join(&cfg.table);
            let meta = CsvMeta { artifact: wkgs_core::config::ARTIFACT_VERSION.into(), config_sha256: hash.clone() };
            write_convergence(std::io::BufWriter::new(std::fs::File::create(&path)?), &meta, &rows)?;
            for r in &rows {
                println!("{}", stamped_json(r, &hash));
            }
            Ok(PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match init_threads().and_then(|()| dispatch(cli.cmd)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
