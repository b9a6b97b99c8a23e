use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvsep_core::criteria::{Criterion, ScanOptions};
use cvsep_core::experiments::{
    cat_surface, eta_scan, geometric_range, linear_range, random_table, run_state_test, write_cat_csv, write_eta_csv,
    write_table_csv, Metadata, StateSpec,
};
use cvsep_core::{Error, GridSpec};

const EXIT_CLEAN: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_ENTANGLED: u8 = 3;

const UNITS: &str = "Units: angles in radians, entropies in nats, hbar = 1 (vacuum quadrature variance 1/2).\n\
Exit codes: 0 no detection, 3 entanglement certified, 1 usage error,\n\
2 numerical failure (including state-test runs with failed scan points and no detection).";

/// Entropic and second-order separability tests for two-mode
/// continuous-variable states.
#[derive(Parser, Debug)]
#[command(name = "cvsep", version, after_help = UNITS)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Angle spacing of the settings scan, e.g. 0.785398 or pi/4
    #[arg(long, global = true, default_value = "pi/4", value_parser = parse_angle)]
    theta_step: f64,
    /// Comma-separated local squeezing weights for the entropic tests
    #[arg(long, global = true, default_value = "1", value_delimiter = ',')]
    a_values: Vec<f64>,
    /// Grid points per axis
    #[arg(long, global = true, default_value_t = 1024)]
    grid_points: usize,
    /// Half-width of the quadrature window, or `auto` to size it per state
    #[arg(long, global = true, default_value = "auto", value_parser = parse_span)]
    grid_span: Span,
    /// Seed for random-state batches
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for batch commands
    #[arg(long, global = true, env = "CVSEP_JOBS")]
    jobs: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
struct Span(Option<f64>);

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan one state and write a JSON run record
    StateTest {
        /// State, e.g. noon:N=3, phi, eta:sp=1,sm=0.5, cat:alpha=1,p=0, tmsv:r=0.5, random:D=2,seed=7
        spec: String,
        /// Comma-separated tests (strong, weak, mgvt, simon); all applicable by default
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<String>>,
    },
    /// Tabulate every test for the eta state over width ratios sigma-/sigma+
    EtaScan {
        #[arg(long, default_value_t = 0.25)]
        ratio_min: f64,
        #[arg(long, default_value_t = 4.0)]
        ratio_max: f64,
        /// Number of geometrically spaced ratios
        #[arg(long, default_value_t = 41)]
        steps: usize,
        /// Explicit comma-separated ratios, overriding the range
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
    },
    /// Detection percentages for Haar-random states
    RandomTable {
        /// Comma-separated LEVELS:COUNT pairs; LEVELS counts Fock levels per mode
        #[arg(long, default_value = "2:6000,3:1600,4:800,5:720,7:120", value_delimiter = ',', value_parser = parse_row)]
        rows: Vec<(usize, usize)>,
    },
    /// Weak-test gap of the dephased cat state over (alpha, p)
    CatSurface {
        #[arg(long, default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 21)]
        alpha_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        p_min: f64,
        #[arg(long, default_value_t = 1.0)]
        p_max: f64,
        #[arg(long, default_value_t = 11)]
        p_steps: usize,
    },
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let v = if let Some(rest) = t.strip_prefix("pi") {
        match rest.strip_prefix('/') {
            Some(d) => PI / d.parse::<f64>().map_err(|e| e.to_string())?,
            None if rest.is_empty() => PI,
            None => return Err(format!("cannot read angle `{s}`")),
        }
    } else {
        t.parse::<f64>().map_err(|e| e.to_string())?
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("angle step must be positive, got `{s}`"))
    }
}

fn parse_span(s: &str) -> Result<Span, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Span(None));
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Span(Some(v))),
        _ => Err(format!("grid span must be `auto` or a positive number, got `{s}`")),
    }
}

fn parse_row(s: &str) -> Result<(usize, usize), String> {
    let (d, n) = s.split_once(':').ok_or_else(|| format!("expected LEVELS:COUNT, got `{s}`"))?;
    let d = d.trim().parse::<usize>().map_err(|e| format!("levels in `{s}`: {e}"))?;
    let n = n.trim().parse::<usize>().map_err(|e| format!("count in `{s}`: {e}"))?;
    if d < 2 || n < 1 {
        return Err(format!("need at least 2 levels and 1 state, got `{s}`"));
    }
    Ok((d, n))
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    let grid = GridSpec { points: g.grid_points, half_width: g.grid_span.0 };
    match cli.command {
        Command::StateTest { spec, criteria } => {
            let spec: StateSpec = spec.parse()?;
            let criteria = match criteria {
                Some(list) => list.iter().map(|c| c.parse()).collect::<Result<Vec<Criterion>, _>>()?,
                None if matches!(spec, StateSpec::Cat { .. }) => {
                    vec![Criterion::Weak, Criterion::Mgvt, Criterion::Simon]
                }
                None => Criterion::ALL.to_vec(),
            };
            let options = ScanOptions { criteria, theta_step: g.theta_step, a_values: g.a_values.clone() };
            let record = run_state_test(&spec, &options, grid)?;
            let mut w = output(&g.out)?;
            writeln!(w, "{}", record.to_json()?)?;
            w.flush()?;
            for f in &record.failures {
                log::warn!("{} failed at {:?}: {}", f.criterion, f.settings, f.error);
            }
            Ok(if record.entangled {
                EXIT_ENTANGLED
            } else if record.failures.is_empty() {
                EXIT_CLEAN
            } else {
                EXIT_NUMERIC
            })
        }
        Command::EtaScan { ratio_min, ratio_max, steps, ratios } => {
            let ratios = match ratios {
                Some(r) => r,
                None => geometric_range(ratio_min, ratio_max, steps)?,
            };
            let rows = eta_scan(&ratios, grid, g.jobs)?;
            let meta = Metadata::new(None, grid, None);
            let mut w = output(&g.out)?;
            write_eta_csv(&rows, &meta, &mut w)?;
            w.flush()?;
            Ok(EXIT_CLEAN)
        }
        Command::RandomTable { rows } => {
            let table = random_table(&rows, g.seed, g.theta_step, grid, g.jobs)?;
            let meta = Metadata::new(Some(g.seed), grid, Some(g.theta_step));
            let mut w = output(&g.out)?;
            write_table_csv(&table, &meta, &mut w)?;
            w.flush()?;
            Ok(EXIT_CLEAN)
        }
        Command::CatSurface { alpha_min, alpha_max, alpha_steps, p_min, p_max, p_steps } => {
            let alphas = linear_range(alpha_min, alpha_max, alpha_steps)?;
            let ps = linear_range(p_min, p_max, p_steps)?;
            let points = cat_surface(&alphas, &ps, grid, g.jobs)?;
            let meta = Metadata::new(None, grid, None);
            let mut w = output(&g.out)?;
            write_cat_csv(&points, &meta, &mut w)?;
            w.flush()?;
            Ok(EXIT_CLEAN)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
