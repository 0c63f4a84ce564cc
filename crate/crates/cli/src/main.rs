use std::f64::consts::PI;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wagner_core::catalog::load_system;
use wagner_core::expr;
use wagner_core::mechanics::{integrate_trajectory, ConnectionPath, State};
use wagner_core::reference::Status;
use wagner_core::report::{self, analysis_report, checks_at, sample_analysis, scan_report, verify_report};
use wagner_core::system::SystemDef;
use wagner_core::wagner::{flatness_scan, WagnerAnalysis, FLAT_TOL};
use wagner_core::Error;

/// Flags, nonholonomic connections and Wagner curvature of constrained
/// mechanical systems.
#[derive(Parser)]
#[command(name = "wagner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline at one point: flag, connection, Schouten, level data, Wagner.
    Analyze {
        /// Built-in id (disc, ball-sphere, heisenberg) or path to a system file.
        system: String,
        /// Coordinates as name=value pairs; missing ones are drawn at random.
        #[arg(long, value_delimiter = ',')]
        at: Vec<String>,
        /// Parameter override name=value (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Jet order (defaults to degree + 2).
        #[arg(long)]
        order: Option<usize>,
    },
    /// Reference-value and property checks at random points and parameter draws.
    Verify {
        system: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Flatness of the Wagner tensor across a parameter range.
    Scan {
        system: String,
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        steps: usize,
        /// Random points per parameter value.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrate a constrained geodesic; one JSON object per line.
    Geodesic {
        system: String,
        /// Initial coordinates, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q0: Vec<String>,
        /// Initial frame velocity components, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u0: Vec<String>,
        #[arg(long)]
        t: String,
        #[arg(long)]
        dt: String,
        /// Emit a sample every this many steps.
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t = Path::Intrinsic)]
        connection: Path,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Path {
    Intrinsic,
    Projected,
}

/// A number, or a constant expression such as `pi/3`.
fn number(text: &str) -> Result<f64, Error> {
    let e = expr::parse(text, &[], &["pi".to_string()])?;
    let v = e.eval(&[], &[PI]);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Usage(format!("'{text}' is not a finite number")))
    }
}

fn numbers(items: &[String]) -> Result<Vec<f64>, Error> {
    items.iter().map(|s| number(s.trim())).collect()
}

fn assignment(text: &str) -> Result<(&str, f64), Error> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("expected name=value, got '{text}'")))?;
    Ok((name.trim(), number(value.trim())?))
}

fn system_with(id: &str, params: &[String]) -> Result<SystemDef, Error> {
    let mut sys = load_system(id)?;
    for p in params {
        let (name, value) = assignment(p)?;
        sys.set_param(name, value)?;
    }
    Ok(sys)
}

fn emit(doc: &serde_json::Value) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", report::to_text(doc))?;
    Ok(())
}

fn analyze(system: &str, at: &[String], params: &[String], seed: u64, order: Option<usize>) -> Result<u8, Error> {
    let sys = system_with(system, params)?;
    let mut fixed = vec![None; sys.dim()];
    for a in at {
        let (name, value) = assignment(a)?;
        let i = sys
            .coord_index(name)
            .ok_or_else(|| Error::Usage(format!("system '{}' has no coordinate '{name}'", sys.id)))?;
        fixed[i] = Some(value);
    }
    let (analysis, drawn) = if fixed.iter().all(Option::is_some) {
        let point: Vec<f64> = fixed.into_iter().flatten().collect();
        (WagnerAnalysis::run(&sys, &point, order)?, false)
    } else if fixed.iter().all(Option::is_none) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (sample_analysis(&sys, &mut rng, order)?, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = sys.sample_point(&mut rng)?;
        for (x, f) in point.iter_mut().zip(&fixed) {
            if let Some(v) = f {
                *x = *v;
            }
        }
        (WagnerAnalysis::run(&sys, &point, order)?, true)
    };
    let doc = analysis_report(&sys, &analysis, drawn.then_some(seed))?;
    emit(&doc)?;
    let failed = checks_at(&sys, &analysis)?.iter().any(|c| c.status == Status::Fail);
    Ok(u8::from(failed))
}

fn verify(system: &str, seed: u64) -> Result<u8, Error> {
    let sys = load_system(system)?;
    if wagner_core::reference::reference_table(&sys).is_none() {
        return Err(Error::Usage(format!("no reference values for '{}'; verify needs a built-in system", sys.id)));
    }
    let summary = report::run_verify(&sys, seed)?;
    emit(&verify_report(&summary))?;
    for c in summary.checks.iter().filter(|c| c.status() != Status::Pass) {
        eprintln!("{}: {} ({} of {} samples)", c.status().as_str(), c.name, c.failed + c.flagged, c.samples);
    }
    Ok(u8::from(!summary.passed()))
}

fn scan(system: &str, param: &str, from: f64, to: f64, steps: usize, samples: usize, seed: u64) -> Result<u8, Error> {
    let sys = load_system(system)?;
    if steps == 0 || !(from <= to) {
        return Err(Error::Usage("empty parameter range".into()));
    }
    let values: Vec<f64> = if steps == 1 {
        vec![from]
    } else {
        (0..steps).map(|i| from + (to - from) * i as f64 / (steps - 1) as f64).collect()
    };
    let entries = flatness_scan(&sys, param, &values, samples, seed, FLAT_TOL)?;
    emit(&scan_report(&sys, param, &entries, samples, seed, FLAT_TOL))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn geodesic(
    system: &str,
    q0: &[String],
    u0: &[String],
    t: f64,
    dt: f64,
    every: usize,
    params: &[String],
    path: Path,
) -> Result<u8, Error> {
    let sys = system_with(system, params)?;
    let q = numbers(q0)?;
    sys.check_point(&q)?;
    let state = State { q, u: numbers(u0)? };
    let path = match path {
        Path::Intrinsic => ConnectionPath::Intrinsic,
        Path::Projected => ConnectionPath::Projected,
    };
    let traj = integrate_trajectory(&sys, &state, t, dt, every, path)?;
    let mut out = io::stdout().lock();
    for s in &traj.samples {
        writeln!(out, "{}", report::sample_json(s))?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze { system, at, params, seed, order } => analyze(&system, &at, &params, seed, order),
        Command::Verify { system, seed } => verify(&system, seed),
        Command::Scan { system, param, from, to, steps, samples, seed } => {
            scan(&system, &param, number(&from)?, number(&to)?, steps, samples, seed)
        }
        Command::Geodesic { system, q0, u0, t, dt, every, params, connection } => {
            geodesic(&system, &q0, &u0, number(&t)?, number(&dt)?, every, &params, connection)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
