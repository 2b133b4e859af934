//! Command-line driver: parsing, subcommand dispatch and exit codes.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hypglue_core::equations::{ComplexValue, GluingSystem, ShapeAssignment};
use hypglue_core::holonomy::{holonomy_report, HolonomyError};
use hypglue_core::json;
use hypglue_core::solver::{max_volume, solve_all, SolutionRecord, SolutionRecordJson, SolverOptions};
use hypglue_core::spinning::{spin_report, SpinScenario};
use hypglue_core::triangulation::{barycentric_subdivide, parse_triangulation, validate, Triangulation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_SOLUTIONS: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

pub const CAVEAT: &str = "note: the solver samples the solution set from random starts; \
missing solutions, or an empty result, do not prove that none exist";

#[derive(Debug, Parser)]
#[command(name = "hypglue", version, about = "Hyperbolic gluing equations on closed triangulated 3-manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check closedness, orientation and vertex links (exit 1 if invalid)
    Validate(Common),
    /// Write the barycentric subdivision of a triangulation
    Subdivide(Common),
    /// Solve the gluing equations from random starts
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Holonomy representation of one solution
    Holonomy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Which solution: `max` (largest volume) or a record index
        #[arg(long, default_value = "max")]
        select: String,
        /// Read records from a previous `solve` output instead of solving
        #[arg(long)]
        solutions: Option<PathBuf>,
        /// Tetrahedron placed first in the development
        #[arg(long, default_value_t = 0)]
        base: usize,
    },
    /// Spinning convergence report for a scenario file (JSON and CSV)
    Spin {
        /// Scenario JSON: `base` and `directions` as four [x, y, z, t] vectors, optional `times`
        scenario: PathBuf,
        /// Output path for the JSON report; the CSV goes next to it with extension `.csv`
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Format written to standard output when no --output is given
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Triangulation JSON file
    pub input: PathBuf,
    /// Apply barycentric subdivision first
    #[arg(long)]
    pub subdivide: bool,
    /// Write the result here instead of standard output
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Seed for the random starts
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random starts
    #[arg(long, default_value_t = 512)]
    pub restarts: usize,
    /// Residual tolerance for accepting a solution
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Invalid(String),
    NoSolutions,
    Degenerate(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::NoSolutions => EXIT_NO_SOLUTIONS,
            Failure::Degenerate(_) => EXIT_DEGENERATE,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub caveat: String,
    pub seed: u64,
    pub restarts: usize,
    pub residual_tol: f64,
    pub max_volume_index: Option<usize>,
    pub records: Vec<SolveRecordIn>,
}

/// Record as read back from a `solve` output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecordIn {
    pub shapes: Vec<ComplexValue>,
    pub residual: f64,
    pub volume: f64,
}

#[derive(Serialize)]
struct SolveOutputRef<'a> {
    caveat: &'a str,
    seed: u64,
    restarts: usize,
    residual_tol: f64,
    max_volume_index: Option<usize>,
    records: Vec<SolutionRecordJson>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<Triangulation, Failure> {
    let tri = parse_triangulation(&read(&common.input)?).map_err(|e| Failure::Input(e.to_string()))?;
    if common.subdivide {
        barycentric_subdivide(&tri).map_err(|e| Failure::Invalid(e.to_string()))
    } else {
        Ok(tri)
    }
}

fn load_valid(common: &Common) -> Result<Triangulation, Failure> {
    let tri = load(common)?;
    let report = validate(&tri);
    if !report.is_valid() {
        return Err(Failure::Invalid(json::to_string(&report)));
    }
    Ok(tri)
}

fn emit(output: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => writeln!(stdout, "{text}").map_err(|e| Failure::Input(e.to_string())),
    }
}

fn solver_options(args: &SolverArgs) -> Result<SolverOptions, Failure> {
    let mut opts = SolverOptions { seed: args.seed, restarts: args.restarts, threads: args.threads, ..Default::default() };
    if let Some(tol) = args.tol {
        opts.residual_tol = tol;
    }
    if args.threads == Some(0) {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    opts.validate().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(opts)
}

fn solve(tri: &Triangulation, opts: &SolverOptions) -> Result<Vec<SolutionRecord>, Failure> {
    let system = GluingSystem::from_triangulation(tri).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(solve_all(&system, opts))
}

fn max_index(records: &[SolutionRecord]) -> Option<usize> {
    max_volume(records).and_then(|best| records.iter().position(|r| std::ptr::eq(r, best)))
}

fn cmd_solve(common: &Common, args: &SolverArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let tri = load_valid(common)?;
    let opts = solver_options(args)?;
    let records = solve(&tri, &opts)?;
    let _ = writeln!(stderr, "{CAVEAT}");
    let out = SolveOutputRef {
        caveat: CAVEAT,
        seed: opts.seed,
        restarts: opts.restarts,
        residual_tol: opts.residual_tol,
        max_volume_index: max_index(&records),
        records: records.iter().map(SolutionRecord::to_json).collect(),
    };
    emit(&common.output, &json::to_string(&out), stdout)?;
    if records.is_empty() {
        return Err(Failure::NoSolutions);
    }
    Ok(())
}

fn select(selector: &str, shapes: &[ShapeAssignment], volumes: &[f64]) -> Result<usize, Failure> {
    if selector == "max" {
        let top = volumes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // same near-tie rule as the solver's max_volume
        return (0..volumes.len())
            .filter(|&i| volumes[i] >= top - hypglue_core::solver::VOLUME_TIE_TOL)
            .min_by_key(|&i| {
                shapes[i].shapes().iter().map(|z| format!("{:.16e},{:.16e};", z.re, z.im)).collect::<String>()
            })
            .ok_or(Failure::NoSolutions);
    }
    let i: usize = selector.parse().map_err(|_| Failure::Input(format!("invalid selector '{selector}'")))?;
    if i >= shapes.len() {
        return Err(Failure::Input(format!("selector {i} out of range ({} records)", shapes.len())));
    }
    Ok(i)
}

fn cmd_holonomy(
    common: &Common,
    args: &SolverArgs,
    selector: &str,
    solutions: &Option<PathBuf>,
    base: usize,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    if selector != "max" && selector.parse::<usize>().is_err() {
        return Err(Failure::Input(format!("invalid selector '{selector}'")));
    }
    let tri = load_valid(common)?;
    if base >= tri.tet_count() {
        return Err(Failure::Input(format!("base tetrahedron {base} out of range")));
    }
    let (shapes, volumes): (Vec<ShapeAssignment>, Vec<f64>) = match solutions {
        Some(path) => {
            let out: SolveOutput = serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(e.to_string()))?;
            out.records.iter().map(|r| (ShapeAssignment::from_serial(&r.shapes), r.volume)).unzip()
        }
        None => {
            let records = solve(&tri, &solver_options(args)?)?;
            records.into_iter().map(|r| (r.shapes, r.volume)).unzip()
        }
    };
    if shapes.is_empty() {
        return Err(Failure::NoSolutions);
    }
    let i = select(selector, &shapes, &volumes)?;
    if shapes[i].len() != tri.tet_count() {
        return Err(Failure::Input("solution length does not match the triangulation".into()));
    }
    let report = holonomy_report(&tri, &shapes[i], base).map_err(|e| match e {
        HolonomyError::Degenerate { .. } | HolonomyError::CoincidentTriple => Failure::Degenerate(e.to_string()),
        e => Failure::Input(e.to_string()),
    })?;
    #[derive(Serialize)]
    struct Out<'a> {
        record: usize,
        volume: f64,
        holonomy: &'a hypglue_core::holonomy::HolonomyReport,
    }
    emit(&common.output, &json::to_string(&Out { record: i, volume: volumes[i], holonomy: &report }), stdout)
}

fn cmd_spin(scenario: &Path, output: &Option<PathBuf>, format: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let sc = SpinScenario::from_json(&read(scenario)?).map_err(|e| Failure::Input(e.to_string()))?;
    let report = spin_report(&sc).map_err(|e| Failure::Input(e.to_string()))?;
    let text = json::to_string(&report);
    match output {
        Some(p) => {
            emit(output, &text, stdout)?;
            emit(&Some(p.with_extension("csv")), &report.to_csv(), stdout)
        }
        None if format == "csv" => write!(stdout, "{}", report.to_csv()).map_err(|e| Failure::Input(e.to_string())),
        None => emit(&None, &text, stdout),
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate(common) => {
            let tri = load(common)?;
            let report = validate(&tri);
            emit(&common.output, &json::to_string(&report), stdout)?;
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Invalid("triangulation is not a closed oriented 3-manifold".into()))
            }
        }
        Command::Subdivide(common) => {
            let tri = load(common)?;
            let sub = barycentric_subdivide(&tri).map_err(|e| Failure::Invalid(e.to_string()))?;
            emit(&common.output, &sub.to_json(), stdout)
        }
        Command::Solve { common, solver } => cmd_solve(common, solver, stdout, stderr),
        Command::Holonomy { common, solver, select, solutions, base } => {
            cmd_holonomy(common, solver, select, solutions, *base, stdout)
        }
        Command::Spin { scenario, output, format } => cmd_spin(scenario, output, format, stdout),
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Input(m) => {
                    let _ = writeln!(stderr, "error: {m}");
                }
                Failure::Invalid(m) => {
                    let _ = writeln!(stderr, "invalid: {m}");
                }
                Failure::NoSolutions => {
                    let _ = writeln!(stderr, "no solutions found");
                }
                Failure::Degenerate(m) => {
                    let _ = writeln!(stderr, "degenerate development: {m}");
                }
            }
            f.code()
        }
    }
}
