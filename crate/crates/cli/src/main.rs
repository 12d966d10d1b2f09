//! `dconf`: mesh generation, predicate checks, curvature, flat solves and
//! randomized experiments.
//!
//! Exit status: 0 on success, 1 when a checked predicate is false, a solve
//! fails or an experiment finds a violation, 2 on usage, input or I/O errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use dconf::experiments::{
    gen_hex_disk, gen_random_delaunay_disk, Experiment, ExperimentError, ExperimentReport,
};
use dconf::io::MeshDocument;
use dconf::{
    acuteness_margin, apply_conformal, apply_hyp_conformal, corner_angles, curvature_vector,
    delaunay_margin, hyp_curvature_vector, induced_hyp_metric, is_geodesic_embedding,
    is_hyp_delaunay, newton_prescribed_curvature, nondegeneracy_margin, tol, CurvatureTarget,
    HypPLMetric, NewtonOptions, SolveError,
};

const TOLERANCE_VAR: &str = "DCONF_TOLERANCE";

#[derive(Debug, Parser)]
#[command(
    name = "dconf",
    version,
    about = "Discrete conformal geometry on triangulated disks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mesh document.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Evaluate a predicate on a mesh and print its margin.
    Check {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum)]
        what: Predicate,
        /// Also test every pair of edges for crossings (embedding only).
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Print the curvature at every vertex as CSV.
    Curvature {
        #[arg(long)]
        mesh: PathBuf,
        /// Read coordinates as Poincaré-disk points, or edge lengths as
        /// hyperbolic lengths.
        #[arg(long)]
        hyperbolic: bool,
    },
    /// Solve for a flat interior with boundary factors taken from the mesh.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        /// Where to write the mesh with the solved factors (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the iteration report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a randomized experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Hexagonal lattice disk with unit edges.
    Hex {
        #[arg(long)]
        rings: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delaunay triangulation of random points in the unit disk.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Predicate {
    Delaunay,
    Nondegenerate,
    Acute,
    Embedding,
    HypDelaunay,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_parser = parse_experiment)]
    name: Experiment,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-trial CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary table CSV path, for experiments that produce one.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse::<Experiment>().map_err(|_| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    Violation,
}

/// Errors that are the caller's fault: bad flags or values.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Gen { kind } => generate(kind),
        Command::Check {
            mesh,
            what,
            exhaustive,
            tolerance,
        } => check(&mesh, what, exhaustive, tolerance),
        Command::Curvature { mesh, hyperbolic } => curvature(&mesh, hyperbolic),
        Command::Solve { mesh, out, report } => solve(&mesh, out.as_deref(), report.as_deref()),
        Command::Experiment(args) => experiment(args),
    }
}

fn tolerance(flag: Option<f64>, default: f64) -> Result<f64> {
    let value = match flag {
        Some(t) => t,
        None => match std::env::var(TOLERANCE_VAR) {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|_| Usage(format!("{TOLERANCE_VAR}={text} is not a number")))?,
            Err(_) => default,
        },
    };
    if !(value > 0.0 && value.is_finite()) {
        return Err(Usage(format!("tolerance must be positive, got {value}")).into());
    }
    Ok(value)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_mesh(path: &Path) -> Result<MeshDocument> {
    MeshDocument::read(path).with_context(|| format!("cannot load mesh {}", path.display()))
}

fn generate(kind: GenKind) -> Result<Status> {
    let (result, out) = match kind {
        GenKind::Hex { rings, out } => (gen_hex_disk(rings), out),
        GenKind::Random { n, seed, out } => (gen_random_delaunay_disk(n, seed), out),
    };
    let (tri, coords) = result.map_err(|e| Usage(e.to_string()))?;
    let doc = MeshDocument::new(tri).with_coords(coords);
    emit(&doc.to_json(), out.as_deref())?;
    Ok(Status::Ok)
}

fn format_margin(m: f64) -> String {
    if m.is_infinite() || m == 0.0 || m.abs() >= 1e-3 {
        format!("{m:.6}")
    } else {
        format!("{m:e}")
    }
}

fn check(path: &Path, what: Predicate, exhaustive: bool, flag: Option<f64>) -> Result<Status> {
    let doc = read_mesh(path)?;
    let tri = &doc.triangulation;
    let (margin, holds, witness) = match what {
        Predicate::Delaunay => {
            let tol = tolerance(flag, tol::DELAUNAY)?;
            let l = doc.metric()?;
            let margins = corner_angles(tri, &l)?.edge_delaunay_margins(tri);
            let worst = margins
                .iter()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(e, _)| format!("edge {e}"));
            let m = delaunay_margin(tri, &l)?;
            (m, m >= -tol, worst)
        }
        Predicate::Nondegenerate => {
            let l = doc.metric()?;
            let m = nondegeneracy_margin(tri, &l)?;
            (m, m > 0.0, None)
        }
        Predicate::Acute => {
            let tol = tolerance(flag, tol::DELAUNAY)?;
            let l = doc.metric()?;
            let m = acuteness_margin(tri, &l)?;
            (m, m > -tol, None)
        }
        Predicate::Embedding => {
            let coords = doc
                .coords
                .as_ref()
                .ok_or_else(|| Usage("the embedding check needs vertex coordinates".into()))?;
            let r = is_geodesic_embedding(tri, coords, exhaustive);
            let witness = r.failure.map(|f| {
                let vs: Vec<String> = r.witness.iter().map(|v| v.to_string()).collect();
                format!("{f:?} at vertices {}", vs.join(" "))
            });
            (r.min_area_ratio, r.embedded, witness)
        }
        Predicate::HypDelaunay => {
            let r = is_hyp_delaunay(tri, &doc.disk_coords()?)?;
            (
                r.min_margin,
                r.delaunay,
                r.witness.map(|e| format!("edge {e}")),
            )
        }
    };
    println!("margin {}", format_margin(margin));
    if holds {
        Ok(Status::Ok)
    } else {
        println!(
            "violated{}",
            witness.map(|w| format!(" at {w}")).unwrap_or_default()
        );
        Ok(Status::Violation)
    }
}

fn curvature(path: &Path, hyperbolic: bool) -> Result<Status> {
    let doc = read_mesh(path)?;
    let tri = &doc.triangulation;
    let k = if hyperbolic {
        let lh = match (&doc.lengths, &doc.coords) {
            (Some(l), _) => HypPLMetric::new(tri, l.iter().collect())?,
            (None, Some(_)) => induced_hyp_metric(tri, &doc.disk_coords()?)?,
            (None, None) => bail!(Usage(
                "mesh has neither edge lengths nor coordinates".into()
            )),
        };
        let lh = match &doc.factors {
            Some(u) => apply_hyp_conformal(tri, &lh, u)?,
            None => lh,
        };
        hyp_curvature_vector(tri, &lh)?
    } else {
        let l = doc.metric()?;
        let l = match &doc.factors {
            Some(u) => apply_conformal(tri, &l, u)?,
            None => l,
        };
        curvature_vector(tri, &l)?
    };
    let mut text = String::from("vertex,boundary,curvature\n");
    for (v, x) in k.iter() {
        text.push_str(&format!("{},{},{x:?}\n", v.0, tri.is_boundary(v)));
    }
    print!("{text}");
    Ok(Status::Ok)
}

fn solve(path: &Path, out: Option<&Path>, report_path: Option<&Path>) -> Result<Status> {
    let doc = read_mesh(path)?;
    let tri = &doc.triangulation;
    let l = doc.metric()?;
    let boundary: BTreeMap<_, _> = tri
        .boundary_vertices()
        .into_iter()
        .map(|v| {
            (
                v,
                doc.factors.as_ref().and_then(|u| u.get(v)).unwrap_or(0.0),
            )
        })
        .collect();
    let target = CurvatureTarget::flat(tri, boundary);
    match newton_prescribed_curvature(tri, &l, &target, &NewtonOptions::default()) {
        Ok((u, report)) => {
            if let Some(p) = report_path {
                emit(&(serde_json::to_string_pretty(&report)? + "\n"), Some(p))?;
            }
            emit(&doc.clone().with_factors(u).to_json(), out)?;
            eprintln!(
                "converged in {} iterations, residual {:e}",
                report.iterations, report.final_residual
            );
            Ok(Status::Ok)
        }
        Err(
            e @ (SolveError::NonConvergence(_)
            | SolveError::LineSearchStall(_)
            | SolveError::SingularSystem(_)),
        ) => {
            if let (Some(p), Some(r)) = (report_path, e.report()) {
                emit(&(serde_json::to_string_pretty(r)? + "\n"), Some(p))?;
            }
            eprintln!("solve failed: {e}");
            Ok(Status::Violation)
        }
        Err(e) => Err(e.into()),
    }
}

fn write_report(report: &ExperimentReport, args: &ExperimentArgs) -> Result<()> {
    emit(&report.to_json(), args.report.as_deref())?;
    if let Some(p) = &args.csv {
        emit(&report.to_csv(), Some(p))?;
    }
    if let (Some(p), Some(table)) = (&args.table, report.table_csv()) {
        emit(&table, Some(p))?;
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<Status> {
    let mut config = args.name.default_config();
    config.seed = args.seed.unwrap_or(config.seed);
    config.trials = args.trials.unwrap_or(config.trials);
    config.size = args.size.unwrap_or(config.size);
    config.amplitude = args.amplitude.unwrap_or(config.amplitude);
    config.tolerance = tolerance(args.tolerance, config.tolerance)?;
    match args.name.run(&config) {
        Ok(report) => {
            write_report(&report, &args)?;
            let s = &report.summary;
            eprintln!(
                "{}: {} passed, {} failed, {} skipped",
                report.experiment, s.passed, s.failed, s.skipped
            );
            if s.failed == 0 {
                return Ok(Status::Ok);
            }
            for t in report.failures() {
                if let Some(w) = &t.witness {
                    let vs: Vec<String> = w.vertices.iter().map(|v| v.to_string()).collect();
                    eprintln!(
                        "violation: seed {} trial {} vertices [{}]: {}",
                        w.seed,
                        w.trial,
                        vs.join(" "),
                        w.detail
                    );
                }
            }
            Ok(Status::Violation)
        }
        Err(ExperimentError::InsufficientValidTrials {
            valid,
            total,
            report,
        }) => {
            write_report(&report, &args)?;
            eprintln!("only {valid} of {total} trials met the hypotheses");
            Ok(Status::Violation)
        }
        Err(e) => Err(Usage(e.to_string()).into()),
    }
}
