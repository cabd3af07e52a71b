use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bem3d::assembly::{Prescribed, Quantity};
use bem3d::cli::{self, MeshSource, PlanarPredicate, RunConfig};
use bem3d::generate::{generate_bar_mesh, BarSpec};
use bem3d::parallel::Execution;
use bem3d::stl::write_stl;
use bem3d::Vec3;

/// Solve a 3D linear elastostatics problem with constant triangular
/// boundary elements.
#[derive(Debug, Parser)]
#[command(name = "bem3d", version)]
struct Args {
    /// ASCII STL surface mesh, outward normals.
    #[arg(long, conflicts_with = "bar", required_unless_present = "bar")]
    mesh: Option<PathBuf>,

    /// Built-in rectangular bar, `WxH,L,RESOLUTION` (coarse|medium|high).
    #[arg(long, value_parser = parse_bar)]
    bar: Option<BarSpec>,

    /// Boundary condition file, lines of `INDEX D|T X Y Z`.
    #[arg(long)]
    bc: Option<PathBuf>,

    /// Prescribed displacement on a plane, `AXIS=VALUE[:X,Y,Z]` (repeatable).
    #[arg(long, value_parser = parse_fix)]
    fix: Vec<PlanarPredicate>,

    /// Prescribed traction on a plane, `AXIS=VALUE[:X,Y,Z]` (repeatable).
    #[arg(long, value_parser = parse_load)]
    load: Vec<PlanarPredicate>,

    /// Traction `X,Y,Z` for elements not otherwise constrained.
    #[arg(long, value_parser = parse_vector)]
    default_traction: Option<Vec3>,

    /// Young's modulus.
    #[arg(long = "E", default_value_t = 2.0e5)]
    youngs_modulus: f64,

    /// Poisson's ratio.
    #[arg(long = "nu", default_value_t = 0.33)]
    poisson_ratio: f64,

    /// Results file.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,

    /// Flat unknowns file (defaults next to the results file).
    #[arg(long)]
    unknowns: Option<PathBuf>,

    /// Run report (defaults next to the results file).
    #[arg(long)]
    report: Option<PathBuf>,

    /// Interior point `X,Y,Z` at which to evaluate displacement (repeatable).
    #[arg(long, value_parser = parse_vector)]
    interior: Vec<Vec3>,

    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    no_timings: bool,

    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,

    /// Also write the generated bar mesh as ASCII STL.
    #[arg(long)]
    write_mesh: Option<PathBuf>,
}

fn parse_bar(s: &str) -> Result<BarSpec, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_fix(s: &str) -> Result<PlanarPredicate, String> {
    PlanarPredicate::parse(s, Quantity::Displacement).map_err(|e| e.to_string())
}

fn parse_load(s: &str) -> Result<PlanarPredicate, String> {
    PlanarPredicate::parse(s, Quantity::Traction).map_err(|e| e.to_string())
}

fn parse_vector(s: &str) -> Result<Vec3, String> {
    cli::parse_vec3(s).ok_or_else(|| format!("expected X,Y,Z, got `{s}`"))
}

fn config(args: Args) -> RunConfig {
    let mesh = match (args.mesh, args.bar) {
        (Some(path), _) => MeshSource::Stl(path),
        (None, Some(spec)) => MeshSource::Bar(spec),
        (None, None) => unreachable!("clap requires one mesh source"),
    };
    RunConfig {
        mesh,
        bc_file: args.bc,
        predicates: args.fix.into_iter().chain(args.load).collect(),
        default_condition: args.default_traction.map(Prescribed::traction),
        youngs_modulus: args.youngs_modulus,
        poisson_ratio: args.poisson_ratio,
        output: args.out,
        unknowns_output: args.unknowns,
        report_output: args.report,
        interior_points: args.interior,
        include_timings: !args.no_timings,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let write_mesh = args.write_mesh.clone();
    let config = config(args);

    if let (Some(path), MeshSource::Bar(spec)) = (&write_mesh, &config.mesh) {
        if let Err(e) = std::fs::write(path, write_stl(&generate_bar_mesh(spec), "bar")) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(3);
        }
    }

    match cli::run(&config) {
        Ok(outcome) => {
            if outcome.solve_report.is_ill_conditioned() {
                eprintln!("warning: system is ill-conditioned");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
