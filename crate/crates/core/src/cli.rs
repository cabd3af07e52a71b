//! End-to-end driver: inputs, boundary-condition tagging, solve, outputs.
//!
//! Outputs of a run:
//!
//! * results file, CSV with one line per element after a header:
//!   `index,solved,sx,sy,sz,prescribed,px,py,pz`, where `solved` and
//!   `prescribed` are `D` (displacement) or `T` (traction);
//! * unknowns file, the raw solution vector, one value per line,
//!   element-major with x, y, z per element (`3T` lines);
//! * plain-text run report;
//! * interior displacements as CSV, only when interior points are requested.
//!
//! Numbers in the results, unknowns and interior files carry 17 significant
//! digits; the report uses 6. Units are whatever the inputs use.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::assembly::{
    assemble_system_with, extract_solution, rigid_body_diagnostic, AssemblyError,
    BoundaryCondition, ExtractError, Prescribed, Quantity, RigidBodyDiagnostic, SolutionField,
};
use crate::generate::{generate_bar_mesh, BarSpec, BarSpecError};
use crate::geometry::{Mesh, TriangleElement, Vec3};
use crate::kernels::{MaterialConstants, MaterialError};
use crate::parallel::Execution;
use crate::solver::{
    evaluate_interior_points, solve_dense, InteriorError, SolveError, SolveReport,
};
use crate::stl::{parse_stl, StlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
}

/// Parses `<element> <D|T> <vx> <vy> <vz>` lines; `#` starts a comment.
pub fn parse_bc_file(
    text: &str,
    element_count: usize,
) -> Result<Vec<BoundaryCondition>, BcFileError> {
    let mut seen = vec![0usize; element_count];
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parse_err = |message: String| BcFileError::Parse { line, message };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected 5 fields, found {}",
                fields.len()
            )));
        }
        let element: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("invalid element index `{}`", fields[0])))?;
        let kind = match fields[1] {
            "D" | "d" => Quantity::Displacement,
            "T" | "t" => Quantity::Traction,
            other => {
                return Err(parse_err(format!(
                    "unknown condition kind `{other}` (expected D or T)"
                )))
            }
        };
        let mut v = [0.0; 3];
        for (slot, f) in v.iter_mut().zip(&fields[2..]) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(format!("invalid number `{f}`")))?;
        }
        if element == 0 || element > element_count {
            return Err(BcFileError::Validation {
                line,
                message: format!("element {element} out of range 1..={element_count}"),
            });
        }
        if seen[element - 1] != 0 {
            return Err(BcFileError::Validation {
                line,
                message: format!(
                    "element {element} already given on line {}",
                    seen[element - 1]
                ),
            });
        }
        seen[element - 1] = line;
        out.push(BoundaryCondition::new(
            element,
            Prescribed {
                kind,
                value: Vec3::from(v),
            },
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Selects elements lying in an axis-aligned plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPredicate {
    pub axis: Axis,
    pub value: f64,
    /// Defaults to `1e-6` times the mesh bounding-box diagonal.
    pub tolerance: Option<f64>,
    pub prescribed: Prescribed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredicateError {
    #[error("malformed predicate `{0}` (expected AXIS=VALUE or AXIS=VALUE:X,Y,Z)")]
    Format(String),
}

impl PlanarPredicate {
    /// True when all three vertices lie within `tolerance` of the plane.
    pub fn matches(&self, elem: &TriangleElement, tolerance: f64) -> bool {
        let k = self.axis.index();
        elem.vertices()
            .iter()
            .all(|v| (v[k] - self.value).abs() <= tolerance)
    }

    /// Parses `AXIS=VALUE[:X,Y,Z]`. A missing vector means zero.
    pub fn parse(text: &str, kind: Quantity) -> Result<Self, PredicateError> {
        let bad = || PredicateError::Format(text.to_string());
        let (plane, vector) = match text.split_once(':') {
            Some((p, v)) => (p, Some(v)),
            None => (text, None),
        };
        let (axis, value) = plane.split_once('=').ok_or_else(bad)?;
        let axis = match axis.trim().to_ascii_lowercase().as_str() {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            _ => return Err(bad()),
        };
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let vector = match vector {
            Some(v) => parse_vec3(v).ok_or_else(bad)?,
            None => Vec3::zeros(),
        };
        Ok(Self {
            axis,
            value,
            tolerance: None,
            prescribed: Prescribed {
                kind,
                value: vector,
            },
        })
    }
}

/// Parses `x,y,z`.
pub fn parse_vec3(text: &str) -> Option<Vec3> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<_>>()?;
    <[f64; 3]>::try_from(parts).ok().map(Vec3::from)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TagError {
    #[error("elements match more than one condition source: {0:?}")]
    Ambiguous(Vec<usize>),
}

/// Assigns predicate conditions to matching elements and `default` to the rest.
pub fn tag_elements(
    mesh: &Mesh,
    predicates: &[PlanarPredicate],
    default: Prescribed,
) -> Result<Vec<BoundaryCondition>, TagError> {
    tag_with_explicit(mesh, &[], predicates, Some(default)).map(|bcs| {
        bcs.into_iter()
            .map(|b| b.expect("default covers all elements"))
            .collect()
    })
}

fn tag_with_explicit(
    mesh: &Mesh,
    explicit: &[BoundaryCondition],
    predicates: &[PlanarPredicate],
    default: Option<Prescribed>,
) -> Result<Vec<Option<BoundaryCondition>>, TagError> {
    let default_tol = 1e-6 * mesh.diameter();
    let mut from_file = vec![false; mesh.len()];
    for bc in explicit {
        if let Some(slot) = bc.element.checked_sub(1).and_then(|i| from_file.get_mut(i)) {
            *slot = true;
        }
    }
    let mut ambiguous = Vec::new();
    let mut out = Vec::with_capacity(mesh.len());
    for (i, elem) in mesh.iter().enumerate() {
        let mut hits = predicates
            .iter()
            .filter(|p| p.matches(elem, p.tolerance.unwrap_or(default_tol)));
        let first = hits.next();
        let extra = hits.next().is_some();
        if extra || (first.is_some() && from_file[i]) {
            ambiguous.push(i + 1);
            out.push(None);
            continue;
        }
        out.push(match (first, from_file[i]) {
            (Some(p), _) => Some(BoundaryCondition::new(i + 1, p.prescribed)),
            (None, true) => None,
            (None, false) => default.map(|d| BoundaryCondition::new(i + 1, d)),
        });
    }
    if !ambiguous.is_empty() {
        return Err(TagError::Ambiguous(ambiguous));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Stl(PathBuf),
    Bar(BarSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub bc_file: Option<PathBuf>,
    pub predicates: Vec<PlanarPredicate>,
    /// Condition for elements not covered by the file or a predicate. When
    /// predicates are given and this is `None`, zero traction is used.
    pub default_condition: Option<Prescribed>,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub output: PathBuf,
    pub unknowns_output: Option<PathBuf>,
    pub report_output: Option<PathBuf>,
    pub interior_points: Vec<Vec3>,
    pub include_timings: bool,
    pub execution: Execution,
}

impl RunConfig {
    /// Axial end-load benchmark: fixed `z = 0` face, total `force` spread
    /// uniformly over the `z = length` face.
    pub fn bar_benchmark(
        spec: BarSpec,
        youngs_modulus: f64,
        poisson_ratio: f64,
        force: f64,
        output: PathBuf,
    ) -> Self {
        let fixed = PlanarPredicate {
            axis: Axis::Z,
            value: 0.0,
            tolerance: None,
            prescribed: Prescribed::displacement(Vec3::zeros()),
        };
        let loaded = PlanarPredicate {
            axis: Axis::Z,
            value: spec.length,
            tolerance: None,
            prescribed: Prescribed::traction(Vec3::new(
                0.0,
                0.0,
                force / spec.cross_section_area(),
            )),
        };
        Self {
            mesh: MeshSource::Bar(spec),
            bc_file: None,
            predicates: vec![fixed, loaded],
            default_condition: None,
            youngs_modulus,
            poisson_ratio,
            output,
            unknowns_output: None,
            report_output: None,
            interior_points: Vec::new(),
            include_timings: true,
            execution: Execution::default(),
        }
    }

    pub fn unknowns_path(&self) -> PathBuf {
        self.unknowns_output
            .clone()
            .unwrap_or_else(|| self.output.with_extension("unknowns.txt"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.report_output
            .clone()
            .unwrap_or_else(|| self.output.with_extension("report.txt"))
    }

    pub fn interior_path(&self) -> PathBuf {
        self.output.with_extension("interior.csv")
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("mesh: {0}")]
    Mesh(#[from] StlError),
    #[error("bar: {0}")]
    Bar(#[from] BarSpecError),
    #[error("boundary conditions: {0}")]
    BcFile(#[from] BcFileError),
    #[error("boundary conditions: {0}")]
    Tag(#[from] TagError),
    #[error("material: {0}")]
    Material(#[from] MaterialError),
    #[error("assembly: {0}")]
    Assembly(#[from] AssemblyError),
    #[error("solution: {0}")]
    Extract(#[from] ExtractError),
    #[error("solve: {0}")]
    Solve(#[from] SolveError),
    #[error("interior: {0}")]
    Interior(#[from] InteriorError),
}

impl RunError {
    /// 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io { .. } => 3,
            RunError::Solve(_) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub setup: Duration,
    pub assembly: Duration,
    pub solve: Duration,
    pub diagnostic: Duration,
    pub interior: Duration,
}

/// Everything a run computes, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mesh: Mesh,
    pub conditions: Vec<BoundaryCondition>,
    pub raw_solution: Vec<f64>,
    pub field: SolutionField,
    pub solve_report: SolveReport,
    pub diagnostic: RigidBodyDiagnostic,
    pub interior: Vec<(Vec3, Vec3)>,
    pub timings: Timings,
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::io(path, e))
}

/// Resolves the full boundary-condition list for `mesh`.
pub fn resolve_conditions(
    mesh: &Mesh,
    config: &RunConfig,
) -> Result<Vec<BoundaryCondition>, RunError> {
    let explicit = match &config.bc_file {
        Some(path) => parse_bc_file(&read(path)?, mesh.len())?,
        None => Vec::new(),
    };
    let default = config
        .default_condition
        .or_else(|| (!config.predicates.is_empty()).then(|| Prescribed::traction(Vec3::zeros())));
    let tagged = tag_with_explicit(mesh, &explicit, &config.predicates, default)?;
    let mut all: Vec<BoundaryCondition> = explicit;
    all.extend(tagged.into_iter().flatten());
    all.sort_by_key(|b| b.element);
    // Coverage is checked once more by the assembler, which names the gap.
    crate::assembly::ordered_conditions(mesh.len(), &all)?;
    Ok(all)
}

/// Runs the pipeline without touching the output files.
pub fn solve_problem(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let t0 = Instant::now();
    let mat = MaterialConstants::new(config.youngs_modulus, config.poisson_ratio)?;
    let mesh = match &config.mesh {
        MeshSource::Stl(path) => parse_stl(&read(path)?)?,
        MeshSource::Bar(spec) => generate_bar_mesh(spec),
    };
    let conditions = resolve_conditions(&mesh, config)?;
    let mut timings = Timings {
        setup: t0.elapsed(),
        ..Timings::default()
    };

    let t = Instant::now();
    let system = assemble_system_with(&mesh, &conditions, &mat, config.execution)?;
    timings.assembly = t.elapsed();

    let t = Instant::now();
    let (raw, solve_report) = solve_dense(&system)?;
    timings.solve = t.elapsed();
    let field = extract_solution(&system, &raw, &conditions)?;

    let t = Instant::now();
    let diagnostic = rigid_body_diagnostic(&mesh, &mat, config.execution)?;
    timings.diagnostic = t.elapsed();

    let t = Instant::now();
    let values = evaluate_interior_points(
        &config.interior_points,
        &mesh,
        &field,
        &mat,
        config.execution,
    )?;
    timings.interior = t.elapsed();

    Ok(RunOutcome {
        mesh,
        conditions,
        raw_solution: raw.as_slice().to_vec(),
        field,
        solve_report,
        diagnostic,
        interior: config.interior_points.iter().copied().zip(values).collect(),
        timings,
    })
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn short(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn format_results(field: &SolutionField) -> String {
    let mut out = String::from("index,solved,sx,sy,sz,prescribed,px,py,pz\n");
    for (i, e) in field.elements.iter().enumerate() {
        let s = e.solved_value();
        let p = e.prescribed_value();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            i + 1,
            e.solved.letter(),
            full(s.x),
            full(s.y),
            full(s.z),
            e.solved.other().letter(),
            full(p.x),
            full(p.y),
            full(p.z)
        );
    }
    out
}

pub fn format_unknowns(raw: &[f64]) -> String {
    raw.iter().map(|&x| full(x) + "\n").collect()
}

pub fn format_interior(values: &[(Vec3, Vec3)]) -> String {
    let mut out = String::from("x,y,z,ux,uy,uz\n");
    for (p, u) in values {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            full(p.x),
            full(p.y),
            full(p.z),
            full(u.x),
            full(u.y),
            full(u.z)
        );
    }
    out
}

/// Marks the start of the non-reproducible part of the report.
pub const TIMINGS_HEADER: &str = "[timings]";

pub fn format_report(outcome: &RunOutcome, include_timings: bool) -> String {
    let count = |q: Quantity| {
        outcome
            .conditions
            .iter()
            .filter(|b| b.prescribed.kind == q)
            .count()
    };
    let mut r = String::new();
    let _ = writeln!(r, "elements: {}", outcome.mesh.len());
    let _ = writeln!(r, "unknowns: {}", outcome.raw_solution.len());
    let _ = writeln!(
        r,
        "displacement-prescribed elements: {}",
        count(Quantity::Displacement)
    );
    let _ = writeln!(
        r,
        "traction-prescribed elements: {}",
        count(Quantity::Traction)
    );
    let _ = writeln!(
        r,
        "relative residual: {}",
        short(outcome.solve_report.residual_norm)
    );
    match outcome.solve_report.condition_estimate {
        Some(c) => {
            let _ = writeln!(r, "condition estimate (1-norm): {}", short(c));
        }
        None => {
            let _ = writeln!(r, "condition estimate (1-norm): unavailable");
        }
    }
    if outcome.solve_report.is_ill_conditioned() {
        let _ = writeln!(r, "warning: system is ill-conditioned");
    }
    let _ = writeln!(
        r,
        "rigid-body deviation max: {}",
        short(outcome.diagnostic.max_norm)
    );
    let _ = writeln!(
        r,
        "rigid-body deviation mean: {}",
        short(outcome.diagnostic.mean_norm)
    );
    if !outcome.interior.is_empty() {
        let _ = writeln!(r, "interior displacements:");
        for (p, u) in &outcome.interior {
            let _ = writeln!(
                r,
                "  ({}, {}, {}): {} {} {}",
                short(p.x),
                short(p.y),
                short(p.z),
                short(u.x),
                short(u.y),
                short(u.z)
            );
        }
    }
    if include_timings {
        let t = &outcome.timings;
        let _ = writeln!(r, "{TIMINGS_HEADER}");
        for (name, d) in [
            ("setup", t.setup),
            ("assembly", t.assembly),
            ("solve", t.solve),
            ("rigid-body diagnostic", t.diagnostic),
            ("interior", t.interior),
        ] {
            let _ = writeln!(r, "{name}: {} s", short(d.as_secs_f64()));
        }
    }
    r
}

/// Writes all output files for a finished run.
pub fn write_outputs(outcome: &RunOutcome, config: &RunConfig) -> Result<(), RunError> {
    let mut files = vec![
        (
            config.unknowns_path(),
            format_unknowns(&outcome.raw_solution),
        ),
        (
            config.report_path(),
            format_report(outcome, config.include_timings),
        ),
    ];
    if !outcome.interior.is_empty() {
        files.push((config.interior_path(), format_interior(&outcome.interior)));
    }
    // Results go last so a failed write never leaves a results file behind.
    files.push((config.output.clone(), format_results(&outcome.field)));
    for (path, text) in files {
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    }
    Ok(())
}

/// Solves and writes outputs. Nothing is written if any step fails.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let outcome = solve_problem(config)?;
    write_outputs(&outcome, config)?;
    Ok(outcome)
}

impl FromStr for Axis {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(PredicateError::Format(s.to_string())),
        }
    }
}
