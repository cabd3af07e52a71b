//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bem3d::assembly::{
    assemble_system, element_influence, rigid_body_diagnostic, BoundaryCondition, ElementSolution,
    Prescribed, SolutionField,
};
use bem3d::cli::{solve_problem, RunConfig, TIMINGS_HEADER};
use bem3d::generate::{generate_bar_mesh, BarSpec, Resolution};
use bem3d::kernels::{direction, kernel_eval, MaterialConstants};
use bem3d::quadrature::integrate_over_element;
use bem3d::solver::{evaluate_interior, solve_dense, SolveError};
use bem3d::{Execution, Mesh, TriangleElement, Vec3};
use common::{matrix_rel_error, oracle_influence, random_rotation, random_triangle, random_unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: f64 = 200_000.0;
const NU: f64 = 0.33;
const FORCE: f64 = 160_000.0;
const LENGTH: f64 = 100.0;

// Criterion 1
const BAR_MEAN_UZ_RANGE: (f64, f64) = (4.0, 6.0);
const BAR_RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const AXIAL_DOMINANCE: f64 = 0.3;
// Criterion 2
const QUADRATURE_SAMPLES: usize = 500;
const QUADRATURE_REL_TOL: f64 = 1e-13;
// Criterion 3
const ORACLE_PAIRS: usize = 50;
const ORACLE_SUBDIVISION: usize = 128;
const FAR_SEPARATION: f64 = 5.0;
const FAR_REL_TOL: f64 = 1e-6;
const NEAR_SEPARATION: f64 = 2.0;
const NEAR_REL_TOL: f64 = 1e-3;
// Criterion 4
const KERNEL_CONFIGS: usize = 100;
const RADIAL_SCALING_REL_TOL: f64 = 1e-12;
const ROTATION_ABS_TOL: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-14;
// Criterion 5
const ZERO_SOLUTION_TOL: f64 = 1e-12;
const SUPERPOSITION_REL_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;
// Criterion 7
const DIAGNOSTIC_ABS_TOL: f64 = 1e-9;
const MEDIUM_DIAGNOSTIC_MAX: f64 = 0.03342199154394508;
const MEDIUM_DIAGNOSTIC_MEAN: f64 = 0.009760312669069864;
const MEDIUM_DIAGNOSTIC_NORMS: [(usize, f64); 9] = [
    (1, 0.022048149357495855),
    (2, 0.007376080599555863),
    (43, 0.007376080599555418),
    (86, 0.008034268605185677),
    (129, 0.00803262798346127),
    (169, 0.030856616395583347),
    (170, 0.03342199154394508),
    (171, 0.030856616395583264),
    (172, 0.03342199154394497),
];
// Criterion 8
const INTERIOR_POINT: [f64; 3] = [2.0, 2.0, 50.0];
const INTERIOR_EXPECTED_UZ: f64 = 2.5;
const INTERIOR_REL_TOL: f64 = 0.25;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn material() -> MaterialConstants {
    MaterialConstants::new(E, NU).unwrap()
}

fn bar(resolution: Resolution) -> BarSpec {
    BarSpec::new(4.0, 4.0, LENGTH, resolution).unwrap()
}

fn on_plane(e: &TriangleElement, z: f64) -> bool {
    e.vertices().iter().all(|v| v.z == z)
}

/// Fixed `z = 0`, `end` traction on `z = L`, `side` traction elsewhere.
fn bar_conditions(mesh: &Mesh, fixed: Vec3, end: Vec3, side: Vec3) -> Vec<BoundaryCondition> {
    mesh.iter()
        .enumerate()
        .map(|(i, e)| {
            let p = if on_plane(e, 0.0) {
                Prescribed::displacement(fixed)
            } else if on_plane(e, LENGTH) {
                Prescribed::traction(end)
            } else {
                Prescribed::traction(side)
            };
            BoundaryCondition::new(i + 1, p)
        })
        .collect()
}

fn bar_benchmark() -> Outcome {
    let spec = bar(Resolution::Medium);
    let config = RunConfig::bar_benchmark(spec, E, NU, FORCE, "unused.csv".into());
    let start = Instant::now();
    let outcome = solve_problem(&config).unwrap();
    let elapsed = start.elapsed();

    let loaded: Vec<&ElementSolution> = outcome
        .mesh
        .iter()
        .zip(&outcome.field.elements)
        .filter(|(e, _)| on_plane(e, LENGTH))
        .map(|(_, s)| s)
        .collect();
    let mean_uz = loaded.iter().map(|s| s.displacement.z).sum::<f64>() / loaded.len() as f64;
    let worst_ratio = loaded
        .iter()
        .map(|s| s.displacement.x.abs().max(s.displacement.y.abs()) / s.displacement.z.abs())
        .fold(0.0, f64::max);
    let pass = !loaded.is_empty()
        && (BAR_MEAN_UZ_RANGE.0..=BAR_MEAN_UZ_RANGE.1).contains(&mean_uz)
        && elapsed < BAR_RUNTIME_LIMIT
        && worst_ratio <= AXIAL_DOMINANCE;
    Outcome::new(
        pass,
        format!(
            "{} elements, {} loaded, mean u_z {mean_uz:.4} mm, max |u_x|,|u_y| / |u_z| {worst_ratio:.4}, {:.2} s",
            outcome.mesh.len(),
            loaded.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn quadrature_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_const = 0.0f64;
    let mut worst_linear = 0.0f64;
    for _ in 0..QUADRATURE_SAMPLES {
        let [a, b, c] = random_triangle(&mut rng, 10.0);
        let shift = common::random_point(&mut rng, 50.0);
        let e = TriangleElement::new(a + shift, b + shift, c + shift).unwrap();
        let one: f64 = integrate_over_element(&e, |_| 1.0);
        worst_const = worst_const.max((one - e.jacobian() / 2.0).abs() / (e.jacobian() / 2.0));

        let moment: Vec3 = integrate_over_element(&e, |x| *x);
        let expect = e.centroid() * e.area();
        // Relative to the integral of |x|, which bounds every component.
        let scale = e.area() * e.vertices().iter().map(|v| v.amax()).fold(0.0, f64::max);
        worst_linear = worst_linear.max((moment - expect).amax() / scale);
    }
    Outcome::new(
        worst_const <= QUADRATURE_REL_TOL && worst_linear <= QUADRATURE_REL_TOL,
        format!("{QUADRATURE_SAMPLES} triangles, constant {worst_const:.2e}, linear {worst_linear:.2e} (tol {QUADRATURE_REL_TOL:e})"),
    )
}

/// Largest and median per-matrix relative error against the oracle for
/// sources at `separation` to twice `separation` diameters.
fn oracle_errors(rng: &mut ChaCha8Rng, separation: f64, mat: &MaterialConstants) -> (f64, f64) {
    let mut errors = Vec::with_capacity(ORACLE_PAIRS);
    for _ in 0..ORACLE_PAIRS {
        let tri = random_triangle(rng, 1.0);
        let e = TriangleElement::new(tri[0], tri[1], tri[2]).unwrap();
        let distance = rng.gen_range(separation..2.0 * separation) * e.diameter();
        let source = e.centroid() + random_unit(rng) * distance;
        let k = element_influence(&source, &e, mat).unwrap();
        let (u, t) = oracle_influence(
            &source,
            &tri,
            mat.youngs_modulus,
            mat.poisson_ratio,
            ORACLE_SUBDIVISION,
        );
        errors.push(matrix_rel_error(&k.u, &u).max(matrix_rel_error(&k.t, &t)));
    }
    errors.sort_by(f64::total_cmp);
    (errors[errors.len() - 1], errors[errors.len() / 2])
}

fn kernel_integral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mat = material();
    let (far_max, far_median) = oracle_errors(&mut rng, FAR_SEPARATION, &mat);
    let (near_max, near_median) = oracle_errors(&mut rng, NEAR_SEPARATION, &mat);
    Outcome::new(
        far_max <= FAR_REL_TOL && near_max <= NEAR_REL_TOL,
        format!(
            "{ORACLE_PAIRS} pairs each; >= {FAR_SEPARATION} diameters max {far_max:.2e} median {far_median:.2e} (tol {FAR_REL_TOL:e}); \
             >= {NEAR_SEPARATION} diameters max {near_max:.2e} median {near_median:.2e} (tol {NEAR_REL_TOL:e})"
        ),
    )
}

fn kernel_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut symmetric = true;
    let mut radial = 0.0f64;
    let mut rotation = 0.0f64;
    let mut unit = 0.0f64;
    for _ in 0..KERNEL_CONFIGS {
        let mat = MaterialConstants::new(1.0, rng.gen_range(0.01..0.49)).unwrap();
        let source = common::random_point(&mut rng, 2.0);
        let d = random_unit(&mut rng) * rng.gen_range(0.5..2.0);
        let field = source + d;
        let normal = random_unit(&mut rng);
        let k = kernel_eval(&source, &field, &normal, &mat).unwrap();
        symmetric &= k.u == k.u.transpose();

        let lambda = rng.gen_range(0.1..10.0);
        let scaled = kernel_eval(&source, &(source + d * lambda), &normal, &mat).unwrap();
        radial = radial
            .max(matrix_rel_error(&(scaled.u * lambda), &k.u))
            .max(matrix_rel_error(&(scaled.t * (lambda * lambda)), &k.t));

        let r = random_rotation(&mut rng);
        let turned = kernel_eval(&(r * source), &(r * field), &(r * normal), &mat).unwrap();
        rotation = rotation
            .max((turned.u - r * k.u * r.transpose()).amax())
            .max((turned.t - r * k.t * r.transpose()).amax());

        let (_, dr) = direction(&source, &field).unwrap();
        unit = unit.max((Vec3::from(dr).norm() - 1.0).abs());
    }
    Outcome::new(
        symmetric && radial <= RADIAL_SCALING_REL_TOL && rotation <= ROTATION_ABS_TOL && unit <= UNIT_NORM_TOL,
        format!(
            "{KERNEL_CONFIGS} configurations; U symmetric {symmetric}, radial {radial:.2e}, rotation {rotation:.2e}, unit norm {unit:.2e}"
        ),
    )
}

fn system_properties() -> Outcome {
    let mat = material();
    let mesh = generate_bar_mesh(&bar(Resolution::Medium));
    let solve = |bcs: &[BoundaryCondition]| {
        let system = assemble_system(&mesh, bcs, &mat).unwrap();
        solve_dense(&system).unwrap()
    };

    let zero = Vec3::zeros();
    let (x0, _) = solve(&bar_conditions(&mesh, zero, zero, zero));
    let load = Vec3::new(0.0, 0.0, FORCE / 16.0);
    let (x_load, report) = solve(&bar_conditions(&mesh, zero, load, zero));
    let scale = x_load.amax();
    let zero_err = x0.amax() / scale;

    let a = (
        Vec3::new(0.01, -0.02, 0.005),
        load,
        Vec3::new(10.0, 0.0, -5.0),
    );
    let b = (
        Vec3::new(-0.03, 0.0, 0.02),
        Vec3::new(500.0, -200.0, 0.0),
        Vec3::new(0.0, 25.0, 0.0),
    );
    let (alpha, beta) = (1.7, -0.6);
    let (xa, _) = solve(&bar_conditions(&mesh, a.0, a.1, a.2));
    let (xb, _) = solve(&bar_conditions(&mesh, b.0, b.1, b.2));
    let (xc, _) = solve(&bar_conditions(
        &mesh,
        a.0 * alpha + b.0 * beta,
        a.1 * alpha + b.1 * beta,
        a.2 * alpha + b.2 * beta,
    ));
    let combined = &xa * alpha + &xb * beta;
    let superposition = (&xc - &combined).amax() / combined.amax();

    let neumann: Vec<BoundaryCondition> = mesh
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let t = if on_plane(e, LENGTH) {
                load
            } else if on_plane(e, 0.0) {
                -load
            } else {
                zero
            };
            BoundaryCondition::new(i + 1, Prescribed::traction(t))
        })
        .collect();
    let flagged = match solve_dense(&assemble_system(&mesh, &neumann, &mat).unwrap()) {
        Err(SolveError::Unconstrained { condition_estimate }) => {
            format!("flagged (cond {condition_estimate:.2e})")
        }
        Err(e) => format!("unexpected error {e}"),
        Ok((_, r)) if r.is_ill_conditioned() => "flagged ill-conditioned".into(),
        Ok(_) => "not flagged".into(),
    };

    Outcome::new(
        zero_err <= ZERO_SOLUTION_TOL
            && superposition <= SUPERPOSITION_REL_TOL
            && report.residual_norm <= RESIDUAL_TOL
            && flagged.starts_with("flagged"),
        format!(
            "zero data {zero_err:.2e}, superposition {superposition:.2e}, residual {:.2e}, pure traction {flagged}",
            report.residual_norm
        ),
    )
}

fn run_binary(dir: &Path, tag: &str, extra: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bem3d"))
        .current_dir(dir)
        .env("RAYON_NUM_THREADS", threads)
        .args([
            "--bar",
            "4x4,100,medium",
            "--fix",
            "z=0",
            "--load",
            "z=100:0,0,10000",
            "--interior",
            "2,2,50",
        ])
        .args([
            "--E",
            "200000",
            "--nu",
            "0.33",
            "--out",
            &format!("{tag}.csv"),
        ])
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

const OUTPUT_SUFFIXES: [&str; 4] = [".csv", ".unknowns.txt", ".report.txt", ".interior.csv"];

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        ("parallel_a", &["--no-timings"][..], "4"),
        ("parallel_b", &["--no-timings"][..], "3"),
        ("sequential", &["--no-timings", "--sequential"][..], "1"),
        ("timed_parallel", &[][..], "4"),
        ("timed_sequential", &["--sequential"][..], "1"),
    ];
    for (tag, extra, threads) in runs {
        if let Err(e) = run_binary(dir.path(), tag, extra, threads) {
            return Outcome::new(false, format!("run {tag} failed: {e}"));
        }
    }
    let read =
        |tag: &str, suffix: &str| fs::read(dir.path().join(format!("{tag}{suffix}"))).unwrap();
    let mut mismatches = Vec::new();
    for suffix in OUTPUT_SUFFIXES {
        let base = read("parallel_a", suffix);
        for other in ["parallel_b", "sequential"] {
            if read(other, suffix) != base {
                mismatches.push(format!("{other}{suffix}"));
            }
        }
    }
    // Wall-clock timings differ run to run; everything before them must not.
    let untimed = |tag: &str| {
        let text = String::from_utf8(read(tag, ".report.txt")).unwrap();
        text.split(TIMINGS_HEADER).next().unwrap().to_string()
    };
    let base_report = untimed("parallel_a");
    for tag in ["timed_parallel", "timed_sequential"] {
        if untimed(tag) != base_report {
            mismatches.push(format!("{tag}.report.txt"));
        }
        for suffix in [".csv", ".unknowns.txt", ".interior.csv"] {
            if read(tag, suffix) != read("parallel_a", suffix) {
                mismatches.push(format!("{tag}{suffix}"));
            }
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "5 runs (3 and 4 threads, sequential, with and without timings) byte-identical".into()
        } else {
            format!("differences in {}", mismatches.join(", "))
        },
    )
}

fn diagnostic_regression() -> Outcome {
    let mat = material();
    let mean_of = |r: Resolution, exec: Execution| {
        rigid_body_diagnostic(&generate_bar_mesh(&bar(r)), &mat, exec).unwrap()
    };
    let medium = mean_of(Resolution::Medium, Execution::default());
    let medium_sequential = mean_of(Resolution::Medium, Execution::Sequential);
    let mut drift = (medium.max_norm - MEDIUM_DIAGNOSTIC_MAX)
        .abs()
        .max((medium.mean_norm - MEDIUM_DIAGNOSTIC_MEAN).abs());
    for (index, expect) in MEDIUM_DIAGNOSTIC_NORMS {
        drift = drift.max((medium.norms[index - 1] - expect).abs());
    }
    let coarse = mean_of(Resolution::Coarse, Execution::default()).mean_norm;
    let high = mean_of(Resolution::High, Execution::default()).mean_norm;
    let monotone = coarse >= medium.mean_norm && medium.mean_norm >= high;
    Outcome::new(
        drift <= DIAGNOSTIC_ABS_TOL && monotone && medium == medium_sequential,
        format!(
            "medium max {:.6e} mean {:.6e}, drift {drift:.1e}; mean coarse {coarse:.4e} >= medium {:.4e} >= high {high:.4e}",
            medium.max_norm, medium.mean_norm, medium.mean_norm
        ),
    )
}

fn interior_evaluation() -> Outcome {
    let mat = material();
    let mut config =
        RunConfig::bar_benchmark(bar(Resolution::Medium), E, NU, FORCE, "unused.csv".into());
    let point = Vec3::from(INTERIOR_POINT);
    config.interior_points = vec![point];
    let outcome = solve_problem(&config).unwrap();
    let uz = outcome.interior[0].1.z;
    let rel = (uz - INTERIOR_EXPECTED_UZ).abs() / INTERIOR_EXPECTED_UZ;

    let zero_field = SolutionField {
        elements: outcome
            .field
            .elements
            .iter()
            .map(|s| ElementSolution {
                displacement: Vec3::zeros(),
                traction: Vec3::zeros(),
                solved: s.solved,
            })
            .collect(),
    };
    let zero = evaluate_interior(&point, &outcome.mesh, &zero_field, &mat).unwrap();
    Outcome::new(
        rel <= INTERIOR_REL_TOL && zero == Vec3::zeros(),
        format!("u_z at (2,2,50) = {uz:.4} mm, {:.1}% from {INTERIOR_EXPECTED_UZ}; zero field gives {zero:?}", 100.0 * rel),
    )
}

fn main() -> ExitCode {
    // Under `cargo test` extra arguments such as filters arrive here; the
    // suite is small enough to always run in full.
    let criteria: [(&str, Check); 8] = [
        ("bar benchmark", bar_benchmark),
        ("quadrature exactness", quadrature_exactness),
        ("kernel integral oracle", kernel_integral_oracle),
        ("kernel algebra", kernel_algebra),
        ("system properties", system_properties),
        ("determinism", determinism),
        ("rigid-body diagnostic regression", diagnostic_regression),
        ("interior evaluation", interior_evaluation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.pass {
            failed += 1;
        }
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {status}: {}", i + 1, outcome.detail);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
