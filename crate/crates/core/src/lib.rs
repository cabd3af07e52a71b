//! Three-dimensional linear elastostatics with the boundary element method.
//!
//! Surfaces are meshed with flat triangles carrying constant displacement
//! and traction. Each element prescribes one of the two; the other is solved
//! for by collocating the boundary integral equation at one point per
//! element and integrating the Kelvin kernels with a fixed 16-point rule.
//!
//! ```
//! use bem3d::cli::RunConfig;
//! use bem3d::generate::{BarSpec, Resolution};
//!
//! let spec = BarSpec::new(4.0, 4.0, 100.0, Resolution::Coarse).unwrap();
//! let config = RunConfig::bar_benchmark(spec, 2.0e5, 0.25, 1.6e5, "out.csv".into());
//! let outcome = bem3d::cli::solve_problem(&config).unwrap();
//! assert_eq!(outcome.field.len(), 12);
//! ```

pub mod assembly;
pub mod cli;
pub mod generate;
pub mod geometry;
pub mod kernels;
pub mod parallel;
pub mod quadrature;
pub mod solver;
pub mod stl;

pub use assembly::{
    assemble_system, extract_solution, rigid_body_diagnostic, BoundaryCondition, DenseSystem,
    Prescribed, Quantity, SolutionField,
};
pub use geometry::{Mesh, TriangleElement, Vec3};
pub use kernels::{kernel_eval, KernelPair, MaterialConstants};
pub use parallel::Execution;
pub use quadrature::integrate_over_element;
pub use solver::{evaluate_interior, solve_dense, SolveReport};
