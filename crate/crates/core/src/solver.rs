//! Dense solve of the assembled system and interior-point evaluation.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, LU};
use thiserror::Error;

use crate::assembly::{element_influence, DenseSystem, SolutionField};
use crate::geometry::{Mesh, Vec3};
use crate::kernels::{MaterialConstants, SingularityError};
use crate::parallel::Execution;

/// Condition estimates above this are reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("matrix is {rows}x{cols} but right-hand side has length {rhs}")]
    Dimension {
        rows: usize,
        cols: usize,
        rhs: usize,
    },
    #[error("no element prescribes a displacement; rigid-body motion is unconstrained (condition estimate {condition_estimate:.3e})")]
    Unconstrained { condition_estimate: f64 },
    #[error("matrix is singular (zero pivot)")]
    ZeroPivot,
    #[error("solution contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `||K x - F||_2 / max(||F||_2, tiny)`
    pub residual_norm: f64,
    /// Estimate of the 1-norm condition number, when available.
    pub condition_estimate: Option<f64>,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate
            .is_some_and(|c| c.is_nan() || c > ILL_CONDITIONED)
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `K^T y = b` from the factors of `P K = L U`.
fn solve_transposed(
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let mut z = lu.u().tr_solve_upper_triangular(b)?;
    lu.l().tr_solve_lower_triangular_mut(&mut z);
    lu.p().inv_permute_rows(&mut z);
    Some(z)
}

/// Hager's estimate of `||K^-1||_1` with Higham's alternating-sign
/// safeguard, times `||K||_1`.
pub fn condition_estimate(
    k: &DMatrix<f64>,
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
) -> Option<f64> {
    let n = k.nrows();
    if n == 0 {
        return None;
    }
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0f64;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x)?;
        estimate = y.lp_norm(1);
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = solve_transposed(lu, &xi)?;
        let j = z.iamax();
        let zmax = z[j].abs();
        if zmax <= z.dot(&x) || j == last_j {
            break;
        }
        last_j = j;
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    let alt = DVector::from_fn(n, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
    });
    let alt_est = 2.0 * lu.solve(&alt)?.lp_norm(1) / (3.0 * n as f64);
    let inv_norm = estimate.max(alt_est);
    inv_norm.is_finite().then_some(inv_norm * one_norm(k))
}

/// LU factorization with partial pivoting, then residual and condition checks.
pub fn solve_dense(system: &DenseSystem) -> Result<(DVector<f64>, SolveReport), SolveError> {
    let start = Instant::now();
    let (rows, cols, rhs) = (system.k.nrows(), system.k.ncols(), system.f.len());
    if rows != cols || rows != rhs {
        return Err(SolveError::Dimension { rows, cols, rhs });
    }
    let lu = system.k.clone().lu();
    let condition = condition_estimate(&system.k, &lu);
    if system.is_floating() {
        return Err(SolveError::Unconstrained {
            condition_estimate: condition.unwrap_or(f64::INFINITY),
        });
    }
    let x = lu.solve(&system.f).ok_or(SolveError::ZeroPivot)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    let residual = (&system.k * &x - &system.f).norm();
    let report = SolveReport {
        residual_norm: residual / system.f.norm().max(f64::MIN_POSITIVE),
        condition_estimate: condition,
        elapsed: start.elapsed(),
    };
    Ok((x, report))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InteriorError {
    #[error("field has {field} elements but mesh has {mesh}")]
    Mismatch { field: usize, mesh: usize },
    #[error("invalid interior point: {0}")]
    InvalidPoint(#[from] SingularityError),
}

/// Displacement at a point inside the solid from the resolved boundary
/// field: `u(p) = sum_m Uhat[p,m] t_m - That[p,m] u_m`.
///
/// The point is assumed to be inside; no containment test is made.
pub fn evaluate_interior(
    point: &Vec3,
    mesh: &Mesh,
    field: &SolutionField,
    mat: &MaterialConstants,
) -> Result<Vec3, InteriorError> {
    if field.len() != mesh.len() {
        return Err(InteriorError::Mismatch {
            field: field.len(),
            mesh: mesh.len(),
        });
    }
    let mut u = Vec3::zeros();
    for (elem, s) in mesh.iter().zip(&field.elements) {
        let k = element_influence(point, elem, mat)?;
        u += k.u * s.traction - k.t * s.displacement;
    }
    Ok(u)
}

/// [`evaluate_interior`] over many points.
pub fn evaluate_interior_points(
    points: &[Vec3],
    mesh: &Mesh,
    field: &SolutionField,
    mat: &MaterialConstants,
    exec: Execution,
) -> Result<Vec<Vec3>, InteriorError> {
    let mut out = vec![Vec3::zeros(); points.len()];
    let items = out.iter_mut().zip(points);
    crate::parallel::try_for_each(exec, items, |(slot, p)| {
        *slot = evaluate_interior(p, mesh, field, mat)?;
        Ok::<(), InteriorError>(())
    })?;
    Ok(out)
}
