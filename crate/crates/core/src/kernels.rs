//! Kelvin fundamental solutions for 3D isotropic linear elasticity.
//!
//! `U[i][j]` is the displacement in direction `i` at the field point due to a
//! unit point force in direction `j` at the source point; `T[i][j]` is the
//! matching traction on a surface with the given outward normal.
//!
//! ```text
//! U_ij = C / r * (C1 d_ij + r_i r_j)
//! T_ij = -C2 / r^2 * ((C3 d_ij + 3 r_i r_j) cos(theta) - C3 (n_j r_i - n_i r_j))
//! ```
//!
//! with `r_i = (field_i - source_i) / r` and `cos(theta) = r_i n_i`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::Vec3;

pub type Mat3 = Matrix3<f64>;

/// Separations below this are treated as coincident points.
pub const MIN_DISTANCE: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MaterialError {
    #[error("Young's modulus must be positive and finite, got {0}")]
    Modulus(f64),
    #[error("Poisson's ratio must lie strictly between 0 and 0.5, got {0}")]
    PoissonRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("source and field points coincide (r = {distance:e})")]
pub struct SingularityError {
    pub distance: f64,
}

/// Elastic constants and the kernel coefficients derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialConstants {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub shear_modulus: f64,
    /// `1 / (16 pi G (1 - nu))`
    pub c: f64,
    /// `3 - 4 nu`
    pub c1: f64,
    /// `1 / (8 pi (1 - nu))`
    pub c2: f64,
    /// `1 - 2 nu`
    pub c3: f64,
    /// Power of `r` in the traction kernel denominator (always 2 in 3D).
    pub n: u32,
}

impl MaterialConstants {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self, MaterialError> {
        if !(youngs_modulus.is_finite() && youngs_modulus > 0.0) {
            return Err(MaterialError::Modulus(youngs_modulus));
        }
        if !(poisson_ratio > 0.0 && poisson_ratio < 0.5) {
            return Err(MaterialError::PoissonRatio(poisson_ratio));
        }
        let nu = poisson_ratio;
        let g = youngs_modulus / (2.0 * (1.0 + nu));
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
            shear_modulus: g,
            c: 1.0 / (16.0 * PI * g * (1.0 - nu)),
            c1: 3.0 - 4.0 * nu,
            c2: 1.0 / (8.0 * PI * (1.0 - nu)),
            c3: 1.0 - 2.0 * nu,
            n: 2,
        })
    }
}

/// Displacement and traction kernels evaluated at one source/field pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub u: Mat3,
    pub t: Mat3,
}

impl KernelPair {
    pub fn zeros() -> Self {
        Self {
            u: Mat3::zeros(),
            t: Mat3::zeros(),
        }
    }
}

/// Distance `r` and unit direction `r_i` from `source` to `field`.
pub fn direction(source: &Vec3, field: &Vec3) -> Result<(f64, [f64; 3]), SingularityError> {
    let d = field - source;
    let r = (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
    if r.is_nan() || r < MIN_DISTANCE {
        return Err(SingularityError { distance: r });
    }
    Ok((r, [d.x / r, d.y / r, d.z / r]))
}

/// Evaluates both kernels for a unit load at `source`, observed at `field`
/// on a surface with unit outward normal `normal`.
pub fn kernel_eval(
    source: &Vec3,
    field: &Vec3,
    normal: &Vec3,
    mat: &MaterialConstants,
) -> Result<KernelPair, SingularityError> {
    let (r, dr) = direction(source, field)?;
    let n = [normal.x, normal.y, normal.z];
    let cos_theta = dr[0] * n[0] + dr[1] * n[1] + dr[2] * n[2];

    let cu = mat.c / r;
    let ct = -mat.c2 / (r * r);
    let mut u = Mat3::zeros();
    let mut t = Mat3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let rr = dr[i] * dr[j];
            if i == j {
                u[(i, i)] = cu * (mat.c1 + rr);
                t[(i, i)] = ct * ((mat.c3 + 3.0 * rr) * cos_theta);
            } else {
                let uij = cu * rr;
                u[(i, j)] = uij;
                u[(j, i)] = uij;
                let sym = 3.0 * rr * cos_theta;
                let skew = mat.c3 * (n[j] * dr[i] - n[i] * dr[j]);
                t[(i, j)] = ct * (sym - skew);
                t[(j, i)] = ct * (sym + skew);
            }
        }
    }
    Ok(KernelPair { u, t })
}
