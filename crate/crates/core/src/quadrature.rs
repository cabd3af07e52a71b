//! Fixed 16-point rule for flat triangles.
//!
//! The unit triangle `0 <= u, 0 <= v, u + v <= 1` is collapsed onto the unit
//! square through `u = t (1 - v)`. The square is split into four subsquares,
//! each carrying a 2x2 Gauss-Legendre product rule, so every node has weight
//! `1/16` and the integral becomes
//!
//! ```text
//! int_S f dS = J / 16 * sum_k f(x_k) (1 - v_k)
//! ```
//!
//! Nodes are summed in table order, so results are bitwise reproducible.

use std::ops::{AddAssign, Mul};
use std::sync::OnceLock;

use crate::geometry::{TriangleElement, Vec3};
use crate::kernels::{KernelPair, Mat3};

pub const NODE_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePoint {
    pub t: f64,
    pub v: f64,
    pub u: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: [QuadraturePoint; NODE_COUNT],
}

impl QuadratureRule {
    fn build() -> Self {
        let h = 1.0 / (4.0 * 3f64.sqrt());
        let lo = [0.25 + h, 0.25 - h];
        let hi = [0.75 + h, 0.75 - h];
        // Subsquare order: (t low, v low), (t high, v low), (t high, v high), (t low, v high).
        let blocks = [(lo, lo), (hi, lo), (hi, hi), (lo, hi)];
        let mut points = [QuadraturePoint {
            t: 0.0,
            v: 0.0,
            u: 0.0,
            weight: 0.0,
        }; NODE_COUNT];
        let mut k = 0;
        for (ts, vs) in blocks {
            for t in ts {
                for v in vs {
                    points[k] = QuadraturePoint {
                        t,
                        v,
                        u: t * (1.0 - v),
                        weight: 1.0 / 16.0,
                    };
                    k += 1;
                }
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[QuadraturePoint; NODE_COUNT] {
        &self.points
    }
}

/// The shared 16-node table.
pub fn quadrature_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(QuadratureRule::build)
}

/// Values that can be accumulated by the rule.
pub trait Integrand: Copy + AddAssign + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Integrand for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
}

impl Integrand for Mat3 {
    fn zero() -> Self {
        Mat3::zeros()
    }
}

impl AddAssign for KernelPair {
    fn add_assign(&mut self, rhs: Self) {
        self.u += rhs.u;
        self.t += rhs.t;
    }
}

impl Mul<f64> for KernelPair {
    type Output = Self;

    fn mul(self, s: f64) -> Self {
        Self {
            u: self.u * s,
            t: self.t * s,
        }
    }
}

impl Integrand for KernelPair {
    fn zero() -> Self {
        KernelPair::zeros()
    }
}

/// Integrates a fallible point function over `elem`.
pub fn try_integrate_over_element<V, E, F>(elem: &TriangleElement, mut f: F) -> Result<V, E>
where
    V: Integrand,
    F: FnMut(&Vec3) -> Result<V, E>,
{
    let mut acc = V::zero();
    for p in quadrature_rule().points() {
        let x = elem.map_param_to_point(p.u, p.v);
        acc += f(&x)? * (1.0 - p.v);
    }
    Ok(acc * (elem.jacobian() / 16.0))
}

/// Integrates a point function over `elem`.
pub fn integrate_over_element<V, F>(elem: &TriangleElement, mut f: F) -> V
where
    V: Integrand,
    F: FnMut(&Vec3) -> V,
{
    try_integrate_over_element(elem, |x| Ok::<V, std::convert::Infallible>(f(x)))
        .unwrap_or_else(|e| match e {})
}
