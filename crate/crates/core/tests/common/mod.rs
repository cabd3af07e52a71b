//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use bem3d::kernels::Mat3;
use bem3d::Vec3;
use rand::Rng;

/// Kelvin kernels written out directly from the closed forms, with no
/// shared code paths.
pub fn reference_kernels(
    source: &Vec3,
    field: &Vec3,
    normal: &Vec3,
    e: f64,
    nu: f64,
) -> (Mat3, Mat3) {
    let g = e / (2.0 * (1.0 + nu));
    let c = 1.0 / (16.0 * PI * g * (1.0 - nu));
    let c1 = 3.0 - 4.0 * nu;
    let c2 = 1.0 / (8.0 * PI * (1.0 - nu));
    let c3 = 1.0 - 2.0 * nu;
    let d = field - source;
    let r = d.norm();
    let dr = d / r;
    let cos = dr.dot(normal);
    let u = Mat3::from_fn(|i, j| c / r * (c1 * delta(i, j) + dr[i] * dr[j]));
    let t = Mat3::from_fn(|i, j| {
        -c2 / (r * r)
            * ((c3 * delta(i, j) + 3.0 * dr[i] * dr[j]) * cos
                - c3 * (normal[j] * dr[i] - normal[i] * dr[j]))
    });
    (u, t)
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Midpoint rule on the uniform `n x n` barycentric subdivision: every
/// subtriangle contributes its area times `f` at its centroid.
pub fn subdivision_integral<F>(a: &Vec3, b: &Vec3, c: &Vec3, n: usize, mut f: F) -> [f64; 18]
where
    F: FnMut(&Vec3) -> [f64; 18],
{
    let area = (b - a).cross(&(c - a)).norm() / 2.0;
    let w = area / (n * n) as f64;
    let h = 1.0 / n as f64;
    let mut acc = [0.0; 18];
    let mut add = |s: f64, t: f64| {
        let x = a + (b - a) * s + (c - a) * t;
        for (slot, v) in acc.iter_mut().zip(f(&x)) {
            *slot += v * w;
        }
    };
    for i in 0..n {
        for j in 0..n - i {
            add((i as f64 + 1.0 / 3.0) * h, (j as f64 + 1.0 / 3.0) * h);
            if i + j + 1 < n {
                add((i as f64 + 2.0 / 3.0) * h, (j as f64 + 2.0 / 3.0) * h);
            }
        }
    }
    acc
}

/// Integrated `(U, T)` over a triangle by Richardson extrapolation of the
/// subdivision rule at `n` and `2n`. The midpoint error is `O(h^2)`.
pub fn oracle_influence(source: &Vec3, tri: &[Vec3; 3], e: f64, nu: f64, n: usize) -> (Mat3, Mat3) {
    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
    let eval = |x: &Vec3| {
        let (u, t) = reference_kernels(source, x, &normal, e, nu);
        let mut out = [0.0; 18];
        out[..9].copy_from_slice(u.as_slice());
        out[9..].copy_from_slice(t.as_slice());
        out
    };
    let coarse = subdivision_integral(&tri[0], &tri[1], &tri[2], n, eval);
    let fine = subdivision_integral(&tri[0], &tri[1], &tri[2], 2 * n, eval);
    let mut best = [0.0; 18];
    for k in 0..18 {
        best[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    }
    (
        Mat3::from_column_slice(&best[..9]),
        Mat3::from_column_slice(&best[9..]),
    )
}

/// `max |a - b| / max |b|` over the entries.
pub fn matrix_rel_error(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).amax() / b.amax()
}

pub fn random_point<R: Rng>(rng: &mut R, half_width: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
    )
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = random_point(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A random triangle whose smallest angle is not tiny.
pub fn random_triangle<R: Rng>(rng: &mut R, half_width: f64) -> [Vec3; 3] {
    loop {
        let t = [
            random_point(rng, half_width),
            random_point(rng, half_width),
            random_point(rng, half_width),
        ];
        let area = (t[1] - t[0]).cross(&(t[2] - t[0])).norm() / 2.0;
        let longest = [
            (t[1] - t[0]).norm(),
            (t[2] - t[1]).norm(),
            (t[0] - t[2]).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if area > 0.05 * longest * longest {
            return t;
        }
    }
}

/// Random proper rotation from a unit quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ));
    *q.to_rotation_matrix().matrix()
}
