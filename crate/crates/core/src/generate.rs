//! Closed, outward-wound triangulations of a rectangular prism.
//!
//! The prism spans `[0, width] x [0, height] x [0, length]`, so one end lies
//! in the `z = 0` plane and the other in the `z = length` plane.
//!
//! `Coarse` is the minimal 12-facet box. `Medium` and `High` cover each side
//! face with a single strip of near-isosceles triangles whose apexes
//! alternate between the two long edges (stations at `k*s` on one edge and
//! `(k + 1/2)*s` on the other), and close each end with a four-triangle fan
//! around the face centre. Within every facet the apex (the vertex off the
//! facet's base edge) is listed last, which places the collocation point on
//! the strip's centre line.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Mesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    Coarse,
    Medium,
    High,
}

impl Resolution {
    /// Approximate facet count aimed for on strip layouts.
    pub fn target_facets(self) -> usize {
        match self {
            Resolution::Coarse => 12,
            Resolution::Medium => 170,
            Resolution::High => 430,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Coarse => "coarse",
            Resolution::Medium => "medium",
            Resolution::High => "high",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarSpecError {
    #[error("bar dimensions must be positive and finite, got {width} x {height} x {length}")]
    Dimensions {
        width: f64,
        height: f64,
        length: f64,
    },
    #[error("unknown resolution `{0}` (expected coarse, medium or high)")]
    Resolution(String),
    #[error("malformed bar spec `{0}` (expected WxH,L,RES)")]
    Format(String),
}

impl FromStr for Resolution {
    type Err = BarSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coarse" => Ok(Resolution::Coarse),
            "medium" => Ok(Resolution::Medium),
            "high" => Ok(Resolution::High),
            _ => Err(BarSpecError::Resolution(s.to_string())),
        }
    }
}

/// Prism dimensions plus the mesh resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarSpec {
    pub width: f64,
    pub height: f64,
    pub length: f64,
    pub resolution: Resolution,
}

impl BarSpec {
    pub fn new(
        width: f64,
        height: f64,
        length: f64,
        resolution: Resolution,
    ) -> Result<Self, BarSpecError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(width) && ok(height) && ok(length)) {
            return Err(BarSpecError::Dimensions {
                width,
                height,
                length,
            });
        }
        Ok(Self {
            width,
            height,
            length,
            resolution,
        })
    }

    pub fn cross_section_area(&self) -> f64 {
        self.width * self.height
    }

    pub fn volume(&self) -> f64 {
        self.width * self.height * self.length
    }
}

impl FromStr for BarSpec {
    type Err = BarSpecError;

    /// Parses `WxH,L,RES`, e.g. `4x4,100,medium`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BarSpecError::Format(s.to_string());
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [section, length, res] = parts.as_slice() else {
            return Err(bad());
        };
        let (w, h) = section.split_once(['x', 'X']).ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        BarSpec::new(num(w)?, num(h)?, num(length)?, res.parse()?)
    }
}

/// Triangulates the prism described by `spec`.
pub fn generate_bar_mesh(spec: &BarSpec) -> Mesh {
    let triangles = match spec.resolution {
        Resolution::Coarse => box_triangles(spec),
        res => strip_triangles(spec, strip_count(res.target_facets())),
    };
    Mesh::from_triangles(triangles).expect("generated facets are non-degenerate")
}

/// Number of strip segments `n` so that `8n + 12` is closest to `target`.
fn strip_count(target: usize) -> usize {
    let n = ((target as f64 - 12.0) / 8.0).round();
    n.max(1.0) as usize
}

fn corners(spec: &BarSpec) -> [(f64, f64); 4] {
    // Counter-clockwise seen from +z.
    [
        (0.0, 0.0),
        (spec.width, 0.0),
        (spec.width, spec.height),
        (0.0, spec.height),
    ]
}

fn box_triangles(spec: &BarSpec) -> Vec<[Vec3; 3]> {
    let l = spec.length;
    let c = corners(spec);
    let p = |k: usize, z: f64| Vec3::new(c[k].0, c[k].1, z);
    let mut tris = Vec::with_capacity(12);
    for f in 0..4 {
        let g = (f + 1) % 4;
        tris.push([p(f, 0.0), p(g, 0.0), p(g, l)]);
        tris.push([p(f, 0.0), p(g, l), p(f, l)]);
    }
    tris.push([p(0, 0.0), p(2, 0.0), p(1, 0.0)]);
    tris.push([p(0, 0.0), p(3, 0.0), p(2, 0.0)]);
    tris.push([p(0, l), p(1, l), p(2, l)]);
    tris.push([p(0, l), p(2, l), p(3, l)]);
    tris
}

fn strip_triangles(spec: &BarSpec, n: usize) -> Vec<[Vec3; 3]> {
    let l = spec.length;
    let step = l / n as f64;
    let whole: Vec<f64> = (0..n).map(|k| k as f64 * step).chain([l]).collect();
    let half: Vec<f64> = [0.0]
        .into_iter()
        .chain((0..n).map(|k| (k as f64 + 0.5) * step))
        .chain([l])
        .collect();
    let c = corners(spec);
    let stations = |k: usize| if k.is_multiple_of(2) { &whole } else { &half };

    let mut tris = Vec::with_capacity(8 * n + 12);
    for f in 0..4 {
        let g = (f + 1) % 4;
        let p: Vec<Vec3> = stations(f)
            .iter()
            .map(|&z| Vec3::new(c[f].0, c[f].1, z))
            .collect();
        let q: Vec<Vec3> = stations(g)
            .iter()
            .map(|&z| Vec3::new(c[g].0, c[g].1, z))
            .collect();
        let (mut i, mut j) = (0, 0);
        while i + 1 < p.len() || j + 1 < q.len() {
            let advance_p = j + 1 == q.len() || (i + 1 < p.len() && p[i + 1].z <= q[j + 1].z);
            if advance_p {
                tris.push([p[i + 1], p[i], q[j]]);
                i += 1;
            } else {
                tris.push([q[j], q[j + 1], p[i]]);
                j += 1;
            }
        }
    }
    let mid = (0.5 * spec.width, 0.5 * spec.height);
    let at = |xy: (f64, f64), z: f64| Vec3::new(xy.0, xy.1, z);
    for f in 0..4 {
        let g = (f + 1) % 4;
        tris.push([at(c[g], 0.0), at(c[f], 0.0), at(mid, 0.0)]);
    }
    for f in 0..4 {
        let g = (f + 1) % 4;
        tris.push([at(c[f], l), at(c[g], l), at(mid, l)]);
    }
    tris
}
