//! Per-element geometry of flat triangular boundary elements.
//!
//! Every element carries its outward unit normal, the Jacobian of the
//! unit-triangle parametrization (twice the area) and its collocation point.
//! Vertex order is trusted: `(b - a) x (c - a)` must point out of the solid.

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Parametric coordinates of the collocation point inside each element.
pub const COLLOCATION_UV: (f64, f64) = (0.25, 0.5);

/// Elements with `jacobian < DEGENERACY_RATIO * diameter^2` are rejected.
pub const DEGENERACY_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vertices are collinear (normal length is zero)")]
    Collinear,
    #[error("degenerate triangle: jacobian {jacobian:e} below threshold {threshold:e}")]
    Degenerate { jacobian: f64, threshold: f64 },
    #[error("non-finite vertex coordinate")]
    NonFinite,
}

/// Unnormalized normal components in the `(b - a) x (c - a)` layout.
fn raw_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let (xba, yba, zba) = (b.x - a.x, b.y - a.y, b.z - a.z);
    let (xca, yca, zca) = (c.x - a.x, c.y - a.y, c.z - a.z);
    Vec3::new(
        yba * zca - zba * yca,
        zba * xca - xba * zca,
        xba * yca - yba * xca,
    )
}

/// Outward unit normal of the triangle `(a, b, c)` (right-hand rule).
pub fn unit_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Result<Vec3, GeometryError> {
    let n = raw_normal(a, b, c);
    let d = (n.x * n.x + n.y * n.y + n.z * n.z).sqrt();
    if d == 0.0 || !d.is_finite() {
        return Err(GeometryError::Collinear);
    }
    Ok(Vec3::new(n.x / d, n.y / d, n.z / d))
}

/// Largest edge length of the triangle.
pub fn diameter(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (a - b).norm().max((b - c).norm()).max((c - a).norm())
}

/// Twice the triangle area from the three edge lengths (Heron).
///
/// Edges are sorted and the product grouped as in Kahan's arrangement so
/// that needle-shaped triangles keep their relative accuracy. The radicand is
/// clamped at zero before the degeneracy check.
pub fn jacobian(a: &Vec3, b: &Vec3, c: &Vec3) -> Result<f64, GeometryError> {
    let alpha = (a - b).norm();
    let beta = (b - c).norm();
    let gamma = (c - a).norm();
    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let mut s = [alpha, beta, gamma];
    s.sort_by(|x, y| y.total_cmp(x));
    let [p, q, r] = s;
    let radicand = (p + (q + r)) * (r - (p - q)) * (r + (p - q)) * (p + (q - r));
    let j = 0.5 * radicand.max(0.0).sqrt();
    let threshold = DEGENERACY_RATIO * p * p;
    if j < threshold || j == 0.0 {
        return Err(GeometryError::Degenerate {
            jacobian: j,
            threshold,
        });
    }
    Ok(j)
}

/// A flat constant boundary element.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleElement {
    a: Vec3,
    b: Vec3,
    c: Vec3,
    normal: Vec3,
    jacobian: f64,
    collocation: Vec3,
}

impl TriangleElement {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Result<Self, GeometryError> {
        if !(a.iter().chain(b.iter()).chain(c.iter())).all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let jacobian = jacobian(&a, &b, &c)?;
        let normal = unit_normal(&a, &b, &c)?;
        let mut elem = Self {
            a,
            b,
            c,
            normal,
            jacobian,
            collocation: Vec3::zeros(),
        };
        elem.collocation = elem.map_param_to_point(COLLOCATION_UV.0, COLLOCATION_UV.1);
        Ok(elem)
    }

    pub fn vertices(&self) -> [Vec3; 3] {
        [self.a, self.b, self.c]
    }

    pub fn a(&self) -> &Vec3 {
        &self.a
    }

    pub fn b(&self) -> &Vec3 {
        &self.b
    }

    pub fn c(&self) -> &Vec3 {
        &self.c
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    /// Twice the element area.
    pub fn jacobian(&self) -> f64 {
        self.jacobian
    }

    pub fn area(&self) -> f64 {
        0.5 * self.jacobian
    }

    pub fn collocation(&self) -> &Vec3 {
        &self.collocation
    }

    pub fn centroid(&self) -> Vec3 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.a, &self.b, &self.c)
    }

    /// Maps parametric `(u, v)` to a Cartesian point on the element plane.
    ///
    /// Two coordinates come from the affine map and the third from the plane
    /// equation, solving for whichever normal component is at least `1/sqrt(3)`
    /// in magnitude (z first, then y, then x).
    pub fn map_param_to_point(&self, u: f64, v: f64) -> Vec3 {
        let (a, b, c, n) = (&self.a, &self.b, &self.c, &self.normal);
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        let lerp = |pa: f64, pb: f64, pc: f64| (pb - pa) * u + (pc - pa) * v + pa;
        if n.z.abs() >= inv_sqrt3 {
            let x = lerp(a.x, b.x, c.x);
            let y = lerp(a.y, b.y, c.y);
            let z = -(n.x * (x - a.x) + n.y * (y - a.y)) / n.z + a.z;
            Vec3::new(x, y, z)
        } else if n.y.abs() >= inv_sqrt3 {
            let x = lerp(a.x, b.x, c.x);
            let z = lerp(a.z, b.z, c.z);
            let y = -(n.x * (x - a.x) + n.z * (z - a.z)) / n.y + a.y;
            Vec3::new(x, y, z)
        } else {
            let y = lerp(a.y, b.y, c.y);
            let z = lerp(a.z, b.z, c.z);
            let x = -(n.y * (y - a.y) + n.z * (z - a.z)) / n.x + a.x;
            Vec3::new(x, y, z)
        }
    }

    /// The element's collocation point, `map_param_to_point(1/4, 1/2)`.
    pub fn collocation_point(&self) -> Vec3 {
        self.collocation
    }

    /// Same triangle with `b` and `c` swapped (inward normal).
    pub fn flipped(&self) -> Self {
        Self::new(self.a, self.c, self.b).expect("flipping preserves non-degeneracy")
    }
}

/// An ordered list of boundary elements. External element indices are
/// 1-based positions in this list.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    elements: Vec<TriangleElement>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh has no elements")]
    Empty,
    #[error("facet {facet}: {source}")]
    Facet {
        facet: usize,
        #[source]
        source: GeometryError,
    },
}

impl Mesh {
    pub fn new(elements: Vec<TriangleElement>) -> Result<Self, MeshError> {
        if elements.is_empty() {
            return Err(MeshError::Empty);
        }
        Ok(Self { elements })
    }

    /// Builds elements from vertex triples; errors name the 1-based facet.
    pub fn from_triangles<I>(triangles: I) -> Result<Self, MeshError>
    where
        I: IntoIterator<Item = [Vec3; 3]>,
    {
        let elements = triangles
            .into_iter()
            .enumerate()
            .map(|(i, [a, b, c])| {
                TriangleElement::new(a, b, c).map_err(|source| MeshError::Facet {
                    facet: i + 1,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[TriangleElement] {
        &self.elements
    }

    /// Element by 1-based index.
    pub fn element(&self, index: usize) -> Option<&TriangleElement> {
        index.checked_sub(1).and_then(|i| self.elements.get(i))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TriangleElement> {
        self.elements.iter()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in self.elements.iter().flat_map(|e| e.vertices()) {
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        (lo, hi)
    }

    /// Length of the bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Enclosed volume by the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.a.dot(&e.b.cross(&e.c)))
            .sum::<f64>()
            / 6.0
    }

    /// True when every edge is used exactly twice, once in each direction.
    ///
    /// Vertices are identified by exact coordinate equality.
    pub fn is_watertight(&self) -> bool {
        use std::collections::HashMap;
        let key = |v: &Vec3| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
        let mut directed: HashMap<([u64; 3], [u64; 3]), usize> = HashMap::new();
        for e in &self.elements {
            let vs = e.vertices();
            for i in 0..3 {
                *directed
                    .entry((key(&vs[i]), key(&vs[(i + 1) % 3])))
                    .or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|((p, q), &n)| n == 1 && directed.get(&(*q, *p)) == Some(&1))
    }

    /// Same mesh with element order permuted: new element `i` is old
    /// element `order[i]` (both 0-based).
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            elements: order.iter().map(|&i| self.elements[i].clone()).collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Mesh {
    type Item = &'a TriangleElement;
    type IntoIter = std::slice::Iter<'a, TriangleElement>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}
