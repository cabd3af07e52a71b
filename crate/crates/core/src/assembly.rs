//! Collocation assembly of the dense system `K x = F`.
//!
//! At the collocation point of element `e` the boundary identity reads
//!
//! ```text
//! 1/2 u_e + sum_m That[e,m] u_m = sum_m Uhat[e,m] t_m
//! ```
//!
//! where `Uhat[e,m]` and `That[e,m]` are the kernels integrated over element
//! `m`. Each element prescribes either its displacement or its traction and
//! the other triple is unknown. Unknowns are laid out element-major,
//! component-minor (`3(e-1) .. 3e`, x/y/z). The column block of element `m` is
//! `That[e,m]` (plus `I/2` on the diagonal) when its displacement is unknown
//! and `-Uhat[e,m]` when its traction is unknown; the prescribed halves move
//! to `F`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{Mesh, TriangleElement, Vec3};
use crate::kernels::{kernel_eval, KernelPair, Mat3, MaterialConstants, SingularityError};
use crate::parallel::Execution;
use crate::quadrature::try_integrate_over_element;

/// Which physical quantity a triple refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Displacement,
    Traction,
}

impl Quantity {
    pub fn other(self) -> Self {
        match self {
            Quantity::Displacement => Quantity::Traction,
            Quantity::Traction => Quantity::Displacement,
        }
    }

    /// Single-letter tag used in input and output files.
    pub fn letter(self) -> char {
        match self {
            Quantity::Displacement => 'D',
            Quantity::Traction => 'T',
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Displacement => "displacement",
            Quantity::Traction => "traction",
        })
    }
}

/// A prescribed triple: all three components of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prescribed {
    pub kind: Quantity,
    pub value: Vec3,
}

impl Prescribed {
    pub fn displacement(value: Vec3) -> Self {
        Self {
            kind: Quantity::Displacement,
            value,
        }
    }

    pub fn traction(value: Vec3) -> Self {
        Self {
            kind: Quantity::Traction,
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    /// 1-based element index.
    pub element: usize,
    pub prescribed: Prescribed,
}

impl BoundaryCondition {
    pub fn new(element: usize, prescribed: Prescribed) -> Self {
        Self {
            element,
            prescribed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("mesh has {0} elements; a closed surface needs at least 4")]
    TooFewElements(usize),
    #[error(
        "boundary condition for element {element} is out of range (mesh has {count} elements)"
    )]
    OutOfRange { element: usize, count: usize },
    #[error("element {0} has more than one boundary condition")]
    Duplicate(usize),
    #[error("element {0} has no boundary condition")]
    Missing(usize),
    #[error("element {element}: {source}")]
    Singular {
        element: usize,
        #[source]
        source: SingularityError,
    },
}

/// Orders and validates a BC list against a mesh: exactly one per element.
pub fn ordered_conditions(
    mesh_len: usize,
    bcs: &[BoundaryCondition],
) -> Result<Vec<Prescribed>, AssemblyError> {
    let mut slots: Vec<Option<Prescribed>> = vec![None; mesh_len];
    for bc in bcs {
        if bc.element == 0 || bc.element > mesh_len {
            return Err(AssemblyError::OutOfRange {
                element: bc.element,
                count: mesh_len,
            });
        }
        let slot = &mut slots[bc.element - 1];
        if slot.is_some() {
            return Err(AssemblyError::Duplicate(bc.element));
        }
        *slot = Some(bc.prescribed);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or(AssemblyError::Missing(i + 1)))
        .collect()
}

/// Integrated kernels of element `elem` seen from `source`.
pub fn element_influence(
    source: &Vec3,
    elem: &TriangleElement,
    mat: &MaterialConstants,
) -> Result<KernelPair, SingularityError> {
    let normal = *elem.normal();
    try_integrate_over_element(elem, |x| kernel_eval(source, x, &normal, mat))
}

/// The assembled system plus the bookkeeping needed to read its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    pub k: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Quantity occupying each element's three unknown slots.
    pub unknowns: Vec<Quantity>,
}

impl DenseSystem {
    pub fn element_count(&self) -> usize {
        self.unknowns.len()
    }

    pub fn dimension(&self) -> usize {
        3 * self.unknowns.len()
    }

    /// True when no element prescribes its displacement, so rigid-body
    /// motions are unconstrained.
    pub fn is_floating(&self) -> bool {
        !self.unknowns.contains(&Quantity::Traction)
    }
}

/// Assembles `K` and `F` with the default execution mode.
pub fn assemble_system(
    mesh: &Mesh,
    bcs: &[BoundaryCondition],
    mat: &MaterialConstants,
) -> Result<DenseSystem, AssemblyError> {
    assemble_system_with(mesh, bcs, mat, Execution::default())
}

pub fn assemble_system_with(
    mesh: &Mesh,
    bcs: &[BoundaryCondition],
    mat: &MaterialConstants,
    exec: Execution,
) -> Result<DenseSystem, AssemblyError> {
    let count = mesh.len();
    if count < 4 {
        return Err(AssemblyError::TooFewElements(count));
    }
    let prescribed = ordered_conditions(count, bcs)?;
    let n = 3 * count;

    // Row-major storage so each collocation point owns a contiguous strip.
    let mut rows = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let elements = mesh.elements();

    let fill = |e: usize, strip: &mut [f64], f: &mut [f64]| -> Result<(), AssemblyError> {
        let source = elements[e].collocation();
        let mut f_e = Vec3::zeros();
        for (m, elem) in elements.iter().enumerate() {
            let KernelPair { u, t } =
                element_influence(source, elem, mat).map_err(|source| AssemblyError::Singular {
                    element: m + 1,
                    source,
                })?;
            let p = prescribed[m];
            let block = match p.kind {
                Quantity::Traction => {
                    // Displacement of m unknown.
                    f_e += u * p.value;
                    if e == m {
                        t + Mat3::identity() * 0.5
                    } else {
                        t
                    }
                }
                Quantity::Displacement => {
                    f_e -= t * p.value;
                    -u
                }
            };
            for i in 0..3 {
                for j in 0..3 {
                    strip[i * n + 3 * m + j] = block[(i, j)];
                }
            }
        }
        if prescribed[e].kind == Quantity::Displacement {
            f_e -= prescribed[e].value * 0.5;
        }
        f.copy_from_slice(f_e.as_slice());
        Ok(())
    };

    let strips = rows.chunks_mut(3 * n).zip(rhs.chunks_mut(3)).enumerate();
    crate::parallel::try_for_each(exec, strips, |(e, (strip, f))| fill(e, strip, f))?;

    Ok(DenseSystem {
        k: DMatrix::from_row_slice(n, n, &rows),
        f: DVector::from_vec(rhs),
        unknowns: prescribed.iter().map(|p| p.kind.other()).collect(),
    })
}

/// Resolved state of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementSolution {
    pub displacement: Vec3,
    pub traction: Vec3,
    /// The quantity that came out of the solve; the other was prescribed.
    pub solved: Quantity,
}

impl ElementSolution {
    pub fn solved_value(&self) -> Vec3 {
        self.value(self.solved)
    }

    pub fn prescribed_value(&self) -> Vec3 {
        self.value(self.solved.other())
    }

    pub fn value(&self, q: Quantity) -> Vec3 {
        match q {
            Quantity::Displacement => self.displacement,
            Quantity::Traction => self.traction,
        }
    }
}

/// Per-element displacement and traction after the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub elements: Vec<ElementSolution>,
}

impl SolutionField {
    /// Element by 1-based index.
    pub fn element(&self, index: usize) -> Option<&ElementSolution> {
        index.checked_sub(1).and_then(|i| self.elements.get(i))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("solution has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error(transparent)]
    Conditions(#[from] AssemblyError),
    #[error("element {0}: boundary condition kind does not match the assembled system")]
    KindMismatch(usize),
}

/// Combines the raw solution with the prescribed values.
pub fn extract_solution(
    system: &DenseSystem,
    raw: &DVector<f64>,
    bcs: &[BoundaryCondition],
) -> Result<SolutionField, ExtractError> {
    if raw.len() != system.dimension() {
        return Err(ExtractError::Length {
            got: raw.len(),
            expected: system.dimension(),
        });
    }
    let prescribed = ordered_conditions(system.element_count(), bcs)?;
    let elements = prescribed
        .iter()
        .zip(&system.unknowns)
        .enumerate()
        .map(|(e, (p, &solved))| {
            if p.kind != solved.other() {
                return Err(ExtractError::KindMismatch(e + 1));
            }
            let x = Vec3::new(raw[3 * e], raw[3 * e + 1], raw[3 * e + 2]);
            let (displacement, traction) = match solved {
                Quantity::Displacement => (x, p.value),
                Quantity::Traction => (p.value, x),
            };
            Ok(ElementSolution {
                displacement,
                traction,
                solved,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SolutionField { elements })
}

/// Rigid-translation consistency of the integrated traction kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyDiagnostic {
    /// `D_e = I/2 + sum_m That[e,m]` per collocation point.
    pub deviations: Vec<Mat3>,
    /// Frobenius norms of `deviations`.
    pub norms: Vec<f64>,
    pub max_norm: f64,
    pub mean_norm: f64,
}

/// On an exactly integrated closed surface every `D_e` vanishes; the
/// residual measures quadrature error, dominated by the self and
/// nearest-neighbour elements.
pub fn rigid_body_diagnostic(
    mesh: &Mesh,
    mat: &MaterialConstants,
    exec: Execution,
) -> Result<RigidBodyDiagnostic, AssemblyError> {
    let elements = mesh.elements();
    let mut deviations = vec![Mat3::zeros(); elements.len()];
    let rows = deviations.iter_mut().enumerate();
    crate::parallel::try_for_each(exec, rows, |(e, d)| {
        let source = elements[e].collocation();
        let mut acc = Mat3::identity() * 0.5;
        for (m, elem) in elements.iter().enumerate() {
            acc += element_influence(source, elem, mat)
                .map_err(|source| AssemblyError::Singular {
                    element: m + 1,
                    source,
                })?
                .t;
        }
        *d = acc;
        Ok(())
    })?;
    let norms: Vec<f64> = deviations.iter().map(|d| d.norm()).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let mean_norm = norms.iter().sum::<f64>() / norms.len() as f64;
    Ok(RigidBodyDiagnostic {
        deviations,
        norms,
        max_norm,
        mean_norm,
    })
}
