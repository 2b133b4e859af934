//! Minkowski space, the hyperboloid and Klein models, and straight simplices.
//!
//! `MinkowskiVec<N>` lives in `E^{N,1}`: `N` space coordinates and one time
//! coordinate, with `⟨x,y⟩ = Σ xᵢyᵢ − x_t y_t`. The Klein model is the open
//! unit ball in `R^N`, reached from the hyperboloid by radial projection
//! `x ↦ x_space / x_t`.

use std::array;

use nalgebra::{DMatrix, Matrix4, Vector4};
use thiserror::Error;

/// Klein points within this distance of the unit sphere are snapped onto it.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector is not in the closed future cone (time coordinate {0} <= 0 or spacelike)")]
    NotFutureCone(f64),
    #[error("point lies outside the closed unit ball (norm {0})")]
    Exterior(f64),
    #[error("expected an interior point, found a boundary point")]
    NotInterior,
    #[error("decoration must be positive, found {0}")]
    BadDecoration(f64),
    #[error("expected {expected} decorations, found {found}")]
    DecorationCount { expected: usize, found: usize },
    #[error("matrix does not preserve the Minkowski form (deviation {0:e})")]
    NotLorentz(f64),
    #[error("matrix reverses time orientation")]
    TimeReversing,
    #[error("geodesic data violates orthonormality (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("degenerate simplex")]
    Degenerate,
    #[error("barycentric coordinates must be nonnegative, sum to 1, and match the vertex count")]
    BadBarycentric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkowskiVec<const N: usize> {
    pub space: [f64; N],
    pub time: f64,
}

pub type Vec31 = MinkowskiVec<3>;

/// Sign class of a vector under the Minkowski form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalType {
    Timelike,
    Lightlike,
    Spacelike,
}

impl<const N: usize> MinkowskiVec<N> {
    pub fn new(space: [f64; N], time: f64) -> Self {
        MinkowskiVec { space, time }
    }

    /// Builds a vector from `N + 1` coordinates, time last.
    pub fn from_slice(coords: &[f64]) -> Result<Self, GeometryError> {
        if coords.len() != N + 1 {
            return Err(GeometryError::DimensionMismatch { expected: N + 1, found: coords.len() });
        }
        Ok(MinkowskiVec { space: array::from_fn(|i| coords[i]), time: coords[N] })
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.space.to_vec();
        v.push(self.time);
        v
    }

    /// Hyperboloid basepoint `(0, …, 0, 1)`.
    pub fn origin() -> Self {
        MinkowskiVec { space: [0.0; N], time: 1.0 }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.space.iter().zip(&other.space).map(|(a, b)| a * b).sum::<f64>() - self.time * other.time
    }

    pub fn scale(&self, s: f64) -> Self {
        MinkowskiVec { space: self.space.map(|x| x * s), time: self.time * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        MinkowskiVec { space: array::from_fn(|i| self.space[i] + other.space[i]), time: self.time + other.time }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Classification with a relative tolerance on `⟨x,x⟩`.
    pub fn causal_type(&self, tol: f64) -> CausalType {
        let q = self.inner(self);
        let scale = self.time * self.time + self.space.iter().map(|x| x * x).sum::<f64>();
        if q.abs() <= tol * scale {
            CausalType::Lightlike
        } else if q < 0.0 {
            CausalType::Timelike
        } else {
            CausalType::Spacelike
        }
    }
}

/// `⟨x, y⟩` for coordinate slices with time last.
pub fn mink_inner(x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(GeometryError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len() - 1;
    Ok(x[..n].iter().zip(&y[..n]).map(|(a, b)| a * b).sum::<f64>() - x[n] * y[n])
}

/// Hyperbolic distance between two points of the hyperboloid.
///
/// Uses `2 asinh(|x−y|/2)` for nearby points, where `acosh(−⟨x,y⟩)` loses
/// half the digits.
pub fn hyperbolic_distance<const N: usize>(x: &MinkowskiVec<N>, y: &MinkowskiVec<N>) -> f64 {
    let c = -x.inner(y);
    if c < 2.0 {
        let d = x.sub(y);
        2.0 * (d.inner(&d).max(0.0).sqrt() / 2.0).asinh()
    } else {
        c.acosh()
    }
}

/// A point of the closed Klein ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KleinPoint<const N: usize> {
    coords: [f64; N],
    boundary: bool,
}

impl<const N: usize> KleinPoint<N> {
    /// Points with `|1 − |v|| < 1e-9` are snapped to the unit sphere.
    pub fn new(coords: [f64; N]) -> Result<Self, GeometryError> {
        let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1.0 + BOUNDARY_TOL {
            return Err(GeometryError::Exterior(norm));
        }
        if (1.0 - norm).abs() < BOUNDARY_TOL {
            Ok(KleinPoint { coords: coords.map(|x| x / norm), boundary: true })
        } else {
            Ok(KleinPoint { coords, boundary: false })
        }
    }

    pub fn coords(&self) -> [f64; N] {
        self.coords
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Radial projection `π(x) = x_space / x_time` onto the closed Klein ball.
pub fn radial_project<const N: usize>(x: &MinkowskiVec<N>) -> Result<KleinPoint<N>, GeometryError> {
    if !(x.time > 0.0) {
        return Err(GeometryError::NotFutureCone(x.time));
    }
    let p = x.space.map(|c| c / x.time);
    KleinPoint::new(p).map_err(|_| GeometryError::NotFutureCone(x.time))
}

/// The point of the hyperboloid projecting to `v`.
pub fn lift_interior<const N: usize>(v: &KleinPoint<N>) -> Result<MinkowskiVec<N>, GeometryError> {
    if v.boundary {
        return Err(GeometryError::NotInterior);
    }
    let r2: f64 = v.coords.iter().map(|x| x * x).sum();
    let time = 1.0 / (1.0 - r2).sqrt();
    Ok(MinkowskiVec { space: v.coords.map(|x| x * time), time })
}

/// Lightlike lift `d·(v, 1)` of a boundary point with decoration `d`.
pub fn lift_ideal<const N: usize>(v: &KleinPoint<N>, decoration: f64) -> Result<MinkowskiVec<N>, GeometryError> {
    if !v.boundary {
        return Err(GeometryError::Degenerate);
    }
    if !(decoration > 0.0) || !decoration.is_finite() {
        return Err(GeometryError::BadDecoration(decoration));
    }
    Ok(MinkowskiVec { space: v.coords.map(|x| x * decoration), time: decoration })
}

/// A straight simplex: the radial projection of the affine simplex on its
/// Minkowski lifts.
#[derive(Debug, Clone, PartialEq)]
pub struct StraightSimplex<const N: usize> {
    lifts: Vec<MinkowskiVec<N>>,
}

impl<const N: usize> StraightSimplex<N> {
    /// Straightening of `vertices`. Boundary vertices take their decoration
    /// from `decorations` (default 1); decorations of interior vertices are
    /// ignored but must still be positive.
    pub fn straighten(vertices: &[KleinPoint<N>], decorations: Option<&[f64]>) -> Result<Self, GeometryError> {
        if vertices.is_empty() || vertices.len() > N + 1 {
            return Err(GeometryError::Degenerate);
        }
        if let Some(d) = decorations {
            if d.len() != vertices.len() {
                return Err(GeometryError::DecorationCount { expected: vertices.len(), found: d.len() });
            }
        }
        let lifts = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = decorations.map_or(1.0, |d| d[i]);
                if !(d > 0.0) {
                    return Err(GeometryError::BadDecoration(d));
                }
                if v.is_boundary() {
                    lift_ideal(v, d)
                } else {
                    lift_interior(v)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StraightSimplex { lifts })
    }

    /// Simplex on explicit lifts in the closed future cone.
    pub fn from_lifts(lifts: Vec<MinkowskiVec<N>>) -> Result<Self, GeometryError> {
        if lifts.is_empty() {
            return Err(GeometryError::Degenerate);
        }
        for u in &lifts {
            if !(u.time > 0.0) || u.causal_type(1e-9) == CausalType::Spacelike {
                return Err(GeometryError::NotFutureCone(u.time));
            }
        }
        Ok(StraightSimplex { lifts })
    }

    pub fn lifts(&self) -> &[MinkowskiVec<N>] {
        &self.lifts
    }

    pub fn dimension(&self) -> usize {
        self.lifts.len() - 1
    }

    pub fn vertex(&self, i: usize) -> KleinPoint<N> {
        radial_project(&self.lifts[i]).expect("lifts lie in the future cone")
    }

    pub fn is_ideal(&self) -> bool {
        self.lifts.iter().all(|u| u.causal_type(1e-9) == CausalType::Lightlike)
    }

    pub fn is_compact(&self) -> bool {
        self.lifts.iter().all(|u| u.causal_type(1e-9) == CausalType::Timelike)
    }

    /// Point of the affine simplex `Σ tᵢ uᵢ`.
    pub fn affine_point(&self, bary: &[f64]) -> Result<MinkowskiVec<N>, GeometryError> {
        if bary.len() != self.lifts.len() || bary.iter().any(|&t| t < 0.0) {
            return Err(GeometryError::BadBarycentric);
        }
        let sum: f64 = bary.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GeometryError::BadBarycentric);
        }
        let mut p = MinkowskiVec { space: [0.0; N], time: 0.0 };
        for (t, u) in bary.iter().zip(&self.lifts) {
            p = p.add(&u.scale(*t));
        }
        Ok(p)
    }

    /// `π(Σ tᵢ uᵢ)`.
    pub fn evaluate(&self, bary: &[f64]) -> Result<KleinPoint<N>, GeometryError> {
        radial_project(&self.affine_point(bary)?)
    }

    /// The face spanned by the given vertex indices, with the same lifts.
    pub fn face(&self, indices: &[usize]) -> Self {
        StraightSimplex { lifts: indices.iter().map(|&i| self.lifts[i]).collect() }
    }

    pub fn apply_isometry(&self, g: &LorentzMap) -> Result<Self, GeometryError> {
        let lifts = self.lifts.iter().map(|u| g.apply(u)).collect::<Result<Vec<_>, _>>()?;
        Ok(StraightSimplex { lifts })
    }
}

/// A linear map of `E^{N,1}` preserving the Minkowski form and the future cone.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzMap {
    matrix: DMatrix<f64>,
}

impl LorentzMap {
    /// Checks `gᵀ J g = J` (within 1e-10) and time orientation.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, GeometryError> {
        let d = matrix.nrows();
        if d < 2 || matrix.ncols() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, found: matrix.ncols() });
        }
        let mut j = DMatrix::<f64>::identity(d, d);
        j[(d - 1, d - 1)] = -1.0;
        let dev = (matrix.transpose() * &j * &matrix - &j).abs().max();
        if !(dev < 1e-10) {
            return Err(GeometryError::NotLorentz(dev));
        }
        if matrix[(d - 1, d - 1)] <= 0.0 {
            return Err(GeometryError::TimeReversing);
        }
        Ok(LorentzMap { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        LorentzMap { matrix: DMatrix::identity(dim + 1, dim + 1) }
    }

    /// Boost of the given rapidity along a unit spatial direction of `E^{3,1}`.
    pub fn boost(direction: [f64; 3], rapidity: f64) -> Self {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = direction.map(|x| x / norm);
        let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
        let mut m = DMatrix::<f64>::identity(4, 4);
        for i in 0..3 {
            for k in 0..3 {
                m[(i, k)] += (ch - 1.0) * n[i] * n[k];
            }
            m[(i, 3)] = sh * n[i];
            m[(3, i)] = sh * n[i];
        }
        m[(3, 3)] = ch;
        LorentzMap { matrix: m }
    }

    /// Spatial rotation of `E^{3,1}` from a (not necessarily unit) quaternion `(w, x, y, z)`.
    pub fn rotation(q: [f64; 4]) -> Self {
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let [w, x, y, z] = q.map(|c| c / n);
        let r = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        let mut m = DMatrix::<f64>::identity(4, 4);
        for i in 0..3 {
            for k in 0..3 {
                m[(i, k)] = r[i][k];
            }
        }
        LorentzMap { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn compose(&self, other: &LorentzMap) -> LorentzMap {
        LorentzMap { matrix: &self.matrix * &other.matrix }
    }

    pub fn apply<const N: usize>(&self, x: &MinkowskiVec<N>) -> Result<MinkowskiVec<N>, GeometryError> {
        if self.matrix.nrows() != N + 1 {
            return Err(GeometryError::DimensionMismatch { expected: self.matrix.nrows(), found: N + 1 });
        }
        let coords = x.coords();
        let out: Vec<f64> =
            (0..=N).map(|i| (0..=N).map(|k| self.matrix[(i, k)] * coords[k]).sum()).collect();
        MinkowskiVec::from_slice(&out)
    }

    /// Action on the closed Klein ball.
    pub fn apply_klein<const N: usize>(&self, v: &KleinPoint<N>) -> Result<KleinPoint<N>, GeometryError> {
        radial_project(&self.apply(&MinkowskiVec { space: v.coords, time: 1.0 })?)
    }
}

/// `γ(t) = u cosh t + w sinh t`, the unit-speed geodesic from `u` in direction `w`.
pub fn geodesic_ray<const N: usize>(
    u: &MinkowskiVec<N>,
    w: &MinkowskiVec<N>,
    t: f64,
) -> Result<MinkowskiVec<N>, GeometryError> {
    check_geodesic_frame(u, w)?;
    Ok(u.scale(t.cosh()).add(&w.scale(t.sinh())))
}

pub(crate) fn check_geodesic_frame<const N: usize>(u: &MinkowskiVec<N>, w: &MinkowskiVec<N>) -> Result<(), GeometryError> {
    let dev = (u.inner(u) + 1.0).abs().max((w.inner(w) - 1.0).abs()).max(u.inner(w).abs());
    if !(dev <= 1e-10) || u.time <= 0.0 {
        return Err(GeometryError::NotOrthonormal(dev));
    }
    Ok(())
}

/// Edge order of [`dihedral_angles`], matching `triangulation::EDGE_SLOTS`.
const EDGE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Interior dihedral angles of a 3-simplex at edges `01, 02, 03, 12, 13, 23`.
///
/// The face opposite vertex `i` has the outward unit normal `nᵢ` with
/// `⟨nᵢ, uⱼ⟩ = 0` for `j ≠ i` and `⟨nᵢ, uᵢ⟩ < 0`; the angle at the edge shared
/// by faces `i` and `j` is `acos(−⟨nᵢ, nⱼ⟩)`.
pub fn dihedral_angles(s: &StraightSimplex<3>) -> Result<[f64; 6], GeometryError> {
    if s.lifts.len() != 4 {
        return Err(GeometryError::Degenerate);
    }
    // angles only depend on the rays, so normalize to the Klein section
    let cols: Vec<Vector4<f64>> = s
        .lifts
        .iter()
        .map(|u| Vector4::new(u.space[0] / u.time, u.space[1] / u.time, u.space[2] / u.time, 1.0))
        .collect();
    let m = Matrix4::from_columns(&cols);
    if m.determinant().abs() < 1e-14 {
        return Err(GeometryError::Degenerate);
    }
    let inv = m.try_inverse().ok_or(GeometryError::Degenerate)?;
    let j = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0));
    let normals: Vec<Vector4<f64>> = (0..4)
        .map(|i| {
            // row i of the inverse pairs to δᵢⱼ with the columns
            let r = inv.row(i).transpose();
            let n = -(j * r);
            let q = n.dot(&(j * n));
            if !(q > 0.0) {
                return Err(GeometryError::Degenerate);
            }
            Ok(n / q.sqrt())
        })
        .collect::<Result<_, _>>()?;
    let mut angles = [0.0; 6];
    for (slot, &(a, b)) in EDGE_PAIRS.iter().enumerate() {
        let (fi, fj) = match (a, b) {
            (0, 1) => (2, 3),
            (0, 2) => (1, 3),
            (0, 3) => (1, 2),
            (1, 2) => (0, 3),
            (1, 3) => (0, 2),
            _ => (0, 1),
        };
        let c = -normals[fi].dot(&(j * normals[fj]));
        angles[slot] = c.clamp(-1.0, 1.0).acos();
    }
    Ok(angles)
}
