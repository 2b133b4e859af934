//! Gluing equations in one complex unknown per tetrahedron.
//!
//! Each tetrahedron carries `z` on quad 0 (edges `01|23`); the quads `τ0` and
//! `τ²0` carry `1/(1-z)` and `(z-1)/z`. The equation of edge `e` is
//! `Π_σ z^a (1/(1-z))^b ((z-1)/z)^c = 1`, where `(a, b, c)` are the gluing
//! matrix entries of the quads `(0, τ0, τ²0)` of `σ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shapes::{shape_triple, ShapeError, C64};
use crate::triangulation::{
    edge_classes, gluing_matrix, quad_classes_and_tau, Orientation, Tau, Triangulation, TriangulationError,
};

/// Expanded quad shapes must stay within `[1e-12, 1e12]` in modulus.
pub const OVERFLOW_BOUND: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquationError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error("shape assignment has {found} entries, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("quad shape {0} outside the range [1e-12, 1e12]")]
    Overflow(C64),
}

/// One complex shape per tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeAssignment(pub Vec<C64>);

impl ShapeAssignment {
    pub fn new(shapes: Vec<C64>) -> Self {
        ShapeAssignment(shapes)
    }

    pub fn shapes(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn conj(&self) -> Self {
        ShapeAssignment(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Largest per-tetrahedron distance to `other`.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_serial(&self) -> Vec<ComplexValue> {
        self.0.iter().map(|z| ComplexValue { re: z.re, im: z.im }).collect()
    }

    pub fn from_serial(values: &[ComplexValue]) -> Self {
        ShapeAssignment(values.iter().map(|v| C64::new(v.re, v.im)).collect())
    }
}

/// JSON form of a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

/// Per-tetrahedron classification by the sign of `Im z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TetClass {
    Positive,
    Flat,
    Negative,
}

/// `|Im z|` at or below this counts as flat.
pub const FLAT_TOL: f64 = 1e-9;

pub fn classify(z: C64) -> TetClass {
    if z.im > FLAT_TOL {
        TetClass::Positive
    } else if z.im < -FLAT_TOL {
        TetClass::Negative
    } else {
        TetClass::Flat
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GluingSystem {
    tets: usize,
    edges: usize,
    /// `exponents[e][σ] = (a, b, c)`.
    exponents: Vec<Vec<[u8; 3]>>,
    tau: Vec<Tau>,
}

impl GluingSystem {
    pub fn from_triangulation(tri: &Triangulation) -> Result<Self, EquationError> {
        let edges = edge_classes(tri)?;
        let (_, tau) = quad_classes_and_tau(tri)?;
        let matrix = gluing_matrix(tri, &edges);
        let exponents = (0..edges.len())
            .map(|e| {
                (0..tri.tet_count())
                    .map(|t| tau[t].orbit().map(|q| matrix.get(e, 3 * t + q)))
                    .collect()
            })
            .collect();
        Ok(GluingSystem { tets: tri.tet_count(), edges: edges.len(), exponents, tau })
    }

    /// Direct construction from exponent triples, all tetrahedra positive.
    pub fn from_exponents(tets: usize, exponents: Vec<Vec<[u8; 3]>>) -> Self {
        assert!(exponents.iter().all(|row| row.len() == tets));
        GluingSystem {
            tets,
            edges: exponents.len(),
            exponents,
            tau: vec![Tau::for_orientation(Orientation::Positive); tets],
        }
    }

    /// Block-diagonal union of two systems sharing no edges or tetrahedra.
    pub fn block(a: &GluingSystem, b: &GluingSystem) -> GluingSystem {
        let tets = a.tets + b.tets;
        let mut exponents = Vec::with_capacity(a.edges + b.edges);
        for row in &a.exponents {
            let mut r = row.clone();
            r.resize(tets, [0; 3]);
            exponents.push(r);
        }
        for row in &b.exponents {
            let mut r = vec![[0; 3]; a.tets];
            r.extend_from_slice(row);
            exponents.push(r);
        }
        let mut tau = a.tau.clone();
        tau.extend_from_slice(&b.tau);
        GluingSystem { tets, edges: a.edges + b.edges, exponents, tau }
    }

    pub fn tet_count(&self) -> usize {
        self.tets
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn exponents(&self, edge: usize, tet: usize) -> [u8; 3] {
        self.exponents[edge][tet]
    }

    pub fn tau(&self) -> &[Tau] {
        &self.tau
    }

    fn check_len(&self, z: &ShapeAssignment) -> Result<(), EquationError> {
        if z.len() != self.tets {
            return Err(EquationError::WrongLength { expected: self.tets, found: z.len() });
        }
        Ok(())
    }

    /// Per-quad shapes, indexed `3σ + q`.
    pub fn expand(&self, z: &ShapeAssignment) -> Result<Vec<C64>, EquationError> {
        self.check_len(z)?;
        let mut out = vec![C64::new(0.0, 0.0); 3 * self.tets];
        for (t, &zt) in z.shapes().iter().enumerate() {
            let triple = shape_triple(zt)?;
            for (k, q) in self.tau[t].orbit().into_iter().enumerate() {
                out[3 * t + q] = triple[k];
            }
        }
        Ok(out)
    }

    fn triples(&self, z: &ShapeAssignment) -> Result<Vec<[C64; 3]>, EquationError> {
        self.check_len(z)?;
        z.shapes()
            .iter()
            .map(|&zt| {
                let t = shape_triple(zt)?;
                for w in t {
                    let m = w.norm();
                    if !(m >= 1.0 / OVERFLOW_BOUND && m <= OVERFLOW_BOUND) {
                        return Err(EquationError::Overflow(w));
                    }
                }
                Ok(t)
            })
            .collect()
    }

    fn products(&self, triples: &[[C64; 3]]) -> Vec<C64> {
        self.exponents
            .iter()
            .map(|row| {
                let mut p = C64::new(1.0, 0.0);
                for (t, exps) in row.iter().enumerate() {
                    for k in 0..3 {
                        if exps[k] > 0 {
                            p *= triples[t][k].powi(exps[k] as i32);
                        }
                    }
                }
                p
            })
            .collect()
    }

    /// `r_e = Π z_q^{i(q,e)} − 1`.
    pub fn residual(&self, z: &ShapeAssignment) -> Result<Vec<C64>, EquationError> {
        let triples = self.triples(z)?;
        Ok(self.products(&triples).into_iter().map(|p| p - 1.0).collect())
    }

    pub fn max_residual(&self, z: &ShapeAssignment) -> Result<f64, EquationError> {
        Ok(self.residual(z)?.iter().map(|r| r.norm()).fold(0.0, f64::max))
    }

    /// `∂r_e/∂z_σ = P_e · (a/z + b/(1−z) + c/(z(z−1)))`.
    pub fn jacobian(&self, z: &ShapeAssignment) -> Result<DMatrix<C64>, EquationError> {
        let triples = self.triples(z)?;
        let products = self.products(&triples);
        let one = C64::new(1.0, 0.0);
        let logder: Vec<[C64; 3]> =
            z.shapes().iter().map(|&w| [one / w, one / (one - w), one / (w * (w - one))]).collect();
        Ok(DMatrix::from_fn(self.edges, self.tets, |e, t| {
            let [a, b, c] = self.exponents[e][t].map(|x| x as f64);
            let d = logder[t];
            products[e] * (d[0] * a + d[1] * b + d[2] * c)
        }))
    }

    pub fn angle_report(&self, z: &ShapeAssignment) -> Result<AngleReport, EquationError> {
        let triples = self.triples(z)?;
        let edges = self
            .exponents
            .iter()
            .map(|row| {
                let total: f64 = row
                    .iter()
                    .zip(&triples)
                    .map(|(exps, tri)| (0..3).map(|k| exps[k] as f64 * tri[k].arg()).sum::<f64>())
                    .sum();
                let mut reduced = total.rem_euclid(2.0 * PI);
                if reduced > PI {
                    reduced -= 2.0 * PI;
                }
                EdgeAngle { total, reduced }
            })
            .collect();
        let tets = z.shapes().iter().map(|&w| classify(w)).collect();
        Ok(AngleReport { edges, tets })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeAngle {
    /// Sum of principal arguments weighted by `i(q, e)`.
    pub total: f64,
    /// `total` reduced into `(−π, π]`.
    pub reduced: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleReport {
    pub edges: Vec<EdgeAngle>,
    pub tets: Vec<TetClass>,
}
