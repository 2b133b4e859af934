//! Developing map over a fundamental domain and the holonomy representation
//! into PSL(2, C).

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::equations::{ComplexValue, EquationError, GluingSystem, ShapeAssignment};
use crate::shapes::{cross_ratio, IdealPoint, C64};
use crate::triangulation::{
    edge_classes, orientation_signs, quad_of_slot, slot_index, Orientation, Perm4, Triangulation, TriangulationError,
};

/// Chordal distance below which two developed vertices count as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error("triangulation is disconnected")]
    Disconnected,
    #[error("development of tetrahedron {tet} has coincident vertices")]
    Degenerate { tet: usize },
    #[error("three points defining a Möbius map are not distinct")]
    CoincidentTriple,
    #[error("base tetrahedron {0} out of range")]
    BadBase(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl MobiusMap {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        MobiusMap { a, b, c, d }
    }

    pub fn identity() -> Self {
        MobiusMap::new(one(), zero(), zero(), one())
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Scaled to determinant 1.
    pub fn normalized(&self) -> Result<Self, HolonomyError> {
        let det = self.det();
        let scale = self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm());
        if !(det.norm() > 1e-24 * scale * scale) || !det.norm().is_finite() {
            return Err(HolonomyError::CoincidentTriple);
        }
        let s = det.sqrt();
        Ok(MobiusMap::new(self.a / s, self.b / s, self.c / s, self.d / s))
    }

    pub fn apply(&self, x: IdealPoint) -> IdealPoint {
        match x {
            IdealPoint::Infinity => {
                if self.c == zero() {
                    IdealPoint::Infinity
                } else {
                    IdealPoint::Finite(self.a / self.c)
                }
            }
            IdealPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == zero() {
                    IdealPoint::Infinity
                } else {
                    IdealPoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Matrix product `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    /// Inverse of a determinant-1 matrix.
    pub fn inverse(&self) -> MobiusMap {
        MobiusMap::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn conj(&self) -> MobiusMap {
        MobiusMap::new(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Frobenius distance to `±I`, minimized over the sign.
    pub fn distance_to_identity(&self) -> f64 {
        let dist = |s: f64| {
            ((self.a - s).norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + (self.d - s).norm_sqr()).sqrt()
        };
        dist(1.0).min(dist(-1.0))
    }

    /// Frobenius distance between the maps as elements of PSL(2, C).
    pub fn distance(&self, other: &MobiusMap) -> f64 {
        let plus: f64 = self.entries().iter().zip(other.entries()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let minus: f64 = self.entries().iter().zip(other.entries()).map(|(x, y)| (x + y).norm_sqr()).sum();
        plus.min(minus).sqrt()
    }

    /// The map sending `p, q, r` to `0, 1, ∞`.
    pub fn normalizer(p: IdealPoint, q: IdealPoint, r: IdealPoint) -> Result<MobiusMap, HolonomyError> {
        use IdealPoint::{Finite as F, Infinity as Inf};
        if p.chordal_distance(&q) < COINCIDENCE_TOL
            || q.chordal_distance(&r) < COINCIDENCE_TOL
            || p.chordal_distance(&r) < COINCIDENCE_TOL
        {
            return Err(HolonomyError::CoincidentTriple);
        }
        let m = match (p, q, r) {
            (Inf, F(q), F(r)) => MobiusMap::new(zero(), q - r, one(), -r),
            (F(p), Inf, F(r)) => MobiusMap::new(one(), -p, one(), -r),
            (F(p), F(q), Inf) => MobiusMap::new(one(), -p, zero(), q - p),
            (F(p), F(q), F(r)) => MobiusMap::new(q - r, -p * (q - r), q - p, -r * (q - p)),
            _ => return Err(HolonomyError::CoincidentTriple),
        };
        m.normalized()
    }

    /// The unique map with `from[i] ↦ to[i]`.
    pub fn sending(from: [IdealPoint; 3], to: [IdealPoint; 3]) -> Result<MobiusMap, HolonomyError> {
        let nf = MobiusMap::normalizer(from[0], from[1], from[2])?;
        let nt = MobiusMap::normalizer(to[0], to[1], to[2])?;
        nt.inverse().compose(&nf).normalized()
    }

    pub fn to_json(&self) -> [[ComplexValue; 2]; 2] {
        let c = |z: C64| ComplexValue { re: z.re, im: z.im };
        [[c(self.a), c(self.b)], [c(self.c), c(self.d)]]
    }
}

/// A face of a tetrahedron, `(tet, face)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FaceRef {
    pub tet: usize,
    pub face: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Letter {
    pub generator: usize,
    /// `1` or `-1`.
    pub power: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    /// Canonical side of each non-tree face pair (the lexicographically smaller face).
    pub generators: Vec<FaceRef>,
    /// One word per edge class, in the cyclic order of the edge walk.
    pub relators: Vec<Vec<Letter>>,
    /// `tree[t][f]` when face `f` of `t` is a spanning-tree face.
    pub tree: Vec<[bool; 4]>,
    /// Generator and power for each non-tree face crossing.
    crossing: Vec<[Option<Letter>; 4]>,
}

impl Presentation {
    /// Letter read when leaving `tet` through `face`; `None` for tree faces.
    pub fn crossing_letter(&self, tet: usize, face: usize) -> Option<Letter> {
        self.crossing[tet][face]
    }

    /// Invariant factors of the abelianization: `0` stands for a free `Z`
    /// summand, entries greater than 1 for finite cyclic factors.
    pub fn abelian_invariants(&self) -> Vec<u64> {
        let rows: Vec<Vec<i128>> = self
            .relators
            .iter()
            .map(|word| {
                let mut row = vec![0i128; self.generators.len()];
                for l in word {
                    row[l.generator] += l.power as i128;
                }
                row
            })
            .collect();
        let diag = smith_diagonal(rows, self.generators.len());
        let mut out: Vec<u64> = diag.iter().filter(|&&d| d > 1).map(|&d| d as u64).collect();
        let rank = diag.iter().filter(|&&d| d != 0).count();
        out.extend(std::iter::repeat(0).take(self.generators.len() - rank));
        out
    }
}

/// Diagonal of the Smith normal form (absolute values, divisibility chain).
fn smith_diagonal(mut m: Vec<Vec<i128>>, cols: usize) -> Vec<i128> {
    let rows = m.len();
    let mut diag = Vec::new();
    let mut r0 = 0;
    let mut c0 = 0;
    while r0 < rows && c0 < cols {
        // pivot: smallest nonzero absolute value in the remaining block
        let mut pivot = None;
        for i in r0..rows {
            for j in c0..cols {
                if m[i][j] != 0 && pivot.map_or(true, |(pi, pj): (usize, usize)| m[i][j].abs() < m[pi][pj].abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(r0, pi);
        for row in m.iter_mut() {
            row.swap(c0, pj);
        }
        loop {
            let p = m[r0][c0];
            let mut changed = false;
            for i in (r0 + 1)..rows {
                let q = m[i][c0] / p;
                if q != 0 {
                    for j in c0..cols {
                        m[i][j] -= q * m[r0][j];
                    }
                }
                if m[i][c0] != 0 {
                    changed = true;
                }
            }
            for j in (c0 + 1)..cols {
                let q = m[r0][j] / p;
                if q != 0 {
                    for i in r0..rows {
                        m[i][j] -= q * m[i][c0];
                    }
                }
                if m[r0][j] != 0 {
                    changed = true;
                }
            }
            if !changed {
                // enforce divisibility of the remaining block by the pivot
                let bad = ((r0 + 1)..rows).find(|&i| ((c0 + 1)..cols).any(|j| m[i][j] % p != 0));
                match bad {
                    Some(i) => {
                        for j in c0..cols {
                            m[r0][j] += m[i][j];
                        }
                    }
                    None => break,
                }
            }
            // move the smallest nonzero entry of the pivot row/column into place
            let mut best = (r0, c0);
            for i in r0..rows {
                if m[i][c0] != 0 && m[i][c0].abs() < m[best.0][best.1].abs() {
                    best = (i, c0);
                }
            }
            for j in c0..cols {
                if m[r0][j] != 0 && m[r0][j].abs() < m[best.0][best.1].abs() {
                    best = (r0, j);
                }
            }
            m.swap(r0, best.0);
            for row in m.iter_mut() {
                row.swap(c0, best.1);
            }
        }
        diag.push(m[r0][c0].abs());
        r0 += 1;
        c0 += 1;
    }
    diag
}

/// Dual spanning tree (BFS from tetrahedron 0, faces in index order), one
/// generator per remaining face pair and one relator per edge class.
pub fn presentation(tri: &Triangulation) -> Result<Presentation, HolonomyError> {
    let n = tri.tet_count();
    let edges = edge_classes(tri)?;
    let mut tree = vec![[false; 4]; n];
    if n > 0 {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(t) = queue.pop_front() {
            for f in 0..4 {
                let g = tri.gluing(t, f).expect("closed");
                if !seen[g.tet] {
                    seen[g.tet] = true;
                    tree[t][f] = true;
                    tree[g.tet][g.perm.apply(f)] = true;
                    queue.push_back(g.tet);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(HolonomyError::Disconnected);
        }
    }
    let mut generators = Vec::new();
    let mut crossing = vec![[None; 4]; n];
    for t in 0..n {
        for f in 0..4 {
            if tree[t][f] || crossing[t][f].is_some() {
                continue;
            }
            let g = tri.gluing(t, f).expect("closed");
            let other = (g.tet, g.perm.apply(f));
            let id = generators.len();
            generators.push(FaceRef { tet: t, face: f });
            crossing[t][f] = Some(Letter { generator: id, power: 1 });
            if other != (t, f) {
                crossing[other.0][other.1] = Some(Letter { generator: id, power: -1 });
            }
        }
    }
    let relators = edges
        .iter()
        .map(|e| e.corners.iter().filter_map(|c| crossing[c.tet][c.exit_face]).collect())
        .collect();
    Ok(Presentation { generators, relators, tree, crossing })
}

/// Images of the four vertices of one lift of each tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct Development {
    pub base: usize,
    pub vertices: Vec<[IdealPoint; 4]>,
}

/// Shape on edge `(i, j)` equals `cross_ratio(v_i, v_j, v_k, v_l)` when
/// `(i, j, k, l)` is positively oriented in the manifold.
fn oriented_order(known: [usize; 3], missing: usize, orientation: Orientation) -> [usize; 4] {
    let [i, j, k] = known;
    let want_odd = orientation == Orientation::Negative;
    let p = Perm4::new([i, j, k, missing]).expect("distinct labels");
    if p.is_odd() == want_odd {
        [i, j, k, missing]
    } else {
        [j, i, k, missing]
    }
}

fn distinct(tet: usize, v: [IdealPoint; 4]) -> Result<[IdealPoint; 4], HolonomyError> {
    for a in 0..4 {
        for b in (a + 1)..4 {
            if v[a].chordal_distance(&v[b]) < COINCIDENCE_TOL {
                return Err(HolonomyError::Degenerate { tet });
            }
        }
    }
    Ok(v)
}

/// Fourth vertex from three placed ones and the shape of edge `(i, j)`.
fn place_fourth(vi: IdealPoint, vj: IdealPoint, vk: IdealPoint, shape: C64) -> Result<IdealPoint, HolonomyError> {
    // in coordinates with (v_i, v_j, v_k) = (0, 1, ∞) the fourth point is 1/(1 - z)
    let n = MobiusMap::normalizer(vi, vj, vk)?;
    let x = IdealPoint::Finite(one() / (one() - shape));
    Ok(n.inverse().apply(x))
}

/// Develops one lift of every tetrahedron, starting from `base` at
/// `(∞, 0, 1, ·)` and crossing only spanning-tree faces.
pub fn develop(
    tri: &Triangulation,
    pres: &Presentation,
    z: &ShapeAssignment,
    base: usize,
) -> Result<Development, HolonomyError> {
    let n = tri.tet_count();
    if base >= n {
        return Err(HolonomyError::BadBase(base));
    }
    let system = GluingSystem::from_triangulation(tri)?;
    let shapes = system.expand(z)?;
    let signs = orientation_signs(tri).ok_or(TriangulationError::NotOrientable)?;
    let edge_shape = |t: usize, i: usize, j: usize| shapes[3 * t + quad_of_slot(slot_index(i, j))];

    let mut verts: Vec<Option<[IdealPoint; 4]>> = vec![None; n];
    let fill = |t: usize, known: [(usize, IdealPoint); 3], missing: usize| -> Result<[IdealPoint; 4], HolonomyError> {
        let mut v = [IdealPoint::Infinity; 4];
        for (label, p) in known {
            v[label] = p;
        }
        let order = oriented_order(known.map(|(l, _)| l), missing, signs[t]);
        v[missing] = place_fourth(v[order[0]], v[order[1]], v[order[2]], edge_shape(t, order[0], order[1]))?;
        distinct(t, v)
    };
    // base at (∞, 0, 1, w): then cross_ratio(v₀, v₁, v₂, v₃) reproduces z exactly
    let z0 = edge_shape(base, 0, 1);
    let w = match signs[base] {
        Orientation::Positive => z0,
        Orientation::Negative => one() / z0,
    };
    let v = [IdealPoint::Infinity, IdealPoint::finite(0.0, 0.0), IdealPoint::finite(1.0, 0.0), IdealPoint::Finite(w)];
    verts[base] = Some(distinct(base, v)?);
    let mut queue = VecDeque::from([base]);
    while let Some(t) = queue.pop_front() {
        let vt = verts[t].expect("placed");
        for f in 0..4 {
            if !pres.tree[t][f] {
                continue;
            }
            let g = tri.gluing(t, f).expect("closed");
            if verts[g.tet].is_some() {
                continue;
            }
            let others: Vec<usize> = (0..4).filter(|&a| a != f).collect();
            let known = [0, 1, 2].map(|i| (g.perm.apply(others[i]), vt[others[i]]));
            verts[g.tet] = Some(fill(g.tet, known, g.perm.apply(f))?);
            queue.push_back(g.tet);
        }
    }
    Ok(Development { base, vertices: verts.into_iter().map(|v| v.expect("connected")).collect() })
}

impl Development {
    /// Largest `|cross-ratio − shape|` over all tetrahedra and edges.
    pub fn max_cross_ratio_error(&self, tri: &Triangulation, z: &ShapeAssignment) -> Result<f64, HolonomyError> {
        let system = GluingSystem::from_triangulation(tri)?;
        let shapes = system.expand(z)?;
        let signs = orientation_signs(tri).ok_or(TriangulationError::NotOrientable)?;
        let mut worst = 0.0f64;
        for (t, v) in self.vertices.iter().enumerate() {
            for p in Perm4::all() {
                if p.is_odd() != (signs[t] == Orientation::Negative) {
                    continue;
                }
                let [i, j, k, l] = p.images();
                let cr = cross_ratio(v[i], v[j], v[k], v[l]).map_err(|_| HolonomyError::Degenerate { tet: t })?;
                let want = shapes[3 * t + quad_of_slot(slot_index(i, j))];
                worst = worst.max((cr - want).norm() / want.norm().max(1.0));
            }
        }
        Ok(worst)
    }

    pub fn conj(&self) -> Development {
        Development {
            base: self.base,
            vertices: self.vertices.iter().map(|v| v.map(|p| p.conj())).collect(),
        }
    }
}

/// For each generator `(t, f)` glued to `(u, g)`, the map carrying the
/// developed face of `u` onto the developed face of `t`.
pub fn generator_maps(
    tri: &Triangulation,
    pres: &Presentation,
    dev: &Development,
) -> Result<Vec<MobiusMap>, HolonomyError> {
    pres.generators
        .iter()
        .map(|fr| {
            let g = tri.gluing(fr.tet, fr.face).expect("closed");
            let others: Vec<usize> = (0..4).filter(|&a| a != fr.face).collect();
            let to = [0, 1, 2].map(|i| dev.vertices[fr.tet][others[i]]);
            let from = [0, 1, 2].map(|i| dev.vertices[g.tet][g.perm.apply(others[i])]);
            MobiusMap::sending(from, to)
        })
        .collect()
}

/// Product of a word, letters applied in walk order.
pub fn evaluate_word(word: &[Letter], gens: &[MobiusMap]) -> MobiusMap {
    word.iter().fold(MobiusMap::identity(), |acc, l| {
        let g = gens[l.generator];
        acc.compose(&if l.power > 0 { g } else { g.inverse() })
    })
}

/// Distance to `±I` of each relator.
pub fn relator_deviations(pres: &Presentation, gens: &[MobiusMap]) -> Vec<f64> {
    pres.relators.iter().map(|w| evaluate_word(w, gens).distance_to_identity()).collect()
}

pub fn verify_relators(pres: &Presentation, gens: &[MobiusMap]) -> f64 {
    relator_deviations(pres, gens).into_iter().fold(0.0, f64::max)
}

/// Trace up to sign, normalized to `Re ≥ 0` (ties: `Im ≥ 0`).
pub fn canonical_trace(m: &MobiusMap) -> C64 {
    let t = m.trace();
    if t.re < 0.0 || (t.re == 0.0 && t.im < 0.0) {
        -t
    } else {
        t
    }
}

/// Traces of the generators followed by traces of `g_i g_j` for `i < j`.
pub fn characters(gens: &[MobiusMap]) -> Vec<C64> {
    let mut out: Vec<C64> = gens.iter().map(canonical_trace).collect();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            out.push(canonical_trace(&gens[i].compose(&gens[j])));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorJson {
    pub face: FaceRef,
    pub matrix: [[ComplexValue; 2]; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomyReport {
    pub base: usize,
    pub generators: Vec<GeneratorJson>,
    pub relators: Vec<Vec<Letter>>,
    pub relator_deviations: Vec<f64>,
    pub max_deviation: f64,
    pub characters: Vec<ComplexValue>,
    pub abelian_invariants: Vec<u64>,
}

/// Full pipeline: presentation, development from `base`, generator maps,
/// relator check and characters.
pub fn holonomy_report(tri: &Triangulation, z: &ShapeAssignment, base: usize) -> Result<HolonomyReport, HolonomyError> {
    let pres = presentation(tri)?;
    let dev = develop(tri, &pres, z, base)?;
    let gens = generator_maps(tri, &pres, &dev)?;
    let deviations = relator_deviations(&pres, &gens);
    Ok(HolonomyReport {
        base,
        generators: pres
            .generators
            .iter()
            .zip(&gens)
            .map(|(f, g)| GeneratorJson { face: *f, matrix: g.to_json() })
            .collect(),
        relators: pres.relators.clone(),
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        relator_deviations: deviations,
        characters: characters(&gens).into_iter().map(|c| ComplexValue { re: c.re, im: c.im }).collect(),
        abelian_invariants: pres.abelian_invariants(),
    })
}
