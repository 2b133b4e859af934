//! Semi-simplicial triangulations of closed oriented 3-manifolds.
//!
//! A triangulation is a set of tetrahedra with vertex labels `0..4` and face
//! pairings. Face `f` of a tetrahedron is the triangle opposite vertex `f`, and
//! the permutation attached to a gluing maps the vertex labels of the source
//! tetrahedron to the labels of the target tetrahedron.
//!
//! Everything derived here (vertex classes, edge cycles, normal quadrilaterals
//! and the gluing matrix) is computed from the face pairings alone.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The six edge slots of a tetrahedron, in the order used throughout the crate.
pub const EDGE_SLOTS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Slot index of the edge joining vertices `a` and `b` (in either order).
pub fn slot_index(a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    match (lo, hi) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("invalid edge ({a}, {b})"),
    }
}

/// Slot of the edge opposite `slot`.
pub fn opposite_slot(slot: usize) -> usize {
    5 - slot
}

/// Normal quadrilateral facing the edge in `slot`: `01|23 -> 0`, `02|13 -> 1`,
/// `03|12 -> 2`.
pub fn quad_of_slot(slot: usize) -> usize {
    slot.min(5 - slot)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TriangulationError {
    #[error("malformed triangulation document: {0}")]
    Malformed(String),
    #[error("tetrahedron {tet}: expected 4 face records, found {found} (face index out of range)")]
    FaceOutOfRange { tet: usize, found: usize },
    #[error("tetrahedron {tet} face {face}: target tetrahedron {target} out of range")]
    TargetOutOfRange { tet: usize, face: usize, target: usize },
    #[error("tetrahedron {tet} face {face}: permutation {perm:?} is not a bijection of {{0,1,2,3}}")]
    NotBijection { tet: usize, face: usize, perm: Vec<i64> },
    #[error("face multiply glued: tetrahedron {tet} face {face} is the target of more than one gluing")]
    FaceMultiplyGlued { tet: usize, face: usize },
    #[error("declared {declared} tetrahedra but found {found} gluing rows")]
    CountMismatch { declared: usize, found: usize },
    #[error("triangulation is not closed (tetrahedron {tet} face {face})")]
    NotClosed { tet: usize, face: usize },
    #[error("inconsistent edge cycle starting at tetrahedron {tet} slot {slot}")]
    InconsistentEdgeCycle { tet: usize, slot: usize },
    #[error("triangulation is not orientable")]
    NotOrientable,
    #[error("triangulation is not connected")]
    Disconnected,
}

/// A permutation of `{0,1,2,3}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm4([u8; 4]);

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4([0, 1, 2, 3]);

    pub fn new(images: [usize; 4]) -> Option<Perm4> {
        let mut seen = [false; 4];
        for &i in &images {
            if i > 3 || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(Perm4(images.map(|i| i as u8)))
    }

    /// Transposition of `a` and `b`.
    pub fn swap(a: usize, b: usize) -> Perm4 {
        let mut p = [0u8, 1, 2, 3];
        p.swap(a, b);
        Perm4(p)
    }

    #[inline]
    pub fn apply(self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn images(self) -> [usize; 4] {
        self.0.map(|i| i as usize)
    }

    pub fn inverse(self) -> Perm4 {
        let mut inv = [0u8; 4];
        for (i, &img) in self.0.iter().enumerate() {
            inv[img as usize] = i as u8;
        }
        Perm4(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(self, other: Perm4) -> Perm4 {
        Perm4(other.0.map(|i| self.0[i as usize]))
    }

    /// +1 for even permutations, -1 for odd ones.
    pub fn sign(self) -> i32 {
        let mut inversions = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_odd(self) -> bool {
        self.sign() < 0
    }

    /// All 24 permutations in lexicographic order.
    pub fn all() -> impl Iterator<Item = Perm4> {
        (0..4usize).flat_map(|a| {
            (0..4usize).flat_map(move |b| {
                (0..4usize).flat_map(move |c| {
                    (0..4usize).filter_map(move |d| Perm4::new([a, b, c, d]))
                })
            })
        })
    }

    /// Lexicographic rank in `0..24`.
    pub fn rank(self) -> usize {
        let mut rank = 0;
        let mut used = [false; 4];
        let factorial = [6, 2, 1, 1];
        for (pos, &img) in self.0.iter().enumerate() {
            let smaller_unused = (0..img as usize).filter(|&k| !used[k]).count();
            rank += smaller_unused * factorial[pos];
            used[img as usize] = true;
        }
        rank
    }
}

impl fmt::Debug for Perm4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}{}", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

/// Where a face is glued to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gluing {
    pub tet: usize,
    pub perm: Perm4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    gluings: Vec<[Option<Gluing>; 4]>,
}

#[derive(Serialize, Deserialize)]
struct RawGluing {
    tet: usize,
    perm: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct RawTriangulation {
    tets: usize,
    gluings: Vec<Vec<Option<RawGluing>>>,
}

impl Triangulation {
    /// Builds a triangulation from per-tetrahedron gluing records. Only the
    /// "face multiply glued" condition is checked here; see [`validate`].
    pub fn from_gluings(gluings: Vec<[Option<Gluing>; 4]>) -> Result<Self, TriangulationError> {
        let n = gluings.len();
        let mut hit: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for (t, row) in gluings.iter().enumerate() {
            for (f, g) in row.iter().enumerate() {
                let Some(g) = g else { continue };
                if g.tet >= n {
                    return Err(TriangulationError::TargetOutOfRange { tet: t, face: f, target: g.tet });
                }
                let target = (g.tet, g.perm.apply(f));
                if let Some(prev) = hit.insert(target, (t, f)) {
                    if prev != (t, f) {
                        return Err(TriangulationError::FaceMultiplyGlued { tet: target.0, face: target.1 });
                    }
                }
            }
        }
        Ok(Triangulation { gluings })
    }

    pub fn empty() -> Self {
        Triangulation { gluings: Vec::new() }
    }

    pub fn tet_count(&self) -> usize {
        self.gluings.len()
    }

    pub fn gluing(&self, tet: usize, face: usize) -> Option<Gluing> {
        self.gluings[tet][face]
    }

    pub fn gluings(&self) -> &[[Option<Gluing>; 4]] {
        &self.gluings
    }

    pub fn to_json(&self) -> String {
        let mut out = format!("{{\"tets\": {}, \"gluings\": [", self.tet_count());
        for (t, row) in self.gluings.iter().enumerate() {
            out.push_str(if t == 0 { "\n  [" } else { ",\n  [" });
            for (f, g) in row.iter().enumerate() {
                if f > 0 {
                    out.push_str(", ");
                }
                match g {
                    Some(g) => {
                        let p = g.perm.images();
                        out.push_str(&format!(
                            "{{\"tet\": {}, \"perm\": [{}, {}, {}, {}]}}",
                            g.tet, p[0], p[1], p[2], p[3]
                        ));
                    }
                    None => out.push_str("null"),
                }
            }
            out.push(']');
        }
        out.push_str(if self.gluings.is_empty() { "]}\n" } else { "\n]}\n" });
        out
    }
}

pub fn parse_triangulation(text: &str) -> Result<Triangulation, TriangulationError> {
    let raw: RawTriangulation =
        serde_json::from_str(text).map_err(|e| TriangulationError::Malformed(e.to_string()))?;
    if raw.gluings.len() != raw.tets {
        return Err(TriangulationError::CountMismatch { declared: raw.tets, found: raw.gluings.len() });
    }
    let mut gluings = Vec::with_capacity(raw.tets);
    for (t, row) in raw.gluings.into_iter().enumerate() {
        if row.len() != 4 {
            return Err(TriangulationError::FaceOutOfRange { tet: t, found: row.len() });
        }
        let mut out = [None; 4];
        for (f, rec) in row.into_iter().enumerate() {
            let Some(rec) = rec else { continue };
            let bad = || TriangulationError::NotBijection { tet: t, face: f, perm: rec.perm.clone() };
            if rec.perm.len() != 4 || rec.perm.iter().any(|&i| !(0..4).contains(&i)) {
                return Err(bad());
            }
            let images = [rec.perm[0], rec.perm[1], rec.perm[2], rec.perm[3]].map(|i| i as usize);
            let perm = Perm4::new(images).ok_or_else(bad)?;
            out[f] = Some(Gluing { tet: rec.tet, perm });
        }
        gluings.push(out);
    }
    Triangulation::from_gluings(gluings)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller root so class numbering follows first appearance
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Dense class ids in order of first appearance.
    fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut id_of_root = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for x in 0..n {
            let r = self.find(x);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            labels[x] = id_of_root[r];
        }
        (labels, next)
    }
}

/// Vertex classes: `result[t][v]` is the class id of vertex `v` of tetrahedron `t`.
pub fn vertex_classes(tri: &Triangulation) -> (Vec<[usize; 4]>, usize) {
    let n = tri.tet_count();
    let mut uf = UnionFind::new(4 * n);
    for t in 0..n {
        for f in 0..4 {
            if let Some(g) = tri.gluing(t, f) {
                for v in (0..4).filter(|&v| v != f) {
                    uf.union(4 * t + v, 4 * g.tet + g.perm.apply(v));
                }
            }
        }
    }
    let (labels, count) = uf.labels();
    let classes = (0..n).map(|t| [labels[4 * t], labels[4 * t + 1], labels[4 * t + 2], labels[4 * t + 3]]).collect();
    (classes, count)
}

/// Edge classes by union-find over the 6n edge slots; works on open triangulations.
fn edge_slot_classes(tri: &Triangulation) -> (Vec<[usize; 6]>, usize) {
    let n = tri.tet_count();
    let mut uf = UnionFind::new(6 * n);
    for t in 0..n {
        for f in 0..4 {
            if let Some(g) = tri.gluing(t, f) {
                for (s, &(a, b)) in EDGE_SLOTS.iter().enumerate() {
                    if a != f && b != f {
                        let s2 = slot_index(g.perm.apply(a), g.perm.apply(b));
                        uf.union(6 * t + s, 6 * g.tet + s2);
                    }
                }
            }
        }
    }
    let (labels, count) = uf.labels();
    let classes = (0..n).map(|t| std::array::from_fn(|s| labels[6 * t + s])).collect();
    (classes, count)
}

/// Relative orientation of each tetrahedron's vertex labeling, propagated from
/// tetrahedron 0 of each component. `None` if no coherent choice exists.
pub fn orientation_signs(tri: &Triangulation) -> Option<Vec<Orientation>> {
    let n = tri.tet_count();
    let mut sign: Vec<Option<i32>> = vec![None; n];
    for root in 0..n {
        if sign[root].is_some() {
            continue;
        }
        sign[root] = Some(1);
        let mut queue = VecDeque::from([root]);
        while let Some(t) = queue.pop_front() {
            let st = sign[t].unwrap();
            for f in 0..4 {
                let Some(g) = tri.gluing(t, f) else { continue };
                // odd gluing keeps the labeling orientation
                let expected = if g.perm.is_odd() { st } else { -st };
                match sign[g.tet] {
                    None => {
                        sign[g.tet] = Some(expected);
                        queue.push_back(g.tet);
                    }
                    Some(s) if s != expected => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(
        sign.into_iter()
            .map(|s| if s == Some(1) { Orientation::Positive } else { Orientation::Negative })
            .collect(),
    )
}

fn is_connected(tri: &Triangulation) -> bool {
    let n = tri.tet_count();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    let mut count = 1;
    while let Some(t) = queue.pop_front() {
        for f in 0..4 {
            if let Some(g) = tri.gluing(t, f) {
                if !seen[g.tet] {
                    seen[g.tet] = true;
                    count += 1;
                    queue.push_back(g.tet);
                }
            }
        }
    }
    count == n
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tets: usize,
    pub faces: usize,
    pub edges: usize,
    pub vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexLink {
    pub vertex: usize,
    pub euler_characteristic: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub closed: bool,
    pub oriented: bool,
    pub orientable: bool,
    pub connected: bool,
    pub counts: Counts,
    pub links: Vec<VertexLink>,
    pub all_links_spheres: bool,
    /// Edges whose two endpoints are the same vertex class. Such edges may be
    /// inessential; barycentric subdivision removes them.
    pub loop_edges: Vec<usize>,
}

impl ValidationReport {
    /// Closed, oriented, and every vertex link a 2-sphere.
    pub fn is_valid(&self) -> bool {
        self.closed && self.oriented && self.all_links_spheres
    }
}

pub fn validate(tri: &Triangulation) -> ValidationReport {
    let n = tri.tet_count();
    let mut closed = true;
    let mut oriented = true;
    let mut faces = 0usize;
    for t in 0..n {
        for f in 0..4 {
            match tri.gluing(t, f) {
                None => {
                    closed = false;
                    faces += 2; // counted as half a glued pair below
                }
                Some(g) => {
                    faces += 1;
                    let back = tri.gluing(g.tet, g.perm.apply(f));
                    let involutive = back == Some(Gluing { tet: t, perm: g.perm.inverse() });
                    let self_glued = g.tet == t && g.perm.apply(f) == f;
                    if !involutive || self_glued {
                        closed = false;
                    }
                    if !g.perm.is_odd() {
                        oriented = false;
                    }
                }
            }
        }
    }
    let faces = faces / 2;

    let (vclass, vcount) = vertex_classes(tri);
    let (eclass, ecount) = edge_slot_classes(tri);

    // Link of a vertex class: one triangle per tetrahedron corner, one edge per
    // face corner, one vertex per incident edge end.
    let mut link_tris = vec![0i64; vcount];
    let mut link_edges_twice = vec![0i64; vcount];
    let mut link_verts = vec![0i64; vcount];
    for t in 0..n {
        for v in 0..4 {
            link_tris[vclass[t][v]] += 1;
            for f in (0..4).filter(|&f| f != v) {
                // glued faces are seen from both sides
                link_edges_twice[vclass[t][v]] += if tri.gluing(t, f).is_some() { 1 } else { 2 };
            }
        }
    }
    let mut edge_rep: Vec<Option<(usize, usize)>> = vec![None; ecount];
    for t in 0..n {
        for s in 0..6 {
            edge_rep[eclass[t][s]].get_or_insert((t, s));
        }
    }
    let mut loop_edges = Vec::new();
    for (e, rep) in edge_rep.iter().enumerate() {
        let (t, s) = rep.expect("every edge class has a slot");
        let (a, b) = EDGE_SLOTS[s];
        link_verts[vclass[t][a]] += 1;
        link_verts[vclass[t][b]] += 1;
        if vclass[t][a] == vclass[t][b] {
            loop_edges.push(e);
        }
    }
    let links: Vec<VertexLink> = (0..vcount)
        .map(|v| VertexLink {
            vertex: v,
            euler_characteristic: link_verts[v] - link_edges_twice[v] / 2 + link_tris[v],
        })
        .collect();
    let all_links_spheres = links.iter().all(|l| l.euler_characteristic == 2);

    ValidationReport {
        closed,
        oriented,
        orientable: orientation_signs(tri).is_some(),
        connected: is_connected(tri),
        counts: Counts { tets: n, faces, edges: ecount, vertices: vcount },
        links,
        all_links_spheres,
        loop_edges,
    }
}

fn require_closed(tri: &Triangulation) -> Result<(), TriangulationError> {
    for t in 0..tri.tet_count() {
        for f in 0..4 {
            let Some(g) = tri.gluing(t, f) else {
                return Err(TriangulationError::NotClosed { tet: t, face: f });
            };
            let back = tri.gluing(g.tet, g.perm.apply(f));
            if back != Some(Gluing { tet: t, perm: g.perm.inverse() }) || (g.tet == t && g.perm.apply(f) == f) {
                return Err(TriangulationError::NotClosed { tet: t, face: f });
            }
        }
    }
    Ok(())
}

/// One tetrahedron edge seen as part of an edge class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCorner {
    pub tet: usize,
    pub slot: usize,
    /// True when the class direction runs from the lower to the higher vertex label.
    pub forward: bool,
    /// Face crossed when moving to the next corner of the cycle.
    pub exit_face: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeClass {
    pub id: usize,
    pub corners: Vec<EdgeCorner>,
    /// Vertex classes at the tail and head of the edge.
    pub endpoints: (usize, usize),
}

impl EdgeClass {
    pub fn valence(&self) -> usize {
        self.corners.len()
    }

    pub fn is_loop(&self) -> bool {
        self.endpoints.0 == self.endpoints.1
    }
}

/// Edge classes with corners in cyclic order around each edge.
pub fn edge_classes(tri: &Triangulation) -> Result<Vec<EdgeClass>, TriangulationError> {
    require_closed(tri)?;
    let n = tri.tet_count();
    let (vclass, _) = vertex_classes(tri);
    let mut assigned = vec![[false; 6]; n];
    let mut classes = Vec::new();
    for t0 in 0..n {
        for s0 in 0..6 {
            if assigned[t0][s0] {
                continue;
            }
            let (a0, b0) = EDGE_SLOTS[s0];
            let (c0, d0) = EDGE_SLOTS[opposite_slot(s0)];
            let start = (t0, [a0, b0, c0, d0]);
            let mut cur = start;
            let mut corners = Vec::new();
            loop {
                let (t, [a, b, c, d]) = cur;
                let slot = slot_index(a, b);
                if corners.len() > 6 * n || assigned[t][slot] {
                    return Err(TriangulationError::InconsistentEdgeCycle { tet: t0, slot: s0 });
                }
                assigned[t][slot] = true;
                corners.push(EdgeCorner { tet: t, slot, forward: a < b, exit_face: d });
                let g = tri.gluing(t, d).expect("closed");
                let p = g.perm;
                cur = (g.tet, [p.apply(a), p.apply(b), p.apply(d), p.apply(c)]);
                if cur.0 == t0 && slot_index(cur.1[0], cur.1[1]) == s0 {
                    if cur != start {
                        return Err(TriangulationError::InconsistentEdgeCycle { tet: t0, slot: s0 });
                    }
                    break;
                }
            }
            classes.push(EdgeClass {
                id: classes.len(),
                corners,
                endpoints: (vclass[t0][a0], vclass[t0][b0]),
            });
        }
    }
    Ok(classes)
}

/// Orientation of a tetrahedron's vertex labeling relative to the manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

/// The cyclic order τ on the three normal quadrilaterals of one tetrahedron.
///
/// For a positively labeled tetrahedron `τ = (0 1 2)`, so the shape on
/// `02|13` is `1/(1-z)` where `z` sits on `01|23`. Reversing the labeling
/// orientation inverts the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tau(Orientation);

impl Tau {
    pub fn for_orientation(orientation: Orientation) -> Self {
        Tau(orientation)
    }

    pub fn orientation(self) -> Orientation {
        self.0
    }

    pub fn apply(self, q: usize) -> usize {
        match self.0 {
            Orientation::Positive => (q + 1) % 3,
            Orientation::Negative => (q + 2) % 3,
        }
    }

    pub fn inverse(self) -> Tau {
        Tau(self.0.reversed())
    }

    /// Quads in the order `(q0, τ q0, τ² q0)` starting from quad 0.
    pub fn orbit(self) -> [usize; 3] {
        [0, self.apply(0), self.apply(self.apply(0))]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadClass {
    pub tet: usize,
    pub q: usize,
    /// The two opposite edge slots this quad faces.
    pub faced: [usize; 2],
}

impl QuadClass {
    /// Column index in the gluing matrix.
    pub fn column(&self) -> usize {
        3 * self.tet + self.q
    }
}

pub fn quad_classes_and_tau(tri: &Triangulation) -> Result<(Vec<QuadClass>, Vec<Tau>), TriangulationError> {
    let signs = orientation_signs(tri).ok_or(TriangulationError::NotOrientable)?;
    let quads = (0..tri.tet_count())
        .flat_map(|t| (0..3).map(move |q| QuadClass { tet: t, q, faced: [q, 5 - q] }))
        .collect();
    Ok((quads, signs.into_iter().map(Tau::for_orientation).collect()))
}

/// Dense matrix of indices `i(q, e)`: rows are edge classes, columns quads `3t+q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl GluingMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, edge: usize, quad_column: usize) -> u8 {
        self.entries[edge * self.cols + quad_column]
    }

    pub fn row_sum(&self, edge: usize) -> usize {
        (0..self.cols).map(|c| self.get(edge, c) as usize).sum()
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..self.rows).map(|r| self.get(r, col) as usize).sum()
    }
}

pub fn gluing_matrix(tri: &Triangulation, edges: &[EdgeClass]) -> GluingMatrix {
    let cols = 3 * tri.tet_count();
    let mut entries = vec![0u8; edges.len() * cols];
    for e in edges {
        for c in &e.corners {
            entries[e.id * cols + 3 * c.tet + quad_of_slot(c.slot)] += 1;
        }
    }
    GluingMatrix { rows: edges.len(), cols, entries }
}

/// Barycentric subdivision.
///
/// Sub-tetrahedron `24 t + rank(π)` of tetrahedron `t` has vertices
/// (vertex `π0`, midpoint of edge `π0π1`, centre of face `π0π1π2`, centre of
/// `t`). Sub-tetrahedra of negative relative orientation get labels 2 and 3
/// swapped so that every face pairing of the output is odd.
pub fn barycentric_subdivide(tri: &Triangulation) -> Result<Triangulation, TriangulationError> {
    require_closed(tri)?;
    let signs = orientation_signs(tri).ok_or(TriangulationError::NotOrientable)?;
    let perms: Vec<Perm4> = Perm4::all().collect();
    let index = |t: usize, pi: Perm4| 24 * t + pi.rank();
    let relabel = |t: usize, pi: Perm4| {
        if pi.sign() * signs[t].sign() > 0 {
            Perm4::IDENTITY
        } else {
            Perm4::swap(2, 3)
        }
    };
    let mut out = vec![[None; 4]; 24 * tri.tet_count()];
    for t in 0..tri.tet_count() {
        for &pi in &perms {
            let relabel_here = relabel(t, pi);
            for k in 0..4 {
                let (nt, npi) = if k < 3 {
                    (t, pi.compose(Perm4::swap(k, k + 1)))
                } else {
                    let g = tri.gluing(t, pi.apply(3)).expect("closed");
                    (g.tet, g.perm.compose(pi))
                };
                // canonical labels agree across the shared face
                let perm = relabel(nt, npi).compose(relabel_here.inverse());
                out[index(t, pi)][relabel_here.apply(k)] = Some(Gluing { tet: index(nt, npi), perm });
            }
        }
    }
    Triangulation::from_gluings(out)
}

/// Copy of `tri` with tetrahedra relabeled so that every face pairing is odd.
pub fn oriented_copy(tri: &Triangulation) -> Result<Triangulation, TriangulationError> {
    let signs = orientation_signs(tri).ok_or(TriangulationError::NotOrientable)?;
    let fix = |t: usize| match signs[t] {
        Orientation::Positive => Perm4::IDENTITY,
        Orientation::Negative => Perm4::swap(0, 1),
    };
    let mut out = vec![[None; 4]; tri.tet_count()];
    for t in 0..tri.tet_count() {
        for f in 0..4 {
            if let Some(g) = tri.gluing(t, f) {
                let perm = fix(g.tet).compose(g.perm).compose(fix(t).inverse());
                out[t][fix(t).apply(f)] = Some(Gluing { tet: g.tet, perm });
            }
        }
    }
    Triangulation::from_gluings(out)
}

/// Copy of `tri` with the vertex labels of tetrahedron `tet` permuted by `relabel`
/// (old label `v` becomes `relabel(v)`).
pub fn relabel_tetrahedron(tri: &Triangulation, tet: usize, relabel: Perm4) -> Triangulation {
    let fix = |t: usize| if t == tet { relabel } else { Perm4::IDENTITY };
    let mut out = vec![[None; 4]; tri.tet_count()];
    for t in 0..tri.tet_count() {
        for f in 0..4 {
            if let Some(g) = tri.gluing(t, f) {
                let perm = fix(g.tet).compose(g.perm).compose(fix(t).inverse());
                out[t][fix(t).apply(f)] = Some(Gluing { tet: g.tet, perm });
            }
        }
    }
    Triangulation { gluings: out }
}
