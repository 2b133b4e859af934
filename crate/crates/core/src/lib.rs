//! Hyperbolic structures on closed triangulated 3-manifolds via gluing
//! equations with possibly flat or negatively oriented tetrahedra.

pub mod equations;
pub mod holonomy;
pub mod hypgeom;
pub mod json;
pub mod shapes;
pub mod solver;
pub mod spinning;
pub mod triangulation;
