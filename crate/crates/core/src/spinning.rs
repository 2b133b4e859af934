//! Straight simplices whose vertices run out along geodesic rays, and their
//! ideal limits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equations::ComplexValue;
use crate::hypgeom::{
    check_geodesic_frame, dihedral_angles, geodesic_ray, hyperbolic_distance, lift_interior, radial_project,
    GeometryError, KleinPoint, StraightSimplex, Vec31,
};
use crate::shapes::{cross_ratio, tet_volume, IdealPoint};

/// Minimum Euclidean separation of limiting endpoints in the Klein ball.
pub const ENDPOINT_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("vertex {vertex}: {source}")]
    Frame { vertex: usize, source: GeometryError },
    #[error("endpoints {i} and {j} are {separation:e} apart")]
    CoincidentEndpoints { i: usize, j: usize, separation: f64 },
    #[error("time grid must be non-empty, finite, non-negative and strictly increasing")]
    BadTimes,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("malformed scenario: {0}")]
    Malformed(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Four geodesic rays `γᵢ(t) = uᵢ cosh t + wᵢ sinh t` and a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinScenario {
    base: [Vec31; 4],
    directions: [Vec31; 4],
    times: Vec<f64>,
}

/// On-disk form: coordinates `[x, y, z, t]`, time last.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinScenarioFile {
    pub base: Vec<[f64; 4]>,
    pub directions: Vec<[f64; 4]>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

pub fn default_times() -> Vec<f64> {
    (0..=30).map(f64::from).collect()
}

fn to_vec31(c: [f64; 4]) -> Vec31 {
    Vec31::new([c[0], c[1], c[2]], c[3])
}

impl SpinScenario {
    pub fn new(base: [Vec31; 4], directions: [Vec31; 4], times: Vec<f64>) -> Result<Self, SpinError> {
        for i in 0..4 {
            check_geodesic_frame(&base[i], &directions[i]).map_err(|source| SpinError::Frame { vertex: i, source })?;
        }
        if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(SpinError::BadTimes);
        }
        let sc = SpinScenario { base, directions, times };
        let ends = sc.endpoints();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let separation = ends[i].distance(&ends[j]);
                if !(separation > ENDPOINT_SEPARATION) {
                    return Err(SpinError::CoincidentEndpoints { i, j, separation });
                }
            }
        }
        Ok(sc)
    }

    /// Rays from interior Klein points `points[i]` toward boundary points `endpoints[i]`.
    pub fn toward(points: [[f64; 3]; 4], endpoints: [[f64; 3]; 4], times: Vec<f64>) -> Result<Self, SpinError> {
        let mut base = [Vec31::origin(); 4];
        let mut directions = [Vec31::origin(); 4];
        for i in 0..4 {
            let u = lift_interior(&KleinPoint::new(points[i])?)?;
            let norm = endpoints[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            let ell = Vec31::new(endpoints[i].map(|x| x / norm), 1.0);
            // w = ℓ/a − u with a = −⟨ℓ, u⟩ gives ⟨w,w⟩ = 1, ⟨u,w⟩ = 0 and u + w ∥ ℓ
            let a = -ell.inner(&u);
            base[i] = u;
            directions[i] = ell.scale(1.0 / a).sub(&u);
        }
        SpinScenario::new(base, directions, times)
    }

    pub fn from_json(text: &str) -> Result<Self, SpinError> {
        let file: SpinScenarioFile = serde_json::from_str(text).map_err(|e| SpinError::Malformed(e.to_string()))?;
        let four = |v: Vec<[f64; 4]>, what: &str| -> Result<[Vec31; 4], SpinError> {
            let v: [[f64; 4]; 4] =
                v.try_into().map_err(|_| SpinError::Malformed(format!("{what} needs exactly 4 vectors")))?;
            Ok(v.map(to_vec31))
        };
        SpinScenario::new(
            four(file.base, "base")?,
            four(file.directions, "directions")?,
            file.times.unwrap_or_else(default_times),
        )
    }

    pub fn to_file(&self) -> SpinScenarioFile {
        let c = |v: &Vec31| [v.space[0], v.space[1], v.space[2], v.time];
        SpinScenarioFile {
            base: self.base.iter().map(c).collect(),
            directions: self.directions.iter().map(c).collect(),
            times: Some(self.times.clone()),
        }
    }

    pub fn base(&self) -> &[Vec31; 4] {
        &self.base
    }

    pub fn directions(&self) -> &[Vec31; 4] {
        &self.directions
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Result<Self, SpinError> {
        self.times = times;
        SpinScenario::new(self.base, self.directions, self.times)
    }

    /// `γᵢ(t)`.
    pub fn vertex(&self, i: usize, t: f64) -> Vec31 {
        geodesic_ray(&self.base[i], &self.directions[i], t).expect("frame validated at construction")
    }

    /// Lightlike limits `uᵢ + wᵢ` of `γᵢ(t) / cosh t`.
    pub fn limit_lifts(&self) -> [Vec31; 4] {
        std::array::from_fn(|i| self.base[i].add(&self.directions[i]))
    }

    pub fn endpoints(&self) -> [KleinPoint<3>; 4] {
        self.limit_lifts().map(|l| {
            let p = l.space.map(|x| x / l.time);
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            KleinPoint::new(p.map(|x| x / norm)).expect("unit vector")
        })
    }
}

/// Straight simplex on `γ₀(t), …, γ₃(t)`.
pub fn spin_step(sc: &SpinScenario, t: f64) -> Result<StraightSimplex<3>, SpinError> {
    if t < 0.0 {
        return Err(SpinError::NegativeTime(t));
    }
    Ok(StraightSimplex::from_lifts((0..4).map(|i| sc.vertex(i, t)).collect())?)
}

/// Time coordinate of `γᵢ(t)` divided by `cosh t`.
pub fn cosh_ratio(sc: &SpinScenario, i: usize, t: f64) -> f64 {
    sc.vertex(i, t).time / t.cosh()
}

/// Ideal simplex on the lifts `uᵢ + wᵢ`.
pub fn ideal_limit(sc: &SpinScenario) -> Result<StraightSimplex<3>, SpinError> {
    Ok(StraightSimplex::from_lifts(sc.limit_lifts().to_vec())?)
}

/// Stereographic projection of the unit sphere from the pole `(0, 0, 1)`,
/// which goes to ∞.
pub fn stereographic(p: [f64; 3]) -> IdealPoint {
    let [x, y, z] = p;
    if 1.0 - z < 1e-15 {
        IdealPoint::Infinity
    } else {
        IdealPoint::finite(x / (1.0 - z), y / (1.0 - z))
    }
}

/// Shape on edge `01` of the limit: `cross_ratio(v₀, v₁, v₂, v₃)` of the
/// stereographic images of the endpoints.
pub fn limit_shape(sc: &SpinScenario) -> Result<crate::shapes::C64, SpinError> {
    let e = sc.endpoints().map(|p| stereographic(p.coords()));
    cross_ratio(e[0], e[1], e[2], e[3]).map_err(|_| SpinError::Geometry(GeometryError::Degenerate))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpinRow {
    pub t: f64,
    /// Euclidean Klein distance from `γᵢ(t)` to its endpoint.
    pub endpoint_distances: [f64; 4],
    /// `d(γᵢ(0), γᵢ(t))`.
    pub travelled: [f64; 4],
    pub cosh_ratios: [f64; 4],
    /// `None` while the simplex is degenerate.
    pub dihedral_angles: Option<[f64; 6]>,
    pub max_angle_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpinReport {
    pub endpoints: [[f64; 3]; 4],
    pub limit_shape: ComplexValue,
    pub limit_volume: f64,
    pub limit_angles: [f64; 6],
    /// Smallest `C` with `max_angle_error(t) ≤ C e^{−t}` on the grid (t > 0).
    pub fitted_constant: Option<f64>,
    pub rows: Vec<SpinRow>,
}

pub fn spin_report(sc: &SpinScenario) -> Result<SpinReport, SpinError> {
    let limit = ideal_limit(sc)?;
    let limit_angles = dihedral_angles(&limit)?;
    let shape = limit_shape(sc)?;
    let limit_volume = tet_volume(shape).map_err(|_| SpinError::Geometry(GeometryError::Degenerate))?;
    let ends = sc.endpoints();
    let rows: Vec<SpinRow> = sc
        .times
        .iter()
        .map(|&t| {
            let verts: [Vec31; 4] = std::array::from_fn(|i| sc.vertex(i, t));
            let endpoint_distances = std::array::from_fn(|i| {
                radial_project(&verts[i]).map_or(0.0, |k| k.distance(&ends[i]))
            });
            let travelled = std::array::from_fn(|i| hyperbolic_distance(&sc.base[i], &verts[i]));
            let cosh_ratios = std::array::from_fn(|i| cosh_ratio(sc, i, t));
            let angles = spin_step(sc, t).ok().and_then(|s| dihedral_angles(&s).ok());
            let max_angle_error =
                angles.map(|a| a.iter().zip(&limit_angles).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            SpinRow { t, endpoint_distances, travelled, cosh_ratios, dihedral_angles: angles, max_angle_error }
        })
        .collect();
    let fitted_constant = rows
        .iter()
        .filter(|r| r.t > 0.0)
        .filter_map(|r| r.max_angle_error.map(|e| e * r.t.exp()))
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    Ok(SpinReport {
        endpoints: ends.map(|k| k.coords()),
        limit_shape: ComplexValue { re: shape.re, im: shape.im },
        limit_volume,
        limit_angles,
        fitted_constant,
        rows,
    })
}

pub const CSV_HEADER: &str = "t,dist_0,dist_1,dist_2,dist_3,travelled_0,travelled_1,travelled_2,travelled_3,\
cosh_ratio_0,cosh_ratio_1,cosh_ratio_2,cosh_ratio_3,angle_01,angle_02,angle_03,angle_12,angle_13,angle_23,angle_error";

impl SpinReport {
    /// One line per grid time; missing angles are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let f = |x: f64| format!("{x:.16e}");
        for r in &self.rows {
            let mut cells = vec![f(r.t)];
            cells.extend(r.endpoint_distances.iter().map(|&x| f(x)));
            cells.extend(r.travelled.iter().map(|&x| f(x)));
            cells.extend(r.cosh_ratios.iter().map(|&x| f(x)));
            match r.dihedral_angles {
                Some(a) => cells.extend(a.iter().map(|&x| f(x))),
                None => cells.extend(std::iter::repeat(String::new()).take(6)),
            }
            cells.push(r.max_angle_error.map(f).unwrap_or_default());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
