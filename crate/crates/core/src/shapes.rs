//! Shape parameters of ideal tetrahedra, cross-ratios, and the Lobachevsky
//! function.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use nalgebra::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;

/// Shapes closer than this to 0 or 1 are rejected.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("shape {0} is within 1e-12 of an excluded value (0 or 1)")]
    Excluded(C64),
    #[error("cross-ratio of coincident points")]
    CoincidentPoints,
}

/// A point of the Riemann sphere `C ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdealPoint {
    Finite(C64),
    Infinity,
}

impl IdealPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        IdealPoint::Finite(C64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, IdealPoint::Infinity)
    }

    /// Chordal distance on the unit sphere (∞ at the north pole); at most 2.
    pub fn chordal_distance(&self, other: &IdealPoint) -> f64 {
        match (self, other) {
            (IdealPoint::Infinity, IdealPoint::Infinity) => 0.0,
            (IdealPoint::Finite(a), IdealPoint::Infinity) | (IdealPoint::Infinity, IdealPoint::Finite(a)) => {
                2.0 / (1.0 + a.norm_sqr()).sqrt()
            }
            (IdealPoint::Finite(a), IdealPoint::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
        }
    }

    pub fn conj(&self) -> IdealPoint {
        match self {
            IdealPoint::Finite(z) => IdealPoint::Finite(z.conj()),
            IdealPoint::Infinity => IdealPoint::Infinity,
        }
    }
}

fn check_shape(z: C64) -> Result<C64, ShapeError> {
    if !z.re.is_finite() || !z.im.is_finite() || z.norm() < DEGENERATE_TOL || (z - 1.0).norm() < DEGENERATE_TOL {
        Err(ShapeError::Excluded(z))
    } else {
        Ok(z)
    }
}

/// `(z, 1/(1-z), (z-1)/z)`.
pub fn shape_triple(z: C64) -> Result<[C64; 3], ShapeError> {
    let z = check_shape(z)?;
    let one = C64::new(1.0, 0.0);
    Ok([z, one / (one - z), (z - one) / z])
}

/// Cross-ratio `(v_i, v_j; v_k, v_l) = (v_i - v_k)/(v_i - v_l) · (v_j - v_l)/(v_j - v_k)`,
/// with the two factors containing ∞ cancelled.
pub fn cross_ratio(vi: IdealPoint, vj: IdealPoint, vk: IdealPoint, vl: IdealPoint) -> Result<C64, ShapeError> {
    let pts = [vi, vj, vk, vl];
    for a in 0..4 {
        for b in (a + 1)..4 {
            if pts[a].chordal_distance(&pts[b]) < 1e-14 {
                return Err(ShapeError::CoincidentPoints);
            }
        }
    }
    use IdealPoint::{Finite as F, Infinity as Inf};
    Ok(match (vi, vj, vk, vl) {
        (Inf, F(j), F(k), F(l)) => (j - l) / (j - k),
        (F(i), Inf, F(k), F(l)) => (i - k) / (i - l),
        (F(i), F(j), Inf, F(l)) => (j - l) / (i - l),
        (F(i), F(j), F(k), Inf) => (i - k) / (j - k),
        (F(i), F(j), F(k), F(l)) => (i - k) / (i - l) * ((j - l) / (j - k)),
        _ => unreachable!("distinct points contain at most one infinity"),
    })
}

fn zeta_even(k: usize) -> f64 {
    match k {
        1 => PI * PI / 6.0,
        2 => PI.powi(4) / 90.0,
        _ => {
            // direct sum plus Euler–Maclaurin tail
            let s = 2.0 * k as f64;
            let n = 64.0f64;
            let tail = n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0;
            let head: f64 = (1..=64).rev().map(|m| (m as f64).powf(-s)).sum();
            head + tail
        }
    }
}

/// `ζ(2k) / (k (2k+1))` for `k = 1..=40`.
fn clausen_coefficients() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| (1..=40).map(|k| zeta_even(k) / (k as f64 * (2 * k + 1) as f64)).collect())
}

/// Λ on `[-π/2, π/2]` from the expansion
/// `Λ(θ) = θ (1 - ln|2θ| + Σ_k ζ(2k) (θ/π)^{2k} / (k(2k+1)))`.
fn lobachevsky_small(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let r2 = (theta / PI).powi(2);
    let mut power = r2;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &c in clausen_coefficients() {
        let term = c * power;
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term < 1e-18 {
            break;
        }
        power *= r2;
    }
    theta * (1.0 - (2.0 * theta.abs()).ln() + sum)
}

/// Lobachevsky function `Λ(θ) = -∫₀^θ ln|2 sin t| dt`.
pub fn lobachevsky(theta: f64) -> f64 {
    if !theta.is_finite() {
        return f64::NAN;
    }
    // π-periodic: reduce to (-π/2, π/2]
    let mut x = theta - PI * (theta / PI).round();
    if x <= -FRAC_PI_2 {
        x += PI;
    }
    let (sign, x) = if x < 0.0 { (-1.0, -x) } else { (1.0, x) };
    let value = if x <= FRAC_PI_4 {
        lobachevsky_small(x)
    } else {
        // duplication: Λ(π/2 + s) = Λ(2s)/2 - Λ(s), exactly odd about π/2
        let s = x - FRAC_PI_2;
        0.5 * lobachevsky_small(2.0 * s) - lobachevsky_small(s)
    };
    sign * value
}

/// Signed volume of the ideal tetrahedron of shape `z`.
pub fn tet_volume(z: C64) -> Result<f64, ShapeError> {
    let [a, b, c] = shape_triple(z)?;
    Ok(lobachevsky(a.arg()) + lobachevsky(b.arg()) + lobachevsky(c.arg()))
}
