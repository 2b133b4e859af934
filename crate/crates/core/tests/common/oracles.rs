//! Independent reference computations shared by the test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use hypglue_core::equations::{GluingSystem, ShapeAssignment};
use hypglue_core::hypgeom::{KleinPoint, LorentzMap};
use hypglue_core::shapes::C64;
use hypglue_core::spinning::{default_times, SpinScenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
pub const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
pub const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, tol / 2.0, depth - 1) + adaptive(f, m, b, tol / 2.0, depth - 1)
}

/// `x ln|x| − x`, an antiderivative of `ln|x|` vanishing at 0.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln() - x
    }
}

/// Λ(θ) for θ in (−π, π): the logarithmic singularities at 0 and ±π are
/// subtracted and integrated in closed form, the smooth remainder by quadrature.
pub fn lobachevsky_quadrature(theta: f64) -> f64 {
    assert!(theta.abs() < PI);
    let smooth = |t: f64| (2.0 * t.sin()).abs().ln() - t.abs().ln() - (PI - t).ln() - (PI + t).ln();
    let remainder = adaptive(&smooth, 0.0, theta, 1e-15, 40);
    let singular = xlogx(theta) + (xlogx(PI) - xlogx(PI - theta)) + (xlogx(PI + theta) - xlogx(PI));
    -(singular + remainder)
}

/// Max-norm error of the central-difference Jacobian relative to the
/// max-norm of the analytic one.
pub fn fd_error(system: &GluingSystem, z: &ShapeAssignment) -> f64 {
    let h = 1e-6;
    let analytic = system.jacobian(z).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..system.tet_count() {
        let shifted = |s: f64| {
            let mut w = z.shapes().to_vec();
            w[t] += C64::new(s, 0.0);
            system.residual(&ShapeAssignment::new(w)).unwrap()
        };
        let (plus, minus) = (shifted(h), shifted(-h));
        for e in 0..system.edge_count() {
            // holomorphic residuals: the real-direction derivative is the complex one
            let fd = (plus[e] - minus[e]) / (2.0 * h);
            worst = worst.max((fd - analytic[(e, t)]).norm());
        }
    }
    let scale = analytic.iter().map(|x| x.norm()).fold(0.0, f64::max);
    worst / scale
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Vertices (interior or ideal) and decorations.
pub fn random_simplex(rng: &mut ChaCha8Rng) -> (Vec<KleinPoint<3>>, Vec<f64>) {
    let verts = (0..4)
        .map(|_| {
            let d = random_unit(rng);
            let r = if rng.gen_bool(0.4) { 1.0 } else { rng.gen_range(0.0..0.9) };
            KleinPoint::new(d.map(|x| x * r)).unwrap()
        })
        .collect();
    let decorations = (0..4).map(|_| rng.gen_range(0.5..2.0)).collect();
    (verts, decorations)
}

pub fn random_isometry(rng: &mut ChaCha8Rng) -> LorentzMap {
    let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let rot = LorentzMap::rotation(q);
    let boost = LorentzMap::boost(random_unit(rng), rng.gen_range(0.0..1.5));
    boost.compose(&rot)
}

pub fn random_barycentric(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    let mut b: Vec<f64> = w.iter().map(|x| x / s).collect();
    // exact unit sum
    let rest: f64 = b[1..].iter().sum();
    b[0] = 1.0 - rest;
    b
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Random base points in the Klein ball of radius 0.7 and endpoints at least
/// 0.3 apart.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> SpinScenario {
    loop {
        let ends: [[f64; 3]; 4] = std::array::from_fn(|_| random_unit(rng));
        let spread = (0..4).all(|i| ((i + 1)..4).all(|j| dist(ends[i], ends[j]) > 0.3));
        if !spread {
            continue;
        }
        let points = std::array::from_fn(|_| {
            let r = rng.gen_range(0.0..0.7);
            random_unit(rng).map(|x| x * r)
        });
        return SpinScenario::toward(points, ends, default_times()).unwrap();
    }
}

pub fn scenarios() -> Vec<SpinScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    (0..25).map(|_| random_scenario(&mut rng)).collect()
}
