//! Multi-start damped Gauss–Newton search for solutions of a gluing system.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::equations::{classify, ComplexValue, EquationError, GluingSystem, ShapeAssignment, TetClass};
use crate::shapes::{tet_volume, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub seed: u64,
    pub restarts: usize,
    pub newton_max_iters: usize,
    pub damping_factor: f64,
    pub max_halvings: usize,
    pub residual_tol: f64,
    pub dedup_tol: f64,
    pub rank_tol: f64,
    /// Worker threads for the restarts; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            restarts: 512,
            newton_max_iters: 100,
            damping_factor: 0.5,
            max_halvings: 30,
            residual_tol: 1e-11,
            dedup_tol: 1e-8,
            rank_tol: 1e-8,
            threads: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptionsError {
    #[error("tolerance {name} must be positive and finite, found {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("dedup_tol ({dedup}) must exceed residual_tol ({residual})")]
    DedupBelowResidual { dedup: f64, residual: f64 },
    #[error("damping factor must lie in (0, 1), found {0}")]
    Damping(f64),
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), OptionsError> {
        for (name, value) in
            [("residual_tol", self.residual_tol), ("dedup_tol", self.dedup_tol), ("rank_tol", self.rank_tol)]
        {
            if !(value > 0.0) || !value.is_finite() {
                return Err(OptionsError::NonPositive { name, value });
            }
        }
        if self.dedup_tol <= self.residual_tol {
            return Err(OptionsError::DedupBelowResidual { dedup: self.dedup_tol, residual: self.residual_tol });
        }
        if !(self.damping_factor > 0.0 && self.damping_factor < 1.0) {
            return Err(OptionsError::Damping(self.damping_factor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub positive: usize,
    pub flat: usize,
    pub negative: usize,
}

impl Census {
    pub fn of(z: &ShapeAssignment) -> Self {
        let mut c = Census::default();
        for &w in z.shapes() {
            match classify(w) {
                TetClass::Positive => c.positive += 1,
                TetClass::Flat => c.flat += 1,
                TetClass::Negative => c.negative += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub shapes: ShapeAssignment,
    pub max_residual: f64,
    pub volume: f64,
    pub census: Census,
    /// Complex corank of the Jacobian (0 for an isolated solution).
    pub jacobian_corank: usize,
}

/// JSON form of a [`SolutionRecord`].
#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecordJson {
    pub shapes: Vec<ComplexValue>,
    pub residual: f64,
    pub volume: f64,
    pub census: Census,
    pub corank: usize,
}

impl SolutionRecord {
    pub fn to_json(&self) -> SolutionRecordJson {
        SolutionRecordJson {
            shapes: self.shapes.to_serial(),
            residual: self.max_residual,
            volume: self.volume,
            census: self.census,
            corank: self.jacobian_corank,
        }
    }

    /// Shapes written with 17 significant digits; used for tie-breaking.
    pub fn serialized_shapes(&self) -> String {
        self.shapes.shapes().iter().map(|z| format!("{:.16e},{:.16e};", z.re, z.im)).collect()
    }

    /// At least one tetrahedron with `Im z ≤ 0`.
    pub fn has_nonpositive_tet(&self) -> bool {
        self.shapes.shapes().iter().any(|z| z.im <= 0.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonFailure {
    #[error("degenerate: every damped step hit an excluded shape (last residual {last_residual:e})")]
    Degenerate { last_residual: f64 },
    #[error("no convergence (last residual {last_residual:e})")]
    NoConvergence { last_residual: f64 },
    #[error(transparent)]
    Equation(#[from] EquationError),
}

pub fn volume(z: &ShapeAssignment) -> Result<f64, EquationError> {
    z.shapes().iter().try_fold(0.0, |acc, &w| Ok(acc + tet_volume(w)?))
}

fn sum_sq(r: &[C64]) -> f64 {
    r.iter().map(|x| x.norm_sqr()).sum()
}

fn max_abs(r: &[C64]) -> f64 {
    r.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn least_squares_step(j: DMatrix<C64>, r: &[C64]) -> Option<DVector<C64>> {
    let rhs = DVector::from_iterator(r.len(), r.iter().map(|x| -x));
    let svd = j.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-14;
    svd.solve(&rhs, cutoff).ok()
}

/// Complex rank of the Jacobian with relative threshold `rank_tol`.
pub fn jacobian_rank(j: &DMatrix<C64>, rank_tol: f64) -> usize {
    if j.nrows() == 0 || j.ncols() == 0 {
        return 0;
    }
    let sv = j.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * top).count()
}

fn make_record(system: &GluingSystem, z: ShapeAssignment, opts: &SolverOptions) -> Result<SolutionRecord, EquationError> {
    let max_residual = system.max_residual(&z)?;
    let volume = volume(&z)?;
    let census = Census::of(&z);
    let rank = jacobian_rank(&system.jacobian(&z)?, opts.rank_tol);
    Ok(SolutionRecord { max_residual, volume, census, jacobian_corank: system.tet_count() - rank, shapes: z })
}

/// Snaps imaginary parts below 1e-10 to zero when the result still solves
/// the system; real solutions then classify as exactly flat.
fn snap_real(system: &GluingSystem, z: ShapeAssignment, tol: f64) -> ShapeAssignment {
    let snapped = ShapeAssignment::new(
        z.shapes().iter().map(|w| if w.im.abs() <= 1e-10 { C64::new(w.re, 0.0) } else { *w }).collect(),
    );
    match system.max_residual(&snapped) {
        Ok(r) if r < tol => snapped,
        _ => z,
    }
}

const POLISH_STEPS: usize = 3;

/// Converged points closer than this to 0, 1 or ∞ are limits of
/// degenerating tetrahedra, not solutions.
pub const SEPARATION_TOL: f64 = 1e-6;

fn near_degenerate(w: C64) -> bool {
    w.norm() < SEPARATION_TOL || (w - 1.0).norm() < SEPARATION_TOL || w.norm() > 1.0 / SEPARATION_TOL
}

pub fn newton_refine(
    system: &GluingSystem,
    start: &ShapeAssignment,
    opts: &SolverOptions,
) -> Result<SolutionRecord, NewtonFailure> {
    let mut z = start.clone();
    let mut r = system.residual(&z)?;
    for _ in 0..opts.newton_max_iters {
        if max_abs(&r) < opts.residual_tol {
            break;
        }
        let Some(step) = least_squares_step(system.jacobian(&z)?, &r) else {
            return Err(NewtonFailure::NoConvergence { last_residual: max_abs(&r) });
        };
        let current = sum_sq(&r);
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut any_valid = false;
        for _ in 0..=opts.max_halvings {
            let trial = ShapeAssignment::new(
                z.shapes().iter().zip(step.iter()).map(|(w, d)| w + d * lambda).collect(),
            );
            if let Ok(rt) = system.residual(&trial) {
                any_valid = true;
                if sum_sq(&rt) < current {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda *= opts.damping_factor;
        }
        match accepted {
            Some((zn, rn)) => {
                z = zn;
                r = rn;
            }
            None if !any_valid => return Err(NewtonFailure::Degenerate { last_residual: max_abs(&r) }),
            None => return Err(NewtonFailure::NoConvergence { last_residual: max_abs(&r) }),
        }
    }
    if max_abs(&r) >= opts.residual_tol {
        return Err(NewtonFailure::NoConvergence { last_residual: max_abs(&r) });
    }
    // a few undamped steps take the residual down to rounding level
    for _ in 0..POLISH_STEPS {
        let Some(step) = least_squares_step(system.jacobian(&z)?, &r) else { break };
        let trial = ShapeAssignment::new(z.shapes().iter().zip(step.iter()).map(|(w, d)| w + d).collect());
        match system.residual(&trial) {
            Ok(rt) if sum_sq(&rt) < sum_sq(&r) => {
                z = trial;
                r = rt;
            }
            _ => break,
        }
    }
    if z.shapes().iter().any(|&w| near_degenerate(w)) {
        return Err(NewtonFailure::Degenerate { last_residual: max_abs(&r) });
    }
    let z = snap_real(system, z, opts.residual_tol);
    Ok(make_record(system, z, opts)?)
}

/// Uniform start in `[-2, 3] × [-2.5, 2.5]`, avoiding discs of radius 0.05 around 0 and 1.
fn random_start(rng: &mut ChaCha8Rng, tets: usize) -> ShapeAssignment {
    let shapes = (0..tets)
        .map(|_| loop {
            let z = C64::new(rng.gen_range(-2.0..3.0), rng.gen_range(-2.5..2.5));
            if z.norm() > 0.05 && (z - 1.0).norm() > 0.05 {
                break z;
            }
        })
        .collect();
    ShapeAssignment::new(shapes)
}

/// The start point of restart `index` for a given seed.
pub fn start_point(seed: u64, index: usize, tets: usize) -> ShapeAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_start(&mut rng, tets)
}

/// Multi-start search. Records are deduplicated in start order and sorted by
/// volume, largest first. Finding no solution does not prove the solution
/// set is empty.
pub fn solve_all(system: &GluingSystem, opts: &SolverOptions) -> Vec<SolutionRecord> {
    if system.tet_count() == 0 {
        return Vec::new();
    }
    let run = |i: usize| newton_refine(system, &start_point(opts.seed, i, system.tet_count()), opts).ok();
    let found: Vec<Option<SolutionRecord>> = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool");
            pool.install(|| (0..opts.restarts).into_par_iter().map(run).collect())
        }
        None => (0..opts.restarts).into_par_iter().map(run).collect(),
    };
    let mut records: Vec<SolutionRecord> = Vec::new();
    for rec in found.into_iter().flatten() {
        if !records.iter().any(|r| r.shapes.max_distance(&rec.shapes) < opts.dedup_tol) {
            records.push(rec);
        }
    }
    records.sort_by(|a, b| b.volume.total_cmp(&a.volume));
    records
}

/// Volumes within this of the maximum count as tied.
pub const VOLUME_TIE_TOL: f64 = 1e-9;

/// Record of greatest volume; near-ties go to the lexicographically smallest
/// serialized shapes.
pub fn max_volume(records: &[SolutionRecord]) -> Option<&SolutionRecord> {
    let top = records.iter().map(|r| r.volume).fold(f64::NEG_INFINITY, f64::max);
    records
        .iter()
        .filter(|r| r.volume >= top - VOLUME_TIE_TOL)
        .min_by(|a, b| match a.serialized_shapes().cmp(&b.serialized_shapes()) {
            Ordering::Equal => b.volume.total_cmp(&a.volume),
            o => o,
        })
}

/// Real `2E × 2T` Jacobian in the variables `(Re z₀, Im z₀, Re z₁, …)`.
pub fn real_jacobian(j: &DMatrix<C64>) -> DMatrix<f64> {
    let (e, t) = j.shape();
    // padded to at least square so the SVD exposes the whole kernel
    let rows = (2 * e).max(2 * t);
    let mut m = DMatrix::<f64>::zeros(rows, 2 * t);
    for r in 0..e {
        for c in 0..t {
            let v = j[(r, c)];
            m[(2 * r, 2 * c)] = v.re;
            m[(2 * r, 2 * c + 1)] = -v.im;
            m[(2 * r + 1, 2 * c)] = v.im;
            m[(2 * r + 1, 2 * c + 1)] = v.re;
        }
    }
    m
}

/// Orthonormal basis of the numerical kernel of the real Jacobian.
pub fn real_kernel(system: &GluingSystem, z: &ShapeAssignment, rank_tol: f64) -> Result<Vec<DVector<f64>>, EquationError> {
    let m = real_jacobian(&system.jacobian(z)?);
    if m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let top = svd.singular_values.max();
    Ok((0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= rank_tol * top)
        .map(|i| vt.row(i).transpose())
        .collect())
}

/// Directional derivatives of the volume along each kernel direction of the
/// Jacobian at a solution (central differences, step 1e-5).
pub fn tangent_volume_derivative(
    system: &GluingSystem,
    rec: &SolutionRecord,
    rank_tol: f64,
) -> Result<Vec<f64>, EquationError> {
    let h = 1e-5;
    real_kernel(system, &rec.shapes, rank_tol)?
        .into_iter()
        .map(|k| {
            let shift = |s: f64| {
                ShapeAssignment::new(
                    rec.shapes
                        .shapes()
                        .iter()
                        .enumerate()
                        .map(|(t, w)| w + C64::new(k[2 * t], k[2 * t + 1]) * s)
                        .collect(),
                )
            };
            Ok((volume(&shift(h))? - volume(&shift(-h))?) / (2.0 * h))
        })
        .collect()
}
