//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fail.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hypglue_core::equations::{GluingSystem, ShapeAssignment};
use hypglue_core::hypgeom::StraightSimplex;
use hypglue_core::shapes::{lobachevsky, tet_volume, C64};
use hypglue_core::solver::{solve_all, start_point, volume, SolverOptions};
use hypglue_core::spinning::{cosh_ratio, default_times, spin_report, SpinScenario};
use hypglue_core::triangulation::{edge_classes, gluing_matrix, validate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

#[path = "../../core/tests/common/mod.rs"]
mod common;
use common::oracles;

type Check = fn() -> Result<String, String>;

fn hypglue(args: &[&str]) -> (Output, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_hypglue")).args(args).output().expect("binary runs");
    (out, start.elapsed())
}

fn fixture(name: &str) -> String {
    common::fixture_path(name).display().to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn stdout_json(out: &Output) -> Result<Value, String> {
    ensure(out.status.success(), || format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn complex(v: &Value) -> C64 {
    C64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

fn l41_golden() -> Result<String, String> {
    let (out, elapsed) = hypglue(&["solve", &fixture("l41.json")]);
    let v = stdout_json(&out)?;
    let records = v["records"].as_array().unwrap();
    ensure(records.len() == 1, || format!("{} records", records.len()))?;
    let rec = &records[0];
    let z = ShapeAssignment::new(rec["shapes"].as_array().unwrap().iter().map(complex).collect());
    let system = GluingSystem::from_triangulation(&common::l41()).unwrap();
    let triple = system.expand(&z).unwrap();
    let want = [C64::new(-1.0, 0.0), C64::new(0.5, 0.0), C64::new(2.0, 0.0)];
    let err = triple.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    ensure(err < 1e-9, || format!("triple {triple:?}"))?;
    let vol = rec["volume"].as_f64().unwrap();
    ensure(vol.abs() < 1e-12, || format!("volume {vol:e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("triple error {err:.1e}, volume {vol:.1e}, {:.3}s", elapsed.as_secs_f64()))
}

fn weeks() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("weeks.json").display().to_string();
    let weeks = fixture("weeks.json");
    let (out, solve_time) = hypglue(&["solve", &weeks, "--restarts", "512", "--output", &saved]);
    ensure(out.status.success(), || format!("solve exit {:?}", out.status.code()))?;
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    let vols: Vec<f64> = v["records"].as_array().unwrap().iter().map(|r| r["volume"].as_f64().unwrap()).collect();
    let best = vols.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ensure((best - 0.9427).abs() < 5e-4, || format!("max volume {best}"))?;
    ensure(vols.iter().any(|w| (w + best).abs() < 5e-4 && (w.abs() - 0.9427).abs() < 5e-4), || {
        "no negative partner".to_string()
    })?;
    let (hol, hol_time) = hypglue(&["holonomy", &weeks, "--solutions", &saved, "--select", "max"]);
    let h = stdout_json(&hol)?;
    let dev = h["holonomy"]["max_deviation"].as_f64().unwrap();
    ensure(dev < 1e-6, || format!("relator deviation {dev:e}"))?;
    let elapsed = solve_time + hol_time;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("volumes ±{best:.10}, relator deviation {dev:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn jacobian() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (seed, tri) in [(11, common::l41()), (12, common::weeks()), (13, common::l41_subdivided())] {
        let system = GluingSystem::from_triangulation(&tri).unwrap();
        for i in 0..200 {
            worst = worst.max(oracles::fd_error(&system, &start_point(seed, i, system.tet_count())));
        }
    }
    ensure(worst < 1e-6, || format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn lower_half_plane() -> Result<String, String> {
    let cases = [("l41", common::l41(), 512), ("weeks", common::weeks(), 512), ("l41/sub", common::l41_subdivided(), 24)];
    let (mut count, mut worst_res, mut worst_vol) = (0, 0.0f64, 0.0f64);
    for (name, tri, restarts) in cases {
        let system = GluingSystem::from_triangulation(&tri).unwrap();
        for seed in 0..10 {
            let opts = SolverOptions { seed, restarts, ..Default::default() };
            for rec in solve_all(&system, &opts) {
                count += 1;
                let lower = rec.shapes.shapes().iter().any(|z| z.im <= 0.0);
                ensure(lower, || format!("{name} seed {seed}: all tetrahedra in the upper half plane"))?;
                let conj = rec.shapes.conj();
                worst_res = worst_res.max(system.max_residual(&conj).unwrap());
                worst_vol = worst_vol.max((volume(&conj).unwrap() + rec.volume).abs());
            }
        }
    }
    ensure(worst_res < 1e-11, || format!("conjugate residual {worst_res:e}"))?;
    ensure(worst_vol < 1e-10, || format!("conjugate volume error {worst_vol:e}"))?;
    Ok(format!("{count} solutions, conjugate residual {worst_res:.2e}, volume error {worst_vol:.1e}"))
}

fn lobachevsky_accuracy() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let theta = -PI + (k as f64 + 0.5) * (2.0 * PI / 100.0);
        worst = worst.max((lobachevsky(theta) - oracles::lobachevsky_quadrature(theta)).abs());
    }
    ensure(worst < 1e-10, || format!("grid error {worst:e}"))?;
    ensure(lobachevsky(0.0).abs() <= 1e-15 && lobachevsky(PI / 2.0).abs() <= 1e-15, || "nonzero at 0 or π/2".into())?;
    let regular = tet_volume(C64::from_polar(1.0, PI / 3.0)).unwrap();
    let err = (regular - 3.0 * oracles::lobachevsky_quadrature(PI / 3.0)).abs();
    ensure(err < 1e-9, || format!("regular volume error {err:e}"))?;
    Ok(format!("grid error {worst:.1e}, regular volume {regular:.12} (error {err:.1e})"))
}

fn naturality() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (verts, decs) = oracles::random_simplex(&mut rng);
        let sigma = StraightSimplex::straighten(&verts, Some(&decs)).unwrap();
        for _ in 0..20 {
            let g = oracles::random_isometry(&mut rng);
            let moved: Vec<_> = verts.iter().map(|v| g.apply_klein(v).unwrap()).collect();
            let moved_decs: Vec<f64> = sigma.lifts().iter().map(|u| g.apply(u).unwrap().time).collect();
            let tau = StraightSimplex::straighten(&moved, Some(&moved_decs)).unwrap();
            for _ in 0..50 {
                let b = oracles::random_barycentric(&mut rng, 4);
                let lhs = g.apply_klein(&sigma.evaluate(&b).unwrap()).unwrap();
                worst = worst.max(lhs.distance(&tau.evaluate(&b).unwrap()));
            }
        }
    }
    ensure(worst < 1e-10, || format!("naturality deviation {worst:e}"))?;
    let mut face_worst: f64 = 0.0;
    let faces: [&[usize]; 4] = [&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]];
    for _ in 0..100 {
        let (verts, decs) = oracles::random_simplex(&mut rng);
        let sigma = StraightSimplex::straighten(&verts, Some(&decs)).unwrap();
        for idx in faces {
            let face = sigma.face(idx);
            for _ in 0..50 {
                let b = oracles::random_barycentric(&mut rng, 3);
                let mut full = [0.0; 4];
                for (k, &i) in idx.iter().enumerate() {
                    full[i] = b[k];
                }
                face_worst = face_worst.max(face.evaluate(&b).unwrap().distance(&sigma.evaluate(&full).unwrap()));
            }
        }
    }
    ensure(face_worst < 1e-12, || format!("face deviation {face_worst:e}"))?;
    Ok(format!("naturality {worst:.1e}, faces {face_worst:.1e}"))
}

fn spinning() -> Result<String, String> {
    let (mut ratio_err, mut dist20, mut angle20) = (0.0f64, 0.0f64, 0.0f64);
    for sc in oracles::scenarios() {
        for &t in sc.times() {
            for i in 0..4 {
                let (u, w) = (sc.base()[i], sc.directions()[i]);
                ratio_err = ratio_err.max((cosh_ratio(&sc, i, t) - (u.time + w.time * t.tanh())).abs());
            }
        }
        let rep = spin_report(&sc).map_err(|e| e.to_string())?;
        let row = rep.rows.iter().find(|r| r.t == 20.0).ok_or("no row at t = 20")?;
        dist20 = row.endpoint_distances.iter().cloned().fold(dist20, f64::max);
        angle20 = angle20.max(row.max_angle_error.ok_or("no angles at t = 20")?);
    }
    ensure(ratio_err <= 1e-12, || format!("cosh ratio error {ratio_err:e}"))?;
    ensure(dist20 < 1e-6 && angle20 < 1e-6, || format!("t = 20: distance {dist20:e}, angle {angle20:e}"))?;
    // rays from the model point
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model_err: f64 = 0.0;
    for _ in 0..25 {
        let ends = std::array::from_fn(|_| oracles::random_unit(&mut rng));
        let Ok(sc) = SpinScenario::toward([[0.0; 3]; 4], ends, default_times()) else { continue };
        for &t in sc.times() {
            for i in 0..4 {
                model_err = model_err.max((cosh_ratio(&sc, i, t) - 1.0).abs());
            }
        }
    }
    ensure(model_err <= 1e-15, || format!("model geodesic ratio error {model_err:e}"))?;
    Ok(format!("ratio {ratio_err:.1e}, t = 20 distance {dist20:.1e} angle {angle20:.1e}, model {model_err:.1e}"))
}

fn combinatorics() -> Result<String, String> {
    let mut names = Vec::new();
    for (name, tri) in common::all_triangulations() {
        let report = validate(&tri);
        let c = report.counts;
        ensure(c.edges == c.vertices + c.tets, || format!("{name}: E = {}, V + T = {}", c.edges, c.vertices + c.tets))?;
        ensure(report.links.iter().all(|l| l.euler_characteristic == 2), || format!("{name}: link χ ≠ 2"))?;
        let edges = edge_classes(&tri).unwrap();
        let m = gluing_matrix(&tri, &edges);
        ensure((0..m.cols()).all(|col| m.column_sum(col) == 2), || format!("{name}: column sum ≠ 2"))?;
        ensure(edges.iter().enumerate().all(|(e, class)| m.row_sum(e) == class.valence()), || {
            format!("{name}: row sum ≠ valence")
        })?;
        names.push(format!("{name} (T={} E={} V={})", c.tets, c.edges, c.vertices));
    }
    Ok(names.join(", "))
}

fn determinism() -> Result<String, String> {
    let mut sizes = Vec::new();
    for name in ["l41.json", "weeks.json"] {
        let path = fixture(name);
        let args = ["solve", path.as_str(), "--seed", "17", "--restarts", "128"];
        let (a, _) = hypglue(&args);
        let (b, _) = hypglue(&args);
        let mut single = args.to_vec();
        single.extend(["--threads", "1"]);
        let (c, _) = hypglue(&single);
        ensure(a.status.success(), || format!("{name}: exit {:?}", a.status.code()))?;
        ensure(a.stdout == b.stdout, || format!("{name}: outputs differ between runs"))?;
        ensure(a.stdout == c.stdout, || format!("{name}: outputs differ with --threads 1"))?;
        sizes.push(format!("{name} {} bytes", a.stdout.len()));
    }
    Ok(sizes.join(", "))
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("L(4,1) golden solution", l41_golden),
        ("Weeks volume pair and holonomy", weeks),
        ("Jacobian vs finite differences", jacobian),
        ("lower half plane and conjugation", lower_half_plane),
        ("Lobachevsky accuracy", lobachevsky_accuracy),
        ("straightening naturality", naturality),
        ("spinning convergence", spinning),
        ("combinatorial invariants", combinatorics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS {}: {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
