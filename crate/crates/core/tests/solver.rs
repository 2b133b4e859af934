mod common;

use hypglue_core::equations::GluingSystem;
use hypglue_core::solver::{
    max_volume, newton_refine, solve_all, tangent_volume_derivative, volume, Census, SolverOptions,
};
use hypglue_core::shapes::C64;
use hypglue_core::triangulation::{relabel_tetrahedron, Perm4};

const WEEKS_VOLUME: f64 = 0.9427;

#[test]
fn l41_unique_solution() {
    let system = GluingSystem::from_triangulation(&common::l41()).unwrap();
    let recs = solve_all(&system, &SolverOptions::default());
    assert_eq!(recs.len(), 1);
    let triple = system.expand(&recs[0].shapes).unwrap();
    for (got, want) in triple.iter().zip([C64::new(-1.0, 0.0), C64::new(0.5, 0.0), C64::new(2.0, 0.0)]) {
        assert!((got - want).norm() < 1e-9);
    }
    assert!(recs[0].volume.abs() < 1e-12);
    assert_eq!(recs[0].census, Census { positive: 0, flat: 1, negative: 0 });
    assert_eq!(recs[0].jacobian_corank, 0);
}

#[test]
fn weeks_volume_pair() {
    let system = GluingSystem::from_triangulation(&common::weeks()).unwrap();
    let recs = solve_all(&system, &SolverOptions::default());
    let best = max_volume(&recs).unwrap();
    assert!((best.volume - WEEKS_VOLUME).abs() < 5e-4);
    assert!(recs.iter().any(|r| (r.volume + best.volume).abs() < 1e-8));
    // records come sorted by volume
    assert!(recs.windows(2).all(|w| w[0].volume >= w[1].volume));
    assert!(best.max_residual < 1e-10);
}

/// Every solution has a tetrahedron in the closed lower half plane, and its
/// conjugate is a solution of opposite volume.
#[test]
fn lower_half_plane_and_conjugation() {
    let cases = [
        ("l41", common::l41(), 512),
        ("weeks", common::weeks(), 512),
        ("l41/sub", common::l41_subdivided(), 24),
    ];
    for (name, tri, restarts) in cases {
        let system = GluingSystem::from_triangulation(&tri).unwrap();
        let mut seen = 0;
        for seed in 0..10 {
            let opts = SolverOptions { seed, restarts, ..Default::default() };
            for rec in solve_all(&system, &opts) {
                seen += 1;
                assert!(rec.has_nonpositive_tet(), "{name} seed {seed}");
                let conj = rec.shapes.conj();
                assert!(system.max_residual(&conj).unwrap() < 1e-11, "{name} seed {seed}");
                assert!((volume(&conj).unwrap() + rec.volume).abs() < 1e-10, "{name} seed {seed}");
            }
        }
        assert!(seen > 0, "{name}");
    }
}

#[test]
fn volume_is_constant_along_kernel_directions() {
    let system = GluingSystem::from_triangulation(&common::weeks()).unwrap();
    let recs = solve_all(&system, &SolverOptions { restarts: 32, ..Default::default() });
    assert!(!recs.is_empty());
    for rec in &recs {
        assert_eq!(rec.jacobian_corank, 1);
        let d = tangent_volume_derivative(&system, rec, 1e-8).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|x| x.abs() < 1e-6), "{d:?}");
    }
}

#[test]
fn block_system_has_the_summed_corank() {
    let weeks = GluingSystem::from_triangulation(&common::weeks()).unwrap();
    let opts = SolverOptions { restarts: 16, ..Default::default() };
    let a = solve_all(&weeks, &opts).remove(0);
    let block = GluingSystem::block(&weeks, &weeks);
    let mut shapes = a.shapes.shapes().to_vec();
    shapes.extend(a.shapes.conj().shapes());
    let start = hypglue_core::equations::ShapeAssignment::new(shapes);
    let rec = newton_refine(&block, &start, &SolverOptions::default()).unwrap();
    assert_eq!(rec.jacobian_corank, 2);
    assert!(rec.volume.abs() < 1e-9);
    let d = tangent_volume_derivative(&block, &rec, 1e-8).unwrap();
    assert_eq!(d.len(), 4);
    assert!(d.iter().all(|x| x.abs() < 1e-6), "{d:?}");

    let l41 = GluingSystem::from_triangulation(&common::l41()).unwrap();
    let l41_rec = solve_all(&l41, &SolverOptions::default()).remove(0);
    assert!(tangent_volume_derivative(&l41, &l41_rec, 1e-8).unwrap().is_empty());
}

#[test]
fn subdivided_l41_solutions_have_positive_corank() {
    let system = GluingSystem::from_triangulation(&common::l41_subdivided()).unwrap();
    let recs = solve_all(&system, &SolverOptions { restarts: 24, ..Default::default() });
    assert!(!recs.is_empty());
    for rec in &recs {
        assert!(rec.volume.abs() < 1e-9);
        assert!(rec.jacobian_corank > 0);
        let d = tangent_volume_derivative(&system, rec, 1e-8).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-6), "{d:?}");
    }
}

#[test]
fn negatively_labelled_tetrahedron_is_handled() {
    let tri = relabel_tetrahedron(&common::weeks(), 4, Perm4::swap(1, 3));
    let system = GluingSystem::from_triangulation(&tri).unwrap();
    let recs = solve_all(&system, &SolverOptions { restarts: 128, ..Default::default() });
    let best = max_volume(&recs).unwrap();
    assert!((best.volume - WEEKS_VOLUME).abs() < 5e-4);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let system = GluingSystem::from_triangulation(&common::weeks()).unwrap();
    let one = solve_all(&system, &SolverOptions { restarts: 24, threads: Some(1), ..Default::default() });
    let three = solve_all(&system, &SolverOptions { restarts: 24, threads: Some(3), ..Default::default() });
    assert_eq!(one, three);
}
