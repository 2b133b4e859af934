//! Straightening commutes with isometries and restricts to faces.

use hypglue_core::hypgeom::{KleinPoint, StraightSimplex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::oracles::{random_barycentric, random_isometry, random_simplex};

#[test]
fn straightening_is_natural() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (verts, decs) = random_simplex(&mut rng);
        let sigma = StraightSimplex::straighten(&verts, Some(&decs)).unwrap();
        for _ in 0..20 {
            let g = random_isometry(&mut rng);
            // σ_{g·v}: straighten the moved vertices with the moved decorations
            let moved: Vec<KleinPoint<3>> = verts.iter().map(|v| g.apply_klein(v).unwrap()).collect();
            let moved_decs: Vec<f64> =
                sigma.lifts().iter().map(|u| g.apply(u).unwrap().time).collect();
            let tau = StraightSimplex::straighten(&moved, Some(&moved_decs)).unwrap();
            for _ in 0..50 {
                let b = random_barycentric(&mut rng, 4);
                let lhs = g.apply_klein(&sigma.evaluate(&b).unwrap()).unwrap();
                let rhs = tau.evaluate(&b).unwrap();
                worst = worst.max(lhs.distance(&rhs));
            }
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn faces_are_restrictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let faces: [&[usize]; 6] = [&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3], &[0, 2], &[1, 3]];
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (verts, decs) = random_simplex(&mut rng);
        let sigma = StraightSimplex::straighten(&verts, Some(&decs)).unwrap();
        for idx in faces {
            let face = sigma.face(idx);
            for _ in 0..50 {
                let b = random_barycentric(&mut rng, idx.len());
                let mut full = vec![0.0; 4];
                for (k, &i) in idx.iter().enumerate() {
                    full[i] = b[k];
                }
                let d = face.evaluate(&b).unwrap().distance(&sigma.evaluate(&full).unwrap());
                worst = worst.max(d);
            }
        }
    }
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn vertices_are_fixed_by_straightening() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let (verts, decs) = random_simplex(&mut rng);
        let sigma = StraightSimplex::straighten(&verts, Some(&decs)).unwrap();
        for i in 0..4 {
            let mut b = vec![0.0; 4];
            b[i] = 1.0;
            assert!(sigma.evaluate(&b).unwrap().distance(&verts[i]) < 1e-14);
        }
    }
}
