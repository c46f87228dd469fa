use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skinfem::fem::{assemble_condensed, Coefficients, FeSpace, SourceSpec};
use skinfem::geometry::ConfigId;
use skinfem::linsolve::factor;
use skinfem::mesh::MeshSpec;
use skinfem::physics::PhysicalParams;

#[test]
fn largest_system_recovers_known_solution() {
    let mesh = Arc::new(MeshSpec::new(6).build(ConfigId::B1).unwrap());
    let space = FeSpace::new(mesh, 20).unwrap();
    let params = PhysicalParams::with_sigma(80.0).unwrap();
    let cs = assemble_condensed(
        &space,
        &Coefficients::from_params(&params),
        &SourceSpec::for_config(ConfigId::B1),
    )
    .unwrap();
    let a = &cs.system.matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x: Vec<Complex64> = (0..a.dim())
        .map(|_| Complex64::new(rng.gen(), rng.gen()))
        .collect();
    let b = a.mul_vec(&x).unwrap();
    let got = factor(a).unwrap().solve(&b).unwrap();
    let num: f64 = x.iter().zip(&got).map(|(u, v)| (u - v).norm_sqr()).sum();
    let den: f64 = x.iter().map(|u| u.norm_sqr()).sum();
    assert!(
        (num / den).sqrt() <= 1e-10,
        "relative error {}",
        (num / den).sqrt()
    );
}
