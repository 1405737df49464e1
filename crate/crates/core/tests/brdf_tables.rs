use std::f64::consts::PI;

use hvl_core::brdf::{BrdfModel, BrdfTable, DEFAULT_THETA_STEPS};
use hvl_core::math::{Direction, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative L2 error of `F′` reconstructions against direct evaluation over
/// 200 random `(θ_o, ω_i)` pairs with `ω_i` above the surface.
fn f_prime_error(model: &BrdfModel, bands: usize) -> f64 {
    let table = BrdfTable::tabulate(model, bands, DEFAULT_THETA_STEPS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..200 {
        let theta_o: f64 = rng.random_range(0.0..PI / 2.0);
        let cos_i: f64 = rng.random_range(0.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let wi = Direction::from_spherical(cos_i.acos(), phi);
        let wo = Direction::from_spherical(theta_o, 0.0);
        let exact = model.eval(wi, wo, Direction::Z);
        let approx = table.lookup(theta_o, true).reconstruct(wi);
        num += (approx - exact).length_squared();
        den += exact.length_squared();
    }
    (num / den).sqrt()
}

#[test]
fn lambertian_tables_are_exact() {
    let m = BrdfModel::lambertian(Rgb::new(0.7, 0.4, 0.2));
    for bands in [1, 3, 6] {
        assert!(f_prime_error(&m, bands) < 1e-12, "bands {bands}");
    }
}

#[test]
fn ggx_error_decreases_with_bands() {
    let m = BrdfModel::ggx(Rgb::splat(0.9), 0.5);
    let errors: Vec<f64> = [3, 6, 10].iter().map(|&b| f_prime_error(&m, b)).collect();
    println!("ggx roughness 0.5, relative L2 at 3/6/10 bands: {errors:?}");
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn tables_are_finite_for_every_model() {
    let models = [
        BrdfModel::lambertian(Rgb::splat(1.0)),
        BrdfModel::ggx(Rgb::splat(1.0), 0.05),
        BrdfModel::ggx(Rgb::splat(1.0), 1.0),
        BrdfModel::Phong { diffuse: Rgb::splat(0.3), specular: Rgb::splat(0.6), exponent: 40.0 },
    ];
    for m in &models {
        let t = BrdfTable::tabulate(m, 6, 30).unwrap();
        assert!(t.entries_f().iter().chain(t.entries_f_prime()).all(|e| e.is_finite()));
    }
}
