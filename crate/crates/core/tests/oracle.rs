use std::f64::consts::PI;

use rand::Rng;
use ucap::canonical::{canonical_unitary, cartan_decompose, WeylVector};
use ucap::distinguishability::d_min_canonical;
use ucap::entanglement::{capacities_closed_form, concurrence};
use ucap::linalg::{haar_random_unitary, C64};
use ucap::oracle::{
    max_concurrence_product, max_delta_concurrence, min_probe_overlap, numeric_theorem_residual, shard_rng,
    SearchConfig,
};

fn cfg(seed: u64) -> SearchConfig {
    SearchConfig {
        coarse_grid_per_angle: 12,
        restarts: 8,
        seed,
        ..SearchConfig::default()
    }
}

#[test]
fn default_config() {
    let c = SearchConfig::default();
    assert_eq!((c.coarse_grid_per_angle, c.restarts, c.refine_iterations), (24, 32, 200));
    assert_eq!(c.tolerance, 1e-6);
    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<SearchConfig>(&json).unwrap(), c);
}

#[test]
fn product_oracle_matches_closed_form_and_its_argmax() {
    let mut rng = shard_rng(77, 0);
    for i in 0..20 {
        let u = haar_random_unitary(4, &mut rng).unwrap();
        let r = max_concurrence_product(&u, &cfg(i)).unwrap();
        let closed = capacities_closed_form(&cartan_decompose(&u).unwrap().d).c_max_prod;
        assert!((r.value - closed).abs() <= 1e-3, "{} vs {closed}", r.value);
        assert!(r.value >= r.grid_value && r.value <= 1.0);
        let direct = concurrence(&u.apply(&r.argmax_state).unwrap()).unwrap();
        assert!((direct - r.value).abs() <= 1e-10);
    }
}

#[test]
fn probe_oracle_matches_geometry() {
    let mut rng = shard_rng(78, 0);
    for i in 0..50 {
        let x = rng.random_range(0.0..=PI / 4.0);
        let y = rng.random_range(0.0..=x);
        let z = rng.random_range(-y..=y);
        let d = WeylVector::new(x, y, z);
        let ud = canonical_unitary(&d);
        let v = ud.multiply(&ud).unwrap();
        let r = min_probe_overlap(&v, &cfg(i)).unwrap();
        assert!((r.value() - d_min_canonical(&d)).abs() <= 1e-6, "{d:?}");
        let phi = &r.simplex.argmax_state;
        let overlap: C64 = phi.inner(&v.apply(phi).unwrap()).unwrap();
        assert!((overlap.norm() - r.simplex.value).abs() <= 1e-10);
    }
}

#[test]
fn delta_oracle_never_below_product_value() {
    let mut rng = shard_rng(79, 0);
    for i in 0..3 {
        let u = haar_random_unitary(4, &mut rng).unwrap();
        let product = max_concurrence_product(&u, &cfg(i)).unwrap().value;
        let delta = max_delta_concurrence(&u, &cfg(i)).unwrap();
        assert!(delta.value >= product - 1e-6);
        assert!(delta.value >= delta.grid_value);
    }
}

#[test]
fn identical_config_gives_identical_bits() {
    let d = WeylVector::new(0.5, 0.2, 0.1);
    let a = numeric_theorem_residual(&d, &cfg(3)).unwrap();
    let b = numeric_theorem_residual(&d, &cfg(3)).unwrap();
    assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    assert!(a.residual <= 1e-3);
}
