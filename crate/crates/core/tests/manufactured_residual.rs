//! The frozen manufactured sources against an automatic-differentiation oracle.

mod common;

use common::jet::{residuals, strong_residual_sample};
use mrbc_core::problems::manufactured_forcing;
use mrbc_core::scheme::PhysicalParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn forcing_matches_strong_form_at_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let params = PhysicalParams::new(0.1, 0.1, 1.0, 0.1);
    let worst = residuals(&params, &mut rng, 100);
    assert!(worst <= 1e-10, "relative residual {worst:e}");
}

#[test]
fn forcing_tracks_parameter_changes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let mut p = PhysicalParams::new(
            rng.gen_range(0.01..2.0),
            rng.gen_range(0.01..2.0),
            rng.gen_range(0.001..2.0),
            rng.gen_range(0.01..2.0),
        );
        p.zeta = rng.gen_range(0.5..2.0);
        let worst = residuals(&p, &mut rng, 20);
        assert!(worst <= 1e-10, "{p:?}: {worst:e}");
    }
}

#[test]
fn oracle_detects_a_wrong_coefficient() {
    let good = PhysicalParams::new(0.1, 0.1, 1.0, 0.1);
    let mut wrong = good;
    wrong.kappa = 0.11;
    let f = manufactured_forcing(&wrong);
    let r = strong_residual_sample(&good, &f, 0.3, 0.7, 0.4);
    assert!(r > 1e-3, "{r:e}");
}
