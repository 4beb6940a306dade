#![allow(dead_code)]

use infoseq_core::gaussian::check_non_redundancy;
use infoseq_core::Environment;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entry in `±[lo, hi]` with a random sign.
pub fn signed(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let x = rng.random_range(lo..hi);
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

/// Well-conditioned SPD matrix `A Aᵀ + δ I`.
pub fn random_spd(rng: &mut impl Rng, k: usize, delta: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(k, k) * delta;
    (&m + m.transpose()) * 0.5
}

/// Random valid, non-redundant environment with a well-conditioned `C`.
pub fn random_environment(rng: &mut impl Rng, k: usize) -> Environment {
    loop {
        let cov = random_spd(rng, k, 0.3);
        let coeffs = DMatrix::from_fn(k, k, |i, j| {
            let x = rng.random_range(-1.0..1.0);
            if i == j {
                x + if x >= 0.0 { 1.0 } else { -1.0 }
            } else {
                x
            }
        });
        let noise: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..2.0)).collect();
        let mean: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let env = Environment::new(mean, cov, coeffs, noise).expect("square");
        let nr = check_non_redundancy(&env);
        let well_posed = nr
            .first_row
            .as_ref()
            .is_some_and(|row| row.iter().all(|x| x.abs() > 0.05 && x.abs() < 20.0));
        if nr.holds && well_posed {
            return env;
        }
    }
}
