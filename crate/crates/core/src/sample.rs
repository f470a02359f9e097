//! Seeded random generators for tests, benches, and the verification suites.
//!
//! All randomness flows through ChaCha8 (a counter-based stream cipher RNG):
//! `rng_for(seed, stream)` gives an independent, platform-stable stream per
//! trial so that sharded runs reproduce serial ones exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::charts::{ChartCenter, ChartPoint};
use crate::matrix::{c, CMatrix, Tolerance, C64};

pub type TodaRng = ChaCha8Rng;

pub fn rng_for(seed: u64, stream: u64) -> TodaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal(rng: &mut TodaRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian scaled by `scale` (each part has variance `scale²/2`).
pub fn complex_normal(rng: &mut TodaRng, scale: f64) -> C64 {
    let s = scale * std::f64::consts::FRAC_1_SQRT_2;
    c(s * normal(rng), s * normal(rng))
}

pub fn random_matrix(rng: &mut TodaRng, n: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = complex_normal(rng, scale);
        }
    }
    m
}

pub fn random_real_matrix(rng: &mut TodaRng, n: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = c(scale * normal(rng), 0.0);
        }
    }
    m
}

pub fn random_traceless(rng: &mut TodaRng, n: usize, scale: f64) -> CMatrix {
    let m = random_matrix(rng, n, scale);
    let shift = m.trace() / n as f64;
    &m - &CMatrix::identity(n).scale(shift)
}

pub fn random_strict_lower(rng: &mut TodaRng, n: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = complex_normal(rng, scale);
        }
    }
    m
}

pub fn random_unit_lower(rng: &mut TodaRng, n: usize, scale: f64) -> CMatrix {
    &random_strict_lower(rng, n, scale) + &CMatrix::identity(n)
}

fn min_gap(lambda: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            g = g.min((lambda[i] - lambda[j]).norm());
        }
    }
    g
}

/// Sum-zero complex spectrum with entries of size `scale` and pairwise gaps at least `gap`.
pub fn random_spectrum(rng: &mut TodaRng, n: usize, scale: f64, gap: f64) -> Vec<C64> {
    loop {
        let mut lambda: Vec<C64> = (0..n).map(|_| complex_normal(rng, scale)).collect();
        let mean = lambda.iter().sum::<C64>() / n as f64;
        lambda.iter_mut().for_each(|l| *l -= mean);
        if n == 1 || min_gap(&lambda) >= gap {
            return lambda;
        }
    }
}

/// Real sum-zero spectrum with pairwise gaps at least `gap`.
pub fn random_real_spectrum(rng: &mut TodaRng, n: usize, scale: f64, gap: f64) -> Vec<C64> {
    loop {
        let mut lambda: Vec<f64> = (0..n).map(|_| scale * normal(rng)).collect();
        let mean = lambda.iter().sum::<f64>() / n as f64;
        lambda.iter_mut().for_each(|l| *l -= mean);
        let lambda: Vec<C64> = lambda.into_iter().map(|x| c(x, 0.0)).collect();
        if n == 1 || min_gap(&lambda) >= gap {
            return lambda;
        }
    }
}

pub fn random_center(rng: &mut TodaRng, n: usize, tol: Tolerance) -> ChartCenter {
    let lambda = random_spectrum(rng, n, 1.0, 0.3);
    ChartCenter::new(lambda, tol).expect("sampled spectrum is simple and sum-zero")
}

/// Chart coordinates with entries of size `scale`.
pub fn random_chart_point(rng: &mut TodaRng, center: &ChartCenter, scale: f64) -> ChartPoint {
    let n = center.n();
    let y = random_strict_lower(rng, n, scale);
    let z = random_strict_lower(rng, n, scale);
    ChartPoint::new(y, z, center.clone()).expect("strictly lower by construction")
}

/// `G Λ G⁻¹` for a Gaussian `G` (conditioned to be invertible).
pub fn random_orbit_point(rng: &mut TodaRng, center: &ChartCenter) -> CMatrix {
    let n = center.n();
    loop {
        let g = random_matrix(rng, n, 1.0);
        if let Ok(gi) = g.inverse() {
            let x = &(&g * center.as_matrix()) * &gi;
            if x.is_finite() {
                return x;
            }
        }
    }
}
