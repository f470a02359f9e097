//! Seeded fixtures shared by the benchmarks.

use toda_core::charts::chart_inverse;
use toda_core::sample::{random_center, random_chart_point, random_matrix, rng_for};
use toda_core::{CMatrix, ChartCenter, Tolerance};

pub const SEED: u64 = 7;

/// A chart center and a point well inside its chart.
pub fn chart_fixture(n: usize) -> (ChartCenter, CMatrix) {
    let mut rng = rng_for(SEED, n as u64);
    let ce = random_center(&mut rng, n, Tolerance::default());
    let x = chart_inverse(&random_chart_point(&mut rng, &ce, 1.0)).expect("interior point");
    (ce, x)
}

pub fn gaussian(n: usize) -> CMatrix {
    random_matrix(&mut rng_for(SEED + 1, n as u64), n, 1.0)
}
