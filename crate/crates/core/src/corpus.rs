//! Seeded generators for test and audit corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid1D, RealField};

/// Random trigonometric polynomial with modes `|j| <= max_mode`.
///
/// Mode `j` gets cosine and sine amplitudes drawn uniformly from
/// `[-1, 1] / (1 + j)`. The same seed always yields the same field.
pub fn random_bandlimited(grid: Grid1D, max_mode: usize, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = std::f64::consts::PI / grid.half_width();
    let amps: Vec<(f64, f64)> = (0..=max_mode)
        .map(|j| {
            let scale = 1.0 / (1.0 + j as f64);
            (rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale)
        })
        .collect();
    RealField::from_fn(grid, |x| {
        amps.iter().enumerate().fold(0.0, |acc, (j, &(a, b))| {
            let kx = base * j as f64 * x;
            if j == 0 {
                acc + a
            } else {
                acc + a * kx.cos() + b * kx.sin()
            }
        })
    })
}

/// Sum of `count` Gaussian bumps with random signs, centers in the middle half
/// of the box and widths between `L/40` and `L/12`, so that the field decays
/// far below `1e-12` of its peak at the box edge.
pub fn random_decaying(grid: Grid1D, count: usize, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let bumps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let amp = rng.gen_range(-1.0..1.0);
            let center = rng.gen_range(-0.25 * l..0.25 * l);
            let width = rng.gen_range(l / 40.0..l / 12.0);
            (amp, center, width)
        })
        .collect();
    RealField::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|&(a, c, w)| a * (-((x - c) / w).powi(2) / 2.0).exp())
            .sum()
    })
}
