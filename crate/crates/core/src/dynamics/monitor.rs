//! Pointwise and spectral monitors.

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::grid::{self, Grid1D, RealField};

/// Grid extremum of periodic samples refined by a three-point parabola.
///
/// With neighbours `a, b, c` around the grid extremum `b`,
///
/// ```text
/// offset = (a - c) / (2 (a - 2b + c))          in cells
/// value  = b - (a - c)^2 / (8 (a - 2b + c))
/// ```
///
/// Returns `(value, location)`. A flat or wrongly curved triple keeps the
/// grid value.
pub fn refined_extremum(samples: &[f64], grid: &Grid1D, minimize: bool) -> (f64, f64) {
    let n = samples.len();
    let pick = |a: f64, b: f64| if minimize { a < b } else { a > b };
    let mut best = 0;
    for i in 1..n {
        if pick(samples[i], samples[best]) {
            best = i;
        }
    }
    let a = samples[(best + n - 1) % n];
    let b = samples[best];
    let c = samples[(best + 1) % n];
    let curvature = a - 2.0 * b + c;
    let proper = if minimize { curvature > 0.0 } else { curvature < 0.0 };
    let (value, offset) = if proper {
        (b - (a - c) * (a - c) / (8.0 * curvature), (a - c) / (2.0 * curvature))
    } else {
        (b, 0.0)
    };
    let mut x = grid.x(best) + offset * grid.dx();
    let l = grid.half_width();
    if x >= l {
        x -= 2.0 * l;
    } else if x < -l {
        x += 2.0 * l;
    }
    (value, x)
}

/// Refined minimum of the spectral `u_xx` and its location.
pub fn min_uxx(u: &RealField) -> Result<(f64, f64)> {
    let uxx = grid::derivative(u, 2)?;
    Ok(refined_extremum(uxx.samples(), u.grid(), true))
}

/// `(E, E_tail)` where `E = 2L sum (1 + k^2)|c|^2` and `E_tail` restricts the
/// sum to the top third of the retained band.
pub(crate) fn energy_split(uh: &[Complex64], grid: &Grid1D, k2: &[f64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, (c, k2)) in uh.iter().zip(k2).enumerate() {
        let e = (1.0 + k2) * c.norm_sqr();
        total += e;
        if grid.is_tail(i) {
            tail += e;
        }
    }
    (grid.length() * total, grid.length() * tail)
}

/// Share of the `H^1` energy held by the top third of the retained band.
pub fn tail_fraction(u: &RealField) -> f64 {
    let g = *u.grid();
    let spec = grid::to_spectral(u);
    let k2: Vec<f64> = g.wavenumbers().iter().map(|k| k * k).collect();
    let (total, tail) = energy_split(spec.coeffs(), &g, &k2);
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}
