//! Periodic one-dimensional grid, sampled fields and Fourier-side operators.
//!
//! The real line is truncated to the periodic box `[-L, L)` sampled at
//!
//! ```text
//! x_i = -L + i dx,   dx = 2L / N,   i = 0..N-1
//! k_j = pi j / L,    j in {0, 1, .., N/2-1, -N/2, .., -1}   (FFT order)
//! ```
//!
//! Fourier coefficients are normalized as `c_j = (1/N) sum_i f_i e^{-2 pi i ij/N}`,
//! so that a single cosine mode of unit amplitude has two coefficients of
//! modulus 1/2 and Parseval reads `sum_i f_i^2 dx = 2L sum_j |c_j|^2`.
//! All norms use the physical measure `dx`, so they approximate integrals over
//! the line for fields that decay inside the box.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Relative boundary magnitude above which a field is considered to feel the
/// artificial periodicity of the box.
pub const POLLUTION_TOLERANCE: f64 = 1e-10;

/// Uniform periodic grid on `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_width: f64,
    n_points: usize,
}

impl Grid1D {
    /// Creates a grid with half width `L` and `N` points.
    ///
    /// `N` must be a power of two no smaller than 16 and `L` positive and finite.
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return config(format!("half width must be positive and finite, got {half_width}"));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return config(format!("point count must be a power of two >= 16, got {n_points}"));
        }
        Ok(Self { half_width, n_points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Period length `2L`.
    pub fn length(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Grid spacing `2L / N`. Exact because `N` is a power of two.
    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    /// Coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Signed mode number of FFT slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n_points as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        std::f64::consts::PI * self.mode(idx) as f64 / self.half_width
    }

    /// Wavenumber table in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.wavenumber(i)).collect()
    }

    /// FFT slot of the Nyquist mode `j = -N/2`.
    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    /// Largest |j| kept by the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n_points / 3
    }

    /// Whether slot `idx` survives 2/3-rule dealiasing.
    pub fn is_retained(&self, idx: usize) -> bool {
        self.mode(idx).unsigned_abs() as usize <= self.dealias_cutoff()
    }

    /// Whether slot `idx` lies in the top third of the retained band,
    /// `2N/9 < |j| <= N/3`.
    pub fn is_tail(&self, idx: usize) -> bool {
        let j = self.mode(idx).unsigned_abs() as usize;
        j > 2 * self.n_points / 9 && j <= self.dealias_cutoff()
    }

    /// Symbol of `d^order/dx^order` in FFT order: `(ik)^order`, with the Nyquist
    /// slot zeroed for odd orders so that real fields stay real.
    pub fn derivative_symbol(&self, order: u32) -> Vec<Complex64> {
        let nyq = self.nyquist_index();
        (0..self.n_points)
            .map(|idx| {
                if order % 2 == 1 && idx == nyq {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, self.wavenumber(idx)).powu(order)
            })
            .collect()
    }
}

/// Real samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealField {
    grid: Grid1D,
    samples: Vec<f64>,
}

impl RealField {
    /// Wraps a sample vector; fails when its length differs from the grid size.
    pub fn new(grid: Grid1D, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return config(format!(
                "sample length {} does not match grid size {}",
                samples.len(),
                grid.n_points()
            ));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, samples: vec![0.0; grid.n_points()] }
    }

    /// Samples `f(x_i)` at every grid point.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// Pointwise map into a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination `f(a_i, b_i)` of two fields on the same grid.
    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn sub(&self, other: &RealField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &RealField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub(crate) fn same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid != other.grid {
            return config("fields live on different grids");
        }
        Ok(())
    }
}

/// Discrete Fourier coefficients of a field, index-aligned with
/// [`Grid1D::wavenumbers`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid1D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid1D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return config(format!(
                "coefficient length {} does not match grid size {}",
                coeffs.len(),
                grid.n_points()
            ));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest violation of `c_{-j} = conj(c_j)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for j in 1..n / 2 {
            worst = worst.max((self.coeffs[j] - self.coeffs[n - j].conj()).norm());
        }
        worst
    }

    /// Multiplies every coefficient by `symbol(idx)`.
    pub fn apply(&mut self, symbol: impl Fn(usize) -> Complex64) {
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            *c *= symbol(idx);
        }
    }
}

/// Cached forward and inverse FFT plans for one transform length, plus scratch.
///
/// The forward transform includes the `1/N` normalization.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buffer: Vec<Complex64>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("n", &self.n).finish()
    }
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            buffer: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Real samples to normalized coefficients.
    pub fn forward_real(&mut self, samples: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(samples.len(), self.n);
        for (o, &s) in out.iter_mut().zip(samples) {
            *o = Complex64::new(s, 0.0);
        }
        self.forward.process_with_scratch(out, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for o in out.iter_mut() {
            *o *= scale;
        }
    }

    /// Coefficients to real samples (imaginary round-off discarded).
    pub fn inverse_real(&mut self, coeffs: &[Complex64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n);
        self.buffer.copy_from_slice(coeffs);
        self.inverse.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re;
        }
    }
}

/// Forward transform of a real field.
pub fn to_spectral(f: &RealField) -> SpectralField {
    let n = f.grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    Fourier::new(n).forward_real(&f.samples, &mut coeffs);
    SpectralField { grid: f.grid, coeffs }
}

/// Inverse transform; the result is the real part of the synthesized samples.
pub fn to_physical(spec: &SpectralField) -> RealField {
    let n = spec.grid.n_points();
    let mut samples = vec![0.0; n];
    Fourier::new(n).inverse_real(&spec.coeffs, &mut samples);
    RealField { grid: spec.grid, samples }
}

/// Spectral derivative of order 1, 2 or 3.
pub fn derivative(f: &RealField, order: u32) -> Result<RealField> {
    if !(1..=3).contains(&order) {
        return config(format!("derivative order must be 1, 2 or 3, got {order}"));
    }
    let symbol = f.grid.derivative_symbol(order);
    let mut spec = to_spectral(f);
    spec.apply(|idx| symbol[idx]);
    Ok(to_physical(&spec))
}

/// Solves `g - g'' = f` by dividing each coefficient by `1 + k^2`.
pub fn helmholtz_inverse(f: &RealField) -> RealField {
    let grid = f.grid;
    let mut spec = to_spectral(f);
    spec.apply(|idx| {
        let k = grid.wavenumber(idx);
        Complex64::new(1.0 / (1.0 + k * k), 0.0)
    });
    to_physical(&spec)
}

/// Applies `1 - d^2/dx^2` spectrally.
pub fn helmholtz_forward(f: &RealField) -> RealField {
    let grid = f.grid;
    let mut spec = to_spectral(f);
    spec.apply(|idx| {
        let k = grid.wavenumber(idx);
        Complex64::new(1.0 + k * k, 0.0)
    });
    to_physical(&spec)
}

/// Periodized Green kernel `sum_n (1/2) exp(-|z + 2Ln|)`, with the image sum
/// truncated once terms drop below `1e-16`.
pub fn periodized_kernel(z: f64, half_width: f64) -> f64 {
    let period = 2.0 * half_width;
    let s = z.rem_euclid(period);
    let mut total = 0.0;
    // Images to the right of the base point: s, s + 2L, s + 4L, ...
    let mut n = 0.0;
    loop {
        let term = 0.5 * (-(s + n * period)).exp();
        total += term;
        if term < 1e-16 {
            break;
        }
        n += 1.0;
    }
    // Images to the left: 2L - s, 4L - s, ...
    let mut n = 1.0;
    loop {
        let term = 0.5 * (-(n * period - s)).exp();
        total += term;
        if term < 1e-16 {
            break;
        }
        n += 1.0;
    }
    total
}

/// Endpoint coefficients of Gregory's corrected trapezoid rule.
const GREGORY: [f64; 8] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
    33953.0 / 3628800.0,
    8183.0 / 1036800.0,
];

/// Quadrature weights on `m = 0..=n` (unit spacing) for the Gregory rule with
/// `order` difference corrections at each end.
pub fn gregory_weights(n: usize, order: usize) -> Vec<f64> {
    assert!(order <= GREGORY.len() && n >= 2 * order + 1);
    let mut w = vec![1.0; n + 1];
    w[0] = 0.5;
    w[n] = 0.5;
    for p in 1..=order {
        let gamma = GREGORY[p - 1];
        let mut binom = 1.0;
        for q in 0..=p {
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            w[q] -= gamma * sign * binom;
            w[n - q] -= gamma * sign * binom;
            binom = binom * (p - q) as f64 / (q + 1) as f64;
        }
    }
    w
}

/// Circular convolution with the periodized kernel by direct quadrature.
///
/// For each output point the integral `int_0^{2L} G_per(s) f(x_i + s) ds` is
/// evaluated on the grid. Starting the period at the kernel's kink keeps the
/// integrand smooth on the closed interval, so the trapezoid rule with
/// Gregory endpoint corrections converges at high order. This path never
/// touches the FFT and serves as an independent check of
/// [`helmholtz_inverse`].
pub fn green_convolve(f: &RealField) -> RealField {
    let grid = f.grid;
    let n = grid.n_points();
    let dx = grid.dx();
    let w = gregory_weights(n, GREGORY.len());
    let mut omega: Vec<f64> =
        (0..n).map(|m| dx * w[m] * periodized_kernel(m as f64 * dx, grid.half_width())).collect();
    omega[0] += dx * w[n] * periodized_kernel(grid.length(), grid.half_width());
    let fs = &f.samples;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (m, &o) in omega.iter().enumerate() {
                acc += o * fs[(i + m) % n];
            }
            acc
        })
        .collect();
    RealField { grid, samples }
}

/// `H^s` norm `(2L sum_j (1 + k_j^2)^s |c_j|^2)^{1/2}`; for `s = 0` this is the
/// same Riemann sum as [`lp_norm`] with `p = 2`.
pub fn sobolev_norm(f: &RealField, s: f64) -> f64 {
    debug_assert!((-4.0..=4.0).contains(&s), "smoothness index out of range");
    if s == 0.0 {
        return riemann_l2(f);
    }
    sobolev_norm_spectral(&to_spectral(f), s)
}

/// `H^s` norm evaluated from coefficients.
pub fn sobolev_norm_spectral(spec: &SpectralField, s: f64) -> f64 {
    let grid = spec.grid;
    let sum: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavenumber(idx);
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum();
    (grid.length() * sum).sqrt()
}

fn riemann_l2(f: &RealField) -> f64 {
    (f.samples.iter().map(|v| v * v).sum::<f64>() * f.grid.dx()).sqrt()
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return config(format!("Lebesgue exponent must lie in [1, inf], got {p}"));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    if p == 2.0 {
        return Ok(riemann_l2(f));
    }
    let sum: f64 = f.samples.iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * f.grid.dx()).powf(1.0 / p))
}

/// `L^2` norm shorthand.
pub fn l2_norm(f: &RealField) -> f64 {
    riemann_l2(f)
}

/// Boundary magnitude `max(|f(-L)|, |f(L - dx)|)` relative to `max |f|`.
pub fn domain_pollution(f: &RealField) -> f64 {
    let peak = f.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let n = f.samples.len();
    f.samples[0].abs().max(f.samples[n - 1].abs()) / peak
}

/// Fails when the field does not decay to `1e-10` of its maximum at the box edge.
pub fn check_domain(f: &RealField) -> Result<()> {
    let p = domain_pollution(f);
    if p > POLLUTION_TOLERANCE {
        return Err(Error::Config(format!(
            "field does not decay inside the box: boundary/max = {p:.3e} > {POLLUTION_TOLERANCE:e}"
        )));
    }
    Ok(())
}
