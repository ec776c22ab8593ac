//! Right-hand-side evaluators.
//!
//! All three forms return `u_t` in coefficient space:
//!
//! ```text
//! spectral:  u_t = (1 - d^2)^{-1} d(2 + d) w^2,            w = 2u - u_x
//! m-form:    m_t = 2m^2 + (8u_x - 4u) m + (4u - 2u_x) m_x + 2(u + u_x)^2
//! u-form:    u_t = 4u u_x - u_x^2 + G * [d(2u_x^2 + 6u^2) + u_x^2]
//! ```
//!
//! Every pointwise product is projected onto the 2/3-rule band when
//! dealiasing is on. Products of two band-limited fields alias only into the
//! discarded top third, so the three forms agree to round-off on the band.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Fourier, Grid1D, RealField};

/// Which algebraic form of the equation drives the evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhsForm {
    #[default]
    SpectralForm,
    MForm,
    UForm,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Synthesizes the samples of `symbol * uh` into `out`.
fn synth(
    fourier: &mut Fourier,
    spec: &mut [Complex64],
    out: &mut [f64],
    uh: &[Complex64],
    symbol: impl Fn(usize) -> Complex64,
) {
    for (i, s) in spec.iter_mut().enumerate() {
        *s = uh[i] * symbol(i);
    }
    fourier.inverse_real(spec, out);
}

/// Reusable evaluator with precomputed symbols and scratch buffers.
#[derive(Debug, Clone)]
pub struct Evaluator {
    grid: Grid1D,
    form: RhsForm,
    k2: Vec<f64>,
    d1: Vec<Complex64>,
    mask: Vec<f64>,
    fourier: Fourier,
    spec: Vec<Complex64>,
    phys: [Vec<f64>; 4],
    prod: Vec<f64>,
}

impl Evaluator {
    pub fn new(grid: Grid1D, form: RhsForm, dealias: bool) -> Self {
        let n = grid.n_points();
        let k2 = grid.wavenumbers().iter().map(|k| k * k).collect();
        let mask = (0..n).map(|i| if !dealias || grid.is_retained(i) { 1.0 } else { 0.0 }).collect();
        Self {
            grid,
            form,
            k2,
            d1: grid.derivative_symbol(1),
            mask,
            fourier: Fourier::new(n),
            spec: vec![ZERO; n],
            phys: std::array::from_fn(|_| vec![0.0; n]),
            prod: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn form(&self) -> RhsForm {
        self.form
    }

    /// Band projector (all ones without dealiasing).
    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    /// Zeroes the coefficients outside the retained band.
    pub fn project(&self, coeffs: &mut [Complex64]) {
        for (c, &m) in coeffs.iter_mut().zip(&self.mask) {
            *c *= m;
        }
    }

    /// Transforms `self.prod` and projects it onto the band.
    fn analyze_product(&mut self, out: &mut [Complex64]) {
        self.fourier.forward_real(&self.prod, out);
        for (c, &m) in out.iter_mut().zip(&self.mask) {
            *c *= m;
        }
    }

    /// Writes `u_t` (coefficients) for the state `uh` into `out`.
    pub fn rate(&mut self, uh: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        match self.form {
            RhsForm::SpectralForm => self.rate_spectral(uh, out),
            RhsForm::MForm => {
                self.m_rate(uh, out);
                for (c, &k2) in out.iter_mut().zip(&self.k2) {
                    *c /= 1.0 + k2;
                }
            }
            RhsForm::UForm => self.rate_u(uh, out),
        }
        if out.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Diverged("nonfinite right-hand side".into()))
        }
    }

    fn rate_spectral(&mut self, uh: &[Complex64], out: &mut [Complex64]) {
        synth(&mut self.fourier, &mut self.spec, &mut self.phys[0], uh, |i| 2.0 - self.d1[i]);
        for (p, w) in self.prod.iter_mut().zip(&self.phys[0]) {
            *p = w * w;
        }
        self.analyze_product(out);
        for (i, c) in out.iter_mut().enumerate() {
            *c *= (2.0 * self.d1[i] - self.k2[i]) / (1.0 + self.k2[i]);
        }
    }

    /// `m_t` coefficients for the state `uh`.
    pub fn m_rate(&mut self, uh: &[Complex64], out: &mut [Complex64]) {
        let [u, ux, m, mx] = &mut self.phys;
        let (d1, k2) = (&self.d1, &self.k2);
        synth(&mut self.fourier, &mut self.spec, u, uh, |_| Complex64::new(1.0, 0.0));
        synth(&mut self.fourier, &mut self.spec, ux, uh, |i| d1[i]);
        synth(&mut self.fourier, &mut self.spec, m, uh, |i| Complex64::new(1.0 + k2[i], 0.0));
        synth(&mut self.fourier, &mut self.spec, mx, uh, |i| d1[i] * (1.0 + k2[i]));
        let [u, ux, m, mx] = &self.phys;
        for i in 0..self.prod.len() {
            let (u, ux, m, mx) = (u[i], ux[i], m[i], mx[i]);
            self.prod[i] = 2.0 * m * m
                + (8.0 * ux - 4.0 * u) * m
                + (4.0 * u - 2.0 * ux) * mx
                + 2.0 * (u + ux) * (u + ux);
        }
        self.analyze_product(out);
    }

    fn rate_u(&mut self, uh: &[Complex64], out: &mut [Complex64]) {
        let n = out.len();
        {
            let [u, ux, ..] = &mut self.phys;
            let d1 = &self.d1;
            synth(&mut self.fourier, &mut self.spec, u, uh, |_| Complex64::new(1.0, 0.0));
            synth(&mut self.fourier, &mut self.spec, ux, uh, |i| d1[i]);
        }
        let mut flux = vec![ZERO; n];
        let mut lift = vec![ZERO; n];
        {
            let [u, ux, ..] = &self.phys;
            for i in 0..n {
                self.prod[i] = 2.0 * ux[i] * ux[i] + 6.0 * u[i] * u[i];
            }
        }
        self.analyze_product(&mut flux);
        {
            let [_, ux, ..] = &self.phys;
            for i in 0..n {
                self.prod[i] = ux[i] * ux[i];
            }
        }
        self.analyze_product(&mut lift);
        {
            let [u, ux, ..] = &self.phys;
            for i in 0..n {
                self.prod[i] = 4.0 * u[i] * ux[i] - ux[i] * ux[i];
            }
        }
        self.analyze_product(out);
        for i in 0..n {
            out[i] += (self.d1[i] * flux[i] + lift[i]) / (1.0 + self.k2[i]);
        }
    }
}

fn apply_rate(u: &RealField, form: RhsForm) -> Result<RealField> {
    if !u.is_finite() {
        return Err(Error::Diverged("nonfinite input field".into()));
    }
    let g = *u.grid();
    let mut eval = Evaluator::new(g, form, true);
    let n = g.n_points();
    let mut uh = vec![ZERO; n];
    Fourier::new(n).forward_real(u.samples(), &mut uh);
    let mut out = vec![ZERO; n];
    eval.rate(&uh, &mut out)?;
    let mut samples = vec![0.0; n];
    Fourier::new(n).inverse_real(&out, &mut samples);
    RealField::new(g, samples)
}

/// `u_t = (1 - d^2)^{-1} d(2 + d)[(2 - d)u]^2` with dealiased squaring.
pub fn rhs_spectral_form(u: &RealField) -> Result<RealField> {
    apply_rate(u, RhsForm::SpectralForm)
}

/// `m_t` from the momentum form, given `m`; `u` is recovered by Helmholtz inversion.
pub fn rhs_m_form(m: &RealField) -> Result<RealField> {
    if !m.is_finite() {
        return Err(Error::Diverged("nonfinite input field".into()));
    }
    let u = grid::helmholtz_inverse(m);
    let g = *u.grid();
    let n = g.n_points();
    let mut eval = Evaluator::new(g, RhsForm::MForm, true);
    let mut uh = vec![ZERO; n];
    Fourier::new(n).forward_real(u.samples(), &mut uh);
    let mut out = vec![ZERO; n];
    eval.m_rate(&uh, &mut out);
    let mut samples = vec![0.0; n];
    Fourier::new(n).inverse_real(&out, &mut samples);
    let mt = RealField::new(g, samples)?;
    if !mt.is_finite() {
        return Err(Error::Diverged("nonfinite right-hand side".into()));
    }
    Ok(mt)
}

/// `u_t` from the nonlocal transport form with the spectral Helmholtz inverse.
pub fn rhs_u_form(u: &RealField) -> Result<RealField> {
    apply_rate(u, RhsForm::UForm)
}

/// `u_t` from the nonlocal transport form with the kernel convolution done by
/// direct quadrature ([`grid::green_convolve`]).
pub fn rhs_u_form_green(u: &RealField) -> Result<RealField> {
    if !u.is_finite() {
        return Err(Error::Diverged("nonfinite input field".into()));
    }
    let g = *u.grid();
    let project = |f: RealField| -> RealField {
        let mut spec = grid::to_spectral(&f);
        spec.apply(|i| Complex64::new(if g.is_retained(i) { 1.0 } else { 0.0 }, 0.0));
        grid::to_physical(&spec)
    };
    let ux = grid::derivative(u, 1)?;
    let local = project(u.zip_with(&ux, |a, b| 4.0 * a * b - b * b)?);
    let flux = project(u.zip_with(&ux, |a, b| 2.0 * b * b + 6.0 * a * a)?);
    let lift = project(ux.map(|b| b * b));
    let bracket = grid::derivative(&flux, 1)?.add(&lift)?;
    let ut = local.add(&grid::green_convolve(&bracket))?;
    if !ut.is_finite() {
        return Err(Error::Diverged("nonfinite right-hand side".into()));
    }
    Ok(ut)
}
