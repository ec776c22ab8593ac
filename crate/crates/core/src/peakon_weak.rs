//! Closed-form peakon and quadrature check of the weak formulation.
//!
//! For speed `c` and `y = x - ct` the traveling wave is
//!
//! ```text
//! u = -(c/6) e^{-y}                        y >= 0
//! u = -(c/2) e^{y} + (c/3) e^{2y}          y <  0
//! w = (2 - d)u = -(c/2) e^{-|y|}
//! m = u - u_xx = -c e^{2y} (y < 0),  0 (y > 0)
//! ```
//!
//! It is continuous and `C^1` at the crest, while `m` jumps by `c`. A function
//! `u` is a weak solution when for every test function `phi`
//!
//! ```text
//! int_0^T int (phi_t - phi_txx) u - (2 phi_x - phi_xx) w^2 dx dt
//!     = int u(T) (phi - phi_xx)(T) dx - int u(0) (phi - phi_xx)(0) dx
//! ```
//!
//! where the boundary terms are already moved onto `phi`, so only `u` and `w`
//! are ever sampled. [`weak_residual`] evaluates the difference of both sides
//! by composite trapezoid quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{self, Grid1D, RealField};

/// Peakon speed. Only positive speeds are admitted unless the experimental
/// constructor is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakonParams {
    c: f64,
    experimental: bool,
}

impl PeakonParams {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return config(format!("peakon speed must be positive and finite, got {c}"));
        }
        Ok(Self { c, experimental: false })
    }

    /// Admits any nonzero finite speed, including negative ones whose weak
    /// solution property is not established.
    pub fn new_experimental(c: f64) -> Result<Self> {
        if !(c.is_finite() && c != 0.0) {
            return config(format!("peakon speed must be nonzero and finite, got {c}"));
        }
        Ok(Self { c, experimental: true })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_experimental(&self) -> bool {
        self.experimental
    }

    /// Crest position `ct`.
    pub fn crest(&self, t: f64) -> f64 {
        self.c * t
    }
}

pub fn peakon_u(pp: PeakonParams, t: f64, x: f64) -> f64 {
    let c = pp.c;
    let y = x - c * t;
    if y >= 0.0 {
        -(c / 6.0) * (-y).exp()
    } else {
        -(c / 2.0) * y.exp() + (c / 3.0) * (2.0 * y).exp()
    }
}

/// `u_x`, which is continuous across the crest.
pub fn peakon_ux(pp: PeakonParams, t: f64, x: f64) -> f64 {
    let c = pp.c;
    let y = x - c * t;
    if y >= 0.0 {
        (c / 6.0) * (-y).exp()
    } else {
        -(c / 2.0) * y.exp() + (2.0 * c / 3.0) * (2.0 * y).exp()
    }
}

/// `w = 2u - u_x`, evaluated branchwise.
pub fn peakon_w(pp: PeakonParams, t: f64, x: f64) -> f64 {
    2.0 * peakon_u(pp, t, x) - peakon_ux(pp, t, x)
}

/// `m = u - u_xx` together with a flag that is set when `x` sits exactly on
/// the crest, where the left limit `-c` is returned.
pub fn peakon_m(pp: PeakonParams, t: f64, x: f64) -> (f64, bool) {
    let c = pp.c;
    let y = x - c * t;
    if y > 0.0 {
        (0.0, false)
    } else if y < 0.0 {
        (-c * (2.0 * y).exp(), false)
    } else {
        (-c, true)
    }
}

/// Samples the peakon at time `t` on `grid`.
pub fn peakon_field(pp: PeakonParams, grid: Grid1D, t: f64) -> RealField {
    RealField::from_fn(grid, |x| peakon_u(pp, t, x))
}

/// Samples the peakon and smooths it by the Gaussian multiplier
/// `exp(-k^2 eps^2 / 2)`; `eps = 0` returns the exact samples.
pub fn peakon_field_mollified(pp: PeakonParams, grid: Grid1D, t: f64, eps: f64) -> Result<RealField> {
    if !(eps.is_finite() && eps >= 0.0) {
        return config(format!("mollification width must be nonnegative, got {eps}"));
    }
    let f = peakon_field(pp, grid, t);
    if eps == 0.0 {
        return Ok(f);
    }
    let k = grid.wavenumbers();
    let mut spec = grid::to_spectral(&f);
    spec.apply(|i| (-0.5 * (k[i] * eps).powi(2)).exp().into());
    Ok(grid::to_physical(&spec))
}

/// Values of a test function and the derivatives entering the weak form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TestValues {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
    pub phi_xx: f64,
    pub phi_tx: f64,
    pub phi_txx: f64,
}

/// `phi(t, x) = p(t) b((x - x0) / sigma)` with `b(y) = exp(-1 / (1 - y^2))` on
/// `|y| < 1` and a cubic `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
    /// `p(t) = a0 + a1 t + a2 t^2 + a3 t^3`.
    pub time_coeffs: [f64; 4],
}

impl TestFunction {
    pub fn new(center: f64, width: f64, time_coeffs: [f64; 4]) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return config(format!("test function width must be positive, got {width}"));
        }
        if !center.is_finite() || time_coeffs.iter().any(|a| !a.is_finite()) {
            return config("test function parameters must be finite");
        }
        Ok(Self { center, width, time_coeffs })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    /// `(b, b', b'')` in the scaled variable, zero outside `|y| < 1`.
    fn bump(y: f64) -> (f64, f64, f64) {
        if y.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = 1.0 - y * y;
        let b = (-1.0 / s).exp();
        let g1 = -2.0 * y / (s * s);
        let g2 = -2.0 / (s * s) - 8.0 * y * y / (s * s * s);
        (b, g1 * b, (g2 + g1 * g1) * b)
    }

    pub fn eval(&self, t: f64, x: f64) -> TestValues {
        let [a0, a1, a2, a3] = self.time_coeffs;
        let p = a0 + t * (a1 + t * (a2 + t * a3));
        let dp = a1 + t * (2.0 * a2 + t * 3.0 * a3);
        let (b, b1, b2) = Self::bump((x - self.center) / self.width);
        let (bx, bxx) = (b1 / self.width, b2 / (self.width * self.width));
        TestValues {
            phi: p * b,
            phi_t: dp * b,
            phi_x: p * bx,
            phi_xx: p * bxx,
            phi_tx: dp * bx,
            phi_txx: dp * bxx,
        }
    }
}

/// Source of `u` and `w = 2u - u_x` at arbitrary points.
pub trait WeakSolution: Sync {
    /// Writes `u(t, x)` and `w(t, x)` for each `x` in `xs`.
    fn sample(&self, t: f64, xs: &[f64], u: &mut [f64], w: &mut [f64]);

    /// Location of a derivative jump at time `t`, if any.
    fn kink(&self, _t: f64) -> Option<f64> {
        None
    }
}

impl WeakSolution for PeakonParams {
    fn sample(&self, t: f64, xs: &[f64], u: &mut [f64], w: &mut [f64]) {
        for (i, &x) in xs.iter().enumerate() {
            u[i] = peakon_u(*self, t, x);
            w[i] = peakon_w(*self, t, x);
        }
    }

    fn kink(&self, t: f64) -> Option<f64> {
        Some(self.crest(t))
    }
}

/// The zero solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSolution;

impl WeakSolution for ZeroSolution {
    fn sample(&self, _t: f64, _xs: &[f64], u: &mut [f64], w: &mut [f64]) {
        u.fill(0.0);
        w.fill(0.0);
    }
}

/// Quadrature settings of [`weak_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakQuadrature {
    pub t_end: f64,
    /// Trapezoid cells across each test-function support.
    pub nx: usize,
    /// Trapezoid cells in time.
    pub nt: usize,
    /// Test-function supports must lie inside `[-L, L]`.
    pub half_width: f64,
    /// Insert the kink as an extra spatial node when it falls inside a support.
    pub crest_split: bool,
}

impl WeakQuadrature {
    pub fn new(t_end: f64, n: usize) -> Self {
        Self { t_end, nx: n, nt: n, half_width: 40.0, crest_split: false }
    }
}

/// Composite trapezoid weights on sorted nodes.
fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    for i in 0..nodes.len().saturating_sub(1) {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

fn spatial_nodes(phi: &TestFunction, nx: usize, kink: Option<f64>) -> Vec<f64> {
    let (a, b) = phi.support();
    let h = (b - a) / nx as f64;
    let mut nodes: Vec<f64> = (0..=nx).map(|i| a + i as f64 * h).collect();
    if let Some(k) = kink {
        if k > a && k < b {
            let pos = nodes.partition_point(|&x| x < k);
            if (nodes[pos] - k).abs() > 1e-12 * h && (nodes[pos - 1] - k).abs() > 1e-12 * h {
                nodes.insert(pos, k);
            }
        }
    }
    nodes
}

fn residual_one(sol: &dyn WeakSolution, phi: &TestFunction, q: &WeakQuadrature) -> f64 {
    let times: Vec<f64> = (0..=q.nt).map(|i| q.t_end * i as f64 / q.nt as f64).collect();
    let wt = trapezoid_weights(&times);
    let mut volume = 0.0;
    let mut boundary = 0.0;
    for (n, &t) in times.iter().enumerate() {
        let kink = if q.crest_split { sol.kink(t) } else { None };
        let xs = spatial_nodes(phi, q.nx, kink);
        let wx = trapezoid_weights(&xs);
        let mut u = vec![0.0; xs.len()];
        let mut w = vec![0.0; xs.len()];
        sol.sample(t, &xs, &mut u, &mut w);
        let mut inner = 0.0;
        let mut edge = 0.0;
        for i in 0..xs.len() {
            let v = phi.eval(t, xs[i]);
            inner += wx[i] * ((v.phi_t - v.phi_txx) * u[i] - (2.0 * v.phi_x - v.phi_xx) * w[i] * w[i]);
            edge += wx[i] * u[i] * (v.phi - v.phi_xx);
        }
        volume += wt[n] * inner;
        if n == 0 {
            boundary -= edge;
        } else if n == q.nt {
            boundary += edge;
        }
    }
    volume - boundary
}

fn validate(phis: &[TestFunction], q: &WeakQuadrature) -> Result<()> {
    if phis.is_empty() {
        return config("weak residual needs at least one test function");
    }
    if q.nx < 2 || q.nt < 1 {
        return config("quadrature needs at least 2 spatial and 1 temporal cells");
    }
    if !(q.t_end.is_finite() && q.t_end > 0.0) {
        return config(format!("end time must be positive, got {}", q.t_end));
    }
    for phi in phis {
        let (a, b) = phi.support();
        if a < -q.half_width || b > q.half_width {
            return config(format!(
                "test function support [{a}, {b}] leaves the domain [-{0}, {0}]",
                q.half_width
            ));
        }
    }
    Ok(())
}

/// Signed residual of the weak identity for each test function.
pub fn weak_residuals(sol: &dyn WeakSolution, phis: &[TestFunction], q: &WeakQuadrature) -> Result<Vec<f64>> {
    validate(phis, q)?;
    Ok(phis.par_iter().map(|phi| residual_one(sol, phi, q)).collect())
}

/// Largest absolute residual over the family.
pub fn weak_residual(sol: &dyn WeakSolution, phis: &[TestFunction], q: &WeakQuadrature) -> Result<f64> {
    Ok(weak_residuals(sol, phis, q)?.iter().fold(0.0, |m, r| m.max(r.abs())))
}

/// Largest absolute residual of a sampled trajectory.
///
/// The snapshots supply the time nodes and the grid supplies the spatial
/// nodes, so quadrature and discretization are refined together. `w` is
/// formed with the spectral derivative.
pub fn weak_residual_sampled(snapshots: &[(f64, RealField)], phis: &[TestFunction]) -> Result<f64> {
    if snapshots.len() < 2 {
        return config("sampled weak residual needs at least 2 snapshots");
    }
    if phis.is_empty() {
        return config("weak residual needs at least one test function");
    }
    let g = *snapshots[0].1.grid();
    for phi in phis {
        let (a, b) = phi.support();
        if a < -g.half_width() || b > g.half_width() {
            return config(format!("test function support [{a}, {b}] leaves the grid domain"));
        }
    }
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    let wt = trapezoid_weights(&times);
    let ws = snapshots
        .iter()
        .map(|(_, u)| Ok(u.zip_with(&grid::derivative(u, 1)?, |a, b| 2.0 * a - b)?))
        .collect::<Result<Vec<RealField>>>()?;
    let xs = g.points();
    let dx = g.dx();
    let last = snapshots.len() - 1;
    let residuals: Vec<f64> = phis
        .par_iter()
        .map(|phi| {
            let mut volume = 0.0;
            let mut boundary = 0.0;
            for (n, (t, u)) in snapshots.iter().enumerate() {
                let mut inner = 0.0;
                let mut edge = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    let v = phi.eval(*t, x);
                    let (ui, wi) = (u.samples()[i], ws[n].samples()[i]);
                    inner += (v.phi_t - v.phi_txx) * ui - (2.0 * v.phi_x - v.phi_xx) * wi * wi;
                    edge += ui * (v.phi - v.phi_xx);
                }
                volume += wt[n] * inner * dx;
                if n == 0 {
                    boundary -= edge * dx;
                } else if n == last {
                    boundary += edge * dx;
                }
            }
            (volume - boundary).abs()
        })
        .collect();
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// The family of five test functions used by the peakon checks: two straddle
/// the crest path over `[0, 1]` for `c = 1`, three avoid it.
pub fn default_test_family() -> Vec<TestFunction> {
    let p = [1.0, 0.5, -0.3, 0.1];
    [-3.0, 0.0, 0.5, 1.0, 4.0]
        .iter()
        .map(|&x0| TestFunction::new(x0, 1.0, p).expect("valid test function"))
        .collect()
}

/// One row of a refinement table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n: usize,
    pub per_phi: Vec<f64>,
    pub max_abs: f64,
}

/// Residuals under mesh doubling and the fitted convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub c: f64,
    pub t_end: f64,
    pub crest_split: bool,
    pub rows: Vec<RefinementRow>,
    /// Least-squares slope of `-log(max_abs)` against `log(n)`.
    pub fitted_order: f64,
    pub monotone: bool,
}

/// Default mesh levels of [`refinement_study`].
pub const DEFAULT_LEVELS: [usize; 5] = [128, 256, 512, 1024, 2048];

/// Evaluates the residual at each level `n` (with `nx = nt = n`) and fits the order.
pub fn refinement_study(
    sol: &dyn WeakSolution,
    c: f64,
    phis: &[TestFunction],
    t_end: f64,
    levels: &[usize],
    crest_split: bool,
) -> Result<WeakReport> {
    if levels.len() < 2 {
        return config("refinement study needs at least two levels");
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let mut q = WeakQuadrature::new(t_end, n);
        q.crest_split = crest_split;
        let per_phi = weak_residuals(sol, phis, &q)?;
        let max_abs = per_phi.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        rows.push(RefinementRow { n, per_phi, max_abs });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().map(|r| ((r.n as f64).ln(), -r.max_abs.max(f64::MIN_POSITIVE).ln())).collect();
    let fitted_order = least_squares_slope(&pts);
    let monotone = rows.windows(2).all(|w| w[1].max_abs < w[0].max_abs);
    Ok(WeakReport { c, t_end, crest_split, rows, fitted_order, monotone })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
