//! Linear transport by characteristics and the Picard iteration built on it.
//!
//! A transport problem is solved along backward characteristics:
//!
//! ```text
//! f_t + v f_x = g,  f(0) = f0
//! f(t, x) = f0(q(0)) + int_0^t g(s, q(s)) ds,   dq/ds = v(s, q),  q(t) = x
//! ```
//!
//! The iteration freezes the coefficients of the momentum equation at the
//! previous iterate, starting from the constant-in-time `m_0(t) = m0`:
//!
//! ```text
//! d_t m_{n+1} + (2 d_x u_n - 4 u_n) d_x m_{n+1} = F(m_n, u_n),   m_{n+1}(0) = S_{n+1} m0
//! F(m, u) = 2 m^2 + (8 u_x - 4 u) m + 2 (u + u_x)^2,            u_n = (1 - d^2)^{-1} m_n
//! ```
//!
//! Iterate norms are compared against the bound
//!
//! ```text
//! M = C ||m0|| / (1 - 2 C^2 ||m0|| T),   valid while 2 C^2 ||m0|| T < 1
//! ```
//!
//! where `C` is a calibration constant, and the successive differences
//! `d_n = sup_t ||m_{n+1} - m_n||_{B^{s-1}_{2,2}}` are expected to decay
//! geometrically.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, SolverConfig, StopReason};
use crate::error::{config, Error, Result};
use crate::grid::{self, Grid1D, RealField};
use crate::littlewood_paley::{
    besov_22_spectral, build_partition, low_cutoff, AuditKind, AuditReport, DyadicPartition, REFINEMENT_BAND,
    SHARP_SLACK,
};

/// Pointwise coefficient `(t, x) -> value`.
pub type PointFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A velocity or source term of a transport problem.
#[derive(Clone)]
pub enum Coefficient {
    /// Evaluated exactly at every requested point.
    Callable(PointFn),
    /// Snapshots with increasing times; linear in time between snapshots and
    /// periodic cubic in space.
    Series(Vec<(f64, RealField)>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Callable(_) => f.write_str("Callable(..)"),
            Coefficient::Series(s) => write!(f, "Series({} snapshots)", s.len()),
        }
    }
}

impl Coefficient {
    pub fn zero() -> Self {
        Self::callable(|_, _| 0.0)
    }

    pub fn callable(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Callable(Arc::new(f))
    }

    /// Validates and wraps a snapshot series.
    pub fn series(snapshots: Vec<(f64, RealField)>) -> Result<Self> {
        let first = snapshots.first().ok_or_else(|| Error::Config("coefficient series is empty".into()))?;
        let g = *first.1.grid();
        if snapshots.iter().any(|(_, f)| f.grid() != &g) {
            return config("coefficient snapshots must share one grid");
        }
        if snapshots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return config("coefficient snapshot times must increase strictly");
        }
        if snapshots.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
            return Err(Error::Diverged("coefficient series contains nonfinite values".into()));
        }
        Ok(Coefficient::Series(snapshots))
    }

    fn covers(&self, t_end: f64) -> bool {
        match self {
            Coefficient::Callable(_) => true,
            Coefficient::Series(s) => {
                let slack = 1e-12 * t_end.max(1.0);
                s[0].0 <= slack && s[s.len() - 1].0 >= t_end - slack
            }
        }
    }

    /// Value at `(t, x)`; times outside a series are clamped to its ends.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Coefficient::Callable(f) => f(t, x),
            Coefficient::Series(s) => {
                let idx = s.partition_point(|(ts, _)| *ts <= t);
                if idx == 0 {
                    return interpolate_periodic(&s[0].1, x);
                }
                if idx == s.len() {
                    return interpolate_periodic(&s[idx - 1].1, x);
                }
                let (t0, f0) = (&s[idx - 1].0, &s[idx - 1].1);
                let (t1, f1) = (&s[idx].0, &s[idx].1);
                let theta = (t - t0) / (t1 - t0);
                (1.0 - theta) * interpolate_periodic(f0, x) + theta * interpolate_periodic(f1, x)
            }
        }
    }

    /// Samples the coefficient on the points of `grid` at time `t`.
    pub fn field(&self, grid: Grid1D, t: f64) -> RealField {
        RealField::from_fn(grid, |x| self.eval(t, x))
    }
}

/// Maps `x` into the periodic box `[-L, L)`.
pub fn wrap(x: f64, grid: &Grid1D) -> f64 {
    let l = grid.half_width();
    (x + l).rem_euclid(grid.length()) - l
}

/// Four-point Lagrange interpolation of a periodic field at `x`.
pub fn interpolate_periodic(f: &RealField, x: f64) -> f64 {
    let g = f.grid();
    let n = g.n_points();
    let pos = (wrap(x, g) + g.half_width()) / g.dx();
    let base = pos.floor();
    let th = pos - base;
    let i = base as isize;
    let s = f.samples();
    let at = |k: isize| s[(i + k).rem_euclid(n as isize) as usize];
    let w_m = -th * (th - 1.0) * (th - 2.0) / 6.0;
    let w_0 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
    let w_1 = -(th + 1.0) * th * (th - 2.0) / 2.0;
    let w_2 = (th + 1.0) * th * (th - 1.0) / 6.0;
    w_m * at(-1) + w_0 * at(0) + w_1 * at(1) + w_2 * at(2)
}

/// `f_t + v f_x = g` on `[0, T]` with initial data `f0`.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub velocity: Coefficient,
    pub source: Coefficient,
    pub f0: RealField,
    pub horizon: f64,
}

impl TransportProblem {
    pub fn new(velocity: Coefficient, source: Coefficient, f0: RealField, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return config(format!("transport horizon must be positive, got {horizon}"));
        }
        if !f0.is_finite() {
            return config("transport initial data is not finite");
        }
        if !velocity.covers(horizon) || !source.covers(horizon) {
            return config("coefficient series must span [0, T]");
        }
        Ok(Self { velocity, source, f0, horizon })
    }

    /// Output times `k T / K` with `K = ceil(T / dt)`.
    pub fn time_grid(&self, dt: f64) -> Result<Vec<f64>> {
        if !(dt.is_finite() && dt > 0.0) {
            return config(format!("transport step must be positive, got {dt}"));
        }
        let k = ((self.horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = self.horizon / k as f64;
        Ok((0..=k).map(|j| if j == k { self.horizon } else { j as f64 * h }).collect())
    }

    fn velocity_at(&self, t: f64, x: f64) -> Result<f64> {
        let v = self.velocity.eval(t, wrap(x, self.f0.grid()));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Diverged(format!("nonfinite velocity at t = {t}, x = {x}")))
        }
    }

    fn source_at(&self, t: f64, x: f64) -> Result<f64> {
        let g = self.source.eval(t, wrap(x, self.f0.grid()));
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::Diverged(format!("nonfinite source at t = {t}, x = {x}")))
        }
    }

    /// Traces the characteristic through `(times[k], x)` back to `t = 0`.
    fn trace(&self, times: &[f64], k: usize, x: f64) -> Result<f64> {
        let mut q = x;
        let mut acc = 0.0;
        let mut g_hi = self.source_at(times[k], q)?;
        for j in (0..k).rev() {
            let (s, h) = (times[j + 1], times[j + 1] - times[j]);
            let k1 = self.velocity_at(s, q)?;
            let k2 = self.velocity_at(s - 0.5 * h, q - 0.5 * h * k1)?;
            let k3 = self.velocity_at(s - 0.5 * h, q - 0.5 * h * k2)?;
            let k4 = self.velocity_at(s - h, q - h * k3)?;
            q -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let g_lo = self.source_at(times[j], q)?;
            acc += 0.5 * h * (g_hi + g_lo);
            g_hi = g_lo;
        }
        Ok(interpolate_periodic(&self.f0, q) + acc)
    }
}

/// Solves the problem at the output times of [`TransportProblem::time_grid`].
///
/// Each output point is traced independently; the result does not depend on
/// the thread count.
pub fn solve_transport(tp: &TransportProblem, dt: f64) -> Result<Vec<(f64, RealField)>> {
    let times = tp.time_grid(dt)?;
    let g = *tp.f0.grid();
    let xs = g.points();
    let mut out = vec![(0.0, tp.f0.clone())];
    for k in 1..times.len() {
        let samples = xs.par_iter().map(|&x| tp.trace(&times, k, x)).collect::<Result<Vec<_>>>()?;
        out.push((times[k], RealField::new(g, samples)?));
    }
    Ok(out)
}

fn b22(f: &RealField, s: f64, part: &DyadicPartition) -> f64 {
    besov_22_spectral(grid::to_spectral(f).coeffs(), s, part)
}

fn trapezoid_cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; times.len()];
    for k in 1..times.len() {
        acc[k] = acc[k - 1] + 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
    }
    acc
}

/// Norm series entering the a-priori transport estimate at smoothness `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriSeries {
    pub sigma: f64,
    pub times: Vec<f64>,
    /// `||f(t)||_{B^{sigma-1}_{2,2}}`.
    pub f_norms: Vec<f64>,
    /// `||g(t)||_{B^{sigma-1}_{2,2}}`.
    pub g_norms: Vec<f64>,
    /// `V(t) = int_0^t ||v||_{B^{sigma+1}_{2,2}}` by the trapezoid rule.
    pub v_integral: Vec<f64>,
}

/// Evaluates the norms of a solved problem on its own time grid.
pub fn apriori_series(
    tp: &TransportProblem,
    solution: &[(f64, RealField)],
    sigma: f64,
    part: &DyadicPartition,
) -> Result<AprioriSeries> {
    if !(sigma > 0.5 && sigma.is_finite()) {
        return config(format!("a-priori smoothness must exceed 1/2, got {sigma}"));
    }
    if solution.is_empty() {
        return config("empty transport solution");
    }
    let g = *tp.f0.grid();
    if part.grid() != &g {
        return config("partition grid differs from the problem grid");
    }
    let times: Vec<f64> = solution.iter().map(|(t, _)| *t).collect();
    let f_norms = solution.iter().map(|(_, f)| b22(f, sigma - 1.0, part)).collect();
    let g_norms = times.iter().map(|&t| b22(&tp.source.field(g, t), sigma - 1.0, part)).collect();
    let v_norms: Vec<f64> = times.iter().map(|&t| b22(&tp.velocity.field(g, t), sigma + 1.0, part)).collect();
    let v_integral = trapezoid_cumulative(&times, &v_norms);
    Ok(AprioriSeries { sigma, times, f_norms, g_norms, v_integral })
}

impl AprioriSeries {
    /// `||f(t)|| / [(||f0|| + int_0^t e^{-CV} ||g||) e^{CV(t)}]` at every output time.
    pub fn ratios(&self, c: f64) -> Vec<f64> {
        let weighted: Vec<f64> = self.g_norms.iter().zip(&self.v_integral).map(|(g, v)| (-c * v).exp() * g).collect();
        let forcing = trapezoid_cumulative(&self.times, &weighted);
        (0..self.times.len())
            .map(|k| {
                let bracket = (self.f_norms[0] + forcing[k]) * (c * self.v_integral[k]).exp();
                if bracket == 0.0 && self.f_norms[k] == 0.0 {
                    0.0
                } else {
                    self.f_norms[k] / bracket
                }
            })
            .collect()
    }

    pub fn max_ratio(&self, c: f64) -> f64 {
        self.ratios(c).into_iter().fold(0.0, f64::max)
    }
}

/// Smallest `C >= 0` with every ratio at most one, by bracketing and
/// bisection (the ratios decrease in `C`). Infinite when no constant works.
pub fn fit_apriori_constant(series: &[AprioriSeries]) -> f64 {
    let worst = |c: f64| series.iter().map(|s| s.max_ratio(c)).fold(0.0, f64::max);
    if worst(0.0) <= 1.0 + SHARP_SLACK {
        return 0.0;
    }
    let mut hi = 1.0;
    while worst(hi) > 1.0 + SHARP_SLACK {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst(mid) > 1.0 + SHARP_SLACK {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// Number of grids in the a-priori audit: the base grid and two refinements.
pub const APRIORI_LEVELS: usize = 3;

/// Fits the transport constant on the calibration set built by `calibration`
/// for the base grid and two successive doublings.
///
/// `ratios` holds the worst ratio of each calibration problem at the constant
/// fitted on the finest grid; `refinement_ratio` is the fitted constant on the
/// level farthest from the base level's, divided by the base value.
pub fn transport_apriori_audit(
    grid: Grid1D,
    calibration: impl Fn(Grid1D) -> Result<Vec<TransportProblem>>,
    sigma: f64,
    dt: f64,
) -> Result<AuditReport> {
    let mut fitted = Vec::with_capacity(APRIORI_LEVELS);
    let mut finest = Vec::new();
    let mut g = grid;
    for level in 0..APRIORI_LEVELS {
        if level > 0 {
            g = Grid1D::new(g.half_width(), 2 * g.n_points())?;
        }
        let part = build_partition(g)?;
        let problems = calibration(g)?;
        if problems.is_empty() {
            return config("calibration set is empty");
        }
        let series = problems
            .iter()
            .map(|tp| apriori_series(tp, &solve_transport(tp, dt)?, sigma, &part))
            .collect::<Result<Vec<_>>>()?;
        fitted.push(fit_apriori_constant(&series));
        finest = series;
    }
    let base = fitted[0];
    let c_fine = fitted[APRIORI_LEVELS - 1];
    let ratios: Vec<f64> = finest.iter().map(|s| s.max_ratio(c_fine)).collect();
    let relative = |c: f64| {
        if base == 0.0 && c == 0.0 {
            1.0
        } else {
            c / base
        }
    };
    let refinement = fitted.iter().map(|&c| relative(c)).fold(1.0, |acc: f64, r| {
        if (r - 1.0).abs() > (acc - 1.0).abs() || r.is_nan() {
            r
        } else {
            acc
        }
    });
    Ok(AuditReport {
        audit_id: AuditKind::TransportApriori { sigma }.id().to_string(),
        kind: AuditKind::TransportApriori { sigma },
        passed: fitted.iter().all(|c| c.is_finite()) && ratios.iter().all(|&q| q <= 1.0 + SHARP_SLACK),
        ratios,
        fitted_constant: base,
        refinement_ratio: Some(refinement),
        stable: Some((refinement - 1.0).abs() <= REFINEMENT_BAND),
    })
}

/// Calibration set of the a-priori audit on `grid`: three Gaussians carried
/// by periodic shear velocities `a sin(pi x / L)(1 + t/2)`, two of them with a
/// localized source, on `[0, 1]`.
pub fn apriori_calibration_set(grid: Grid1D) -> Result<Vec<TransportProblem>> {
    let k = std::f64::consts::PI / grid.half_width();
    [(0.6, 0.0, 0.0), (0.4, 0.5, 0.2), (-0.5, 1.0, 0.1)]
        .into_iter()
        .map(|(a, x0, src): (f64, f64, f64)| {
            let v = Coefficient::callable(move |t, x| a * (k * x).sin() * (1.0 + 0.5 * t));
            let s = Coefficient::callable(move |t, x| src * (-(x + 1.0).powi(2)).exp() * t.cos());
            TransportProblem::new(v, s, RealField::from_fn(grid, |x| (-(x - x0).powi(2)).exp()), 1.0)
        })
        .collect()
}

/// `F(m, u) = 2 m^2 + (8 u_x - 4 u) m + 2 (u + u_x)^2` with `u = (1 - d^2)^{-1} m`.
pub fn momentum_source(m: &RealField) -> Result<RealField> {
    let u = grid::helmholtz_inverse(m);
    let ux = grid::derivative(&u, 1)?;
    let g = *m.grid();
    let samples = (0..g.n_points())
        .map(|i| {
            let (m, u, ux) = (m.samples()[i], u.samples()[i], ux.samples()[i]);
            2.0 * m * m + (8.0 * ux - 4.0 * u) * m + 2.0 * (u + ux) * (u + ux)
        })
        .collect();
    RealField::new(g, samples)
}

/// Transport velocity `2 u_x - 4 u` with `u = (1 - d^2)^{-1} m`.
pub fn momentum_velocity(m: &RealField) -> Result<RealField> {
    let u = grid::helmholtz_inverse(m);
    grid::derivative(&u, 1)?.zip_with(&u, |ux, u| 2.0 * ux - 4.0 * u)
}

/// `M = C a / (1 - 2 C^2 a T)` for `a = ||m0||`, or `None` outside the
/// horizon `2 C^2 a T < 1`.
pub fn horizon_bound(c: f64, m0_norm: f64, t: f64) -> Option<f64> {
    let q = 2.0 * c * c * m0_norm * t;
    (q < 1.0).then(|| c * m0_norm / (1.0 - q))
}

/// Smallest `C >= 0` with `target <= M(C)`, from the positive root of
/// `2 target a T C^2 + a C - target = 0`. The horizon condition holds at the
/// root by construction.
pub fn fit_bound_constant(target: f64, m0_norm: f64, t: f64) -> Option<f64> {
    if !(target.is_finite() && target >= 0.0) {
        return None;
    }
    if target == 0.0 {
        return Some(0.0);
    }
    if m0_norm == 0.0 {
        return None;
    }
    let (a, b) = (2.0 * target * m0_norm * t, m0_norm);
    if a == 0.0 {
        return Some(target / b);
    }
    // Stable form of (-b + sqrt(b^2 + 4 a target)) / (2a).
    Some(2.0 * target / (b + (b * b + 4.0 * a * target).sqrt()))
}

/// Settings of a Picard run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardOptions {
    /// Smoothness of the iterate norms; differences use `s - 1`.
    pub s: f64,
    /// Calibration constant in the horizon bound.
    pub c_cal: f64,
    /// Time step of the frozen-coefficient transport solves and snapshots.
    pub dt: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { s: 1.5, c_cal: 1.0, dt: 0.01 }
    }
}

/// Per-iterate diagnostics. Index `n` of `sup_norms` and `time_integrals`
/// belongs to `m_n`; `differences[n] = d_n` compares `m_{n+1}` with `m_n`
/// and `ratios[n] = d_{n+1} / d_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub s: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub m0_norm: f64,
    pub c_cal: f64,
    /// `2 C_cal^2 ||m0|| T < 1`.
    pub horizon_ok: bool,
    /// Bound `M` at `C_cal`, absent outside the horizon.
    pub bound: Option<f64>,
    /// Smallest `C` for which every iterate norm sits below `M(C)`.
    pub fitted_c: Option<f64>,
    pub sup_norms: Vec<f64>,
    /// `U_n(T) = int_0^T ||m_n||_{B^s_{2,2}} dt`.
    pub time_integrals: Vec<f64>,
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Why the run stopped before `n_max`, if it did.
    pub truncated: Option<String>,
}

/// Column names of [`PicardDiagnostics::to_csv`].
pub const PICARD_CSV_HEADER: &str = "n,sup_norm,d_n,ratio";

impl PicardDiagnostics {
    /// Index of the last computed iterate.
    pub fn last_iterate(&self) -> usize {
        self.sup_norms.len() - 1
    }

    /// Whether `d_{n+1} / d_n <= threshold` for every available `n >= burn_in`.
    pub fn geometric_decay(&self, burn_in: usize, threshold: f64) -> bool {
        self.ratios.iter().skip(burn_in).all(|&r| r <= threshold)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<&f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from(PICARD_CSV_HEADER);
        out.push('\n');
        for (n, sup) in self.sup_norms.iter().enumerate() {
            out.push_str(&format!("{n},{sup:e},{},{}\n", opt(self.differences.get(n)), opt(self.ratios.get(n))));
        }
        out
    }
}

/// Diagnostics together with every iterate as a snapshot series.
#[derive(Debug, Clone)]
pub struct PicardRun {
    pub diagnostics: PicardDiagnostics,
    pub iterates: Vec<Vec<(f64, RealField)>>,
}

impl PicardRun {
    /// Final snapshot of the last iterate.
    pub fn final_field(&self) -> &RealField {
        &self.iterates.last().expect("at least m_0").last().expect("nonempty series").1
    }
}

/// Runs `n_max` Picard steps on `[0, T]` from `m0`.
///
/// Divergence of an iterate truncates the diagnostics and records the reason
/// instead of failing; configuration problems are errors.
pub fn picard_run(
    m0: &RealField,
    n_max: usize,
    t: f64,
    part: &DyadicPartition,
    opts: &PicardOptions,
) -> Result<PicardRun> {
    if part.grid() != m0.grid() {
        return config("partition grid differs from the initial data grid");
    }
    if !m0.is_finite() {
        return config("initial momentum is not finite");
    }
    if !(opts.c_cal.is_finite() && opts.c_cal >= 0.0) {
        return config(format!("calibration constant must be nonnegative, got {}", opts.c_cal));
    }
    // Validates T and dt and fixes the snapshot times shared by every iterate.
    let times = TransportProblem::new(Coefficient::zero(), Coefficient::zero(), m0.clone(), t)?.time_grid(opts.dt)?;
    let (s, h) = (opts.s, t / (times.len() - 1) as f64);
    let m0_norm = b22(m0, s, part);
    let norms_of = |series: &[(f64, RealField)]| -> Vec<f64> { series.iter().map(|(_, f)| b22(f, s, part)).collect() };

    let mut current: Vec<(f64, RealField)> = times.iter().map(|&tk| (tk, m0.clone())).collect();
    let first = norms_of(&current);
    let mut sup_norms = vec![first.iter().copied().fold(0.0, f64::max)];
    let mut time_integrals = vec![*trapezoid_cumulative(&times, &first).last().expect("nonempty")];
    let mut differences = Vec::new();
    let mut iterates = vec![current.clone()];
    let mut truncated = None;

    for n in 0..n_max {
        let step = || -> Result<Vec<(f64, RealField)>> {
            let mut vel = Vec::with_capacity(current.len());
            let mut src = Vec::with_capacity(current.len());
            for (tk, m) in &current {
                vel.push((*tk, momentum_velocity(m)?));
                src.push((*tk, momentum_source(m)?));
            }
            let tp = TransportProblem::new(
                Coefficient::series(vel)?,
                Coefficient::series(src)?,
                low_cutoff(m0, n as i32 + 1, part)?,
                t,
            )?;
            let next = solve_transport(&tp, h)?;
            if next.iter().any(|(_, f)| !f.is_finite()) {
                return Err(Error::Diverged("nonfinite iterate".into()));
            }
            Ok(next)
        };
        let next = match step() {
            Ok(next) => next,
            Err(Error::Diverged(msg)) => {
                truncated = Some(format!("iterate {} diverged: {msg}", n + 1));
                break;
            }
            Err(e) => return Err(e),
        };
        let d = next
            .iter()
            .zip(&current)
            .map(|((_, a), (_, b))| a.sub(b).map(|diff| b22(&diff, s - 1.0, part)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let norms = norms_of(&next);
        let sup = norms.iter().copied().fold(0.0, f64::max);
        if !(sup.is_finite() && d.is_finite()) {
            truncated = Some(format!("iterate {} has nonfinite norms", n + 1));
            break;
        }
        differences.push(d);
        sup_norms.push(sup);
        time_integrals.push(*trapezoid_cumulative(&times, &norms).last().expect("nonempty"));
        iterates.push(next.clone());
        current = next;
    }

    // An exactly vanishing difference means the iteration has reached its
    // fixed point, which counts as full contraction.
    let ratios = differences.windows(2).map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] }).collect();
    let bound = horizon_bound(opts.c_cal, m0_norm, t);
    let sup_max = sup_norms.iter().copied().fold(0.0, f64::max);
    let diagnostics = PicardDiagnostics {
        s,
        horizon: t,
        times,
        m0_norm,
        c_cal: opts.c_cal,
        horizon_ok: bound.is_some(),
        bound,
        fitted_c: fit_bound_constant(sup_max, m0_norm, t),
        sup_norms,
        time_integrals,
        differences,
        ratios,
        truncated,
    };
    Ok(PicardRun { diagnostics, iterates })
}

/// Horizon of the small-data suite.
pub const SMALL_DATA_HORIZON: f64 = 0.5;

/// Box of the small-data suite, wide enough for `(1 - d^2)^{-1} m0` to decay.
pub fn small_data_grid() -> Grid1D {
    Grid1D::new(30.0, 1024).expect("valid grid")
}

/// Named initial momenta of the small-data suite.
pub fn small_data_suite(grid: Grid1D) -> Vec<(&'static str, RealField)> {
    vec![
        ("gaussian", RealField::from_fn(grid, |x| 0.1 * (-x * x).exp())),
        ("shifted_wide_gaussian", RealField::from_fn(grid, |x| 0.08 * (-(x - 1.0).powi(2) / 2.0).exp())),
        ("negative_sech2", RealField::from_fn(grid, |x| -0.1 / x.cosh().powi(2))),
    ]
}

/// Momentum of the direct pseudospectral solution at `t`, started from the
/// velocity `(1 - d^2)^{-1} m0`.
pub fn direct_momentum(m0: &RealField, t: f64) -> Result<RealField> {
    let u0 = grid::helmholtz_inverse(m0);
    let run = evolve(&u0, &SolverConfig::new(*m0.grid(), t))?;
    if run.stop_reason != StopReason::ReachedTEnd {
        return Err(Error::EstimationUnreliable(format!("direct solver stopped early: {:?}", run.stop_reason)));
    }
    Ok(grid::helmholtz_forward(&run.final_field))
}

/// Relative `L^2` distance between the last iterate at `T` and the direct
/// solution (absolute when the direct solution vanishes).
pub fn direct_discrepancy(run: &PicardRun, m0: &RealField) -> Result<f64> {
    let direct = direct_momentum(m0, run.diagnostics.horizon)?;
    let diff = run.final_field().sub(&direct)?;
    let scale = grid::l2_norm(&direct);
    Ok(if scale == 0.0 { grid::l2_norm(&diff) } else { grid::l2_norm(&diff) / scale })
}
