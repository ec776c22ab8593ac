//! Wave-breaking criterion, Riccati comparison and blow-up rate.
//!
//! A decaying datum steepens into a singularity in finite time when its
//! curvature at the steepest point beats the a-priori constant
//!
//! ```text
//! u0''(x0) < -C_T,      C_T = 4 (54 T |u0|_{H1}^2 + 6 |u0|_{H3/2})
//! ```
//!
//! The proof compares the minimum curvature with the Riccati equation
//! `w' = -w^2 + C^2`, which diverges at
//!
//! ```text
//! t* = -(1 / 2C) ln((w0 + C) / (w0 - C)),    w0 < -C
//! ```
//!
//! and near the singular time `min_x u_xx (T - t) -> -1/2`. This module checks
//! the criterion, fixes the horizon `T` self-consistently, estimates `T` from
//! a run by fitting `1 / min u_xx` linearly, and reports the rate product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, min_uxx, RunReport, SolverConfig, StopReason};
use crate::error::{config, Error, Result};
use crate::grid::{self, RealField};

/// `4 (54 T |u0|_{H1}^2 + 6 |u0|_{H3/2})`.
pub fn compute_ct(u0: &RealField, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return config(format!("horizon must be nonnegative, got {t}"));
    }
    Ok(4.0 * a_priori_sum(u0, t))
}

/// `2 sqrt(2) (54 T |u0|_{H1}^2 + 6 |u0|_{H3/2})`, the constant of the shifted
/// comparison.
pub fn compute_ct_tilde(u0: &RealField, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return config(format!("horizon must be nonnegative, got {t}"));
    }
    Ok(2.0 * std::f64::consts::SQRT_2 * a_priori_sum(u0, t))
}

fn a_priori_sum(u0: &RealField, t: f64) -> f64 {
    54.0 * t * grid::sobolev_norm(u0, 1.0).powi(2) + 6.0 * grid::sobolev_norm(u0, 1.5)
}

/// Blow-up time of `w' = -w^2 + C^2` from `w0 < -C`.
///
/// `C = 0` gives the limit `1 / |w0|`.
pub fn riccati_bound_time(w0: f64, c: f64) -> Result<f64> {
    if !(c >= 0.0 && c.is_finite() && w0.is_finite()) {
        return Err(Error::Precondition(format!("need finite w0 and C >= 0, got w0 = {w0}, C = {c}")));
    }
    if !(w0 < -c) {
        return Err(Error::Precondition(format!("comparison needs w0 < -C, got w0 = {w0}, C = {c}")));
    }
    if c == 0.0 {
        return Ok(-1.0 / w0);
    }
    // ln((w0 + C)/(w0 - C)) written with ln_1p to keep accuracy when |w0| >> C.
    Ok(-(-2.0 * c / (c - w0)).ln_1p() / (2.0 * c))
}

/// Numerical trajectory of the comparison equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Last time plus `1 / |w|`, the leading term of the remaining life time.
    pub divergence_time: f64,
}

/// Threshold on `|w|` at which [`riccati_solve`] stops.
pub const RICCATI_CUTOFF: f64 = 1e8;

/// Integrates `w' = -w^2 + C^2` by RK4 with step `min(dt, 0.01 / |w|)` until
/// `|w|` exceeds [`RICCATI_CUTOFF`].
pub fn riccati_solve(w0: f64, c: f64, dt: f64) -> Result<RiccatiTrajectory> {
    riccati_bound_time(w0, c)?;
    if !(dt.is_finite() && dt > 0.0) {
        return config(format!("time step must be positive, got {dt}"));
    }
    let f = |w: f64| -w * w + c * c;
    let mut t = 0.0;
    let mut w = w0;
    let mut times = vec![t];
    let mut values = vec![w];
    while w.abs() <= RICCATI_CUTOFF {
        let h = dt.min(0.01 / w.abs());
        let k1 = f(w);
        let k2 = f(w + 0.5 * h * k1);
        let k3 = f(w + 0.5 * h * k2);
        let k4 = f(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        times.push(t);
        values.push(w);
    }
    Ok(RiccatiTrajectory { times, values, divergence_time: t + 1.0 / w.abs() })
}

/// Which curvature quantity and constant enter the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVariant {
    /// `w0 = min u0''` with `C_T`; drives the verdict.
    Curvature,
    /// `w0 = 2 min(u0'' - 2 u0')` with `C_T`.
    Shifted,
    /// `w0 = 2 min(u0'' - 2 u0')` with the smaller constant `2 sqrt(2)(..)`.
    ShiftedTilde,
}

impl ComparisonVariant {
    pub const ALL: [ComparisonVariant; 3] =
        [ComparisonVariant::Curvature, ComparisonVariant::Shifted, ComparisonVariant::ShiftedTilde];
}

/// Comparison data of one variant at a fixed horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBound {
    pub variant: ComparisonVariant,
    pub w0: f64,
    pub c: f64,
    /// `None` when `w0 >= -C`.
    pub bound_time: Option<f64>,
    /// The bound lands inside `[0, T]`.
    pub within_horizon: bool,
}

/// Criterion evaluation at a horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSetup {
    pub horizon: f64,
    pub c_t: f64,
    pub h1: f64,
    pub h32: f64,
    /// `min u0'' < -C_T`.
    pub verdict: bool,
    pub x0: f64,
    pub uxx_at_x0: f64,
    pub comparisons: Vec<ComparisonBound>,
    /// The verdict holds and the curvature comparison bound is at most `T`.
    pub self_consistent: bool,
}

fn comparison_data(u0: &RealField) -> Result<(f64, f64, f64)> {
    let (uxx_min, x0) = min_uxx(u0)?;
    let ux = grid::derivative(u0, 1)?;
    let uxx = grid::derivative(u0, 2)?;
    let shifted = uxx.samples().iter().zip(ux.samples()).map(|(a, b)| a - 2.0 * b).fold(f64::INFINITY, f64::min);
    Ok((uxx_min, x0, 2.0 * shifted))
}

fn variant_w0_c(variant: ComparisonVariant, u0: &RealField, t: f64, plain: f64, shifted: f64) -> Result<(f64, f64)> {
    Ok(match variant {
        ComparisonVariant::Curvature => (plain, compute_ct(u0, t)?),
        ComparisonVariant::Shifted => (shifted, compute_ct(u0, t)?),
        ComparisonVariant::ShiftedTilde => (shifted, compute_ct_tilde(u0, t)?),
    })
}

/// Relative slack when comparing a bound with the horizon, so that the fixed
/// point of [`consistent_horizon`] counts as inside.
pub const HORIZON_SLACK: f64 = 1e-12;

/// Evaluates the criterion and every comparison variant at horizon `t`.
pub fn check_condition(u0: &RealField, t: f64) -> Result<BlowupSetup> {
    let c_t = compute_ct(u0, t)?;
    let (plain, x0, shifted) = comparison_data(u0)?;
    let comparisons = ComparisonVariant::ALL
        .iter()
        .map(|&variant| {
            let (w0, c) = variant_w0_c(variant, u0, t, plain, shifted)?;
            let bound_time = riccati_bound_time(w0, c).ok();
            Ok(ComparisonBound { variant, w0, c, bound_time, within_horizon: bound_time.is_some_and(|b| b <= t * (1.0 + HORIZON_SLACK)) })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = plain < -c_t;
    Ok(BlowupSetup {
        horizon: t,
        c_t,
        h1: grid::sobolev_norm(u0, 1.0),
        h32: grid::sobolev_norm(u0, 1.5),
        verdict,
        x0,
        uxx_at_x0: plain,
        self_consistent: verdict && comparisons[0].within_horizon,
        comparisons,
    })
}

/// Smallest horizon `T` with `T = t*(w0, C_T)` for `variant`, found by the
/// monotone iteration `T_{k+1} = t*(w0, C_{T_k})` from `T_0 = 0`.
///
/// Returns `None` when the comparison precondition fails along the way.
pub fn consistent_horizon(u0: &RealField, variant: ComparisonVariant) -> Result<Option<f64>> {
    let (plain, _, shifted) = comparison_data(u0)?;
    let mut t = 0.0;
    for _ in 0..10_000 {
        let (w0, c) = variant_w0_c(variant, u0, t, plain, shifted)?;
        let next = match riccati_bound_time(w0, c) {
            Ok(b) => b,
            Err(_) => return Ok(None),
        };
        if (next - t).abs() <= 1e-15 * next.max(1.0) {
            return Ok(Some(next));
        }
        t = next;
    }
    Ok(Some(t))
}

/// Settings of the blow-up time fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of samples in the fit window.
    pub window: usize,
    /// Samples whose spectral-tail share exceeds this are not used.
    pub fit_tail_tol: f64,
    /// Windows shorter than this make the rate report inconclusive.
    pub min_window: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: 20, fit_tail_tol: 1e-11, min_window: 5 }
    }
}

/// Linear fit of `1 / min u_xx` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_est: f64,
    /// Indices into the run's sample series, end exclusive.
    pub window: (usize, usize),
    pub window_times: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit in `1 / min u_xx`.
    pub fit_residual: f64,
}

/// Fits `y = 1 / m` linearly in `t` and returns the root of the line.
///
/// Fails as unreliable unless `m` is negative and strictly decreasing and the
/// root lies beyond the last time.
pub fn fit_blowup_time(times: &[f64], mins: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if times.len() != mins.len() || times.len() < 2 {
        return config("fit needs at least two paired samples");
    }
    if mins.iter().any(|&m| !(m < 0.0)) {
        return Err(Error::EstimationUnreliable("minimum curvature is not negative on the window".into()));
    }
    if mins.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::EstimationUnreliable("minimum curvature is not decreasing on the window".into()));
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = mins.iter().map(|m| 1.0 / m).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sty: f64 = times.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let stt: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    if !(slope > 0.0) {
        return Err(Error::EstimationUnreliable("reciprocal curvature is not increasing".into()));
    }
    let t_est = -intercept / slope;
    let last = *times.last().expect("nonempty");
    if !(t_est > last) {
        return Err(Error::EstimationUnreliable(format!("fitted time {t_est} precedes the last sample {last}")));
    }
    let rss: f64 = times.iter().zip(&ys).map(|(t, y)| (y - intercept - slope * t).powi(2)).sum();
    Ok((t_est, slope, intercept, (rss / n).sqrt()))
}

/// Indices of the last `opts.window` samples whose tail share is within
/// `opts.fit_tail_tol`, excluding the stopping sample.
fn resolved_window(run: &RunReport, opts: &FitOptions) -> Vec<usize> {
    let resolved: Vec<usize> =
        (0..run.times.len()).filter(|&i| run.tail_fraction[i] <= opts.fit_tail_tol).collect();
    let start = resolved.len().saturating_sub(opts.window);
    resolved[start..].to_vec()
}

/// Estimates the blow-up time from a run that stopped on resolution loss.
pub fn estimate_blowup_time(run: &RunReport, opts: &FitOptions) -> Result<BlowupFit> {
    if run.stop_reason != StopReason::ResolutionStop {
        return Err(Error::Precondition(format!("run ended with {:?}, not a resolution stop", run.stop_reason)));
    }
    let idx = resolved_window(run, opts);
    if idx.len() < 2 {
        return Err(Error::EstimationUnreliable("fewer than two resolved samples".into()));
    }
    let times: Vec<f64> = idx.iter().map(|&i| run.times[i]).collect();
    let mins: Vec<f64> = idx.iter().map(|&i| run.min_uxx[i]).collect();
    let (t_est, slope, intercept, fit_residual) = fit_blowup_time(&times, &mins)?;
    Ok(BlowupFit {
        t_est,
        window: (idx[0], idx[idx.len() - 1] + 1),
        window_times: (times[0], times[times.len() - 1]),
        slope,
        intercept,
        fit_residual,
    })
}

/// Lower and upper edges of the accepted window mean of the rate product.
pub const RATE_BAND: (f64, f64) = (-0.70, -0.35);

/// Rate products over the fit window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub t_est: f64,
    pub times: Vec<f64>,
    /// `min u_xx (T_est - t)`.
    pub product: Vec<f64>,
    /// `min u_x (T_est - t)`.
    pub ux_product: Vec<f64>,
    pub window_mean: f64,
    pub window_len: usize,
    /// The window is shorter than the minimum length.
    pub inconclusive: bool,
    pub in_band: bool,
    /// `|min u_x (T_est - t)|` is smaller at the end of the window than at its start.
    pub ux_product_decreasing: bool,
}

/// Builds the rate report from sample series and a fitted blow-up time.
pub fn rate_report_series(times: &[f64], mins: &[f64], min_ux: &[f64], t_est: f64, min_window: usize) -> RateReport {
    let product: Vec<f64> = times.iter().zip(mins).map(|(t, m)| m * (t_est - t)).collect();
    let ux_product: Vec<f64> = times.iter().zip(min_ux).map(|(t, m)| m * (t_est - t)).collect();
    let n = product.len();
    let window_mean = if n > 0 { product.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let ux_product_decreasing = n >= 2 && ux_product[n - 1].abs() < ux_product[0].abs();
    RateReport {
        t_est,
        times: times.to_vec(),
        product,
        ux_product,
        window_mean,
        window_len: n,
        inconclusive: n < min_window,
        in_band: window_mean >= RATE_BAND.0 && window_mean <= RATE_BAND.1,
        ux_product_decreasing,
    }
}

/// Rate report over the fit window of `run`.
pub fn rate_report(run: &RunReport, fit: &BlowupFit, opts: &FitOptions) -> RateReport {
    let (a, b) = fit.window;
    let idx: Vec<usize> = resolved_window(run, opts).into_iter().filter(|&i| i >= a && i < b).collect();
    let pick = |s: &[f64]| idx.iter().map(|&i| s[i]).collect::<Vec<f64>>();
    rate_report_series(&pick(&run.times), &pick(&run.min_uxx), &pick(&run.min_ux), fit.t_est, opts.min_window)
}

/// Whether the window mean of `fine` is closer to `-1/2` than that of `coarse`.
pub fn refinement_improves(coarse: &RateReport, fine: &RateReport) -> bool {
    (fine.window_mean + 0.5).abs() < (coarse.window_mean + 0.5).abs()
}

/// Superlinear growth of `B` over the last `window` samples: the secant slope
/// over the second half exceeds the one over the first half.
pub fn b_superlinear(times: &[f64], b: &[f64], window: usize) -> bool {
    let n = times.len();
    if window < 3 || n < window {
        return false;
    }
    let (s, m, e) = (n - window, n - window + window / 2, n - 1);
    let first = (b[m] - b[s]) / (times[m] - times[s]);
    let second = (b[e] - b[m]) / (times[e] - times[m]);
    second > first
}

/// Relative band around a constant growth rate of `B` for a linear control run.
pub const LINEAR_B_BAND: f64 = 0.05;

/// Linear growth of `B`: every secant slope `B(t)/t` for `t > 0` lies within
/// `band` (relative) of their mean. `B(0) = 0` is assumed.
pub fn b_linear(times: &[f64], b: &[f64], band: f64) -> bool {
    let slopes: Vec<f64> = times.iter().zip(b).filter(|(t, _)| **t > 0.0).map(|(t, b)| b / t).collect();
    if slopes.is_empty() {
        return false;
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    slopes.iter().all(|s| (s / mean - 1.0).abs() <= band)
}

/// End-to-end study of one datum: criterion at the self-consistent horizon,
/// a run to that horizon, the fitted blow-up time and the rate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupStudy {
    pub grid_points: usize,
    pub setup: BlowupSetup,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub t_stop: f64,
    pub fit: Option<BlowupFit>,
    pub rate: Option<RateReport>,
    /// Per variant: `T_est <= 1.1 x bound`.
    pub t_est_within_bounds: Vec<(ComparisonVariant, bool)>,
    pub b_superlinear: bool,
    /// Why the fit failed, if it did.
    pub fit_error: Option<String>,
}

/// Runs the study with `cfg` as template; the end time becomes the horizon and
/// monitors are sampled every step.
pub fn blowup_study(u0: &RealField, cfg: &SolverConfig, opts: &FitOptions) -> Result<(BlowupStudy, RunReport)> {
    let horizon = consistent_horizon(u0, ComparisonVariant::Curvature)?;
    let setup = check_condition(u0, horizon.unwrap_or(0.0))?;
    let mut run_cfg = *cfg;
    run_cfg.monitor_every = 1;
    if let Some(t) = horizon {
        run_cfg.t_end = t;
    }
    let run = evolve(u0, &run_cfg)?;
    let (fit, fit_error) = match estimate_blowup_time(&run, opts) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rate = fit.as_ref().map(|f| rate_report(&run, f, opts));
    let t_est_within_bounds = match &fit {
        Some(f) => setup
            .comparisons
            .iter()
            .map(|c| (c.variant, c.bound_time.is_some_and(|b| f.t_est <= 1.1 * b)))
            .collect(),
        None => Vec::new(),
    };
    let study = BlowupStudy {
        grid_points: u0.grid().n_points(),
        setup,
        stop_reason: run.stop_reason,
        steps: run.steps,
        t_stop: *run.times.last().expect("nonempty run"),
        fit,
        rate,
        t_est_within_bounds,
        b_superlinear: b_superlinear(&run.times, &run.b_integral, opts.window),
        fit_error,
    };
    Ok((study, run))
}

/// One row of an amplitude sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub c_t: f64,
    pub verdict: bool,
    pub t_est: Option<f64>,
    /// Bound of the shifted comparison at the horizon.
    pub bound: Option<f64>,
    pub window_mean: Option<f64>,
}

impl SweepRow {
    /// Row for a finished study. Fitted quantities are only reported when the
    /// criterion holds, so a sub-threshold datum never carries a blow-up time.
    pub fn from_study(amplitude: f64, study: &BlowupStudy) -> Self {
        let verdict = study.setup.verdict;
        let bound = study
            .setup
            .comparisons
            .iter()
            .find(|c| c.variant == ComparisonVariant::Shifted)
            .and_then(|c| c.bound_time);
        SweepRow {
            amplitude,
            c_t: study.setup.c_t,
            verdict,
            t_est: study.fit.as_ref().filter(|_| verdict).map(|f| f.t_est),
            bound: bound.filter(|_| verdict),
            window_mean: study.rate.as_ref().filter(|_| verdict).map(|r| r.window_mean),
        }
    }
}

/// CSV header of [`sweep_csv`].
pub const SWEEP_CSV_HEADER: &str = "A,C_T,verdict,T_est,bound,window_mean";

/// Studies `amplitude * profile` for each amplitude in parallel.
pub fn blowup_sweep(
    profile: &RealField,
    amplitudes: &[f64],
    cfg: &SolverConfig,
    opts: &FitOptions,
) -> Result<Vec<SweepRow>> {
    amplitudes
        .par_iter()
        .map(|&a| {
            let u0 = profile.scale(a);
            let horizon = consistent_horizon(&u0, ComparisonVariant::Curvature)?;
            let Some(_) = horizon else {
                let setup = check_condition(&u0, 0.0)?;
                return Ok(SweepRow {
                    amplitude: a,
                    c_t: setup.c_t,
                    verdict: false,
                    t_est: None,
                    bound: None,
                    window_mean: None,
                });
            };
            let (study, _) = blowup_study(&u0, cfg, opts)?;
            Ok(SweepRow::from_study(a, &study))
        })
        .collect()
}

/// Sweep table with the columns of [`SWEEP_CSV_HEADER`]; missing values are empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{},{},{},{}\n",
            r.amplitude,
            r.c_t,
            r.verdict,
            opt(r.t_est),
            opt(r.bound),
            opt(r.window_mean)
        ));
    }
    out
}
