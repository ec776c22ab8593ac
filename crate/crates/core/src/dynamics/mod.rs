//! Time integration of the equation with the a-priori monitors.
//!
//! The state is the coefficient vector of `u`. A classical four-stage
//! Runge–Kutta step advances it with any of the three right-hand-side forms.
//! Along the run the integrator records
//!
//! ```text
//! E(t)      = int u^2 + u_x^2 dx                       (conserved)
//! |w|_inf   <= 6 |w0|_{L2}^2 t + |w0|_inf              w = 2u - u_x
//! |u_x|_inf <= 54 t |u0|_{H1}^2 + 5 |u0|_{H3/2}
//! B(t)      = int_0^t |u_xx|_inf                       (trapezoid, every step)
//! ```
//!
//! together with the minimum of `u_xx` and its location. A run stops at
//! `t_end`, when the share of `H^1` energy in the top third of the retained
//! band exceeds the tail tolerance, or when a nonfinite value appears.

mod dp;
mod monitor;
mod rhs;
mod stability;

pub use dp::{dp_operator, dp_residual, dp_transform};
pub use monitor::{min_uxx, refined_extremum, tail_fraction};
pub use rhs::{rhs_m_form, rhs_spectral_form, rhs_u_form, rhs_u_form_green, Evaluator, RhsForm};
pub use stability::{stability_experiment, stability_sweep, StabilityReport, StabilitySweep};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::grid::{self, Fourier, Grid1D, RealField};

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeStep {
    /// Constant step; the last step is shortened to land on `t_end`.
    Fixed { dt: f64 },
    /// `dt = min(cfl dx / max|4u - 2u_x|, rate / max|u_xx|)`.
    Adaptive { cfl: f64, rate: f64 },
}

impl Default for TimeStep {
    fn default() -> Self {
        TimeStep::Adaptive { cfl: 0.3, rate: 0.05 }
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid1D,
    pub time_step: TimeStep,
    pub t_end: f64,
    /// 2/3-rule dealiasing of every quadratic product.
    pub dealias: bool,
    /// Record a monitor sample every this many steps (the final state is always sampled).
    pub monitor_every: usize,
    /// Resolution stop when the spectral-tail energy share exceeds this.
    pub tail_tolerance: f64,
    pub rhs_form: RhsForm,
    /// Keep a snapshot of `u` every this many steps.
    pub snapshot_every: Option<usize>,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn new(grid: Grid1D, t_end: f64) -> Self {
        Self {
            grid,
            time_step: TimeStep::default(),
            t_end,
            dealias: true,
            monitor_every: 10,
            tail_tolerance: 1e-3,
            rhs_form: RhsForm::SpectralForm,
            snapshot_every: None,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return config(format!("end time must be positive, got {}", self.t_end));
        }
        match self.time_step {
            TimeStep::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return config(format!("time step must be positive, got {dt}"));
            }
            TimeStep::Adaptive { cfl, rate } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return config(format!("CFL factor must lie in (0, 1], got {cfl}"));
                }
                if !(rate.is_finite() && rate > 0.0) {
                    return config(format!("rate factor must be positive, got {rate}"));
                }
            }
            _ => {}
        }
        if self.monitor_every == 0 {
            return config("monitor cadence must be at least 1");
        }
        if self.snapshot_every == Some(0) {
            return config("snapshot cadence must be at least 1");
        }
        if !(self.tail_tolerance > 0.0) {
            return config("tail tolerance must be positive");
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ReachedTEnd,
    ResolutionStop,
    Nonfinite,
}

/// Monitor time series of one run. All vectors share the length of `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub w_linf: Vec<f64>,
    pub w_bound: Vec<f64>,
    pub ux_linf: Vec<f64>,
    pub ux_bound: Vec<f64>,
    pub b_integral: Vec<f64>,
    pub min_uxx: Vec<f64>,
    pub xi: Vec<f64>,
    pub min_ux: Vec<f64>,
    /// `min_x 2(u_xx - 2u_x)`.
    pub min_shifted: Vec<f64>,
    pub tail_fraction: Vec<f64>,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub final_field: RealField,
    pub snapshots: Vec<(f64, RealField)>,
}

/// CSV header of [`RunReport::to_csv`].
pub const RUN_CSV_HEADER: &str = "t,E,w_linf,w_bound,ux_linf,ux_bound,B,min_uxx,xi";

/// Norms of the final state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalNorms {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// Verdicts and headline numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stop_reason: StopReason,
    pub steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub final_norms: FinalNorms,
    pub max_energy_drift: f64,
    pub w_bound_violations: usize,
    pub ux_bound_violations: usize,
    pub b_nondecreasing: bool,
    pub final_tail_fraction: f64,
}

impl RunReport {
    /// Largest `|E(t) - E(0)| / E(0)` over the samples (0 when `E(0) = 0`).
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        if e0 == 0.0 {
            return self.energy.iter().fold(0.0, |m, e| m.max(e.abs()));
        }
        self.energy.iter().fold(0.0, |m, e| m.max((e - e0).abs() / e0))
    }

    /// Number of samples where `|w|_inf` exceeds its a-priori bound.
    pub fn w_bound_violations(&self) -> usize {
        self.w_linf.iter().zip(&self.w_bound).filter(|(a, b)| a > b).count()
    }

    /// Number of samples where `|u_x|_inf` exceeds its a-priori bound.
    pub fn ux_bound_violations(&self) -> usize {
        self.ux_linf.iter().zip(&self.ux_bound).filter(|(a, b)| a > b).count()
    }

    pub fn b_nondecreasing(&self) -> bool {
        self.b_integral.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn summary(&self) -> RunSummary {
        let f = &self.final_field;
        RunSummary {
            stop_reason: self.stop_reason,
            steps: self.steps,
            samples: self.times.len(),
            t_final: *self.times.last().expect("at least one sample"),
            final_norms: FinalNorms {
                l2: grid::l2_norm(f),
                h1: grid::sobolev_norm(f, 1.0),
                linf: f.max_abs(),
            },
            max_energy_drift: self.max_energy_drift(),
            w_bound_violations: self.w_bound_violations(),
            ux_bound_violations: self.ux_bound_violations(),
            b_nondecreasing: self.b_nondecreasing(),
            final_tail_fraction: *self.tail_fraction.last().expect("at least one sample"),
        }
    }

    /// Monitor table with the columns of [`RUN_CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RUN_CSV_HEADER);
        out.push('\n');
        for i in 0..self.times.len() {
            let row = [
                self.times[i],
                self.energy[i],
                self.w_linf[i],
                self.w_bound[i],
                self.ux_linf[i],
                self.ux_bound[i],
                self.b_integral[i],
                self.min_uxx[i],
                self.xi[i],
            ];
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Per-state quantities needed by the step policy and the monitors.
struct Diagnostics {
    speed: f64,
    uxx_linf_raw: f64,
    uxx_linf: f64,
    min_uxx: (f64, f64),
    ux_linf: f64,
    min_ux: f64,
    w_linf: f64,
    min_shifted: f64,
    energy: f64,
    tail: f64,
}

/// Runge–Kutta driver working on coefficient vectors.
pub(crate) struct Integrator {
    eval: Evaluator,
    fourier: Fourier,
    d1: Vec<Complex64>,
    k2: Vec<f64>,
    stages: [Vec<Complex64>; 4],
    work: Vec<Complex64>,
    u: Vec<f64>,
    ux: Vec<f64>,
    uxx: Vec<f64>,
}

impl Integrator {
    pub(crate) fn new(cfg: &SolverConfig) -> Self {
        let g = cfg.grid;
        let n = g.n_points();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            eval: Evaluator::new(g, cfg.rhs_form, cfg.dealias),
            fourier: Fourier::new(n),
            d1: g.derivative_symbol(1),
            k2: g.wavenumbers().iter().map(|k| k * k).collect(),
            stages: std::array::from_fn(|_| vec![zero; n]),
            work: vec![zero; n],
            u: vec![0.0; n],
            ux: vec![0.0; n],
            uxx: vec![0.0; n],
        }
    }

    /// Coefficients of `u0`, projected onto the retained band.
    pub(crate) fn initial_state(&mut self, u0: &RealField) -> Vec<Complex64> {
        let mut uh = vec![Complex64::new(0.0, 0.0); u0.grid().n_points()];
        self.fourier.forward_real(u0.samples(), &mut uh);
        self.eval.project(&mut uh);
        uh
    }

    pub(crate) fn rk4(&mut self, uh: &mut [Complex64], dt: f64) -> Result<()> {
        let n = uh.len();
        let [k1, k2, k3, k4] = &mut self.stages;
        self.eval.rate(uh, k1)?;
        for i in 0..n {
            self.work[i] = uh[i] + 0.5 * dt * k1[i];
        }
        self.eval.rate(&self.work, k2)?;
        for i in 0..n {
            self.work[i] = uh[i] + 0.5 * dt * k2[i];
        }
        self.eval.rate(&self.work, k3)?;
        for i in 0..n {
            self.work[i] = uh[i] + dt * k3[i];
        }
        self.eval.rate(&self.work, k4)?;
        for i in 0..n {
            uh[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if uh.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Diverged("nonfinite state after step".into()))
        }
    }

    pub(crate) fn physical(&mut self, uh: &[Complex64]) -> RealField {
        let mut out = vec![0.0; uh.len()];
        self.fourier.inverse_real(uh, &mut out);
        RealField::new(*self.eval.grid(), out).expect("grid-sized buffer")
    }

    /// `(1 + k^2) u_hat`, the coefficients of `m`.
    pub(crate) fn momentum(&self, uh: &[Complex64]) -> Vec<Complex64> {
        uh.iter().zip(&self.k2).map(|(c, k2)| c * (1.0 + k2)).collect()
    }

    fn diagnostics(&mut self, uh: &[Complex64]) -> Diagnostics {
        let g = *self.eval.grid();
        let n = uh.len();
        self.fourier.inverse_real(uh, &mut self.u);
        for i in 0..n {
            self.work[i] = uh[i] * self.d1[i];
        }
        self.fourier.inverse_real(&self.work, &mut self.ux);
        for i in 0..n {
            self.work[i] = -uh[i] * self.k2[i];
        }
        self.fourier.inverse_real(&self.work, &mut self.uxx);

        let mut speed = 0.0_f64;
        let mut ux_linf = 0.0_f64;
        let mut min_ux = f64::INFINITY;
        let mut w_linf = 0.0_f64;
        let mut min_shifted = f64::INFINITY;
        let mut uxx_linf_raw = 0.0_f64;
        for i in 0..n {
            let (u, ux, uxx) = (self.u[i], self.ux[i], self.uxx[i]);
            speed = speed.max((4.0 * u - 2.0 * ux).abs());
            ux_linf = ux_linf.max(ux.abs());
            min_ux = min_ux.min(ux);
            w_linf = w_linf.max((2.0 * u - ux).abs());
            min_shifted = min_shifted.min(2.0 * (uxx - 2.0 * ux));
            uxx_linf_raw = uxx_linf_raw.max(uxx.abs());
        }
        let lo = refined_extremum(&self.uxx, &g, true);
        let hi = refined_extremum(&self.uxx, &g, false);
        let (total, tail) = monitor::energy_split(uh, &g, &self.k2);
        Diagnostics {
            speed,
            uxx_linf_raw,
            uxx_linf: lo.0.abs().max(hi.0.abs()),
            min_uxx: lo,
            ux_linf,
            min_ux,
            w_linf,
            min_shifted,
            energy: total,
            tail: if total > 0.0 { tail / total } else { 0.0 },
        }
    }

    fn next_dt(&self, policy: TimeStep, d: &Diagnostics, dx: f64) -> f64 {
        match policy {
            TimeStep::Fixed { dt } => dt,
            TimeStep::Adaptive { cfl, rate } => {
                let transport = if d.speed > 0.0 { cfl * dx / d.speed } else { f64::INFINITY };
                let growth = if d.uxx_linf_raw > 0.0 { rate / d.uxx_linf_raw } else { f64::INFINITY };
                transport.min(growth)
            }
        }
    }
}

/// Advances `u` by one Runge–Kutta step of size `dt`.
pub fn step(u: &RealField, dt: f64, cfg: &SolverConfig) -> Result<RealField> {
    if u.grid() != &cfg.grid {
        return config("field grid differs from solver grid");
    }
    if !(dt.is_finite() && dt > 0.0) {
        return config(format!("time step must be positive, got {dt}"));
    }
    let mut integ = Integrator::new(cfg);
    let mut uh = integ.initial_state(u);
    integ.rk4(&mut uh, dt)?;
    Ok(integ.physical(&uh))
}

struct Bounds {
    w0_l2_sq: f64,
    w0_linf: f64,
    h1_sq: f64,
    h32: f64,
}

/// Integrates from `u0` under `cfg`, recording monitors.
///
/// Fails with a configuration error when `u0` does not decay inside the box.
pub fn evolve(u0: &RealField, cfg: &SolverConfig) -> Result<RunReport> {
    cfg.validate()?;
    if u0.grid() != &cfg.grid {
        return config("initial field grid differs from solver grid");
    }
    if !u0.is_finite() {
        return config("initial field is not finite");
    }
    grid::check_domain(u0)?;

    let g = cfg.grid;
    let dx = g.dx();
    let mut integ = Integrator::new(cfg);
    let mut uh = integ.initial_state(u0);
    let start = integ.physical(&uh);
    let w0 = grid::derivative(&start, 1)?.zip_with(&start, |ux, u| 2.0 * u - ux)?;
    let mut diag = integ.diagnostics(&uh);
    let bounds = Bounds {
        w0_l2_sq: grid::l2_norm(&w0).powi(2),
        // Same evaluation path as the monitored series, so t = 0 compares equal.
        w0_linf: diag.w_linf,
        h1_sq: grid::sobolev_norm(&start, 1.0).powi(2),
        h32: grid::sobolev_norm(&start, 1.5),
    };

    let mut report = RunReport {
        grid: g,
        times: Vec::new(),
        energy: Vec::new(),
        w_linf: Vec::new(),
        w_bound: Vec::new(),
        ux_linf: Vec::new(),
        ux_bound: Vec::new(),
        b_integral: Vec::new(),
        min_uxx: Vec::new(),
        xi: Vec::new(),
        min_ux: Vec::new(),
        min_shifted: Vec::new(),
        tail_fraction: Vec::new(),
        stop_reason: StopReason::ReachedTEnd,
        steps: 0,
        final_field: start.clone(),
        snapshots: Vec::new(),
    };

    let record = |report: &mut RunReport, t: f64, b: f64, d: &Diagnostics| {
        report.times.push(t);
        report.energy.push(d.energy);
        report.w_linf.push(d.w_linf);
        report.w_bound.push(6.0 * bounds.w0_l2_sq * t + bounds.w0_linf);
        report.ux_linf.push(d.ux_linf);
        report.ux_bound.push(54.0 * t * bounds.h1_sq + 5.0 * bounds.h32);
        report.b_integral.push(b);
        report.min_uxx.push(d.min_uxx.0);
        report.xi.push(d.min_uxx.1);
        report.min_ux.push(d.min_ux);
        report.min_shifted.push(d.min_shifted);
        report.tail_fraction.push(d.tail);
    };

    let mut t = 0.0;
    let mut b = 0.0;
    record(&mut report, t, b, &diag);
    if cfg.snapshot_every.is_some() {
        report.snapshots.push((t, start));
    }
    let end_slack = 1e-12 * cfg.t_end;
    let mut steps = 0usize;
    loop {
        if t >= cfg.t_end - end_slack {
            report.stop_reason = StopReason::ReachedTEnd;
            break;
        }
        if steps >= cfg.max_steps {
            return Err(Error::Config(format!("step budget of {} exhausted at t = {t}", cfg.max_steps)));
        }
        let mut dt = integ.next_dt(cfg.time_step, &diag, dx);
        let remaining = cfg.t_end - t;
        if dt >= remaining - end_slack {
            dt = remaining;
        }
        let saved = uh.clone();
        if integ.rk4(&mut uh, dt).is_err() {
            uh = saved;
            report.stop_reason = StopReason::Nonfinite;
            break;
        }
        let next = integ.diagnostics(&uh);
        if !(next.energy.is_finite() && next.uxx_linf.is_finite() && next.min_uxx.0.is_finite()) {
            uh = saved;
            report.stop_reason = StopReason::Nonfinite;
            break;
        }
        steps += 1;
        t = if dt == remaining { cfg.t_end } else { t + dt };
        b += 0.5 * dt * (diag.uxx_linf + next.uxx_linf);
        diag = next;
        let resolution_lost = diag.tail > cfg.tail_tolerance;
        let at_end = t >= cfg.t_end - end_slack;
        if steps % cfg.monitor_every == 0 || at_end || resolution_lost {
            record(&mut report, t, b, &diag);
        }
        if let Some(every) = cfg.snapshot_every {
            if steps % every == 0 || at_end || resolution_lost {
                report.snapshots.push((t, integ.physical(&uh)));
            }
        }
        if resolution_lost {
            report.stop_reason = StopReason::ResolutionStop;
            break;
        }
    }
    report.steps = steps;
    report.final_field = integ.physical(&uh);
    Ok(report)
}

/// Sidecar describing a flat binary snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    /// Name of the binary file next to the sidecar.
    pub data_file: String,
    /// Always `"f64le"`: samples as little-endian doubles, one row of `N` per time.
    pub dtype: String,
}

/// Writes `snapshots.bin` and `snapshots.json` into `dir`.
pub fn write_snapshots(snapshots: &[(f64, RealField)], dir: &std::path::Path) -> Result<SnapshotSidecar> {
    let grid = match snapshots.first() {
        Some((_, f)) => *f.grid(),
        None => return config("no snapshots to write"),
    };
    let mut bytes = Vec::with_capacity(snapshots.len() * grid.n_points() * 8);
    for (_, f) in snapshots {
        if f.grid() != &grid {
            return config("snapshots live on different grids");
        }
        for v in f.samples() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sidecar = SnapshotSidecar {
        grid,
        times: snapshots.iter().map(|(t, _)| *t).collect(),
        data_file: "snapshots.bin".into(),
        dtype: "f64le".into(),
    };
    std::fs::write(dir.join(&sidecar.data_file), bytes)?;
    std::fs::write(dir.join("snapshots.json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

/// Reads snapshots written by [`write_snapshots`].
pub fn read_snapshots(dir: &std::path::Path) -> Result<Vec<(f64, RealField)>> {
    let sidecar: SnapshotSidecar = serde_json::from_str(&std::fs::read_to_string(dir.join("snapshots.json"))?)?;
    let bytes = std::fs::read(dir.join(&sidecar.data_file))?;
    let n = sidecar.grid.n_points();
    if bytes.len() != sidecar.times.len() * n * 8 {
        return config("snapshot data length does not match its sidecar");
    }
    let values: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    sidecar
        .times
        .iter()
        .zip(values.chunks_exact(n))
        .map(|(&t, row)| Ok((t, RealField::new(sidecar.grid, row.to_vec())?)))
        .collect()
}
