//! Twin-run stability experiment.
//!
//! Two solutions started from nearby data are advanced in lockstep with a
//! shared step size, and the growth of their momentum difference is tracked
//! in `B^{1/2}_{2,2}`:
//!
//! ```text
//! ratio(t) = ||M(t) - N(t)||_{B^{1/2}_{2,2}} / ||M(0) - N(0)||_{B^{1/2}_{2,2}}
//! ```
//!
//! For a Lipschitz-stable flow the supremum of this ratio over `[0, T]` does
//! not depend on the size of the perturbation.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Integrator, SolverConfig};
use crate::error::{config, Error, Result};
use crate::grid::{self, RealField};
use crate::littlewood_paley::{besov_22_spectral, build_partition};

/// Smoothness index of the difference norm (`s - 1` with `s = 3/2`).
pub const DIFFERENCE_SMOOTHNESS: f64 = 0.5;

/// Outcome of one twin run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub initial_difference: f64,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// Both data coincide; the ratio is reported as 1 with no growth.
    pub perfect_match: bool,
}

/// Twin runs over several perturbation sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub epsilons: Vec<f64>,
    pub reports: Vec<StabilityReport>,
    pub sup_ratios: Vec<f64>,
    /// Largest `|r / mean - 1|` over the sup ratios.
    pub max_relative_spread: f64,
    pub band: f64,
    pub stable: bool,
}

/// Evolves `u0` and `v0` to `t_end` in lockstep and records the difference ratio.
///
/// Either run turning nonfinite or losing resolution invalidates the experiment.
pub fn stability_experiment(
    u0: &RealField,
    v0: &RealField,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<StabilityReport> {
    let mut cfg = *cfg;
    cfg.t_end = t_end;
    cfg.validate()?;
    if u0.grid() != &cfg.grid || v0.grid() != &cfg.grid {
        return config("stability data must live on the solver grid");
    }
    grid::check_domain(u0)?;
    grid::check_domain(v0)?;
    let part = build_partition(cfg.grid)?;
    let mut a = Integrator::new(&cfg);
    let mut b = Integrator::new(&cfg);
    let mut uh = a.initial_state(u0);
    let mut vh = b.initial_state(v0);

    let difference = |a: &Integrator, uh: &[Complex64], vh: &[Complex64]| {
        let mu = a.momentum(uh);
        let mv = a.momentum(vh);
        let diff: Vec<Complex64> = mu.iter().zip(&mv).map(|(p, q)| p - q).collect();
        besov_22_spectral(&diff, DIFFERENCE_SMOOTHNESS, &part)
    };
    let d0 = difference(&a, &uh, &vh);
    if d0 == 0.0 {
        return Ok(StabilityReport {
            initial_difference: 0.0,
            times: vec![0.0, t_end],
            ratios: vec![1.0, 1.0],
            sup_ratio: 1.0,
            perfect_match: true,
        });
    }

    let dx = cfg.grid.dx();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut ratios = vec![1.0];
    let end_slack = 1e-12 * t_end;
    let mut steps = 0usize;
    while t < t_end - end_slack {
        if steps >= cfg.max_steps {
            return Err(Error::Config(format!("step budget of {} exhausted at t = {t}", cfg.max_steps)));
        }
        let da = a.diagnostics(&uh);
        let db = b.diagnostics(&vh);
        for d in [&da, &db] {
            if d.tail > cfg.tail_tolerance {
                return Err(Error::Diverged(format!("twin run lost resolution at t = {t}")));
            }
        }
        let mut dt = a.next_dt(cfg.time_step, &da, dx).min(b.next_dt(cfg.time_step, &db, dx));
        let remaining = t_end - t;
        if dt >= remaining - end_slack {
            dt = remaining;
        }
        a.rk4(&mut uh, dt)?;
        b.rk4(&mut vh, dt)?;
        steps += 1;
        t = if dt == remaining { t_end } else { t + dt };
        if steps % cfg.monitor_every == 0 || t >= t_end - end_slack {
            times.push(t);
            ratios.push(difference(&a, &uh, &vh) / d0);
        }
    }
    let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(StabilityReport { initial_difference: d0, times, ratios, sup_ratio, perfect_match: false })
}

/// Runs [`stability_experiment`] with `v0 = u0 + eps max|u0| g / max|g|` for
/// each `eps` and checks that the sup ratios agree within `band`.
pub fn stability_sweep(
    u0: &RealField,
    shape: &RealField,
    epsilons: &[f64],
    t_end: f64,
    cfg: &SolverConfig,
    band: f64,
) -> Result<StabilitySweep> {
    if epsilons.is_empty() {
        return config("perturbation sweep needs at least one size");
    }
    let gmax = shape.max_abs();
    if gmax == 0.0 || !shape.is_finite() {
        return config("perturbation shape must be finite and nonzero");
    }
    let scale = u0.max_abs().max(f64::MIN_POSITIVE) / gmax;
    let reports = epsilons
        .par_iter()
        .map(|&eps| {
            let v0 = u0.zip_with(shape, |u, g| u + eps * scale * g)?;
            stability_experiment(u0, &v0, t_end, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratios: Vec<f64> = reports.iter().map(|r| r.sup_ratio).collect();
    let mean = sup_ratios.iter().sum::<f64>() / sup_ratios.len() as f64;
    let max_relative_spread = sup_ratios.iter().fold(0.0_f64, |m, r| m.max((r / mean - 1.0).abs()));
    Ok(StabilitySweep {
        epsilons: epsilons.to_vec(),
        reports,
        sup_ratios,
        max_relative_spread,
        band,
        stable: max_relative_spread <= band,
    })
}
