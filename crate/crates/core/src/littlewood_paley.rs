//! Littlewood–Paley decomposition on the grid's frequency table, Besov norms and
//! empirical audits of the classical Besov-space inequalities.
//!
//! The partition is built from the smoothed step `S(t) = I(t)/I(1)` with
//! `I(t) = int_0^t psi(2 tau - 1) d tau` and the mollifier
//! `psi(t) = exp(-1/(1 - t^2))`:
//!
//! ```text
//! chi0(xi)  = 1 - S((|xi| - 3/4) / (4/3 - 3/4))      (1 on |xi| <= 3/4, 0 on |xi| >= 4/3)
//! phi(xi)   = chi0(xi/2) - chi0(xi)                  (supported in 3/4 <= |xi| <= 8/3)
//! chi(xi)   = 1 - sum_{j=0}^{j_max} phi(2^-j xi)
//! ```
//!
//! The block sum telescopes to `chi0(2^{-j_max-1} xi) - chi0(xi)`, and `j_max` is
//! the largest index with `(3/4) 2^j_max <= k_nyquist`. Every grid frequency then
//! satisfies `chi0(2^{-j_max-1} xi) = 1`, so the top block coincides with
//! `phi(2^{-j_max} xi)` on the grid and no renormalization is visible there.
//! At most two multipliers overlap at any frequency and they sum to one, which
//! gives `1/2 <= chi^2 + sum phi^2 <= 1`.

use std::sync::OnceLock;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::grid::{self, Fourier, Grid1D, RealField};

const INNER: f64 = 3.0 / 4.0;
const OUTER: f64 = 4.0 / 3.0;

fn mollifier(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `C^inf` step rising from 0 at `t = 0` to 1 at `t = 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    static TOTAL: OnceLock<f64> = OnceLock::new();
    let bump = |tau: f64| mollifier(2.0 * tau - 1.0);
    // The bump is symmetric about 1/2, so I(1) = 2 I(1/2).
    let total = *TOTAL.get_or_init(|| 2.0 * simpson_adaptive(&bump, 0.0, 0.5, 1e-16));
    if t <= 0.5 {
        simpson_adaptive(&bump, 0.0, t, 1e-16) / total
    } else {
        1.0 - simpson_adaptive(&bump, t, 1.0, 1e-16) / total
    }
}

/// Low-pass profile: 1 on `|xi| <= 3/4`, 0 on `|xi| >= 4/3`.
pub fn chi0(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= INNER {
        1.0
    } else if a >= OUTER {
        0.0
    } else {
        1.0 - smooth_step((a - INNER) / (OUTER - INNER))
    }
}

/// Annular profile `chi0(xi/2) - chi0(xi)`, supported in `3/4 <= |xi| <= 8/3`.
pub fn phi(xi: f64) -> f64 {
    chi0(0.5 * xi) - chi0(xi)
}

/// Sampled dyadic multipliers on a grid's frequency table (FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPartition {
    grid: Grid1D,
    chi: Vec<f64>,
    phi_blocks: Vec<Vec<f64>>,
    j_max: i32,
}

/// Builds the partition for `grid`.
pub fn build_partition(grid: Grid1D) -> Result<DyadicPartition> {
    let k_nyq = grid.wavenumber(grid.nyquist_index()).abs();
    if k_nyq < INNER {
        return config(format!(
            "grid too coarse for any dyadic annulus: k_nyquist = {k_nyq:.4} < 3/4"
        ));
    }
    let mut j_max = 0i32;
    while INNER * 2f64.powi(j_max + 1) <= k_nyq {
        j_max += 1;
    }
    let ks = grid.wavenumbers();
    let phi_blocks: Vec<Vec<f64>> = (0..=j_max)
        .map(|j| {
            let scale = 2f64.powi(-j);
            ks.iter().map(|&k| phi(scale * k)).collect()
        })
        .collect();
    let chi = ks
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            if k.abs() >= OUTER {
                return 0.0;
            }
            1.0 - phi_blocks.iter().map(|b| b[idx]).sum::<f64>()
        })
        .collect();
    Ok(DyadicPartition { grid, chi, phi_blocks, j_max })
}

impl DyadicPartition {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn phi_blocks(&self) -> &[Vec<f64>] {
        &self.phi_blocks
    }

    /// Multiplier of block `j` (`chi` for `j = -1`); `None` outside `-1..=j_max`.
    pub fn multiplier(&self, j: i32) -> Option<&[f64]> {
        match j {
            -1 => Some(&self.chi),
            j if (0..=self.j_max).contains(&j) => Some(&self.phi_blocks[j as usize]),
            _ => None,
        }
    }

    /// `chi(xi) + sum_j phi(2^-j xi)` at every grid frequency.
    pub fn partition_sum(&self) -> Vec<f64> {
        (0..self.chi.len())
            .map(|i| self.chi[i] + self.phi_blocks.iter().map(|b| b[i]).sum::<f64>())
            .collect()
    }

    /// `chi(xi)^2 + sum_j phi(2^-j xi)^2` at every grid frequency.
    pub fn square_sum(&self) -> Vec<f64> {
        (0..self.chi.len())
            .map(|i| self.chi[i].powi(2) + self.phi_blocks.iter().map(|b| b[i] * b[i]).sum::<f64>())
            .collect()
    }
}

/// Smoothness and summability indices of a Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        let bp = Self { s, p, r };
        bp.validate()?;
        Ok(bp)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return config("Besov smoothness must be finite");
        }
        if self.p.is_nan() || self.p < 1.0 || self.r.is_nan() || self.r < 1.0 {
            return config(format!("Besov exponents must be >= 1, got p = {}, r = {}", self.p, self.r));
        }
        Ok(())
    }
}

fn check_grid(f: &RealField, part: &DyadicPartition) -> Result<()> {
    if f.grid() != part.grid() {
        return config("field and partition live on different grids");
    }
    Ok(())
}

fn filter(f: &RealField, mult: impl Fn(usize) -> f64) -> RealField {
    let mut spec = grid::to_spectral(f);
    spec.apply(|idx| Complex64::new(mult(idx), 0.0));
    grid::to_physical(&spec)
}

/// Dyadic block `Delta_j f`: zero for `j <= -2`, `chi(D) f` for `j = -1`.
pub fn dyadic_block(f: &RealField, j: i32, part: &DyadicPartition) -> Result<RealField> {
    check_grid(f, part)?;
    if j < -1 {
        return Ok(RealField::zeros(*f.grid()));
    }
    match part.multiplier(j) {
        Some(m) => Ok(filter(f, |idx| m[idx])),
        None => Err(Error::Precondition(format!("block index {j} exceeds j_max = {}", part.j_max))),
    }
}

/// Low-frequency cutoff `S_j f = sum_{j' <= j-1} Delta_j' f`; indices beyond
/// `j_max + 1` return the full field.
pub fn low_cutoff(f: &RealField, j: i32, part: &DyadicPartition) -> Result<RealField> {
    check_grid(f, part)?;
    if j < 0 {
        return Err(Error::Precondition(format!("low cutoff index must be >= 0, got {j}")));
    }
    let top = (j - 1).min(part.j_max);
    let mult: Vec<f64> = (0..part.chi.len())
        .map(|i| part.chi[i] + (0..=top).map(|q| part.phi_blocks[q as usize][i]).sum::<f64>())
        .collect();
    Ok(filter(f, |idx| mult[idx]))
}

/// All blocks `Delta_{-1} f, .., Delta_{j_max} f` from a single transform.
pub fn all_blocks(f: &RealField, part: &DyadicPartition) -> Result<Vec<RealField>> {
    check_grid(f, part)?;
    let n = f.grid().n_points();
    let mut fourier = Fourier::new(n);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    fourier.forward_real(f.samples(), &mut coeffs);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    (-1..=part.j_max)
        .map(|j| {
            let m = part.multiplier(j).expect("index in range");
            for i in 0..n {
                buf[i] = coeffs[i] * m[i];
            }
            let mut out = vec![0.0; n];
            fourier.inverse_real(&buf, &mut out);
            RealField::new(*f.grid(), out)
        })
        .collect()
}

fn weighted_sum(norms: &[f64], s: f64, r: f64) -> f64 {
    // norms[0] belongs to j = -1.
    let weighted = norms.iter().enumerate().map(|(i, &a)| 2f64.powf(s * (i as f64 - 1.0)) * a);
    if r.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Besov norm `(sum_{j >= -1} 2^{rjs} ||Delta_j f||_{L^p}^r)^{1/r}` (sup for `r = inf`).
pub fn besov_norm(f: &RealField, bp: BesovParams, part: &DyadicPartition) -> Result<f64> {
    bp.validate()?;
    let norms = block_lp_norms(f, bp.p, part)?;
    Ok(weighted_sum(&norms, bp.s, bp.r))
}

/// `||Delta_j f||_{L^p}` for `j = -1..=j_max`.
pub fn block_lp_norms(f: &RealField, p: f64, part: &DyadicPartition) -> Result<Vec<f64>> {
    check_grid(f, part)?;
    if p == 2.0 {
        let spec = grid::to_spectral(f);
        return Ok(block_l2_norms_spectral(spec.coeffs(), part));
    }
    all_blocks(f, part)?.iter().map(|b| grid::lp_norm(b, p)).collect()
}

/// Block `L^2` norms from coefficients by Parseval; equal to the Riemann sums
/// of the block samples up to round-off.
pub fn block_l2_norms_spectral(coeffs: &[Complex64], part: &DyadicPartition) -> Vec<f64> {
    let length = part.grid.length();
    (-1..=part.j_max)
        .map(|j| {
            let m = part.multiplier(j).expect("index in range");
            let sum: f64 = coeffs.iter().zip(m).map(|(c, &w)| w * w * c.norm_sqr()).sum();
            (length * sum).sqrt()
        })
        .collect()
}

/// `B^s_{2,2}` norm from coefficients.
pub fn besov_22_spectral(coeffs: &[Complex64], s: f64, part: &DyadicPartition) -> f64 {
    weighted_sum(&block_l2_norms_spectral(coeffs, part), s, 2.0)
}

/// Which inequality an audit evaluates. Every ratio is LHS divided by the
/// right-hand bracket without its constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditKind {
    /// `||u||_{B^{theta s1 + (1-theta) s2}} <= ||u||_{B^s1}^theta ||u||_{B^s2}^{1-theta}`
    /// with constant exactly one.
    Interpolation { s1: f64, s2: f64, theta: f64, p: f64, r: f64 },
    /// `||u||_{B^{s - (1/p1 - 1/p2)}_{p2,r2}} <= C ||u||_{B^s_{p1,r1}}`.
    Embedding { s: f64, p1: f64, p2: f64, r1: f64, r2: f64 },
    /// `||u^2||_{B^s} <= C 2 ||u||_{L^inf} ||u||_{B^s}` (algebra bound with `u = v`).
    Algebra { s: f64, p: f64, r: f64 },
    /// `||u_x u||_{B^{s-1}} <= C ||u_x||_{B^{s-1}} ||u||_{B^s}`.
    Morse { s: f64, p: f64, r: f64 },
    /// `||L^s(u^2) - u L^s u||_{L^2} <= C (||L^s u|| ||u||_inf + ||u_x||_inf ||L^{s-1} u||)`.
    KatoPonce { s: f64 },
    /// `||u||_{B^{s_low}} <= C ||u||_{B^{s_high}}` for `s_low < s_high`.
    Monotonicity { s_low: f64, s_high: f64, p: f64, r: f64 },
    /// `||u||_{B^s_{2,2}} / ||u||_{H^s}`, bounded above and below.
    BesovSobolev { s: f64 },
    /// `||f(t)||_{B^{sigma-1}} <= (||f0|| + int e^{-CV} ||g||) e^{CV(t)}` for
    /// solutions of `f_t + v f_x = g`, with `V(t) = int_0^t ||v||_{B^{sigma+1}}`.
    /// The fitted constant is `C` itself; see the transport module.
    TransportApriori { sigma: f64 },
}

impl AuditKind {
    pub fn id(&self) -> &'static str {
        match self {
            AuditKind::Interpolation { .. } => "interpolation",
            AuditKind::Embedding { .. } => "embedding",
            AuditKind::Algebra { .. } => "algebra",
            AuditKind::Morse { .. } => "morse",
            AuditKind::KatoPonce { .. } => "kato_ponce",
            AuditKind::Monotonicity { .. } => "monotonicity",
            AuditKind::BesovSobolev { .. } => "besov_sobolev",
            AuditKind::TransportApriori { .. } => "transport_apriori",
        }
    }

    /// Whether the inequality carries constant one and is asserted exactly.
    pub fn is_sharp(&self) -> bool {
        matches!(self, AuditKind::Interpolation { .. })
    }
}

/// Slack allowed on inequalities with constant one.
pub const SHARP_SLACK: f64 = 1e-12;
/// Relative drift of a fitted constant tolerated under one grid refinement.
pub const REFINEMENT_BAND: f64 = 0.15;

/// Outcome of an inequality audit over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub audit_id: String,
    pub kind: AuditKind,
    pub ratios: Vec<f64>,
    pub fitted_constant: f64,
    /// Fitted constant on the refined grid divided by the coarse one.
    pub refinement_ratio: Option<f64>,
    /// Hard outcome: sharp inequalities must hold with slack `1e-12`; fitted
    /// ones must be finite.
    pub passed: bool,
    /// Whether the fitted constant stayed within the refinement band.
    pub stable: Option<bool>,
}

fn b(f: &RealField, s: f64, p: f64, r: f64, part: &DyadicPartition) -> Result<f64> {
    besov_norm(f, BesovParams::new(s, p, r)?, part)
}

fn lambda(f: &RealField, s: f64) -> RealField {
    let g = *f.grid();
    let mut spec = grid::to_spectral(f);
    spec.apply(|idx| {
        let k = g.wavenumber(idx);
        Complex64::new((1.0 + k * k).powf(0.5 * s), 0.0)
    });
    grid::to_physical(&spec)
}

fn audit_ratio(u: &RealField, kind: AuditKind, part: &DyadicPartition) -> Result<f64> {
    let ratio = match kind {
        AuditKind::Interpolation { s1, s2, theta, p, r } => {
            let mid = theta * s1 + (1.0 - theta) * s2;
            let lhs = b(u, mid, p, r, part)?;
            let rhs = b(u, s1, p, r, part)?.powf(theta) * b(u, s2, p, r, part)?.powf(1.0 - theta);
            lhs / rhs
        }
        AuditKind::Embedding { s, p1, p2, r1, r2 } => {
            let shift = 1.0 / p1 - if p2.is_infinite() { 0.0 } else { 1.0 / p2 };
            b(u, s - shift, p2, r2, part)? / b(u, s, p1, r1, part)?
        }
        AuditKind::Algebra { s, p, r } => {
            let sq = u.map(|v| v * v);
            b(&sq, s, p, r, part)? / (2.0 * u.max_abs() * b(u, s, p, r, part)?)
        }
        AuditKind::Morse { s, p, r } => {
            let a = grid::derivative(u, 1)?;
            let prod = a.zip_with(u, |x, y| x * y)?;
            b(&prod, s - 1.0, p, r, part)? / (b(&a, s - 1.0, p, r, part)? * b(u, s, p, r, part)?)
        }
        AuditKind::KatoPonce { s } => {
            let sq = u.map(|v| v * v);
            let ls_u = lambda(u, s);
            let comm = lambda(&sq, s).zip_with(&u.zip_with(&ls_u, |x, y| x * y)?, |x, y| x - y)?;
            let ux = grid::derivative(u, 1)?;
            let bracket = grid::l2_norm(&ls_u) * u.max_abs() + ux.max_abs() * grid::l2_norm(&lambda(u, s - 1.0));
            grid::l2_norm(&comm) / bracket
        }
        AuditKind::Monotonicity { s_low, s_high, p, r } => b(u, s_low, p, r, part)? / b(u, s_high, p, r, part)?,
        AuditKind::BesovSobolev { s } => b(u, s, 2.0, 2.0, part)? / grid::sobolev_norm(u, s),
        AuditKind::TransportApriori { .. } => {
            return config("the transport estimate is audited on solved problems, not on a field corpus")
        }
    };
    Ok(ratio)
}

/// Evaluates `kind` on every field of the corpus. Fields must share one grid.
pub fn inequality_audit(corpus: &[RealField], kind: AuditKind) -> Result<AuditReport> {
    let first = corpus.first().ok_or_else(|| Error::Config("audit corpus is empty".into()))?;
    if corpus.iter().any(|f| f.grid() != first.grid()) {
        return config("audit corpus fields must share one grid");
    }
    let part = build_partition(*first.grid())?;
    let ratios = corpus.iter().map(|u| audit_ratio(u, kind, &part)).collect::<Result<Vec<_>>>()?;
    let fitted = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let passed = if kind.is_sharp() {
        ratios.iter().all(|&q| q <= 1.0 + SHARP_SLACK)
    } else {
        ratios.iter().all(|q| q.is_finite())
    };
    Ok(AuditReport {
        audit_id: kind.id().to_string(),
        kind,
        ratios,
        fitted_constant: fitted,
        refinement_ratio: None,
        passed,
        stable: None,
    })
}

/// Runs the audit on `grid` and on the grid with twice the points, using
/// `corpus` to sample the same fields on each, and records how the fitted
/// constant moves.
pub fn audit_with_refinement(
    grid: Grid1D,
    corpus: impl Fn(Grid1D) -> Vec<RealField>,
    kind: AuditKind,
) -> Result<AuditReport> {
    let coarse = inequality_audit(&corpus(grid), kind)?;
    let fine_grid = Grid1D::new(grid.half_width(), 2 * grid.n_points())?;
    let fine = inequality_audit(&corpus(fine_grid), kind)?;
    let ratio = fine.fitted_constant / coarse.fitted_constant;
    Ok(AuditReport {
        refinement_ratio: Some(ratio),
        stable: Some((ratio - 1.0).abs() <= REFINEMENT_BAND),
        passed: coarse.passed && fine.passed,
        ..coarse
    })
}
