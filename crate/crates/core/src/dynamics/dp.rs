//! Link to the Degasperis–Procesi equation.
//!
//! If `u` solves the equation then `v = 2(2 - d)u` solves
//!
//! ```text
//! (1 - d^2) v_t = 4 v v_x - 3 v_x v_xx - v v_xxx
//! ```
//!
//! The opposite direction does not hold. [`dp_residual`] measures the defect
//! of this identity along a sequence of snapshots.

use crate::error::{config, Result};
use crate::grid::{self, RealField};

/// `v = 2(2u - u_x)`.
pub fn dp_transform(u: &RealField) -> Result<RealField> {
    let ux = grid::derivative(u, 1)?;
    u.zip_with(&ux, |a, b| 2.0 * (2.0 * a - b))
}

/// `4 v v_x - 3 v_x v_xx - v v_xxx` with spectral derivatives.
pub fn dp_operator(v: &RealField) -> Result<RealField> {
    let vx = grid::derivative(v, 1)?;
    let vxx = grid::derivative(v, 2)?;
    let vxxx = grid::derivative(v, 3)?;
    let s = v.samples();
    let (a, b, c) = (vx.samples(), vxx.samples(), vxxx.samples());
    let out = (0..s.len()).map(|i| 4.0 * s[i] * a[i] - 3.0 * a[i] * b[i] - s[i] * c[i]).collect();
    RealField::new(*v.grid(), out)
}

/// Largest `L^2` defect of the transformed identity over the interior snapshots.
///
/// Snapshots hold `(t, u)` with strictly increasing `t`. The time derivative of
/// `v` at an interior snapshot is the three-point centered difference on the
/// possibly nonuniform neighbours.
pub fn dp_residual(snapshots: &[(f64, RealField)]) -> Result<f64> {
    if snapshots.len() < 3 {
        return config(format!("residual needs at least 3 snapshots, got {}", snapshots.len()));
    }
    if snapshots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return config("snapshot times must be strictly increasing");
    }
    let vs = snapshots.iter().map(|(_, u)| dp_transform(u)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0_f64;
    for i in 1..vs.len() - 1 {
        let h1 = snapshots[i].0 - snapshots[i - 1].0;
        let h2 = snapshots[i + 1].0 - snapshots[i].0;
        let (a, b, c) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        let vt = vs[i - 1].zip_with(&vs[i], |p, q| a * p + b * q)?.zip_with(&vs[i + 1], |s, r| s + c * r)?;
        let lhs = grid::helmholtz_forward(&vt);
        let defect = lhs.sub(&dp_operator(&vs[i])?)?;
        worst = worst.max(grid::l2_norm(&defect));
    }
    Ok(worst)
}
