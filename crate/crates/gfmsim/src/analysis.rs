//! Closed-form design relations: power-angle and current-angle curves,
//! equilibrium points, the worst-case switching-threshold minimization, and
//! the grid-strength diagnostics used to size the fast voltage paths.

use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Operating point of the lossless two-source branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub e_ref: f64,
    pub v_g: f64,
    pub x_tot: f64,
    pub p_ref: f64,
}

/// Stable/unstable equilibrium pair of the power-angle relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPair {
    pub delta_s: f64,
    pub delta_u: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no equilibrium: p_ref * x_tot / (e_ref * v_g) = {ratio} exceeds 1")]
    NoEquilibrium { ratio: f64 },
}

/// Transferred active power  e v sin(delta) / x_tot.
pub fn p_of_delta(op: &OperatingPoint, delta: f64) -> f64 {
    op.e_ref * op.v_g * delta.sin() / op.x_tot
}

/// Stable and unstable equilibrium angles for the reference power, or an
/// error when the power-angle curve cannot reach the reference.
pub fn equilibria(op: &OperatingPoint) -> Result<EquilibriumPair, AnalysisError> {
    let ratio = op.p_ref * op.x_tot / (op.e_ref * op.v_g);
    if ratio > 1.0 {
        return Err(AnalysisError::NoEquilibrium { ratio });
    }
    let delta_s = ratio.asin();
    Ok(EquilibriumPair {
        delta_s,
        delta_u: PI - delta_s,
    })
}

/// Current magnitude of the lossless branch at power angle `delta`:
/// sqrt(e^2 + v^2 - 2 e v cos delta) / (x_f + x_g).
pub fn i_omag_of_delta(e_ref: f64, v_g: f64, x_f: f64, x_g: f64, delta: f64) -> f64 {
    (e_ref * e_ref + v_g * v_g - 2.0 * e_ref * v_g * delta.cos()).sqrt() / (x_f + x_g)
}

/// The current-angle relation evaluated at the switching design angle.
pub fn threshold_current(e_ref: f64, v_g: f64, x_f: f64, x_g: f64, delta_th: f64) -> f64 {
    i_omag_of_delta(e_ref, v_g, x_f, x_g, delta_th)
}

/// Grid voltage that minimizes the threshold current over v_g:
/// e cos(delta_th) below 90 degrees, zero beyond (voltage cannot go
/// negative).
pub fn worst_case_vg(e_ref: f64, delta_th: f64) -> f64 {
    if delta_th < FRAC_PI_2 {
        e_ref * delta_th.cos()
    } else {
        0.0
    }
}

/// Minimum threshold current over all grid voltages and grid reactances up
/// to `x_g_max`. The sub-90-degree branch is evaluated as e sin(delta_th)
/// rather than e sqrt(1 - cos^2) to avoid cancellation near 90 degrees.
pub fn i_th_min(e_ref: f64, x_f: f64, x_g_max: f64, delta_th: f64) -> f64 {
    if delta_th < FRAC_PI_2 {
        e_ref * delta_th.sin() / (x_f + x_g_max)
    } else {
        e_ref / (x_f + x_g_max)
    }
}

/// Grid-strength factor a = x_g / x_tot in (0, 1]: near 0 for a stiff grid,
/// near 1 for an ultra-weak grid.
pub fn grid_strength_factor(x_g: f64, x_tot: f64) -> f64 {
    debug_assert!(x_g > 0.0 && x_g <= x_tot);
    x_g / x_tot
}

/// q-axis PCC voltage of the lossless branch: -(1 - a) v sin(delta).
pub fn v_oq_of_delta(a: f64, v_g: f64, delta: f64) -> f64 {
    -(1.0 - a) * v_g * delta.sin()
}

/// PCC voltage magnitude of the lossless branch.
pub fn v_omag_of_delta(a: f64, e_ref: f64, v_g: f64, delta: f64) -> f64 {
    ((1.0 - a) * (1.0 - a) * v_g * v_g
        + a * a * e_ref * e_ref
        + 2.0 * a * (1.0 - a) * e_ref * v_g * delta.cos())
    .sqrt()
}

/// Which closed-form curve to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Power vs angle.
    PDelta,
    /// Current magnitude vs angle.
    IDelta,
    /// Minimum switching threshold vs design angle.
    IThMin,
}

/// Parameters shared by the curve tabulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub e_ref: f64,
    pub v_g: f64,
    pub x_f: f64,
    pub x_g: f64,
    pub x_g_max: f64,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self {
            e_ref: 1.1,
            v_g: 1.0,
            x_f: 0.1,
            x_g: 0.1,
            x_g_max: 1.0,
        }
    }
}

/// Tabulate a curve over a grid of angles in degrees; returns
/// (angle_deg, value) pairs.
pub fn curve_table(kind: CurveKind, params: &CurveParams, grid_deg: &[f64]) -> Vec<(f64, f64)> {
    grid_deg
        .iter()
        .map(|&deg| {
            let delta = deg.to_radians();
            let y = match kind {
                CurveKind::PDelta => {
                    params.e_ref * params.v_g * delta.sin() / (params.x_f + params.x_g)
                }
                CurveKind::IDelta => {
                    i_omag_of_delta(params.e_ref, params.v_g, params.x_f, params.x_g, delta)
                }
                CurveKind::IThMin => i_th_min(params.e_ref, params.x_f, params.x_g_max, delta),
            };
            (deg, y)
        })
        .collect()
}
