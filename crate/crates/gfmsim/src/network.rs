//! Quasi-static phasor solution of the converter-filter-grid branch.
//!
//! The converter is a controlled voltage source behind the filter impedance,
//! the grid an ideal source behind the grid impedance, and the filter
//! capacitor is open within the modeled bandwidth. All quantities are
//! per-unit in the converter dq frame (d-axis on the internal voltage
//! reference angle).

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Two-axis value in the converter's rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqPhasor {
    pub d: f64,
    pub q: f64,
}

impl DqPhasor {
    pub const ZERO: DqPhasor = DqPhasor { d: 0.0, q: 0.0 };

    pub fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn magnitude(self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn is_finite(self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }

    /// Complex division treating (d, q) as d + jq.
    pub fn div_complex(self, den: DqPhasor) -> DqPhasor {
        let norm = den.d * den.d + den.q * den.q;
        DqPhasor {
            d: (self.d * den.d + self.q * den.q) / norm,
            q: (self.q * den.d - self.d * den.q) / norm,
        }
    }

    /// Complex product treating (d, q) as d + jq.
    pub fn mul_complex(self, rhs: DqPhasor) -> DqPhasor {
        DqPhasor {
            d: self.d * rhs.d - self.q * rhs.q,
            q: self.d * rhs.q + self.q * rhs.d,
        }
    }
}

impl Add for DqPhasor {
    type Output = DqPhasor;
    fn add(self, rhs: DqPhasor) -> DqPhasor {
        DqPhasor::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl Sub for DqPhasor {
    type Output = DqPhasor;
    fn sub(self, rhs: DqPhasor) -> DqPhasor {
        DqPhasor::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl Mul<f64> for DqPhasor {
    type Output = DqPhasor;
    fn mul(self, rhs: f64) -> DqPhasor {
        DqPhasor::new(self.d * rhs, self.q * rhs)
    }
}

impl Neg for DqPhasor {
    type Output = DqPhasor;
    fn neg(self) -> DqPhasor {
        DqPhasor::new(-self.d, -self.q)
    }
}

/// Fixed series impedances of the filter and the grid, per-unit at nominal
/// frequency. Series resistances default to zero; the adaptive virtual
/// resistance is a controller quantity and never enters here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub x_f: f64,
    pub x_g: f64,
    pub r_f: f64,
    pub r_g: f64,
}

impl PlantParams {
    pub fn new(x_f: f64, x_g: f64) -> Self {
        Self {
            x_f,
            x_g,
            r_f: 0.0,
            r_g: 0.0,
        }
    }

    /// Grid reactance from a short-circuit ratio: x_g = 1/scr.
    pub fn from_scr(scr: f64, x_f: f64) -> Self {
        Self::new(x_f, 1.0 / scr)
    }

    pub fn x_tot(&self) -> f64 {
        self.x_f + self.x_g
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.x_f.is_finite() && self.x_f > 0.0) {
            return Err(NetworkError::InvalidPlant {
                field: "x_f",
                reason: "must be > 0",
            });
        }
        if !(self.x_g.is_finite() && self.x_g > 0.0) {
            return Err(NetworkError::InvalidPlant {
                field: "x_g",
                reason: "must be > 0",
            });
        }
        if self.r_f < 0.0 || !self.r_f.is_finite() {
            return Err(NetworkError::InvalidPlant {
                field: "r_f",
                reason: "must be >= 0",
            });
        }
        if self.r_g < 0.0 || !self.r_g.is_finite() {
            return Err(NetworkError::InvalidPlant {
                field: "r_g",
                reason: "must be >= 0",
            });
        }
        Ok(())
    }
}

/// Grid source phasor: magnitude, continuous unwrapped angle and per-unit
/// angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub v_g: f64,
    pub theta_g: f64,
    pub omega_g: f64,
}

/// Output of one branch solution: converter current, PCC voltage and the
/// instantaneous powers measured at the PCC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSolution {
    pub i_o: DqPhasor,
    pub v_o: DqPhasor,
    pub i_omag: f64,
    pub p_o: f64,
    pub q_o: f64,
}

impl NetworkSolution {
    pub fn is_finite(&self) -> bool {
        self.i_o.is_finite()
            && self.v_o.is_finite()
            && self.i_omag.is_finite()
            && self.p_o.is_finite()
            && self.q_o.is_finite()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("degenerate impedance: series resistance and reactance are both zero")]
    DegenerateImpedance,
    #[error("invalid plant parameter {field}: {reason}")]
    InvalidPlant {
        field: &'static str,
        reason: &'static str,
    },
}

/// Grid voltage expressed in the converter frame for a power angle
/// `delta = theta_ref - theta_g`: (v_g cos delta, -v_g sin delta).
pub fn grid_phasor_in_converter_frame(grid: &GridState, delta: f64) -> DqPhasor {
    DqPhasor::new(grid.v_g * delta.cos(), -grid.v_g * delta.sin())
}

/// Solves the series branch for one sample: current through the total
/// impedance, PCC voltage behind the grid impedance, and PCC powers with
/// converter-to-grid flow positive.
pub fn solve_branch(
    v_inv: DqPhasor,
    grid: &GridState,
    delta: f64,
    plant: &PlantParams,
) -> Result<NetworkSolution, NetworkError> {
    let r_tot = plant.r_f + plant.r_g;
    let x_tot = plant.x_f + plant.x_g;
    if r_tot == 0.0 && x_tot == 0.0 {
        return Err(NetworkError::DegenerateImpedance);
    }

    let v_g_dq = grid_phasor_in_converter_frame(grid, delta);
    let i_o = (v_inv - v_g_dq).div_complex(DqPhasor::new(r_tot, x_tot));
    let v_o = v_g_dq + i_o.mul_complex(DqPhasor::new(plant.r_g, plant.x_g));

    Ok(NetworkSolution {
        i_o,
        v_o,
        i_omag: i_o.magnitude(),
        p_o: v_o.d * i_o.d + v_o.q * i_o.q,
        q_o: v_o.q * i_o.d - v_o.d * i_o.q,
    })
}
