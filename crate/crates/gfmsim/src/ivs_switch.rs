//! Fast/slow mode switch: trip to fast on a current threshold, return to
//! slow only after the current has stayed below the hysteresis band for a
//! full dwell interval.

use crate::controller::ControlParams;
use serde::{Deserialize, Serialize};

/// Hysteresis factor on the return threshold: return requires
/// `i_omag <= RETURN_FRACTION * i_switch`.
pub const RETURN_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IvsMode {
    Slow,
    Fast,
}

impl IvsMode {
    pub fn as_flag(self) -> u8 {
        match self {
            IvsMode::Slow => 0,
            IvsMode::Fast => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvsSwitch {
    mode: IvsMode,
    dwell: f64,
}

impl IvsSwitch {
    pub fn new(initial: IvsMode) -> Self {
        Self {
            mode: initial,
            dwell: 0.0,
        }
    }

    pub fn mode(&self) -> IvsMode {
        self.mode
    }

    /// Accumulated time the return condition has held, seconds.
    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    /// Advance one sample on the unfiltered current magnitude.
    ///
    /// Slow -> Fast fires on the same sample the threshold is exceeded.
    /// Fast -> Slow fires once `i_omag <= RETURN_FRACTION * i_switch` has
    /// held for an accumulated `t_1`; any violating sample restarts the
    /// dwell timer.
    pub fn update(&mut self, i_omag: f64, dt: f64, params: &ControlParams) -> IvsMode {
        match self.mode {
            IvsMode::Slow => {
                self.dwell = 0.0;
                if i_omag > params.i_switch {
                    self.mode = IvsMode::Fast;
                }
            }
            IvsMode::Fast => {
                if i_omag <= RETURN_FRACTION * params.i_switch {
                    self.dwell += dt;
                    // slack absorbs accumulation rounding over t_1/dt samples
                    if self.dwell >= params.t_1 - 1e-12 {
                        self.mode = IvsMode::Slow;
                        self.dwell = 0.0;
                    }
                } else {
                    self.dwell = 0.0;
                }
            }
        }
        self.mode
    }
}
