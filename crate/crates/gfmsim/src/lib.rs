//! Dynamic-phasor simulator for a grid-forming voltage-source converter
//! with adaptive fast/slow internal-voltage control.
//!
//! The library is split along the control structure: [`network`] solves the
//! quasi-static branch each sample, [`controller`] advances the power and
//! voltage loops plus the adaptive virtual impedance, [`ivs_switch`] holds
//! the fast/slow mode state machine, [`scenario`] scripts grid disturbances,
//! [`simulator`] runs the closed loop and scores the result, and
//! [`analysis`] carries the closed-form design relations. The [`cli`]
//! module backs the `gfmsim` binary.

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod filter;
pub mod ivs_switch;
pub mod network;
pub mod scenario;
pub mod simulator;
mod svg;

pub use controller::{ControlParams, ControlVariant, Controller};
pub use ivs_switch::{IvsMode, IvsSwitch};
pub use network::{DqPhasor, GridState, NetworkSolution, PlantParams};
pub use scenario::{DisturbanceEvent, DisturbanceKind, Scenario};
pub use simulator::{
    capability_metrics, detect_pole_slips, run, CapabilityMetrics, SimReport, SimTrace, Verdict,
};
