//! Declarative grid-disturbance scenarios: a plant description, an initial
//! operating point, and timed events (phase jumps, frequency ramps, voltage
//! dips) evaluated in closed form at any instant.

use crate::controller::{ControlParams, ControlVariant};
use crate::network::{GridState, PlantParams};
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceKind {
    /// Instantaneous grid-angle step, degrees. Permanent.
    PhaseJump { delta_theta_deg: f64 },
    /// Linear frequency ramp at `rate_hz_per_s` for `duration` seconds;
    /// the frequency then holds at the reached value.
    Rocof { rate_hz_per_s: f64, duration: f64 },
    /// Grid voltage forced to `level` for `duration` seconds, then restored.
    VoltageDip { level: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceEvent {
    /// Event start, seconds from the run origin.
    pub at: f64,
    pub kind: DisturbanceKind,
}

/// Controller parameter overrides a scenario file may pin so that a recorded
/// experiment is reproducible independent of library defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlOverrides {
    pub d_droop: Option<f64>,
    pub k_p: Option<f64>,
    pub h: Option<f64>,
    pub k_rpc: Option<f64>,
    pub w_q: Option<f64>,
    pub k_iv: Option<f64>,
    pub r_ad: Option<f64>,
    pub w_hpf: Option<f64>,
    pub k_x: Option<f64>,
    pub n_xr: Option<f64>,
    pub i_th: Option<f64>,
    pub i_lim: Option<f64>,
    pub w_lpfx: Option<f64>,
    pub w_lpfv: Option<f64>,
    pub k_pvq: Option<f64>,
    pub i_pth: Option<f64>,
    pub n_droop: Option<f64>,
    pub i_switch: Option<f64>,
    pub t_1: Option<f64>,
    pub v_n: Option<f64>,
    pub e_ref_min: Option<f64>,
    pub e_ref_max: Option<f64>,
    pub p_ref1_min: Option<f64>,
    pub p_ref1_max: Option<f64>,
}

impl ControlOverrides {
    pub fn apply(&self, base: &mut ControlParams) {
        macro_rules! set {
            ($($f:ident),*) => {
                $(if let Some(v) = self.$f { base.$f = v; })*
            };
        }
        set!(
            d_droop, k_p, h, k_rpc, w_q, k_iv, r_ad, w_hpf, k_x, n_xr, i_th, i_lim, w_lpfx,
            w_lpfv, k_pvq, i_pth, n_droop, i_switch, t_1, v_n, e_ref_min, e_ref_max, p_ref1_min,
            p_ref1_max
        );
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Validated scenario: immutable after parse, shareable across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: PlantParams,
    pub p_m: f64,
    pub v_g0: f64,
    pub events: Vec<DisturbanceEvent>,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub variant: Option<ControlVariant>,
    pub f_hz: f64,
    pub controller: ControlOverrides,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn valid_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn valid_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// raw file layout
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    plant: PlantSection,
    operating_point: OperatingPointSection,
    #[serde(default)]
    events: Vec<EventSection>,
    sim: SimSection,
    #[serde(default)]
    controller: ControlOverrides,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantSection {
    scr: Option<f64>,
    x_g: Option<f64>,
    #[serde(default = "default_x_f")]
    x_f: f64,
    #[serde(default)]
    r_f: f64,
    #[serde(default)]
    r_g: f64,
    #[serde(default = "default_v_g0")]
    v_g0: f64,
}

fn default_x_f() -> f64 {
    0.1
}

fn default_v_g0() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatingPointSection {
    p_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventSection {
    at: f64,
    kind: String,
    delta_theta_deg: Option<f64>,
    rate_hz_per_s: Option<f64>,
    duration: Option<f64>,
    level: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    t_end: f64,
    dt: Option<f64>,
    variant: Option<String>,
    #[serde(default = "default_f_hz")]
    f_hz: f64,
}

fn default_f_hz() -> f64 {
    50.0
}

// ---------------------------------------------------------------------------

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: ScenarioFile = toml::from_str(text)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let plant = match (raw.plant.scr, raw.plant.x_g) {
            (Some(scr), None) => {
                if !valid_pos(scr) {
                    return Err(invalid("plant.scr", "must be > 0"));
                }
                PlantParams {
                    x_f: raw.plant.x_f,
                    x_g: 1.0 / scr,
                    r_f: raw.plant.r_f,
                    r_g: raw.plant.r_g,
                }
            }
            (None, Some(x_g)) => PlantParams {
                x_f: raw.plant.x_f,
                x_g,
                r_f: raw.plant.r_f,
                r_g: raw.plant.r_g,
            },
            (Some(_), Some(_)) => {
                return Err(invalid("plant", "give either scr or x_g, not both"))
            }
            (None, None) => return Err(invalid("plant", "either scr or x_g is required")),
        };
        plant
            .validate()
            .map_err(|e| invalid("plant", e.to_string()))?;

        if !(0.0..=1.0).contains(&raw.operating_point.p_m) {
            return Err(invalid("operating_point.p_m", "must be within [0, 1]"));
        }
        if !valid_nonneg(raw.plant.v_g0) {
            return Err(invalid("plant.v_g0", "must be >= 0"));
        }
        if !valid_pos(raw.sim.t_end) {
            return Err(invalid("sim.t_end", "must be > 0"));
        }
        if let Some(dt) = raw.sim.dt {
            if !valid_pos(dt) {
                return Err(invalid("sim.dt", "must be > 0"));
            }
        }
        if !valid_pos(raw.sim.f_hz) {
            return Err(invalid("sim.f_hz", "must be > 0"));
        }
        let variant = match &raw.sim.variant {
            None => None,
            Some(name) => Some(
                ControlVariant::parse(name)
                    .ok_or_else(|| invalid("sim.variant", format!("unknown variant `{name}`")))?,
            ),
        };

        let mut events = Vec::with_capacity(raw.events.len());
        for (idx, ev) in raw.events.iter().enumerate() {
            events.push(parse_event(idx, ev)?);
        }
        for pair in events.windows(2) {
            if pair[1].at < pair[0].at {
                return Err(invalid("events", "must be sorted by time"));
            }
        }
        let dips: Vec<(f64, f64)> = events
            .iter()
            .filter_map(|e| match e.kind {
                DisturbanceKind::VoltageDip { duration, .. } => Some((e.at, e.at + duration)),
                _ => None,
            })
            .collect();
        for pair in dips.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(invalid("events", "voltage dips must not overlap"));
            }
        }

        Ok(Scenario {
            plant,
            p_m: raw.operating_point.p_m,
            v_g0: raw.plant.v_g0,
            events,
            t_end: raw.sim.t_end,
            dt: raw.sim.dt,
            variant,
            f_hz: raw.sim.f_hz,
            controller: raw.controller,
        })
    }

    /// Nominal angular frequency in rad/s.
    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_hz
    }

    /// Grid phasor at time `t`. Valid for any `t <= t_end`; negative times
    /// precede every event and return the undisturbed grid.
    pub fn grid_state_at(&self, t: f64) -> GridState {
        let w_base = self.omega_base();
        let mut freq_off_hz = 0.0;
        let mut theta_extra = 0.0;
        let mut v_g = self.v_g0;

        for ev in &self.events {
            if t < ev.at {
                continue;
            }
            let dt_ev = t - ev.at;
            match ev.kind {
                DisturbanceKind::PhaseJump { delta_theta_deg } => {
                    theta_extra += delta_theta_deg.to_radians();
                }
                DisturbanceKind::Rocof {
                    rate_hz_per_s,
                    duration,
                } => {
                    let ramp_t = dt_ev.min(duration);
                    freq_off_hz += rate_hz_per_s * ramp_t;
                    // integral of the frequency offset (Hz * s)
                    let int_hz_s = if dt_ev <= duration {
                        0.5 * rate_hz_per_s * dt_ev * dt_ev
                    } else {
                        rate_hz_per_s * duration * (dt_ev - 0.5 * duration)
                    };
                    theta_extra += 2.0 * std::f64::consts::PI * int_hz_s;
                }
                DisturbanceKind::VoltageDip { level, duration } => {
                    // end compared in absolute time so t = at + duration
                    // restores exactly
                    if t < ev.at + duration {
                        v_g = level;
                    }
                }
            }
        }

        GridState {
            v_g,
            theta_g: w_base * t + theta_extra,
            omega_g: 1.0 + freq_off_hz / self.f_hz,
        }
    }

    /// First event time, if any.
    pub fn first_event_at(&self) -> Option<f64> {
        self.events.first().map(|e| e.at)
    }

    /// Ramp window (start, end) of the first frequency-ramp event.
    pub fn first_rocof_window(&self) -> Option<(f64, f64)> {
        self.events.iter().find_map(|e| match e.kind {
            DisturbanceKind::Rocof { duration, .. } => Some((e.at, e.at + duration)),
            _ => None,
        })
    }
}

fn parse_event(idx: usize, ev: &EventSection) -> Result<DisturbanceEvent, ScenarioError> {
    let field = |name: &str| format!("events[{idx}].{name}");
    if !valid_nonneg(ev.at) {
        return Err(invalid(&field("at"), "must be >= 0"));
    }
    let reject = |name: &str, present: bool| {
        if present {
            Err(invalid(
                &field(name),
                format!("not a field of kind `{}`", ev.kind),
            ))
        } else {
            Ok(())
        }
    };
    let kind = match ev.kind.as_str() {
        "phase_jump" => {
            reject("rate_hz_per_s", ev.rate_hz_per_s.is_some())?;
            reject("duration", ev.duration.is_some())?;
            reject("level", ev.level.is_some())?;
            let delta_theta_deg = ev
                .delta_theta_deg
                .ok_or_else(|| invalid(&field("delta_theta_deg"), "required for phase_jump"))?;
            DisturbanceKind::PhaseJump { delta_theta_deg }
        }
        "rocof" => {
            reject("delta_theta_deg", ev.delta_theta_deg.is_some())?;
            reject("level", ev.level.is_some())?;
            let rate_hz_per_s = ev
                .rate_hz_per_s
                .ok_or_else(|| invalid(&field("rate_hz_per_s"), "required for rocof"))?;
            let duration = ev
                .duration
                .ok_or_else(|| invalid(&field("duration"), "required for rocof"))?;
            if !valid_pos(duration) {
                return Err(invalid(&field("duration"), "must be > 0"));
            }
            DisturbanceKind::Rocof {
                rate_hz_per_s,
                duration,
            }
        }
        "voltage_dip" => {
            reject("delta_theta_deg", ev.delta_theta_deg.is_some())?;
            reject("rate_hz_per_s", ev.rate_hz_per_s.is_some())?;
            let level = ev
                .level
                .ok_or_else(|| invalid(&field("level"), "required for voltage_dip"))?;
            let duration = ev
                .duration
                .ok_or_else(|| invalid(&field("duration"), "required for voltage_dip"))?;
            if !valid_nonneg(level) {
                return Err(invalid(&field("level"), "must be >= 0"));
            }
            if !valid_pos(duration) {
                return Err(invalid(&field("duration"), "must be > 0"));
            }
            DisturbanceKind::VoltageDip { level, duration }
        }
        other => {
            return Err(invalid(
                &field("kind"),
                format!("unknown kind `{other}` (phase_jump, rocof, voltage_dip)"),
            ))
        }
    };
    Ok(DisturbanceEvent { at: ev.at, kind })
}
