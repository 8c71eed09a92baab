//! Converter control: active/reactive power loops, voltage-magnitude
//! integrator with active damping, adaptive virtual impedance, and the three
//! fast internal-voltage paths (q-axis voltage feedforward, voltage-scaled
//! power reference, current-droop power reference).
//!
//! All control states advance by pure sample-period updates; one instance is
//! owned by one simulation run.

use crate::filter::{LowPass, Washout};
use crate::ivs_switch::IvsMode;
use crate::network::{DqPhasor, NetworkSolution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All controller gains, thresholds and limits, per-unit unless noted.
/// Defaults are the benchmark values used by the shipped scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// P-f droop coefficient.
    pub d_droop: f64,
    /// Proportional damping gain on the power error (washed out).
    pub k_p: f64,
    /// Inertia constant, seconds.
    pub h: f64,
    /// Q-V droop coefficient.
    pub k_rpc: f64,
    /// Reactive-power measurement low-pass cutoff, p.u. of nominal frequency.
    pub w_q: f64,
    /// Voltage-magnitude integral gain, 1/s.
    pub k_iv: f64,
    /// Active damping resistance.
    pub r_ad: f64,
    /// Washout cutoff for the damping paths, p.u.
    pub w_hpf: f64,
    /// Virtual reactance gain.
    pub k_x: f64,
    /// X/R ratio of the virtual impedance.
    pub n_xr: f64,
    /// Current threshold that activates the virtual impedance.
    pub i_th: f64,
    /// Design current limit.
    pub i_lim: f64,
    /// Current-measurement low-pass cutoff, p.u.
    pub w_lpfx: f64,
    /// Voltage-magnitude and virtual-drop low-pass cutoff, p.u.
    pub w_lpfv: f64,
    /// q-axis voltage feedforward gain.
    pub k_pvq: f64,
    /// Current threshold that activates the power-reference droop.
    pub i_pth: f64,
    /// Power-reference droop coefficient.
    pub n_droop: f64,
    /// Current threshold of the fast/slow mode switch.
    pub i_switch: f64,
    /// Dwell time before returning to slow mode, seconds.
    pub t_1: f64,
    /// Nominal voltage.
    pub v_n: f64,
    /// Nominal angular frequency, rad/s.
    pub w_n: f64,
    /// Internal voltage reference limits.
    pub e_ref_min: f64,
    pub e_ref_max: f64,
    /// Adjusted power reference limits (applied while fast paths act).
    pub p_ref1_min: f64,
    pub p_ref1_max: f64,
    /// Sample period, seconds.
    pub dt: f64,
}

impl Default for ControlParams {
    // the benchmark voltage-loop gain happens to read like 2*pi; it is a
    // plain gain value, not a truncated constant
    #[allow(clippy::approx_constant)]
    fn default() -> Self {
        Self {
            d_droop: 50.0,
            k_p: 0.02,
            h: 10.0,
            k_rpc: 0.1,
            w_q: 1.0,
            k_iv: 6.28,
            r_ad: 0.1,
            w_hpf: 0.1,
            k_x: 1.45,
            n_xr: 5.0,
            i_th: 1.1,
            i_lim: 1.5,
            w_lpfx: 0.2,
            w_lpfv: 0.2,
            k_pvq: 0.34,
            i_pth: 1.1,
            n_droop: 10.0,
            i_switch: 0.94,
            t_1: 0.2,
            v_n: 1.0,
            w_n: 100.0 * std::f64::consts::PI,
            e_ref_min: 0.0,
            e_ref_max: 1.2,
            p_ref1_min: 0.0,
            p_ref1_max: 1.0,
            dt: 1e-4,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid controller parameter {field}: {reason}")]
pub struct ControlParamsError {
    pub field: &'static str,
    pub reason: &'static str,
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl ControlParams {
    pub fn validate(&self) -> Result<(), ControlParamsError> {
        let err = |field, reason| Err(ControlParamsError { field, reason });
        let nonneg = [
            ("d_droop", self.d_droop),
            ("k_p", self.k_p),
            ("k_rpc", self.k_rpc),
            ("w_q", self.w_q),
            ("k_iv", self.k_iv),
            ("r_ad", self.r_ad),
            ("w_hpf", self.w_hpf),
            ("k_x", self.k_x),
            ("i_th", self.i_th),
            ("w_lpfx", self.w_lpfx),
            ("w_lpfv", self.w_lpfv),
            ("k_pvq", self.k_pvq),
            ("i_pth", self.i_pth),
            ("n_droop", self.n_droop),
            ("i_switch", self.i_switch),
            ("i_lim", self.i_lim),
            ("e_ref_min", self.e_ref_min),
            ("p_ref1_min", self.p_ref1_min),
        ];
        for (field, v) in nonneg {
            if !finite_nonneg(v) {
                return err(field, "must be a finite value >= 0");
            }
        }
        let positive = [
            ("d_droop", self.d_droop),
            ("h", self.h),
            ("n_xr", self.n_xr),
            ("t_1", self.t_1),
            ("v_n", self.v_n),
            ("w_n", self.w_n),
            ("dt", self.dt),
        ];
        for (field, v) in positive {
            if !finite_pos(v) {
                return err(field, "must be a finite value > 0");
            }
        }
        if !self.e_ref_max.is_finite() || !self.p_ref1_max.is_finite() {
            return err("e_ref_max", "limits must be finite");
        }
        if self.i_pth >= self.i_lim {
            return err("i_pth", "must be below i_lim");
        }
        if self.i_switch >= self.i_lim {
            return err("i_switch", "must be below i_lim");
        }
        if self.e_ref_min >= self.e_ref_max {
            return err("e_ref_min", "must be below e_ref_max");
        }
        if self.p_ref1_min >= self.p_ref1_max {
            return err("p_ref1_min", "must be below p_ref1_max");
        }
        Ok(())
    }
}

/// Which control scheme a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlVariant {
    /// Baseline slow internal voltage: fast paths never act.
    SlowIvs,
    /// All three fast paths permanently active.
    FastIvs,
    /// Mode-switched fast paths without the current-droop reference.
    AdaptiveNoDroop,
    /// Full mode-switched scheme.
    Adaptive,
}

impl ControlVariant {
    pub const ALL: [ControlVariant; 4] = [
        ControlVariant::SlowIvs,
        ControlVariant::FastIvs,
        ControlVariant::AdaptiveNoDroop,
        ControlVariant::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlVariant::SlowIvs => "slow",
            ControlVariant::FastIvs => "fast",
            ControlVariant::AdaptiveNoDroop => "adaptive-nodroop",
            ControlVariant::Adaptive => "adaptive",
        }
    }

    pub fn parse(name: &str) -> Option<ControlVariant> {
        match name {
            "slow" => Some(ControlVariant::SlowIvs),
            "fast" => Some(ControlVariant::FastIvs),
            "adaptive-nodroop" => Some(ControlVariant::AdaptiveNoDroop),
            "adaptive" => Some(ControlVariant::Adaptive),
            _ => None,
        }
    }

    /// Fast-path activation for the current mode.
    pub fn paths(self, mode: IvsMode) -> FastPaths {
        match self {
            ControlVariant::SlowIvs => FastPaths::NONE,
            ControlVariant::FastIvs => FastPaths::ALL,
            ControlVariant::AdaptiveNoDroop => match mode {
                IvsMode::Fast => FastPaths {
                    hsc: true,
                    v_omag_adjust: true,
                    current_droop: false,
                },
                IvsMode::Slow => FastPaths::NONE,
            },
            ControlVariant::Adaptive => match mode {
                IvsMode::Fast => FastPaths::ALL,
                IvsMode::Slow => FastPaths::NONE,
            },
        }
    }

    /// Mode the run starts in (and is pinned to, for the fixed variants).
    pub fn initial_mode(self) -> IvsMode {
        match self {
            ControlVariant::FastIvs => IvsMode::Fast,
            _ => IvsMode::Slow,
        }
    }
}

/// Enable flags for the three fast internal-voltage paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FastPaths {
    pub hsc: bool,
    pub v_omag_adjust: bool,
    pub current_droop: bool,
}

impl FastPaths {
    pub const NONE: FastPaths = FastPaths {
        hsc: false,
        v_omag_adjust: false,
        current_droop: false,
    };
    pub const ALL: FastPaths = FastPaths {
        hsc: true,
        v_omag_adjust: true,
        current_droop: true,
    };

    pub fn any(self) -> bool {
        self.hsc || self.v_omag_adjust || self.current_droop
    }
}

/// Per-sample measurements taken from the network solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub i_o: DqPhasor,
    pub i_omag: f64,
    pub v_o: DqPhasor,
    pub v_omag: f64,
    pub p_o: f64,
    pub q_o: f64,
}

impl From<&NetworkSolution> for Measurements {
    fn from(sol: &NetworkSolution) -> Self {
        Self {
            i_o: sol.i_o,
            i_omag: sol.i_omag,
            v_o: sol.v_o,
            v_omag: sol.v_o.magnitude(),
            p_o: sol.p_o,
            q_o: sol.q_o,
        }
    }
}

/// q-axis voltage feedforward into the frequency command.
pub fn hsc_feedforward(v_oq: f64, enabled: bool, k_pvq: f64) -> f64 {
    if enabled {
        k_pvq * v_oq
    } else {
        0.0
    }
}

/// Adjusted power reference: voltage-magnitude scaling plus current droop,
/// clamped to the reference limits. With no fast path active the reference
/// passes through untouched.
pub fn fast_ivs_power_ref(
    p_ref: f64,
    v_omag_filtered: f64,
    i_omag_filtered: f64,
    paths: FastPaths,
    params: &ControlParams,
) -> f64 {
    if !paths.any() {
        return p_ref;
    }
    let scaled = if paths.v_omag_adjust {
        p_ref * v_omag_filtered
    } else {
        p_ref
    };
    let droop = if paths.current_droop {
        params.n_droop * (i_omag_filtered - params.i_pth).max(0.0)
    } else {
        0.0
    };
    (scaled - droop).clamp(params.p_ref1_min, params.p_ref1_max)
}

/// Inverter voltage command: voltage reference minus the virtual-impedance
/// drop minus the active-damping drop on the washed-out current.
pub fn compose_inverter_voltage(
    e_ref: f64,
    v_z: DqPhasor,
    i_o_hpf: DqPhasor,
    r_ad: f64,
) -> DqPhasor {
    DqPhasor::new(
        e_ref - v_z.d - r_ad * i_o_hpf.d,
        -v_z.q - r_ad * i_o_hpf.q,
    )
}

/// Filtered measurement set produced each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredSignals {
    pub q_o: f64,
    pub v_omag: f64,
    pub i_omag: f64,
    pub i_o_hpf: DqPhasor,
}

/// Steady-state values used to start a run already settled.
#[derive(Debug, Clone, Copy)]
pub struct SteadyInit {
    pub theta_ref: f64,
    pub e_ref: f64,
    pub delta_omega: f64,
    pub power_err: f64,
    pub q_o: f64,
    pub v_omag: f64,
    pub i_omag: f64,
    pub i_o: DqPhasor,
    pub v_z: DqPhasor,
    pub x_v: f64,
    pub p_ref1: f64,
    pub omega_pu: f64,
}

/// All controller state advanced each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub params: ControlParams,
    theta_ref: f64,
    delta_omega: f64,
    power_err_prev: f64,
    omega_prev_pu: f64,
    damp_washout: Washout,
    q_lpf: LowPass,
    v_lpf: LowPass,
    i_lpf: LowPass,
    vz_d_lpf: LowPass,
    vz_q_lpf: LowPass,
    i_hpf_d: Washout,
    i_hpf_q: Washout,
    e_ref: f64,
    slvm_err_prev: f64,
    x_v: f64,
    r_v: f64,
    p_ref1: f64,
    omega_pu: f64,
}

impl Controller {
    /// Controller at a cold (zero-flow, nominal-voltage) state.
    pub fn new(params: ControlParams) -> Self {
        let w = params.w_n;
        let mut c = Self {
            params,
            theta_ref: 0.0,
            delta_omega: 0.0,
            power_err_prev: 0.0,
            omega_prev_pu: 1.0,
            damp_washout: Washout::new(params.w_hpf * w),
            q_lpf: LowPass::new(params.w_q * w),
            v_lpf: LowPass::new(params.w_lpfv * w),
            i_lpf: LowPass::new(params.w_lpfx * w),
            vz_d_lpf: LowPass::new(params.w_lpfv * w),
            vz_q_lpf: LowPass::new(params.w_lpfv * w),
            i_hpf_d: Washout::new(params.w_hpf * w),
            i_hpf_q: Washout::new(params.w_hpf * w),
            e_ref: params.v_n,
            slvm_err_prev: 0.0,
            x_v: 0.0,
            r_v: 0.0,
            p_ref1: 0.0,
            omega_pu: 1.0,
        };
        c.v_lpf.reset(params.v_n);
        c
    }

    /// Controller settled at a solved operating point.
    pub fn from_steady(params: ControlParams, init: &SteadyInit) -> Self {
        let mut c = Self::new(params);
        c.theta_ref = init.theta_ref;
        c.delta_omega = init.delta_omega;
        c.power_err_prev = init.power_err;
        c.omega_prev_pu = init.omega_pu;
        c.omega_pu = init.omega_pu;
        c.damp_washout.reset(params.k_p * init.power_err);
        c.q_lpf.reset(init.q_o);
        c.v_lpf.reset(init.v_omag);
        c.i_lpf.reset(init.i_omag);
        c.vz_d_lpf.reset(init.v_z.d);
        c.vz_q_lpf.reset(init.v_z.q);
        c.i_hpf_d.reset(init.i_o.d);
        c.i_hpf_q.reset(init.i_o.q);
        c.e_ref = init.e_ref;
        c.slvm_err_prev = 0.0;
        c.x_v = init.x_v;
        c.r_v = init.x_v / params.n_xr;
        c.p_ref1 = init.p_ref1;
        c
    }

    pub fn theta_ref(&self) -> f64 {
        self.theta_ref
    }

    pub fn omega_pu(&self) -> f64 {
        self.omega_pu
    }

    pub fn e_ref(&self) -> f64 {
        self.e_ref
    }

    pub fn x_v(&self) -> f64 {
        self.x_v
    }

    pub fn r_v(&self) -> f64 {
        self.r_v
    }

    pub fn p_ref1(&self) -> f64 {
        self.p_ref1
    }

    pub fn is_finite(&self) -> bool {
        self.theta_ref.is_finite()
            && self.delta_omega.is_finite()
            && self.e_ref.is_finite()
            && self.x_v.is_finite()
            && self.omega_pu.is_finite()
    }

    /// Advance the measurement filters one sample.
    pub fn step_filters(&mut self, meas: &Measurements, dt: f64) -> FilteredSignals {
        FilteredSignals {
            q_o: self.q_lpf.update(meas.q_o, dt),
            v_omag: self.v_lpf.update(meas.v_omag, dt),
            i_omag: self.i_lpf.update(meas.i_omag, dt),
            i_o_hpf: DqPhasor::new(
                self.i_hpf_d.update(meas.i_o.d, dt),
                self.i_hpf_q.update(meas.i_o.q, dt),
            ),
        }
    }

    /// Active power control. Swing update
    /// `2H d(dw)/dt = (p_ref1 - p_o) - D dw`, washed-out proportional
    /// damping, and the q-axis feedforward as a direct frequency offset.
    /// Returns the advanced angle reference and the per-unit frequency.
    pub fn step_apc(
        &mut self,
        p_ref1: f64,
        p_o: f64,
        d_omega_q: f64,
        dt: f64,
    ) -> (f64, f64) {
        let p = &self.params;
        let power_err = p_ref1 - p_o;

        let b = p.d_droop * dt / (4.0 * p.h);
        self.delta_omega = ((1.0 - b) * self.delta_omega
            + dt / (4.0 * p.h) * (power_err + self.power_err_prev))
            / (1.0 + b);
        self.power_err_prev = power_err;

        let d_omega_damp = self.damp_washout.update(p.k_p * power_err, dt);

        self.omega_pu = 1.0 + self.delta_omega + d_omega_damp + d_omega_q;
        self.theta_ref += 0.5 * (self.omega_pu + self.omega_prev_pu) * p.w_n * dt;
        self.omega_prev_pu = self.omega_pu;
        (self.theta_ref, self.omega_pu)
    }

    /// Reactive power control: Q-V droop around the nominal voltage.
    pub fn step_rpc(&self, q_o_filtered: f64) -> f64 {
        self.params.v_n - self.params.k_rpc * q_o_filtered
    }

    /// Voltage-magnitude integrator with clamping anti-windup.
    pub fn step_slvm(&mut self, v_ref: f64, v_omag_filtered: f64, dt: f64) -> f64 {
        let err = v_ref - v_omag_filtered;
        self.e_ref += 0.5 * self.params.k_iv * dt * (err + self.slvm_err_prev);
        self.e_ref = self.e_ref.clamp(self.params.e_ref_min, self.params.e_ref_max);
        self.slvm_err_prev = err;
        self.e_ref
    }

    /// Adaptive virtual impedance: reactance proportional to the filtered
    /// current excess over the threshold, fixed X/R ratio, and the fictitious
    /// drop low-pass filtered per axis.
    pub fn step_adaptive_vi(
        &mut self,
        i_omag_filtered: f64,
        i_o: DqPhasor,
        dt: f64,
    ) -> DqPhasor {
        let p = &self.params;
        self.x_v = p.k_x * (i_omag_filtered - p.i_th).max(0.0);
        self.r_v = self.x_v / p.n_xr;
        let raw = DqPhasor::new(
            i_o.d * self.r_v - i_o.q * self.x_v,
            i_o.q * self.r_v + i_o.d * self.x_v,
        );
        DqPhasor::new(
            self.vz_d_lpf.update(raw.d, dt),
            self.vz_q_lpf.update(raw.q, dt),
        )
    }

    /// One full control sample: filters, fast-path references, APC, RPC,
    /// voltage integrator, virtual impedance, and the composed inverter
    /// voltage to apply on the next sample.
    pub fn step(&mut self, meas: &Measurements, p_ref: f64, paths: FastPaths, dt: f64) -> DqPhasor {
        let f = self.step_filters(meas, dt);

        let d_omega_q = hsc_feedforward(meas.v_o.q, paths.hsc, self.params.k_pvq);
        let p_ref1 = fast_ivs_power_ref(p_ref, f.v_omag, f.i_omag, paths, &self.params);
        self.p_ref1 = p_ref1;

        self.step_apc(p_ref1, meas.p_o, d_omega_q, dt);
        let v_ref = self.step_rpc(f.q_o);
        let e_ref = self.step_slvm(v_ref, f.v_omag, dt);
        let v_z = self.step_adaptive_vi(f.i_omag, meas.i_o, dt);

        compose_inverter_voltage(e_ref, v_z, f.i_o_hpf, self.params.r_ad)
    }
}
