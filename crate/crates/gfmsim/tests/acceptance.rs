//! Acceptance suite: one test per recorded criterion, each printing a
//! PASS/FAIL line. The simulation criteria run the shipped scenario files,
//! which pin the tuned controller set they were recorded with.

use gfmsim::analysis::{
    curve_table, i_omag_of_delta, i_th_min, threshold_current, CurveKind, CurveParams,
};
use gfmsim::controller::{ControlParams, ControlVariant};
use gfmsim::ivs_switch::{IvsMode, IvsSwitch, RETURN_FRACTION};
use gfmsim::network::{solve_branch, DqPhasor, GridState, PlantParams};
use gfmsim::scenario::Scenario;
use gfmsim::simulator::{capability_metrics, run, SimTrace, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::from_path(&scenario_path(name)).expect("shipped scenario must parse")
}

fn run_cell(name: &str, variant: ControlVariant) -> (SimTrace, gfmsim::SimReport) {
    let scenario = load(name);
    run(&scenario, variant, &ControlParams::default(), None).expect("run must complete")
}

fn report_line(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_01_threshold_design_value() {
    let v = i_th_min(1.1, 0.1, 1.0, 70f64.to_radians());
    report_line(
        "criterion 1",
        (v - 0.94).abs() <= 0.005,
        &format!("minimum switching threshold = {v:.5} p.u. (target 0.94 ± 0.005)"),
    );
}

#[test]
fn criterion_02_threshold_curve_shape() {
    let grid: Vec<f64> = (0..=360).map(|k| k as f64 * 0.5).collect();
    let table = curve_table(CurveKind::IThMin, &CurveParams::default(), &grid);
    let zero_at_origin = table[0].1 == 0.0;
    let increasing = table[..=180].windows(2).all(|w| w[1].1 > w[0].1);
    let one_at_90 = table[180].1 == 1.0;
    let flat_beyond = table[180..].iter().all(|&(_, y)| y == 1.0);
    report_line(
        "criterion 2",
        zero_at_origin && increasing && one_at_90 && flat_beyond,
        &format!(
            "curve 0 at 0 deg: {zero_at_origin}, strictly increasing to 90 deg: {increasing}, \
             exactly 1.0 at 90 deg: {one_at_90}, flat beyond: {flat_beyond}"
        ),
    );
}

#[test]
fn criterion_03_network_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f7261636c65);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let delta = rng.gen_range(0.0..std::f64::consts::PI);
        let v_g = rng.gen_range(0.0..1.3);
        let x_g = rng.gen_range(0.05..1.2);
        let e_ref = rng.gen_range(0.8..1.2);
        let x_f = 0.1;
        let plant = PlantParams::new(x_f, x_g);
        let grid = GridState {
            v_g,
            theta_g: 0.0,
            omega_g: 1.0,
        };
        let sol = solve_branch(DqPhasor::new(e_ref, 0.0), &grid, delta, &plant).unwrap();

        let a = x_g / (x_f + x_g);
        let p = e_ref * v_g * delta.sin() / (x_f + x_g);
        let i = i_omag_of_delta(e_ref, v_g, x_f, x_g, delta);
        let v_oq = -(1.0 - a) * v_g * delta.sin();
        let v_omag = ((1.0 - a) * (1.0 - a) * v_g * v_g
            + a * a * e_ref * e_ref
            + 2.0 * a * (1.0 - a) * e_ref * v_g * delta.cos())
        .sqrt();

        worst = worst
            .max((sol.p_o - p).abs())
            .max((sol.i_omag - i).abs())
            .max((sol.v_o.q - v_oq).abs())
            .max((sol.v_o.magnitude() - v_omag).abs());
    }
    report_line(
        "criterion 3",
        worst < 1e-9,
        &format!("10,000 random solver-vs-closed-form checks, worst |error| = {worst:.3e} p.u."),
    );
}

#[test]
fn criterion_04_threshold_minimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d696e696d);
    let e_ref = 1.1;
    let x_f = 0.1;
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let v_g = rng.gen_range(0.0..1.3);
        let x_g = rng.gen_range(1e-6..1.0);
        for deg in [30.0_f64, 70.0, 90.0, 120.0] {
            let th = deg.to_radians();
            let margin =
                threshold_current(e_ref, v_g, x_f, x_g, th) - i_th_min(e_ref, x_f, 1.0, th);
            worst = worst.min(margin);
        }
    }
    report_line(
        "criterion 4",
        worst >= -1e-12,
        &format!("lower bound holds over 10,000 samples x 4 angles, worst margin = {worst:.3e}"),
    );
}

#[test]
fn criterion_05_steady_state_droop_power() {
    let mut all = true;
    let mut detail = String::new();
    for variant in [ControlVariant::SlowIvs, ControlVariant::Adaptive] {
        let (_, report) = run_cell("fig14.toml", variant);
        let ok = (report.droop_power_ss - 0.5).abs() <= 0.05;
        all &= ok;
        detail.push_str(&format!(
            "{}: droop_power_ss = {:.4} p.u.; ",
            variant.name(),
            report.droop_power_ss
        ));
    }
    report_line("criterion 5", all, detail.trim_end_matches("; "));
}

#[test]
fn criterion_06_gfm_capability_ordering() {
    // phase jump: the mode-switched scheme must inject more transient power
    // than the permanently fast one and must never arm its fast paths
    let (trace_a, rep_a) = run_cell("fig15.toml", ControlVariant::Adaptive);
    let (_, rep_f) = run_cell("fig15.toml", ControlVariant::FastIvs);
    let jump_order = rep_a.peak_event_power > rep_f.peak_event_power;
    let stayed_slow = trace_a.mode.iter().all(|&m| m == IvsMode::Slow);

    // frequency ramp: same ordering on the post-ramp kinetic power release
    let scenario = load("fig14.toml");
    let mut params = ControlParams::default();
    scenario.controller.apply(&mut params);
    let (tr_a, _) = run_cell("fig14.toml", ControlVariant::Adaptive);
    let (tr_f, _) = run_cell("fig14.toml", ControlVariant::FastIvs);
    let m_a = capability_metrics(&tr_a, &scenario, &params).unwrap();
    let m_f = capability_metrics(&tr_f, &scenario, &params).unwrap();
    let inertia_order = m_a.inertia_power_peak > m_f.inertia_power_peak;

    report_line(
        "criterion 6",
        jump_order && stayed_slow && inertia_order,
        &format!(
            "jump peak {:.4} > {:.4}: {jump_order}; adaptive stayed slow: {stayed_slow}; \
             ramp peak {:.4} > {:.4}: {inertia_order}",
            rep_a.peak_event_power, rep_f.peak_event_power, m_a.inertia_power_peak,
            m_f.inertia_power_peak
        ),
    );
}

#[test]
fn criterion_07_transient_stability_matrix() {
    use ControlVariant::{Adaptive, AdaptiveNoDroop, SlowIvs};
    type Check = fn(Verdict, usize) -> bool;
    let cells: [(&str, ControlVariant, Check, &str); 12] = [
        ("fig16.toml", SlowIvs, |v, _| v == Verdict::Los, "LOS"),
        ("fig16.toml", AdaptiveNoDroop, |v, _| v == Verdict::Stable, "Stable"),
        ("fig16.toml", Adaptive, |v, _| v == Verdict::Stable, "Stable"),
        (
            "fig17.toml",
            SlowIvs,
            |v, s| v == Verdict::ReSyncAfterSlips && s >= 1,
            "ReSyncAfterSlips, slips >= 1",
        ),
        (
            "fig17.toml",
            AdaptiveNoDroop,
            |v, s| v == Verdict::Stable && s == 0,
            "Stable, 0 slips",
        ),
        (
            "fig17.toml",
            Adaptive,
            |v, s| v == Verdict::Stable && s == 0,
            "Stable, 0 slips",
        ),
        ("fig18.toml", SlowIvs, |v, _| v == Verdict::Los, "LOS"),
        ("fig18.toml", AdaptiveNoDroop, |v, _| v == Verdict::Los, "LOS"),
        ("fig18.toml", Adaptive, |v, _| v == Verdict::Stable, "Stable"),
        ("fig19.toml", SlowIvs, |v, _| v == Verdict::Los, "LOS"),
        ("fig19.toml", AdaptiveNoDroop, |_, s| s >= 1, "slips >= 1"),
        (
            "fig19.toml",
            Adaptive,
            |v, s| v == Verdict::Stable && s == 0,
            "Stable, 0 slips",
        ),
    ];
    let mut all = true;
    for (name, variant, pred, want) in cells {
        let (_, report) = run_cell(name, variant);
        let ok = pred(report.verdict, report.pole_slips);
        all &= ok;
        println!(
            "  {name} / {:<17}: verdict {}, pole slips {} (want {want}) — {}",
            variant.name(),
            report.verdict,
            report.pole_slips,
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    report_line("criterion 7", all, "12 pinned matrix cells");
}

#[test]
fn criterion_08_mode_switch_protocol() {
    let params = ControlParams::default();
    let mut all = true;
    let mut detail = String::new();
    for name in ["fig16.toml", "fig17.toml", "fig18.toml", "fig19.toml"] {
        let (trace, _) = run_cell(name, ControlVariant::Adaptive);
        let dt = trace.dt;
        let dwell_samples = (params.t_1 / dt).round() as usize;

        // arming latency: within 10 ms of the first threshold crossing
        let first_over = trace.i_omag.iter().position(|&i| i > params.i_switch);
        let first_fast = trace.mode.iter().position(|&m| m == IvsMode::Fast);
        let latency_ok = match (first_over, first_fast) {
            (Some(o), Some(f)) => trace.t[f] - trace.t[o] <= 0.010 + 1e-9,
            (None, None) => true,
            _ => false,
        };

        // every return must follow a full dwell below the hysteresis band
        let band = RETURN_FRACTION * params.i_switch;
        let mut dwell_ok = true;
        for k in 1..trace.len() {
            if trace.mode[k] == IvsMode::Slow && trace.mode[k - 1] == IvsMode::Fast {
                let lo = (k + 1).checked_sub(dwell_samples);
                dwell_ok &= match lo {
                    Some(lo) => trace.i_omag[lo..=k].iter().all(|&i| i <= band + 1e-12),
                    None => false,
                };
            }
        }

        all &= latency_ok && dwell_ok;
        detail.push_str(&format!(
            "{name}: latency ok {latency_ok}, dwell ok {dwell_ok}; "
        ));
    }
    report_line("criterion 8", all, detail.trim_end_matches("; "));
}

#[test]
fn criterion_09_determinism_and_step_robustness() {
    // bit-identical repeats
    let (a, _) = run_cell("fig16.toml", ControlVariant::Adaptive);
    let (b, _) = run_cell("fig16.toml", ControlVariant::Adaptive);
    let identical = a == b;

    // halving dt moves the angle trace by less than half a degree
    let mut sup_all = 0.0_f64;
    for name in [
        "fig14.toml",
        "fig15.toml",
        "fig16.toml",
        "fig17.toml",
        "fig18.toml",
        "fig19.toml",
    ] {
        let scenario = load(name);
        let (coarse, _) = run(
            &scenario,
            ControlVariant::Adaptive,
            &ControlParams::default(),
            None,
        )
        .unwrap();
        let (fine, _) = run(
            &scenario,
            ControlVariant::Adaptive,
            &ControlParams::default(),
            Some(coarse.dt / 2.0),
        )
        .unwrap();
        let sup = (0..coarse.len())
            .map(|k| (coarse.delta[k] - fine.delta[2 * k]).abs())
            .fold(0.0_f64, f64::max);
        sup_all = sup_all.max(sup);
    }
    let sup_deg = sup_all.to_degrees();
    report_line(
        "criterion 9",
        identical && sup_deg < 0.5,
        &format!("repeat runs identical: {identical}; worst dt-halving sup-norm = {sup_deg:.4} deg"),
    );
}

#[test]
fn criterion_10_switch_property_suite() {
    let params = ControlParams::default();
    let dt = params.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(0x737769746368);
    let n_samples = 6000;

    let fast_set = |trace: &[f64]| -> Vec<bool> {
        let mut sw = IvsSwitch::new(IvsMode::Slow);
        trace
            .iter()
            .map(|&i| sw.update(i, dt, &params) == IvsMode::Fast)
            .collect()
    };

    let mut all = true;
    for case in 0..1000 {
        // piecewise-constant random current trace with occasional spikes
        let mut trace: Vec<f64> = Vec::with_capacity(n_samples);
        let mut level: f64 = rng.gen_range(0.0..1.3);
        for _ in 0..n_samples {
            if rng.gen_bool(0.002) {
                level = rng.gen_range(0.0..1.5);
            }
            trace.push((level + rng.gen_range(-0.02..0.02_f64)).max(0.0));
        }

        let base = fast_set(&trace);

        // no chattering: every fast period lasts at least t_1
        let dwell_samples = (params.t_1 / dt).round() as usize;
        let mut k = 0;
        while k < base.len() {
            if base[k] && (k == 0 || !base[k - 1]) {
                let mut end = k;
                while end < base.len() && base[end] {
                    end += 1;
                }
                if end < base.len() && end - k < dwell_samples {
                    all = false;
                    eprintln!("case {case}: fast period of {} samples", end - k);
                }
                k = end;
            } else {
                k += 1;
            }
        }

        // monotone trigger: raising one sample can only enlarge the fast set
        let mut raised = trace.clone();
        let idx = rng.gen_range(0..n_samples);
        raised[idx] += rng.gen_range(0.0..0.5);
        let more = fast_set(&raised);
        if base
            .iter()
            .zip(&more)
            .any(|(&was_fast, &now_fast)| was_fast && !now_fast)
        {
            all = false;
            eprintln!("case {case}: raising sample {idx} shrank the fast set");
        }

        // permanently low current never arms
        if case < 50 {
            let low: Vec<f64> = (0..n_samples)
                .map(|_| rng.gen_range(0.0..RETURN_FRACTION * params.i_switch * 0.999))
                .collect();
            if fast_set(&low).iter().any(|&f| f) {
                all = false;
                eprintln!("case {case}: low trace armed the fast mode");
            }
        }
    }
    report_line(
        "criterion 10",
        all,
        "1000 random traces: no chattering, monotone trigger, low traces never arm",
    );
}
