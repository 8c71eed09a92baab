//! Command-line front end: run single simulations or scenario/variant
//! sweeps, emit CSV traces, JSON reports and SVG quick-looks, and tabulate
//! the design curves.

use crate::analysis::{curve_table, CurveKind, CurveParams};
use crate::controller::{ControlParams, ControlVariant};
use crate::scenario::Scenario;
use crate::simulator::{run, SimReport, SimTrace, Verdict};
use crate::svg;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gfmsim",
    about = "Grid-forming converter transient simulator",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trace.csv, report.json, quicklook.svg
    Run(RunArgs),
    /// Run every (scenario, variant) pair and tabulate the verdicts
    Matrix(MatrixArgs),
    /// Tabulate an analysis curve as CSV and SVG
    Curves(CurvesArgs),
    /// Parse and validate a scenario file
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Slow,
    Fast,
    AdaptiveNodroop,
    Adaptive,
}

impl From<VariantArg> for ControlVariant {
    fn from(v: VariantArg) -> ControlVariant {
        match v {
            VariantArg::Slow => ControlVariant::SlowIvs,
            VariantArg::Fast => ControlVariant::FastIvs,
            VariantArg::AdaptiveNodroop => ControlVariant::AdaptiveNoDroop,
            VariantArg::Adaptive => ControlVariant::Adaptive,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML)
    scenario: PathBuf,
    /// Control variant; defaults to the scenario's pinned variant
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Sample period override, seconds
    #[arg(long)]
    dt: Option<f64>,
    /// Write every Nth trace row
    #[arg(long, default_value_t = 1)]
    every: usize,
}

#[derive(Args)]
struct MatrixArgs {
    /// Scenario files (TOML)
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    /// Variants to sweep; defaults to all four
    #[arg(long, value_enum, value_delimiter = ',')]
    variants: Vec<VariantArg>,
    /// Optional CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample period override, seconds
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    /// Curve kind
    #[arg(value_enum)]
    kind: CurveKindArg,
    /// Internal voltage magnitude
    #[arg(long, default_value_t = 1.1)]
    e_ref: f64,
    /// Grid voltage magnitude
    #[arg(long, default_value_t = 1.0)]
    v_g: f64,
    /// Filter reactance
    #[arg(long, default_value_t = 0.1)]
    x_f: f64,
    /// Grid reactance (idelta)
    #[arg(long)]
    x_g: Option<f64>,
    /// Short-circuit ratio, alternative to --x-g (idelta)
    #[arg(long)]
    scr: Option<f64>,
    /// Total reactance (pdelta)
    #[arg(long)]
    x: Option<f64>,
    /// Largest credible grid reactance (ithmin)
    #[arg(long, default_value_t = 1.0)]
    x_g_max: f64,
    /// Angle grid, degrees
    #[arg(long, default_value_t = 0.0)]
    from_deg: f64,
    #[arg(long, default_value_t = 180.0)]
    to_deg: f64,
    #[arg(long, default_value_t = 0.5)]
    step_deg: f64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKindArg {
    Pdelta,
    Idelta,
    Ithmin,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file (TOML)
    scenario: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Curves(args) => cmd_curves(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn resolve_variant(
    cli_choice: Option<VariantArg>,
    scenario: &Scenario,
) -> ControlVariant {
    cli_choice
        .map(ControlVariant::from)
        .or(scenario.variant)
        .unwrap_or(ControlVariant::Adaptive)
}

fn cmd_run(args: RunArgs) -> Result<i32, Box<dyn std::error::Error>> {
    if args.every == 0 {
        return Err("--every must be >= 1".into());
    }
    let scenario = Scenario::from_path(&args.scenario)?;
    let variant = resolve_variant(args.variant, &scenario);
    let (trace, report) = run(&scenario, variant, &ControlParams::default(), args.dt)?;

    fs::create_dir_all(&args.out)?;
    write_trace_csv(&args.out.join("trace.csv"), &trace, args.every)?;
    write_report_json(&args.out.join("report.json"), &report)?;
    let title = format!(
        "{} | {} | verdict: {}",
        args.scenario
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        variant.name(),
        report.verdict
    );
    fs::write(
        args.out.join("quicklook.svg"),
        svg::render_quicklook(&trace, &title),
    )?;

    println!(
        "{}: verdict {}, pole slips {}, peak event power {:.4} p.u., droop power {:.4} p.u.",
        variant.name(),
        report.verdict,
        report.pole_slips,
        report.peak_event_power,
        report.droop_power_ss
    );
    Ok(report.verdict.exit_code())
}

fn cmd_matrix(args: MatrixArgs) -> Result<i32, Box<dyn std::error::Error>> {
    let variants: Vec<ControlVariant> = if args.variants.is_empty() {
        ControlVariant::ALL.to_vec()
    } else {
        args.variants.iter().map(|&v| v.into()).collect()
    };

    let mut rows: Vec<(String, &'static str, String, String, String)> = Vec::new();
    let mut failed = false;
    for path in &args.scenarios {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let scenario = Scenario::from_path(path)?;
        for &variant in &variants {
            match run(&scenario, variant, &ControlParams::default(), args.dt) {
                Ok((_, report)) => rows.push((
                    name.clone(),
                    variant.name(),
                    report.verdict.to_string(),
                    report.pole_slips.to_string(),
                    format!("{:.4}", report.peak_event_power),
                )),
                Err(err) => {
                    failed = true;
                    rows.push((
                        name.clone(),
                        variant.name(),
                        format!("ERROR: {err}"),
                        "-".into(),
                        "-".into(),
                    ));
                }
            }
        }
    }

    println!(
        "{:<24} {:<18} {:<18} {:>10} {:>12}",
        "scenario", "variant", "verdict", "pole_slips", "peak_power"
    );
    for (s, v, verdict, slips, peak) in &rows {
        println!("{s:<24} {v:<18} {verdict:<18} {slips:>10} {peak:>12}");
    }

    if let Some(path) = &args.out {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "scenario,variant,verdict,pole_slips,peak_event_power")?;
        for (s, v, verdict, slips, peak) in &rows {
            writeln!(w, "{s},{v},{verdict},{slips},{peak}")?;
        }
    }
    Ok(if failed { 1 } else { 0 })
}

fn cmd_curves(args: CurvesArgs) -> Result<i32, Box<dyn std::error::Error>> {
    if !(args.step_deg.is_finite() && args.step_deg > 0.0) || args.to_deg < args.from_deg {
        return Err("bad angle grid".into());
    }
    let mut params = CurveParams {
        e_ref: args.e_ref,
        v_g: args.v_g,
        x_f: args.x_f,
        x_g_max: args.x_g_max,
        ..CurveParams::default()
    };
    let (kind, name, y_label) = match args.kind {
        CurveKindArg::Pdelta => {
            // total reactance split so that x_f + x_g equals the request
            if let Some(x) = args.x {
                params.x_g = (x - params.x_f).max(1e-9);
            }
            (CurveKind::PDelta, "pdelta", "p [p.u.]")
        }
        CurveKindArg::Idelta => {
            match (args.x_g, args.scr) {
                (Some(x_g), None) => params.x_g = x_g,
                (None, Some(scr)) => params.x_g = 1.0 / scr,
                (None, None) => {}
                (Some(_), Some(_)) => return Err("give either --x-g or --scr".into()),
            }
            (CurveKind::IDelta, "idelta", "i_omag [p.u.]")
        }
        CurveKindArg::Ithmin => (CurveKind::IThMin, "ithmin", "i_th_min [p.u.]"),
    };

    let n = ((args.to_deg - args.from_deg) / args.step_deg).round() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|k| args.from_deg + k as f64 * args.step_deg)
        .collect();
    let table = curve_table(kind, &params, &grid);

    fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join(format!("{name}.csv"));
    let mut w = BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(w, "angle_deg,{}", y_label.split(' ').next().unwrap())?;
    for (x, y) in &table {
        writeln!(w, "{x},{y}")?;
    }
    drop(w);
    fs::write(
        args.out.join(format!("{name}.svg")),
        svg::render_curve(name, "angle [deg]", y_label, &table),
    )?;
    println!("wrote {}", csv_path.display());
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32, Box<dyn std::error::Error>> {
    match Scenario::from_path(&args.scenario) {
        Ok(s) => {
            println!(
                "{}: ok ({} events, t_end = {} s, p_m = {} p.u., x_g = {:.4} p.u.)",
                args.scenario.display(),
                s.events.len(),
                s.t_end,
                s.p_m,
                s.plant.x_g
            );
            Ok(0)
        }
        Err(err) => {
            eprintln!("{}: {err}", args.scenario.display());
            Ok(1)
        }
    }
}

/// Write the per-step trace with angles in degrees and the mode as a 0/1
/// flag. Row count at `every = 1` is `floor(t_end/dt) + 1`.
pub fn write_trace_csv(path: &Path, trace: &SimTrace, every: usize) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "t,v_g,theta_g_deg,omega_g_pu,delta_deg,omega_pu,p_o,q_o,i_omag,e_ref,x_v,p_ref1,mode"
    )?;
    for k in (0..trace.len()).step_by(every) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            trace.t[k],
            trace.v_g[k],
            trace.theta_g[k].to_degrees(),
            trace.omega_g[k],
            trace.delta[k].to_degrees(),
            trace.omega[k],
            trace.p_o[k],
            trace.q_o[k],
            trace.i_omag[k],
            trace.e_ref[k],
            trace.x_v[k],
            trace.p_ref1[k],
            trace.mode[k].as_flag()
        )?;
    }
    Ok(())
}

pub fn write_report_json(path: &Path, report: &SimReport) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

/// Exit code for a finished run: a pure function of the verdict.
pub fn exit_code_for(verdict: Verdict) -> i32 {
    verdict.exit_code()
}
