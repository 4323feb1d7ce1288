//! The `blk` command line: configuration, presets, run orchestration and
//! persistence.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 blow-up,
//! 4 I/O error, 5 theorem hypothesis not met.

mod config;
mod output;

pub use config::{DomainConfig, GridConfig, InitialConfig, Preset, PresetProfile, RunConfig, PRESETS};
pub use output::{
    ensure_dir, read_diagnostics, write_diagnostics, write_diagnostics_to, write_json, write_table, CSV_COLUMNS,
    CSV_VERSION_LINE,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    mms_spatial, mms_temporal, run_inequality_suite, sharp_cases, strip_monitor, verify_theorem, CheckTally,
    ConvergenceReport, DecayReport, InequalityReport, MmsSetup, MonitorReport, NirenbergConstants, Theorem,
    TheoryConstants,
};
use crate::dynamics::{make_initial, run_simulation, Compatibility, Smallness};
use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;
use crate::geometry::{Discretization, DomainKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_HYPOTHESIS: i32 = 5;

/// Largest `|relative margin|` a sharp case may show.
pub const SHARP_TOL: f64 = 1e-3;
/// Smallest order the convergence study accepts.
pub const MIN_ORDER: f64 = 1.9;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp(_) | Error::NonFinite(_) => EXIT_BLOW_UP,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blk",
    version,
    about = "Benney-Lin-Kawahara solver and decay verification harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write diagnostics.csv and summary.json.
    Run(RunArgs),
    /// Run a theorem preset and check its decay envelope.
    Decay(DecayArgs),
    /// Sweep the functional inequalities over seeded random fields.
    VerifyInequalities(InequalityArgs),
    /// Manufactured-solution convergence study.
    Convergence(ConvergenceArgs),
    /// Print the TOML configuration of a preset.
    Preset { id: String },
}

#[derive(Debug, Args)]
pub struct Source {
    /// Preset id: thm61, thm62, thm63, thm64, unstable.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        match (&self.preset, &self.config) {
            (Some(id), None) => RunConfig::preset(id),
            (None, Some(path)) => RunConfig::load(path),
            _ => Err(Error::Config("give exactly one of --preset or --config".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the initial amplitude.
    #[arg(long)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InequalityArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    /// Takes the domain and grid from this configuration instead of the
    /// default `pi x pi` rectangle with nx = 256 and 8 modes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Spatial levels.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
    pub nx: Vec<usize>,
    /// Temporal levels.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 5e-4, 2.5e-4])]
    pub dt: Vec<f64>,
    /// Time step of the spatial study.
    #[arg(long, default_value_t = 1e-4)]
    pub spatial_dt: f64,
    /// Grid of the temporal study.
    #[arg(long, default_value_t = 256)]
    pub temporal_nx: usize,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_end: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn out_dir(explicit: &Option<PathBuf>, cfg: Option<&RunConfig>, fallback: &str) -> PathBuf {
    explicit
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.and_then(|c| c.preset.clone()).unwrap_or(fallback.into())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub preset: Option<String>,
    pub seed: u64,
    pub steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub initial: DiagnosticsRecord,
    #[serde(rename = "final")]
    pub last: Option<DiagnosticsRecord>,
    pub blow_up: bool,
    pub blow_up_reason: Option<String>,
    pub wall_time_s: f64,
    pub solve_warnings: usize,
    pub max_solve_residual: f64,
    pub compatibility: Compatibility,
    pub j_w: f64,
    pub weighted_energy: f64,
    pub smallness: Option<Smallness>,
    pub truncation: Option<f64>,
}

/// Runs `cfg` and writes `diagnostics.csv`, `summary.json` and the effective
/// `config.toml` to `out`. A blow-up is reported in the summary, with the
/// series up to the failure persisted.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let disc = cfg.discretization()?;
    let init = make_initial(&cfg.initial.profile, cfg.initial.amplitude, &disc)?;
    ensure_dir(out)?;
    output::write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    let start = Instant::now();
    let result = run_simulation(&disc, &init, &cfg.physics, &cfg.solver);
    let wall = start.elapsed().as_secs_f64();
    let (series, steps, warnings, residual, reason) = match result {
        Ok(o) => (o.series, o.steps, o.solve_warnings, o.max_solve_residual, None),
        Err(Error::BlowUp(b)) => (b.series.clone(), b.step, 0, f64::NAN, Some(b.to_string())),
        Err(e) => return Err(e),
    };
    write_diagnostics(&out.join("diagnostics.csv"), &series)?;
    let summary = RunSummary {
        preset: cfg.preset.clone(),
        seed: cfg.seed,
        steps,
        samples: series.len(),
        t_final: series.last().map_or(0.0, |r| r.t),
        initial: series[0],
        last: series.last().copied(),
        blow_up: reason.is_some(),
        blow_up_reason: reason,
        wall_time_s: wall,
        solve_warnings: warnings,
        max_solve_residual: residual,
        compatibility: init.compatibility,
        j_w: init.j_w.total(),
        weighted_energy: init.weighted_energy,
        smallness: init.smallness,
        truncation: init.truncation,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayStatus {
    Pass,
    EnvelopeViolated,
    HypothesisNotMet,
    BlowUp,
}

impl DecayStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            DecayStatus::Pass => EXIT_OK,
            DecayStatus::EnvelopeViolated => EXIT_CHECK_FAILED,
            DecayStatus::HypothesisNotMet => EXIT_HYPOTHESIS,
            DecayStatus::BlowUp => EXIT_BLOW_UP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOutput {
    pub preset: Option<String>,
    pub theorem: Theorem,
    pub status: DecayStatus,
    pub constants: TheoryConstants,
    pub violations: Vec<String>,
    pub weighted_energy_0: f64,
    pub report: Option<DecayReport>,
    pub monitor: Option<MonitorReport>,
    pub truncation: Option<f64>,
    pub run: Option<RunSummary>,
}

/// Checks the hypotheses of the configured theorem, runs it when they hold,
/// and writes `decay_report.json` next to the run outputs.
pub fn cmd_decay(cfg: &RunConfig, out: &Path) -> Result<DecayOutput> {
    let thm = cfg
        .theorem
        .ok_or_else(|| Error::Config("`theorem` must be set for a decay check".into()))?;
    let want = if thm.weighted() {
        DomainKind::HalfStrip
    } else {
        DomainKind::Rectangle
    };
    if cfg.domain.kind != want {
        return Err(Error::Config(format!("theorem {thm} is stated on a {want:?} domain")));
    }
    let disc = cfg.discretization()?;
    let init = make_initial(&cfg.initial.profile, cfg.initial.amplitude, &disc)?;
    let gamma = cfg.physics.gamma;
    let constants = crate::analysis::theory_constants(thm, &disc.domain, gamma);
    let violations = crate::analysis::hypothesis_violations(thm, &disc.domain, gamma, init.weighted_energy);
    let mut output = DecayOutput {
        preset: cfg.preset.clone(),
        theorem: thm,
        status: DecayStatus::HypothesisNotMet,
        constants,
        violations,
        weighted_energy_0: init.weighted_energy,
        report: None,
        monitor: None,
        truncation: init.truncation,
        run: None,
    };
    ensure_dir(out)?;
    if output.violations.is_empty() {
        let summary = cmd_run(cfg, out)?;
        if summary.blow_up {
            output.status = DecayStatus::BlowUp;
        } else {
            let series = read_diagnostics(&out.join("diagnostics.csv"))?;
            let report = verify_theorem(thm, &series, &disc.domain, gamma)?;
            if thm.weighted() {
                output.monitor = Some(strip_monitor(&series, &disc.domain)?);
            }
            output.status = if report.pass {
                DecayStatus::Pass
            } else {
                DecayStatus::EnvelopeViolated
            };
            output.report = Some(report);
        }
        output.run = Some(summary);
    }
    write_json(&out.join("decay_report.json"), &output)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityOutput {
    pub seed: u64,
    pub count: u64,
    pub nx: usize,
    pub n_modes: usize,
    pub tallies: Vec<CheckTally>,
    pub nirenberg: Vec<NirenbergConstants>,
    pub failures: Vec<InequalityReport>,
    pub sharp: Vec<InequalityReport>,
    pub sharp_ok: bool,
    pub pass: bool,
}

/// Default discretization of the inequality sweep.
pub fn default_inequality_discretization() -> Result<Discretization> {
    let pi = std::f64::consts::PI;
    Discretization::new(DomainKind::Rectangle, pi, pi, 256, 8, 0.0, true)
}

/// Writes `inequalities.json` and the per-check counts to `inequalities.csv`.
pub fn cmd_verify_inequalities(disc: &Discretization, seed: u64, count: u64, out: &Path) -> Result<InequalityOutput> {
    let suite = run_inequality_suite(disc, seed, count)?;
    let sharp = sharp_cases(disc)?;
    let sharp_ok = sharp.iter().all(|r| r.pass && r.relative_margin().abs() < SHARP_TOL);
    let output = InequalityOutput {
        seed,
        count,
        nx: disc.nx(),
        n_modes: disc.n_modes(),
        pass: suite.all_pass && sharp_ok,
        tallies: suite.tallies,
        nirenberg: suite.nirenberg,
        failures: suite.failures,
        sharp,
        sharp_ok,
    };
    ensure_dir(out)?;
    write_table(&out.join("inequalities.csv"), &output.tallies)?;
    write_json(&out.join("inequalities.json"), &output)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOutput {
    pub setup: MmsSetup,
    pub spatial_dt: f64,
    pub temporal_nx: usize,
    pub spatial: ConvergenceReport,
    pub temporal: ConvergenceReport,
    pub pass: bool,
}

#[derive(Serialize)]
struct ConvergenceRow<'a> {
    study: &'a str,
    level: f64,
    error: f64,
    order: Option<f64>,
}

fn convergence_rows<'a>(study: &'a str, r: &ConvergenceReport, rows: &mut Vec<ConvergenceRow<'a>>) {
    for (i, &e) in r.errors.iter().enumerate() {
        rows.push(ConvergenceRow {
            study,
            level: r.levels[i],
            error: e,
            order: i.checked_sub(1).map(|j| r.orders[j]),
        });
    }
}

/// Runs both ladders and writes `convergence.json` and `convergence.csv`.
pub fn cmd_convergence(
    setup: &MmsSetup,
    nx_levels: &[usize],
    dt_levels: &[f64],
    spatial_dt: f64,
    temporal_nx: usize,
    out: &Path,
) -> Result<ConvergenceOutput> {
    let spatial = mms_spatial(setup, nx_levels, spatial_dt)?;
    let temporal = mms_temporal(setup, temporal_nx, dt_levels)?;
    let pass = spatial.min_order >= MIN_ORDER && temporal.min_order >= MIN_ORDER;
    let output = ConvergenceOutput {
        setup: *setup,
        spatial_dt,
        temporal_nx,
        spatial,
        temporal,
        pass,
    };
    ensure_dir(out)?;
    let mut rows = Vec::new();
    convergence_rows("space", &output.spatial, &mut rows);
    convergence_rows("time", &output.temporal, &mut rows);
    write_table(&out.join("convergence.csv"), &rows)?;
    write_json(&out.join("convergence.json"), &output)?;
    Ok(output)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(a) => {
            let mut cfg = a.source.load()?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let out = out_dir(&a.out, Some(&cfg), "run");
            let s = cmd_run(&cfg, &out)?;
            match &s.blow_up_reason {
                Some(reason) => {
                    eprintln!("{reason}; partial series in {}", out.display());
                    Ok(EXIT_BLOW_UP)
                }
                None => {
                    let last = s.last.unwrap_or_default();
                    println!(
                        "t = {}  ||u||^2 = {:e}  (from {:e})  {} steps in {:.2} s -> {}",
                        s.t_final,
                        last.l2_sq,
                        s.initial.l2_sq,
                        s.steps,
                        s.wall_time_s,
                        out.display()
                    );
                    Ok(EXIT_OK)
                }
            }
        }
        Command::Decay(a) => {
            let mut cfg = a.source.load()?;
            if let Some(amp) = a.amplitude {
                cfg.initial.amplitude = amp;
            }
            let out = out_dir(&a.out, Some(&cfg), "decay");
            let d = cmd_decay(&cfg, &out)?;
            match &d.report {
                Some(r) => println!(
                    "theorem {}: chi = {} (fitted {:.3}), max E/envelope = {:.4}, {:?}",
                    d.theorem, r.chi_theory, r.chi_fitted, r.max_envelope_ratio, d.status
                ),
                None => {
                    println!("theorem {}: {:?}", d.theorem, d.status);
                    for v in &d.violations {
                        println!("  {v}");
                    }
                }
            }
            Ok(d.status.exit_code())
        }
        Command::VerifyInequalities(a) => {
            let disc = match &a.config {
                Some(p) => RunConfig::load(p)?.discretization()?,
                None => default_inequality_discretization()?,
            };
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from("out/inequalities"));
            let r = cmd_verify_inequalities(&disc, a.seed, a.count, &out)?;
            for t in &r.tallies {
                println!(
                    "{:<18} {}/{}  min rel margin {:.3e}",
                    t.name, t.passed, t.total, t.min_relative_margin
                );
            }
            println!("sharp cases: {}", if r.sharp_ok { "ok" } else { "FAILED" });
            Ok(if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Convergence(a) => {
            let setup = MmsSetup {
                amplitude: a.amplitude,
                t_end: a.t_end,
                ..MmsSetup::default()
            };
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from("out/convergence"));
            let r = cmd_convergence(&setup, &a.nx, &a.dt, a.spatial_dt, a.temporal_nx, &out)?;
            println!("space: errors {:?} orders {:?}", r.spatial.errors, r.spatial.orders);
            println!("time:  errors {:?} orders {:?}", r.temporal.errors, r.temporal.orders);
            Ok(if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Preset { id } => {
            print!("{}", RunConfig::preset(&id)?.to_toml()?);
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::io("p", std::io::Error::other("x"))), EXIT_IO);
        assert_eq!(DecayStatus::HypothesisNotMet.exit_code(), EXIT_HYPOTHESIS);
    }

    #[test]
    fn argument_errors_are_config_errors() {
        assert_eq!(main_with_args(["blk", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["blk", "run"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["blk", "run", "--preset", "nope"]), EXIT_CONFIG);
    }
}
