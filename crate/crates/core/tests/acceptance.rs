//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use blk_core::analysis::{
    energy_identity_residual, experiment_perturbation, mms_spatial, mms_temporal, stability_experiment, MmsSetup,
    GRONWALL_C_HAT, STABILITY_THETA,
};
use blk_core::cli::{
    cmd_decay, cmd_run, cmd_verify_inequalities, default_inequality_discretization, DecayStatus, RunConfig,
};
use blk_core::dynamics::{make_initial, run_simulation, PhysicalParams, Profile, SolverConfig};
use blk_core::geometry::{Discretization, DomainKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mms() -> Outcome {
    let start = Instant::now();
    let s = MmsSetup::default();
    let sp = mms_spatial(&s, &[64, 128, 256], 1e-4).map_err(|e| e.to_string())?;
    let tm = mms_temporal(&s, 256, &[1e-3, 5e-4, 2.5e-4]).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        sp.min_order >= 1.9 && tm.min_order >= 1.9 && secs < 300.0,
        format!(
            "spatial orders {:?}, temporal orders {:?}, {secs:.1} s",
            sp.orders, tm.orders
        ),
    )
}

fn energy_residual(nx: usize, dt: f64) -> Result<f64, String> {
    let disc = Discretization::new(DomainKind::Rectangle, PI, PI, nx, 8, 0.0, true).map_err(|e| e.to_string())?;
    let init = make_initial(&Profile::rect_poly(1), 1.0, &disc).map_err(|e| e.to_string())?;
    let t_end = 0.2;
    let cfg = SolverConfig::new(dt, t_end).with_diag_every(1);
    let out = run_simulation(&disc, &init, &PhysicalParams::new(1.0), &cfg).map_err(|e| e.to_string())?;
    let r = energy_identity_residual(&out.series, 1.0, 0.05 * t_end).map_err(|e| e.to_string())?;
    Ok(r.max_rel)
}

fn energy_identity() -> Outcome {
    // nx + 1 doubles, so h halves exactly
    let coarse = energy_residual(256, 1e-4)?;
    let fine = energy_residual(513, 5e-5)?;
    let ratio = coarse / fine;
    verdict(
        coarse <= 1e-3 && ratio >= 3.5,
        format!("max relative residual {coarse:.3e} -> {fine:.3e} under halving (factor {ratio:.2})"),
    )
}

fn decay(id: &str, t_end: f64, limit_s: Option<f64>) -> Outcome {
    let mut cfg = RunConfig::preset(id).map_err(|e| e.to_string())?;
    cfg.solver.t_end = t_end;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = cmd_decay(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let Some(r) = &out.report else {
        return Err(format!("{:?}: {:?}", out.status, out.violations));
    };
    let mut ok = out.status == DecayStatus::Pass && limit_s.is_none_or(|l| secs < l);
    let mut detail = format!(
        "chi = {} (fitted {:.2}), max E/envelope = {:.4} over {} samples, {secs:.1} s",
        r.chi_theory,
        r.chi_fitted,
        r.max_envelope_ratio,
        out.run.as_ref().map_or(0, |s| s.samples)
    );
    if r.theorem.weighted() {
        let m = out.monitor.ok_or("missing monitor")?;
        let trunc = out.truncation.ok_or("missing truncation diagnostic")?;
        ok &= m.pass && trunc < 1e-8;
        detail += &format!(
            ", (e^kx,u0^2) = {:.4} < {}, monitor max f/f0 = {:.3}, truncation {trunc:.1e}",
            out.weighted_energy_0,
            r.constants.threshold.unwrap_or(f64::NAN),
            m.max_ratio
        );
    }
    verdict(ok, detail)
}

fn inequalities() -> Outcome {
    let disc = default_inequality_discretization().map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let r = cmd_verify_inequalities(&disc, 1, 100, dir.path()).map_err(|e| e.to_string())?;
    let required = [
        "steklov",
        "lemma42_grad",
        "lemma42_lap",
        "lemma42_grad_lap",
        "lemma42_bilap",
        "lemma43",
        "ladyzhenskaya",
    ];
    let mut ok = r.sharp_ok && disc.nx() == 256;
    let mut parts = Vec::new();
    for name in required {
        let t = r
            .tallies
            .iter()
            .find(|t| t.name == name)
            .ok_or(format!("no {name} tally"))?;
        ok &= t.passed == 100 && t.total == 100 && t.min_relative_margin >= -1e-8;
        parts.push(format!("{name} {}/{}", t.passed, t.total));
    }
    let sharp = r.sharp.iter().map(|s| s.relative_margin().abs()).fold(0.0, f64::max);
    verdict(
        ok,
        format!("{}; sharp cases max |margin| {sharp:.1e}", parts.join(", ")),
    )
}

fn stability() -> Outcome {
    let cfg = RunConfig::preset("thm61").map_err(|e| e.to_string())?;
    let disc = cfg.discretization().map_err(|e| e.to_string())?;
    let init = make_initial(&cfg.initial.profile, cfg.initial.amplitude, &disc).map_err(|e| e.to_string())?;
    let mut solver = cfg.solver;
    solver.t_end = 1.0;
    solver.theta = STABILITY_THETA;
    let v = experiment_perturbation(&disc);
    let r = stability_experiment(&disc, &init.state, &v, 1e-6, &cfg.physics, &solver, GRONWALL_C_HAT)
        .map_err(|e| e.to_string())?;
    verdict(
        r.pass,
        format!(
            "C = {}, max ||z||^2/envelope = {:.4}, sup ||z||/||z0|| = {:.4}, max |ratio/2 - 1| = {:.2e}",
            r.c_hat, r.max_envelope_ratio, r.max_amplification, r.linear_response_deviation
        ),
    )
}

fn determinism() -> Outcome {
    let cfg = RunConfig::preset("thm61").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let read = |p: std::path::PathBuf| std::fs::read(p).map_err(|e| e.to_string());
    let mut csv = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        cmd_run(&cfg, &out).map_err(|e| e.to_string())?;
        csv.push(read(out.join("diagnostics.csv"))?);
    }
    let disc = default_inequality_discretization().map_err(|e| e.to_string())?;
    let mut sweep = Vec::new();
    for run in ["c", "d"] {
        let out = dir.path().join(run);
        cmd_verify_inequalities(&disc, 42, 50, &out).map_err(|e| e.to_string())?;
        sweep.push(read(out.join("inequalities.json"))?);
    }
    verdict(
        csv[0] == csv[1] && sweep[0] == sweep[1],
        format!(
            "diagnostics.csv {} bytes identical: {}; seeded sweep identical: {}",
            csv[0].len(),
            csv[0] == csv[1],
            sweep[0] == sweep[1]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("manufactured-solution convergence", mms),
        ("energy identity residual", energy_identity),
        ("rectangle envelope, gamma = 1", || decay("thm61", 2.0, Some(120.0))),
        ("rectangle envelope, gamma = -1", || decay("thm62", 1.0, None)),
        ("half-strip weighted envelope, gamma = 1/8", || {
            decay("thm63", 1.0, None)
        }),
        ("half-strip weighted envelope, gamma = -1", || decay("thm64", 1.0, None)),
        ("inequality suite", inequalities),
        ("continuous dependence", stability),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
