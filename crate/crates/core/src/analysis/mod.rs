//! Verification: functional inequalities, decay rates, continuous dependence
//! and convergence.

mod convergence;
mod decay;
mod inequalities;
mod stability;
mod trial;

pub use convergence::{mms_spatial, mms_temporal, ConvergenceReport, MmsSetup, MIN_LEVELS};
pub use decay::{
    comparison_monitor, energy_identity_residual, fit_decay, hypothesis_violations, strip_monitor, theorem_energy,
    theory_constants, verify_theorem, DecayReport, EnergyResidual, MonitorReport, Theorem, TheoryConstants,
    ENVELOPE_TOL, STRIP_GAMMA_MAX, STRIP_K_MAX,
};
pub use inequalities::{
    check_field, check_ladyzhenskaya, check_lemma42, check_lemma43, check_nirenberg, check_steklov, discretization_tol,
    nirenberg_ratio, profile_norms, sobolev_constant, InequalityReport, BASE_TOL,
};
pub use stability::{
    calibration_perturbation, experiment_perturbation, fit_gronwall_constant, perturbation_pair, stability_experiment,
    PerturbationPair, StabilityReport, ENVELOPE_ROUNDOFF, GRONWALL_C_HAT, LINEAR_RESPONSE_TOL, STABILITY_THETA,
};
pub use trial::{random_field, random_profile, random_sine_series, sample_rng, shape_functions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::Evaluator;
use crate::geometry::{forward_sine_transform, Discretization, PhysicalField};

/// Seed of the corpus the interpolation constants are fitted on; sweeps use
/// their own seed so the fit is tested out of sample.
pub const NIRENBERG_CALIBRATION_SEED: u64 = 0x5eed_0001;
pub const NIRENBERG_CALIBRATION_SAMPLES: u64 = 1000;
/// Safety factor applied to the largest ratio seen during calibration.
pub const NIRENBERG_SAFETY: f64 = 1.25;
/// `(i, m)` pairs of the interpolation inequality that are swept.
pub const NIRENBERG_PAIRS: [(usize, usize); 2] = [(3, 5), (4, 5)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NirenbergConstants {
    pub i: usize,
    pub m: usize,
    pub a1: f64,
    pub a2: f64,
    pub max_ratio: f64,
    pub seed: u64,
    pub samples: u64,
}

/// `A1 = 1.25 max ratio` over a seeded corpus of compatible profiles, `A2 = 0`.
pub fn fit_nirenberg_constants(
    length: f64,
    nx: usize,
    i: usize,
    m: usize,
    seed: u64,
    samples: u64,
) -> NirenbergConstants {
    let max_ratio = (0..samples)
        .into_par_iter()
        .map(|s| nirenberg_ratio(&random_profile(length, nx, seed, s), length, i, m))
        .reduce(|| 0.0, f64::max);
    NirenbergConstants {
        i,
        m,
        a1: NIRENBERG_SAFETY * max_ratio,
        a2: 0.0,
        max_ratio,
        seed,
        samples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    pub min_relative_margin: f64,
}

impl CheckTally {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: 0,
            total: 0,
            min_relative_margin: f64::INFINITY,
        }
    }

    fn add(&mut self, r: &InequalityReport) {
        self.total += 1;
        if r.pass {
            self.passed += 1;
        }
        self.min_relative_margin = self.min_relative_margin.min(r.relative_margin());
    }

    pub fn all_pass(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub count: u64,
    pub tallies: Vec<CheckTally>,
    pub nirenberg: Vec<NirenbergConstants>,
    /// Failing reports, capped at a few per check.
    pub failures: Vec<InequalityReport>,
    pub all_pass: bool,
}

const MAX_FAILURES_PER_CHECK: usize = 5;

fn sample_reports(
    disc: &Discretization,
    ev: &Evaluator,
    nir: &[NirenbergConstants],
    seed: u64,
    sample: u64,
) -> Result<Vec<InequalityReport>> {
    let (l, nx) = (disc.domain.length, disc.nx());
    let mut out = vec![check_steklov(&random_sine_series(nx, seed, sample), l)?];
    out.extend(check_field(ev, &random_field(disc, seed, sample))?);
    let profile = random_profile(l, nx, seed, sample);
    for c in nir {
        out.push(check_nirenberg(&profile, l, c.i, c.m, c.a1, c.a2)?);
    }
    Ok(out)
}

/// Runs every inequality on `count` seeded trial fields. An empty sweep passes
/// vacuously.
pub fn run_inequality_suite(disc: &Discretization, seed: u64, count: u64) -> Result<SuiteReport> {
    let ev = Evaluator::new(&disc.domain, &disc.grid, &disc.basis)?;
    let nir: Vec<NirenbergConstants> = NIRENBERG_PAIRS
        .iter()
        .map(|&(i, m)| {
            fit_nirenberg_constants(
                disc.domain.length,
                disc.nx(),
                i,
                m,
                NIRENBERG_CALIBRATION_SEED,
                NIRENBERG_CALIBRATION_SAMPLES,
            )
        })
        .collect();
    let per_sample: Vec<Vec<InequalityReport>> = (0..count)
        .into_par_iter()
        .map(|s| sample_reports(disc, &ev, &nir, seed, s))
        .collect::<Result<_>>()?;
    let mut tallies: Vec<CheckTally> = Vec::new();
    let mut failures = Vec::new();
    for reports in &per_sample {
        for r in reports {
            let idx = match tallies.iter().position(|t| t.name == r.name) {
                Some(i) => i,
                None => {
                    tallies.push(CheckTally::new(&r.name));
                    tallies.len() - 1
                }
            };
            tallies[idx].add(r);
            if !r.pass
                && failures.iter().filter(|f: &&InequalityReport| f.name == r.name).count() < MAX_FAILURES_PER_CHECK
            {
                failures.push(r.clone());
            }
        }
    }
    let all_pass = tallies.iter().all(CheckTally::all_pass);
    Ok(SuiteReport {
        seed,
        count,
        tallies,
        nirenberg: nir,
        failures,
        all_pass,
    })
}

/// Cases where the constants are attained: the first eigenfunction
/// `sin(pi x / L) sin(pi y / B)` for the Poincare-type bounds and the first
/// sine for Steklov.
pub fn sharp_cases(disc: &Discretization) -> Result<Vec<InequalityReport>> {
    let ev = Evaluator::new(&disc.domain, &disc.grid, &disc.basis)?;
    let (l, b) = (disc.domain.length, disc.domain.width);
    let pi = std::f64::consts::PI;
    let f = PhysicalField::sample(&disc.grid, &disc.basis, |x, y| (pi * x / l).sin() * (pi * y / b).sin());
    let s = forward_sine_transform(&f, &disc.basis)?;
    let rec = ev.compute_record(&s, None)?;
    let mut out = check_lemma42(&rec, disc.domain.poincare_a(), disc.grid.h).to_vec();
    let nx = disc.nx();
    let line: Vec<f64> = (0..=nx + 1).map(|i| (pi * i as f64 / (nx + 1) as f64).sin()).collect();
    let mut line = line;
    line[nx + 1] = 0.0;
    out.push(check_steklov(&line, l)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;

    #[test]
    fn small_sweep_passes_and_is_reproducible() {
        let d = Discretization::new(DomainKind::Rectangle, 2.0, 1.5, 96, 4, 0.0, true).unwrap();
        let a = run_inequality_suite(&d, 7, 40).unwrap();
        assert!(a.all_pass, "{:?}", a.failures);
        assert_eq!(a.tallies.len(), 9);
        assert!(a.tallies.iter().all(|t| t.total == 40));
        let b = run_inequality_suite(&d, 7, 40).unwrap();
        assert_eq!(a, b);
        let empty = run_inequality_suite(&d, 7, 0).unwrap();
        assert!(empty.all_pass && empty.tallies.is_empty());
    }

    #[test]
    fn sharp_cases_have_near_zero_margin() {
        let d = Discretization::new(DomainKind::Rectangle, 3.0, 2.0, 256, 4, 0.0, true).unwrap();
        for r in sharp_cases(&d).unwrap() {
            assert!(r.pass, "{r:?}");
            assert!(r.relative_margin().abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn nirenberg_fit_is_deterministic() {
        let a = fit_nirenberg_constants(2.0, 64, 3, 5, 1, 50);
        assert_eq!(a, fit_nirenberg_constants(2.0, 64, 3, 5, 1, 50));
        assert!(a.max_ratio > 0.0 && a.a1 == 1.25 * a.max_ratio);
    }
}
