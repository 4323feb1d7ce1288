//! Convergence study with the manufactured solution.

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_with_forcing, ManufacturedSolution, PhysicalParams, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{Discretization, DomainKind, ModalState};

/// Fewest resolution levels from which an order can be read off.
pub const MIN_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsSetup {
    pub length: f64,
    pub width: f64,
    pub n_modes: usize,
    pub gamma: f64,
    pub amplitude: f64,
    pub t_end: f64,
}

impl Default for MmsSetup {
    fn default() -> Self {
        Self {
            length: std::f64::consts::PI,
            width: std::f64::consts::PI,
            n_modes: 4,
            gamma: 1.0,
            amplitude: 1.0,
            t_end: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `nx` or `dt` of each level.
    pub levels: Vec<f64>,
    /// For space: error against the exact solution at each level. For time:
    /// difference between consecutive levels.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub min_order: f64,
}

fn solve(setup: &MmsSetup, nx: usize, dt: f64) -> Result<(ModalState, ManufacturedSolution, f64)> {
    let disc = Discretization::new(
        DomainKind::Rectangle,
        setup.length,
        setup.width,
        nx,
        setup.n_modes,
        0.0,
        true,
    )?;
    let params = PhysicalParams::new(setup.gamma);
    let mms = ManufacturedSolution::new(&disc, &params, setup.amplitude)?;
    let config = SolverConfig::new(dt, setup.t_end).with_diag_every(usize::MAX);
    let out = run_with_forcing(&disc, &mms.exact(0.0), &params, &config, Some(&mms))?;
    Ok((out.final_state, mms, disc.grid.h))
}

fn l2_distance(a: &ModalState, b: &ModalState, h: f64) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.l2_sq(h).sqrt()
}

fn check_levels(n: usize) -> Result<()> {
    if n < MIN_LEVELS {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least {MIN_LEVELS} levels, got {n}"
        )));
    }
    Ok(())
}

fn orders(errors: &[f64], steps: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, s)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect()
}

/// Smallest order; NaN when any order is undefined.
fn min_of(v: &[f64]) -> f64 {
    if v.iter().any(|o| o.is_nan()) {
        return f64::NAN;
    }
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Error against the exact solution at `t_end` for each `nx`.
pub fn mms_spatial(setup: &MmsSetup, nx_levels: &[usize], dt: f64) -> Result<ConvergenceReport> {
    check_levels(nx_levels.len())?;
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &nx in nx_levels {
        let (state, mms, h) = solve(setup, nx, dt)?;
        errors.push(l2_distance(&state, &mms.exact(state.t), h));
        hs.push(h);
    }
    let orders = orders(&errors, &hs);
    Ok(ConvergenceReport {
        levels: nx_levels.iter().map(|&n| n as f64).collect(),
        min_order: min_of(&orders),
        errors,
        orders,
    })
}

/// Self-convergence in time at fixed `nx`: differences of consecutive levels.
pub fn mms_temporal(setup: &MmsSetup, nx: usize, dt_levels: &[f64]) -> Result<ConvergenceReport> {
    check_levels(dt_levels.len())?;
    let mut finals = Vec::new();
    let mut h = 0.0;
    for &dt in dt_levels {
        let (state, _, hh) = solve(setup, nx, dt)?;
        finals.push(state);
        h = hh;
    }
    let errors: Vec<f64> = finals.windows(2).map(|w| l2_distance(&w[0], &w[1], h)).collect();
    let orders = orders(&errors, &dt_levels[..dt_levels.len() - 1]);
    Ok(ConvergenceReport {
        levels: dt_levels.to_vec(),
        min_order: min_of(&orders),
        errors,
        orders,
    })
}
