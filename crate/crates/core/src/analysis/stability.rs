//! Continuous dependence on the initial data: two runs from `u0` and
//! `u0 + delta v` and a Gronwall envelope on their difference `z`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_observed, PhysicalParams, SolverConfig};
use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;
use crate::geometry::{Discretization, ModalState};

/// Envelope constant `C` in `||z(t)||^2 <= ||z(0)||^2 exp(C int_0^t sum_i [1 + ||Lap u_i||^2])`,
/// fitted once by [`fit_gronwall_constant`] on the pair from
/// [`calibration_perturbation`] (rectangle `L = B = pi`, `gamma = 1`, unit
/// `rect_poly` data, `nx = 128`, 8 modes, `dt = 1e-3`, `theta = STABILITY_THETA`,
/// `delta = 1e-6`, `t <= 1`), rounded up and frozen.
pub const GRONWALL_C_HAT: f64 = -0.01655;

/// Implicit weight for the perturbation runs. Crank-Nicolson proper leaves
/// stiff modes undamped, so roundoff in them puts a floor of about `1e-8 ||z(0)||`
/// under `||z||`; a slightly off-centred weight damps it.
pub const STABILITY_THETA: f64 = 0.51;

/// Relative slack for roundoff in the envelope comparison.
pub const ENVELOPE_ROUNDOFF: f64 = 1e-9;

/// Allowed deviation of `||z_delta|| / ||z_{delta/2}||` from 2.
pub const LINEAR_RESPONSE_TOL: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct PerturbationPair {
    pub times: Vec<f64>,
    /// `||u_1 - u_2||^2` at the samples.
    pub z_sq: Vec<f64>,
    /// `int_0^t sum_i [1 + ||Lap u_i||^2] ds`, trapezoid over the samples.
    pub gronwall: Vec<f64>,
}

fn collect(
    disc: &Discretization,
    u0: &ModalState,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<(Vec<ModalState>, Vec<DiagnosticsRecord>)> {
    let mut states = Vec::new();
    let out = run_observed(disc, u0, params, config, None, &mut |s| states.push(s.clone()))?;
    Ok((states, out.series))
}

/// `x^3 (L-x)^3 omega_2(y)`, the shape used to fit [`GRONWALL_C_HAT`].
pub fn calibration_perturbation(disc: &Discretization) -> ModalState {
    shape(disc, 1.min(disc.n_modes() - 1), |x, l| x.powi(3) * (l - x).powi(3))
}

/// `x^2 (L-x)^4 omega_1(y)`, the shape the frozen constant is tested on.
pub fn experiment_perturbation(disc: &Discretization) -> ModalState {
    shape(disc, 0, |x, l| x * x * (l - x).powi(4))
}

fn shape(disc: &Discretization, mode: usize, f: impl Fn(f64, f64) -> f64) -> ModalState {
    let l = disc.domain.length;
    let mut s = ModalState::zeros(disc.n_modes(), disc.nx());
    for (v, x) in s.mode_mut(mode).iter_mut().zip(disc.grid.interior_nodes()) {
        *v = f(x, l);
    }
    s
}

pub fn perturbation_pair(
    disc: &Discretization,
    u0: &ModalState,
    v: &ModalState,
    delta: f64,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<PerturbationPair> {
    let mut u1 = u0.clone();
    u1.axpy(delta, v);
    let (s0, r0) = collect(disc, u0, params, config)?;
    let (s1, r1) = collect(disc, &u1, params, config)?;
    let h = disc.grid.h;
    let times: Vec<f64> = r0.iter().map(|r| r.t).collect();
    let z_sq = s0
        .iter()
        .zip(&s1)
        .map(|(a, b)| {
            let mut d = b.clone();
            d.axpy(-1.0, a);
            d.l2_sq(h)
        })
        .collect();
    let rate: Vec<f64> = r0.iter().zip(&r1).map(|(a, b)| 2.0 + a.lap_sq + b.lap_sq).collect();
    let mut gronwall = vec![0.0; times.len()];
    for i in 1..times.len() {
        gronwall[i] = gronwall[i - 1] + 0.5 * (times[i] - times[i - 1]) * (rate[i] + rate[i - 1]);
    }
    Ok(PerturbationPair { times, z_sq, gronwall })
}

/// Smallest `C` for which the envelope holds at every sample of `pair`.
pub fn fit_gronwall_constant(pair: &PerturbationPair) -> f64 {
    let z0 = pair.z_sq[0];
    pair.z_sq
        .iter()
        .zip(&pair.gronwall)
        .skip(1)
        .filter(|(_, g)| **g > 0.0)
        .map(|(z, g)| (z / z0).ln() / g)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub delta: f64,
    pub c_hat: f64,
    /// `sup_t ||z(t)|| / ||z(0)||`.
    pub max_amplification: f64,
    /// `max_t ||z(t)||^2 / envelope(t)`.
    pub max_envelope_ratio: f64,
    pub envelope_ok: bool,
    /// `max_t | ||z_delta|| / ||z_{delta/2}|| / 2 - 1 |`.
    pub linear_response_deviation: f64,
    pub linear_response_ok: bool,
    /// Set when either run blew up; nothing is asserted then.
    pub inconclusive: bool,
    pub pass: bool,
}

/// Runs the pairs for `delta` and `delta / 2` and checks the envelope with the
/// frozen constant `c_hat` and the linear response between the two.
pub fn stability_experiment(
    disc: &Discretization,
    u0: &ModalState,
    v: &ModalState,
    delta: f64,
    params: &PhysicalParams,
    config: &SolverConfig,
    c_hat: f64,
) -> Result<StabilityReport> {
    let inconclusive = || StabilityReport {
        delta,
        c_hat,
        max_amplification: f64::NAN,
        max_envelope_ratio: f64::NAN,
        envelope_ok: false,
        linear_response_deviation: f64::NAN,
        linear_response_ok: false,
        inconclusive: true,
        pass: false,
    };
    let full = match perturbation_pair(disc, u0, v, delta, params, config) {
        Err(Error::BlowUp(_)) => return Ok(inconclusive()),
        r => r?,
    };
    let half = match perturbation_pair(disc, u0, v, 0.5 * delta, params, config) {
        Err(Error::BlowUp(_)) => return Ok(inconclusive()),
        r => r?,
    };
    let z0 = full.z_sq[0];
    let mut max_amp = 0.0f64;
    let mut max_env = 0.0f64;
    let mut dev = 0.0f64;
    for i in 0..full.times.len() {
        let z = full.z_sq[i];
        if z0 > 0.0 {
            max_amp = max_amp.max((z / z0).sqrt());
            max_env = max_env.max(z / (z0 * (c_hat * full.gronwall[i]).exp()));
        } else {
            max_amp = max_amp.max(if z == 0.0 { 0.0 } else { f64::INFINITY });
            max_env = max_env.max(if z == 0.0 { 0.0 } else { f64::INFINITY });
        }
        let zh = half.z_sq[i];
        if zh > 0.0 {
            dev = dev.max(((z / zh).sqrt() / 2.0 - 1.0).abs());
        } else if z != 0.0 {
            dev = f64::INFINITY;
        }
    }
    let envelope_ok = max_env <= 1.0 + ENVELOPE_ROUNDOFF;
    let linear_response_ok = dev <= LINEAR_RESPONSE_TOL;
    Ok(StabilityReport {
        delta,
        c_hat,
        max_amplification: max_amp,
        max_envelope_ratio: max_env,
        envelope_ok,
        linear_response_deviation: dev,
        linear_response_ok,
        inconclusive: false,
        pass: envelope_ok && linear_response_ok && max_amp.is_finite(),
    })
}
