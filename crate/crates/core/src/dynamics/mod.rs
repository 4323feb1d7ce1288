//! Time integration of the Galerkin mode system
//! `g_t + L_j g_j + N_j(g) = f_j`.
//!
//! The linear part is advanced with the theta scheme (Crank-Nicolson by
//! default), the nonlinearity with second-order Adams-Bashforth. The first
//! `startup_steps` steps are each replaced by two backward-Euler half steps,
//! which damp the stiff components excited by initial data that satisfies
//! the boundary conditions only to low order.

mod initial;
mod manufactured;

pub use initial::{make_initial, Compatibility, InitialData, PolyTerm, Profile, Smallness};
pub use manufactured::{ManufacturedSolution, Polynomial};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{DiagnosticsSeries, Evaluator};
use crate::geometry::{inverse_sine_transform, Discretization, ModalState, PhysicalField, TripleProducts};
use crate::operators::{
    build_mode_operator, solve_implicit, BandedOperator, BoundarySpec, DerivativeSet, ModeOperator,
};

/// `||u||^2` may grow by at most this factor over `||u_0||^2` before a run is
/// declared to have blown up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Coefficient of `Delta u`.
    pub gamma: f64,
    /// Whether `u u_x` is included.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

fn yes() -> bool {
    true
}

impl PhysicalParams {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, nonlinear: true }
    }

    pub fn linear(gamma: f64) -> Self {
        Self {
            gamma,
            nonlinear: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Diagnostics are sampled every this many steps.
    #[serde(default = "default_diag_every")]
    pub diag_every: usize,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "default_startup")]
    pub startup_steps: usize,
}

fn default_theta() -> f64 {
    0.5
}

fn default_diag_every() -> usize {
    10
}

fn default_startup() -> usize {
    2
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            theta: default_theta(),
            diag_every: default_diag_every(),
            dealias: true,
            startup_steps: default_startup(),
        }
    }

    pub fn with_diag_every(mut self, every: usize) -> Self {
        self.diag_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [1/2, 1], got {}",
                self.theta
            )));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidParameter("diag_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; `t_end` is rounded to the nearest multiple of `dt`.
    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// A right-hand side `f_j(x_i, t)` given per mode.
pub trait Forcing: Sync {
    /// Overwrites `out` with the forcing at time `t`.
    fn eval(&self, t: f64, out: &mut ModalState);
}

#[derive(Debug, Clone)]
pub struct BlowUp {
    pub t: f64,
    pub step: usize,
    pub reason: String,
    /// Diagnostics sampled before the failure.
    pub series: DiagnosticsSeries,
    /// The last state that passed the checks.
    pub last_state: ModalState,
}

impl std::fmt::Display for BlowUp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "blow-up at t = {} (step {}): {}", self.t, self.step, self.reason)
    }
}

/// `N_j = (u u_x, omega_j)` by the pseudo-spectral route: both factors are
/// synthesized on the Gauss points in y, multiplied, and projected back.
/// `u_x` uses the banded first-derivative operator.
pub fn nonlinear_term(state: &ModalState, d1: &BandedOperator, disc: &Discretization) -> ModalState {
    let nx = state.nx();
    let n = state.n_modes();
    let basis = &disc.basis;
    let ny = basis.ny();
    let mut ux = ModalState::zeros(n, nx);
    for m in 0..n {
        d1.matrix.matvec_into(state.mode(m), ux.mode_mut(m));
    }
    let mut x_major = vec![0.0; nx * n];
    x_major.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let gather = |s: &ModalState| (0..n).map(|m| s.mode(m)[i]).collect::<Vec<_>>();
        let mut u = vec![0.0; ny];
        let mut v = vec![0.0; ny];
        basis.synthesize_line(&gather(state), &mut u);
        basis.synthesize_line(&gather(&ux), &mut v);
        for (a, b) in u.iter_mut().zip(&v) {
            *a *= b;
        }
        basis.project_line(&u, out);
    });
    let mut out = ModalState::zeros(n, nx);
    out.t = state.t;
    for (i, row) in x_major.chunks_exact(n).enumerate() {
        for (m, &v) in row.iter().enumerate() {
            out.mode_mut(m)[i] = v;
        }
    }
    out
}

/// Reference evaluation `N_j = sum_{k,l} a_{klj} g_k (g_l)_x` by direct
/// contraction with the triple-product tensor.
pub fn nonlinear_term_tensor(state: &ModalState, d1: &BandedOperator, a: &TripleProducts) -> ModalState {
    let nx = state.nx();
    let n = state.n_modes();
    let ux: Vec<Vec<f64>> = (0..n).map(|m| d1.apply(state.mode(m))).collect();
    let mut out = ModalState::zeros(n, nx);
    out.t = state.t;
    for j in 0..n {
        let o = out.mode_mut(j);
        for k in 0..n {
            let gk = state.mode(k);
            for (l, ul) in ux.iter().enumerate() {
                let c = a.get(k, l, j);
                if c == 0.0 {
                    continue;
                }
                for i in 0..nx {
                    o[i] += c * gk[i] * ul[i];
                }
            }
        }
    }
    out
}

/// Factorized operators and history for advancing one run.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    params: PhysicalParams,
    config: SolverConfig,
    ops: Vec<ModeOperator>,
    derivs: DerivativeSet,
    forcing: Option<&'a dyn Forcing>,
    prev_nonlinear: Option<ModalState>,
    steps_taken: usize,
    /// Implicit solves whose relative residual exceeded the warning level.
    pub solve_warnings: usize,
    pub max_solve_residual: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        disc: &'a Discretization,
        params: PhysicalParams,
        config: SolverConfig,
        forcing: Option<&'a dyn Forcing>,
    ) -> Result<Self> {
        config.validate()?;
        if !params.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite, got {}",
                params.gamma
            )));
        }
        let derivs = DerivativeSet::new(&disc.grid, BoundarySpec::from(disc.domain.kind))?;
        let ops = disc
            .basis
            .lambdas()
            .iter()
            .enumerate()
            .map(|(m, &lam)| build_mode_operator(m, lam, params.gamma, &derivs, config.dt, config.theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            disc,
            params,
            config,
            ops,
            derivs,
            forcing,
            prev_nonlinear: None,
            steps_taken: 0,
            solve_warnings: 0,
            max_solve_residual: 0.0,
        })
    }

    pub fn derivatives(&self) -> &DerivativeSet {
        &self.derivs
    }

    pub fn mode_operators(&self) -> &[ModeOperator] {
        &self.ops
    }

    fn nonlinear(&self, state: &ModalState) -> ModalState {
        if self.params.nonlinear {
            nonlinear_term(state, self.derivs.get(1), self.disc)
        } else {
            ModalState::zeros(state.n_modes(), state.nx())
        }
    }

    fn forcing_at(&self, t: f64, n: usize, nx: usize) -> Option<ModalState> {
        self.forcing.map(|f| {
            let mut out = ModalState::zeros(n, nx);
            f.eval(t, &mut out);
            out
        })
    }

    /// Solves every mode in parallel; `rhs` is overwritten with the solution.
    fn solve_all(&mut self, rhs: &mut ModalState, half_step: bool) -> Result<()> {
        let nx = rhs.nx();
        let results: Vec<Result<(f64, bool)>> = self
            .ops
            .par_iter()
            .zip(rhs.coeffs_mut().par_chunks_mut(nx))
            .map(|(op, chunk)| {
                let s = if half_step {
                    op.solve_half_step(chunk)?
                } else {
                    solve_implicit(op, chunk)?
                };
                chunk.copy_from_slice(&s.solution);
                Ok((s.residual, s.quality_warning))
            })
            .collect();
        for r in results {
            let (res, warn) = r?;
            self.max_solve_residual = self.max_solve_residual.max(res);
            self.solve_warnings += warn as usize;
        }
        Ok(())
    }

    /// Backward-Euler half step with explicit Euler on the nonlinearity.
    fn half_step(&mut self, state: &mut ModalState) -> Result<()> {
        let half = 0.5 * self.config.dt;
        let (n, nx) = (state.n_modes(), state.nx());
        let nl = self.nonlinear(state);
        let mut rhs = state.clone();
        rhs.axpy(-half, &nl);
        if let Some(f) = self.forcing_at(state.t + half, n, nx) {
            rhs.axpy(half, &f);
        }
        self.solve_all(&mut rhs, true)?;
        rhs.t = state.t + half;
        *state = rhs;
        Ok(())
    }

    /// Advances `state` by one step of `dt`.
    pub fn step(&mut self, state: &mut ModalState) -> Result<()> {
        let dt = self.config.dt;
        let t0 = state.t;
        let (n, nx) = (state.n_modes(), state.nx());
        let nl = self.nonlinear(state);
        if self.steps_taken < self.config.startup_steps {
            self.half_step(state)?;
            self.half_step(state)?;
        } else {
            let mut rhs = ModalState::zeros(n, nx);
            for (m, op) in self.ops.iter().enumerate() {
                rhs.mode_mut(m).copy_from_slice(&op.explicit_part(state.mode(m)));
            }
            match &self.prev_nonlinear {
                Some(prev) => {
                    rhs.axpy(-1.5 * dt, &nl);
                    rhs.axpy(0.5 * dt, prev);
                }
                None => rhs.axpy(-dt, &nl),
            }
            let theta = self.config.theta;
            if let Some(f) = self.forcing_at(t0, n, nx) {
                rhs.axpy((1.0 - theta) * dt, &f);
            }
            if let Some(f) = self.forcing_at(t0 + dt, n, nx) {
                rhs.axpy(theta * dt, &f);
            }
            self.solve_all(&mut rhs, false)?;
            *state = rhs;
        }
        state.t = t0 + dt;
        self.prev_nonlinear = Some(nl);
        self.steps_taken += 1;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub series: DiagnosticsSeries,
    pub final_state: ModalState,
    pub steps: usize,
    pub solve_warnings: usize,
    pub max_solve_residual: f64,
}

impl SimulationOutput {
    pub fn final_field(&self, disc: &Discretization) -> Result<PhysicalField> {
        inverse_sine_transform(&self.final_state, &disc.basis)
    }
}

pub fn run_simulation(
    disc: &Discretization,
    initial: &InitialData,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<SimulationOutput> {
    run_with_forcing(disc, &initial.state, params, config, None)
}

/// Integrates from `u0` to `config.t_end`, sampling diagnostics at step 0,
/// every `diag_every` steps, and at the final step.
pub fn run_with_forcing(
    disc: &Discretization,
    u0: &ModalState,
    params: &PhysicalParams,
    config: &SolverConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<SimulationOutput> {
    run_observed(disc, u0, params, config, forcing, &mut |_| {})
}

/// As [`run_with_forcing`], calling `observer` with the state at every sample.
pub fn run_observed(
    disc: &Discretization,
    u0: &ModalState,
    params: &PhysicalParams,
    config: &SolverConfig,
    forcing: Option<&dyn Forcing>,
    observer: &mut dyn FnMut(&ModalState),
) -> Result<SimulationOutput> {
    u0.check_shape(disc.n_modes(), disc.nx())?;
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let evaluator = Evaluator::new(&disc.domain, &disc.grid, &disc.basis)?;
    let mut stepper = Stepper::new(disc, *params, *config, forcing)?;
    let n_steps = config.n_steps();
    let h = disc.grid.h;
    let limit = BLOW_UP_FACTOR * u0.l2_sq(h);

    let mut state = u0.clone();
    let mut series = vec![evaluator.compute_record(&state, None)?];
    observer(&state);
    let mut last_sample = state.clone();
    for step in 1..=n_steps {
        let before = state.clone();
        let blow_up = |reason: String, t: f64, series: DiagnosticsSeries, last: ModalState| {
            Error::BlowUp(Box::new(BlowUp {
                t,
                step,
                reason,
                series,
                last_state: last,
            }))
        };
        match stepper.step(&mut state) {
            Ok(()) => {}
            Err(Error::NonFinite(msg)) => return Err(blow_up(msg, before.t, series, before)),
            Err(e) => return Err(e),
        }
        if !state.is_finite() {
            return Err(blow_up("non-finite state".into(), state.t, series, before));
        }
        let l2 = state.l2_sq(h);
        if limit > 0.0 && l2 > limit {
            return Err(blow_up(
                format!("||u||^2 = {l2:e} exceeds {BLOW_UP_FACTOR:e} times its initial value"),
                state.t,
                series,
                before,
            ));
        }
        if step % config.diag_every == 0 || step == n_steps {
            series.push(evaluator.compute_record(&state, Some(&last_sample))?);
            observer(&state);
            last_sample = state.clone();
        }
    }
    Ok(SimulationOutput {
        series,
        final_state: state,
        steps: n_steps,
        solve_warnings: stepper.solve_warnings,
        max_solve_residual: stepper.max_solve_residual,
    })
}
