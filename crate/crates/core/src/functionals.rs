//! Scalar functionals of a solution: norms, traces, suprema, weighted
//! energies and the initial-data functional `J_w`.
//!
//! y-integrals use Parseval on the sine coefficients; x-integrals use the
//! trapezoid rule on the nodes `0..=nx+1`. Derivatives in x come from
//! [`NodalDifferentiator`], which assumes only the nodal values and therefore
//! applies to fields that do not satisfy the clamped conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Grid, ModalState, PhysicalField, SineBasis};
use crate::stencil::{with_zero_ends, NodalDifferentiator};

/// Largest exponent `k x` evaluated without a log offset.
pub const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub lap_sq: f64,
    pub bilap_sq: f64,
    pub trace_uxx0: f64,
    pub sup_sq: f64,
    pub uy_sq: f64,
    pub uyy_sq: f64,
    /// `None` when no earlier state was available for the difference quotient.
    pub ut_sq: Option<f64>,
    pub l4_4: f64,
    pub weighted: f64,
    pub weighted_x: f64,
    pub weighted_y: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.l2_sq,
            self.grad_sq,
            self.lap_sq,
            self.bilap_sq,
            self.trace_uxx0,
            self.sup_sq,
            self.uy_sq,
            self.uyy_sq,
            self.l4_4,
            self.weighted,
            self.weighted_x,
            self.weighted_y,
        ]
        .iter()
        .chain(self.ut_sq.as_ref())
        .all(|v| v.is_finite())
    }
}

pub type DiagnosticsSeries = Vec<DiagnosticsRecord>;

/// `(e^{kx}, f g)` stored as `value * e^{log_offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedInner {
    pub value: f64,
    pub log_offset: f64,
}

impl WeightedInner {
    pub fn total(&self) -> f64 {
        self.value * self.log_offset.exp()
    }
}

/// Exponential weight on the x nodes, shifted so the largest exponent stays
/// below [`MAX_WEIGHT_EXPONENT`].
#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub k: f64,
    pub log_offset: f64,
    pub values: Vec<f64>,
}

impl WeightProfile {
    pub fn new(k: f64, grid: &Grid) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight exponent must be >= 0, got {k}"
            )));
        }
        let x_max = grid.x(grid.nx + 1);
        let log_offset = (k * x_max - MAX_WEIGHT_EXPONENT).max(0.0);
        let values = grid.all_nodes().iter().map(|x| (k * x - log_offset).exp()).collect();
        Ok(Self { k, log_offset, values })
    }
}

/// Precomputed pieces shared by every functional evaluation on one grid.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub domain: Domain,
    pub grid: Grid,
    pub basis: SineBasis,
    diff: NodalDifferentiator,
    weight: WeightProfile,
    sup_rows: Vec<Vec<f64>>,
}

/// Nodal x-derivatives `g, g', ..., g^(5)` of one mode, boundary nodes included.
#[derive(Debug, Clone)]
pub struct ModeDerivatives {
    pub d: [Vec<f64>; 6],
}

impl Evaluator {
    pub fn new(domain: &Domain, grid: &Grid, basis: &SineBasis) -> Result<Self> {
        if basis.n_modes() != grid.n_modes {
            return Err(Error::Dimension {
                expected: format!("{} modes", grid.n_modes),
                found: basis.n_modes().to_string(),
            });
        }
        let weight = WeightProfile::new(domain.weight_k, grid)?;
        // equispaced y points at twice the collocation density for the supremum
        let ny_sup = 2 * basis.ny() + 1;
        let b = basis.width();
        let sup_rows = (0..basis.n_modes())
            .map(|m| {
                (1..=ny_sup)
                    .map(|q| basis.omega(m, q as f64 * b / (ny_sup + 1) as f64))
                    .collect()
            })
            .collect();
        Ok(Self {
            domain: *domain,
            grid: *grid,
            basis: basis.clone(),
            diff: NodalDifferentiator::new(grid.nx + 2, grid.h),
            weight,
            sup_rows,
        })
    }

    pub fn weight(&self) -> &WeightProfile {
        &self.weight
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    /// Trapezoid rule over all nodes.
    pub fn integrate(&self, nodal: &[f64]) -> f64 {
        crate::quadrature::trapezoid(nodal, self.grid.h)
    }

    pub fn mode_derivatives(&self, interior: &[f64]) -> ModeDerivatives {
        let g = with_zero_ends(interior);
        let d = std::array::from_fn(|p| self.diff.derivative(p, &g));
        ModeDerivatives { d }
    }

    /// Nodal x-derivative of `order` of interior values with zero ends.
    pub fn derivative(&self, order: usize, interior: &[f64]) -> Vec<f64> {
        self.diff.derivative(order, &with_zero_ends(interior))
    }

    fn check(&self, state: &ModalState) -> Result<()> {
        state.check_shape(self.grid.n_modes, self.grid.nx)
    }

    /// `(e^{kx}, f g)` for modal fields with the given exponent.
    pub fn weighted_inner(&self, k: f64, f: &ModalState, g: &ModalState) -> Result<WeightedInner> {
        self.check(f)?;
        self.check(g)?;
        let profile = if k == self.weight.k {
            self.weight.clone()
        } else {
            WeightProfile::new(k, &self.grid)?
        };
        let mut value = 0.0;
        for (fm, gm) in f.modes().zip(g.modes()) {
            let prod: Vec<f64> = with_zero_ends(fm)
                .iter()
                .zip(&with_zero_ends(gm))
                .zip(&profile.values)
                .map(|((a, b), w)| a * b * w)
                .collect();
            value += self.integrate(&prod);
        }
        Ok(WeightedInner {
            value,
            log_offset: profile.log_offset,
        })
    }

    /// Values on the Gauss points in y, one line per x node (ends included).
    fn physical_lines(&self, nodal: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n_nodes = self.grid.nx + 2;
        let ny = self.basis.ny();
        let mut coeffs = vec![0.0; self.basis.n_modes()];
        (0..n_nodes)
            .map(|i| {
                for (c, g) in coeffs.iter_mut().zip(nodal) {
                    *c = g[i];
                }
                let mut out = vec![0.0; ny];
                self.basis.synthesize_line(&coeffs, &mut out);
                out
            })
            .collect()
    }

    fn y_integral(&self, line: &[f64]) -> f64 {
        line.iter().zip(self.basis.weights()).map(|(v, w)| v * w).sum()
    }

    pub fn compute_record(&self, state: &ModalState, prev: Option<&ModalState>) -> Result<DiagnosticsRecord> {
        self.check(state)?;
        if !state.is_finite() {
            return Err(Error::NonFinite(format!("state at t = {}", state.t)));
        }
        let lambdas = self.basis.lambdas();
        let w = &self.weight;
        let scale = w.log_offset.exp();
        let mut rec = DiagnosticsRecord {
            t: state.t,
            ..Default::default()
        };
        let mut nodal = Vec::with_capacity(state.n_modes());
        for (m, g) in state.modes().enumerate() {
            let lam = lambdas[m];
            let [g0, g1, g2, _, g4, _] = self.mode_derivatives(g).d;
            let sq =
                |f: &dyn Fn(usize) -> f64| self.integrate(&(0..g0.len()).map(|i| f(i).powi(2)).collect::<Vec<_>>());
            let l2 = sq(&|i| g0[i]);
            let gx = sq(&|i| g1[i]);
            rec.l2_sq += l2;
            rec.grad_sq += gx + lam * l2;
            rec.lap_sq += sq(&|i| g2[i] - lam * g0[i]);
            rec.bilap_sq += sq(&|i| g4[i] - 2.0 * lam * g2[i] + lam * lam * g0[i]);
            rec.trace_uxx0 += g2[0] * g2[0];
            rec.uy_sq += lam * l2;
            rec.uyy_sq += lam * lam * l2;
            let wl2 = self.integrate(&(0..g0.len()).map(|i| w.values[i] * g0[i] * g0[i]).collect::<Vec<_>>());
            let wx = self.integrate(&(0..g0.len()).map(|i| w.values[i] * g1[i] * g1[i]).collect::<Vec<_>>());
            rec.weighted += scale * wl2;
            rec.weighted_x += scale * wx;
            rec.weighted_y += scale * lam * wl2;
            nodal.push(g0);
        }
        // quartic integral at the Gauss points
        let lines = self.physical_lines(&nodal);
        let l4: Vec<f64> = lines
            .iter()
            .map(|line| self.y_integral(&line.iter().map(|u| u.powi(4)).collect::<Vec<_>>()))
            .collect();
        rec.l4_4 = self.integrate(&l4);
        rec.sup_sq = self.sup_sq(state);
        if let Some(p) = prev {
            self.check(p)?;
            let dt = state.t - p.t;
            if dt > 0.0 {
                let diff: f64 = state
                    .modes()
                    .zip(p.modes())
                    .map(|(a, b)| {
                        let d: Vec<f64> = with_zero_ends(a)
                            .iter()
                            .zip(&with_zero_ends(b))
                            .map(|(x, y)| (x - y).powi(2))
                            .collect();
                        self.integrate(&d)
                    })
                    .sum();
                rec.ut_sq = Some(diff / (dt * dt));
            }
        }
        Ok(rec)
    }

    /// `sup u^2` over the x nodes and a refined equispaced y grid.
    pub fn sup_sq(&self, state: &ModalState) -> f64 {
        let ny = self.sup_rows[0].len();
        let mut best = 0.0f64;
        let mut line = vec![0.0; ny];
        for i in 0..state.nx() {
            line.iter_mut().for_each(|v| *v = 0.0);
            for (m, row) in self.sup_rows.iter().enumerate() {
                let c = state.mode(m)[i];
                if c != 0.0 {
                    for (v, o) in line.iter_mut().zip(row) {
                        *v += c * o;
                    }
                }
            }
            best = line.iter().fold(best, |b, v| b.max(v * v));
        }
        best
    }

    pub fn compute_record_physical(&self, field: &PhysicalField, t: f64) -> Result<DiagnosticsRecord> {
        let mut state = crate::geometry::forward_sine_transform(field, &self.basis)?;
        state.t = t;
        self.compute_record(&state, None)
    }

    /// `J_w` split into its quadratic and quartic parts.
    pub fn j_w(&self, u0: &ModalState, weighted: bool) -> Result<JwParts> {
        self.check(u0)?;
        if !u0.is_finite() {
            return Err(Error::NonFinite("initial data".into()));
        }
        let lambdas = self.basis.lambdas();
        let n_nodes = self.grid.nx + 2;
        let wts: Vec<f64> = if weighted {
            let s = self.weight.log_offset.exp();
            self.weight.values.iter().map(|w| w * s).collect()
        } else {
            vec![1.0; n_nodes]
        };
        let mut quadratic = 0.0;
        let mut nodal = Vec::new();
        let mut nodal_x = Vec::new();
        for (m, g) in u0.modes().enumerate() {
            let lam = lambdas[m];
            let [g0, g1, g2, _, g4, g5] = self.mode_derivatives(g).d;
            let integrand: Vec<f64> = (0..n_nodes)
                .map(|i| {
                    let bilap = g4[i] - 2.0 * lam * g2[i] + lam * lam * g0[i];
                    let lap = g2[i] - lam * g0[i];
                    wts[i] * (bilap * bilap + lap * lap + g5[i] * g5[i])
                })
                .collect();
            quadratic += self.integrate(&integrand);
            nodal.push(g0);
            nodal_x.push(g1);
        }
        let u = self.physical_lines(&nodal);
        let ux = self.physical_lines(&nodal_x);
        let quart: Vec<f64> = (0..n_nodes)
            .map(|i| {
                let prod: Vec<f64> = u[i].iter().zip(&ux[i]).map(|(a, b)| (a * b).powi(2)).collect();
                wts[i] * self.y_integral(&prod)
            })
            .collect();
        let quartic = self.integrate(&quart);
        let parts = JwParts { quadratic, quartic };
        if !parts.total().is_finite() {
            return Err(Error::NonFinite("J_w".into()));
        }
        Ok(parts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JwParts {
    /// `|D^4 u0|^2 + |Delta u0|^2 + |D_x^5 u0|^2` terms.
    pub quadratic: f64,
    /// The `u0^2 u0x^2` term.
    pub quartic: f64,
}

impl JwParts {
    pub fn total(&self) -> f64 {
        self.quadratic + self.quartic
    }
}
