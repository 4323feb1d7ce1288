//! Initial data compatible with the boundary conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{Evaluator, JwParts};
use crate::geometry::{Discretization, DomainKind, ModalState};

/// One term `weight * x^2 (L - x)^3 * sin(mode * pi * y / B)`; `mode` starts at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub mode: usize,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `sum weight * x^2 (L - x)^3 sin(mode pi y / B)`.
    RectPoly { terms: Vec<PolyTerm> },
    /// `x^2 e^{-sigma x} sin(mode pi y / B)`.
    StripExp { sigma: f64, mode: usize },
}

impl Profile {
    pub fn rect_poly(mode: usize) -> Self {
        Profile::RectPoly {
            terms: vec![PolyTerm { mode, weight: 1.0 }],
        }
    }

    fn modes(&self) -> Vec<usize> {
        match self {
            Profile::RectPoly { terms } => terms.iter().map(|t| t.mode).collect(),
            Profile::StripExp { mode, .. } => vec![*mode],
        }
    }

    /// x-profile and its first two derivatives.
    fn x_profile(&self, length: f64) -> Box<dyn Fn(f64) -> [f64; 3]> {
        match self {
            Profile::RectPoly { .. } => Box::new(move |x| {
                let r = length - x;
                [
                    x * x * r.powi(3),
                    2.0 * x * r.powi(3) - 3.0 * x * x * r * r,
                    2.0 * r.powi(3) - 12.0 * x * r * r + 6.0 * x * x * r,
                ]
            }),
            Profile::StripExp { sigma, .. } => {
                let s = *sigma;
                Box::new(move |x| {
                    let e = (-s * x).exp();
                    [
                        x * x * e,
                        (2.0 * x - s * x * x) * e,
                        (2.0 - 4.0 * s * x + s * s * x * x) * e,
                    ]
                })
            }
        }
    }
}

/// Boundary residuals of the initial profile relative to its peak values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    /// `max(|u0(0)|, |u0_x(0)|)`, relative.
    pub left: f64,
    /// `max(|u0(L)|, |u0_x(L)|, |u0_xx(L)|)`, relative.
    pub right: f64,
    pub ok: bool,
}

/// Tolerance for the boundary residuals of an analytic profile.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// The half-strip smallness condition `(e^{kx}, u0^2) < 9 a^2 / (8 k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    pub weighted_energy: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub profile: Profile,
    pub amplitude: f64,
    pub state: ModalState,
    pub j_w: JwParts,
    /// `J_w` with the weight `e^{kx}`; present when `k > 0`.
    pub j_w_weighted: Option<JwParts>,
    pub weighted_energy: f64,
    pub compatibility: Compatibility,
    pub smallness: Option<Smallness>,
    /// Largest of `|u0|, |u0_x|, |u0_xx|` at the truncation point relative to the peak, on the half-strip.
    pub truncation: Option<f64>,
}

pub fn make_initial(profile: &Profile, amplitude: f64, disc: &Discretization) -> Result<InitialData> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be finite, got {amplitude}"
        )));
    }
    let n = disc.n_modes();
    for m in profile.modes() {
        if m == 0 || m > n {
            return Err(Error::InvalidParameter(format!("profile mode {m} outside 1..={n}")));
        }
    }
    let k = disc.domain.weight_k;
    if let Profile::StripExp { sigma, .. } = profile {
        if !(2.0 * sigma > k) {
            return Err(Error::InvalidParameter(format!(
                "strip_exp needs 2 sigma > k for a finite weighted energy (sigma = {sigma}, k = {k})"
            )));
        }
    }
    let (l, b) = (disc.domain.length, disc.domain.width);
    let f = profile.x_profile(l);
    let x = disc.grid.interior_nodes();
    let norm = (b / 2.0).sqrt();
    let mut state = ModalState::zeros(n, disc.nx());
    let terms: Vec<(usize, f64)> = match profile {
        Profile::RectPoly { terms } => terms.iter().map(|t| (t.mode, t.weight)).collect(),
        Profile::StripExp { mode, .. } => vec![(*mode, 1.0)],
    };
    for (mode, w) in terms {
        for (v, &xi) in state.mode_mut(mode - 1).iter_mut().zip(&x) {
            *v += amplitude * w * norm * f(xi)[0];
        }
    }

    // peaks of the profile and its derivatives on a fine sampling
    let fine = 8 * (disc.nx() + 1);
    let mut peak = [0.0f64; 3];
    for i in 0..=fine {
        let v = f(l * i as f64 / fine as f64);
        for d in 0..3 {
            peak[d] = peak[d].max(v[d].abs());
        }
    }
    let rel = |v: f64, d: usize| if peak[d] > 0.0 { v.abs() / peak[d] } else { 0.0 };
    let (f0, fl) = (f(0.0), f(l));
    let left = rel(f0[0], 0).max(rel(f0[1], 1));
    let right = (0..3).map(|d| rel(fl[d], d)).fold(0.0, f64::max);
    let compatibility = Compatibility {
        left,
        right,
        ok: left < COMPATIBILITY_TOL && right < COMPATIBILITY_TOL,
    };

    let ev = Evaluator::new(&disc.domain, &disc.grid, &disc.basis)?;
    let j_w = ev.j_w(&state, false)?;
    let j_w_weighted = if k > 0.0 { Some(ev.j_w(&state, true)?) } else { None };
    let weighted_energy = ev.weighted_inner(k, &state, &state)?.total();
    let (smallness, truncation) = match disc.domain.kind {
        DomainKind::HalfStrip => {
            let a = PI * PI / (b * b);
            let smallness = (k > 0.0).then(|| {
                let threshold = 9.0 * a * a / (8.0 * k);
                Smallness {
                    weighted_energy,
                    threshold,
                    satisfied: weighted_energy < threshold,
                }
            });
            (smallness, Some(right))
        }
        DomainKind::Rectangle => (None, None),
    };
    Ok(InitialData {
        profile: profile.clone(),
        amplitude,
        state,
        j_w,
        j_w_weighted,
        weighted_energy,
        compatibility,
        smallness,
        truncation,
    })
}
