//! Numerical checks of the functional inequalities used by the estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{DiagnosticsRecord, Evaluator};
use crate::geometry::ModalState;
use crate::quadrature::trapezoid;
use crate::stencil::NodalDifferentiator;

/// Relative tolerance floor of every check.
pub const BASE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Absolute tolerance on the margin.
    pub tol: f64,
    pub constants: Vec<(String, f64)>,
    pub pass: bool,
}

impl InequalityReport {
    /// `lhs <= rhs` with tolerance `tol_rel * max(|lhs|, |rhs|)`, so the
    /// verdict does not change when both sides are scaled together.
    pub fn new(name: &str, lhs: f64, rhs: f64, tol_rel: f64, constants: Vec<(String, f64)>) -> Self {
        let margin = rhs - lhs;
        let tol = tol_rel * lhs.abs().max(rhs.abs());
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            tol,
            constants,
            pass: margin >= -tol && margin.is_finite(),
        }
    }

    /// `margin / max(|lhs|, |rhs|)`, zero when both sides vanish.
    pub fn relative_margin(&self) -> f64 {
        let s = self.lhs.abs().max(self.rhs.abs());
        if s > 0.0 {
            self.margin / s
        } else {
            0.0
        }
    }
}

/// Tolerance for inequalities evaluated with second-order differences.
pub fn discretization_tol(h: f64) -> f64 {
    BASE_TOL + 2.0 * h * h
}

fn check_ends(nodal: &[f64]) -> Result<f64> {
    if nodal.len() < 9 {
        return Err(Error::Precondition(format!(
            "profile needs at least 9 nodes, got {}",
            nodal.len()
        )));
    }
    let peak = nodal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ends = nodal[0].abs().max(nodal[nodal.len() - 1].abs());
    if ends > 1e-12 * peak.max(f64::MIN_POSITIVE) && ends > 0.0 {
        return Err(Error::Precondition(format!(
            "profile must vanish at both ends (|v| = {ends:e} at an end)"
        )));
    }
    Ok(peak)
}

/// Norms `||D^p v||` of a 1-D nodal profile on `[0, L]`, `p = 0..=5`.
pub fn profile_norms(nodal: &[f64], length: f64) -> [f64; 6] {
    let h = length / (nodal.len() - 1) as f64;
    let diff = NodalDifferentiator::new(nodal.len(), h);
    std::array::from_fn(|p| {
        let d = diff.derivative(p, nodal);
        trapezoid(&d.iter().map(|v| v * v).collect::<Vec<_>>(), h).sqrt()
    })
}

/// Steklov: `(pi^2 / L^2) ||v||^2 <= ||v_x||^2` for `v(0) = v(L) = 0`.
pub fn check_steklov(nodal: &[f64], length: f64) -> Result<InequalityReport> {
    check_ends(nodal)?;
    let n = profile_norms(nodal, length);
    let c = PI * PI / (length * length);
    let h = length / (nodal.len() - 1) as f64;
    Ok(InequalityReport::new(
        "steklov",
        c * n[0] * n[0],
        n[1] * n[1],
        discretization_tol(h),
        vec![("pi2_over_l2".into(), c)],
    ))
}

/// Interpolation `||D^i u|| <= A1 ||D^m u||^{i/m} ||u||^{1-i/m} + A2 ||u||`.
pub fn check_nirenberg(nodal: &[f64], length: f64, i: usize, m: usize, a1: f64, a2: f64) -> Result<InequalityReport> {
    if !(i < m && m <= 5) {
        return Err(Error::InvalidParameter(format!(
            "need i < m <= 5, got i = {i}, m = {m}"
        )));
    }
    check_ends(nodal)?;
    let n = profile_norms(nodal, length);
    let r = i as f64 / m as f64;
    let rhs = a1 * n[m].powf(r) * n[0].powf(1.0 - r) + a2 * n[0];
    let h = length / (nodal.len() - 1) as f64;
    Ok(InequalityReport::new(
        &format!("nirenberg_{i}_{m}"),
        n[i],
        rhs,
        discretization_tol(h),
        vec![("a1".into(), a1), ("a2".into(), a2)],
    ))
}

/// `||D^i u|| / (||D^m u||^{i/m} ||u||^{1-i/m})`, the smallest admissible `A1` when `A2 = 0`.
pub fn nirenberg_ratio(nodal: &[f64], length: f64, i: usize, m: usize) -> f64 {
    let n = profile_norms(nodal, length);
    let r = i as f64 / m as f64;
    let denom = n[m].powf(r) * n[0].powf(1.0 - r);
    if denom > 0.0 {
        n[i] / denom
    } else {
        0.0
    }
}

/// The four bounds of the Poincare-type lemma:
/// `a ||f||^2 <= ||grad f||^2`, `a^2 ||f||^2 <= ||Lap f||^2`,
/// `a ||grad f||^2 <= ||Lap f||^2`, `a^2 ||Lap f||^2 <= ||Lap^2 f||^2`.
pub fn check_lemma42(rec: &DiagnosticsRecord, a: f64, h: f64) -> [InequalityReport; 4] {
    let tol = discretization_tol(h);
    let c = || vec![("a".to_string(), a)];
    [
        InequalityReport::new("lemma42_grad", a * rec.l2_sq, rec.grad_sq, tol, c()),
        InequalityReport::new("lemma42_lap", a * a * rec.l2_sq, rec.lap_sq, tol, c()),
        InequalityReport::new("lemma42_grad_lap", a * rec.grad_sq, rec.lap_sq, tol, c()),
        InequalityReport::new("lemma42_bilap", a * a * rec.lap_sq, rec.bilap_sq, tol, c()),
    ]
}

/// `C_s = 1 + 1/a + 1/a^2`.
pub fn sobolev_constant(a: f64) -> f64 {
    1.0 + 1.0 / a + 1.0 / (a * a)
}

/// `sup f^2 <= C_s ||Lap f||^2`.
pub fn check_lemma43(rec: &DiagnosticsRecord, a: f64, h: f64) -> InequalityReport {
    let cs = sobolev_constant(a);
    InequalityReport::new(
        "lemma43",
        rec.sup_sq,
        cs * rec.lap_sq,
        discretization_tol(h),
        vec![("a".into(), a), ("c_s".into(), cs)],
    )
}

/// Ladyzhenskaya: `||f||_{L^4}^2 <= 2 ||f|| ||grad f||`.
pub fn check_ladyzhenskaya(rec: &DiagnosticsRecord, h: f64) -> InequalityReport {
    InequalityReport::new(
        "ladyzhenskaya",
        rec.l4_4.sqrt(),
        2.0 * (rec.l2_sq * rec.grad_sq).sqrt(),
        discretization_tol(h),
        vec![("c".into(), 2.0)],
    )
}

/// The field checks of one modal state.
pub fn check_field(ev: &Evaluator, state: &ModalState) -> Result<Vec<InequalityReport>> {
    let rec = ev.compute_record(state, None)?;
    let a = ev.domain.poincare_a();
    let h = ev.h();
    let mut out = check_lemma42(&rec, a, h).to_vec();
    out.push(check_lemma43(&rec, a, h));
    out.push(check_ladyzhenskaya(&rec, h));
    Ok(out)
}
