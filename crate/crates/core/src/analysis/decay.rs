//! Energy identity residuals, decay-rate fitting and the decay theorems.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;
use crate::geometry::{Domain, DomainKind};

/// Slack on the pointwise envelope `E(t) <= (1 + tol) E(0) e^{-chi t}`.
pub const ENVELOPE_TOL: f64 = 0.05;

/// Largest `gamma` of the weighted half-strip theorem and largest weight exponent.
pub const STRIP_GAMMA_MAX: f64 = 0.125;
pub const STRIP_K_MAX: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct EnergyResidual {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_abs: f64,
    /// `max |r| / max(2 ||Lap u||^2)` over the window.
    pub max_rel: f64,
}

/// `r = d/dt ||u||^2 - 2 gamma ||grad u||^2 + 2 ||Lap u||^2 + int u_xx(0, y)^2 dy`
/// at interior samples with `t >= t_start`, the time derivative by centered
/// differences of the sampled `||u||^2`.
pub fn energy_identity_residual(series: &[DiagnosticsRecord], gamma: f64, t_start: f64) -> Result<EnergyResidual> {
    let mut times = Vec::new();
    let mut residual = Vec::new();
    let mut lap_max = 0.0f64;
    for w in series.windows(3) {
        let (p, c, n) = (&w[0], &w[1], &w[2]);
        if c.t < t_start {
            continue;
        }
        let dt = n.t - p.t;
        if !(dt > 0.0) {
            return Err(Error::TooSparse(format!(
                "non-increasing sample times near t = {}",
                c.t
            )));
        }
        let de = (n.l2_sq - p.l2_sq) / dt;
        times.push(c.t);
        residual.push(de - 2.0 * gamma * c.grad_sq + 2.0 * c.lap_sq + c.trace_uxx0);
        lap_max = lap_max.max(2.0 * c.lap_sq);
    }
    if times.is_empty() {
        return Err(Error::TooSparse(format!(
            "need three samples with the middle one at t >= {t_start}, got {} samples",
            series.len()
        )));
    }
    let max_abs = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let max_rel = if lap_max > 0.0 { max_abs / lap_max } else { max_abs };
    Ok(EnergyResidual {
        times,
        residual,
        max_abs,
        max_rel,
    })
}

/// Least-squares slope of `-ln E(t)` over samples with `t` in `[t1, t2]`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::Dimension {
            expected: format!("{} values", times.len()),
            found: values.len().to_string(),
        });
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooSparse(format!("{} samples in the fit window", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::NonFinite(format!("energy {v} at t = {t} cannot be log-fitted")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| -p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &pts {
        sxy += (t - tm) * (-v.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(Error::TooSparse("all samples share one time".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "6.1")]
    RectanglePositiveGamma,
    #[serde(rename = "6.2")]
    RectangleNonpositiveGamma,
    #[serde(rename = "6.3")]
    StripPositiveGamma,
    #[serde(rename = "6.4")]
    StripNonpositiveGamma,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::RectanglePositiveGamma => "6.1",
            Theorem::RectangleNonpositiveGamma => "6.2",
            Theorem::StripPositiveGamma => "6.3",
            Theorem::StripNonpositiveGamma => "6.4",
        })
    }
}

impl Theorem {
    pub fn weighted(&self) -> bool {
        matches!(self, Theorem::StripPositiveGamma | Theorem::StripNonpositiveGamma)
    }
}

/// Theorem constants; pure functions of the geometry and `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub a: f64,
    pub chi: f64,
    /// `b = gamma / a` (rectangle, `gamma > 0`).
    pub b: Option<f64>,
    /// `theta = 1 - b`.
    pub theta: Option<f64>,
    /// Smallness threshold `9 a^2 / (8 k)` on `(e^{kx}, u0^2)`.
    pub threshold: Option<f64>,
}

pub fn theory_constants(thm: Theorem, domain: &Domain, gamma: f64) -> TheoryConstants {
    let (l, b) = (domain.length, domain.width);
    let k = domain.weight_k;
    match thm {
        Theorem::RectanglePositiveGamma => {
            let a = PI * PI / (l * l) + PI * PI / (b * b);
            let bb = gamma / a;
            let theta = 1.0 - bb;
            TheoryConstants {
                a,
                chi: 2.0 * a * a * theta,
                b: Some(bb),
                theta: Some(theta),
                threshold: None,
            }
        }
        Theorem::RectangleNonpositiveGamma => {
            let a = PI * PI / (l * l) + PI * PI / (b * b);
            TheoryConstants {
                a,
                chi: 2.0 * (gamma.abs() / a + 1.0) * a * a,
                b: None,
                theta: None,
                threshold: None,
            }
        }
        Theorem::StripPositiveGamma | Theorem::StripNonpositiveGamma => {
            let a = PI * PI / (b * b);
            let chi = if thm == Theorem::StripPositiveGamma {
                0.5 * a * a
            } else {
                2.0 * (gamma.abs() / a + 1.0) * a * a
            };
            TheoryConstants {
                a,
                chi,
                b: None,
                theta: None,
                threshold: (k > 0.0).then(|| 9.0 * a * a / (8.0 * k)),
            }
        }
    }
}

/// Hypotheses of each theorem; returns the list of violated conditions.
pub fn hypothesis_violations(thm: Theorem, domain: &Domain, gamma: f64, weighted_e0: f64) -> Vec<String> {
    let mut v = Vec::new();
    let c = theory_constants(thm, domain, gamma);
    let strip = matches!(thm, Theorem::StripPositiveGamma | Theorem::StripNonpositiveGamma);
    match (strip, domain.kind) {
        (false, DomainKind::HalfStrip) => v.push("theorem is posed on a rectangle".into()),
        (true, DomainKind::Rectangle) => v.push("theorem is posed on the half-strip".into()),
        _ => {}
    }
    match thm {
        Theorem::RectanglePositiveGamma => {
            if !(gamma > 0.0) {
                v.push(format!("gamma = {gamma} must be positive"));
            }
            if !(c.b.unwrap_or(1.0) < 1.0) {
                v.push(format!("b = gamma / a = {} must be below 1", c.b.unwrap_or(f64::NAN)));
            }
        }
        Theorem::RectangleNonpositiveGamma | Theorem::StripNonpositiveGamma => {
            if gamma > 0.0 {
                v.push(format!("gamma = {gamma} must be nonpositive"));
            }
        }
        Theorem::StripPositiveGamma => {
            if !(gamma > 0.0 && gamma <= STRIP_GAMMA_MAX) {
                v.push(format!("gamma = {gamma} must lie in (0, 1/8]"));
            }
        }
    }
    if strip {
        let k = domain.weight_k;
        if !(k > 0.0 && k <= STRIP_K_MAX) {
            v.push(format!("k = {k} must lie in (0, 1/4]"));
        }
        if !(c.a > 1.0) {
            v.push(format!("a = pi^2 / B^2 = {} must exceed 1 (B < pi)", c.a));
        }
        match c.threshold {
            Some(th) if weighted_e0 < th => {}
            Some(th) => v.push(format!(
                "(e^(kx), u0^2) = {weighted_e0} is not below 9 a^2 / (8 k) = {th}"
            )),
            None => {}
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub theorem: Theorem,
    pub chi_theory: f64,
    pub chi_fitted: f64,
    /// Fraction of samples with `E(t) <= (1 + tol) E(0) e^{-chi t}`.
    pub pointwise_ok: f64,
    /// `max_t E(t) / (E(0) e^{-chi t})`.
    pub max_envelope_ratio: f64,
    pub tol: f64,
    pub window: (f64, f64),
    pub condition_ok: bool,
    pub violations: Vec<String>,
    pub constants: TheoryConstants,
    /// True when the hypotheses hold and every sample respects the envelope.
    pub pass: bool,
}

/// Energy checked by a theorem: `||u||^2` on rectangles, `(e^{kx}, u^2)` on the half-strip.
pub fn theorem_energy(thm: Theorem, rec: &DiagnosticsRecord) -> f64 {
    if thm.weighted() {
        rec.weighted
    } else {
        rec.l2_sq
    }
}

/// Checks the envelope at every sample and fits the rate on `[0.1 t_end, t_end]`.
pub fn verify_theorem(thm: Theorem, series: &[DiagnosticsRecord], domain: &Domain, gamma: f64) -> Result<DecayReport> {
    if series.len() < 2 {
        return Err(Error::TooSparse(format!("{} samples", series.len())));
    }
    let constants = theory_constants(thm, domain, gamma);
    let chi = constants.chi;
    let e: Vec<f64> = series.iter().map(|r| theorem_energy(thm, r)).collect();
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let e0 = e[0];
    let violations = hypothesis_violations(thm, domain, gamma, series[0].weighted);
    let condition_ok = violations.is_empty();
    let mut ok = 0usize;
    let mut max_ratio = 0.0f64;
    for (ti, ei) in t.iter().zip(&e) {
        let env = e0 * (-chi * (ti - t[0])).exp();
        let ratio = if env > 0.0 {
            ei / env
        } else if *ei == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
        if *ei <= (1.0 + ENVELOPE_TOL) * env {
            ok += 1;
        }
    }
    let t_end = *t.last().unwrap_or(&0.0);
    let window = (t[0] + 0.1 * (t_end - t[0]), t_end);
    let chi_fitted = if e0 > 0.0 { fit_decay(&t, &e, window)? } else { 0.0 };
    let pointwise_ok = ok as f64 / e.len() as f64;
    Ok(DecayReport {
        theorem: thm,
        chi_theory: chi,
        chi_fitted,
        pointwise_ok,
        max_envelope_ratio: max_ratio,
        tol: ENVELOPE_TOL,
        window,
        condition_ok,
        violations,
        constants,
        pass: condition_ok && ok == e.len(),
    })
}

/// Outcome of the comparison lemma `f' + (alpha - k f^n) f <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    /// `alpha - k f(0)^n > 0`.
    pub initial_condition_ok: bool,
    /// `f(t) < f(0)` at every sample with `t > t_0`.
    pub monotone: bool,
    pub max_ratio: f64,
    pub pass: bool,
}

pub fn comparison_monitor(times: &[f64], f: &[f64], alpha: f64, k: f64, n: i32) -> Result<MonitorReport> {
    if times.len() != f.len() || f.len() < 2 {
        return Err(Error::TooSparse(format!("{} samples", f.len())));
    }
    let f0 = f[0];
    let initial_condition_ok = alpha - k * f0.powi(n) > 0.0;
    let mut monotone = true;
    let mut max_ratio = 0.0f64;
    for (t, v) in times.iter().zip(f).skip(1) {
        if *t > times[0] {
            monotone &= *v < f0;
            if f0 > 0.0 {
                max_ratio = max_ratio.max(v / f0);
            }
        }
    }
    Ok(MonitorReport {
        initial_condition_ok,
        monotone,
        max_ratio,
        pass: initial_condition_ok && monotone,
    })
}

/// The half-strip instantiation: `n = 1`, `alpha = a^2`, `k = 8 k_w / 9`.
pub fn strip_monitor(series: &[DiagnosticsRecord], domain: &Domain) -> Result<MonitorReport> {
    let a = PI * PI / (domain.width * domain.width);
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let f: Vec<f64> = series.iter().map(|r| r.weighted).collect();
    comparison_monitor(&t, &f, a * a, 8.0 * domain.weight_k / 9.0, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(mut f: impl FnMut(f64) -> f64, n: usize, t_end: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let e = t.iter().map(|&t| f(t)).collect();
        (t, e)
    }

    #[test]
    fn fit_exact_exponential() {
        let (t, e) = synthetic(|t| 7.0 * (-3.0 * t).exp(), 100, 2.0);
        assert!((fit_decay(&t, &e, (0.2, 2.0)).unwrap() - 3.0).abs() < 1e-10);
        let scaled: Vec<f64> = e.iter().map(|v| 1e5 * v).collect();
        assert!((fit_decay(&t, &scaled, (0.2, 2.0)).unwrap() - 3.0).abs() < 1e-10);
        let (t, c) = synthetic(|_| 2.5, 10, 1.0);
        assert!(fit_decay(&t, &c, (0.0, 1.0)).unwrap().abs() < 1e-14);
        assert!(matches!(fit_decay(&t, &c, (5.0, 6.0)), Err(Error::TooSparse(_))));
    }

    #[test]
    fn fit_with_roundoff_noise() {
        let mut k = 0u64;
        let (t, e) = synthetic(
            |t| {
                k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (-3.0 * t).exp() + 1e-16 * ((k >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            },
            200,
            2.0,
        );
        assert!((fit_decay(&t, &e, (0.2, 2.0)).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn theorem_constants() {
        let rect = Domain::new(DomainKind::Rectangle, PI, PI, 0.0).unwrap();
        let c = theory_constants(Theorem::RectanglePositiveGamma, &rect, 1.0);
        assert!((c.a - 2.0).abs() < 1e-14);
        assert!((c.b.unwrap() - 0.5).abs() < 1e-14);
        assert!((c.chi - 4.0).abs() < 1e-13);
        let c2 = theory_constants(Theorem::RectangleNonpositiveGamma, &rect, -1.0);
        assert!((c2.chi - 12.0).abs() < 1e-13);
        // both rectangle formulas give 2 a^2 at gamma = 0
        let z1 = theory_constants(Theorem::RectanglePositiveGamma, &rect, 0.0).chi;
        let z2 = theory_constants(Theorem::RectangleNonpositiveGamma, &rect, 0.0).chi;
        assert!((z1 - 8.0).abs() < 1e-13 && (z2 - 8.0).abs() < 1e-13);

        let strip = Domain::half_strip(PI / 2.0, 0.25).unwrap();
        let c3 = theory_constants(Theorem::StripPositiveGamma, &strip, 0.125);
        assert!((c3.a - 4.0).abs() < 1e-13);
        assert!((c3.chi - 8.0).abs() < 1e-12);
        assert!((c3.threshold.unwrap() - 72.0).abs() < 1e-11);
        let c4 = theory_constants(Theorem::StripNonpositiveGamma, &strip, -1.0);
        assert!((c4.chi - 40.0).abs() < 1e-12);
    }

    #[test]
    fn hypotheses() {
        let rect = Domain::new(DomainKind::Rectangle, PI, PI, 0.0).unwrap();
        assert!(hypothesis_violations(Theorem::RectanglePositiveGamma, &rect, 1.0, 0.0).is_empty());
        assert_eq!(
            hypothesis_violations(Theorem::RectanglePositiveGamma, &rect, 3.0, 0.0).len(),
            1
        );
        assert!(!hypothesis_violations(Theorem::RectangleNonpositiveGamma, &rect, 0.5, 0.0).is_empty());
        let strip = Domain::half_strip(PI / 2.0, 0.25).unwrap();
        assert!(hypothesis_violations(Theorem::StripPositiveGamma, &strip, 0.125, 1.0).is_empty());
        assert_eq!(
            hypothesis_violations(Theorem::StripPositiveGamma, &strip, 0.125, 80.0).len(),
            1
        );
        let wide = Domain::half_strip(4.0, 0.25).unwrap();
        assert!(!hypothesis_violations(Theorem::StripNonpositiveGamma, &wide, -1.0, 0.1).is_empty());
    }

    #[test]
    fn envelope_on_synthetic_series() {
        let rect = Domain::new(DomainKind::Rectangle, PI, PI, 0.0).unwrap();
        let series: Vec<DiagnosticsRecord> = (0..=50)
            .map(|i| {
                let t = i as f64 * 0.04;
                DiagnosticsRecord {
                    t,
                    l2_sq: 3.0 * (-5.0 * t).exp(),
                    ..Default::default()
                }
            })
            .collect();
        let r = verify_theorem(Theorem::RectanglePositiveGamma, &series, &rect, 1.0).unwrap();
        assert!(r.pass);
        assert!((r.chi_fitted - 5.0).abs() < 1e-9);
        let slow: Vec<DiagnosticsRecord> = series
            .iter()
            .map(|r| DiagnosticsRecord {
                l2_sq: 3.0 * (-3.0 * r.t).exp(),
                ..*r
            })
            .collect();
        let r = verify_theorem(Theorem::RectanglePositiveGamma, &slow, &rect, 1.0).unwrap();
        assert!(!r.pass && r.condition_ok && r.pointwise_ok < 1.0);
    }

    #[test]
    fn residual_of_zero_and_sparse_series() {
        let zero: Vec<DiagnosticsRecord> = (0..5)
            .map(|i| DiagnosticsRecord {
                t: i as f64,
                ..Default::default()
            })
            .collect();
        let r = energy_identity_residual(&zero, 1.0, 0.0).unwrap();
        assert!(r.residual.iter().all(|&v| v == 0.0));
        assert!(matches!(
            energy_identity_residual(&zero[..2], 1.0, 0.0),
            Err(Error::TooSparse(_))
        ));
    }

    #[test]
    fn monitor_cases() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let decaying: Vec<f64> = t.iter().map(|t| 2.0 * (-t).exp()).collect();
        assert!(comparison_monitor(&t, &decaying, 16.0, 2.0 / 9.0, 1).unwrap().pass);
        let flat = vec![2.0; 10];
        let r = comparison_monitor(&t, &flat, 16.0, 2.0 / 9.0, 1).unwrap();
        assert!(!r.pass && r.initial_condition_ok && !r.monotone);
        assert!(
            !comparison_monitor(&t, &decaying, 0.1, 1.0, 1)
                .unwrap()
                .initial_condition_ok
        );
    }
}
