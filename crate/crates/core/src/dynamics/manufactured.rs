//! Manufactured solution `u* = A e^{-t} phi(x) sin(pi y / B)` with
//! `phi = x^2 (L - x)^3`, and the forcing that makes it exact.

use crate::error::Result;
use crate::geometry::{triple_product_coefficients, Discretization, ModalState};

use super::{Forcing, PhysicalParams};

/// Dense real polynomial, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        Self { coeffs }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(vec![]);
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, k: usize| p.coeffs.get(k).copied().unwrap_or(0.0);
        Self::new((0..n).map(|k| get(self, k) + alpha * get(other, k)).collect())
    }

    /// `x^p (L - x)^q`.
    pub fn bump(length: f64, p: usize, q: usize) -> Self {
        let x = Self::new(vec![0.0, 1.0]);
        let r = Self::new(vec![length, -1.0]);
        let mut out = Self::new(vec![1.0]);
        for _ in 0..p {
            out = out.mul(&x);
        }
        for _ in 0..q {
            out = out.mul(&r);
        }
        out
    }
}

/// `L_j phi` for the per-mode linear operator with eigenvalue `lambda`.
pub fn apply_mode_operator(phi: &Polynomial, lambda: f64, gamma: f64) -> Polynomial {
    let d = |n| phi.nth_derivative(n);
    d(4).add_scaled(-2.0 * lambda + gamma, &d(2))
        .add_scaled(lambda * lambda - gamma * lambda, phi)
        .add_scaled(1.0, &d(3))
        .add_scaled(-lambda, &d(1))
        .add_scaled(-1.0, &d(5))
}

#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub amplitude: f64,
    pub phi: Polynomial,
    norm: f64,
    linear_part: Vec<f64>,
    quadratic_part: Vec<Vec<f64>>,
    phi_nodes: Vec<f64>,
    n_modes: usize,
}

impl ManufacturedSolution {
    pub fn new(disc: &Discretization, params: &PhysicalParams, amplitude: f64) -> Result<Self> {
        let (l, b) = (disc.domain.length, disc.domain.width);
        let phi = Polynomial::bump(l, 2, 3);
        let lambda = disc.basis.lambdas()[0];
        let lphi = apply_mode_operator(&phi, lambda, params.gamma);
        let dphi = phi.derivative();
        let x = disc.grid.interior_nodes();
        let n = disc.n_modes();
        let a = triple_product_coefficients(b, n)?;
        let norm = (b / 2.0).sqrt();
        let linear_part = x.iter().map(|&x| norm * (lphi.eval(x) - phi.eval(x))).collect();
        let quadratic_part = (0..n)
            .map(|j| {
                let c = if params.nonlinear {
                    0.5 * b * a.get(0, 0, j)
                } else {
                    0.0
                };
                x.iter().map(|&x| c * phi.eval(x) * dphi.eval(x)).collect()
            })
            .collect();
        let phi_nodes = x.iter().map(|&x| phi.eval(x)).collect();
        Ok(Self {
            amplitude,
            phi,
            norm,
            linear_part,
            quadratic_part,
            phi_nodes,
            n_modes: n,
        })
    }

    pub fn exact(&self, t: f64) -> ModalState {
        let nx = self.phi_nodes.len();
        let mut s = ModalState::zeros(self.n_modes, nx);
        let c = self.amplitude * (-t).exp() * self.norm;
        for (v, p) in s.mode_mut(0).iter_mut().zip(&self.phi_nodes) {
            *v = c * p;
        }
        s.t = t;
        s
    }
}

impl Forcing for ManufacturedSolution {
    fn eval(&self, t: f64, out: &mut ModalState) {
        let a = self.amplitude;
        let e1 = a * (-t).exp();
        let e2 = a * a * (-2.0 * t).exp();
        for (j, q) in self.quadratic_part.iter().enumerate() {
            let o = out.mode_mut(j);
            for (v, qv) in o.iter_mut().zip(q) {
                *v = e2 * qv;
            }
        }
        for (v, lp) in out.mode_mut(0).iter_mut().zip(&self.linear_part) {
            *v += e1 * lp;
        }
        out.t = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_algebra() {
        let p = Polynomial::bump(2.0, 2, 3);
        for &x in &[0.0, 0.3, 1.7, 2.0] {
            assert!((p.eval(x) - x * x * (2.0 - x).powi(3)).abs() < 1e-12);
        }
        assert_eq!(p.coeffs.len(), 6);
        assert_eq!(p.nth_derivative(5).coeffs, vec![-120.0]);
        assert!(p.nth_derivative(6).coeffs.is_empty());
        // L_j of a quadratic reduces to the low-order terms
        let q = Polynomial::new(vec![0.0, 0.0, 1.0]);
        let lq = apply_mode_operator(&q, 1.0, 0.0);
        for &x in &[0.5f64, 1.5] {
            let expect = -2.0 * 2.0 + x * x - 2.0 * x;
            assert!((lq.eval(x) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_forcing() {
        let d = Discretization::new(DomainKind::Rectangle, PI, PI, 32, 3, 0.0, true).unwrap();
        let m = ManufacturedSolution::new(&d, &PhysicalParams::new(1.0), 0.0).unwrap();
        let mut f = ModalState::zeros(3, 32);
        m.eval(0.3, &mut f);
        assert!(f.coeffs().iter().all(|&v| v == 0.0));
        assert!(m.exact(0.0).coeffs().iter().all(|&v| v == 0.0));
    }
}
