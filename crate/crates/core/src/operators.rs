//! Banded finite-difference operators in `x` and the per-mode linear operator.
//!
//! All derivatives use second-order centered stencils (widths 3, 3, 5, 5, 7)
//! acting on the interior nodes. Boundary nodes carry `u = 0`. Ghost values
//! beyond the ends are eliminated with polynomial extrapolation that honours
//! the derivative conditions: at `x = 0` a quartic with `u = u_x = 0` through
//! the first three interior nodes, at the right end a quintic with
//! `u = u_x = u_xx = 0` through the last three. The closure keeps the matrices
//! inside a `kl = ku = 3` band.

use serde::{Deserialize, Serialize};

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, Grid};
use crate::stencil::{centered_stencil, solve_dense};

pub const BANDWIDTH: usize = 3;
pub const GHOSTS: usize = 3;

/// Relative residual above which an implicit solve is flagged.
pub const SOLVE_RESIDUAL_WARNING: f64 = 1e-8;

/// Boundary conditions in `x`. Both variants clamp `u = u_x = 0` at `x = 0`;
/// the rectangle imposes `u = u_x = u_xx = 0` at `x = L`, the truncated
/// half-strip imposes the same three as artificial conditions at `L_trunc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Rectangle,
    HalfStrip,
}

impl From<DomainKind> for BoundarySpec {
    fn from(kind: DomainKind) -> Self {
        match kind {
            DomainKind::Rectangle => BoundarySpec::Rectangle,
            DomainKind::HalfStrip => BoundarySpec::HalfStrip,
        }
    }
}

/// Ghost-value weights in units of the grid spacing (independent of `h`).
///
/// `left[g][c]` multiplies `u_{c+1}` in the ghost `u_{-(g+1)}`;
/// `right[g][c]` multiplies `u_{n-c}` in the ghost `u_{n+2+g}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostClosure {
    pub spec: BoundarySpec,
    pub left: [[f64; GHOSTS]; GHOSTS],
    pub right: [[f64; GHOSTS]; GHOSTS],
}

impl GhostClosure {
    pub fn new(spec: BoundarySpec) -> Self {
        // left: p(s) = c2 s^2 + c3 s^3 + c4 s^4 through s = 1, 2, 3
        let left = extrapolation_weights(2, &[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]);
        // right: p(s) = c3 s^3 + c4 s^4 + c5 s^5 through s = -1, -2, -3
        let right = extrapolation_weights(3, &[-1.0, -2.0, -3.0], &[1.0, 2.0, 3.0]);
        Self { spec, left, right }
    }

    /// Interior values extended by the boundary nodes and three ghosts per side;
    /// entry `k` corresponds to node `k - 1 - GHOSTS`.
    pub fn extend(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut ext = vec![0.0; n + 2 + 2 * GHOSTS];
        let off = GHOSTS;
        ext[off + 1..off + 1 + n].copy_from_slice(u);
        for g in 0..GHOSTS {
            ext[off - 1 - g] = (0..GHOSTS).map(|c| self.left[g][c] * u[c]).sum();
            ext[off + n + 2 + g] = (0..GHOSTS).map(|c| self.right[g][c] * u[n - 1 - c]).sum();
        }
        ext
    }
}

/// Weights mapping samples at `fit_at` to values at `eval_at` of the monomial
/// fit `sum_k c_k s^(lowest + k)`.
fn extrapolation_weights(lowest: i32, fit_at: &[f64; 3], eval_at: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut vander = [0.0; 9];
    for (r, s) in fit_at.iter().enumerate() {
        for k in 0..3 {
            vander[r * 3 + k] = s.powi(lowest + k as i32);
        }
    }
    let mut out = [[0.0; 3]; 3];
    for c in 0..3 {
        let mut e = [0.0; 3];
        e[c] = 1.0;
        let coef = solve_dense(&vander, &e).expect("Vandermonde of distinct nodes is regular");
        for (g, s) in eval_at.iter().enumerate() {
            out[g][c] = (0..3).map(|k| coef[k] * s.powi(lowest + k as i32)).sum();
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BandedOperator {
    pub order: usize,
    pub h: f64,
    pub matrix: BandedMatrix,
    pub bc_closure: GhostClosure,
}

impl BandedOperator {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.matvec(u)
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

/// Smallest `nx` for which the two ghost fits do not overlap the stencil reach.
pub const MIN_OPERATOR_NX: usize = 8;

pub fn build_derivative(order: usize, grid: &Grid, bc: BoundarySpec) -> Result<BandedOperator> {
    let stencil = centered_stencil(order).ok_or(Error::UnsupportedOrder(order))?;
    let n = grid.nx;
    if n < MIN_OPERATOR_NX {
        return Err(Error::GridTooSmall {
            nx: n,
            required: MIN_OPERATOR_NX,
        });
    }
    let closure = GhostClosure::new(bc);
    let r = (stencil.len() / 2) as i64;
    let scale = grid.h.powi(-(order as i32));
    let mut m = BandedMatrix::zeros(n, BANDWIDTH, BANDWIDTH);
    let last = n as i64 + 1;
    for i in 1..=n as i64 {
        let row = (i - 1) as usize;
        for (k, &c) in stencil.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let node = i - r + k as i64;
            let c = c * scale;
            if (1..=n as i64).contains(&node) {
                m.add(row, (node - 1) as usize, c);
            } else if node == 0 || node == last {
                // boundary value is zero
            } else if node < 0 {
                let g = (-node - 1) as usize;
                for col in 0..GHOSTS {
                    m.add(row, col, c * closure.left[g][col]);
                }
            } else {
                let g = (node - last - 1) as usize;
                for col in 0..GHOSTS {
                    m.add(row, n - 1 - col, c * closure.right[g][col]);
                }
            }
        }
    }
    Ok(BandedOperator {
        order,
        h: grid.h,
        matrix: m,
        bc_closure: closure,
    })
}

/// The five x-derivative operators of one grid.
#[derive(Debug, Clone)]
pub struct DerivativeSet {
    ops: Vec<BandedOperator>,
}

impl DerivativeSet {
    pub fn new(grid: &Grid, bc: BoundarySpec) -> Result<Self> {
        let ops = (1..=5)
            .map(|p| build_derivative(p, grid, bc))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ops })
    }

    pub fn get(&self, order: usize) -> &BandedOperator {
        &self.ops[order - 1]
    }

    pub fn nx(&self) -> usize {
        self.ops[0].n()
    }

    pub fn h(&self) -> f64 {
        self.ops[0].h
    }
}

/// `L = (D4 - 2 lam D2 + lam^2) + gamma (D2 - lam) + (D3 - lam D1) - D5`,
/// so that a mode evolves as `g_t = -L g - N(g)`.
pub fn assemble_mode_matrix(lambda: f64, gamma: f64, d: &DerivativeSet) -> BandedMatrix {
    let n = d.nx();
    let mut m = BandedMatrix::zeros(n, BANDWIDTH, BANDWIDTH);
    m.add_scaled(1.0, &d.get(4).matrix);
    m.add_scaled(-2.0 * lambda + gamma, &d.get(2).matrix);
    m.add_scaled(1.0, &d.get(3).matrix);
    m.add_scaled(-lambda, &d.get(1).matrix);
    m.add_scaled(-1.0, &d.get(5).matrix);
    for i in 0..n {
        m.add(i, i, lambda * lambda - gamma * lambda);
    }
    m
}

#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub mode: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub dt: f64,
    pub theta: f64,
    pub matrix: BandedMatrix,
    factor: BandedLu,
    // factorization of I + dt/2 L for backward-Euler half steps, when it differs
    half_step: Option<BandedLu>,
}

fn factor_shifted(matrix: &BandedMatrix, coef: f64, mode: usize, dt: f64) -> Result<BandedLu> {
    let n = matrix.n();
    let mut a = BandedMatrix::identity(n, BANDWIDTH, BANDWIDTH);
    a.add_scaled(coef, matrix);
    BandedLu::factor(&a).map_err(|_| Error::SingularFactorization { mode, dt })
}

pub fn build_mode_operator(
    mode: usize,
    lambda: f64,
    gamma: f64,
    derivs: &DerivativeSet,
    dt: f64,
    theta: f64,
) -> Result<ModeOperator> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(0.5..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [1/2, 1], got {theta}"
        )));
    }
    let matrix = assemble_mode_matrix(lambda, gamma, derivs);
    let factor = factor_shifted(&matrix, theta * dt, mode, dt)?;
    let half_step = if theta == 0.5 {
        None
    } else {
        Some(factor_shifted(&matrix, 0.5 * dt, mode, dt)?)
    };
    Ok(ModeOperator {
        mode,
        lambda,
        gamma,
        dt,
        theta,
        matrix,
        factor,
        half_step,
    })
}

#[derive(Debug, Clone)]
pub struct ImplicitSolve {
    pub solution: Vec<f64>,
    /// `||(I + theta dt L) x - rhs|| / ||rhs||` (zero for a zero right-hand side).
    pub residual: f64,
    pub quality_warning: bool,
}

impl ModeOperator {
    /// `L g`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.matrix.matvec(g)
    }

    /// `(I + coef L) g`.
    pub fn apply_shifted(&self, coef: f64, g: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.matvec(g);
        for (o, gi) in out.iter_mut().zip(g) {
            *o = gi + coef * *o;
        }
        out
    }

    /// `(I - (1 - theta) dt L) g`, the explicit half of the theta scheme.
    pub fn explicit_part(&self, g: &[f64]) -> Vec<f64> {
        self.apply_shifted(-(1.0 - self.theta) * self.dt, g)
    }

    fn solve_with(&self, lu: &BandedLu, coef: f64, rhs: &[f64]) -> Result<ImplicitSolve> {
        if rhs.len() != self.matrix.n() {
            return Err(Error::Dimension {
                expected: self.matrix.n().to_string(),
                found: rhs.len().to_string(),
            });
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "right-hand side of mode {} implicit solve",
                self.mode
            )));
        }
        let solution = lu.solve(rhs);
        let back = self.apply_shifted(coef, &solution);
        let rnorm = norm(rhs);
        let res = back.iter().zip(rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let residual = if rnorm > 0.0 { res / rnorm } else { res };
        Ok(ImplicitSolve {
            solution,
            residual,
            quality_warning: residual > SOLVE_RESIDUAL_WARNING,
        })
    }

    /// Backward-Euler half step: solves `(I + dt/2 L) x = rhs`.
    pub fn solve_half_step(&self, rhs: &[f64]) -> Result<ImplicitSolve> {
        let lu = self.half_step.as_ref().unwrap_or(&self.factor);
        self.solve_with(lu, 0.5 * self.dt, rhs)
    }
}

/// Solves `(I + theta dt L_j) x = rhs` with the cached factorization.
pub fn solve_implicit(op: &ModeOperator, rhs: &[f64]) -> Result<ImplicitSolve> {
    op.solve_with(&op.factor, op.theta * op.dt, rhs)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(length: f64, nx: usize) -> Grid {
        Grid::new(length, nx, 1, true).unwrap()
    }

    #[test]
    fn ghost_closure_is_exact_for_compatible_polynomials() {
        let g = grid(2.0, 20);
        let c = GhostClosure::new(BoundarySpec::Rectangle);
        // x^2 (L - x)^3 has degree 5 and satisfies every boundary condition,
        // but the left fit is quartic; use the pieces each fit reproduces.
        let left_poly = |x: f64| x * x * (1.0 + x - 0.3 * x * x);
        let l = 2.0;
        let right_poly = |x: f64| (l - x).powi(3) * (0.5 + (l - x) - 2.0 * (l - x).powi(2));
        for (f, left_side) in [(&left_poly as &dyn Fn(f64) -> f64, true), (&right_poly, false)] {
            let u: Vec<f64> = g.interior_nodes().iter().map(|&x| f(x)).collect();
            let ext = c.extend(&u);
            for gh in 1..=3 {
                if left_side {
                    let x = -(gh as f64) * g.h;
                    assert!((ext[GHOSTS - gh] - f(x)).abs() < 1e-12);
                } else {
                    let x = l + gh as f64 * g.h;
                    assert!((ext[GHOSTS + g.nx + 1 + gh] - f(x)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unsupported_order_and_small_grid() {
        let g = grid(1.0, 32);
        assert!(matches!(
            build_derivative(6, &g, BoundarySpec::Rectangle),
            Err(Error::UnsupportedOrder(6))
        ));
        assert!(matches!(
            build_derivative(0, &g, BoundarySpec::Rectangle),
            Err(Error::UnsupportedOrder(0))
        ));
        let tiny = Grid {
            nx: 5,
            h: 1.0 / 6.0,
            n_modes: 1,
            ny_col: 15,
        };
        assert!(matches!(
            build_derivative(5, &tiny, BoundarySpec::Rectangle),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn monomials_are_differentiated_exactly_in_the_interior() {
        let g = grid(1.0, 40);
        let x = g.interior_nodes();
        for order in 1..=5usize {
            let op = build_derivative(order, &g, BoundarySpec::Rectangle).unwrap();
            let r = centered_stencil(order).unwrap().len() / 2;
            for q in 0..=(order + 1) {
                let u: Vec<f64> = x.iter().map(|x| x.powi(q as i32)).collect();
                let du = op.apply(&u);
                for i in r..(g.nx - r) {
                    let exact = if q < order {
                        0.0
                    } else {
                        let falling: f64 = ((q - order + 1)..=q).map(|k| k as f64).product();
                        falling * x[i].powi((q - order) as i32)
                    };
                    let tol = 1e-6 * g.h.powi(-(order as i32)) * f64::EPSILON.sqrt();
                    assert!(
                        (du[i] - exact).abs() < tol.max(1e-7),
                        "order {order} q {q} i {i}: {} vs {exact}",
                        du[i]
                    );
                }
            }
        }
    }

    #[test]
    fn first_derivative_of_compatible_polynomial() {
        let l = 1.5;
        let mut errs = Vec::new();
        for &nx in &[64usize, 128, 256] {
            let g = grid(l, nx);
            let op = build_derivative(1, &g, BoundarySpec::Rectangle).unwrap();
            let x = g.interior_nodes();
            let u: Vec<f64> = x.iter().map(|&x| x * x * (l - x).powi(3)).collect();
            let du = op.apply(&u);
            let err = x
                .iter()
                .zip(&du)
                .map(|(&x, d)| (d - (2.0 * x * (l - x).powi(3) - 3.0 * x * x * (l - x).powi(2))).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn second_derivative_eigenvalue() {
        let l = 2.0;
        let g = grid(l, 256);
        let op = build_derivative(2, &g, BoundarySpec::Rectangle).unwrap();
        let v: Vec<f64> = g.interior_nodes().iter().map(|&x| (PI * x / l).sin()).collect();
        let dv = op.apply(&v);
        let rq = v.iter().zip(&dv).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|a| a * a).sum::<f64>();
        let exact = -(PI / l).powi(2);
        assert!(((rq - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn fifth_derivative_of_zero() {
        let g = grid(1.0, 32);
        let op = build_derivative(5, &g, BoundarySpec::HalfStrip).unwrap();
        assert!(op.apply(&vec![0.0; 32]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mode_matrix_is_sum_of_parts() {
        let g = grid(PI, 40);
        let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
        let (lam, gamma) = (4.0, 0.0);
        let m = assemble_mode_matrix(lam, gamma, &d);
        for k in [0usize, 1, 2, 17, 37, 39] {
            let mut e = vec![0.0; 40];
            e[k] = 1.0;
            let got = m.matvec(&e);
            let p: Vec<Vec<f64>> = (1..=5).map(|o| d.get(o).apply(&e)).collect();
            for i in 0..40 {
                let expect = p[3][i] - 2.0 * lam * p[1][i] + lam * lam * e[i] + (p[2][i] - lam * p[0][i]) - p[4][i];
                assert!(
                    (got[i] - expect).abs() <= 1e-13 * expect.abs().max(1.0),
                    "column {k} row {i}"
                );
            }
        }
        let zero_lam = assemble_mode_matrix(0.0, 0.7, &d);
        let mut direct = BandedMatrix::zeros(40, 3, 3);
        direct.add_scaled(1.0, &d.get(4).matrix);
        direct.add_scaled(0.7, &d.get(2).matrix);
        direct.add_scaled(1.0, &d.get(3).matrix);
        direct.add_scaled(-1.0, &d.get(5).matrix);
        assert_eq!(zero_lam.to_dense(), direct.to_dense());
    }

    #[test]
    fn gamma_enters_linearly() {
        let g = grid(PI, 40);
        let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
        let lam = 9.0;
        let (g1, g2) = (0.5, 1.25);
        let sum = assemble_mode_matrix(lam, g1 + g2, &d);
        let mut parts = assemble_mode_matrix(lam, g1, &d);
        parts.add_scaled(g2, &d.get(2).matrix);
        for i in 0..40 {
            parts.add(i, i, -g2 * lam);
        }
        let (a, b) = (sum.to_dense(), parts.to_dense());
        let scale = sum.max_abs();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn implicit_solve_inverts_the_shifted_operator() {
        let g = grid(PI, 64);
        let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
        let op = build_mode_operator(0, 1.0, 1.0, &d, 1e-3, 0.5).unwrap();
        let x: Vec<f64> = g.interior_nodes().iter().map(|&x| x * x * (PI - x).powi(3)).collect();
        let rhs = op.apply_shifted(0.5e-3, &x);
        let sol = solve_implicit(&op, &rhs).unwrap();
        let err = sol
            .solution
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10 * scale);
        assert!(!sol.quality_warning);

        let zero = solve_implicit(&op, &vec![0.0; 64]).unwrap();
        assert!(zero.solution.iter().all(|&v| v == 0.0));

        let mut bad = vec![0.0; 64];
        bad[3] = f64::NAN;
        assert!(matches!(solve_implicit(&op, &bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_bad_time_parameters() {
        let g = grid(PI, 32);
        let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
        assert!(build_mode_operator(0, 1.0, 0.0, &d, 0.0, 0.5).is_err());
        assert!(build_mode_operator(0, 1.0, 0.0, &d, 1e-3, 0.3).is_err());
        let be = build_mode_operator(0, 1.0, 0.0, &d, 1e-3, 1.0).unwrap();
        let rhs: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let half = be.solve_half_step(&rhs).unwrap();
        let back = be.apply_shifted(0.5e-3, &half.solution);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn dense(m: &BandedMatrix) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(m.n(), m.n(), &m.to_dense())
    }

    #[test]
    fn spectrum_of_stable_mode_lies_in_left_half_plane() {
        for nx in [24, 48] {
            let g = grid(PI, nx);
            let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
            let l = dense(&assemble_mode_matrix(1.0, 1.0, &d));
            let eig = (-l).complex_eigenvalues();
            let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            // continuous bound: -(k^2 + 1)^2 + (k^2 + 1) <= -2 for k >= 1
            assert!(max_re < 0.0, "nx = {nx}: max Re = {max_re}");
        }
    }

    #[test]
    fn implicit_solve_matches_dense_solve() {
        use rand::{Rng, SeedableRng};
        let g = grid(PI, 64);
        let d = DerivativeSet::new(&g, BoundarySpec::Rectangle).unwrap();
        let op = build_mode_operator(2, 9.0, -1.0, &d, 1e-3, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rhs: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = nalgebra::DMatrix::identity(64, 64) + dense(&op.matrix) * 0.5e-3;
        let x_ref = a.clone().lu().solve(&nalgebra::DVector::from_vec(rhs.clone())).unwrap();
        let sol = solve_implicit(&op, &rhs).unwrap();
        let diff = (nalgebra::DVector::from_vec(sol.solution.clone()) - &x_ref).norm();
        assert!(diff < 1e-10 * x_ref.norm(), "{diff}");
        let res = (&a * nalgebra::DVector::from_vec(sol.solution) - nalgebra::DVector::from_vec(rhs)).norm();
        assert!(res < 1e-10);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn half_strip_closure_has_same_interior() {
        let g = grid(10.0, 40);
        let r = build_derivative(3, &g, BoundarySpec::Rectangle).unwrap();
        let s = build_derivative(3, &g, BoundarySpec::HalfStrip).unwrap();
        for i in 3..37 {
            for j in i - 3..=i + 3 {
                assert_eq!(r.matrix.get(i, j), s.matrix.get(i, j));
            }
        }
    }
}
