//! Domains, grids, the sine eigenbasis in `y`, and the modal/physical transforms.
//!
//! The `y` direction is represented exactly by the Dirichlet eigenfunctions
//! `omega_m(y) = sqrt(2/B) sin((m+1) pi y / B)` (mode index `m` is zero-based).
//! Physical values live on Gauss-Legendre collocation points in `y`, which
//! integrate products of up to three modes to roundoff. The `x` direction is a
//! uniform grid with `nx` interior nodes; boundary nodes carry zero values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Truncation length of the half-strip in units of its width.
pub const DEFAULT_TRUNCATION_FACTOR: f64 = 40.0;

/// Upper end of the admissible exponential weight on the half-strip.
pub const MAX_WEIGHT_K: f64 = 0.25;

/// Smallest accepted number of interior x nodes.
pub const MIN_NX: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Rectangle,
    HalfStrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    /// x extent; the truncation length for a half-strip.
    pub length: f64,
    /// y extent.
    pub width: f64,
    /// Exponent of the weight `e^{kx}`.
    pub weight_k: f64,
}

impl Domain {
    pub fn new(kind: DomainKind, length: f64, width: f64, weight_k: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "lengths must be positive and finite (L = {length}, B = {width})"
            )));
        }
        match kind {
            DomainKind::Rectangle if weight_k != 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "weight_k must be 0 on a rectangle, got {weight_k}"
                )))
            }
            DomainKind::HalfStrip if !(0.0..=MAX_WEIGHT_K).contains(&weight_k) => {
                return Err(Error::InvalidParameter(format!(
                    "weight_k must lie in [0, {MAX_WEIGHT_K}] on the half-strip, got {weight_k}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            length,
            width,
            weight_k,
        })
    }

    /// Half-strip truncated at `DEFAULT_TRUNCATION_FACTOR * width`.
    pub fn half_strip(width: f64, weight_k: f64) -> Result<Self> {
        Self::new(
            DomainKind::HalfStrip,
            DEFAULT_TRUNCATION_FACTOR * width,
            width,
            weight_k,
        )
    }

    /// The constant `a` of the Poincare-type bounds: `pi^2/L^2 + pi^2/B^2` on a
    /// rectangle, `pi^2/B^2` on the half-strip.
    pub fn poincare_a(&self) -> f64 {
        match self.kind {
            DomainKind::Rectangle => PI * PI / (self.length * self.length) + PI * PI / (self.width * self.width),
            DomainKind::HalfStrip => PI * PI / (self.width * self.width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub h: f64,
    pub n_modes: usize,
    pub ny_col: usize,
}

impl Grid {
    /// Collocation count for `n_modes` sine modes. With dealiasing the rule
    /// resolves triple products of modes, otherwise only pairwise products.
    pub fn collocation_points(n_modes: usize, dealias: bool) -> usize {
        if dealias {
            3 * n_modes + 12
        } else {
            2 * n_modes + 12
        }
    }

    pub fn new(length: f64, nx: usize, n_modes: usize, dealias: bool) -> Result<Self> {
        if nx < MIN_NX {
            return Err(Error::GridTooSmall { nx, required: MIN_NX });
        }
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be at least 1".into()));
        }
        Ok(Self {
            nx,
            h: length / (nx + 1) as f64,
            n_modes,
            ny_col: Self::collocation_points(n_modes, dealias),
        })
    }

    /// Coordinate of node `i`, where `0` and `nx + 1` are the boundary nodes.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// The `nx` interior node coordinates.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..=self.nx).map(|i| self.x(i)).collect()
    }

    /// All `nx + 2` node coordinates including the boundary nodes.
    pub fn all_nodes(&self) -> Vec<f64> {
        (0..=self.nx + 1).map(|i| self.x(i)).collect()
    }
}

/// Sine eigenbasis of `-d^2/dy^2` with Dirichlet conditions on `(0, B)`.
#[derive(Debug, Clone)]
pub struct SineBasis {
    width: f64,
    n_modes: usize,
    lambdas: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // omegas[m * ny + q] = omega_m(nodes[q])
    omegas: Vec<f64>,
}

impl SineBasis {
    pub fn new(width: f64, n_modes: usize, ny_col: usize) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidGeometry(format!("width must be positive, got {width}")));
        }
        if n_modes == 0 || ny_col < n_modes + 1 {
            return Err(Error::InvalidParameter(format!(
                "need n_modes >= 1 and ny_col > n_modes (n_modes = {n_modes}, ny_col = {ny_col})"
            )));
        }
        let (nodes, weights) = gauss_legendre_on(ny_col, 0.0, width);
        let lambdas = (1..=n_modes).map(|j| (j as f64 * PI / width).powi(2)).collect();
        let mut omegas = Vec::with_capacity(n_modes * ny_col);
        for m in 0..n_modes {
            omegas.extend(nodes.iter().map(|&y| omega(width, m, y)));
        }
        Ok(Self {
            width,
            n_modes,
            lambdas,
            nodes,
            weights,
            omegas,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn ny(&self) -> usize {
        self.nodes.len()
    }

    /// Eigenvalues `((m+1) pi / B)^2`, strictly increasing.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Values of mode `m` at the collocation nodes.
    pub fn omega_row(&self, m: usize) -> &[f64] {
        let ny = self.ny();
        &self.omegas[m * ny..(m + 1) * ny]
    }

    pub fn omega(&self, m: usize, y: f64) -> f64 {
        omega(self.width, m, y)
    }

    /// Analytic second derivative of mode `m`.
    pub fn omega_yy(&self, m: usize, y: f64) -> f64 {
        -self.lambdas[m] * self.omega(m, y)
    }

    /// Quadrature of `omega_j * omega_l` over `(0, B)`.
    pub fn gram(&self, j: usize, l: usize) -> f64 {
        self.omega_row(j)
            .iter()
            .zip(self.omega_row(l))
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Modal coefficients of one x-line of collocation values.
    pub fn project_line(&self, line: &[f64], out: &mut [f64]) {
        let ny = self.ny();
        for (m, o) in out.iter_mut().enumerate() {
            let row = &self.omegas[m * ny..(m + 1) * ny];
            *o = row
                .iter()
                .zip(&self.weights)
                .zip(line)
                .map(|((w_m, wq), u)| w_m * wq * u)
                .sum();
        }
    }

    /// Collocation values of one x-line from its modal coefficients.
    pub fn synthesize_line(&self, coeffs: &[f64], out: &mut [f64]) {
        let ny = self.ny();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (m, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.omegas[m * ny..(m + 1) * ny];
            for (o, w) in out.iter_mut().zip(row) {
                *o += c * w;
            }
        }
    }

    /// Second `y` derivative of collocation values through the modal route.
    pub fn apply_dyy(&self, line: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_modes];
        self.project_line(line, &mut coeffs);
        for (c, lam) in coeffs.iter_mut().zip(&self.lambdas) {
            *c *= -lam;
        }
        let mut out = vec![0.0; self.ny()];
        self.synthesize_line(&coeffs, &mut out);
        out
    }
}

fn omega(width: f64, m: usize, y: f64) -> f64 {
    (2.0 / width).sqrt() * ((m + 1) as f64 * PI * y / width).sin()
}

/// `a[k][l][j] = int_0^B omega_k omega_l omega_j dy`, zero-based indices.
#[derive(Debug, Clone)]
pub struct TripleProducts {
    n: usize,
    values: Vec<f64>,
}

impl TripleProducts {
    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize, j: usize) -> f64 {
        self.values[(k * self.n + l) * self.n + j]
    }
}

/// Closed form of the sine triple products. Each product expands into four
/// sines of frequency `k+l-j`, `k-l+j`, `-k+l+j`, `k+l+j`, and only odd
/// frequencies integrate to a non-zero value, so entries with `k+l+j` even are
/// exact zeros.
pub fn triple_product_coefficients(width: f64, n_modes: usize) -> Result<TripleProducts> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("n_modes must be at least 1".into()));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidGeometry(format!("width must be positive, got {width}")));
    }
    let n = n_modes;
    let scale = (2.0 / width).powf(1.5) * 0.25 * 2.0 * width / PI;
    let mut values = vec![0.0; n * n * n];
    for k in 1..=n as i64 {
        for l in 1..=n as i64 {
            for j in 1..=n as i64 {
                if (k + l + j) % 2 == 0 {
                    continue;
                }
                // the pair swapped by k <-> l is summed first so the result is exactly symmetric
                let s = 1.0 / (k + l - j) as f64 + (1.0 / (k - l + j) as f64 + 1.0 / (-k + l + j) as f64)
                    - 1.0 / (k + l + j) as f64;
                let idx = (((k - 1) as usize * n) + (l - 1) as usize) * n + (j - 1) as usize;
                values[idx] = scale * s;
            }
        }
    }
    Ok(TripleProducts { n, values })
}

/// Galerkin coefficients `g_m(x_i)` of a field, mode-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    n_modes: usize,
    nx: usize,
    coeffs: Vec<f64>,
    pub t: f64,
}

impl ModalState {
    pub fn zeros(n_modes: usize, nx: usize) -> Self {
        Self {
            n_modes,
            nx,
            coeffs: vec![0.0; n_modes * nx],
            t: 0.0,
        }
    }

    pub fn from_coeffs(n_modes: usize, nx: usize, coeffs: Vec<f64>, t: f64) -> Result<Self> {
        if coeffs.len() != n_modes * nx {
            return Err(Error::Dimension {
                expected: format!("{n_modes} x {nx} coefficients"),
                found: coeffs.len().to_string(),
            });
        }
        Ok(Self { n_modes, nx, coeffs, t })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn mode(&self, m: usize) -> &[f64] {
        &self.coeffs[m * self.nx..(m + 1) * self.nx]
    }

    pub fn mode_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.coeffs[m * self.nx..(m + 1) * self.nx]
    }

    pub fn modes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coeffs.chunks_exact(self.nx)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    /// Discrete `||u||^2`: trapezoid in x (boundary values vanish), Parseval in y.
    pub fn l2_sq(&self, h: f64) -> f64 {
        h * self.coeffs.iter().map(|v| v * v).sum::<f64>()
    }

    /// `self + scale * other`, keeping the time of `self`.
    pub fn axpy(&mut self, scale: f64, other: &ModalState) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += scale * b;
        }
    }

    pub fn check_shape(&self, n_modes: usize, nx: usize) -> Result<()> {
        if self.n_modes != n_modes || self.nx != nx {
            return Err(Error::Dimension {
                expected: format!("{n_modes} modes x {nx} nodes"),
                found: format!("{} modes x {} nodes", self.n_modes, self.nx),
            });
        }
        Ok(())
    }
}

/// Values `u(x_i, y_q)` on interior x nodes and y collocation nodes, x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    pub fn from_values(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::Dimension {
                expected: format!("{nx} x {ny} values"),
                found: values.len().to_string(),
            });
        }
        Ok(Self { nx, ny, values })
    }

    /// Samples `f(x, y)` on the interior x nodes and the basis collocation nodes.
    pub fn sample(grid: &Grid, basis: &SineBasis, f: impl Fn(f64, f64) -> f64) -> Self {
        let ny = basis.ny();
        let mut values = Vec::with_capacity(grid.nx * ny);
        for i in 1..=grid.nx {
            let x = grid.x(i);
            values.extend(basis.nodes().iter().map(|&y| f(x, y)));
        }
        Self {
            nx: grid.nx,
            ny,
            values,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn line(&self, i: usize) -> &[f64] {
        &self.values[i * self.ny..(i + 1) * self.ny]
    }

    pub fn get(&self, i: usize, q: usize) -> f64 {
        self.values[i * self.ny + q]
    }

    /// `int int u^2` with the trapezoid rule in x and the collocation rule in y.
    pub fn l2_sq(&self, h: f64, basis: &SineBasis) -> f64 {
        let w = basis.weights();
        h * self
            .values
            .chunks_exact(self.ny)
            .map(|line| line.iter().zip(w).map(|(u, w)| w * u * u).sum::<f64>())
            .sum::<f64>()
    }
}

pub fn forward_sine_transform(field: &PhysicalField, basis: &SineBasis) -> Result<ModalState> {
    if field.ny != basis.ny() {
        return Err(Error::Dimension {
            expected: format!("{} y collocation points", basis.ny()),
            found: field.ny.to_string(),
        });
    }
    let n = basis.n_modes();
    let mut state = ModalState::zeros(n, field.nx);
    let mut buf = vec![0.0; n];
    for i in 0..field.nx {
        basis.project_line(field.line(i), &mut buf);
        for (m, &c) in buf.iter().enumerate() {
            state.coeffs[m * field.nx + i] = c;
        }
    }
    Ok(state)
}

pub fn inverse_sine_transform(state: &ModalState, basis: &SineBasis) -> Result<PhysicalField> {
    if state.n_modes != basis.n_modes() {
        return Err(Error::Dimension {
            expected: format!("{} modes", basis.n_modes()),
            found: state.n_modes.to_string(),
        });
    }
    let ny = basis.ny();
    let mut field = PhysicalField::zeros(state.nx, ny);
    let mut buf = vec![0.0; state.n_modes];
    for i in 0..state.nx {
        for (m, b) in buf.iter_mut().enumerate() {
            *b = state.coeffs[m * state.nx + i];
        }
        basis.synthesize_line(&buf, &mut field.values[i * ny..(i + 1) * ny]);
    }
    Ok(field)
}

/// Builds a consistent domain, grid (dealiased collocation) and sine basis.
pub fn build_domain(
    kind: DomainKind,
    length: f64,
    width: f64,
    nx: usize,
    n_modes: usize,
    weight_k: f64,
) -> Result<(Domain, Grid, SineBasis)> {
    build_domain_with(kind, length, width, nx, n_modes, weight_k, true)
}

pub fn build_domain_with(
    kind: DomainKind,
    length: f64,
    width: f64,
    nx: usize,
    n_modes: usize,
    weight_k: f64,
    dealias: bool,
) -> Result<(Domain, Grid, SineBasis)> {
    let domain = Domain::new(kind, length, width, weight_k)?;
    let grid = Grid::new(length, nx, n_modes, dealias)?;
    let basis = SineBasis::new(width, n_modes, grid.ny_col)?;
    Ok((domain, grid, basis))
}

/// Domain, grid and basis of one run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: Domain,
    pub grid: Grid,
    pub basis: SineBasis,
}

impl Discretization {
    pub fn new(
        kind: DomainKind,
        length: f64,
        width: f64,
        nx: usize,
        n_modes: usize,
        weight_k: f64,
        dealias: bool,
    ) -> Result<Self> {
        let (domain, grid, basis) = build_domain_with(kind, length, width, nx, n_modes, weight_k, dealias)?;
        Ok(Self { domain, grid, basis })
    }

    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    pub fn n_modes(&self) -> usize {
        self.grid.n_modes
    }
}
