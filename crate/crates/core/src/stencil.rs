//! Finite-difference weights on arbitrary nodes and the boundary-agnostic
//! nodal differentiator used by the functionals.

/// Fornberg's recursion: `w[k][i]` is the weight of `nodes[i]` in the
/// approximation of the `k`-th derivative at `z`, for `k = 0..=max_order`.
pub fn fornberg_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Solves a small dense system `a x = b` (row-major `a`) by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
pub fn solve_dense(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))?;
        if m[p * n + k] == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Some(x)
}

/// Second-order centered stencil for derivative `order`, offsets `-r..=r`.
pub fn centered_stencil(order: usize) -> Option<&'static [f64]> {
    const D1: [f64; 3] = [-0.5, 0.0, 0.5];
    const D2: [f64; 3] = [1.0, -2.0, 1.0];
    const D3: [f64; 5] = [-0.5, 1.0, 0.0, -1.0, 0.5];
    const D4: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];
    const D5: [f64; 7] = [-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5];
    match order {
        1 => Some(&D1),
        2 => Some(&D2),
        3 => Some(&D3),
        4 => Some(&D4),
        5 => Some(&D5),
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct RowStencil {
    start: usize,
    weights: Vec<f64>,
}

/// Derivatives of orders 1..=5 at every node `0..=nx+1` of a uniform grid,
/// for nodal vectors whose boundary entries hold the boundary values.
///
/// Uses the centered stencil wherever it fits and a one-sided window of
/// `order + 3` points (third order) near the ends. No derivative boundary
/// condition is assumed, so fields that only vanish at the ends are handled.
#[derive(Debug, Clone)]
pub struct NodalDifferentiator {
    n_nodes: usize,
    h: f64,
    rows: Vec<Vec<RowStencil>>,
}

pub const MAX_NODAL_ORDER: usize = 5;

impl NodalDifferentiator {
    pub fn new(n_nodes: usize, h: f64) -> Self {
        assert!(
            n_nodes >= MAX_NODAL_ORDER + 4,
            "too few nodes for the one-sided windows"
        );
        let mut rows = Vec::with_capacity(MAX_NODAL_ORDER);
        for order in 1..=MAX_NODAL_ORDER {
            let centered = centered_stencil(order).expect("orders 1..=5 have stencils");
            let r = centered.len() / 2;
            let scale = h.powi(-(order as i32));
            let width = order + 3;
            let mut per_node = Vec::with_capacity(n_nodes);
            for i in 0..n_nodes {
                if i >= r && i + r < n_nodes {
                    per_node.push(RowStencil {
                        start: i - r,
                        weights: centered.iter().map(|c| c * scale).collect(),
                    });
                } else {
                    let start = i.saturating_sub(width / 2).min(n_nodes - width);
                    let local: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
                    let w = fornberg_weights(i as f64, &local, order);
                    per_node.push(RowStencil {
                        start,
                        weights: w[order].iter().map(|c| c * scale).collect(),
                    });
                }
            }
            rows.push(per_node);
        }
        Self { n_nodes, h, rows }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn derivative_at(&self, order: usize, values: &[f64], node: usize) -> f64 {
        let row = &self.rows[order - 1][node];
        row.weights
            .iter()
            .zip(&values[row.start..row.start + row.weights.len()])
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Derivative of `order` (1..=5, or 0 for the values themselves) at all nodes.
    pub fn derivative(&self, order: usize, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n_nodes);
        if order == 0 {
            return values.to_vec();
        }
        assert!(order <= MAX_NODAL_ORDER);
        (0..self.n_nodes)
            .map(|i| self.derivative_at(order, values, i))
            .collect()
    }
}

/// Embeds interior values into a nodal vector with zero boundary entries.
pub fn with_zero_ends(interior: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(interior.len() + 2);
    v.push(0.0);
    v.extend_from_slice(interior);
    v.push(0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_centered_stencils() {
        for order in 1..=5 {
            let c = centered_stencil(order).unwrap();
            let r = c.len() as i64 / 2;
            let nodes: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
            let w = fornberg_weights(0.0, &nodes, order);
            for (a, b) in w[order].iter().zip(c) {
                assert!((a - b).abs() < 1e-12, "order {order}");
            }
        }
    }

    #[test]
    fn nodal_derivatives_exact_on_low_degree() {
        let n = 41;
        let h = 0.05;
        let d = NodalDifferentiator::new(n, h);
        // the centered first difference is exact on quadratics, the second on cubics
        let q = |x: f64| 1.0 + x - 2.0 * x * x;
        let dp = |x: f64| 1.0 - 4.0 * x;
        let p = |x: f64| q(x) + 0.5 * x * x * x;
        let d2p = |x: f64| -4.0 + 3.0 * x;
        let vq: Vec<f64> = (0..n).map(|i| q(i as f64 * h)).collect();
        let v: Vec<f64> = (0..n).map(|i| p(i as f64 * h)).collect();
        let d1 = d.derivative(1, &vq);
        let d2 = d.derivative(2, &v);
        for i in 0..n {
            let x = i as f64 * h;
            assert!((d1[i] - dp(x)).abs() < 1e-9, "i={i}");
            assert!((d2[i] - d2p(x)).abs() < 1e-7, "i={i}");
        }
    }

    #[test]
    fn dense_solve_small_system() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let x = solve_dense(&a, &[3.0, 5.0, 5.0]).unwrap();
        for (g, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((g - e).abs() < 1e-14);
        }
        assert!(solve_dense(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0]).is_none());
    }
}
