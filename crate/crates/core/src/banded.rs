//! General banded matrices and an LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: row `kl + ku + i - j` of column
//! `j` holds entry `(i, j)`, with `kl` extra rows on top reserved for fill-in
//! created by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // diagonals[(ku + i - j) * n + j] = A[i][j] for -ku <= i - j <= kl
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; (kl + ku + 1) * n],
        }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    fn index(&self, i: usize, j: usize) -> usize {
        (self.ku + i - j) * self.n + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.index(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.index(i, j);
        self.data[k] += v;
    }

    /// `self += alpha * other`; `other` must fit inside this band.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandedMatrix) {
        assert_eq!(self.n, other.n);
        assert!(other.kl <= self.kl && other.ku <= self.ku);
        for j in 0..self.n {
            let lo = j.saturating_sub(other.ku);
            let hi = (j + other.kl).min(self.n - 1);
            for i in lo..=hi {
                let v = other.get(i, j);
                if v != 0.0 {
                    self.add(i, j, alpha * v);
                }
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut s = 0.0;
            for j in lo..=hi {
                s += self.data[self.index(i, j)] * x[j];
            }
            *yi = s;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                d[i * self.n + j] = self.get(i, j);
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// LU factors of a banded matrix with row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    // ldab = 2 kl + ku + 1 rows per column; ab[(kl + ku + i - j) * n + j] holds U or L(i, j)
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let ku = a.ku;
        let ldab = 2 * kl + ku + 1;
        let kv = ku + kl;
        let mut ab = vec![0.0; ldab * n];
        let at = |i: usize, j: usize| (kv + i - j) * n + j;
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                let k = at(i, j);
                ab[k] = a.get(i, j);
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = ab[at(k, k)].abs();
            for i in k + 1..=last {
                let v = ab[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if !(best > 1e-14 * scale) {
                return Err(Error::Precondition(format!("zero pivot in column {k}")));
            }
            let jmax = (k + kv).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a1 = at(k, j);
                    let a2 = at(p, j);
                    ab.swap(a1, a2);
                }
            }
            let piv = ab[at(k, k)];
            for i in k + 1..=last {
                let li = at(i, k);
                ab[li] /= piv;
                let l = ab[li];
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let u = ab[at(k, j)];
                    let t = at(i, j);
                    ab[t] -= l * u;
                }
            }
        }
        Ok(Self { n, kl, ku, ab, pivots })
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.ab[self.idx(i, k)] * bk;
                }
            }
        }
        let kv = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kv).min(n - 1) {
                s -= self.ab[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.ab[self.idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64, diag_boost: f64) -> BandedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
            a.add(i, i, diag_boost);
        }
        a
    }

    #[test]
    fn matches_dense_solution() {
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 3), (64, 2, 4), (30, 4, 1)] {
            let a = random_banded(n, kl, ku, n as u64, 0.0);
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.5).collect();
            let b = a.matvec(&x);
            let lu = BandedLu::factor(&a).unwrap();
            let got = lu.solve(&b);
            let err = got.iter().zip(&x).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n} err={err}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 2, 2.0);
        a.set(2, 1, 3.0);
        a.set(2, 2, 1.0);
        let lu = BandedLu::factor(&a).unwrap();
        let x = [1.0, -2.0, 0.5];
        let got = lu.solve(&a.matvec(&x));
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = BandedMatrix::zeros(4, 1, 1);
        assert!(BandedLu::factor(&a).is_err());
    }

    #[test]
    fn add_scaled_and_dense() {
        let mut a = BandedMatrix::identity(4, 2, 2);
        let mut b = BandedMatrix::zeros(4, 1, 1);
        b.set(1, 2, 3.0);
        a.add_scaled(2.0, &b);
        let d = a.to_dense();
        assert_eq!(d[4 + 2], 6.0);
        assert_eq!(d[0], 1.0);
        assert_eq!(a.get(3, 0), 0.0);
    }
}
