//! Seeded random trial fields compatible with the boundary conditions.
//!
//! Sample `s` of a sweep with seed `seed` draws from its own ChaCha stream,
//! so sweeps give the same fields regardless of partitioning or order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Discretization, ModalState};

/// `x^2 (L-x)^3`, `x^3 (L-x)^3`, `x^2 (L-x)^4`.
pub fn shape_functions(length: f64) -> [Box<dyn Fn(f64) -> f64 + Send + Sync>; 3] {
    let l = length;
    [
        Box::new(move |x| x * x * (l - x).powi(3)),
        Box::new(move |x| x.powi(3) * (l - x).powi(3)),
        Box::new(move |x| x * x * (l - x).powi(4)),
    ]
}

pub fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng
}

/// `sum_{j <= max(1, N/2)} sum_p c_jp P_p(x) omega_j(y)` with `c ~ U[-1, 1]`.
pub fn random_field(disc: &Discretization, seed: u64, sample: u64) -> ModalState {
    let mut rng = sample_rng(seed, sample);
    let shapes = shape_functions(disc.domain.length);
    let x = disc.grid.interior_nodes();
    let n_active = (disc.n_modes() / 2).max(1);
    let mut s = ModalState::zeros(disc.n_modes(), disc.nx());
    for m in 0..n_active {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        for (v, &xi) in s.mode_mut(m).iter_mut().zip(&x) {
            *v = c.iter().zip(&shapes).map(|(c, p)| c * p(xi)).sum();
        }
    }
    s
}

/// A 1-D profile on nodes `0..=nx+1` from the same shape family.
pub fn random_profile(length: f64, nx: usize, seed: u64, sample: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, sample);
    let shapes = shape_functions(length);
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
    let h = length / (nx + 1) as f64;
    (0..=nx + 1)
        .map(|i| {
            if i == nx + 1 {
                return 0.0;
            }
            let x = i as f64 * h;
            c.iter().zip(&shapes).map(|(c, p)| c * p(x)).sum()
        })
        .collect()
}

/// `sum_{k=1}^{8} c_k sin(k pi x / L) / k` on nodes `0..=nx+1`.
pub fn random_sine_series(nx: usize, seed: u64, sample: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, sample);
    let c: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
    (0..=nx + 1)
        .map(|i| {
            if i == 0 || i == nx + 1 {
                return 0.0;
            }
            let s = i as f64 / (nx + 1) as f64;
            c.iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * s).sin() / (k + 1) as f64)
                .sum()
        })
        .collect()
}
