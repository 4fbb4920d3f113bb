//! Seeded random matrices, states and channels for tests and experiments.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::{Matrix, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn random_matrix(d: usize, rng: &mut impl Rng) -> Matrix {
    random_rect(d, d, rng)
}

pub fn random_rect(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = random_matrix(d, rng);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of R's diagonal moved into Q.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = random_matrix(d, rng);
    let qr = g.inner().clone().qr();
    let q = qr.q();
    let r = qr.r();
    Matrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    })
}

/// Normalized random state vector.
pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Full-rank random density matrix `G G^dag / tr(G G^dag)`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = random_matrix(d, rng);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    w.scale_real(1.0 / t)
}

/// Random probability vector of length `n` (flat Dirichlet).
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Kraus operators of a random channel with `k` operators, cut from a random
/// `(k d) x d` isometry.
pub fn random_kraus(d: usize, k: usize, rng: &mut impl Rng) -> Vec<Matrix> {
    let big = haar_unitary(d * k, rng);
    (0..k)
        .map(|a| Matrix::from_fn(d, d, |i, j| big[(a * d + i, j)]))
        .collect()
}

/// Independent deterministic stream `stream` under a base seed, for tasks
/// that may run in any order.
pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
