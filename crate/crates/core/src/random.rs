//! Seeded random objects for randomized verification.
//!
//! Every generator takes a caller-owned RNG. [`trial_rng`] derives an
//! independent ChaCha20 stream per trial so campaigns can run trials in any
//! order and still reproduce.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::layout::Layout;
use crate::linalg::thin_q;
use crate::matrix::{Hermitian, Matrix};
use crate::C64;

pub type TrialRng = ChaCha20Rng;

/// Counter-based RNG: the same `(seed, trial)` pair always yields the same
/// stream, regardless of what other trials ran.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: Layout, cols: Layout, rng: &mut R) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Uniformly (Haar) distributed unit vector.
pub fn random_pure_state<R: Rng + ?Sized>(layout: &Layout, rng: &mut R) -> Vec<C64> {
    let mut v = gaussian_vector(layout.total_dim(), rng);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

/// `G G† / Tr(G G†)` with `G` a `d × rank` Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(layout: &Layout, rank: usize, rng: &mut R) -> Result<Hermitian<f64>> {
    let k = Layout::single("rank", rank.max(1))?;
    let g = gaussian_matrix(layout.clone(), k, rng);
    let m = g.matmul(&g.adjoint())?;
    let tr = m.trace().re;
    Ok(Hermitian::symmetrized(m.scale(1.0 / tr)))
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(layout: &Layout, rng: &mut R) -> Hermitian<f64> {
    let g = gaussian_matrix(layout.clone(), layout.clone(), rng);
    let m = g.add(&g.adjoint()).expect("same layouts");
    Hermitian::symmetrized(m.scale(0.5))
}

/// Haar-random isometry from `cols` into `rows` (needs `rows ≥ cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: Layout, cols: Layout, rng: &mut R) -> Result<Matrix<f64>> {
    thin_q(&gaussian_matrix(rows, cols, rng))
}

pub fn random_unitary<R: Rng + ?Sized>(layout: &Layout, rng: &mut R) -> Result<Matrix<f64>> {
    random_isometry(layout.clone(), layout.clone(), rng)
}
