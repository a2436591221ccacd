//! Seeded complex Gaussian eigencoefficients.
//!
//! Each Monte-Carlo cell gets its own generator, seeded by a stateless mix
//! of the base seed and the cell coordinates, so results never depend on
//! the order in which a thread pool happens to visit the cells.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::hermitian::HermitianMatrix;
use crate::multitaper::{spectral_matrix, EigenCoefficients};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replicate `m` at grid index `l`.
pub fn child_seed(base: u64, m: u64, l: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ m) ^ l.rotate_left(32))
}

/// Generator for one `(m, l)` cell.
pub fn cell_rng(base: u64, m: u64, l: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(base, m, l))
}

/// Draws `K` columns `L z` with `L L^H = S0` and `E[z z^H] = I`.
#[derive(Debug, Clone)]
pub struct WishartSampler {
    factor: DMatrix<Complex64>,
}

impl WishartSampler {
    pub fn new(s0: &HermitianMatrix) -> Result<Self> {
        Ok(Self {
            factor: s0.cholesky_factor()?,
        })
    }

    pub fn p(&self) -> usize {
        self.factor.nrows()
    }

    /// p x K eigencoefficient matrix.
    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> DMatrix<Complex64> {
        let p = self.p();
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let z = DMatrix::from_fn(p, k, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        });
        &self.factor * z
    }

    /// Multitaper spectral matrix built from one draw.
    pub fn draw_spectral<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> HermitianMatrix {
        spectral_matrix(&EigenCoefficients::new(0.0, self.draw(k, rng)))
    }
}

/// One-shot draw; prefer [`WishartSampler`] when drawing repeatedly from
/// the same matrix.
pub fn draw_eigencoefficients<R: Rng + ?Sized>(
    s0: &HermitianMatrix,
    k: usize,
    freq: f64,
    rng: &mut R,
) -> Result<EigenCoefficients> {
    let sampler = WishartSampler::new(s0)?;
    Ok(EigenCoefficients::new(freq, sampler.draw(k, rng)))
}
