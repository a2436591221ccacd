//! Sine tapers, eigencoefficients and the multitaper spectral matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// K orthonormal sine tapers of length N, one taper per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperSet {
    n: usize,
    k: usize,
    weights: DMatrix<f64>,
}

impl TaperSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Builds a taper set from arbitrary rows; used for degenerate tests and
    /// for callers with their own taper family.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let (k, n) = weights.shape();
        if k == 0 || n == 0 {
            return Err(Error::BadCount { k, n });
        }
        Ok(Self { n, k, weights })
    }
}

/// `h_{k,t} = sqrt(2/(N+1)) sin((k+1) pi (t+1) / (N+1))` for `k < K`, `t < N`.
pub fn sine_tapers(n: usize, k: usize) -> Result<TaperSet> {
    if k == 0 || k > n {
        return Err(Error::BadCount { k, n });
    }
    let np1 = (n + 1) as f64;
    let amp = (2.0 / np1).sqrt();
    let weights = DMatrix::from_fn(k, n, |kk, t| {
        amp * ((kk + 1) as f64 * PI * (t + 1) as f64 / np1).sin()
    });
    Ok(TaperSet { n, k, weights })
}

/// Spectral window bandwidth of K sine tapers: `(K+1) / ((N+1) dt)`.
pub fn bandwidth(k: usize, n: usize, dt: f64) -> f64 {
    (k as f64 + 1.0) / ((n as f64 + 1.0) * dt)
}

/// Nyquist frequency `1/(2 dt)`.
pub fn nyquist(dt: f64) -> f64 {
    0.5 / dt
}

/// Whether `B/2 < |f| < f_N - B/2`, the band where eigencoefficients are
/// approximately i.i.d. complex Gaussian.
pub fn in_valid_band(freq: f64, k: usize, n: usize, dt: f64) -> bool {
    let half_b = 0.5 * bandwidth(k, n, dt);
    let f = freq.abs();
    f > half_b && f < nyquist(dt) - half_b
}

/// The p x K matrix `J(f)` of tapered Fourier transforms at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCoefficients {
    pub freq: f64,
    pub j: DMatrix<Complex64>,
}

impl EigenCoefficients {
    pub fn new(freq: f64, j: DMatrix<Complex64>) -> Self {
        Self { freq, j }
    }

    pub fn p(&self) -> usize {
        self.j.nrows()
    }

    pub fn k(&self) -> usize {
        self.j.ncols()
    }
}

/// Direct-summation eigencoefficients of a p x N real series:
/// column k is `dt^{1/2} sum_t h_{k,t} x_t exp(-i 2 pi f t dt)`.
pub fn eigencoefficients(
    x: &DMatrix<f64>,
    tapers: &TaperSet,
    freq: f64,
    dt: f64,
) -> Result<EigenCoefficients> {
    if x.ncols() != tapers.n {
        return Err(Error::LengthMismatch {
            expected: tapers.n,
            got: x.ncols(),
        });
    }
    let nyq = nyquist(dt);
    if !freq.is_finite() || freq.abs() > nyq * (1.0 + 1e-12) {
        return Err(Error::FrequencyOutOfRange { freq, nyquist: nyq });
    }
    let p = x.nrows();
    let phase: Vec<Complex64> = (0..tapers.n)
        .map(|t| Complex64::from_polar(1.0, -2.0 * PI * freq * t as f64 * dt))
        .collect();
    let scale = dt.sqrt();
    let mut j = DMatrix::<Complex64>::zeros(p, tapers.k);
    for kk in 0..tapers.k {
        for ch in 0..p {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, ph) in phase.iter().enumerate() {
                acc += ph * (tapers.weights[(kk, t)] * x[(ch, t)]);
            }
            j[(ch, kk)] = acc * scale;
        }
    }
    Ok(EigenCoefficients { freq, j })
}

/// Multitaper spectral matrix `(1/K) J J^H`.
pub fn spectral_matrix(j: &EigenCoefficients) -> HermitianMatrix {
    let k = j.k().max(1) as f64;
    let gram = &j.j * j.j.adjoint();
    HermitianMatrix::symmetrized(gram / Complex64::new(k, 0.0))
}
