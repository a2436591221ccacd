//! Synthetic true spectral matrices on a frequency grid.
//!
//! The structured kinds are specified through their precision matrix
//! `C0(f) = I + offdiag(f)`, so that the partial coherence of the truth is
//! known by construction, and then mapped to `S0 = G C0^-1 G` with a fixed
//! positive channel gain `G`. Gains change the conditioning of `S0` (and so
//! the behaviour of the shrinkage rules) without changing any partial
//! coherence.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::pcoh::{partial_coherence, PartialCoherenceMatrix};

/// Uniform frequency grid `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
}

impl GridSpec {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let GridSpec { start_hz, stop_hz, step_hz } = *self;
        if !(start_hz.is_finite() && stop_hz.is_finite() && step_hz.is_finite()) || step_hz <= 0.0 {
            return Err(Error::Config(format!("invalid grid step {step_hz}")));
        }
        if stop_hz < start_hz {
            return Err(Error::EmptyGrid);
        }
        let n = ((stop_hz - start_hz) / step_hz + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start_hz + i as f64 * step_hz).collect())
    }
}

/// Model family and its parameters, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ModelKind {
    Identity(IdentityParams),
    Dense(DenseParams),
    Sparse(SparseParams),
    Fixed(FixedParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityParams {
    #[serde(default = "one")]
    pub c: f64,
}

/// `C0 = I + kappa B + s(f) B_block`, where `B` links every pair with
/// `0 < |j - k| <= bandwidth`, `B_block` links every pair among the first
/// `spike_channels` channels and `s(f)` is a sum of Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseParams {
    #[serde(default = "half")]
    pub kappa: f64,
    /// Defaults to `p - 1` (all pairs).
    #[serde(default)]
    pub bandwidth: Option<usize>,
    #[serde(default)]
    pub spike_height: f64,
    #[serde(default = "default_spike_centers")]
    pub spike_centers_hz: Vec<f64>,
    #[serde(default = "default_spike_width")]
    pub spike_width_hz: f64,
    /// Defaults to `p`.
    #[serde(default)]
    pub spike_channels: Option<usize>,
    #[serde(default)]
    pub gain_decades: f64,
}

/// `C0 = I + kappa sum_{(j,k) in pairs} (e_j e_k^T + e_k e_j^T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseParams {
    #[serde(default = "default_sparse_kappa")]
    pub kappa: f64,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<(usize, usize)>,
    #[serde(default)]
    pub gain_decades: f64,
}

/// A real symmetric `S0` held constant over frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedParams {
    pub matrix: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_spike_centers() -> Vec<f64> {
    vec![2.0, 3.25]
}
fn default_spike_width() -> f64 {
    0.15
}
fn default_sparse_kappa() -> f64 {
    0.4
}
fn default_pairs() -> Vec<(usize, usize)> {
    vec![(0, 1)]
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Identity(_) => "identity",
            Self::Dense(_) => "dense",
            Self::Sparse(_) => "sparse",
            Self::Fixed(_) => "fixed",
        }
    }
}

/// True spectral matrices over a frequency grid.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub label: String,
    pub p: usize,
    pub grid: Vec<f64>,
    pub matrices: Vec<HermitianMatrix>,
}

impl SpectralModel {
    /// Validates PD-ness and grid ordering.
    pub fn new(label: impl Into<String>, grid: Vec<f64>, matrices: Vec<HermitianMatrix>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if grid.len() != matrices.len() {
            return Err(Error::DimensionMismatch(grid.len(), matrices.len()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("frequency grid must be strictly increasing".into()));
        }
        let p = matrices[0].dim();
        for m in &matrices {
            if m.dim() != p {
                return Err(Error::DimensionMismatch(p, m.dim()));
            }
            m.cholesky_factor()?;
        }
        Ok(Self {
            label: label.into(),
            p,
            grid,
            matrices,
        })
    }

    /// Partial coherence of the truth at grid index `l`.
    pub fn true_partial_coherence(&self, l: usize) -> Result<PartialCoherenceMatrix> {
        partial_coherence(&self.matrices[l].invert()?)
    }
}

fn gains(p: usize, decades: f64) -> Vec<f64> {
    if p < 2 {
        return vec![1.0; p];
    }
    (0..p)
        .map(|j| 10f64.powf(decades * (j as f64 / (p - 1) as f64 - 0.5)))
        .collect()
}

fn spectral_from_precision(c0: DMatrix<f64>, g: &[f64]) -> Result<HermitianMatrix> {
    let c = HermitianMatrix::from_real(&c0)?;
    c.invert()?.congruence_diagonal(g)
}

/// Off-diagonal precision value of pair `(j, k)` in the dense model.
fn dense_offdiag(params: &DenseParams, p: usize, f: f64, j: usize, k: usize) -> f64 {
    let band = params.bandwidth.unwrap_or(p.saturating_sub(1));
    let block = params.spike_channels.unwrap_or(p);
    let mut v = 0.0;
    if j != k && j.abs_diff(k) <= band {
        v += params.kappa;
    }
    if j != k && j < block && k < block {
        let w = params.spike_width_hz;
        v += params.spike_height
            * params
                .spike_centers_hz
                .iter()
                .map(|c| (-0.5 * ((f - c) / w).powi(2)).exp())
                .sum::<f64>();
    }
    v
}

/// Builds the per-frequency truth for `kind` with `p` channels.
pub fn make_model(kind: &ModelKind, p: usize, grid: &[f64]) -> Result<SpectralModel> {
    if p == 0 {
        return Err(Error::Config("p must be positive".into()));
    }
    let matrices = match kind {
        ModelKind::Identity(ip) => {
            if !(ip.c.is_finite() && ip.c > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            vec![HermitianMatrix::scaled_identity(p, ip.c); grid.len()]
        }
        ModelKind::Dense(dp) => {
            let g = gains(p, dp.gain_decades);
            grid.iter()
                .map(|&f| {
                    let c0 = DMatrix::from_fn(p, p, |j, k| {
                        if j == k {
                            1.0
                        } else {
                            dense_offdiag(dp, p, f, j, k)
                        }
                    });
                    spectral_from_precision(c0, &g)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ModelKind::Sparse(sp) => {
            let mut c0 = DMatrix::<f64>::identity(p, p);
            for &(j, k) in &sp.pairs {
                if j >= p || k >= p || j == k {
                    return Err(Error::Config(format!("invalid channel pair ({j}, {k}) for p={p}")));
                }
                c0[(j, k)] = sp.kappa;
                c0[(k, j)] = sp.kappa;
            }
            let s0 = spectral_from_precision(c0, &gains(p, sp.gain_decades))?;
            vec![s0; grid.len()]
        }
        ModelKind::Fixed(fp) => {
            if fp.matrix.len() != p {
                return Err(Error::DimensionMismatch(fp.matrix.len(), p));
            }
            let rows: Vec<f64> = fp.matrix.iter().flatten().copied().collect();
            if rows.len() != p * p {
                return Err(Error::NonSquare { rows: p, cols: rows.len() / p.max(1) });
            }
            let s0 = HermitianMatrix::from_real(&DMatrix::from_row_slice(p, p, &rows))?;
            vec![s0; grid.len()]
        }
    };
    SpectralModel::new(kind.label(), grid.to_vec(), matrices)
}
