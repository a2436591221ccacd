//! Partial coherence, squared-error aggregates and PRISE reports.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{fmt_num, round_sig};
use crate::hermitian::HermitianMatrix;

/// Real symmetric matrix of squared partial coherences; the diagonal is 1
/// by convention and never enters an error sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCoherenceMatrix {
    values: DMatrix<f64>,
}

impl PartialCoherenceMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Off-diagonal entries `(j, k, value)` with `j < k`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = self.dim();
        (0..p).flat_map(move |j| ((j + 1)..p).map(move |k| (j, k, self.values[(j, k)])))
    }
}

/// `|c_jk|^2 / (c_jj c_kk)` from a precision matrix.
pub fn partial_coherence(c: &HermitianMatrix) -> Result<PartialCoherenceMatrix> {
    let p = c.dim();
    let diag = c.diagonal();
    if let Some(j) = diag.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::NonPositiveDiagonal(j));
    }
    let values = DMatrix::from_fn(p, p, |j, k| {
        if j == k {
            1.0
        } else {
            c.get(j, k).norm_sqr() / (diag[j] * diag[k])
        }
    });
    Ok(PartialCoherenceMatrix { values })
}

/// `sum_{j<k} (a_jk - b_jk)^2`.
pub fn squared_error(estimate: &PartialCoherenceMatrix, truth: &PartialCoherenceMatrix) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::DimensionMismatch(estimate.dim(), truth.dim()));
    }
    Ok(estimate
        .pairs()
        .map(|(j, k, v)| (v - truth.get(j, k)).powi(2))
        .sum())
}

/// Percentage relative improvement in squared error over the baseline.
pub fn prise(e_basic: f64, e_method: f64) -> Result<f64> {
    if !(e_basic > 0.0) {
        return Err(Error::ZeroBaseline);
    }
    Ok(100.0 * (e_basic - e_method) / e_basic)
}

/// Arithmetic mean over the frequency grid.
pub fn average_prise(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-frequency results for one method.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSeries {
    pub method: String,
    /// Mean summed squared error over replicates, per frequency.
    pub mean_error: Vec<f64>,
    pub prise_pct: Vec<f64>,
    pub average_prise_pct: f64,
    /// Mean shrinkage coefficients per frequency (absent for Raw).
    pub mean_alpha: Option<Vec<f64>>,
    pub mean_beta: Option<Vec<f64>>,
    /// Only for the convex spectral rules.
    pub mean_rho: Option<Vec<f64>>,
    /// Mean of `beta tr{S_hat}` for precision rules.
    pub mean_beta_tr_shat: Option<Vec<f64>>,
    /// Replicates where a coefficient was projected back into range.
    pub clamped_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub model: String,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

/// PRISE per frequency and per method, plus frequency averages.
#[derive(Debug, Clone, Serialize)]
pub struct PriseReport {
    pub meta: ReportMeta,
    pub freqs_hz: Vec<f64>,
    pub methods: Vec<MethodSeries>,
}

impl PriseReport {
    pub fn series(&self, method: &str) -> Option<&MethodSeries> {
        self.methods.iter().find(|s| s.method == method)
    }

    pub fn average(&self, method: &str) -> Option<f64> {
        self.series(method).map(|s| s.average_prise_pct)
    }

    /// PRISE of `method` at the grid point nearest `freq`.
    pub fn prise_at(&self, method: &str, freq: f64) -> Option<f64> {
        let l = self
            .freqs_hz
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - freq).abs().total_cmp(&(b.1 - freq).abs()))?
            .0;
        self.series(method).map(|s| s.prise_pct[l])
    }

    /// `freq_hz,method,prise_pct`, frequency-major.
    pub fn write_by_freq_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["freq_hz", "method", "prise_pct"])?;
        for (l, f) in self.freqs_hz.iter().enumerate() {
            for s in &self.methods {
                out.write_record([fmt_num(*f), s.method.clone(), fmt_num(s.prise_pct[l])])?;
            }
        }
        out.flush()
    }

    /// `method,prise_pct` with the frequency average.
    pub fn write_average_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method", "prise_pct"])?;
        for s in &self.methods {
            out.write_record([s.method.clone(), fmt_num(s.average_prise_pct)])?;
        }
        out.flush()
    }

    /// Copy with every number rounded to the output precision.
    pub fn rounded(&self) -> Self {
        let r = |v: &Vec<f64>| v.iter().map(|x| round_sig(*x)).collect::<Vec<_>>();
        let ro = |v: &Option<Vec<f64>>| v.as_ref().map(r);
        Self {
            meta: self.meta.clone(),
            freqs_hz: r(&self.freqs_hz),
            methods: self
                .methods
                .iter()
                .map(|s| MethodSeries {
                    method: s.method.clone(),
                    mean_error: r(&s.mean_error),
                    prise_pct: r(&s.prise_pct),
                    average_prise_pct: round_sig(s.average_prise_pct),
                    mean_alpha: ro(&s.mean_alpha),
                    mean_beta: ro(&s.mean_beta),
                    mean_rho: ro(&s.mean_rho),
                    mean_beta_tr_shat: ro(&s.mean_beta_tr_shat),
                    clamped_count: s.clamped_count,
                })
                .collect(),
        }
    }
}
