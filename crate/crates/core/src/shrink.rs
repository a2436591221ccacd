//! Shared representation of an affine shrinkage rule `alpha * X + beta * I`.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Rounding slack before a clamp is reported.
pub(crate) const CLAMP_SLACK: f64 = 1e-12;

/// Which closed-form rule produced a [`ShrinkageSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShrinkageMethod {
    /// Hilbert-Schmidt loss on the spectral matrix, target `tr{S}/p I`.
    HS,
    /// Quadratic loss on the spectral matrix, target `tr{S}/p I`.
    QLa,
    /// Quadratic loss on the spectral matrix, free target scale.
    QLb,
    /// Hilbert-Schmidt loss on the precision matrix.
    HSP,
    /// Quadratic loss on the precision matrix.
    QLP,
}

impl ShrinkageMethod {
    /// Whether the rule shrinks the precision matrix rather than the
    /// spectral matrix.
    pub fn is_precision(self) -> bool {
        matches!(self, Self::HSP | Self::QLP)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HS => "HS",
            Self::QLa => "QLa",
            Self::QLb => "QLb",
            Self::HSP => "HSP",
            Self::QLP => "QLP",
        }
    }
}

impl fmt::Display for ShrinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Affine shrinkage coefficients for one frequency.
///
/// For the spectral rules the convex form `(1 - rho) X + rho eta I` is kept
/// alongside `(alpha, beta)`; the two always satisfy `alpha = 1 - rho` and
/// `beta = rho * eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageSolution {
    pub method: ShrinkageMethod,
    pub alpha: f64,
    pub beta: f64,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
    /// Set when the raw closed form fell outside the admissible region and
    /// was projected back (rho into [0, 1], or alpha up to 0).
    pub clamped: bool,
}

impl ShrinkageSolution {
    /// Convex form; `rho` is clamped to [0, 1].
    pub(crate) fn from_eta_rho(method: ShrinkageMethod, eta: f64, rho: f64) -> Self {
        let clamped = rho < -CLAMP_SLACK || rho > 1.0 + CLAMP_SLACK;
        let rho = rho.clamp(0.0, 1.0);
        Self {
            method,
            alpha: 1.0 - rho,
            beta: rho * eta,
            eta: Some(eta),
            rho: Some(rho),
            clamped,
        }
    }

    pub(crate) fn from_alpha_beta(method: ShrinkageMethod, alpha: f64, beta: f64, clamped: bool) -> Self {
        Self {
            method,
            alpha,
            beta,
            eta: None,
            rho: None,
            clamped,
        }
    }
}
