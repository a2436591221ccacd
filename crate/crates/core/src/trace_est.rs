//! Data-driven estimates of the four trace functionals, and a Monte-Carlo
//! check of their bias.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, Provenance, TraceSet};
use crate::simlab::sampling::{cell_rng, WishartSampler};

/// Minimum replicate count accepted by [`bias_check`].
pub const MIN_BIAS_REPLICATES: usize = 100;

/// Trace functionals estimated from a multitaper spectral matrix:
///
/// - `tr{S}`    <- `tr{S_hat}`
/// - `tr{S^2}`  <- `tr{S_hat^2} - tr^2{S_hat}/K`
/// - `tr{S^-1}` <- `(1 - p/K) tr{S_hat^-1}`
/// - `tr{S^-2}` <- `(1 - p/K)^2 tr{S_hat^-2}`
pub fn estimate_traces(s_hat: &HermitianMatrix, k: usize) -> Result<TraceSet> {
    let p = s_hat.dim();
    if k <= p + 1 {
        return Err(Error::InsufficientTapers { k, p, need: "K > p + 1" });
    }
    let inv = s_hat.invert()?;
    let shrink = 1.0 - p as f64 / k as f64;
    let tr = s_hat.trace();
    Ok(TraceSet {
        tr_s: tr,
        tr_s2: s_hat.trace_of_square() - tr * tr / k as f64,
        tr_sinv: shrink * inv.trace(),
        tr_sinv2: shrink * shrink * inv.trace_of_square(),
        provenance: Provenance::Estimated,
    })
}

/// The exactly unbiased estimator of `tr{S^-2}`, kept for comparison only:
/// the one-term estimate minus `(1/K)(1 - p/K) tr^2{S_hat^-1}`.
pub fn two_term_sinv2(s_hat: &HermitianMatrix, k: usize) -> Result<f64> {
    let p = s_hat.dim();
    if k <= p + 1 {
        return Err(Error::InsufficientTapers { k, p, need: "K > p + 1" });
    }
    let inv = s_hat.invert()?;
    let shrink = 1.0 - p as f64 / k as f64;
    let ti = inv.trace();
    Ok(shrink * shrink * inv.trace_of_square() - shrink * ti * ti / k as f64)
}

/// Expected value of each production estimator when `K S_hat` is complex
/// Wishart with `K` degrees of freedom.
pub fn expected_estimates(truth: &TraceSet, p: usize, k: usize) -> TraceSet {
    let (pf, kf) = (p as f64, k as f64);
    let kp = kf - pf;
    TraceSet {
        tr_s: truth.tr_s,
        tr_s2: (1.0 - 1.0 / (kf * kf)) * truth.tr_s2,
        tr_sinv: truth.tr_sinv,
        tr_sinv2: truth.tr_sinv2 * kp * kp / (kp * kp - 1.0)
            * (1.0 + truth.tr_sinv * truth.tr_sinv / (kp * truth.tr_sinv2)),
        provenance: Provenance::Oracle,
    }
}

/// One line of a [`BiasReport`].
#[derive(Debug, Clone, Serialize)]
pub struct BiasRow {
    pub functional: &'static str,
    /// The functional of the true matrix.
    pub target: f64,
    /// Theoretical mean of the estimator.
    pub expected_mean: f64,
    pub mc_mean: f64,
    pub se: f64,
    pub variance: f64,
    /// `variance / mc_mean^2`.
    pub relative_variance: f64,
    pub negative_count: usize,
    /// `|mc_mean - expected_mean| <= z_limit * se`.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub z_limit: f64,
    pub rows: Vec<BiasRow>,
}

impl BiasReport {
    pub fn row(&self, functional: &str) -> Option<&BiasRow> {
        self.rows.iter().find(|r| r.functional == functional)
    }

    /// Whether the rejected two-term `tr{S^-2}` estimator has the larger
    /// empirical variance.
    pub fn two_term_noisier(&self) -> bool {
        match (self.row("tr_sinv2"), self.row("tr_sinv2_two_term")) {
            (Some(a), Some(b)) => b.variance > a.variance,
            _ => false,
        }
    }
}

fn summarize(
    functional: &'static str,
    xs: &[f64],
    target: f64,
    expected_mean: f64,
    z_limit: f64,
) -> BiasRow {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (variance / m).sqrt();
    BiasRow {
        functional,
        target,
        expected_mean,
        mc_mean: mean,
        se,
        variance,
        relative_variance: variance / (mean * mean),
        negative_count: xs.iter().filter(|x| **x < 0.0).count(),
        pass: (mean - expected_mean).abs() <= z_limit * se,
    }
}

/// Monte-Carlo mean, standard error and variance of each trace estimator
/// from `m` Wishart draws around `s0`. Replicate `i` uses the generator for
/// cell `(i, 0)` of `seed`.
pub fn bias_check(s0: &HermitianMatrix, k: usize, m: usize, seed: u64) -> Result<BiasReport> {
    let p = s0.dim();
    if m < MIN_BIAS_REPLICATES {
        return Err(Error::Config(format!(
            "bias check needs at least {MIN_BIAS_REPLICATES} replicates, got {m}"
        )));
    }
    if k <= p + 1 {
        return Err(Error::InsufficientTapers { k, p, need: "K > p + 1" });
    }
    let truth = s0.trace_powers()?;
    let sampler = WishartSampler::new(s0)?;
    let draws: Vec<[f64; 5]> = (0..m)
        .into_par_iter()
        .map(|i| {
            let s_hat = sampler.draw_spectral(k, &mut cell_rng(seed, i as u64, 0));
            let t = estimate_traces(&s_hat, k)?;
            let two = two_term_sinv2(&s_hat, k)?;
            Ok([t.tr_s, t.tr_s2, t.tr_sinv, t.tr_sinv2, two])
        })
        .collect::<Result<_>>()?;
    let col = |j: usize| draws.iter().map(|d| d[j]).collect::<Vec<_>>();
    let exp = expected_estimates(&truth, p, k);
    let z = 3.0;
    Ok(BiasReport {
        p,
        k,
        m,
        seed,
        z_limit: z,
        rows: vec![
            summarize("tr_s", &col(0), truth.tr_s, exp.tr_s, z),
            summarize("tr_s2", &col(1), truth.tr_s2, exp.tr_s2, z),
            summarize("tr_sinv", &col(2), truth.tr_sinv, exp.tr_sinv, z),
            summarize("tr_sinv2", &col(3), truth.tr_sinv2, exp.tr_sinv2, z),
            summarize("tr_sinv2_two_term", &col(4), truth.tr_sinv2, truth.tr_sinv2, z),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_example() {
        let t = estimate_traces(&HermitianMatrix::from_real_diagonal(&[2., 4.]), 8).unwrap();
        assert_relative_eq!(t.tr_s, 6.0);
        assert_relative_eq!(t.tr_s2, 15.5);
        assert_relative_eq!(t.tr_sinv, 0.5625);
        assert_relative_eq!(t.tr_sinv2, 0.17578125);
        assert_eq!(t.provenance, Provenance::Estimated);
    }

    #[test]
    fn identity_input() {
        for (p, k) in [(2, 4), (3, 8), (10, 12)] {
            let t = estimate_traces(&HermitianMatrix::identity(p), k).unwrap();
            let (pf, kf) = (p as f64, k as f64);
            assert_relative_eq!(t.tr_s, pf, max_relative = 1e-14);
            assert_relative_eq!(t.tr_s2, pf - pf * pf / kf, max_relative = 1e-14);
            assert_relative_eq!(t.tr_sinv, (1.0 - pf / kf) * pf, max_relative = 1e-14);
            assert_relative_eq!(t.tr_sinv2, (1.0 - pf / kf).powi(2) * pf, max_relative = 1e-14);
        }
    }

    #[test]
    fn taper_precondition() {
        let s = HermitianMatrix::identity(3);
        assert!(matches!(estimate_traces(&s, 3), Err(Error::InsufficientTapers { .. })));
        assert!(matches!(estimate_traces(&s, 4), Err(Error::InsufficientTapers { .. })));
        assert!(estimate_traces(&s, 5).is_ok());
    }

    #[test]
    fn singular_input() {
        let s = HermitianMatrix::from_real_diagonal(&[1., 0., 1.]);
        assert_eq!(estimate_traces(&s, 8).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn bias_on_identity() {
        let r = bias_check(&HermitianMatrix::identity(3), 8, 10_000, 5).unwrap();
        for name in ["tr_s", "tr_s2", "tr_sinv"] {
            let row = r.row(name).unwrap();
            assert!(row.pass, "{row:?}");
        }
        assert_relative_eq!(r.row("tr_s").unwrap().expected_mean, 3.0);
        assert_relative_eq!(r.row("tr_sinv").unwrap().expected_mean, 3.0);
    }

    #[test]
    fn two_term_estimator_goes_negative() {
        let r = bias_check(&HermitianMatrix::identity(3), 5, 10_000, 17).unwrap();
        assert!(r.row("tr_sinv2_two_term").unwrap().negative_count > 0);
        assert_eq!(r.row("tr_sinv2").unwrap().negative_count, 0);
    }

    #[test]
    fn too_few_replicates() {
        assert!(matches!(
            bias_check(&HermitianMatrix::identity(2), 6, 99, 0),
            Err(Error::Config(_))
        ));
    }
}
