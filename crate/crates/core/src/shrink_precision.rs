//! Oracle shrinkage of the precision matrix, `alpha S_hat^-1 + beta I`.
//!
//! Both rules need the inverse moments of the complex Wishart distribution,
//! which exist only for `K > p + 1`.

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, TraceSet};
use crate::shrink::{ShrinkageMethod, ShrinkageSolution, CLAMP_SLACK};

fn check_inputs(t: &TraceSet, p: usize, k: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::DegenerateTraces("dimension is zero"));
    }
    if k <= p + 1 {
        return Err(Error::InsufficientTapers { k, p, need: "K > p + 1" });
    }
    if !t.all_positive_finite() {
        return Err(Error::DegenerateTraces("trace values must be positive and finite"));
    }
    Ok(())
}

/// Resolves the sphericity numerator `p tr{A^2}/tr^2{A} - 1`.
///
/// A negative numerator can only come from estimated traces (or rounding);
/// the estimate is then projected onto `alpha = 0` with the best scalar
/// multiple of the identity, `fallback_beta`.
fn finish(
    method: ShrinkageMethod,
    numerator: f64,
    den: f64,
    beta: impl FnOnce(f64) -> f64,
    fallback_beta: f64,
) -> Result<ShrinkageSolution> {
    if !(den.is_finite() && den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    if numerator < 0.0 {
        let clamped = numerator < -CLAMP_SLACK;
        return Ok(ShrinkageSolution::from_alpha_beta(method, 0.0, fallback_beta, clamped));
    }
    Ok(ShrinkageSolution::from_alpha_beta(method, numerator / den, beta(den), false))
}

/// Hilbert-Schmidt risk minimizer for the precision matrix.
///
/// With `r = tr{S^-2}/tr^2{S^-1}` and `c3 = K/((K-p)^3 - (K-p))`:
/// `D = c3 p (K-p)^2 r + c3 p (K-p) - K/(K-p)`,
/// `alpha = (p r - 1)/D`, `beta = c3 tr{S^-1} (r + K - p)/D`.
pub fn hsp_oracle(t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    check_inputs(t, p, k)?;
    let (pf, kf) = (p as f64, k as f64);
    let kp = kf - pf;
    let r = t.tr_sinv2 / (t.tr_sinv * t.tr_sinv);
    let c3 = kf / (kp * kp * kp - kp);
    let den = c3 * pf * kp * kp * r + c3 * pf * kp - kf / kp;
    finish(
        ShrinkageMethod::HSP,
        pf * r - 1.0,
        den,
        |d| c3 * t.tr_sinv * (r + kp) / d,
        t.tr_sinv / pf,
    )
}

/// Quadratic-loss minimizer for the precision matrix.
///
/// With `r = tr{S^2}/tr^2{S}` and `c0 = K^2/((K-p)^2 - 1)`:
/// `D = c0 p r - K/(K-p)`, `alpha = (p r - 1)/D`,
/// `beta = p (c0 - K/(K-p)) / (D tr{S})`.
pub fn qlp_oracle(t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    check_inputs(t, p, k)?;
    let (pf, kf) = (p as f64, k as f64);
    let kp = kf - pf;
    let r = t.tr_s2 / (t.tr_s * t.tr_s);
    let c0 = kf * kf / (kp * kp - 1.0);
    let den = c0 * pf * r - kf / kp;
    finish(
        ShrinkageMethod::QLP,
        pf * r - 1.0,
        den,
        |d| pf * (c0 - kf / kp) / (d * t.tr_s),
        t.tr_s / t.tr_s2,
    )
}

/// Dispatches to the precision rule named by `method`.
pub fn precision_oracle(method: ShrinkageMethod, t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    match method {
        ShrinkageMethod::HSP => hsp_oracle(t, p, k),
        ShrinkageMethod::QLP => qlp_oracle(t, p, k),
        other => Err(Error::Config(format!("{other} is not a precision-matrix rule"))),
    }
}

/// `alpha S_hat^-1 + beta I`.
pub fn apply_precision_affine(s_hat: &HermitianMatrix, sol: &ShrinkageSolution) -> Result<HermitianMatrix> {
    Ok(apply_to_inverse(&s_hat.invert()?, sol))
}

/// As [`apply_precision_affine`] with `S_hat^-1` already at hand.
pub fn apply_to_inverse(s_hat_inv: &HermitianMatrix, sol: &ShrinkageSolution) -> HermitianMatrix {
    s_hat_inv.affine(sol.alpha, sol.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn traces(diag: &[f64]) -> TraceSet {
        HermitianMatrix::from_real_diagonal(diag).trace_powers().unwrap()
    }

    #[test]
    fn hsp_diag_example() {
        let s = hsp_oracle(&traces(&[1., 2.]), 2, 4).unwrap();
        // r = 5/9, c3 = 2/3, D = 80/27 + 8/3 - 2 = 98/27
        assert_relative_eq!(s.alpha, (1.0 / 9.0) / (98.0 / 27.0), max_relative = 1e-13);
        assert_relative_eq!(s.beta, (2.0 / 3.0) * 1.5 * (5.0 / 9.0 + 2.0) / (98.0 / 27.0), max_relative = 1e-13);
        assert_relative_eq!(s.alpha, 0.030613, epsilon = 1e-6);
        assert_relative_eq!(s.beta, 0.70408, epsilon = 5e-6);
        assert!(!s.clamped);
    }

    #[test]
    fn qlp_diag_example() {
        let s = qlp_oracle(&traces(&[1., 2.]), 2, 4).unwrap();
        // r = 5/9, c0 = 16/3, D = 160/27 - 2 = 106/27
        assert_relative_eq!(s.alpha, (1.0 / 9.0) / (106.0 / 27.0), max_relative = 1e-13);
        assert_relative_eq!(s.beta, 2.0 * (16.0 / 3.0 - 2.0) / (3.0 * 106.0 / 27.0), max_relative = 1e-13);
        assert_relative_eq!(s.alpha, 0.028302, epsilon = 5e-7);
        assert_relative_eq!(s.beta, 0.566038, epsilon = 5e-7);
    }

    #[test]
    fn scaled_identity_recovers_true_precision() {
        for (c, p) in [(0.5, 2), (3.0, 5), (1.0, 10), (42.0, 3)] {
            let t = HermitianMatrix::scaled_identity(p, c).trace_powers().unwrap();
            for k in [p + 2, p + 3, 3 * p] {
                for s in [hsp_oracle(&t, p, k).unwrap(), qlp_oracle(&t, p, k).unwrap()] {
                    assert!(s.alpha.abs() < 1e-12, "{s:?}");
                    assert_relative_eq!(s.beta, 1.0 / c, max_relative = 1e-12);
                    assert!(!s.clamped);
                }
            }
        }
    }

    #[test]
    fn taper_count_boundary() {
        let t = traces(&[1., 2.]);
        assert!(matches!(hsp_oracle(&t, 2, 3), Err(Error::InsufficientTapers { .. })));
        assert!(matches!(qlp_oracle(&t, 2, 3), Err(Error::InsufficientTapers { .. })));
        assert!(hsp_oracle(&t, 2, 4).is_ok());
    }

    #[test]
    fn negative_sphericity_projects_to_identity_target() {
        // p tr{S^2} < tr^2{S} is impossible for a true matrix but can
        // arise from estimated traces.
        let t = TraceSet::oracle(4.0, 7.0, 1.0, 0.4);
        let s = qlp_oracle(&t, 2, 5).unwrap();
        assert_eq!(s.alpha, 0.0);
        assert_relative_eq!(s.beta, 4.0 / 7.0);
        assert!(s.clamped);
        let s = hsp_oracle(&t, 2, 5).unwrap();
        assert!(s.clamped);
        assert_relative_eq!(s.beta, 0.5);
    }

    #[test]
    fn affine_examples() {
        let sol = |a, b| ShrinkageSolution::from_alpha_beta(ShrinkageMethod::HSP, a, b, false);
        let s = HermitianMatrix::from_real_diagonal(&[3., 7.]);
        let out = apply_precision_affine(&s, &sol(0.0, 2.0)).unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::scaled_identity(2, 2.0)) < 1e-15);
        let out = apply_precision_affine(&HermitianMatrix::from_real_diagonal(&[2., 4.]), &sol(1.0, 0.0)).unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::from_real_diagonal(&[0.5, 0.25])) < 1e-15);
        let out = apply_precision_affine(&HermitianMatrix::from_real_diagonal(&[1., 2.]), &sol(0.5, 0.1)).unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::from_real_diagonal(&[0.6, 0.35])) < 1e-15);
        let singular = HermitianMatrix::from_real_diagonal(&[1., 0.]);
        assert_eq!(apply_precision_affine(&singular, &sol(1.0, 0.0)).unwrap_err(), Error::NotPositiveDefinite);
    }
}
