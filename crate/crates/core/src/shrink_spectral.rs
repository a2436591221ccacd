//! Oracle shrinkage of the spectral matrix towards a scaled identity.
//!
//! All three rules share the shrinkage model `(1 - rho) S_hat + rho eta I`
//! and differ in the loss being minimized and in whether `eta` is fixed at
//! `tr{S}/p` or optimized jointly with `rho`.

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, TraceSet};
use crate::shrink::{ShrinkageMethod, ShrinkageSolution};

pub(crate) fn check_inputs(t: &TraceSet, p: usize, k: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::DegenerateTraces("dimension is zero"));
    }
    if k < p {
        return Err(Error::InsufficientTapers { k, p, need: "K >= p" });
    }
    if !t.all_positive_finite() {
        return Err(Error::DegenerateTraces("trace values must be positive and finite"));
    }
    Ok(())
}

fn positive_denominator(den: f64) -> Result<f64> {
    if den.is_finite() && den > 0.0 {
        Ok(den)
    } else {
        Err(Error::NonPositiveDenominator(den))
    }
}

/// Hilbert-Schmidt risk minimizer:
/// `eta = tr{S}/p`, `rho = 1 / (1 - K/p + K tr{S^2}/tr^2{S})`.
pub fn hs_oracle(t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    check_inputs(t, p, k)?;
    let (pf, kf) = (p as f64, k as f64);
    let eta = t.tr_s / pf;
    let den = positive_denominator(1.0 - kf / pf + kf * t.tr_s2 / (t.tr_s * t.tr_s))?;
    Ok(ShrinkageSolution::from_eta_rho(ShrinkageMethod::HS, eta, 1.0 / den))
}

/// Quadratic-loss minimizer with the target fixed at `tr{S}/p I`.
pub fn qla_oracle(t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    check_inputs(t, p, k)?;
    let (pf, kf) = (p as f64, k as f64);
    let eta = t.tr_s / pf;
    let bracket = kf * pf * t.tr_sinv * t.tr_s - 0.5 * kf * t.tr_s * t.tr_s * t.tr_sinv2;
    let den = positive_denominator((kf * pf + pf * pf) - 2.0 / (pf * pf) * bracket)?;
    Ok(ShrinkageSolution::from_eta_rho(ShrinkageMethod::QLa, eta, pf * pf / den))
}

/// Quadratic-loss minimizer over both the target scale and the weight:
/// `eta = tr{S^-1}/tr{S^-2}`, `rho = 1 / (1 + K/p - K tr^2{S^-1} / (p^2 tr{S^-2}))`.
pub fn qlb_oracle(t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    check_inputs(t, p, k)?;
    let (pf, kf) = (p as f64, k as f64);
    let eta = t.tr_sinv / t.tr_sinv2;
    let den = positive_denominator(1.0 + kf / pf - kf * t.tr_sinv * t.tr_sinv / (pf * pf * t.tr_sinv2))?;
    Ok(ShrinkageSolution::from_eta_rho(ShrinkageMethod::QLb, eta, 1.0 / den))
}

/// Dispatches to the spectral rule named by `method`.
pub fn spectral_oracle(method: ShrinkageMethod, t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    match method {
        ShrinkageMethod::HS => hs_oracle(t, p, k),
        ShrinkageMethod::QLa => qla_oracle(t, p, k),
        ShrinkageMethod::QLb => qlb_oracle(t, p, k),
        other => Err(Error::Config(format!("{other} is not a spectral-matrix rule"))),
    }
}

/// `alpha S_hat + beta I`.
pub fn apply_affine(s_hat: &HermitianMatrix, sol: &ShrinkageSolution) -> HermitianMatrix {
    s_hat.affine(sol.alpha, sol.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn traces(diag: &[f64]) -> TraceSet {
        HermitianMatrix::from_real_diagonal(diag).trace_powers().unwrap()
    }

    #[test]
    fn hs_diag_example() {
        let s = hs_oracle(&traces(&[1., 2.]), 2, 4).unwrap();
        assert_relative_eq!(s.eta.unwrap(), 1.5, max_relative = 1e-14);
        assert_relative_eq!(s.rho.unwrap(), 9.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(s.alpha, 2.0 / 11.0, max_relative = 1e-13);
        assert_relative_eq!(s.beta, 1.5 * 9.0 / 11.0, max_relative = 1e-14);
        assert!(!s.clamped);
    }

    #[test]
    fn scaled_identity_gives_full_shrinkage() {
        for (c, p, k) in [(0.3, 2, 5), (7.0, 5, 8), (1.0, 3, 6), (2.0, 10, 13)] {
            let t = HermitianMatrix::scaled_identity(p, c).trace_powers().unwrap();
            for sol in [hs_oracle(&t, p, k), qla_oracle(&t, p, k), qlb_oracle(&t, p, k)] {
                let sol = sol.unwrap();
                assert_relative_eq!(sol.rho.unwrap(), 1.0, max_relative = 1e-12);
                assert_relative_eq!(sol.eta.unwrap(), c, max_relative = 1e-12);
                assert!(!sol.clamped);
            }
        }
    }

    #[test]
    fn qla_examples() {
        let s = qla_oracle(&traces(&[1., 2.]), 2, 4).unwrap();
        assert_relative_eq!(s.rho.unwrap(), 4.0 / 5.25, max_relative = 1e-14);
        assert_relative_eq!(s.eta.unwrap(), 1.5);
        // diag(1,1,4), p=3, K=6: tr=6, tr^-1=2.25, tr^-2=2.0625
        // den = 18 + 9 - (2/9)(18*2.25*6 - 3*36*2.0625) = 27 - (2/9)(243 - 222.75) = 22.5
        let s = qla_oracle(&traces(&[1., 1., 4.]), 3, 6).unwrap();
        assert_relative_eq!(s.rho.unwrap(), 9.0 / 22.5, max_relative = 1e-14);
    }

    #[test]
    fn qlb_examples() {
        let s = qlb_oracle(&traces(&[1., 2.]), 2, 4).unwrap();
        assert_relative_eq!(s.eta.unwrap(), 1.2, max_relative = 1e-14);
        assert_relative_eq!(s.rho.unwrap(), 1.0 / 1.2, max_relative = 1e-14);

        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[2., 1., 1., 2.])).unwrap();
        let s = qlb_oracle(&m.trace_powers().unwrap(), 2, 4).unwrap();
        assert_relative_eq!(s.eta.unwrap(), 1.2, max_relative = 1e-13);
        assert_relative_eq!(s.rho.unwrap(), 1.0 / 1.4, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = traces(&[1., 2.]);
        assert!(matches!(hs_oracle(&t, 2, 1), Err(Error::InsufficientTapers { .. })));
        let mut bad = t;
        bad.tr_s = 0.0;
        assert!(matches!(qla_oracle(&bad, 2, 4), Err(Error::DegenerateTraces(_))));
        bad.tr_s = f64::NAN;
        assert!(matches!(qlb_oracle(&bad, 2, 4), Err(Error::DegenerateTraces(_))));
    }

    #[test]
    fn inconsistent_traces_give_nonpositive_denominator() {
        // tr{S^-2} far below tr^2{S^-1}/p violates Cauchy-Schwarz.
        let t = TraceSet::oracle(3.0, 5.0, 100.0, 1e-3);
        assert!(matches!(qla_oracle(&t, 2, 4), Err(Error::NonPositiveDenominator(_))));
        assert!(matches!(qlb_oracle(&t, 2, 4), Err(Error::NonPositiveDenominator(_))));
    }

    #[test]
    fn out_of_range_rho_is_clamped_and_flagged() {
        // tr{S^2} below tr^2{S}/p: HS denominator in (0, 1) so rho > 1.
        let t = TraceSet::oracle(4.0, 7.5, 1.0, 1.0);
        let s = hs_oracle(&t, 2, 4).unwrap();
        assert!(s.clamped);
        assert_eq!(s.rho, Some(1.0));
        assert_eq!(s.alpha, 0.0);
    }

    #[test]
    fn affine_examples() {
        let d = HermitianMatrix::from_real_diagonal(&[1., 2.]);
        let id = apply_affine(&d, &ShrinkageSolution::from_alpha_beta(ShrinkageMethod::HS, 0.0, 1.0, false));
        assert!(id.max_abs_diff(&HermitianMatrix::identity(2)) == 0.0);
        let same = apply_affine(&d, &ShrinkageSolution::from_alpha_beta(ShrinkageMethod::HS, 1.0, 0.0, false));
        assert!(same.max_abs_diff(&d) == 0.0);
        let mixed = apply_affine(&d, &ShrinkageSolution::from_alpha_beta(ShrinkageMethod::HS, 0.5, 0.25, false));
        assert!(mixed.max_abs_diff(&HermitianMatrix::from_real_diagonal(&[0.75, 1.25])) < 1e-15);
    }
}
