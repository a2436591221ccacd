//! Monte-Carlo check of complex Wishart moment identities used by the
//! closed-form shrinkage rules.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::simlab::sampling::{cell_rng, WishartSampler};

/// Tolerance in Monte-Carlo standard errors.
pub const MOMENT_Z_LIMIT: f64 = 4.0;

/// Below this many replicates a pass is reported as low-power.
pub const MOMENT_FULL_POWER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub identity: &'static str,
    pub truth: Option<f64>,
    pub mc_mean: Option<f64>,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub status: MomentStatus,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub low_power: bool,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// No identity failed (skips are not failures).
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status != MomentStatus::Fail)
    }
}

const NAMES: [&str; 5] = [
    "E tr{(S^-1 S_hat)^2} = p + p^2/K",
    "E tr^2{S_hat} = tr^2{S} + tr{S^2}/K",
    "E tr{S_hat^-1} = K/(K-p) tr{S^-1}",
    "E tr{(S S_hat^-1)^2} = c1 p K",
    "E tr^2{S_hat^-1} = c1 ((K-p) tr^2{S^-1} + tr{S^-2})",
];

fn trace_of_product_square(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let ab = a.product(b);
    (&ab * &ab).trace().re
}

/// Verifies the five identities within [`MOMENT_Z_LIMIT`] standard errors
/// using `m` draws, `c1 = K^2/((K-p)^3 - (K-p))`. The inverse-moment
/// identities are skipped when `K <= p + 1`.
pub fn moment_check(s0: &HermitianMatrix, k: usize, m: usize, seed: u64) -> Result<MomentReport> {
    let p = s0.dim();
    if k < p {
        return Err(Error::InsufficientTapers { k, p, need: "K >= p" });
    }
    if m < 2 {
        return Err(Error::Config(format!("moment check needs at least 2 replicates, got {m}")));
    }
    let truth = s0.trace_powers()?;
    let s_inv = s0.invert()?;
    let sampler = WishartSampler::new(s0)?;
    let inverse_ok = k > p + 1;

    let draws: Vec<[f64; 5]> = (0..m)
        .into_par_iter()
        .map(|i| {
            let s_hat = sampler.draw_spectral(k, &mut cell_rng(seed, i as u64, 0));
            let t = s_hat.trace();
            let mut out = [trace_of_product_square(&s_inv, &s_hat), t * t, 0.0, 0.0, 0.0];
            if inverse_ok {
                let inv = s_hat.invert()?;
                let ti = inv.trace();
                out[2] = ti;
                out[3] = trace_of_product_square(s0, &inv);
                out[4] = ti * ti;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let (pf, kf) = (p as f64, k as f64);
    let kp = kf - pf;
    let c1 = kf * kf / (kp * kp * kp - kp);
    let truths = [
        pf + pf * pf / kf,
        truth.tr_s * truth.tr_s + truth.tr_s2 / kf,
        kf / kp * truth.tr_sinv,
        c1 * pf * kf,
        c1 * (kp * truth.tr_sinv * truth.tr_sinv + truth.tr_sinv2),
    ];
    let low_power = m < MOMENT_FULL_POWER;
    let mf = m as f64;
    let rows = (0..5)
        .map(|j| {
            if j >= 2 && !inverse_ok {
                return MomentRow {
                    identity: NAMES[j],
                    truth: None,
                    mc_mean: None,
                    se: None,
                    z: None,
                    status: MomentStatus::Skipped,
                    note: format!("inverse moments need K > p + 1 (K={k}, p={p})"),
                };
            }
            let mean = draws.iter().map(|d| d[j]).sum::<f64>() / mf;
            let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (mf - 1.0);
            let se = (var / mf).sqrt();
            let z = if se > 0.0 { (mean - truths[j]) / se } else { 0.0 };
            let pass = (mean - truths[j]).abs() <= MOMENT_Z_LIMIT * se;
            MomentRow {
                identity: NAMES[j],
                truth: Some(truths[j]),
                mc_mean: Some(mean),
                se: Some(se),
                z: Some(z),
                status: if pass { MomentStatus::Pass } else { MomentStatus::Fail },
                note: if low_power {
                    format!("low power: M={m} < {MOMENT_FULL_POWER}")
                } else {
                    String::new()
                },
            }
        })
        .collect();
    Ok(MomentReport {
        p,
        k,
        m,
        seed,
        low_power,
        rows,
    })
}
