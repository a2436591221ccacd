//! Monte-Carlo PRISE campaign over a spectral model.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, TraceSet};
use crate::pcoh::{average_prise, partial_coherence, prise, squared_error, MethodSeries, PriseReport, ReportMeta};
use crate::shrink::{ShrinkageMethod, ShrinkageSolution};
use crate::shrink_precision::{apply_to_inverse, precision_oracle};
use crate::shrink_spectral::{apply_affine, spectral_oracle};
use crate::simlab::model::SpectralModel;
use crate::simlab::sampling::{cell_rng, WishartSampler};
use crate::trace_est::estimate_traces;

/// Estimator of the precision matrix scored by a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Plain inverse of the multitaper estimate.
    Raw,
    /// Shrinkage with the true trace functionals.
    Oracle(ShrinkageMethod),
    /// Shrinkage with traces estimated from the same `S_hat`.
    Estimated(ShrinkageMethod),
}

impl Method {
    pub fn shrinkage(self) -> Option<ShrinkageMethod> {
        match self {
            Self::Raw => None,
            Self::Oracle(s) | Self::Estimated(s) => Some(s),
        }
    }

    /// Whether the method needs `K > p + 1`.
    pub fn needs_inverse_moments(self) -> bool {
        match self {
            Self::Raw => false,
            Self::Oracle(s) => s.is_precision(),
            Self::Estimated(_) => true,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Raw => f.write_str("Raw"),
            Self::Oracle(s) => write!(f, "{s}"),
            Self::Estimated(s) => write!(f, "{s}-est"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (base, est) = match lower.strip_suffix("-est") {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        let shrink = match base {
            "raw" if !est => return Ok(Self::Raw),
            "hs" => ShrinkageMethod::HS,
            "qla" => ShrinkageMethod::QLa,
            "qlb" => ShrinkageMethod::QLb,
            "hsp" => ShrinkageMethod::HSP,
            "qlp" => ShrinkageMethod::QLP,
            _ => return Err(Error::Config(format!("unknown method '{s}'"))),
        };
        Ok(if est { Self::Estimated(shrink) } else { Self::Oracle(shrink) })
    }
}

/// Taper count, replicate count, seed and methods of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl McConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.k < p {
            return Err(Error::InsufficientTapers { k: self.k, p, need: "K >= p" });
        }
        if self.k <= p + 1 && self.methods.iter().any(|m| m.needs_inverse_moments()) {
            return Err(Error::InsufficientTapers {
                k: self.k,
                p,
                need: "K > p + 1 for precision and -est methods",
            });
        }
        Ok(())
    }
}

/// Shrinkage coefficients for `method` given the trace functionals.
pub fn solve(method: ShrinkageMethod, t: &TraceSet, p: usize, k: usize) -> Result<ShrinkageSolution> {
    if method.is_precision() {
        precision_oracle(method, t, p, k)
    } else {
        spectral_oracle(method, t, p, k)
    }
}

/// Precision-matrix estimate from `S_hat` (and its inverse) under `sol`.
pub fn shrunk_precision(
    s_hat: &HermitianMatrix,
    s_hat_inv: &HermitianMatrix,
    sol: &ShrinkageSolution,
) -> Result<HermitianMatrix> {
    if sol.method.is_precision() {
        Ok(apply_to_inverse(s_hat_inv, sol))
    } else {
        apply_affine(s_hat, sol).invert()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Score {
    error: f64,
    alpha: f64,
    beta: f64,
    rho: f64,
    beta_tr: f64,
    clamped: bool,
}

/// Runs `cfg.m` replicates at every grid frequency and scores each method
/// against the true partial coherence. Output is independent of the
/// number of worker threads.
pub fn run_campaign(model: &SpectralModel, cfg: &McConfig) -> Result<PriseReport> {
    let p = model.p;
    cfg.validate(p)?;
    let k = cfg.k;
    let n_freq = model.grid.len();

    struct FreqSetup {
        sampler: WishartSampler,
        truth: crate::pcoh::PartialCoherenceMatrix,
        oracle: Vec<Option<ShrinkageSolution>>,
    }
    let setups = model
        .matrices
        .iter()
        .enumerate()
        .map(|(l, s0)| {
            let traces = s0.trace_powers()?;
            let oracle = cfg
                .methods
                .iter()
                .map(|m| match m {
                    Method::Oracle(s) => solve(*s, &traces, p, k).map(Some),
                    _ => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FreqSetup {
                sampler: WishartSampler::new(s0)?,
                truth: model.true_partial_coherence(l)?,
                oracle,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_methods = cfg.methods.len();
    let cells: Vec<(f64, Vec<Score>)> = (0..n_freq * cfg.m)
        .into_par_iter()
        .map(|idx| {
            let (l, m) = (idx / cfg.m, idx % cfg.m);
            let setup = &setups[l];
            let s_hat = setup.sampler.draw_spectral(k, &mut cell_rng(cfg.seed, m as u64, l as u64));
            let s_inv = s_hat.invert()?;
            let raw_err = squared_error(&partial_coherence(&s_inv)?, &setup.truth)?;
            let estimated = if cfg.methods.iter().any(|m| matches!(m, Method::Estimated(_))) {
                Some(estimate_traces(&s_hat, k)?)
            } else {
                None
            };
            let mut scores = Vec::with_capacity(n_methods);
            for (i, method) in cfg.methods.iter().enumerate() {
                let sol = match method {
                    Method::Raw => {
                        scores.push(Score {
                            error: raw_err,
                            ..Score::default()
                        });
                        continue;
                    }
                    Method::Oracle(_) => setup.oracle[i].expect("oracle solution precomputed"),
                    Method::Estimated(s) => solve(*s, estimated.as_ref().expect("traces estimated"), p, k)?,
                };
                let c = shrunk_precision(&s_hat, &s_inv, &sol)?;
                scores.push(Score {
                    error: squared_error(&partial_coherence(&c)?, &setup.truth)?,
                    alpha: sol.alpha,
                    beta: sol.beta,
                    rho: sol.rho.unwrap_or(f64::NAN),
                    beta_tr: sol.beta * s_hat.trace(),
                    clamped: sol.clamped,
                });
            }
            Ok((raw_err, scores))
        })
        .collect::<Result<_>>()?;

    let mf = cfg.m as f64;
    let mut baseline = vec![0.0; n_freq];
    let mut sums = vec![vec![Score::default(); n_freq]; n_methods];
    let mut clamped = vec![0usize; n_methods];
    for (idx, (raw, scores)) in cells.iter().enumerate() {
        let l = idx / cfg.m;
        baseline[l] += raw;
        for (i, s) in scores.iter().enumerate() {
            let acc = &mut sums[i][l];
            acc.error += s.error;
            acc.alpha += s.alpha;
            acc.beta += s.beta;
            acc.rho += s.rho;
            acc.beta_tr += s.beta_tr;
            clamped[i] += s.clamped as usize;
        }
    }
    for b in &mut baseline {
        *b /= mf;
    }

    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(i, method)| {
            let mean_error: Vec<f64> = sums[i].iter().map(|s| s.error / mf).collect();
            let prise_pct = baseline
                .iter()
                .zip(&mean_error)
                .map(|(b, e)| if *method == Method::Raw { prise(*b, *b) } else { prise(*b, *e) })
                .collect::<Result<Vec<_>>>()?;
            let column = |get: fn(&Score) -> f64| Some(sums[i].iter().map(|s| get(s) / mf).collect::<Vec<_>>());
            let shrink = method.shrinkage();
            Ok(MethodSeries {
                method: method.to_string(),
                average_prise_pct: average_prise(&prise_pct)?,
                mean_error,
                prise_pct,
                mean_alpha: shrink.and_then(|_| column(|s| s.alpha)),
                mean_beta: shrink.and_then(|_| column(|s| s.beta)),
                mean_rho: shrink.filter(|s| !s.is_precision()).and_then(|_| column(|s| s.rho)),
                mean_beta_tr_shat: shrink.filter(|s| s.is_precision()).and_then(|_| column(|s| s.beta_tr)),
                clamped_count: clamped[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PriseReport {
        meta: ReportMeta {
            model: model.label.clone(),
            p,
            k,
            m: cfg.m,
            seed: cfg.seed,
        },
        freqs_hz: model.grid.clone(),
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::model::{make_model, IdentityParams, ModelKind};

    fn model() -> SpectralModel {
        let kind: ModelKind = serde_json::from_str(r#"{"kind":"sparse","params":{"kappa":0.4}}"#).unwrap();
        make_model(&kind, 3, &[1.0, 1.5, 2.0]).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for name in ["Raw", "HS", "QLa", "QLb", "HSP", "QLP", "QLa-est", "QLb-est", "QLP-est", "HS-est"] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert!("raw-est".parse::<Method>().is_err());
        assert!("foo".parse::<Method>().is_err());
        assert_eq!("qlp".parse::<Method>().unwrap(), Method::Oracle(ShrinkageMethod::QLP));
    }

    #[test]
    fn raw_only_has_zero_prise() {
        let m = make_model(&ModelKind::Identity(IdentityParams { c: 1.0 }), 2, &[1.0, 2.0]).unwrap();
        let cfg = McConfig { k: 4, m: 20, seed: 1, methods: vec![Method::Raw] };
        let r = run_campaign(&m, &cfg).unwrap();
        assert!(r.series("Raw").unwrap().prise_pct.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn first_replicate_is_shared() {
        let base = McConfig { k: 6, m: 1, seed: 9, methods: vec![Method::Raw, Method::Oracle(ShrinkageMethod::HS)] };
        let one = run_campaign(&model(), &base).unwrap();
        let two = run_campaign(&model(), &McConfig { m: 2, ..base.clone() }).unwrap();
        let again = run_campaign(&model(), &base).unwrap();
        assert_eq!(one.series("HS").unwrap().mean_error, again.series("HS").unwrap().mean_error);

        // Recompute the second replicate by hand; the two-replicate mean
        // must be the average of it and the single-replicate run.
        let md = model();
        let s_hat = WishartSampler::new(&md.matrices[0]).unwrap().draw_spectral(6, &mut cell_rng(9, 1, 0));
        let e_second =
            squared_error(&partial_coherence(&s_hat.invert().unwrap()).unwrap(), &md.true_partial_coherence(0).unwrap())
                .unwrap();
        let e1 = one.series("Raw").unwrap().mean_error[0];
        let e2 = two.series("Raw").unwrap().mean_error[0];
        assert!((e2 - 0.5 * (e1 + e_second)).abs() <= 1e-15 * e2.abs().max(1.0));
    }

    #[test]
    fn validates_taper_count() {
        let cfg = McConfig { k: 4, m: 5, seed: 0, methods: vec![Method::Oracle(ShrinkageMethod::QLP)] };
        assert!(matches!(run_campaign(&model(), &cfg), Err(Error::InsufficientTapers { .. })));
        let cfg = McConfig { k: 3, m: 5, seed: 0, methods: vec![Method::Oracle(ShrinkageMethod::HS)] };
        assert!(run_campaign(&model(), &cfg).is_ok());
        let cfg = McConfig { k: 2, m: 5, seed: 0, methods: vec![Method::Raw] };
        assert!(matches!(run_campaign(&model(), &cfg), Err(Error::InsufficientTapers { .. })));
    }

    #[test]
    fn reports_shrinkage_parameters() {
        let cfg = McConfig {
            k: 6,
            m: 10,
            seed: 2,
            methods: vec![Method::Raw, Method::Oracle(ShrinkageMethod::HS), Method::Estimated(ShrinkageMethod::QLP)],
        };
        let r = run_campaign(&model(), &cfg).unwrap();
        assert!(r.series("Raw").unwrap().mean_alpha.is_none());
        assert!(r.series("HS").unwrap().mean_rho.is_some());
        let q = r.series("QLP-est").unwrap();
        assert!(q.mean_rho.is_none());
        assert!(q.mean_beta_tr_shat.is_some());
    }
}
