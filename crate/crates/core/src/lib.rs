//! Shrinkage estimation of multitaper spectral and precision matrices, with
//! partial-coherence scoring and a Monte-Carlo evaluation harness.
//!
//! The pipeline at one frequency is: eigencoefficients `J` (from data via
//! [`multitaper`] or simulated via [`simlab`]), the spectral matrix
//! `S_hat = J J^H / K`, an affine shrinkage rule from [`shrink_spectral`]
//! or [`shrink_precision`] fed by exact or estimated ([`trace_est`]) trace
//! functionals, and finally partial coherence from the precision estimate
//! ([`pcoh`]).

pub mod cli;
pub mod error;
pub mod format;
pub mod hermitian;
pub mod multitaper;
pub mod pcoh;
pub mod shrink;
pub mod shrink_precision;
pub mod shrink_spectral;
pub mod simlab;
pub mod trace_est;

pub use error::{Error, Result};
pub use hermitian::{HermitianMatrix, Provenance, TraceSet};
pub use multitaper::{bandwidth, eigencoefficients, sine_tapers, spectral_matrix, EigenCoefficients, TaperSet};
pub use pcoh::{average_prise, partial_coherence, prise, squared_error, PartialCoherenceMatrix, PriseReport};
pub use shrink::{ShrinkageMethod, ShrinkageSolution};
pub use shrink_precision::{apply_precision_affine, hsp_oracle, qlp_oracle};
pub use shrink_spectral::{apply_affine, hs_oracle, qla_oracle, qlb_oracle};
pub use trace_est::{bias_check, estimate_traces};
