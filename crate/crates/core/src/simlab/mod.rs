//! Synthetic models, seeded Wishart sampling and the Monte-Carlo drivers.

pub mod campaign;
pub mod model;
pub mod moments;
pub mod sampling;
pub mod scenario;

pub use campaign::{run_campaign, McConfig, Method};
pub use model::{make_model, GridSpec, ModelKind, SpectralModel};
pub use moments::{moment_check, MomentReport, MomentStatus};
pub use sampling::{cell_rng, child_seed, draw_eigencoefficients, WishartSampler};
pub use scenario::Scenario;
