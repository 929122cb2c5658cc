//! Follow-the-leader particle approximation of scalar conservation laws
//! `ρ_t + (ρ v(ρ))_x = 0` with compactly supported, non-negative initial data.
//!
//! A datum is split into `N` particles of equal mass, the particles move by
//! `ẋ_i = v(ℓ / (x_{i+1} − x_i))` behind a leader at `v_max`, and the
//! reconstructed densities approximate the entropy solution as `N` grows.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod initial_data;
pub mod measures;
pub mod reference;
pub mod scenario;
pub mod velocity;

pub use diagnostics::{diagnose, DiagnosticsReport};
pub use dynamics::{integrate, IntegratorMethod, IntegratorSettings, Trajectory};
pub use error::{Error, Result};
pub use harness::{ConvergenceTable, ExperimentConfig};
pub use initial_data::{InitialDatum, ParticleConfiguration};
pub use measures::{wasserstein, MassDistribution, PiecewiseConstantDensity};
pub use scenario::Scenario;
pub use velocity::{VelocityModel, VelocitySpec};
