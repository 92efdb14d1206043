//! Geometry of the range map `x -> ran E(x)`: projectors, principal angles,
//! the decorrelation profile and the stability bounds built on it.

pub mod amplitude;
pub mod bounds;
pub mod phi;
pub mod projector;

pub use amplitude::{mc_amplitude, AmplitudeReport, ProjectorSet};
pub use bounds::{
    critical_theta, isolation_radius, location_error_bound, spectral_bounds, IsolationRadius, LocationBound,
    SpectralBounds,
};
pub use phi::{fit_phi_model, monotone_majorant, monotone_minorant, sample_phi_profile, Envelope, PhiModel, PhiProfile};
pub use projector::{
    principal_angle_norm, projector_at, projector_distance, range_basis, Projector, DEFAULT_RANK_TOL,
};
