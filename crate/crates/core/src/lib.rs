//! Delay-inversion analytics and RREQ flooding simulation for uniform
//! jitter mechanisms in reactive wireless route discovery.

pub mod dd;
pub mod error;
pub mod inversion;
pub mod jitter;
pub mod quadrature;
pub mod seed;
pub mod sim;
pub mod sweep;
pub mod uniform_sum;

pub use error::{Error, Result};
pub use inversion::{
    closed_form_parts, hypergeometric_bracket, inversion_probability_closed_form,
    inversion_probability_closed_form_with, inversion_probability_montecarlo,
    inversion_probability_quadrature, normalization_constants, segment_integral, truncated_2f1,
    ClosedFormParts, InversionInstance, InversionResult, Method,
};
pub use uniform_sum::{
    cdf, pdf, rank, subset_sums, subset_sums_with_capacity, Capacity, Evaluation,
    RouteDelayModel, SubsetEntry, SubsetSumTable, UniformSpec, UniformSum,
};
pub use jitter::{
    jitter_interval, route_delay_model, route_metric, sample_jitter, JitterMechanism, LinkMetric,
    MechanismKind, RouteMetrics,
};
pub use seed::{derive_seed, DEFAULT_SEED};
pub use sim::{
    density_sweep, density_sweep_observed, generate_topology, run_campaign, run_discovery,
    CampaignKey, DensityCell, DiscoveryResult, Estimate, SimConfig, SimStats, Topology,
};
pub use sweep::{run_sweep, sample_metric_pair, SweepConfig, SweepRow};
