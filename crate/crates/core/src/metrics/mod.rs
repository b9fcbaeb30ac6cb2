//! Evaluation quantities shared by all three case studies.

mod beampattern;
mod bounds;
mod detection;
mod error_rates;
mod information;
mod rate;

pub use beampattern::{
    angle_grid_deg, transmit_beampattern, waveform_covariance, BeampatternCurve,
};
pub use bounds::{
    estimation_rate_bounds, mcrb_freq, mcrb_phase, radar_resolutions, EstimationBounds,
    RadarResolution,
};
pub use detection::{
    glrt_statistic, pd_at_pfa, roc_curve, synthesize_echo, threshold_for_pfa, RocCurve,
};
pub use error_rates::{ber, ser};
pub use information::{
    awgn_mi_mmse, awgn_mi_mmse_monte_carlo, awgn_mi_mmse_with_order, gauss_hermite,
    InputDistribution, MiMmsePoint, DEFAULT_HERMITE_ORDER,
};
pub use rate::{
    db_to_linear, hybrid_sum_rate, mui_power, nats_to_bits, per_user_sinr, sum_rate, RateReport,
};
