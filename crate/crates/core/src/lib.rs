//! Integrated sensing and communication (ISAC) design toolkit.
//!
//! The crate covers three learned designs and their classical baselines:
//!
//! * [`waveform_learn`]: an unsupervised network producing multi-user ISAC
//!   waveforms, compared with exact weighted-sum and ε-constraint solutions
//!   from [`classical_design`].
//! * [`hybrid_pga`]: projected gradient ascent for hybrid analog/digital
//!   beamforming and its unrolled variant with learned per-layer step sizes.
//! * [`constellation_ae`]: an autoencoder that shapes a constellation for a
//!   joint communication/target-presence objective.
//!
//! [`channel`] generates propagation objects and [`metrics`] computes every
//! evaluation quantity (rates, beampatterns, detection, MI/MMSE, bounds).
//! [`neural`] is the small dense-network engine the learned designs share.

pub mod channel;
pub mod classical_design;
pub mod constellation_ae;
pub mod error;
pub mod hybrid_pga;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod waveform_learn;

pub use error::{Error, Result};
