//! Quickest detection of channel tampering from receiver statistics.
//!
//! The crate computes classical relative entropies for a family of probe and
//! receiver schemes, samples their observation models, runs CUSUM change
//! detection, and calibrates thresholds to a target average run length.

pub mod calibration;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod quadrature;
pub mod sampling;
pub mod schemes;
pub mod table;

pub use calibration::{calibrate_threshold, estimate_arl, threshold_for_arl, ArlOptions, ArlTable, Calibration};
pub use detector::{cusum_step, llr, run_detection, CusumRun, DetectionOutcome, DetectionSetup, LatencyResult};
pub use error::{Error, Result};
pub use sampling::{Observation, SeededStream};
pub use schemes::{ChannelPair, Cre, EnergyParams, Modulation, ObservationModel, Scheme, SchemeKind};
