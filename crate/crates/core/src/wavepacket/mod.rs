//! Photon temporal envelopes: transfer through the dispersive cell, delay and
//! width estimation, and conversion to and from arrival-time histograms.

mod analysis;
mod envelope;
mod propagate;

pub use analysis::{broadening_ratio, extract_delay, width_metric, DelayMethod, DelayOptions};
pub use envelope::{
    envelope_to_histogram, histogram_to_envelope, ArrivalHistogram, Normalization, TemporalEnvelope,
    DEFAULT_BIN_WIDTH,
};
pub use propagate::{propagate, propagate_with, Propagated, PropagationOptions, PropagationWarning};
