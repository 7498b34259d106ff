//! Shape characterization and classification for address-event camera streams.
//!
//! The crate turns asynchronous event streams (DVS128-style `(x, y, t, polarity)`
//! spikes) into fixed-length shape descriptors and classifies them:
//!
//! - [`event`] — event data model, event-count framing, 2D accumulation maps.
//! - [`aer`] — AEDAT 1.0/2.0 binary parsing and writing.
//! - [`dataset`] — card-symbol dataset loading (per-sample AEDAT files).
//! - [`synth`] — synthetic ground-truth generators (rotating bar, translating
//!   contours) for desk-scale experiments.
//! - [`orientation`] — per-event direction labels from local spatio-temporal
//!   plane fits.
//! - [`elbp`] — rotation-canonical 8-neighbor connectivity codes and weights.
//! - [`descriptor`] — oriented-event histograms (quadrant histograms and
//!   ring-structured shape contexts), plain and connectivity-weighted.
//! - [`classify`] — k-means, a generative Gaussian scorer, a one-against-one
//!   kernel SVM ensemble with pairwise probability coupling, and the
//!   memory-smoothed decision rule.
//! - [`pipeline`] — end-to-end extraction/evaluation pipelines and reports.

pub mod aer;
pub mod classify;
pub mod dataset;
pub mod descriptor;
pub mod elbp;
pub mod event;
pub mod orientation;
pub mod pipeline;
pub mod synth;

pub use event::{AccumulationMap, Event, EventStream, EventWindow, FramingConfig, Polarity};
pub use orientation::{OrientationConfig, OrientedEvent};
