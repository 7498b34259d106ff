//! Fixed-length shape descriptors over event windows.
//!
//! Two families: quadrant histograms of oriented events ([`hoe`]) and
//! ring-structured shape contexts in normalized 3D space ([`esc`]). Both
//! have plain and connectivity-weighted variants.

pub mod esc;
pub mod hoe;

pub use esc::{esc, esc_event, EscDescriptor, RingConfig};
pub use hoe::{hoe, hoe_elbp, HoeDescriptor, QuadrantGrid};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    #[error("per-event data misaligned with window: expected {expected}, got {got}")]
    Misaligned { expected: usize, got: usize },
    #[error("invalid ring configuration: {0}")]
    InvalidRingConfig(String),
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
}
