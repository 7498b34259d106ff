//! Quadrant histograms of oriented events.
//!
//! The window's bounding box is split into four quadrants at its midpoint;
//! each quadrant accumulates a `V`-bin histogram of event directions. The
//! plain variant counts events and normalizes each non-empty block to sum 1.
//! The connectivity-weighted variant accumulates pattern weights instead and
//! divides by the total event count of the quadrant, so noisy quadrants keep
//! block sums below 1.

use serde::{Deserialize, Serialize};

use super::DescriptorError;
use crate::elbp::PatternCode;
use crate::event::EventWindow;
use crate::orientation::OrientedEvent;

/// 2x2 split of a window's bounding box at its midpoint.
///
/// Quadrants are indexed 1..=4 row-major (1 = low-x/low-y, 2 = high-x/low-y,
/// 3 = low-x/high-y, 4 = high-x/high-y); events exactly on a split line go
/// to the lower-index side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantGrid {
    pub cx: f64,
    pub cy: f64,
}

impl QuadrantGrid {
    pub fn from_window(w: &EventWindow) -> Result<Self, DescriptorError> {
        let (x_min, x_max, y_min, y_max) = w.spatial_bounding_box()?;
        Ok(Self {
            cx: (x_min as f64 + x_max as f64) / 2.0,
            cy: (y_min as f64 + y_max as f64) / 2.0,
        })
    }

    /// Quadrant index in 0..4 (quadrant id minus one).
    pub fn quadrant_of(&self, x: u16, y: u16) -> usize {
        let qx = usize::from(x as f64 > self.cx);
        let qy = usize::from(y as f64 > self.cy);
        qy * 2 + qx
    }
}

/// Concatenated per-quadrant direction histograms, `4 * V` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeDescriptor {
    v: usize,
    values: Vec<f64>,
}

impl HoeDescriptor {
    pub fn directions(&self) -> usize {
        self.v
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The V-bin histogram of quadrant `j` (0-based).
    pub fn block(&self, j: usize) -> &[f64] {
        &self.values[j * self.v..(j + 1) * self.v]
    }

    /// Rebuilds a descriptor from a flat vector (for model I/O).
    pub fn from_values(v: usize, values: Vec<f64>) -> Result<Self, DescriptorError> {
        if values.len() != 4 * v {
            return Err(DescriptorError::Misaligned { expected: 4 * v, got: values.len() });
        }
        Ok(Self { v, values })
    }
}

fn check_aligned(w: &EventWindow, len: usize) -> Result<(), DescriptorError> {
    if len != w.len() {
        return Err(DescriptorError::Misaligned { expected: w.len(), got: len });
    }
    Ok(())
}

/// Plain histogram of oriented events.
///
/// Valid-direction events increment their quadrant's direction bin; each
/// block is then divided by its own accumulated count. Quadrants with no
/// valid-direction event stay all-zero.
pub fn hoe(
    w: &EventWindow,
    oriented: &[OrientedEvent],
    v: usize,
) -> Result<HoeDescriptor, DescriptorError> {
    check_aligned(w, oriented.len())?;
    let grid = QuadrantGrid::from_window(w)?;
    let mut values = vec![0.0; 4 * v];
    for o in oriented {
        if o.direction == 0 {
            continue;
        }
        let q = grid.quadrant_of(o.event.x, o.event.y);
        values[q * v + (o.direction as usize - 1)] += 1.0;
    }
    for j in 0..4 {
        let total: f64 = values[j * v..(j + 1) * v].iter().sum();
        if total > 0.0 {
            for bin in &mut values[j * v..(j + 1) * v] {
                *bin /= total;
            }
        }
    }
    Ok(HoeDescriptor { v, values })
}

/// Connectivity-weighted histogram of oriented events.
///
/// Valid-direction events add their pattern weight to the quadrant's
/// direction bin; each block is divided by the total number of events lying
/// in the quadrant (valid or not), so block sums never exceed 1.
pub fn hoe_elbp(
    w: &EventWindow,
    oriented: &[OrientedEvent],
    codes: &[PatternCode],
    v: usize,
) -> Result<HoeDescriptor, DescriptorError> {
    check_aligned(w, oriented.len())?;
    check_aligned(w, codes.len())?;
    let grid = QuadrantGrid::from_window(w)?;
    let mut values = vec![0.0; 4 * v];
    let mut totals = [0usize; 4];
    for (o, code) in oriented.iter().zip(codes) {
        let q = grid.quadrant_of(o.event.x, o.event.y);
        totals[q] += 1;
        if o.direction == 0 {
            continue;
        }
        values[q * v + (o.direction as usize - 1)] += code.weight();
    }
    for j in 0..4 {
        if totals[j] > 0 {
            for bin in &mut values[j * v..(j + 1) * v] {
                *bin /= totals[j] as f64;
            }
        }
    }
    Ok(HoeDescriptor { v, values })
}
