//! The constructive quantizer.
//!
//! A measure is cut into annuli `B_0 = Q_0`, `B_n = Q_n \ Q_{n−1}`. Each annulus
//! receives an integer budget `N_n`, which is pushed down a pruned dyadic tree
//! by largest-remainder splitting until every cell at depth `ℓ0` holds an
//! integer count within one unit of `N·μ(cell)`. Each leaf then emits its
//! count of copies of its center.

mod cloud;
mod quantize;
mod schedule;
mod split;
mod tree;

pub use cloud::PointCloud;
pub use quantize::{
    annulus_counts, quantize, quantize_normalized, AnnulusTrace, Mode, QuantizeParams, Quantized,
    Trace,
};
pub use schedule::{depth_schedule, truncation_index, truncation_index_weak, MAX_DEPTH, MIN_DEPTH};
pub use split::split_counts;
pub use tree::{build_tree, AllocationTree, TreeCell};

use crate::error::{Error, Result};
use crate::geometry::HalfOpenBox;

/// `F ∈ D_ℓ` scaled by `2^n` and intersected with `B_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicCell {
    pub n: u32,
    pub level: u32,
    pub idx: Vec<u64>,
    pub region: Vec<HalfOpenBox>,
}

/// `B_0 = Q_0`, `B_n = Q_n \ Q_{n−1}` as disjoint boxes.
pub fn annulus_region(dim: usize, n: u32) -> Vec<HalfOpenBox> {
    let outer = HalfOpenBox::cube(dim, n as i32);
    if n == 0 {
        vec![outer]
    } else {
        outer.subtract(&HalfOpenBox::cube(dim, n as i32 - 1))
    }
}

/// The box `2^n F` for `F ∈ D_ℓ` with lattice index `idx`.
pub(crate) fn scaled_cell_box(n: u32, level: u32, idx: &[u64]) -> HalfOpenBox {
    let scale = 2f64.powi(n as i32);
    let width = 2f64.powi(1 - level as i32);
    let lower: Vec<f64> = idx
        .iter()
        .map(|&i| scale * (-1.0 + i as f64 * width))
        .collect();
    let upper = lower.iter().map(|lo| lo + scale * width).collect();
    HalfOpenBox::from_parts(lower, upper)
}

pub(crate) fn region_of(n: u32, level: u32, idx: &[u64]) -> Vec<HalfOpenBox> {
    let b = scaled_cell_box(n, level, idx);
    if n == 0 {
        vec![b]
    } else {
        b.subtract(&HalfOpenBox::cube(idx.len(), n as i32 - 1))
    }
}

pub fn cell_region(n: u32, level: u32, idx: &[u64]) -> Result<DyadicCell> {
    if idx.is_empty() {
        return Err(Error::InvalidParameter(
            "cell index needs at least one axis".into(),
        ));
    }
    if level > 62 {
        return Err(Error::InvalidParameter(format!(
            "depth {level} exceeds the lattice range"
        )));
    }
    let side = 1u64 << level;
    if let Some(i) = idx.iter().find(|&&i| i >= side) {
        return Err(Error::InvalidParameter(format!(
            "cell index {i} outside [0, {side}) at depth {level}"
        )));
    }
    Ok(DyadicCell {
        n,
        level,
        idx: idx.to_vec(),
        region: region_of(n, level, idx),
    })
}

/// Center of the largest box in the region; ties go to the first in sweep order.
pub fn representative_point(cell: &DyadicCell) -> Result<Vec<f64>> {
    largest_center(&cell.region).ok_or_else(|| {
        Error::Contract(format!(
            "cell (n={}, ℓ={}, idx={:?}) has an empty region",
            cell.n, cell.level, cell.idx
        ))
    })
}

fn largest_center(region: &[HalfOpenBox]) -> Option<Vec<f64>> {
    let mut best: Option<&HalfOpenBox> = None;
    for b in region.iter().filter(|b| !b.is_empty()) {
        if best.is_none_or(|cur| b.volume() > cur.volume()) {
            best = Some(b);
        }
    }
    best.map(HalfOpenBox::center)
}
