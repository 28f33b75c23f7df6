use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{depth_schedule, truncation_index, truncation_index_weak};
use super::{largest_center, split_counts, tree::build_tree, AllocationTree, PointCloud};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::measures::Measure;

/// Which truncation rule fixes the support radius `2^{n0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Smallest `n0` whose exterior mass is at most `1/N`.
    Strong,
    /// Radius chosen from the weak `q`-moment bound alone.
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizeParams {
    pub mode: Mode,
    pub p: f64,
    pub q: Extended,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnulusTrace {
    pub n: u32,
    pub mass: f64,
    pub count: u64,
    pub depth: u32,
    pub leaves: usize,
}

/// Audit record of one quantizer run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub budget: u64,
    pub mode: Mode,
    pub n0: u32,
    /// Factor the measure was pushed forward by before allocation (1 if none).
    pub scale: f64,
    pub annuli: Vec<AnnulusTrace>,
}

#[derive(Clone, Debug)]
pub struct Quantized {
    pub cloud: PointCloud,
    pub trace: Trace,
    pub trees: Vec<AllocationTree>,
}

/// Integer budgets `N_0, …, N_{n0}` with `Σ N_n = N` and `|μ(B_n) − N_n/N| ≤ 1/N`.
///
/// Requires `μ(R^d \ Q_{n0}) ≤ 1/N`, so the annulus masses sum to within
/// `1/N` of one and the split applies to them directly.
pub fn annulus_counts(m: &Measure, budget: u64, n0: u32) -> Result<Vec<u64>> {
    let masses: Vec<f64> = (0..=n0).map(|n| m.annulus_mass(n)).collect();
    split_counts(&masses, budget, budget).map_err(|e| match e {
        Error::Contract(msg) => Error::Contract(format!(
            "annulus budgets for n0 = {n0}: tail mass {} exceeds 1/N ({msg})",
            m.tail_mass(n0)
        )),
        other => other,
    })
}

/// The multiscale quantizer. Expects the relevant moment to be at most one;
/// see [`quantize_normalized`] for the scaling wrapper.
pub fn quantize(m: &Measure, budget: u64, params: &QuantizeParams) -> Result<Quantized> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget N must be positive".into()));
    }
    if !(params.p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "p must be positive, got {}",
            params.p
        )));
    }
    let n0 = match (params.mode, params.q) {
        (Mode::Strong, _) => truncation_index(m, budget)?,
        (Mode::Weak, Extended::Finite(q)) => truncation_index_weak(q, budget)?,
        (Mode::Weak, Extended::Infinite) => {
            return Err(Error::InvalidParameter(
                "weak mode needs a finite moment order q".into(),
            ))
        }
    };
    let counts = annulus_counts(m, budget, n0)?;
    let d = m.dim();
    let nf = budget as f64;
    let per_annulus: Vec<(AnnulusTrace, AllocationTree)> = counts
        .par_iter()
        .enumerate()
        .map(|(n, &count)| {
            let n = n as u32;
            let mass = m.annulus_mass(n);
            let delta = mass + count as f64 / nf;
            let depth = depth_schedule(d, params.p, params.q, n, n0, budget, delta);
            let tree = build_tree(m, n, count, depth, budget)?;
            let leaves = tree.leaves().len();
            Ok((
                AnnulusTrace {
                    n,
                    mass,
                    count,
                    depth,
                    leaves,
                },
                tree,
            ))
        })
        .collect::<Result<_>>()?;

    let mut coords = Vec::with_capacity(budget as usize * d);
    for (_, tree) in &per_annulus {
        for leaf in tree.leaves() {
            let center = largest_center(&leaf.region).ok_or_else(|| {
                Error::Contract(format!(
                    "leaf {:?} of annulus {} has an empty region",
                    leaf.idx, tree.n
                ))
            })?;
            for _ in 0..leaf.count {
                coords.extend_from_slice(&center);
            }
        }
    }
    let (annuli, trees) = per_annulus.into_iter().unzip();
    Ok(Quantized {
        cloud: PointCloud::new(d, coords)?,
        trace: Trace {
            budget,
            mode: params.mode,
            n0,
            scale: 1.0,
            annuli,
        },
        trees,
    })
}

/// Rescales `μ` so its (weak, in weak mode) `q`-moment is at most one, runs
/// [`quantize`], and maps the points back.
pub fn quantize_normalized(m: &Measure, budget: u64, params: &QuantizeParams) -> Result<Quantized> {
    let Extended::Finite(q) = params.q else {
        return quantize(m, budget, params);
    };
    let moment = match params.mode {
        Mode::Strong => m.moment(q)?,
        Mode::Weak => m.weak_moment(q)?,
    };
    let moment = moment.finite().ok_or(Error::Divergent { order: q })?;
    if moment <= 1.0 {
        return quantize(m, budget, params);
    }
    let shrink = moment.powf(-1.0 / q);
    let mut out = quantize(&m.scaled(shrink), budget, params)?;
    out.cloud = out.cloud.scaled(1.0 / shrink);
    out.trace.scale = shrink;
    Ok(out)
}
