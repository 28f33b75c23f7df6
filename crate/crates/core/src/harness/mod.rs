//! Experiment harness: configs, rate sweeps with slope fitting, the random
//! sampling comparison, and report files.

mod config;
mod report;
mod run;

use serde::Serialize;

use crate::dyadic::Mode;
use crate::extended::Extended;

pub use config::{Evaluator, ExperimentConfig, MeasureSource, MultiscaleSpec, SCHEMA_VERSION};
pub use report::{CompareRecord, CompareReport, RateRecord, RateReport};
pub use run::{
    run_compare_random, run_eval, run_lower_bound, run_oracle, run_quantize, run_sweep, OracleRow,
    Outputs, QuantizeSummary, PROXY_PAIR_LIMIT,
};

/// Least-squares slope of `ln y` against `ln x`, skipping points with
/// nonpositive or non-finite values. `None` with fewer than two usable points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|v| v.0).sum::<f64>() / k;
    let my = logs.iter().map(|v| v.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|v| (v.0 - mx) * (v.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Number of smallest budgets left out of rate fits as pre-asymptotic.
pub const FIT_DROP: usize = 2;

/// Slope over all but the [`FIT_DROP`] smallest `N` (all points when fewer
/// than four remain). Returns the slope and the number of points dropped.
pub fn fit_rate(points: &[(f64, f64)]) -> (Option<f64>, usize) {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let drop = if sorted.len() >= FIT_DROP + 4 {
        FIT_DROP
    } else {
        0
    };
    (log_log_slope(&sorted[drop..]), drop)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "d<p")]
    BelowP,
    #[serde(rename = "d=p")]
    AtP,
    #[serde(rename = "p<d<d*")]
    Between,
    #[serde(rename = "d=d*")]
    AtCritical,
    #[serde(rename = "d>d*")]
    AboveCritical,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::BelowP => "d<p",
            Regime::AtP => "d=p",
            Regime::Between => "p<d<d*",
            Regime::AtCritical => "d=d*",
            Regime::AboveCritical => "d>d*",
        }
    }
}

/// Theoretical rate exponent and its regime for `(d, p, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryRate {
    /// `−min(1/d, 1/p − 1/q)`: the rate is `N^{−1/d} ∨ N^{−1/p+1/q}`.
    pub slope: f64,
    pub regime: Regime,
    /// `d* = pq/(q − p)`; equals `p` when `q = ∞`.
    pub critical_dimension: f64,
    /// A `log(1+N)` factor appears in the upper bound.
    pub critical: bool,
    /// Exponent of `log(1+N)` in the critical bound.
    pub log_exponent: f64,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn theory_rate(d: usize, p: f64, q: Extended, mode: Mode) -> TheoryRate {
    let df = d as f64;
    let inv_q = q.reciprocal();
    let d_star = match q {
        Extended::Finite(q) => p * q / (q - p),
        Extended::Infinite => p,
    };
    let regime = if close(df, p) {
        Regime::AtP
    } else if df < p {
        Regime::BelowP
    } else if close(df, d_star) {
        Regime::AtCritical
    } else if df < d_star {
        Regime::Between
    } else {
        Regime::AboveCritical
    };
    let critical = close(df, d_star);
    let log_exponent = match mode {
        Mode::Strong => 1.0 / df,
        Mode::Weak => 1.0 / p,
    };
    TheoryRate {
        slope: -(1.0 / df).min(1.0 / p - inv_q),
        regime,
        critical_dimension: d_star,
        critical,
        log_exponent: if critical { log_exponent } else { 0.0 },
    }
}
