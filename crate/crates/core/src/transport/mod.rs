//! Error evaluation: exact one-dimensional transport through quantile
//! functions, exact discrete transport by network simplex, the multiscale
//! functional with a truncation certificate, and the exact one-dimensional
//! quantization error.

mod discrete;
mod flow;
mod multiscale;
mod oned;

use serde::Serialize;

pub use discrete::{
    w_discrete, w_discrete_with_limit, write_plan_csv, PlanEntry, DENSE_PAIR_LIMIT,
};
pub use multiscale::{dyadic_transport_bound, multiscale_l, MultiscaleValue};
pub use oned::{en_1d_exact, w_1d};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quantile1d,
    MincostFlow,
    MultiscaleBound,
}

/// Optimality witness of a min-cost-flow solve, in the units of the real costs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    /// Largest deviation of the plan's marginals from the input weights.
    pub marginal_residual: f64,
    /// Largest `|c − π_i + π_j|` over arcs carrying flow.
    pub slackness_residual: f64,
    /// Largest negative reduced cost over all pairs (zero at optimality).
    pub dual_infeasibility: f64,
    /// Bound on the p-cost lost to integer cost rounding.
    pub cost_rounding_bound: f64,
    pub plan_arcs: usize,
    pub pivots: u64,
    /// Pricing rounds of column generation (1 for a full graph).
    pub rounds: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportResult {
    /// `(p-cost)^{1/p}`; for `p ≥ 1` this is `W_p`.
    pub value: f64,
    pub p: f64,
    pub method: Method,
    /// `∫ |x − y|^p dπ` of the optimal coupling.
    pub p_cost: f64,
    /// Set for `p < 1`, where the metric is `d_p = W_p^p` and `value` is not a metric.
    pub p_below_one: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl TransportResult {
    pub(crate) fn from_cost(p_cost: f64, p: f64, method: Method) -> Self {
        let p_cost = p_cost.max(0.0);
        Self {
            value: p_cost.powf(1.0 / p),
            p,
            method,
            p_cost,
            p_below_one: p < 1.0,
            truncation_bound: None,
            certificate: None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("transport results serialize")
    }
}
