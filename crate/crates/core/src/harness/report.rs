use std::path::Path;

use serde::Serialize;

use super::{fit_rate, Evaluator, TheoryRate};
use crate::dyadic::Mode;
use crate::error::Result;
use crate::extended::Extended;
use crate::transport::Certificate;

/// One budget of a rate sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRecord {
    pub n: u64,
    /// Measured error of the deterministic cloud.
    pub error: f64,
    pub evaluator: Evaluator,
    /// Exact `e_N` in one dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    /// Proxy evaluator: `[measured − proxy bound, measured + proxy bound]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    /// Multiscale evaluator: the unevaluated part of `L_p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub n0: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub measure: String,
    pub d: usize,
    pub p: f64,
    pub q: Extended,
    pub mode: Mode,
    pub evaluator: Evaluator,
    pub records: Vec<RateRecord>,
    pub fitted_slope: Option<f64>,
    /// Fitted slope of `error / log(1+N)^a` in critical regimes.
    pub deflated_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_slope: Option<f64>,
    pub theory_slope: f64,
    pub regime: &'static str,
    pub critical: bool,
    pub log_exponent: f64,
    /// Smallest budgets excluded from the fits.
    pub fit_dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_size: Option<u64>,
    /// Certified bound on `W_p(μ, proxy)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_bound: Option<f64>,
    /// Records whose error falls below the exact oracle by more than `1e−9`.
    pub oracle_violations: usize,
}

pub(crate) struct ReportHeader {
    pub measure: String,
    pub d: usize,
    pub p: f64,
    pub q: Extended,
    pub mode: Mode,
    pub evaluator: Evaluator,
    pub theory: TheoryRate,
}

impl RateReport {
    pub(crate) fn assemble(
        h: ReportHeader,
        records: Vec<RateRecord>,
        proxy: Option<(u64, f64)>,
    ) -> Self {
        let points: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.error)).collect();
        let (fitted_slope, fit_dropped) = fit_rate(&points);
        let deflated_slope = h.theory.critical.then(|| {
            let a = h.theory.log_exponent;
            let pts: Vec<(f64, f64)> = points
                .iter()
                .map(|&(n, e)| (n, e / (1.0 + n).ln().powf(a)))
                .collect();
            fit_rate(&pts).0
        });
        let oracle_pts: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| r.oracle.map(|o| (r.n as f64, o)))
            .collect();
        let oracle_slope = if oracle_pts.is_empty() {
            None
        } else {
            fit_rate(&oracle_pts).0
        };
        let oracle_violations = records
            .iter()
            .filter(|r| r.oracle.is_some_and(|o| r.error < o - 1e-9))
            .count();
        RateReport {
            measure: h.measure,
            d: h.d,
            p: h.p,
            q: h.q,
            mode: h.mode,
            evaluator: h.evaluator,
            records,
            fitted_slope,
            deflated_slope: deflated_slope.flatten(),
            oracle_slope,
            theory_slope: h.theory.slope,
            regime: h.theory.regime.label(),
            critical: h.theory.critical,
            log_exponent: h.theory.log_exponent,
            fit_dropped,
            proxy_size: proxy.map(|p| p.0),
            proxy_bound: proxy.map(|p| p.1),
            oracle_violations,
        }
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "N",
            "error",
            "evaluator",
            "oracle",
            "window_lo",
            "window_hi",
            "truncation_bound",
            "n0",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                format!("{:e}", r.error),
                r.evaluator.label().to_string(),
                opt(r.oracle),
                opt(r.window.map(|w| w.0)),
                opt(r.window.map(|w| w.1)),
                opt(r.truncation_bound),
                r.n0.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plot-ready `log₂N log₂error` pairs.
    pub fn write_dat<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let pairs: Vec<(f64, f64)> = self.records.iter().map(|r| (r.n as f64, r.error)).collect();
        write_dat(path, "log2_N log2_error", &pairs)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("rate reports serialize")
    }
}

pub(crate) fn write_dat<P: AsRef<Path>>(path: P, header: &str, pairs: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("# {header}\n");
    for &(n, e) in pairs {
        if e > 0.0 {
            text.push_str(&format!("{} {}\n", n.log2(), e.log2()));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRecord {
    pub n: u64,
    pub deterministic: f64,
    /// `(mean over trials of W_p^p)^{1/p}`.
    pub random: f64,
    /// Standard error of the trial mean of `W_p^p`.
    pub random_p_cost_se: f64,
    /// Trials whose sampled cloud beat the deterministic one.
    pub trials_below_deterministic: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub measure: String,
    pub p: f64,
    pub trials: u32,
    pub seed: u64,
    pub evaluator: Evaluator,
    pub records: Vec<CompareRecord>,
    pub deterministic_slope: Option<f64>,
    pub random_slope: Option<f64>,
    pub fit_dropped: usize,
}

impl CompareReport {
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "N",
            "deterministic",
            "random",
            "random_p_cost_se",
            "trials_below_deterministic",
        ])?;
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                format!("{:e}", r.deterministic),
                format!("{:e}", r.random),
                format!("{:e}", r.random_p_cost_se),
                r.trials_below_deterministic.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("comparison reports serialize")
    }
}
