//! Certified lower bounds on the one-dimensional quantization error from the
//! slope of the increasing rearrangement, and sweeps over measures that
//! attain the worst-case rate.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::log_log_slope;
use crate::measures::Measure;
use crate::transport::en_1d_exact;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const GRID: usize = 1000;
const DIFF_STEP: f64 = 1e-6;

/// A rearrangement `X` with its derivative `Ẋ`.
#[derive(Clone)]
pub struct RearrangementSpec {
    label: String,
    x: ScalarFn,
    xdot: ScalarFn,
    numeric_derivative: bool,
}

impl fmt::Debug for RearrangementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RearrangementSpec")
            .field("label", &self.label)
            .field("numeric_derivative", &self.numeric_derivative)
            .finish()
    }
}

fn central_difference(x: ScalarFn) -> ScalarFn {
    Arc::new(move |w: f64| {
        let lo = (w - DIFF_STEP).max(w * 0.5);
        let hi = (w + DIFF_STEP).min(0.5 * (w + 1.0));
        (x(hi) - x(lo)) / (hi - lo)
    })
}

impl RearrangementSpec {
    pub fn new<F, D>(label: impl Into<String>, x: F, xdot: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            x: Arc::new(x),
            xdot: Arc::new(xdot),
            numeric_derivative: false,
        }
    }

    /// `Ẋ` by central differences with step `1e−6`.
    pub fn numeric<F>(label: impl Into<String>, x: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let x: ScalarFn = Arc::new(x);
        Self {
            label: label.into(),
            xdot: central_difference(x.clone()),
            x,
            numeric_derivative: true,
        }
    }

    /// The measure's rearrangement, with a closed-form derivative when the
    /// family provides one.
    pub fn from_measure(m: &Measure) -> Result<Self> {
        m.quantile(0.5)?;
        let label = format!("{m:?}");
        let xm = m.clone();
        let x: ScalarFn = Arc::new(move |w| xm.quantile_unchecked(w));
        if m.quantile_derivative(0.5).is_some() {
            let dm = m.clone();
            let xdot: ScalarFn = Arc::new(move |w| dm.quantile_derivative(w).unwrap_or(f64::NAN));
            Ok(Self {
                label,
                x,
                xdot,
                numeric_derivative: false,
            })
        } else {
            Ok(Self {
                label,
                xdot: central_difference(x.clone()),
                x,
                numeric_derivative: true,
            })
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn x(&self, omega: f64) -> f64 {
        (self.x)(omega)
    }

    pub fn xdot(&self, omega: f64) -> f64 {
        (self.xdot)(omega)
    }

    pub fn has_numeric_derivative(&self) -> bool {
        self.numeric_derivative
    }

    /// Checks on a 10³-point grid of `(lo, hi]` that `X` is nondecreasing and
    /// `Ẋ` is nonnegative and nonincreasing.
    pub fn check_window(&self, lo: f64, hi: f64) -> Result<()> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Contract(format!(
                "window ({lo}, {hi}] is not inside [0, 1]"
            )));
        }
        // Numerical derivatives carry O(h²) noise relative to their size.
        let slack = if self.numeric_derivative { 1e-6 } else { 1e-12 };
        let mut prev_x = f64::NEG_INFINITY;
        let mut prev_d = f64::INFINITY;
        for t in 1..=GRID {
            let w = lo + (hi - lo) * t as f64 / GRID as f64;
            let w = if w >= 1.0 { 1.0 - f64::EPSILON } else { w };
            let (x, d) = (self.x(w), self.xdot(w));
            let fail = |what: &str| {
                Err(Error::Contract(format!(
                    "{}: {what} at ω = {w} in window ({lo}, {hi}]",
                    self.label
                )))
            };
            if x.is_nan() || x < prev_x {
                return fail("X decreases");
            }
            if d.is_nan() || d < 0.0 {
                return fail("Ẋ is negative");
            }
            if d > prev_d * (1.0 + slack) {
                return fail("Ẋ increases");
            }
            prev_x = x;
            prev_d = d;
        }
        Ok(())
    }
}

/// `((1/(2^{p+1}(p+1))) N^{−(p+1)} Σ_{i=j+1}^{k} Ẋ(i/N)^p)^{1/p}`, a lower bound
/// on the `N`-point error of `X_♯λ` when `Ẋ` decreases on `(j/N, k/N]`.
pub fn increasing_estimate(
    spec: &RearrangementSpec,
    j: u64,
    k: u64,
    n: u64,
    p: f64,
) -> Result<f64> {
    if !(j < k && k <= n) {
        return Err(Error::Contract(format!(
            "window needs 0 ≤ j < k ≤ N, got j = {j}, k = {k}, N = {n}"
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "order p must be positive, got {p}"
        )));
    }
    let nf = n as f64;
    spec.check_window(j as f64 / nf, k as f64 / nf)?;
    let sum: f64 = (j + 1..=k)
        .map(|i| {
            let w = if i == n {
                1.0 - f64::EPSILON
            } else {
                i as f64 / nf
            };
            spec.xdot(w).powf(p)
        })
        .sum();
    let constant = 1.0 / (2f64.powf(p + 1.0) * (p + 1.0));
    Ok((constant * nf.powf(-(p + 1.0)) * sum).powf(1.0 / p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SweepFamily {
    /// The family `X_N` rebuilt for every budget; window `(1/N, 1]`.
    Optimality { gamma: f64, q: f64 },
    /// One fixed Pareto law; window `(0, 1]`.
    Pareto { q: f64 },
}

impl SweepFamily {
    pub fn q(&self) -> f64 {
        match *self {
            SweepFamily::Optimality { q, .. } | SweepFamily::Pareto { q } => q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub bound: f64,
    pub oracle: f64,
    pub scaled_bound: f64,
    pub scaled_oracle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub family: SweepFamily,
    pub p: f64,
    /// `N^{1/p − 1/q}`.
    pub scaling_exponent: f64,
    pub rows: Vec<SweepRow>,
    pub min_scaled_oracle: f64,
    pub min_scaled_bound: f64,
    /// Fitted slope of `log(scaled oracle)` against `log N`.
    pub scaled_oracle_slope: Option<f64>,
    /// Rows where the bound exceeds the oracle by more than `1e−9`.
    pub violations: usize,
}

/// Lower bound and exact error for every `N`, each scaled by `N^{1/p − 1/q}`.
pub fn lower_bound_sweep(family: &SweepFamily, p: f64, n_list: &[u64]) -> Result<SweepReport> {
    let q = family.q();
    if !(p > 0.0 && p < q) {
        return Err(Error::Contract(format!(
            "rate lower bound needs 0 < p < q, got p = {p}, q = {q}"
        )));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidParameter("budgets N must be positive".into()));
    }
    let exponent = 1.0 / p - 1.0 / q;
    let rows: Vec<SweepRow> = n_list
        .par_iter()
        .map(|&n| -> Result<SweepRow> {
            let (m, j) = match *family {
                SweepFamily::Optimality { gamma, q } => {
                    (Measure::optimality(n, gamma, q)?, 1.min(n - 1))
                }
                SweepFamily::Pareto { q } => (Measure::pareto(q)?, 0),
            };
            let spec = RearrangementSpec::from_measure(&m)?;
            let bound = if j < n {
                increasing_estimate(&spec, j, n, n, p)?
            } else {
                0.0
            };
            let oracle = en_1d_exact(&m, n, p)?;
            let scale = (n as f64).powf(exponent);
            Ok(SweepRow {
                n,
                bound,
                oracle,
                scaled_bound: bound * scale,
                scaled_oracle: oracle * scale,
            })
        })
        .collect::<Result<_>>()?;
    let min_of = |f: fn(&SweepRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.scaled_oracle)).collect();
    Ok(SweepReport {
        family: *family,
        p,
        scaling_exponent: exponent,
        min_scaled_oracle: min_of(|r| r.scaled_oracle),
        min_scaled_bound: min_of(|r| r.scaled_bound),
        scaled_oracle_slope: log_log_slope(&points),
        violations: rows.iter().filter(|r| r.bound > r.oracle + 1e-9).count(),
        rows,
    })
}

impl SweepReport {
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["N", "bound", "oracle", "scaled_bound", "scaled_oracle"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:e}", r.bound),
                format!("{:e}", r.oracle),
                format!("{:e}", r.scaled_bound),
                format!("{:e}", r.scaled_oracle),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sweep reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfOpenBox;

    #[test]
    fn identity_rearrangement() {
        let spec = RearrangementSpec::new("identity", |w| w, |_| 1.0);
        for n in [1u64, 4, 64] {
            let v = increasing_estimate(&spec, 0, n, n, 1.0).unwrap();
            assert!((v - 1.0 / (8.0 * n as f64)).abs() < 1e-15);
        }
        let flat = RearrangementSpec::new("constant", |_| 2.0, |_| 0.0);
        assert_eq!(increasing_estimate(&flat, 0, 10, 10, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn window_preconditions() {
        let spec = RearrangementSpec::new("identity", |w| w, |_| 1.0);
        assert!(matches!(
            increasing_estimate(&spec, 3, 3, 8, 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            increasing_estimate(&spec, 0, 9, 8, 1.0),
            Err(Error::Contract(_))
        ));
        let convex = RearrangementSpec::new("square", |w| w * w, |w| 2.0 * w);
        assert!(matches!(
            increasing_estimate(&convex, 0, 8, 8, 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn numeric_derivative_agrees() {
        let exact = RearrangementSpec::new("sqrt", f64::sqrt, |w| 0.5 / w.sqrt());
        let numeric = RearrangementSpec::numeric("sqrt", f64::sqrt);
        for n in [8u64, 100] {
            let a = increasing_estimate(&exact, 1, n, n, 1.5).unwrap();
            let b = increasing_estimate(&numeric, 1, n, n, 1.5).unwrap();
            assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn optimality_regression_threshold() {
        let m = Measure::optimality(64, 0.75, 2.0).unwrap();
        let spec = RearrangementSpec::from_measure(&m).unwrap();
        assert!(!spec.has_numeric_derivative());
        let bound = increasing_estimate(&spec, 1, 64, 64, 1.0).unwrap();
        assert!(bound * 64f64.powf(0.5) >= 0.01, "{bound}");
        assert!(bound <= en_1d_exact(&m, 64, 1.0).unwrap() + 1e-9);
    }

    #[test]
    fn bound_below_oracle() {
        let unit = Measure::uniform(HalfOpenBox::new(vec![0.0], vec![1.0]).unwrap()).unwrap();
        let measures = [
            unit,
            Measure::pareto(3.0).unwrap(),
            Measure::optimality(32, 1.0, 2.0).unwrap(),
        ];
        for m in &measures {
            let spec = RearrangementSpec::from_measure(m).unwrap();
            for n in [2u64, 8, 32, 128] {
                for p in [0.5, 1.0, 2.0] {
                    // the window must stay right of the flat piece on [0, 1/32]
                    let j = if matches!(m, Measure::Optimality(_)) {
                        n.div_ceil(32)
                    } else {
                        0
                    };
                    let b = increasing_estimate(&spec, j, n, n, p).unwrap();
                    let e = en_1d_exact(m, n, p).unwrap();
                    assert!(b <= e + 1e-9, "{m:?} N={n} p={p}: {b} > {e}");
                }
            }
        }
    }

    #[test]
    fn sweep_rejects_p_at_least_q() {
        let fam = SweepFamily::Optimality {
            gamma: 0.75,
            q: 2.0,
        };
        assert!(matches!(
            lower_bound_sweep(&fam, 2.0, &[4, 8]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            lower_bound_sweep(&SweepFamily::Pareto { q: 1.0 }, 1.5, &[4]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sweep_rows_are_ordered_and_sound() {
        let fam = SweepFamily::Optimality {
            gamma: 0.75,
            q: 2.0,
        };
        let r = lower_bound_sweep(&fam, 1.0, &[4, 16, 64]).unwrap();
        assert_eq!(
            r.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![4, 16, 64]
        );
        assert_eq!(r.violations, 0);
        assert!(r.min_scaled_oracle > 0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        r.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("N,bound,oracle,scaled_bound,scaled_oracle\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
