use super::{Method, TransportResult};
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::quadrature::{golden_section, Quadrature};

type Steps = Vec<(f64, f64, f64)>;

fn quad() -> Quadrature {
    Quadrature {
        rel_tol: 1e-9,
        abs_tol: 1e-17,
        max_intervals: 20_000,
    }
}

fn check_1d(m: &Measure) -> Result<()> {
    if m.dim() == 1 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 1,
            found: m.dim(),
        })
    }
}

fn check_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "transport order p must be positive, got {p}"
        )))
    }
}

fn require_moment(m: &Measure, p: f64) -> Result<()> {
    if m.steps().is_some() || m.moment(p)?.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergent { order: p })
    }
}

/// `∫_a^b f(ω) dω`, seeding `extra` and the measure's own breakpoints.
fn integrate_on<F: Fn(f64) -> f64>(
    m: &Measure,
    f: F,
    a: f64,
    b: f64,
    extra: &[f64],
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut breaks = vec![a, b];
    breaks.extend(
        m.quantile_breaks()
            .into_iter()
            .chain(extra.iter().copied())
            .filter(|w| *w > a && *w < b),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(quad().integrate_with_breaks(f, &breaks)?.value)
}

/// `W_p` by the quantile coupling `(∫₀¹ |X_μ − X_ν|^p dω)^{1/p}`.
///
/// For `p < 1` the monotone coupling is only an upper bound, so two atomic
/// measures go to the exact flow solver instead.
///
/// Exact for two atomic measures. With one atomic side, the integral is split
/// at every step and at each point where the continuous rearrangement crosses
/// a step value.
pub fn w_1d(mu: &Measure, nu: &Measure, p: f64) -> Result<TransportResult> {
    check_1d(mu)?;
    check_1d(nu)?;
    check_order(p)?;
    require_moment(mu, p)?;
    require_moment(nu, p)?;
    // Concave costs can beat the monotone coupling; solve atomic pairs exactly.
    if p < 1.0 {
        if let (Some(a), Some(b)) = (mu.as_atoms(), nu.as_atoms()) {
            return super::w_discrete(a, b, p);
        }
    }
    let cost = match (mu.steps(), nu.steps()) {
        (Some(a), Some(b)) => steps_cost(&a, &b, p),
        (Some(s), None) => mixed_cost(nu, &s, p)?,
        (None, Some(s)) => mixed_cost(mu, &s, p)?,
        (None, None) => {
            let mut extra = nu.quantile_breaks();
            for m in [mu, nu] {
                if let Ok(z) = m.cdf(0.0) {
                    extra.push(z);
                }
            }
            let f = |w: f64| {
                (mu.quantile_unchecked(w) - nu.quantile_unchecked(w))
                    .abs()
                    .powf(p)
            };
            integrate_on(mu, f, 0.0, 1.0, &extra)?
        }
    };
    Ok(TransportResult::from_cost(cost, p, Method::Quantile1d))
}

fn steps_cost(a: &Steps, b: &Steps, p: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut lo = 0.0f64;
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += (hi - lo) * (a[i].2 - b[j].2).abs().powf(p);
        }
        lo = lo.max(hi);
        if a[i].1 <= hi {
            i += 1;
        }
        if b[j].1 <= hi {
            j += 1;
        }
    }
    total
}

fn mixed_cost(cont: &Measure, steps: &Steps, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for &(a, b, v) in steps {
        let crossings = [cont.cdf_left(v)?, cont.cdf(v)?];
        let f = |w: f64| (cont.quantile_unchecked(w) - v).abs().powf(p);
        total += integrate_on(cont, f, a, b, &crossings)?;
    }
    Ok(total)
}

/// Exact `e_N` in one dimension: the `i`-th point serves the quantile
/// interval `[(i−1)/N, i/N]` and sits at its optimal location.
pub fn en_1d_exact(m: &Measure, n: u64, p: f64) -> Result<f64> {
    check_1d(m)?;
    check_order(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("budget N must be positive".into()));
    }
    require_moment(m, p)?;
    let nf = n as f64;
    let total = match m.steps() {
        Some(steps) => {
            let mut total = 0.0;
            let mut k = 0;
            for i in 0..n {
                let (a, b) = (i as f64 / nf, (i + 1) as f64 / nf);
                while k < steps.len() && steps[k].1 <= a {
                    k += 1;
                }
                let mut pieces = Vec::new();
                let mut s = k;
                while s < steps.len() && steps[s].0 < b {
                    let w = steps[s].1.min(b) - steps[s].0.max(a);
                    // Slivers from rounding in the cumulative weights are dropped.
                    if w > 4.0 * f64::EPSILON {
                        pieces.push((w, steps[s].2));
                    }
                    s += 1;
                }
                total += atomic_interval_cost(&pieces, p);
            }
            total
        }
        None => {
            let mut total = 0.0;
            for i in 0..n {
                let (a, b) = (i as f64 / nf, (i + 1) as f64 / nf);
                total += continuous_interval_cost(m, a, b, p)?;
            }
            total
        }
    };
    Ok(total.max(0.0).powf(1.0 / p))
}

/// `min_x Σ wⱼ |vⱼ − x|^p` for sorted values `vⱼ`.
fn atomic_interval_cost(pieces: &[(f64, f64)], p: f64) -> f64 {
    if pieces.len() <= 1 {
        return 0.0;
    }
    let f = |x: f64| {
        pieces
            .iter()
            .map(|&(w, v)| w * (v - x).abs().powf(p))
            .sum::<f64>()
    };
    if p == 2.0 {
        let mass: f64 = pieces.iter().map(|pc| pc.0).sum();
        let mean = pieces.iter().map(|&(w, v)| w * v).sum::<f64>() / mass;
        return pieces
            .iter()
            .map(|&(w, v)| w * (v - mean) * (v - mean))
            .sum();
    }
    if p <= 1.0 {
        // Concave between support values (linear for p = 1): the minimum sits on one.
        return pieces
            .iter()
            .map(|&(_, v)| f(v))
            .fold(f64::INFINITY, f64::min);
    }
    let lo = pieces[0].1;
    let hi = pieces[pieces.len() - 1].1;
    golden_section(f, lo, hi, 1e-12).1
}

fn continuous_interval_cost(m: &Measure, a: f64, b: f64, p: f64) -> Result<f64> {
    let x = |w: f64| m.quantile_unchecked(w);
    let len = b - a;
    let lo = x(a + 1e-9 * len);
    let hi = x(b - 1e-9 * len);
    if hi <= lo {
        return Ok(0.0);
    }
    if p == 1.0 {
        let mid = 0.5 * (a + b);
        let med = x(mid);
        let below = integrate_on(m, |w| med - x(w), a, mid, &[])?;
        let above = integrate_on(m, |w| x(w) - med, mid, b, &[])?;
        return Ok(below.max(0.0) + above.max(0.0));
    }
    if p == 2.0 {
        let mean = integrate_on(m, x, a, b, &[])? / len;
        let extra = [m.cdf(mean)?];
        return integrate_on(m, |w| (x(w) - mean).powi(2), a, b, &extra);
    }
    let cost_at = |c: f64| -> f64 {
        let extra = [m.cdf(c).unwrap_or(a)];
        integrate_on(m, |w| (x(w) - c).abs().powf(p), a, b, &extra).unwrap_or(f64::INFINITY)
    };
    if p < 1.0 {
        // Not convex; scan then refine around the best grid point.
        let grid: Vec<f64> = (0..=64).map(|k| lo + (hi - lo) * k as f64 / 64.0).collect();
        let (best, _) =
            grid.iter()
                .map(|&c| (c, cost_at(c)))
                .fold(
                    (lo, f64::INFINITY),
                    |acc, v| if v.1 < acc.1 { v } else { acc },
                );
        let step = (hi - lo) / 64.0;
        return Ok(golden_section(cost_at, (best - step).max(lo), (best + step).min(hi), 1e-10).1);
    }
    let (_, value) = golden_section(cost_at, lo, hi, 1e-10);
    if !value.is_finite() {
        return Err(Error::Quadrature {
            partial: value,
            error: f64::INFINITY,
        });
    }
    Ok(value)
}
