use crate::error::{Error, Result};

/// Slack absorbing float noise in `N·aᵢ` near integer thresholds.
const SLACK: f64 = 1e-9;

/// Integer split of `k` units over parts with masses `a`, each within one
/// unit of `N·aᵢ`.
///
/// Starts from `⌊N·aᵢ⌋` and hands the remaining units out by largest
/// fractional part (ties to the lower index). If the floors overshoot `k`,
/// units are taken back from the smallest fractional parts.
pub fn split_counts(a: &[f64], k: u64, n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("budget N must be positive".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot split over zero parts".into(),
        ));
    }
    if let Some(v) = a.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "part mass {v} is not a nonnegative real"
        )));
    }
    let nf = n as f64;
    let sum: f64 = a.iter().sum();
    let target = k as f64 / nf;
    if (sum - target).abs() > 1.0 / nf + 1e-12 {
        return Err(Error::Contract(format!(
            "split precondition |Σa − k/N| ≤ 1/N fails: Σa = {sum}, k/N = {target} (k = {k}, N = {n})"
        )));
    }

    let scaled: Vec<f64> = a.iter().map(|v| v * nf).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|t| t.floor() as u64).collect();
    let frac: Vec<f64> = scaled
        .iter()
        .zip(&counts)
        .map(|(t, c)| t - *c as f64)
        .collect();
    let floor_sum: u64 = counts.iter().sum();

    let mut order: Vec<usize> = (0..a.len()).collect();
    if floor_sum < k {
        order.sort_by(|&i, &j| frac[j].total_cmp(&frac[i]).then(i.cmp(&j)));
        let mut remaining = k - floor_sum;
        // More than one pass only happens through float noise at the precondition edge.
        while remaining > 0 {
            for &i in &order {
                if remaining == 0 {
                    break;
                }
                counts[i] += 1;
                remaining -= 1;
            }
        }
    } else if floor_sum > k {
        order.sort_by(|&i, &j| frac[i].total_cmp(&frac[j]).then(i.cmp(&j)));
        let mut excess = floor_sum - k;
        while excess > 0 {
            let before = excess;
            for &i in &order {
                if excess == 0 {
                    break;
                }
                if counts[i] > 0 {
                    counts[i] -= 1;
                    excess -= 1;
                }
            }
            if excess == before {
                unreachable!("positive floor sum always has a removable unit");
            }
        }
    }

    for (i, (&t, &c)) in scaled.iter().zip(&counts).enumerate() {
        if (t - c as f64).abs() > 1.0 + SLACK {
            return Err(Error::Contract(format!(
                "split of part {i} drifts beyond one unit: N·a = {t}, count = {c} (Σa = {sum}, k/N = {target})"
            )));
        }
    }
    Ok(counts)
}
