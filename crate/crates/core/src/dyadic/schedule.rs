use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::measures::Measure;

/// Scan cap for the strong truncation index.
pub const TRUNCATION_CAP: u32 = 64;
pub const MIN_DEPTH: u32 = 2;
/// Beyond this depth cell widths approach the double-precision floor.
pub const MAX_DEPTH: u32 = 40;

/// Smallest `n ≥ 0` with `μ(R^d \ Q_n) ≤ 1/N`.
pub fn truncation_index(m: &Measure, n: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::InvalidParameter("budget N must be positive".into()));
    }
    let limit = 1.0 / n as f64;
    (0..=TRUNCATION_CAP)
        .find(|&k| m.tail_mass(k) <= limit)
        .ok_or(Error::HeavyTail {
            cap: TRUNCATION_CAP,
        })
}

/// Smallest `n0 ≥ 1` with `2^{q(n0−1)} ≥ N`.
///
/// When `q` is a ratio `a/b` with small denominator the comparison is done
/// exactly as `2^{a·j} ≥ N^b` in big integers; otherwise in floating point.
pub fn truncation_index_weak(q: f64, n: u64) -> Result<u32> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "weak truncation needs finite q > 0, got {q}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("budget N must be positive".into()));
    }
    let log_n = (n as f64).log2();
    let reaches: Box<dyn Fn(u64) -> bool> = match small_rational(q) {
        Some((a, b)) => {
            let rhs = BigUint::from(n).pow(b as u32);
            Box::new(move |j| {
                let bits = a * j;
                // 2^bits ≥ rhs, compared via bit length first.
                let needed = rhs.bits();
                if bits + 1 > needed {
                    true
                } else if bits + 1 < needed {
                    false
                } else {
                    (BigUint::from(1u8) << bits) >= rhs
                }
            })
        }
        None => Box::new(move |j| q * j as f64 >= log_n),
    };
    let guess = (log_n / q).ceil().max(0.0) as u64;
    let mut j = guess.saturating_sub(2);
    while j > 0 && reaches(j - 1) {
        j -= 1;
    }
    while !reaches(j) {
        j += 1;
    }
    u32::try_from(j + 1)
        .map_err(|_| Error::InvalidParameter(format!("truncation index overflows for q = {q}")))
}

/// `q = a/b` exactly (to 1e−12 relative) with `b ≤ 1024`, by continued fractions.
fn small_rational(q: f64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = q;
    for _ in 0..40 {
        let a = x.floor();
        if a > 1e12 {
            return None;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 1024 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - q).abs() <= 1e-12 * q {
            return Some((h1, k1));
        }
        let frac = x - a as f64;
        if frac <= 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Per-annulus resolution `ℓ0`, by the `(d, p, q)` regime, clamped to `[2, 40]`.
///
/// `delta` is `μ(B_n) + N_n/N`.
pub fn depth_schedule(
    d: usize,
    p: f64,
    q: Extended,
    n: u32,
    n0: u32,
    budget: u64,
    delta: f64,
) -> u32 {
    let df = d as f64;
    let nf = budget as f64;
    let raw: f64 = if (df - p).abs() < 1e-12 {
        match q {
            Extended::Finite(q) => ((q / p) * n0.saturating_sub(n) as f64).floor(),
            Extended::Infinite => (nf.log2() / p).floor(),
        }
    } else if df < p {
        ((nf * delta).max(1.0).log2() / p).ceil()
    } else {
        let target = nf * delta;
        if target <= 1.0 {
            0.0
        } else {
            let mut l = (target.log2() / df).ceil().max(0.0);
            while (df * l).exp2() < target {
                l += 1.0;
            }
            while l > 0.0 && (df * (l - 1.0)).exp2() >= target {
                l -= 1.0;
            }
            l
        }
    };
    if raw.is_nan() {
        return MIN_DEPTH;
    }
    raw.clamp(MIN_DEPTH as f64, MAX_DEPTH as f64) as u32
}
