//! Closed-form one-dimensional families.

use crate::error::{Error, Result};
use crate::extended::Extended;

/// `μ(dx) = q|x|^{−q−1} 1_{(−∞,−1)}(x) dx`, with rearrangement `X(ω) = −ω^{−1/q}`.
///
/// Weak `q`-moment equal to 1 while the strong `q`-moment diverges, the
/// extremal example for the weak-moment rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pareto {
    pub q: f64,
}

impl Pareto {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Pareto index must be positive, got {q}"
            )));
        }
        Ok(Self { q })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= -1.0 {
            (-t).powf(-self.q)
        } else {
            1.0
        }
    }

    pub fn quantile(&self, omega: f64) -> f64 {
        -omega.powf(-1.0 / self.q)
    }

    pub fn quantile_derivative(&self, omega: f64) -> f64 {
        omega.powf(-1.0 / self.q - 1.0) / self.q
    }

    pub fn moment(&self, order: f64) -> Extended {
        if order < self.q {
            Extended::Finite(self.q / (self.q - order))
        } else {
            Extended::Infinite
        }
    }

    pub fn weak_moment(&self, order: f64) -> Extended {
        if order <= self.q {
            Extended::Finite(1.0)
        } else {
            Extended::Infinite
        }
    }
}

/// The uniform-optimality family `X_N`: constant `−c_N N^γ` on `[0, 1/N]`,
/// `−c_N ω^{−γ}` on `(1/N, 1]`, normalized so that `‖X_N‖_q = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalityFamily {
    pub n: u64,
    pub gamma: f64,
    pub q: f64,
    pub scale: f64,
}

impl OptimalityFamily {
    pub fn new(n: u64, gamma: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "optimality family needs N ≥ 1".into(),
            ));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "moment order must be positive and finite, got {q}"
            )));
        }
        if !(gamma * q > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need γ > 1/q, got γ = {gamma}, q = {q}"
            )));
        }
        let eps = gamma * q - 1.0;
        let nf = n as f64;
        let decay = nf.powf(-eps);
        let scale_q = decay / (1.0 + (1.0 - decay) / eps);
        Ok(Self {
            n,
            gamma,
            q,
            scale: scale_q.powf(1.0 / q),
        })
    }

    fn inv_n(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Location of the atom of mass `1/N`.
    pub fn atom(&self) -> f64 {
        -self.scale * (self.n as f64).powf(self.gamma)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < self.atom() {
            0.0
        } else if t < -self.scale {
            (self.scale / -t).powf(1.0 / self.gamma).max(self.inv_n())
        } else {
            1.0
        }
    }

    pub fn cdf_left(&self, t: f64) -> f64 {
        if t <= self.atom() {
            0.0
        } else {
            self.cdf(t)
        }
    }

    pub fn quantile(&self, omega: f64) -> f64 {
        if omega <= self.inv_n() {
            self.atom()
        } else {
            -self.scale * omega.powf(-self.gamma)
        }
    }

    pub fn quantile_derivative(&self, omega: f64) -> f64 {
        if omega <= self.inv_n() {
            0.0
        } else {
            self.scale * self.gamma * omega.powf(-self.gamma - 1.0)
        }
    }

    /// `∫₀¹ |X_N|^r dω` in closed form.
    pub fn moment(&self, order: f64) -> f64 {
        let nf = self.n as f64;
        let s = self.gamma * order;
        let body = if (s - 1.0).abs() < 1e-14 {
            nf.ln()
        } else {
            (1.0 - nf.powf(s - 1.0)) / (1.0 - s)
        };
        self.scale.powf(order) * (nf.powf(s - 1.0) + body)
    }

    /// `sup_λ λ^r μ(|x| ≥ λ)`; the supremum sits at `λ = c` or at the atom.
    pub fn weak_moment(&self, order: f64) -> f64 {
        let nf = self.n as f64;
        self.scale.powf(order) * nf.powf(self.gamma * order - 1.0).max(1.0)
    }
}

/// Uniform law on the interval `(lo, hi]`.
pub(crate) fn uniform_cdf(lo: f64, hi: f64, t: f64) -> f64 {
    ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// `∫ |x|^q` against the uniform law on `(lo, hi]`.
pub(crate) fn uniform_moment(lo: f64, hi: f64, q: f64) -> f64 {
    let prim = |x: f64| x.abs().powf(q + 1.0) / (q + 1.0);
    let total = if lo >= 0.0 {
        prim(hi) - prim(lo)
    } else if hi <= 0.0 {
        prim(lo) - prim(hi)
    } else {
        prim(lo) + prim(hi)
    };
    total / (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;

    #[test]
    fn pareto_rearrangement_matches_cdf() {
        let p = Pareto::new(4.0).unwrap();
        assert_eq!(p.quantile(1.0 / 16.0), -2.0);
        assert!((p.cdf(-2.0) - 1.0 / 16.0).abs() < 1e-16);
        assert_eq!(p.weak_moment(4.0), Extended::Finite(1.0));
        assert_eq!(p.moment(4.0), Extended::Infinite);
    }

    #[test]
    fn optimality_family_has_unit_norm() {
        for n in [1u64, 2, 16, 256, 4096] {
            let fam = OptimalityFamily::new(n, 0.75, 2.0).unwrap();
            assert!(
                (fam.moment(2.0) - 1.0).abs() < 1e-12,
                "closed form at N={n}"
            );
            let quad = Quadrature::with_rel_tol(1e-11)
                .integrate_with_breaks(|w| fam.quantile(w).powi(2), &[0.0, 1.0 / n as f64, 1.0])
                .unwrap();
            assert!(
                (quad.value - 1.0).abs() < 1e-8,
                "quadrature at N={n}: {}",
                quad.value
            );
        }
    }

    #[test]
    fn optimality_family_cdf_inverts_quantile() {
        let fam = OptimalityFamily::new(64, 0.75, 2.0).unwrap();
        for &w in &[0.02, 0.1, 0.5, 0.9] {
            let x = fam.quantile(w);
            assert!((fam.cdf(x) - w).abs() < 1e-12);
        }
        assert!((fam.cdf(fam.atom()) - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(fam.cdf_left(fam.atom()), 0.0);
    }

    #[test]
    fn uniform_moment_closed_form() {
        assert!((uniform_moment(0.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((uniform_moment(-1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
    }
}
