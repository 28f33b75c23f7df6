//! Probability measures on `R^d` and the mass, moment and quantile queries
//! the allocation pipeline and the error oracles run against them.
//!
//! Every box is half-open, `∏(aᵢ, bᵢ]`. One-dimensional measures expose the
//! increasing rearrangement `X(ω) = inf{t : μ((−∞, t]) ≥ ω}` alongside the CDF.
//! Values are immutable; every query is a pure function.

mod atoms;
mod families;
mod named;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

pub use atoms::Atoms;
pub use families::{OptimalityFamily, Pareto};
pub use named::{make_named, NamedSpec};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::geometry::HalfOpenBox;
use crate::quadrature::{bisect_last_true, golden_section, Quadrature};
use families::{uniform_cdf, uniform_moment};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied increasing rearrangement `X : (0,1) → R`.
#[derive(Clone)]
pub struct QuantileFn {
    label: String,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
    breaks: Vec<f64>,
}

impl QuantileFn {
    /// Wraps `f`, spot-checking monotonicity on a 10³-point grid.
    pub fn new<F>(label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let v = f(i as f64 / 1000.0);
            if v.is_nan() || v < prev {
                return Err(Error::InvalidParameter(format!(
                    "quantile function {label:?} is not nondecreasing near ω = {}",
                    i as f64 / 1000.0
                )));
            }
            prev = v;
        }
        Ok(Self {
            label,
            value: Arc::new(f),
            derivative: None,
            breaks: Vec::new(),
        })
    }

    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Interior points in `(0,1)` where `X` has kinks or jumps.
    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| *b > 0.0 && *b < 1.0);
        breaks.sort_by(f64::total_cmp);
        self.breaks = breaks;
        self
    }

    pub fn eval(&self, omega: f64) -> f64 {
        (self.value)(omega)
    }
}

impl fmt::Debug for QuantileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileFn")
            .field("label", &self.label)
            .field("breaks", &self.breaks)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Measure {
    Atoms(Atoms),
    Quantile1D(QuantileFn),
    /// Independent one-dimensional factors, one per axis.
    Product(Vec<Measure>),
    Uniform(HalfOpenBox),
    Pareto(Pareto),
    Optimality(OptimalityFamily),
    /// Pushforward under `x ↦ factor · x`.
    Scaled {
        inner: Arc<Measure>,
        factor: f64,
    },
}

const OMEGA_TOL: f64 = 1e-12;

impl From<Atoms> for Measure {
    fn from(a: Atoms) -> Self {
        Measure::Atoms(a)
    }
}

impl Measure {
    pub fn bernoulli(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Bernoulli parameter must lie in (0,1), got {theta}"
            )));
        }
        Ok(Atoms::new(1, vec![vec![0.0], vec![1.0]], vec![1.0 - theta, theta])?.into())
    }

    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let d = point.len();
        Ok(Atoms::new(d, vec![point], vec![1.0])?.into())
    }

    pub fn uniform(bounds: HalfOpenBox) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter(
                "uniform measure needs a nonempty box".into(),
            ));
        }
        Ok(Measure::Uniform(bounds))
    }

    pub fn pareto(q: f64) -> Result<Self> {
        Ok(Measure::Pareto(Pareto::new(q)?))
    }

    pub fn optimality(n: u64, gamma: f64, q: f64) -> Result<Self> {
        Ok(Measure::Optimality(OptimalityFamily::new(n, gamma, q)?))
    }

    pub fn product(factors: Vec<Measure>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "product needs at least one factor".into(),
            ));
        }
        if let Some(f) = factors.iter().find(|f| f.dim() != 1) {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: f.dim(),
            });
        }
        Ok(Measure::Product(factors))
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Atoms(a) => a.dim(),
            Measure::Quantile1D(_) | Measure::Pareto(_) | Measure::Optimality(_) => 1,
            Measure::Product(f) => f.len(),
            Measure::Uniform(b) => b.dim(),
            Measure::Scaled { inner, .. } => inner.dim(),
        }
    }

    pub fn as_atoms(&self) -> Option<&Atoms> {
        match self {
            Measure::Atoms(a) => Some(a),
            _ => None,
        }
    }

    /// Pushforward under `x ↦ factor · x` (`factor > 0`).
    pub fn scaled(&self, factor: f64) -> Measure {
        assert!(
            factor > 0.0 && factor.is_finite(),
            "scale factor must be positive"
        );
        match self {
            Measure::Atoms(a) => Measure::Atoms(a.scaled(factor)),
            Measure::Uniform(b) => Measure::Uniform(b.scaled(factor)),
            Measure::Scaled { inner, factor: f } => {
                let total = f * factor;
                if total == 1.0 {
                    (**inner).clone()
                } else {
                    Measure::Scaled {
                        inner: inner.clone(),
                        factor: total,
                    }
                }
            }
            other => Measure::Scaled {
                inner: Arc::new(other.clone()),
                factor,
            },
        }
    }

    fn require_1d(&self, op: &str) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{op} requires a one-dimensional measure, found d = {}",
                self.dim()
            )))
        }
    }

    /// `μ(b)` for the half-open box `b`.
    pub fn box_mass(&self, b: &HalfOpenBox) -> f64 {
        debug_assert_eq!(b.dim(), self.dim());
        if b.is_empty() {
            return 0.0;
        }
        match self {
            Measure::Atoms(a) => a.box_mass(b),
            Measure::Uniform(u) => (0..u.dim())
                .map(|i| {
                    let (lo, hi) = u.axis(i);
                    let (a, c) = b.axis(i);
                    (c.min(hi) - a.max(lo)).max(0.0) / (hi - lo)
                })
                .product(),
            Measure::Product(factors) => factors
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let (a, c) = b.axis(i);
                    f.interval_mass(a, c)
                })
                .product(),
            Measure::Scaled { inner, factor } => inner.box_mass(&b.scaled(1.0 / factor)),
            _ => {
                let (a, c) = b.axis(0);
                self.interval_mass(a, c)
            }
        }
    }

    /// `μ((a, b])` for a one-dimensional measure.
    fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf_unchecked(b) - self.cdf_unchecked(a)).max(0.0)
    }

    /// `μ(R^d \ (−r, r]^d)`.
    pub fn outside_cube_mass(&self, r: f64) -> f64 {
        match self {
            Measure::Atoms(a) => a.outside_cube_mass(r),
            Measure::Scaled { inner, factor } => inner.outside_cube_mass(r / factor),
            Measure::Uniform(_) | Measure::Product(_) if self.dim() > 1 => {
                let log_inside: f64 = (0..self.dim())
                    .map(|i| (-self.axis_factor(i).outside_cube_mass(r)).ln_1p())
                    .sum();
                (-log_inside.exp_m1()).clamp(0.0, 1.0)
            }
            _ => {
                let left = self.cdf_unchecked(-r);
                let right = 1.0 - self.cdf_unchecked(r);
                (left + right.max(0.0)).clamp(0.0, 1.0)
            }
        }
    }

    /// `μ(R^d \ Q_n)`.
    pub fn tail_mass(&self, n: u32) -> f64 {
        self.outside_cube_mass(2f64.powi(n as i32))
    }

    /// `μ(B_n)` with `B_0 = Q_0` and `B_n = Q_n \ Q_{n−1}`.
    pub fn annulus_mass(&self, n: u32) -> f64 {
        crate::dyadic::annulus_region(self.dim(), n)
            .iter()
            .map(|b| self.box_mass(b))
            .sum()
    }

    /// One-dimensional marginal along `axis` for product-type measures.
    fn axis_factor(&self, axis: usize) -> Measure {
        match self {
            Measure::Uniform(u) => {
                let (lo, hi) = u.axis(axis);
                Measure::Uniform(HalfOpenBox::from_parts(vec![lo], vec![hi]))
            }
            Measure::Product(f) => f[axis].clone(),
            other => other.clone(),
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.require_1d("cdf")?;
        Ok(self.cdf_unchecked(t))
    }

    fn cdf_unchecked(&self, t: f64) -> f64 {
        match self {
            Measure::Atoms(a) => a.line().expect("1d atoms").cdf(t),
            Measure::Uniform(u) => {
                let (lo, hi) = u.axis(0);
                uniform_cdf(lo, hi, t)
            }
            Measure::Pareto(p) => p.cdf(t),
            Measure::Optimality(o) => o.cdf(t),
            Measure::Product(f) => f[0].cdf_unchecked(t),
            Measure::Scaled { inner, factor } => inner.cdf_unchecked(t / factor),
            Measure::Quantile1D(x) => invert(|w| x.eval(w) <= t),
        }
    }

    /// `μ((−∞, t))`.
    pub fn cdf_left(&self, t: f64) -> Result<f64> {
        self.require_1d("cdf_left")?;
        Ok(self.cdf_left_unchecked(t))
    }

    fn cdf_left_unchecked(&self, t: f64) -> f64 {
        match self {
            Measure::Atoms(a) => a.line().expect("1d atoms").cdf_left(t),
            Measure::Optimality(o) => o.cdf_left(t),
            Measure::Product(f) => f[0].cdf_left_unchecked(t),
            Measure::Scaled { inner, factor } => inner.cdf_left_unchecked(t / factor),
            Measure::Quantile1D(x) => invert(|w| x.eval(w) < t),
            _ => self.cdf_unchecked(t),
        }
    }

    /// The increasing rearrangement `X(ω)`, `ω ∈ (0,1)`.
    pub fn quantile(&self, omega: f64) -> Result<f64> {
        self.require_1d("quantile")?;
        Ok(self.quantile_unchecked(omega))
    }

    pub(crate) fn quantile_unchecked(&self, omega: f64) -> f64 {
        match self {
            Measure::Atoms(a) => a.line().expect("1d atoms").quantile(omega),
            Measure::Uniform(u) => {
                let (lo, hi) = u.axis(0);
                lo + omega * (hi - lo)
            }
            Measure::Pareto(p) => p.quantile(omega),
            Measure::Optimality(o) => o.quantile(omega),
            Measure::Product(f) => f[0].quantile_unchecked(omega),
            Measure::Scaled { inner, factor } => factor * inner.quantile_unchecked(omega),
            Measure::Quantile1D(x) => x.eval(omega),
        }
    }

    /// Closed-form `Ẋ(ω)` when available.
    pub fn quantile_derivative(&self, omega: f64) -> Option<f64> {
        match self {
            Measure::Uniform(u) if u.dim() == 1 => {
                let (lo, hi) = u.axis(0);
                Some(hi - lo)
            }
            Measure::Pareto(p) => Some(p.quantile_derivative(omega)),
            Measure::Optimality(o) => Some(o.quantile_derivative(omega)),
            Measure::Product(f) if f.len() == 1 => f[0].quantile_derivative(omega),
            Measure::Scaled { inner, factor } => {
                inner.quantile_derivative(omega).map(|v| v * factor)
            }
            Measure::Quantile1D(x) => x.derivative.as_ref().map(|d| d(omega)),
            _ => None,
        }
    }

    /// Interior `ω` where the rearrangement has a kink or jump.
    pub(crate) fn quantile_breaks(&self) -> Vec<f64> {
        match self {
            Measure::Optimality(o) if o.n > 1 => vec![1.0 / o.n as f64],
            Measure::Quantile1D(x) => x.breaks.clone(),
            Measure::Product(f) if f.len() == 1 => f[0].quantile_breaks(),
            Measure::Scaled { inner, .. } => inner.quantile_breaks(),
            _ => Vec::new(),
        }
    }

    /// Step form `(ω_start, ω_end, value)` of the rearrangement for atomic 1D measures.
    pub(crate) fn steps(&self) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            Measure::Atoms(a) => a.line().map(|l| l.steps()),
            Measure::Product(f) if f.len() == 1 => f[0].steps(),
            Measure::Scaled { inner, factor } => inner
                .steps()
                .map(|s| s.into_iter().map(|(a, b, v)| (a, b, v * factor)).collect()),
            _ => None,
        }
    }

    /// `M_q(μ) = ∫|x|^q dμ`.
    pub fn moment(&self, q: f64) -> Result<Extended> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moment order must be positive, got {q}"
            )));
        }
        match self {
            Measure::Atoms(a) => Ok(Extended::Finite(a.moment(q))),
            Measure::Pareto(p) => Ok(p.moment(q)),
            Measure::Optimality(o) => Ok(Extended::Finite(o.moment(q))),
            Measure::Uniform(u) if u.dim() == 1 => {
                let (lo, hi) = u.axis(0);
                Ok(Extended::Finite(uniform_moment(lo, hi, q)))
            }
            Measure::Scaled { inner, factor } => Ok(match inner.moment(q)? {
                Extended::Finite(v) => Extended::Finite(v * factor.powf(q)),
                Extended::Infinite => Extended::Infinite,
            }),
            Measure::Quantile1D(_) | Measure::Product(_) if self.dim() == 1 => {
                let f = |w: f64| self.quantile_unchecked(w).abs().powf(q);
                Ok(Extended::Finite(quantile_integral(self, f)?))
            }
            _ => {
                let factors: Vec<Measure> = (0..self.dim()).map(|i| self.axis_factor(i)).collect();
                Ok(Extended::Finite(nested_moment(&factors, 0.0, q)?))
            }
        }
    }

    /// `M_{q,w}(μ) = sup_{λ ≥ 0} λ^q μ(|x| ≥ λ)`.
    pub fn weak_moment(&self, q: f64) -> Result<Extended> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moment order must be positive, got {q}"
            )));
        }
        match self {
            Measure::Atoms(a) => Ok(Extended::Finite(a.weak_moment(q))),
            Measure::Pareto(p) => Ok(p.weak_moment(q)),
            Measure::Optimality(o) => Ok(Extended::Finite(o.weak_moment(q))),
            Measure::Scaled { inner, factor } => Ok(match inner.weak_moment(q)? {
                Extended::Finite(v) => Extended::Finite(v * factor.powf(q)),
                Extended::Infinite => Extended::Infinite,
            }),
            _ if self.dim() == 1 => Ok(self.weak_moment_scan(q)),
            _ => Err(Error::Unsupported(
                "weak moment of a non-atomic measure in d ≥ 2".into(),
            )),
        }
    }

    fn abs_tail_ge(&self, lambda: f64) -> f64 {
        let left = self.cdf_unchecked(-lambda);
        let right = 1.0 - self.cdf_left_unchecked(lambda);
        (left + right.max(0.0)).min(1.0)
    }

    fn weak_moment_scan(&self, q: f64) -> Extended {
        const STEPS_PER_OCTAVE: i32 = 16;
        const OCTAVES: i32 = 64;
        let g = |log_lambda: f64| {
            let lambda = log_lambda.exp2();
            lambda.powf(q) * self.abs_tail_ge(lambda)
        };
        let grid: Vec<f64> = (-OCTAVES * STEPS_PER_OCTAVE..=OCTAVES * STEPS_PER_OCTAVE)
            .map(|k| k as f64 / STEPS_PER_OCTAVE as f64)
            .collect();
        let (mut best_i, mut best) = (0, 0.0);
        for (i, &l) in grid.iter().enumerate() {
            let v = g(l);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        if best == 0.0 {
            return Extended::Finite(0.0);
        }
        let top = grid.len() - 1;
        if best_i + STEPS_PER_OCTAVE as usize > top {
            // A supremum at the scan edge is only a divergence if g is still growing there.
            let earlier = g(grid[top - 8 * STEPS_PER_OCTAVE as usize]);
            if g(grid[top]) > 1.01 * earlier {
                return Extended::Infinite;
            }
        }
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(grid.len() - 1)];
        let (_, neg) = golden_section(|l| -g(l), lo, hi, 1e-9);
        // The supremum may also be a left limit at an atom; keep the best lattice value too.
        Extended::Finite(best.max(-neg))
    }

    /// One draw from the measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Measure::Atoms(a) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, w) in a.iter() {
                    acc += w;
                    if u < acc {
                        return x.to_vec();
                    }
                }
                a.point(a.len() - 1).to_vec()
            }
            Measure::Uniform(u) => (0..u.dim())
                .map(|i| {
                    let (lo, hi) = u.axis(i);
                    hi - open_unit(rng) * (hi - lo)
                })
                .collect(),
            Measure::Product(f) => f.iter().map(|m| m.sample(rng)[0]).collect(),
            Measure::Scaled { inner, factor } => {
                inner.sample(rng).into_iter().map(|v| v * factor).collect()
            }
            _ => vec![self.quantile_unchecked(open_unit(rng))],
        }
    }
}

/// `sup{ω : pred(ω)}` for a predicate true on an initial segment of `(0,1)`.
fn invert<F: Fn(f64) -> bool>(pred: F) -> f64 {
    let top = 1.0 - f64::EPSILON;
    if pred(top) {
        return 1.0;
    }
    bisect_last_true(pred, 0.0, top, OMEGA_TOL)
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `∫₀¹ f(ω) dω` with the measure's natural breakpoints seeded.
pub(crate) fn quantile_integral<F: Fn(f64) -> f64>(m: &Measure, f: F) -> Result<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(m.quantile_breaks());
    if let Ok(zero) = m.cdf(0.0) {
        if zero > 0.0 && zero < 1.0 {
            breaks.push(zero);
        }
    }
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(Quadrature::with_rel_tol(1e-10)
        .integrate_with_breaks(f, &breaks)?
        .value)
}

fn nested_moment(factors: &[Measure], prefix_sq: f64, q: f64) -> Result<f64> {
    match factors.split_first() {
        None => Ok(prefix_sq.powf(0.5 * q)),
        Some((head, rest)) => {
            if let Some(steps) = head.steps() {
                let mut total = 0.0;
                for (a, b, v) in steps {
                    total += (b - a) * nested_moment(rest, prefix_sq + v * v, q)?;
                }
                return Ok(total);
            }
            let f = |w: f64| {
                let x = head.quantile_unchecked(w);
                nested_moment(rest, prefix_sq + x * x, q).unwrap_or(f64::NAN)
            };
            quantile_integral(head, f)
        }
    }
}
