use serde::{Deserialize, Serialize};

use super::Measure;
use crate::error::{Error, Result};
use crate::geometry::HalfOpenBox;

/// Named family as written in a config file: `{"family": "...", "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum NamedSpec {
    Bernoulli(BernoulliParams),
    Uniform(UniformParams),
    Pareto(ParetoParams),
    Optimality(OptimalityParams),
    Dirac(DiracParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernoulliParams {
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformParams {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoParams {
    pub q: f64,
}

/// `n` may be left out when a sweep supplies it per budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalityParams {
    #[serde(default)]
    pub n: Option<u64>,
    pub gamma: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracParams {
    pub point: Vec<f64>,
}

impl NamedSpec {
    pub fn dim(&self) -> usize {
        match self {
            NamedSpec::Uniform(u) => u.lower.len(),
            NamedSpec::Dirac(d) => d.point.len(),
            _ => 1,
        }
    }
}

pub fn make_named(spec: &NamedSpec) -> Result<Measure> {
    match spec {
        NamedSpec::Bernoulli(b) => Measure::bernoulli(b.theta),
        NamedSpec::Uniform(u) => {
            if u.lower.len() != u.upper.len() {
                return Err(Error::DimensionMismatch {
                    expected: u.lower.len(),
                    found: u.upper.len(),
                });
            }
            Measure::uniform(HalfOpenBox::new(u.lower.clone(), u.upper.clone())?)
        }
        NamedSpec::Pareto(p) => Measure::pareto(p.q),
        NamedSpec::Optimality(o) => {
            let n = o.n.ok_or_else(|| {
                Error::InvalidParameter("optimality family needs its budget parameter n".into())
            })?;
            Measure::optimality(n, o.gamma, o.q)
        }
        NamedSpec::Dirac(d) => Measure::dirac(d.point.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_families() {
        let spec: NamedSpec =
            serde_json::from_str(r#"{"family": "pareto", "params": {"q": 4}}"#).unwrap();
        assert_eq!(spec, NamedSpec::Pareto(ParetoParams { q: 4.0 }));
        let bad = serde_json::from_str::<NamedSpec>(
            r#"{"family": "pareto", "params": {"q": 4, "s": 1}}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn bernoulli_is_two_atoms() {
        let m = make_named(&NamedSpec::Bernoulli(BernoulliParams { theta: 0.5 })).unwrap();
        let a = m.as_atoms().unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.point(0), &[0.0]);
        assert_eq!(a.weight(1), 0.5);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(make_named(&NamedSpec::Bernoulli(BernoulliParams { theta: 1.0 })).is_err());
        assert!(make_named(&NamedSpec::Pareto(ParetoParams { q: 0.0 })).is_err());
        let o = OptimalityParams {
            n: Some(4),
            gamma: 0.4,
            q: 2.0,
        };
        assert!(make_named(&NamedSpec::Optimality(o)).is_err());
    }
}
