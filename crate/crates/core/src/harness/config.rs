use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dyadic::{Mode, QuantizeParams};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::measures::{make_named, Atoms, Measure, NamedSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// A named family, or `{"csv": path}` for an atom file with columns
/// `x0, …, x{d−1}, weight`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MeasureSource {
    Named(NamedSpec),
    Csv { csv: PathBuf },
}

impl<'de> Deserialize<'de> for MeasureSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        if v.get("csv").is_some() {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Csv {
                csv: PathBuf,
            }
            let c: Csv = serde_json::from_value(v).map_err(D::Error::custom)?;
            return Ok(MeasureSource::Csv { csv: c.csv });
        }
        serde_json::from_value(v)
            .map(MeasureSource::Named)
            .map_err(D::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    /// `w_1d` against the analytic measure.
    #[serde(rename = "exact-1d")]
    Exact1d,
    /// `w_discrete` against a fine quantization of the measure.
    FlowVsProxy,
    /// `(L_p value + truncation bound)^{1/p}`.
    MultiscaleBound,
}

impl Evaluator {
    pub fn label(self) -> &'static str {
        match self {
            Evaluator::Exact1d => "exact-1d",
            Evaluator::FlowVsProxy => "flow-vs-proxy",
            Evaluator::MultiscaleBound => "multiscale-bound",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiscaleSpec {
    /// Largest annulus index; defaults to the quantizer's `n0`.
    #[serde(default)]
    pub n_max: Option<u32>,
    #[serde(default = "default_l_max")]
    pub l_max: u32,
}

fn default_l_max() -> u32 {
    12
}

impl Default for MultiscaleSpec {
    fn default() -> Self {
        Self {
            n_max: None,
            l_max: default_l_max(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File name stem; defaults to the subcommand name.
    #[serde(default)]
    pub prefix: Option<String>,
}

fn default_q() -> Extended {
    Extended::Infinite
}

fn default_trials() -> u32 {
    1
}

fn default_mode() -> Mode {
    Mode::Strong
}

/// A versioned JSON experiment description. Unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub measure: MeasureSource,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: Extended,
    pub d: usize,
    #[serde(alias = "N_list")]
    pub n_list: Vec<u64>,
    /// Defaults to `exact-1d` for `d = 1` and `flow-vs-proxy` otherwise.
    #[serde(default)]
    pub evaluator: Option<Evaluator>,
    /// Defaults to `64 · max(n_list)`.
    #[serde(default)]
    pub proxy_size: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub multiscale: MultiscaleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative CSV paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.base_dir = base_dir.map(Path::to_path_buf);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text, path.parent()).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.schema != SCHEMA_VERSION {
            return bad(
                "schema",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            );
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return bad("p", format!("must be positive and finite, got {}", self.p));
        }
        if let Extended::Finite(q) = self.q {
            if !(q > self.p) {
                return bad("q", format!("must exceed p = {}, got {q}", self.p));
            }
        } else if self.mode == Mode::Weak {
            return bad("q", "weak mode needs a finite moment order".into());
        }
        if self.d == 0 {
            return bad("d", "dimension must be at least 1".into());
        }
        if self.n_list.is_empty() {
            return bad("n_list", "must not be empty".into());
        }
        if self.n_list[0] == 0 {
            return bad("n_list", "budgets must be positive".into());
        }
        if let Some(w) = self.n_list.windows(2).find(|w| w[1] <= w[0]) {
            return bad(
                "n_list",
                format!("must be strictly increasing, found {} then {}", w[0], w[1]),
            );
        }
        if let MeasureSource::Named(spec) = &self.measure {
            if spec.dim() != self.d {
                return bad(
                    "d",
                    format!(
                        "measure has dimension {}, config says {}",
                        spec.dim(),
                        self.d
                    ),
                );
            }
        }
        match self.evaluator() {
            Evaluator::Exact1d if self.d != 1 => {
                return bad(
                    "evaluator",
                    format!("exact-1d requires d = 1, got d = {}", self.d),
                );
            }
            Evaluator::FlowVsProxy => {
                let need = 64 * self.max_n();
                if self.proxy_size() < need {
                    return bad(
                        "proxy_size",
                        format!("must be at least 64 · max(n_list) = {need}"),
                    );
                }
            }
            _ => {}
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn evaluator(&self) -> Evaluator {
        self.evaluator.unwrap_or(if self.d == 1 {
            Evaluator::Exact1d
        } else {
            Evaluator::FlowVsProxy
        })
    }

    pub fn max_n(&self) -> u64 {
        self.n_list.last().copied().unwrap_or(1)
    }

    pub fn proxy_size(&self) -> u64 {
        self.proxy_size.unwrap_or(64 * self.max_n())
    }

    pub fn quantize_params(&self) -> QuantizeParams {
        QuantizeParams {
            mode: self.mode,
            p: self.p,
            q: self.q,
        }
    }

    /// Builds the measure; optimality families without `n` are rejected here
    /// because only the lower-bound sweep supplies the budget.
    pub fn measure(&self) -> Result<Measure> {
        let m = match &self.measure {
            MeasureSource::Named(spec) => make_named(spec).map_err(|e| match e {
                Error::InvalidParameter(msg) => Error::Config(format!("field `measure`: {msg}")),
                other => other,
            })?,
            MeasureSource::Csv { csv } => {
                let path = match &self.base_dir {
                    Some(base) if csv.is_relative() => base.join(csv),
                    _ => csv.clone(),
                };
                Atoms::read_csv(&path)
                    .map_err(|e| {
                        Error::Config(format!("field `measure`: {}: {e}", path.display()))
                    })?
                    .into()
            }
        };
        if m.dim() != self.d {
            return Err(Error::Config(format!(
                "field `d`: measure has dimension {}, config says {}",
                m.dim(),
                self.d
            )));
        }
        Ok(m)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn prefix<'a>(&'a self, default: &'a str) -> &'a str {
        self.output.prefix.as_deref().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &str = r#"{
        "schema": 1,
        "measure": {"family": "uniform", "params": {"lower": [0.0], "upper": [1.0]}},
        "p": 1, "q": "inf", "d": 1,
        "n_list": [8, 16, 32]
    }"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::from_json_str(UNIFORM, None).unwrap();
        assert_eq!(c.evaluator(), Evaluator::Exact1d);
        assert_eq!(c.mode, Mode::Strong);
        assert_eq!(c.proxy_size(), 64 * 32);
        assert_eq!(c.trials, 1);
        assert_eq!(c.measure().unwrap().dim(), 1);
    }

    #[test]
    fn spec_field_alias() {
        let text = UNIFORM.replace("n_list", "N_list");
        assert_eq!(
            ExperimentConfig::from_json_str(&text, None).unwrap().n_list,
            vec![8, 16, 32]
        );
    }

    fn config_error(text: &str) -> String {
        match ExperimentConfig::from_json_str(text, None) {
            Err(Error::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let msg = config_error(&UNIFORM.replace("\"d\": 1", "\"d\": 1, \"colour\": 3"));
        assert!(msg.contains("colour") && msg.contains("line"), "{msg}");
        let msg =
            config_error(&UNIFORM.replace("\"upper\": [1.0]", "\"upper\": [1.0], \"extra\": 0"));
        assert!(msg.contains("extra"), "{msg}");
    }

    #[test]
    fn validation_names_the_field() {
        assert!(config_error(&UNIFORM.replace("[8, 16, 32]", "[8, 8]")).contains("n_list"));
        assert!(
            config_error(&UNIFORM.replace("\"schema\": 1", "\"schema\": 2")).contains("schema")
        );
        assert!(config_error(&UNIFORM.replace("\"q\": \"inf\"", "\"q\": 1")).contains("`q`"));
        assert!(config_error(&UNIFORM.replace("\"d\": 1", "\"d\": 2")).contains("`d`"));
        let msg = config_error(&UNIFORM.replace(
            "\"d\": 1",
            "\"d\": 1, \"evaluator\": \"flow-vs-proxy\", \"proxy_size\": 100",
        ));
        assert!(msg.contains("proxy_size"), "{msg}");
    }

    #[test]
    fn exact_1d_needs_one_dimension() {
        let text = r#"{"schema": 1, "d": 2, "p": 1, "n_list": [4],
            "measure": {"family": "uniform", "params": {"lower": [-1, -1], "upper": [1, 1]}},
            "evaluator": "exact-1d"}"#;
        assert!(config_error(text).contains("evaluator"));
    }

    #[test]
    fn csv_measure_resolves_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("atoms.csv"),
            "x0,weight\n0.0,0.5\n2.0,0.5\n",
        )
        .unwrap();
        let text =
            r#"{"schema": 1, "d": 1, "p": 1, "n_list": [2], "measure": {"csv": "atoms.csv"}}"#;
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, text).unwrap();
        let c = ExperimentConfig::from_path(&cfg_path).unwrap();
        assert_eq!(c.measure().unwrap().as_atoms().unwrap().len(), 2);
        let bad = r#"{"schema": 1, "d": 1, "p": 1, "n_list": [2], "measure": {"csv": "atoms.csv", "x": 1}}"#;
        assert!(matches!(
            ExperimentConfig::from_json_str(bad, None),
            Err(Error::Config(_))
        ));
    }
}
