use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::report::{write_dat, ReportHeader};
use super::{
    fit_rate, theory_rate, CompareRecord, CompareReport, Evaluator, ExperimentConfig,
    MeasureSource, RateRecord, RateReport,
};
use crate::dyadic::{quantize_normalized, Quantized, Trace};
use crate::error::{Error, Result};
use crate::lowerbounds::{lower_bound_sweep, SweepFamily, SweepReport};
use crate::measures::{Atoms, Measure, NamedSpec};
use crate::transport::{
    dyadic_transport_bound, en_1d_exact, multiscale_l, w_1d, w_discrete_with_limit,
};

/// Pair guard for the proxy evaluator, whose column generation keeps memory
/// linear in the support sizes.
pub const PROXY_PAIR_LIMIT: usize = 1 << 28;

/// Files written by a run, in write order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
}

impl Outputs {
    fn path(
        &mut self,
        cfg: &ExperimentConfig,
        default_prefix: &str,
        suffix: &str,
    ) -> Result<PathBuf> {
        let dir = cfg.out_dir();
        std::fs::create_dir_all(&dir)?;
        let p = dir.join(format!("{}{suffix}", cfg.prefix(default_prefix)));
        self.files.push(p.clone());
        Ok(p)
    }

    fn json(
        &mut self,
        cfg: &ExperimentConfig,
        prefix: &str,
        suffix: &str,
        v: &serde_json::Value,
    ) -> Result<()> {
        let p = self.path(cfg, prefix, suffix)?;
        std::fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
        Ok(())
    }
}

fn label(cfg: &ExperimentConfig) -> String {
    match &cfg.measure {
        MeasureSource::Named(spec) => serde_json::to_string(spec).expect("named specs serialize"),
        MeasureSource::Csv { csv } => format!("csv:{}", csv.display()),
    }
}

fn quantize_cfg(m: &Measure, n: u64, cfg: &ExperimentConfig) -> Result<Quantized> {
    quantize_normalized(m, n, &cfg.quantize_params())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizeRun {
    pub n: u64,
    pub points: usize,
    pub trace: Trace,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizeSummary {
    pub measure: String,
    pub runs: Vec<QuantizeRun>,
}

/// Writes `{prefix}_N{n}.csv` and `.json` clouds and a combined trace file.
pub fn run_quantize(cfg: &ExperimentConfig) -> Result<(QuantizeSummary, Outputs)> {
    let m = cfg.measure()?;
    let clouds: Vec<Quantized> = cfg
        .n_list
        .par_iter()
        .map(|&n| quantize_cfg(&m, n, cfg))
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut runs = Vec::new();
    for (&n, q) in cfg.n_list.iter().zip(&clouds) {
        q.cloud
            .write_csv(out.path(cfg, "quantize", &format!("_N{n}.csv"))?)?;
        let meta = json!({ "measure": label(cfg), "trace": q.trace });
        q.cloud
            .write_json(out.path(cfg, "quantize", &format!("_N{n}.json"))?, meta)?;
        runs.push(QuantizeRun {
            n,
            points: q.cloud.len(),
            trace: q.trace.clone(),
        });
    }
    let summary = QuantizeSummary {
        measure: label(cfg),
        runs,
    };
    out.json(
        cfg,
        "quantize",
        "_trace.json",
        &serde_json::to_value(&summary)?,
    )?;
    Ok((summary, out))
}

struct Proxy {
    atoms: Measure,
    /// Certified bound on `W_p(μ, proxy)^p`.
    p_cost_bound: f64,
}

/// Turns a distance `value` into `[lo, hi]` under a p-cost perturbation
/// `slack` (triangle inequality for `W_p` when `p ≥ 1`, for `W_p^p` otherwise).
fn window(value: f64, slack: f64, p: f64) -> (f64, f64) {
    if p >= 1.0 {
        let s = slack.powf(1.0 / p);
        ((value - s).max(0.0), value + s)
    } else {
        let c = value.powf(p);
        (
            (c - slack).max(0.0).powf(1.0 / p),
            (c + slack).powf(1.0 / p),
        )
    }
}

struct Evaluation<'a> {
    cfg: &'a ExperimentConfig,
    measure: &'a Measure,
    proxy: Option<Proxy>,
}

struct Measured {
    error: f64,
    p_cost: f64,
    window: Option<(f64, f64)>,
    truncation_bound: Option<f64>,
    certificate: Option<crate::transport::Certificate>,
}

impl<'a> Evaluation<'a> {
    fn new(cfg: &'a ExperimentConfig, measure: &'a Measure) -> Result<Self> {
        let proxy = if cfg.evaluator() == Evaluator::FlowVsProxy {
            let pairs = (cfg.max_n() as u128) * (cfg.proxy_size() as u128);
            if pairs > PROXY_PAIR_LIMIT as u128 {
                return Err(Error::ResourceGuard(format!(
                    "max N × proxy_size = {pairs} exceeds the proxy pair limit {PROXY_PAIR_LIMIT}"
                )));
            }
            let q = quantize_cfg(measure, cfg.proxy_size(), cfg)?;
            let atoms: Measure = q.cloud.to_atoms()?.into();
            let p_cost_bound = dyadic_transport_bound(measure, &atoms, cfg.p)?;
            Some(Proxy {
                atoms,
                p_cost_bound,
            })
        } else {
            None
        };
        Ok(Self {
            cfg,
            measure,
            proxy,
        })
    }

    fn proxy_bound(&self) -> Option<f64> {
        self.proxy.as_ref().map(|p| {
            if self.cfg.p >= 1.0 {
                p.p_cost_bound.powf(1.0 / self.cfg.p)
            } else {
                p.p_cost_bound
            }
        })
    }

    fn measure_cloud(&self, cloud: &Atoms, n0: u32) -> Result<Measured> {
        let p = self.cfg.p;
        match self.cfg.evaluator() {
            Evaluator::Exact1d => {
                let r = w_1d(self.measure, &cloud.clone().into(), p)?;
                Ok(Measured {
                    error: r.value,
                    p_cost: r.p_cost,
                    window: None,
                    truncation_bound: None,
                    certificate: None,
                })
            }
            Evaluator::FlowVsProxy => {
                let proxy = self.proxy.as_ref().expect("proxy built for this evaluator");
                let target = proxy.atoms.as_atoms().expect("proxy is atomic");
                let (r, _) = w_discrete_with_limit(cloud, target, p, PROXY_PAIR_LIMIT)?;
                Ok(Measured {
                    error: r.value,
                    p_cost: r.p_cost,
                    window: Some(window(r.value, proxy.p_cost_bound, p)),
                    truncation_bound: None,
                    certificate: r.certificate,
                })
            }
            Evaluator::MultiscaleBound => {
                let spec = self.cfg.multiscale;
                let n_max = spec.n_max.unwrap_or(n0);
                let v = multiscale_l(self.measure, &cloud.clone().into(), p, n_max, spec.l_max)?;
                let total = v.value + v.truncation_bound;
                Ok(Measured {
                    error: total.powf(1.0 / p),
                    p_cost: total,
                    window: None,
                    truncation_bound: Some(v.truncation_bound),
                    certificate: None,
                })
            }
        }
    }

    fn record(&self, n: u64) -> Result<RateRecord> {
        let q = quantize_cfg(self.measure, n, self.cfg)?;
        let measured = self.measure_cloud(&q.cloud.to_atoms()?, q.trace.n0)?;
        let oracle = if self.cfg.d == 1 {
            Some(en_1d_exact(self.measure, n, self.cfg.p)?)
        } else {
            None
        };
        Ok(RateRecord {
            n,
            error: measured.error,
            evaluator: self.cfg.evaluator(),
            oracle,
            window: measured.window,
            truncation_bound: measured.truncation_bound,
            certificate: measured.certificate,
            n0: q.trace.n0,
        })
    }

    fn records(&self) -> Result<Vec<RateRecord>> {
        self.cfg
            .n_list
            .par_iter()
            .map(|&n| self.record(n))
            .collect()
    }
}

/// Quantizes and evaluates every budget; writes the records.
pub fn run_eval(cfg: &ExperimentConfig) -> Result<(Vec<RateRecord>, Outputs)> {
    let m = cfg.measure()?;
    let eval = Evaluation::new(cfg, &m)?;
    let records = eval.records()?;
    let report = assemble(cfg, &eval, records.clone());
    let mut out = Outputs::default();
    report.write_csv(out.path(cfg, "eval", "_records.csv")?)?;
    out.json(
        cfg,
        "eval",
        "_records.json",
        &serde_json::to_value(&records)?,
    )?;
    Ok((records, out))
}

fn assemble(cfg: &ExperimentConfig, eval: &Evaluation, records: Vec<RateRecord>) -> RateReport {
    let header = ReportHeader {
        measure: label(cfg),
        d: cfg.d,
        p: cfg.p,
        q: cfg.q,
        mode: cfg.mode,
        evaluator: cfg.evaluator(),
        theory: theory_rate(cfg.d, cfg.p, cfg.q, cfg.mode),
    };
    let proxy = eval.proxy_bound().map(|b| (cfg.proxy_size(), b));
    RateReport::assemble(header, records, proxy)
}

/// Rate sweep: records CSV, JSON summary with fitted and theory slopes, and a
/// `log₂N log₂error` data file.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(RateReport, Outputs)> {
    let m = cfg.measure()?;
    let eval = Evaluation::new(cfg, &m)?;
    let records = eval.records()?;
    let report = assemble(cfg, &eval, records);
    let mut out = Outputs::default();
    report.write_csv(out.path(cfg, "sweep", "_records.csv")?)?;
    out.json(cfg, "sweep", "_summary.json", &report.to_json())?;
    report.write_dat(out.path(cfg, "sweep", ".dat")?)?;
    Ok((report, out))
}

/// SplitMix64 finalizer, to give every budget its own generator family.
fn mix(seed: u64, n: u64) -> u64 {
    let mut z = seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One generator per `(seed, N, trial)`, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, n: u64, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, n));
    rng.set_stream(trial as u64);
    rng
}

/// Deterministic error against the i.i.d. estimate `(E W_p^p)^{1/p}`.
pub fn run_compare_random(cfg: &ExperimentConfig) -> Result<(CompareReport, Outputs)> {
    let m = cfg.measure()?;
    let eval = Evaluation::new(cfg, &m)?;
    let p = cfg.p;
    let records: Vec<CompareRecord> = cfg
        .n_list
        .iter()
        .map(|&n| -> Result<CompareRecord> {
            let q = quantize_cfg(&m, n, cfg)?;
            let det = eval.measure_cloud(&q.cloud.to_atoms()?, q.trace.n0)?;
            let costs: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, n, t);
                    let pts: Vec<Vec<f64>> = (0..n).map(|_| m.sample(&mut rng)).collect();
                    let sample = Atoms::uniform(cfg.d, pts)?;
                    Ok(eval.measure_cloud(&sample, q.trace.n0)?.p_cost)
                })
                .collect::<Result<_>>()?;
            let k = costs.len() as f64;
            let mean = costs.iter().sum::<f64>() / k;
            let var = if costs.len() > 1 {
                costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            Ok(CompareRecord {
                n,
                deterministic: det.error,
                random: mean.powf(1.0 / p),
                random_p_cost_se: (var / k).sqrt(),
                trials_below_deterministic: costs.iter().filter(|&&c| c < det.p_cost).count(),
            })
        })
        .collect::<Result<_>>()?;
    let det_pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.n as f64, r.deterministic))
        .collect();
    let rnd_pts: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.random)).collect();
    let (deterministic_slope, fit_dropped) = fit_rate(&det_pts);
    let report = CompareReport {
        measure: label(cfg),
        p,
        trials: cfg.trials,
        seed: cfg.seed,
        evaluator: cfg.evaluator(),
        records,
        deterministic_slope,
        random_slope: fit_rate(&rnd_pts).0,
        fit_dropped,
    };
    let mut out = Outputs::default();
    report.write_csv(out.path(cfg, "compare", "_records.csv")?)?;
    out.json(cfg, "compare", "_summary.json", &report.to_json())?;
    write_dat(
        out.path(cfg, "compare", "_deterministic.dat")?,
        "log2_N log2_error",
        &det_pts,
    )?;
    write_dat(
        out.path(cfg, "compare", "_random.dat")?,
        "log2_N log2_error",
        &rnd_pts,
    )?;
    Ok((report, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub n: u64,
    pub oracle: f64,
}

/// Exact `e_N` over the budget list (one-dimensional measures only).
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<(Vec<OracleRow>, Outputs)> {
    if cfg.d != 1 {
        return Err(Error::Config(format!(
            "field `d`: the exact oracle needs d = 1, got d = {}",
            cfg.d
        )));
    }
    let m = cfg.measure()?;
    let rows: Vec<OracleRow> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            Ok(OracleRow {
                n,
                oracle: en_1d_exact(&m, n, cfg.p)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut w = csv::Writer::from_path(out.path(cfg, "oracle", ".csv")?)?;
    w.write_record(["N", "oracle"])?;
    for r in &rows {
        w.write_record([r.n.to_string(), format!("{:e}", r.oracle)])?;
    }
    w.flush()?;
    out.json(
        cfg,
        "oracle",
        ".json",
        &json!({ "measure": label(cfg), "p": cfg.p, "rows": rows }),
    )?;
    Ok((rows, out))
}

/// Lower-bound sweep for an optimality family (its `n` is taken from the
/// budget list) or a Pareto law.
pub fn run_lower_bound(cfg: &ExperimentConfig) -> Result<(SweepReport, Outputs)> {
    let family = match &cfg.measure {
        MeasureSource::Named(NamedSpec::Optimality(o)) => SweepFamily::Optimality {
            gamma: o.gamma,
            q: o.q,
        },
        MeasureSource::Named(NamedSpec::Pareto(p)) => SweepFamily::Pareto { q: p.q },
        _ => {
            return Err(Error::Config(
                "field `measure`: lower-bound sweeps need the optimality or pareto family".into(),
            ))
        }
    };
    let report = lower_bound_sweep(&family, cfg.p, &cfg.n_list)?;
    let mut out = Outputs::default();
    report.write_csv(out.path(cfg, "lower_bound", ".csv")?)?;
    out.json(cfg, "lower_bound", "_summary.json", &report.to_json())?;
    Ok((report, out))
}
